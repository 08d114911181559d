// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Community detection used to stand in for the maximization over all
//! assignments: Walktrap agglomeration with a dendrogram cut, a
//! label-switching hill climb on the homophily statistic, and the
//! exhaustive search for tiny graphs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pair_count, CommunityAssignment, Graph};
use crate::homophily::{decompose, max_homophily_exhaustive, t_statistic};

pub const DEFAULT_WALK_STEPS: usize = 4;
pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Rule used to pick one level of the Walktrap dendrogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutCriterion {
    #[default]
    Modularity,
    TStatistic,
}

/// One agglomeration step. Communities `0..n` are the single nodes; the
/// community created by merge `k` has id `n + k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeDendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl MergeDendrogram {
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Exactly `n - 1` merges. Components that never touch are joined at
    /// the end with infinite cost.
    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Partition after the first `level` merges (level 0 is all singletons).
    pub fn partition_at(&self, level: usize) -> CommunityAssignment {
        let n = self.n;
        let mut parent: Vec<usize> = (0..n + self.merges.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (k, m) in self.merges.iter().take(level).enumerate() {
            let id = n + k;
            let (ra, rb) = (find(&mut parent, m.a), find(&mut parent, m.b));
            parent[ra] = id;
            parent[rb] = id;
        }
        let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        CommunityAssignment::from_labels(&roots)
    }
}

#[derive(Debug, Clone)]
pub struct WalktrapResult {
    pub assignment: CommunityAssignment,
    pub dendrogram: MergeDendrogram,
    /// Number of merges applied to reach `assignment`.
    pub level: usize,
    /// Cut score per level; NaN where the level is not eligible.
    pub scores: Vec<f64>,
    /// The unrestricted best level was the single community and was
    /// replaced by the best level with at least two communities.
    pub k1_override: bool,
}

#[derive(Debug, Clone, Copy)]
struct Link {
    delta: f64,
    edges: u64,
}

/// Statistic computed from counts: `intra` intra-community edges out of
/// `m`, with `m_in` intra-community pairs out of `pairs`.
fn t_from_counts(intra: u64, m: u64, m_in: u64, pairs: u64) -> f64 {
    let p_in = intra as f64 / m_in as f64;
    let p_out = (m - intra) as f64 / (pairs - m_in) as f64;
    (p_in - p_out) / (m as f64 / pairs as f64)
}

/// Rows of the `steps`-step transition matrix of the lazy walk (each node
/// carries a self-loop), scaled column-wise by `1/sqrt(degree)` so that the
/// Walktrap distance is plain squared Euclidean distance.
fn walk_profiles(g: &Graph, steps: usize) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let inv_deg: Vec<f64> = (0..n).map(|i| 1.0 / (g.degree(i) + 1) as f64).collect();
    // Column-major: column k holds the mass at k for every source.
    let mut current = vec![0.0; n * n];
    for k in 0..n {
        for &j in std::iter::once(&k).chain(g.neighbors(k)) {
            current[k * n + j] = inv_deg[j];
        }
    }
    let mut next = vec![0.0; n * n];
    for _ in 1..steps {
        for (k, column) in next.chunks_exact_mut(n).enumerate() {
            column.fill(0.0);
            for &j in std::iter::once(&k).chain(g.neighbors(k)) {
                let w = inv_deg[j];
                for (out, x) in column.iter_mut().zip(&current[j * n..(j + 1) * n]) {
                    *out += w * x;
                }
            }
        }
        std::mem::swap(&mut current, &mut next);
    }
    let scale: Vec<f64> = inv_deg.iter().map(|d| d.sqrt()).collect();
    (0..n)
        .map(|i| (0..n).map(|k| current[k * n + i] * scale[k]).collect())
        .collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Pons–Latapy random-walk agglomerative clustering.
///
/// Adjacent communities are merged greedily by the smallest increase in
/// the walk-distance variance; distances for communities adjacent to both
/// parents use the Lance–Williams update. Ties are broken by the smaller
/// community-id pair, so the result is a deterministic function of the
/// graph. Isolated nodes stay singletons until the final joins.
pub fn walktrap(g: &Graph, steps: usize, cut: CutCriterion) -> Result<WalktrapResult> {
    if steps < 1 {
        return Err(Error::Domain("walk length must be at least 1".into()));
    }
    let n = g.node_count();
    let m = g.edge_count() as u64;
    if n == 0 || m == 0 {
        return Err(Error::Degenerate(
            "walktrap needs a graph with edges".into(),
        ));
    }
    let pairs = pair_count(n);
    let two_m = 2.0 * m as f64;
    let inv_n = 1.0 / n as f64;

    let mut profiles: Vec<Option<Vec<f64>>> =
        walk_profiles(g, steps).into_iter().map(Some).collect();
    profiles.resize(2 * n - 1, None);
    let mut size = vec![1usize; 2 * n - 1];
    let mut degree_sum: Vec<f64> = (0..n).map(|i| g.degree(i) as f64).collect();
    degree_sum.resize(2 * n - 1, 0.0);
    let mut alive = vec![true; n];
    alive.resize(2 * n - 1, false);
    // Adjacent communities, sorted by id. Merged ids exceed every live id,
    // so appending keeps the order.
    let mut links: Vec<Vec<(usize, Link)>> = vec![Vec::new(); 2 * n - 1];
    let mut heap = BinaryHeap::new();

    for &(i, j) in g.edges() {
        let p = profiles[i].as_deref().expect("profile");
        let q = profiles[j].as_deref().expect("profile");
        let delta = 0.5 * inv_n * squared_distance(p, q);
        links[i].push((j, Link { delta, edges: 1 }));
        links[j].push((i, Link { delta, edges: 1 }));
        heap.push(Reverse((OrderedFloat(delta), i, j)));
    }
    for l in &mut links[..n] {
        l.sort_unstable_by_key(|&(x, _)| x);
    }

    // Level statistics: modularity, intra edges, intra pairs.
    let mut modularity_now: f64 = (0..n).map(|i| -(degree_sum[i] / two_m).powi(2)).sum();
    let mut intra_edges = 0u64;
    let mut intra_pairs = 0u64;
    let mut level_stats = Vec::with_capacity(n);
    level_stats.push((modularity_now, intra_edges, intra_pairs));

    let mut merges = Vec::with_capacity(n - 1);
    let mut next_id = n;

    while let Some(Reverse((OrderedFloat(cost), a, b))) = heap.pop() {
        if !alive[a] || !alive[b] {
            continue;
        }
        let c = next_id;
        next_id += 1;
        let (sa, sb) = (size[a] as f64, size[b] as f64);
        let between = links[a]
            .binary_search_by_key(&b, |&(x, _)| x)
            .map(|pos| links[a][pos].1.edges)
            .expect("merged communities are adjacent");
        let sc = sa + sb;

        let pa = profiles[a].take().expect("live profile");
        let pb = profiles[b].take().expect("live profile");
        let pc: Vec<f64> = pa
            .iter()
            .zip(&pb)
            .map(|(x, y)| (sa * x + sb * y) / sc)
            .collect();
        drop((pa, pb));

        let from_a = std::mem::take(&mut links[a]);
        let from_b = std::mem::take(&mut links[b]);
        let exact = |x: usize, edges: u64, profiles: &[Option<Vec<f64>>]| {
            let sx = size[x] as f64;
            Link {
                delta: inv_n * sc * sx / (sc + sx)
                    * squared_distance(&pc, profiles[x].as_deref().expect("live profile")),
                edges,
            }
        };
        let mut merged: Vec<(usize, Link)> = Vec::with_capacity(from_a.len() + from_b.len());
        let (mut ia, mut ib) = (0, 0);
        while ia < from_a.len() || ib < from_b.len() {
            let xa = from_a.get(ia).map_or(usize::MAX, |e| e.0);
            let xb = from_b.get(ib).map_or(usize::MAX, |e| e.0);
            let x = xa.min(xb);
            let la = (xa == x).then(|| from_a[ia].1);
            let lb = (xb == x).then(|| from_b[ib].1);
            ia += usize::from(la.is_some());
            ib += usize::from(lb.is_some());
            if x == a || x == b {
                continue;
            }
            let link = match (la, lb) {
                (Some(la), Some(lb)) => {
                    let sx = size[x] as f64;
                    Link {
                        delta: ((sa + sx) * la.delta + (sb + sx) * lb.delta - sx * cost)
                            / (sa + sb + sx),
                        edges: la.edges + lb.edges,
                    }
                }
                (Some(l), None) | (None, Some(l)) => exact(x, l.edges, &profiles),
                (None, None) => unreachable!(),
            };
            merged.push((x, link));
        }
        drop((from_a, from_b));
        for &(x, link) in &merged {
            let neighbor = &mut links[x];
            for gone in [b, a] {
                if let Ok(pos) = neighbor.binary_search_by_key(&gone, |&(y, _)| y) {
                    neighbor.remove(pos);
                }
            }
            neighbor.push((c, link));
            heap.push(Reverse((OrderedFloat(link.delta), x, c)));
        }

        links[c] = merged;
        profiles[c] = Some(pc);
        size[c] = size[a] + size[b];
        degree_sum[c] = degree_sum[a] + degree_sum[b];
        alive[a] = false;
        alive[b] = false;
        alive[c] = true;

        modularity_now +=
            between as f64 / m as f64 - 2.0 * degree_sum[a] * degree_sum[b] / (two_m * two_m);
        intra_edges += between;
        intra_pairs += (size[a] * size[b]) as u64;
        level_stats.push((modularity_now, intra_edges, intra_pairs));
        merges.push(Merge { a, b, cost });
    }

    // Disconnected pieces: join the two smallest live ids until one remains.
    loop {
        let mut live = (0..next_id).filter(|&x| alive[x]);
        let (Some(a), Some(b)) = (live.next(), live.next()) else {
            break;
        };
        let c = next_id;
        next_id += 1;
        size[c] = size[a] + size[b];
        degree_sum[c] = degree_sum[a] + degree_sum[b];
        alive[a] = false;
        alive[b] = false;
        alive[c] = true;
        modularity_now -= 2.0 * degree_sum[a] * degree_sum[b] / (two_m * two_m);
        intra_pairs += (size[a] * size[b]) as u64;
        level_stats.push((modularity_now, intra_edges, intra_pairs));
        merges.push(Merge {
            a,
            b,
            cost: f64::INFINITY,
        });
    }

    let dendrogram = MergeDendrogram { n, merges };
    let score = |&(q, e_in, m_in): &(f64, u64, u64)| match cut {
        CutCriterion::Modularity => q,
        CutCriterion::TStatistic => {
            if m_in == 0 || m_in == pairs {
                f64::NAN
            } else {
                t_from_counts(e_in, m, m_in, pairs)
            }
        }
    };
    let last = n - 1;
    let mut scores = Vec::with_capacity(n);
    let mut best: Option<(usize, f64)> = None;
    let mut best_any: Option<(usize, f64)> = None;
    for (level, stats) in level_stats.iter().enumerate() {
        let s = score(stats);
        if !s.is_nan() && best_any.is_none_or(|(_, b)| s > b) {
            best_any = Some((level, s));
        }
        let eligible = level < last && stats.2 > 0;
        if eligible && best.is_none_or(|(_, b)| s > b) {
            best = Some((level, s));
        }
        scores.push(if eligible { s } else { f64::NAN });
    }
    let (level, _) = best.ok_or_else(|| {
        Error::Assignment(
            "no dendrogram level has two communities and an intra-community pair".into(),
        )
    })?;
    let k1_override = best_any.is_some_and(|(l, _)| l == last);
    Ok(WalktrapResult {
        assignment: dendrogram.partition_at(level),
        dendrogram,
        level,
        scores,
        k1_override,
    })
}

/// Newman–Girvan modularity.
pub fn modularity(g: &Graph, c: &CommunityAssignment) -> Result<f64> {
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::Degenerate(
            "modularity is undefined without edges".into(),
        ));
    }
    if c.len() != g.node_count() {
        return Err(Error::Validation(
            "assignment length does not match the graph".into(),
        ));
    }
    let k = c.k();
    let mut internal = vec![0usize; k];
    let mut degree = vec![0usize; k];
    for &(i, j) in g.edges() {
        let (a, b) = (c.label(i), c.label(j));
        degree[a] += 1;
        degree[b] += 1;
        if a == b {
            internal[a] += 1;
        }
    }
    let m = m as f64;
    Ok(internal
        .iter()
        .zip(&degree)
        .map(|(&e, &d)| e as f64 / m - (d as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// Hill climb on the homophily statistic by single-node label moves.
///
/// Each sweep visits the nodes in a random order and moves a node to the
/// existing community that raises the statistic the most, keeping at least
/// two communities and at least one intra-community pair. Stops after a
/// sweep with no move or after `max_sweeps` sweeps.
pub fn t_local_search<R: Rng + ?Sized>(
    g: &Graph,
    init: &CommunityAssignment,
    max_sweeps: usize,
    rng: &mut R,
) -> Result<CommunityAssignment> {
    let start = decompose(init, g)?;
    let n = g.node_count();
    let m = g.edge_count() as u64;
    let pairs = pair_count(n);
    let k = init.k();
    let mut labels = init.labels().to_vec();
    let mut sizes = init.sizes().to_vec();
    let mut live = k;
    let mut intra_pairs = start.m_in;
    let mut intra_edges = g
        .edges()
        .iter()
        .filter(|&&(i, j)| labels[i] == labels[j])
        .count() as u64;
    let mut current = t_from_counts(intra_edges, m, intra_pairs, pairs);

    let mut order: Vec<usize> = (0..n).collect();
    let mut links = vec![0u64; k];
    for _ in 0..max_sweeps {
        order.shuffle(rng);
        let mut moved = false;
        for &v in &order {
            let from = labels[v];
            for &u in g.neighbors(v) {
                links[labels[u]] += 1;
            }
            let mut best: Option<(f64, usize, u64, u64)> = None;
            for to in 0..k {
                if to == from || sizes[to] == 0 {
                    continue;
                }
                let remaining = live - usize::from(sizes[from] == 1);
                let new_pairs = intra_pairs + sizes[to] as u64 - (sizes[from] as u64 - 1);
                if remaining < 2 || new_pairs == 0 {
                    continue;
                }
                let new_edges = intra_edges + links[to] - links[from];
                let value = t_from_counts(new_edges, m, new_pairs, pairs);
                if value > current + 1e-12 && best.is_none_or(|(b, ..)| value > b) {
                    best = Some((value, to, new_edges, new_pairs));
                }
            }
            for &u in g.neighbors(v) {
                links[labels[u]] = 0;
            }
            if let Some((value, to, new_edges, new_pairs)) = best {
                sizes[from] -= 1;
                if sizes[from] == 0 {
                    live -= 1;
                }
                sizes[to] += 1;
                labels[v] = to;
                intra_edges = new_edges;
                intra_pairs = new_pairs;
                current = value;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(CommunityAssignment::from_labels(&labels))
}

/// How the assignment that maximizes the statistic is approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Detector {
    Walktrap {
        steps: usize,
        cut: CutCriterion,
    },
    /// Walktrap followed by the statistic hill climb.
    LocalSearch {
        steps: usize,
        max_sweeps: usize,
    },
    /// All set partitions with up to `k_max` blocks (default `n - 1`).
    Exhaustive {
        k_max: Option<usize>,
    },
}

impl Default for Detector {
    fn default() -> Self {
        Detector::Walktrap {
            steps: DEFAULT_WALK_STEPS,
            cut: CutCriterion::Modularity,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub assignment: CommunityAssignment,
    pub statistic: f64,
    pub k1_override: bool,
}

impl Detector {
    pub fn name(&self) -> &'static str {
        match self {
            Detector::Walktrap { .. } => "walktrap",
            Detector::LocalSearch { .. } => "local_search",
            Detector::Exhaustive { .. } => "exhaustive",
        }
    }

    pub fn local_search() -> Self {
        Detector::LocalSearch {
            steps: DEFAULT_WALK_STEPS,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }

    /// Finds communities and scores them. Only the local search consumes
    /// randomness.
    pub fn detect<R: Rng + ?Sized>(&self, g: &Graph, rng: &mut R) -> Result<Detection> {
        match *self {
            Detector::Walktrap { steps, cut } => {
                let result = walktrap(g, steps, cut)?;
                let statistic = t_statistic(&result.assignment, g)?;
                Ok(Detection {
                    assignment: result.assignment,
                    statistic,
                    k1_override: result.k1_override,
                })
            }
            Detector::LocalSearch { steps, max_sweeps } => {
                let seed = walktrap(g, steps, CutCriterion::TStatistic)?;
                let assignment = t_local_search(g, &seed.assignment, max_sweeps, rng)?;
                let statistic = t_statistic(&assignment, g)?;
                Ok(Detection {
                    assignment,
                    statistic,
                    k1_override: seed.k1_override,
                })
            }
            Detector::Exhaustive { k_max } => {
                let k_max = k_max.unwrap_or(g.node_count().saturating_sub(1));
                let (assignment, statistic) = max_homophily_exhaustive(g, k_max)?;
                Ok(Detection {
                    assignment,
                    statistic,
                    k1_override: false,
                })
            }
        }
    }
}
