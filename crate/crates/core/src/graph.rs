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

//! Simple undirected graphs, community assignments and the edge-list
//! text format.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A simple undirected graph on nodes `0..n`.
///
/// Immutable once built. Neighbour lists are sorted; the edge list holds
/// each unordered pair once as `(i, j)` with `i < j`, in lexicographic order.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    edge_set: HashSet<(usize, usize)>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl Eq for Graph {}

impl Graph {
    /// Builds a graph from undirected pairs. Duplicates and reversed
    /// duplicates collapse to one edge; self-loops and out-of-range ids are
    /// rejected.
    pub fn from_edges<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges = Vec::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::Validation(format!("self-loop on node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_sorted_unique(n, edges))
    }

    /// Fast path for samplers: `edges` must be sorted, unique, `i < j < n`.
    pub(crate) fn from_sorted_unique(n: usize, edges: Vec<(usize, usize)>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.iter().all(|&(i, j)| i < j && j < n));
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let edge_set = edges.iter().copied().collect();
        Graph {
            n,
            neighbors,
            edges,
            edge_set,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted_unique(n, Vec::new())
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::from_sorted_unique(n, edges)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_set.contains(&(a.min(b), a.max(b)))
    }

    /// Number of unordered node pairs, `n choose 2`.
    pub fn pair_count(&self) -> u64 {
        pair_count(self.n)
    }

    /// Serializes to the edge-list format with a `# nodes:` header so that
    /// isolated trailing nodes survive a round trip.
    pub fn to_edge_list(&self, indexing: Indexing) -> String {
        let offset = indexing.offset();
        let mut out = String::with_capacity(16 + self.edges.len() * 10);
        let _ = writeln!(out, "# nodes: {}", self.n);
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{} {}", i + offset, j + offset);
        }
        out
    }

    /// Returns a copy with nodes relabelled: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Validation("permutation length mismatch".into()));
        }
        Self::from_edges(self.n, self.edges.iter().map(|&(i, j)| (perm[i], perm[j])))
    }
}

pub(crate) fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Node id base used by a text file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indexing {
    #[default]
    Zero,
    One,
}

impl Indexing {
    fn offset(self) -> usize {
        match self {
            Indexing::Zero => 0,
            Indexing::One => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub indexing: Indexing,
    /// Accept directed input and keep the union of both directions.
    /// Without it, a file that lists some pairs in both directions must
    /// list every pair in both directions.
    pub symmetrize: bool,
    pub drop_self_loops: bool,
    /// Node count; overrides a `# nodes:` header when set.
    pub nodes: Option<usize>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            indexing: Indexing::Zero,
            symmetrize: true,
            drop_self_loops: false,
            nodes: None,
        }
    }
}

fn declared_nodes(line: &str) -> Option<usize> {
    let body = line.trim_start_matches('#').trim();
    let rest = body
        .strip_prefix("nodes:")
        .or_else(|| body.strip_prefix("nodes ="))
        .or_else(|| body.strip_prefix("n ="))
        .or_else(|| body.strip_prefix("n:"))?;
    rest.trim().parse().ok()
}

/// Parses a two-column edge list.
///
/// Tokens may be separated by whitespace or commas. Lines whose first
/// non-blank character is `#` are comments; a comment of the form
/// `# nodes: N` declares the node count. Otherwise the node count is the
/// largest id seen plus one.
pub fn parse_edge_list(text: &str, options: &ParseOptions) -> Result<Graph> {
    let offset = options.indexing.offset();
    let mut declared = options.nodes;
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    let mut max_id: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if options.nodes.is_none() {
                if let Some(n) = declared_nodes(line) {
                    declared = Some(n);
                }
            }
            continue;
        }
        let tokens: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected two node ids, found {} tokens", tokens.len()),
            });
        }
        let mut ids = [0usize; 2];
        for (slot, token) in ids.iter_mut().zip(&tokens) {
            let value: usize = token.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("'{token}' is not a non-negative integer"),
            })?;
            if value < offset {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("node id {value} is below the index base {offset}"),
                });
            }
            *slot = value - offset;
        }
        let [a, b] = ids;
        if a == b {
            if options.drop_self_loops {
                continue;
            }
            return Err(Error::Validation(format!(
                "line {line_no}: self-loop on node {}",
                a + offset
            )));
        }
        max_id = Some(max_id.map_or(a.max(b), |m| m.max(a).max(b)));
        arcs.push((a, b));
    }

    let n = match (declared, max_id) {
        (Some(n), Some(m)) if m >= n => {
            return Err(Error::Validation(format!(
                "node id {} exceeds the declared node count {n}",
                m + offset
            )))
        }
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };

    if !options.symmetrize {
        check_consistent_listing(&arcs)?;
    }
    Graph::from_edges(n, arcs)
}

/// A listing either names each undirected pair in one direction, or names
/// every pair in both. Anything in between looks like a directed graph.
fn check_consistent_listing(arcs: &[(usize, usize)]) -> Result<()> {
    let directed: HashSet<(usize, usize)> = arcs.iter().copied().collect();
    let reciprocated = directed
        .iter()
        .filter(|&&(a, b)| directed.contains(&(b, a)))
        .count();
    if reciprocated > 0 && reciprocated < directed.len() {
        let (a, b) = directed
            .iter()
            .copied()
            .filter(|&(a, b)| !directed.contains(&(b, a)))
            .min()
            .expect("an unreciprocated arc exists");
        return Err(Error::Validation(format!(
            "arc ({a}, {b}) has no reverse while other pairs are listed in both directions; \
             enable symmetrization to accept directed input"
        )));
    }
    Ok(())
}

/// Community labels for every node, stored in canonical form: ids are
/// `0..k`, numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CommunityAssignment {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl CommunityAssignment {
    /// Canonicalizes arbitrary integer labels.
    pub fn from_labels<T>(raw: &[T]) -> Self
    where
        T: Copy + Eq + std::hash::Hash,
    {
        let mut ids = std::collections::HashMap::new();
        let mut sizes = Vec::new();
        let labels = raw
            .iter()
            .map(|value| {
                let next = ids.len();
                let id = *ids.entry(*value).or_insert(next);
                if id == sizes.len() {
                    sizes.push(0);
                }
                sizes[id] += 1;
                id
            })
            .collect();
        CommunityAssignment { labels, sizes }
    }

    /// Everything in one community.
    pub fn single(n: usize) -> Self {
        Self::from_labels(&vec![0usize; n])
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct communities.
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    /// Labels as 1-based ids, the form used in text files and reports.
    pub fn one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l + 1).collect()
    }

    /// Intra-community pair count, the sum of `n_k choose 2`.
    pub fn intra_pairs(&self) -> u64 {
        self.sizes.iter().map(|&s| pair_count(s)).sum()
    }
}

/// Reads one integer label per non-comment line, aligned with node index.
pub fn parse_labels(text: &str) -> Result<CommunityAssignment> {
    let mut raw = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: i64 = line.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("'{line}' is not an integer label"),
        })?;
        raw.push(value);
    }
    Ok(CommunityAssignment::from_labels(&raw))
}

/// Node degrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVector(pub Vec<usize>);

impl DegreeVector {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

pub fn degrees(g: &Graph) -> DegreeVector {
    DegreeVector((0..g.node_count()).map(|i| g.degree(i)).collect())
}

/// Edge density `m / (n choose 2)`.
pub fn density(g: &Graph) -> Result<f64> {
    if g.node_count() < 2 {
        return Err(Error::Domain("density needs at least two nodes".into()));
    }
    Ok(g.edge_count() as f64 / g.pair_count() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path4() -> Graph {
        Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn parses_triangle() {
        let g = parse_edge_list("0 1\n1 2\n2 0", &ParseOptions::default()).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 3));
    }

    #[test]
    fn duplicate_and_reversed_lines_collapse() {
        let opts = ParseOptions {
            indexing: Indexing::One,
            symmetrize: false,
            ..Default::default()
        };
        let g = parse_edge_list("1 2\n2 1\n1 2", &opts).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
    }

    #[test]
    fn comma_separated_and_comments() {
        let g = parse_edge_list(
            "# a comment\n0,1\n  # another\n1, 2\n",
            &ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_edge_list("0 1\n1 x\n", &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_edge_list("0 1 2\n", &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn self_loops() {
        let err = parse_edge_list("0 0\n0 1", &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let opts = ParseOptions {
            drop_self_loops: true,
            ..Default::default()
        };
        let g = parse_edge_list("0 0\n0 1", &opts).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn declared_node_count() {
        let g = parse_edge_list("# nodes: 6\n0 1\n", &ParseOptions::default()).unwrap();
        assert_eq!(g.node_count(), 6);
        let err = parse_edge_list("# nodes: 2\n0 5\n", &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let opts = ParseOptions {
            nodes: Some(3),
            ..Default::default()
        };
        assert!(parse_edge_list("0 3\n", &opts).is_err());
    }

    #[test]
    fn one_indexed_zero_is_an_error() {
        let opts = ParseOptions {
            indexing: Indexing::One,
            ..Default::default()
        };
        assert!(parse_edge_list("0 1\n", &opts).is_err());
    }

    #[test]
    fn directed_listing_needs_symmetrize() {
        let text = "0 1\n1 0\n1 2\n";
        let strict = ParseOptions {
            symmetrize: false,
            ..Default::default()
        };
        assert!(parse_edge_list(text, &strict).is_err());
        let g = parse_edge_list(text, &ParseOptions::default()).unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn karate_fixture() {
        let text = include_str!("../data/karate.txt");
        let g = parse_edge_list(text, &ParseOptions::default()).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (34, 78));
    }

    #[test]
    fn density_examples() {
        assert_eq!(density(&Graph::complete(4)).unwrap(), 1.0);
        assert_eq!(density(&Graph::empty(5)).unwrap(), 0.0);
        assert_eq!(density(&path4()).unwrap(), 0.5);
        assert!(matches!(density(&Graph::empty(1)), Err(Error::Domain(_))));
    }

    #[test]
    fn degree_examples() {
        let triangle = Graph::complete(3);
        assert_eq!(degrees(&triangle).0, vec![2, 2, 2]);
        assert_eq!(degrees(&path4()).0, vec![1, 2, 2, 1]);
        let star = Graph::from_edges(5, (1..5).map(|i| (0, i))).unwrap();
        assert_eq!(degrees(&star).0, vec![4, 1, 1, 1, 1]);
        assert_eq!(degrees(&star).total(), 2 * star.edge_count());
    }

    #[test]
    fn edge_queries() {
        let g = path4();
        assert!(g.has_edge(1, 0));
        assert!(!g.has_edge(0, 2));
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn assignment_is_canonical() {
        let a = CommunityAssignment::from_labels(&[7, 7, 3, 9, 3]);
        assert_eq!(a.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(a.sizes(), &[2, 2, 1]);
        assert_eq!(a.k(), 3);
        assert_eq!(a.intra_pairs(), 2);
        assert_eq!(a, CommunityAssignment::from_labels(&[1, 1, 2, 3, 2]));
        assert_eq!(a.one_based(), vec![1, 1, 2, 3, 2]);
    }

    #[test]
    fn label_file() {
        let c = parse_labels("# labels\n2\n2\n1\n").unwrap();
        assert_eq!(c.labels(), &[0, 0, 1]);
        assert!(matches!(
            parse_labels("1\nx\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
