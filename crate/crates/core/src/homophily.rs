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

//! The homophily parameter and its sample statistic.
//!
//! Both are the same function of a symmetric matrix and a community
//! assignment: the mean intra-community entry minus the mean
//! inter-community entry, scaled by the overall mean entry. Applied to an
//! edge-probability matrix it is the population parameter; applied to an
//! adjacency matrix it is the test statistic.

use crate::error::{Error, Result};
use crate::graph::{pair_count, CommunityAssignment, Graph};

/// Largest node count accepted by the exhaustive search.
pub const EXHAUSTIVE_MAX_NODES: usize = 12;

/// Tolerance used when deciding whether a maximal homophily value is
/// positive; the parameter is a ratio so the scale is fixed.
pub const GAMMA_TOLERANCE: f64 = 1e-9;

/// A symmetric matrix with zero diagonal over which homophily is evaluated.
pub trait SymmetricMatrix {
    fn order(&self) -> usize;

    /// Entry `(i, j)` for `i != j`.
    fn entry(&self, i: usize, j: usize) -> f64;

    /// Sums over unordered pairs: `(intra-community sum, total sum)`.
    fn pair_sums(&self, labels: &[usize]) -> (f64, f64) {
        let n = self.order();
        let mut intra = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let w = self.entry(i, j);
                total += w;
                if labels[i] == labels[j] {
                    intra += w;
                }
            }
        }
        (intra, total)
    }
}

impl SymmetricMatrix for Graph {
    fn order(&self) -> usize {
        self.node_count()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        if self.has_edge(i, j) {
            1.0
        } else {
            0.0
        }
    }

    fn pair_sums(&self, labels: &[usize]) -> (f64, f64) {
        let intra = self
            .edges()
            .iter()
            .filter(|&&(i, j)| labels[i] == labels[j])
            .count();
        (intra as f64, self.edge_count() as f64)
    }
}

/// Symmetric matrix of pairwise edge probabilities with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl ProbabilityMatrix {
    /// Validates a dense row-major matrix.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Validation(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::Validation(format!("diagonal entry {i} is not zero")));
            }
            for j in i + 1..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if a != b {
                    return Err(Error::Validation(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::Validation(format!(
                        "entry ({i},{j}) = {a} is not a probability"
                    )));
                }
            }
        }
        Ok(ProbabilityMatrix { n, values })
    }

    /// Builds the matrix from its upper triangle; `f` is called once per
    /// pair `i < j` and must return a probability.
    pub fn from_fn<F>(n: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let p = f(i, j);
                values[i * n + j] = p;
                values[j * n + i] = p;
            }
        }
        Self::new(n, values)
    }

    /// Builds from upper-triangle rows, e.g. `[[.16, .16, .18], [.23, .18], [.27]]`.
    pub fn from_upper(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len() + 1;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n - 1 - i {
                return Err(Error::Validation(format!(
                    "upper row {i} has the wrong length"
                )));
            }
        }
        Self::from_fn(n, |i, j| rows[i][j - i - 1])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Mean off-diagonal entry.
    pub fn mean(&self) -> f64 {
        let (_, total) = self.pair_sums(&vec![0; self.n]);
        total / pair_count(self.n) as f64
    }
}

impl SymmetricMatrix for ProbabilityMatrix {
    fn order(&self) -> usize {
        self.n
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

/// The pieces of the homophily ratio for one assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomophilyDecomposition {
    pub p_in: f64,
    pub p_out: f64,
    pub p_bar: f64,
    pub m_in: u64,
    pub m_out: u64,
    pub value: f64,
}

fn check_assignment(c: &CommunityAssignment, n: usize) -> Result<u64> {
    if c.len() != n {
        return Err(Error::Validation(format!(
            "assignment covers {} nodes but the matrix has {n}",
            c.len()
        )));
    }
    if c.k() < 2 {
        return Err(Error::Assignment(
            "homophily undefined for a single community".into(),
        ));
    }
    let m_in = c.intra_pairs();
    if m_in == 0 {
        return Err(Error::Assignment(
            "every community is a singleton, so there are no intra-community pairs".into(),
        ));
    }
    Ok(m_in)
}

fn ratio(intra: f64, total: f64, m_in: u64, pairs: u64) -> Result<HomophilyDecomposition> {
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Degenerate(
            "overall mean is zero (empty graph or zero matrix)".into(),
        ));
    }
    let m_out = pairs - m_in;
    let p_in = intra / m_in as f64;
    let p_out = (total - intra) / m_out as f64;
    let p_bar = total / pairs as f64;
    Ok(HomophilyDecomposition {
        p_in,
        p_out,
        p_bar,
        m_in,
        m_out,
        value: (p_in - p_out) / p_bar,
    })
}

pub fn decompose<M>(c: &CommunityAssignment, m: &M) -> Result<HomophilyDecomposition>
where
    M: SymmetricMatrix + ?Sized,
{
    let n = m.order();
    let m_in = check_assignment(c, n)?;
    let (intra, total) = m.pair_sums(c.labels());
    ratio(intra, total, m_in, pair_count(n))
}

/// Population homophily of `c` under edge probabilities `p`.
pub fn gamma(c: &CommunityAssignment, p: &ProbabilityMatrix) -> Result<f64> {
    decompose(c, p).map(|d| d.value)
}

/// Sample homophily statistic of `c` on observed data.
pub fn t_statistic<M>(c: &CommunityAssignment, a: &M) -> Result<f64>
where
    M: SymmetricMatrix + ?Sized,
{
    decompose(c, a).map(|d| d.value)
}

struct Enumeration<'a> {
    n: usize,
    k_max: usize,
    weights: &'a [f64],
    total: f64,
    pairs: u64,
    labels: Vec<usize>,
    sizes: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Enumeration<'_> {
    // Restricted-growth strings in lexicographic order: node `i` joins an
    // existing block or opens the next one. Strict improvement keeps the
    // lexicographically smallest argmax.
    fn visit(&mut self, node: usize, intra: f64, m_in: u64) {
        if node == self.n {
            let k = self.sizes.len();
            if k >= 2 && m_in > 0 {
                let pairs = self.pairs;
                let m_out = (pairs - m_in) as f64;
                let p_in = intra / m_in as f64;
                let p_out = (self.total - intra) / m_out;
                let value = (p_in - p_out) / (self.total / pairs as f64);
                if self.best.as_ref().is_none_or(|(b, _)| value > *b) {
                    self.best = Some((value, self.labels.clone()));
                }
            }
            return;
        }
        let open = self.sizes.len();
        let row = &self.weights[node * self.n..node * self.n + node];
        for block in 0..=open.min(self.k_max - 1) {
            let mut gain = 0.0;
            for (j, w) in row.iter().enumerate() {
                if self.labels[j] == block {
                    gain += w;
                }
            }
            let joined = if block == open {
                self.sizes.push(1);
                0
            } else {
                self.sizes[block] += 1;
                self.sizes[block] as u64 - 1
            };
            self.labels[node] = block;
            self.visit(node + 1, intra + gain, m_in + joined);
            if block == open {
                self.sizes.pop();
            } else {
                self.sizes[block] -= 1;
            }
        }
        self.labels[node] = usize::MAX;
    }
}

/// Maximizes the homophily ratio over every set partition of the nodes
/// into `2..=k_max` blocks. Exponential; refuses more than
/// [`EXHAUSTIVE_MAX_NODES`] nodes.
pub fn max_homophily_exhaustive<M>(m: &M, k_max: usize) -> Result<(CommunityAssignment, f64)>
where
    M: SymmetricMatrix + ?Sized,
{
    let n = m.order();
    if n > EXHAUSTIVE_MAX_NODES {
        return Err(Error::Refused(format!(
            "exhaustive search is limited to {EXHAUSTIVE_MAX_NODES} nodes (got {n}); \
             use walktrap or local search instead"
        )));
    }
    if k_max < 2 {
        return Err(Error::Domain("k_max must be at least 2".into()));
    }
    let mut weights = vec![0.0; n * n];
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..i {
            let w = m.entry(i, j);
            weights[i * n + j] = w;
            total += w;
        }
    }
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Degenerate(
            "overall mean is zero (empty graph or zero matrix)".into(),
        ));
    }
    let mut search = Enumeration {
        n,
        k_max: k_max.min(n.max(1)),
        weights: &weights,
        total,
        pairs: pair_count(n),
        labels: vec![usize::MAX; n],
        sizes: Vec::new(),
        best: None,
    };
    search.visit(0, 0.0, 0);
    let (value, labels) = search.best.ok_or_else(|| {
        Error::Assignment(format!(
            "no assignment of {n} nodes into 2..={k_max} communities has an intra-community pair"
        ))
    })?;
    Ok((CommunityAssignment::from_labels(&labels), value))
}

/// Outcome of the homogeneity check on a probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ErCheck {
    pub is_er: bool,
    /// An assignment with positive homophily when the matrix is not
    /// homogeneous.
    pub witness: Option<CommunityAssignment>,
    pub max_gamma: f64,
}

/// Decides whether `p` is homogeneous by maximizing homophily over all
/// assignments with up to `n - 1` communities: a matrix admits no
/// assignment with positive homophily exactly when its off-diagonal
/// entries are all equal.
pub fn er_characterization_check(p: &ProbabilityMatrix) -> Result<ErCheck> {
    let n = p.order();
    if n < 3 {
        return Err(Error::Domain("the check needs at least three nodes".into()));
    }
    let (best, max_gamma) = max_homophily_exhaustive(p, n - 1)?;
    let is_er = max_gamma <= GAMMA_TOLERANCE;
    Ok(ErCheck {
        is_er,
        witness: (!is_er).then_some(best),
        max_gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy() -> ProbabilityMatrix {
        ProbabilityMatrix::from_upper(&[&[0.16, 0.16, 0.18], &[0.23, 0.18], &[0.27]]).unwrap()
    }

    fn two_triangles() -> Graph {
        Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap()
    }

    fn round2(x: f64) -> f64 {
        (x * 100.0).round() / 100.0
    }

    #[test]
    fn toy_matrix() {
        let c = CommunityAssignment::from_labels(&[1, 1, 2, 2]);
        assert_eq!(round2(gamma(&c, &toy()).unwrap()), 0.14);
    }

    #[test]
    fn chung_lu_toy() {
        let theta = [0.6, 0.7, 0.8, 0.9];
        let p = ProbabilityMatrix::from_fn(4, |i, j| theta[i] * theta[j]).unwrap();
        let c = CommunityAssignment::from_labels(&[1, 1, 2, 2]);
        assert_eq!(round2(gamma(&c, &p).unwrap()), 0.03);
    }

    #[test]
    fn constant_matrix_has_zero_homophily() {
        let p = ProbabilityMatrix::from_fn(6, |_, _| 0.3).unwrap();
        let c = CommunityAssignment::from_labels(&[0, 1, 0, 1, 1, 2]);
        assert!(gamma(&c, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn two_triangles_statistic() {
        let c = CommunityAssignment::from_labels(&[0, 0, 0, 1, 1, 1]);
        let d = decompose(&c, &two_triangles()).unwrap();
        assert_eq!((d.p_in, d.p_out), (1.0, 0.0));
        assert_relative_eq!(d.p_bar, 6.0 / 15.0);
        assert_relative_eq!(d.value, 2.5, epsilon = 1e-12);
        assert_eq!((d.m_in, d.m_out), (6, 9));
    }

    #[test]
    fn complete_graph_statistic_is_zero() {
        let c = CommunityAssignment::from_labels(&[0, 1, 1, 0, 1]);
        assert_eq!(t_statistic(&c, &Graph::complete(5)).unwrap(), 0.0);
    }

    #[test]
    fn statistic_on_matrix_matches_gamma() {
        let c = CommunityAssignment::from_labels(&[1, 1, 2, 2]);
        assert_eq!(t_statistic(&c, &toy()).unwrap(), gamma(&c, &toy()).unwrap());
        assert_eq!(round2(t_statistic(&c, &toy()).unwrap()), 0.14);
    }

    #[test]
    fn errors() {
        let g = two_triangles();
        let one = CommunityAssignment::single(6);
        assert!(matches!(decompose(&one, &g), Err(Error::Assignment(_))));
        let singletons = CommunityAssignment::from_labels(&[0, 1, 2, 3, 4, 5]);
        assert!(matches!(
            decompose(&singletons, &g),
            Err(Error::Assignment(_))
        ));
        let c = CommunityAssignment::from_labels(&[0, 0, 0, 1, 1, 1]);
        assert!(matches!(
            decompose(&c, &Graph::empty(6)),
            Err(Error::Degenerate(_))
        ));
        let short = CommunityAssignment::from_labels(&[0, 1]);
        assert!(matches!(decompose(&short, &g), Err(Error::Validation(_))));
    }

    #[test]
    fn probability_matrix_validation() {
        assert!(ProbabilityMatrix::new(2, vec![0.0, 0.2, 0.3, 0.0]).is_err());
        assert!(ProbabilityMatrix::new(2, vec![0.1, 0.2, 0.2, 0.0]).is_err());
        assert!(ProbabilityMatrix::new(2, vec![0.0, 1.2, 1.2, 0.0]).is_err());
        assert!(ProbabilityMatrix::new(2, vec![0.0, 0.2, 0.2, 0.0]).is_ok());
    }

    #[test]
    fn exhaustive_examples() {
        let constant = ProbabilityMatrix::from_fn(5, |_, _| 0.4).unwrap();
        let (_, best) = max_homophily_exhaustive(&constant, 4).unwrap();
        assert!(best.abs() < 1e-12);

        let (c, best) = max_homophily_exhaustive(&two_triangles(), 2).unwrap();
        assert_relative_eq!(best, 2.5, epsilon = 1e-12);
        assert_eq!(c, CommunityAssignment::from_labels(&[0, 0, 0, 1, 1, 1]));

        let (_, best) = max_homophily_exhaustive(&toy(), 2).unwrap();
        assert!(best >= gamma(&CommunityAssignment::from_labels(&[1, 1, 2, 2]), &toy()).unwrap());
    }

    #[test]
    fn exhaustive_guard() {
        let big = ProbabilityMatrix::from_fn(13, |_, _| 0.2).unwrap();
        assert!(matches!(
            max_homophily_exhaustive(&big, 2),
            Err(Error::Refused(_))
        ));
        assert!(matches!(
            max_homophily_exhaustive(&toy(), 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn er_check() {
        let constant = ProbabilityMatrix::from_fn(5, |_, _| 0.3).unwrap();
        let check = er_characterization_check(&constant).unwrap();
        assert!(check.is_er && check.witness.is_none());

        let check = er_characterization_check(&toy()).unwrap();
        assert!(!check.is_er);
        let witness = check.witness.unwrap();
        assert!(gamma(&witness, &toy()).unwrap() > 0.0);
    }
}
