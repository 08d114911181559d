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

//! Random graph models: samplers, fitters for the bootstrap nulls, and the
//! exact (or Monte Carlo) edge-probability matrices used to evaluate the
//! population homophily parameter.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{density, CommunityAssignment, Graph};
use crate::homophily::ProbabilityMatrix;
use crate::rng;

/// Latent draws averaged by [`expected_matrix`] for latent space models.
pub const DEFAULT_LATENT_DRAWS: usize = 500;

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{name} = {p} is not a probability"
        )))
    }
}

/// Draws each pair `i < j` independently with probability `prob(i, j)`.
fn sample_pairs<R, F>(n: usize, rng: &mut R, mut prob: F) -> Graph
where
    R: Rng + ?Sized,
    F: FnMut(usize, usize) -> f64,
{
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = prob(i, j);
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_sorted_unique(n, edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErParams {
    pub n: usize,
    pub p: f64,
}

impl ErParams {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        check_probability("p", p)?;
        Ok(ErParams { n, p })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChungLuParams {
    pub theta: Vec<f64>,
}

impl ChungLuParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(t) = theta.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::Validation(format!(
                "weight {t} must be finite and non-negative"
            )));
        }
        Ok(ChungLuParams { theta })
    }

    /// Pairs whose weight product exceeds one and is clamped when sampling.
    pub fn clamped_pairs(&self) -> usize {
        count_clamped(self.theta.len(), |i, j| self.theta[i] * self.theta[j])
    }
}

fn count_clamped<F: Fn(usize, usize) -> f64>(n: usize, raw: F) -> usize {
    (0..n)
        .map(|i| (i + 1..n).filter(|&j| raw(i, j) > 1.0).count())
        .sum()
}

fn check_block_matrix(omega: &[Vec<f64>], k: usize) -> Result<()> {
    if omega.len() != k || omega.iter().any(|row| row.len() != k) {
        return Err(Error::Validation(format!(
            "block matrix must be {k}x{k} to match the assignment"
        )));
    }
    for (a, row) in omega.iter().enumerate() {
        for (b, &value) in row.iter().enumerate() {
            check_probability("block probability", value)?;
            if value != omega[b][a] {
                return Err(Error::Validation("block matrix is not symmetric".into()));
            }
        }
    }
    Ok(())
}

/// Block matrix with `p_in` on the diagonal and `p_out` elsewhere.
pub fn planted_blocks(k: usize, p_in: f64, p_out: f64) -> Vec<Vec<f64>> {
    (0..k)
        .map(|a| (0..k).map(|b| if a == b { p_in } else { p_out }).collect())
        .collect()
}

/// `k` contiguous blocks of (nearly) equal size.
pub fn equal_blocks(n: usize, k: usize) -> CommunityAssignment {
    let labels: Vec<usize> = (0..n).map(|i| i * k / n.max(1)).collect();
    CommunityAssignment::from_labels(&labels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    pub assignment: CommunityAssignment,
    pub omega: Vec<Vec<f64>>,
}

impl SbmParams {
    pub fn new(assignment: CommunityAssignment, omega: Vec<Vec<f64>>) -> Result<Self> {
        check_block_matrix(&omega, assignment.k())?;
        Ok(SbmParams { assignment, omega })
    }

    fn prob(&self, i: usize, j: usize) -> f64 {
        self.omega[self.assignment.label(i)][self.assignment.label(j)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcsbmParams {
    pub theta: Vec<f64>,
    pub assignment: CommunityAssignment,
    pub omega: Vec<Vec<f64>>,
}

impl DcsbmParams {
    pub fn new(
        theta: Vec<f64>,
        assignment: CommunityAssignment,
        omega: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if theta.len() != assignment.len() {
            return Err(Error::Validation(
                "theta and assignment lengths differ".into(),
            ));
        }
        ChungLuParams::new(theta.clone())?;
        check_block_matrix(&omega, assignment.k())?;
        Ok(DcsbmParams {
            theta,
            assignment,
            omega,
        })
    }

    fn raw(&self, i: usize, j: usize) -> f64 {
        self.theta[i]
            * self.omega[self.assignment.label(i)][self.assignment.label(j)]
            * self.theta[j]
    }

    pub fn clamped_pairs(&self) -> usize {
        count_clamped(self.theta.len(), |i, j| self.raw(i, j))
    }
}

/// Intercept of the latent space model: one value for every pair, or an
/// intra/inter pair of values over a planted assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum LatentIntercept {
    Common(f64),
    ByCommunity {
        assignment: CommunityAssignment,
        beta_in: f64,
        beta_out: f64,
    },
}

/// One-dimensional latent space model:
/// `logit P_ij = beta_ij - |z_i - z_j|`, `z_i ~ Normal(0, sigma2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSpaceParams {
    pub n: usize,
    pub intercept: LatentIntercept,
    pub sigma2: f64,
}

impl LatentSpaceParams {
    pub fn new(n: usize, beta: f64, sigma2: f64) -> Result<Self> {
        Self::validated(n, LatentIntercept::Common(beta), sigma2)
    }

    pub fn homophilous(
        assignment: CommunityAssignment,
        beta_in: f64,
        beta_out: f64,
        sigma2: f64,
    ) -> Result<Self> {
        if beta_out > beta_in {
            return Err(Error::Validation(
                "the homophilous variant needs beta_out <= beta_in".into(),
            ));
        }
        let n = assignment.len();
        Self::validated(
            n,
            LatentIntercept::ByCommunity {
                assignment,
                beta_in,
                beta_out,
            },
            sigma2,
        )
    }

    fn validated(n: usize, intercept: LatentIntercept, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Validation(format!(
                "sigma2 = {sigma2} must be positive"
            )));
        }
        Ok(LatentSpaceParams {
            n,
            intercept,
            sigma2,
        })
    }

    pub fn dimension(&self) -> usize {
        1
    }

    fn beta(&self, i: usize, j: usize) -> f64 {
        match &self.intercept {
            LatentIntercept::Common(b) => *b,
            LatentIntercept::ByCommunity {
                assignment,
                beta_in,
                beta_out,
            } => {
                if assignment.label(i) == assignment.label(j) {
                    *beta_in
                } else {
                    *beta_out
                }
            }
        }
    }

    pub fn draw_positions<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let normal = Normal::new(0.0, self.sigma2.sqrt()).expect("positive variance");
        (0..self.n).map(|_| normal.sample(rng)).collect()
    }

    /// Edge probabilities given latent positions.
    pub fn conditional_matrix(&self, z: &[f64]) -> Result<ProbabilityMatrix> {
        if z.len() != self.n {
            return Err(Error::Validation(
                "one latent position per node is required".into(),
            ));
        }
        ProbabilityMatrix::from_fn(self.n, |i, j| {
            logistic(self.beta(i, j) - (z[i] - z[j]).abs())
        })
    }

    /// Marginal edge density for a common intercept: the mean of
    /// `logistic(beta - |D|)` with `D ~ Normal(0, 2 sigma2)`, by Simpson's
    /// rule on the half-normal density.
    pub fn expected_density(&self) -> Option<f64> {
        let LatentIntercept::Common(beta) = self.intercept else {
            return None;
        };
        let sd = (2.0 * self.sigma2).sqrt();
        let upper = 12.0 * sd;
        let steps = 4000;
        let h = upper / steps as f64;
        let f = |x: f64| {
            let dens =
                2.0 / (sd * (2.0 * std::f64::consts::PI).sqrt()) * (-0.5 * (x / sd).powi(2)).exp();
            logistic(beta - x) * dens
        };
        let mut sum = f(0.0) + f(upper);
        for s in 1..steps {
            let w = if s % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(s as f64 * h);
        }
        Some(sum * h / 3.0)
    }
}

/// Any of the generative models.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Er(ErParams),
    Sbm(SbmParams),
    ChungLu(ChungLuParams),
    Dcsbm(DcsbmParams),
    Lsm(LatentSpaceParams),
}

impl Model {
    pub fn node_count(&self) -> usize {
        match self {
            Model::Er(p) => p.n,
            Model::Sbm(p) => p.assignment.len(),
            Model::ChungLu(p) => p.theta.len(),
            Model::Dcsbm(p) => p.theta.len(),
            Model::Lsm(p) => p.n,
        }
    }

    /// The planted community assignment, for models that have one.
    pub fn planted(&self) -> Option<&CommunityAssignment> {
        match self {
            Model::Sbm(p) => Some(&p.assignment),
            Model::Dcsbm(p) => Some(&p.assignment),
            Model::Lsm(LatentSpaceParams {
                intercept: LatentIntercept::ByCommunity { assignment, .. },
                ..
            }) => Some(assignment),
            _ => None,
        }
    }

    pub fn clamped_pairs(&self) -> usize {
        match self {
            Model::ChungLu(p) => p.clamped_pairs(),
            Model::Dcsbm(p) => p.clamped_pairs(),
            _ => 0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Graph {
        match self {
            Model::Er(p) => sample_er(p, rng),
            Model::Sbm(p) => sample_sbm(p, rng),
            Model::ChungLu(p) => sample_chung_lu(p, rng),
            Model::Dcsbm(p) => sample_dcsbm(p, rng),
            Model::Lsm(p) => sample_lsm(p, rng),
        }
    }
}

pub fn sample_er<R: Rng + ?Sized>(params: &ErParams, rng: &mut R) -> Graph {
    sample_pairs(params.n, rng, |_, _| params.p)
}

pub fn sample_sbm<R: Rng + ?Sized>(params: &SbmParams, rng: &mut R) -> Graph {
    sample_pairs(params.assignment.len(), rng, |i, j| params.prob(i, j))
}

/// Pairs are drawn with probability `min(theta_i theta_j, 1)`.
pub fn sample_chung_lu<R: Rng + ?Sized>(params: &ChungLuParams, rng: &mut R) -> Graph {
    let t = &params.theta;
    sample_pairs(t.len(), rng, |i, j| (t[i] * t[j]).min(1.0))
}

pub fn sample_dcsbm<R: Rng + ?Sized>(params: &DcsbmParams, rng: &mut R) -> Graph {
    sample_pairs(params.theta.len(), rng, |i, j| params.raw(i, j).min(1.0))
}

/// Draws fresh latent positions, then the edges given them.
pub fn sample_lsm<R: Rng + ?Sized>(params: &LatentSpaceParams, rng: &mut R) -> Graph {
    let z = params.draw_positions(rng);
    sample_pairs(params.n, rng, |i, j| {
        logistic(params.beta(i, j) - (z[i] - z[j]).abs())
    })
}

/// Exact edge-probability matrix of a model. Latent space models have no
/// closed form; their matrix is the average of conditional matrices over
/// [`DEFAULT_LATENT_DRAWS`] position draws from stream `seed`.
pub fn expected_matrix(model: &Model, seed: u64) -> Result<ProbabilityMatrix> {
    match model {
        Model::Er(p) => ProbabilityMatrix::from_fn(p.n, |_, _| p.p),
        Model::Sbm(p) => ProbabilityMatrix::from_fn(p.assignment.len(), |i, j| p.prob(i, j)),
        Model::ChungLu(p) => {
            let t = &p.theta;
            ProbabilityMatrix::from_fn(t.len(), |i, j| (t[i] * t[j]).min(1.0))
        }
        Model::Dcsbm(p) => ProbabilityMatrix::from_fn(p.theta.len(), |i, j| p.raw(i, j).min(1.0)),
        Model::Lsm(p) => latent_expected_matrix(p, DEFAULT_LATENT_DRAWS, seed),
    }
}

pub fn latent_expected_matrix(
    params: &LatentSpaceParams,
    draws: usize,
    seed: u64,
) -> Result<ProbabilityMatrix> {
    if draws == 0 {
        return Err(Error::Domain("at least one latent draw is required".into()));
    }
    let n = params.n;
    let mut rng = rng::stream(seed, 0);
    let mut acc = vec![0.0; n * n];
    for _ in 0..draws {
        let z = params.draw_positions(&mut rng);
        for i in 0..n {
            for j in i + 1..n {
                acc[i * n + j] += logistic(params.beta(i, j) - (z[i] - z[j]).abs());
            }
        }
    }
    let scale = 1.0 / draws as f64;
    ProbabilityMatrix::from_fn(n, |i, j| acc[i * n + j] * scale)
}

/// Which null a bootstrap resamples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullKind {
    Er,
    #[serde(alias = "cl")]
    ChungLu,
    Lsm,
}

impl NullKind {
    pub fn name(self) -> &'static str {
        match self {
            NullKind::Er => "er",
            NullKind::ChungLu => "chung_lu",
            NullKind::Lsm => "lsm",
        }
    }
}

impl std::str::FromStr for NullKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "er" => Ok(NullKind::Er),
            "cl" | "chung_lu" | "chung-lu" => Ok(NullKind::ChungLu),
            "lsm" => Ok(NullKind::Lsm),
            other => Err(Error::Validation(format!("unknown null model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
}

/// Diagnostics from the latent space fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatentFit {
    pub beta: f64,
    pub sigma2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    /// Fitted positions, centred.
    #[serde(skip)]
    pub positions: Vec<f64>,
}

/// A null model fitted to an observed graph.
#[derive(Debug, Clone)]
pub struct FittedNull {
    pub kind: NullKind,
    pub model: Model,
    pub source: GraphSummary,
    pub clamped_pairs: usize,
    pub latent: Option<LatentFit>,
    pub warnings: Vec<String>,
}

impl FittedNull {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Graph {
        self.model.sample(rng)
    }

    /// Flat description of the fitted parameters for reports.
    pub fn describe(&self) -> serde_json::Value {
        match &self.model {
            Model::Er(p) => serde_json::json!({ "p": p.p }),
            Model::ChungLu(p) => serde_json::json!({
                "theta": p.theta,
                "clamped_pairs": self.clamped_pairs,
            }),
            Model::Lsm(p) => {
                let beta = match p.intercept {
                    LatentIntercept::Common(b) => b,
                    LatentIntercept::ByCommunity { beta_in, .. } => beta_in,
                };
                serde_json::json!({
                    "beta": beta,
                    "sigma2": p.sigma2,
                    "dimension": 1,
                    "fit": self.latent,
                    "approximate": true,
                })
            }
            Model::Sbm(_) | Model::Dcsbm(_) => serde_json::Value::Null,
        }
    }
}

fn summary(g: &Graph) -> GraphSummary {
    GraphSummary {
        nodes: g.node_count(),
        edges: g.edge_count(),
    }
}

/// Erdős–Rényi null with the observed density.
pub fn fit_er(g: &Graph) -> Result<FittedNull> {
    let p = density(g)?;
    Ok(FittedNull {
        kind: NullKind::Er,
        model: Model::Er(ErParams::new(g.node_count(), p)?),
        source: summary(g),
        clamped_pairs: 0,
        latent: None,
        warnings: Vec::new(),
    })
}

/// Chung–Lu null with `theta_i = d_i / sqrt(2m)`.
pub fn fit_chung_lu(g: &Graph) -> Result<FittedNull> {
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::Degenerate(
            "Chung-Lu fit needs at least one edge".into(),
        ));
    }
    let norm = ((2 * m) as f64).sqrt();
    let theta = (0..g.node_count())
        .map(|i| g.degree(i) as f64 / norm)
        .collect();
    let params = ChungLuParams::new(theta)?;
    let clamped = params.clamped_pairs();
    let mut warnings = Vec::new();
    if clamped > 0 {
        warnings.push(format!(
            "{clamped} node pairs have theta_i*theta_j > 1 and are clamped"
        ));
    }
    Ok(FittedNull {
        kind: NullKind::ChungLu,
        model: Model::ChungLu(params),
        source: summary(g),
        clamped_pairs: clamped,
        latent: None,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentFitConfig {
    pub max_iters: usize,
    /// Relative log-likelihood change that counts as converged.
    pub tolerance: f64,
    /// Gradient steps on the positions per outer iteration.
    pub position_steps: usize,
}

impl Default for LatentFitConfig {
    fn default() -> Self {
        LatentFitConfig {
            max_iters: 200,
            tolerance: 1e-7,
            position_steps: 5,
        }
    }
}

const BETA_LIMIT: f64 = 20.0;

/// All-pairs hop distances; unreachable pairs get `diameter + 1`.
fn hop_distances(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut dist = vec![u32::MAX; n * n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        let row = &mut dist[s * n..(s + 1) * n];
        row[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let du = row[u];
            for &v in g.neighbors(u) {
                if row[v] == u32::MAX {
                    row[v] = du + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    let diameter = dist
        .iter()
        .copied()
        .filter(|&d| d != u32::MAX)
        .max()
        .unwrap_or(0);
    dist.into_iter()
        .map(|d| {
            if d == u32::MAX {
                diameter as f64 + 1.0
            } else {
                d as f64
            }
        })
        .collect()
}

/// One-dimensional classical scaling: the leading eigenvector of the
/// double-centred squared distance matrix, by shifted power iteration.
fn classical_scaling(dist: &[f64], n: usize) -> Vec<f64> {
    let mut b: Vec<f64> = dist.iter().map(|d| -0.5 * d * d).collect();
    let row_means: Vec<f64> = (0..n)
        .map(|i| b[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] += grand - row_means[i] - row_means[j];
        }
    }
    let shift = (0..n)
        .map(|i| b[i * n..(i + 1) * n].iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    // Deterministic, non-symmetric start vector.
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + (i as f64 + 1.0).sqrt().fract())
        .collect();
    let mut w = vec![0.0; n];
    let mut eigen = 0.0;
    for _ in 0..500 {
        for i in 0..n {
            w[i] = shift * v[i]
                + b[i * n..(i + 1) * n]
                    .iter()
                    .zip(&v)
                    .map(|(x, y)| x * y)
                    .sum::<f64>();
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return vec![0.0; n];
        }
        let mut change = 0.0;
        for i in 0..n {
            let next = w[i] / norm;
            change += (next - v[i]).abs();
            v[i] = next;
        }
        eigen = norm - shift;
        if change < 1e-10 {
            break;
        }
    }
    let scale = eigen.max(0.0).sqrt();
    v.iter().map(|x| x * scale).collect()
}

fn log_likelihood(g: &Graph, beta: f64, z: &[f64]) -> f64 {
    let n = z.len();
    let mut ll = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let eta = beta - (z[i] - z[j]).abs();
            // log(1 + e^eta), stable
            ll -= if eta > 0.0 {
                eta + (-eta).exp().ln_1p()
            } else {
                eta.exp().ln_1p()
            };
        }
    }
    for &(i, j) in g.edges() {
        ll += beta - (z[i] - z[j]).abs();
    }
    ll
}

/// Newton steps on the intercept with positions held fixed.
fn update_beta(g: &Graph, beta: f64, z: &[f64]) -> f64 {
    let n = z.len();
    let m = g.edge_count() as f64;
    let mut beta = beta;
    for _ in 0..25 {
        let mut expected = 0.0;
        let mut curvature = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let p = logistic(beta - (z[i] - z[j]).abs());
                expected += p;
                curvature += p * (1.0 - p);
            }
        }
        let step = if curvature > 1e-12 {
            (m - expected) / curvature
        } else {
            (m - expected).signum()
        };
        let next = (beta + step.clamp(-2.0, 2.0)).clamp(-BETA_LIMIT, BETA_LIMIT);
        if (next - beta).abs() < 1e-10 {
            return next;
        }
        beta = next;
    }
    beta
}

fn position_gradient(g: &Graph, beta: f64, z: &[f64], grad: &mut [f64]) {
    let n = z.len();
    grad.fill(0.0);
    for i in 0..n {
        for j in i + 1..n {
            let d = z[i] - z[j];
            let p = logistic(beta - d.abs());
            // d/dz_i of -(A - p)|z_i - z_j|, non-edge part
            let s = d.signum() * p;
            grad[i] += s;
            grad[j] -= s;
        }
    }
    for &(i, j) in g.edges() {
        let s = (z[i] - z[j]).signum();
        grad[i] -= s;
        grad[j] += s;
    }
}

fn centre(z: &mut [f64]) {
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    z.iter_mut().for_each(|x| *x -= mean);
}

/// Maximum-likelihood fit of the one-dimensional latent space model.
///
/// Positions start from classical scaling of hop distances, rescaled by a
/// grid search on the likelihood. The fit then alternates Newton updates
/// of the intercept with backtracking gradient ascent on the positions;
/// the variance estimate is the sample variance of the final positions.
/// Hitting `max_iters` leaves a warning on the result rather than failing.
pub fn fit_lsm(g: &Graph, config: &LatentFitConfig) -> Result<FittedNull> {
    let n = g.node_count();
    if n < 3 {
        return Err(Error::Domain(
            "latent space fit needs at least three nodes".into(),
        ));
    }
    if g.edge_count() == 0 {
        return Err(Error::Degenerate(
            "latent space fit needs at least one edge".into(),
        ));
    }

    let base = classical_scaling(&hop_distances(g), n);
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for step in 0..=16 {
        let scale = 0.05 * 1.5f64.powi(step);
        let z: Vec<f64> = base.iter().map(|x| x * scale).collect();
        let beta = update_beta(g, 0.0, &z);
        let ll = log_likelihood(g, beta, &z);
        if best.as_ref().is_none_or(|(b, ..)| ll > *b) {
            best = Some((ll, beta, z));
        }
    }
    let (mut ll, mut beta, mut z) = best.expect("grid is non-empty");
    centre(&mut z);

    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut rate = 1.0 / n as f64;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        let before = ll;
        beta = update_beta(g, beta, &z);
        ll = log_likelihood(g, beta, &z);
        for _ in 0..config.position_steps {
            position_gradient(g, beta, &z, &mut grad);
            let mut accepted = false;
            for _ in 0..30 {
                for ((t, x), d) in trial.iter_mut().zip(&z).zip(&grad) {
                    *t = x + rate * d;
                }
                let candidate = log_likelihood(g, beta, &trial);
                if candidate >= ll {
                    ll = candidate;
                    std::mem::swap(&mut z, &mut trial);
                    rate *= 1.5;
                    accepted = true;
                    break;
                }
                rate *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        centre(&mut z);
        if (ll - before).abs() <= config.tolerance * before.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    let mean = z.iter().sum::<f64>() / n as f64;
    let sigma2 = (z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).max(1e-8);
    let mut warnings = vec!["latent space fit is approximate".to_string()];
    if !converged {
        warnings.push(format!(
            "latent space fit stopped after {iterations} iterations without converging"
        ));
    }
    Ok(FittedNull {
        kind: NullKind::Lsm,
        model: Model::Lsm(LatentSpaceParams::new(n, beta, sigma2)?),
        source: summary(g),
        clamped_pairs: 0,
        latent: Some(LatentFit {
            beta,
            sigma2,
            iterations,
            converged,
            log_likelihood: ll,
            positions: z,
        }),
        warnings,
    })
}

/// Fits the requested null with default settings.
pub fn fit_null(g: &Graph, kind: NullKind) -> Result<FittedNull> {
    match kind {
        NullKind::Er => fit_er(g),
        NullKind::ChungLu => fit_chung_lu(g),
        NullKind::Lsm => fit_lsm(g, &LatentFitConfig::default()),
    }
}

/// Model description as read from parameter files.
///
/// Random ingredients (Chung–Lu weights drawn uniformly) are resolved by
/// [`ModelSpec::build`] from a seeded stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Er {
        n: usize,
        p: f64,
    },
    Sbm {
        n: usize,
        #[serde(default)]
        k: Option<usize>,
        #[serde(default)]
        p_in: Option<f64>,
        #[serde(default)]
        p_out: Option<f64>,
        /// Explicit labels; equal contiguous blocks otherwise.
        #[serde(default)]
        labels: Option<Vec<usize>>,
        #[serde(default)]
        omega: Option<Vec<Vec<f64>>>,
    },
    ChungLu {
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        theta: Option<Vec<f64>>,
        /// Draw each weight from Uniform(low, high).
        #[serde(default)]
        theta_uniform: Option<[f64; 2]>,
    },
    Dcsbm {
        n: usize,
        k: usize,
        p_in: f64,
        p_out: f64,
        #[serde(default)]
        theta: Option<Vec<f64>>,
        #[serde(default)]
        theta_uniform: Option<[f64; 2]>,
    },
    Lsm {
        n: usize,
        beta: f64,
        sigma2: f64,
    },
    LsmHom {
        n: usize,
        k: usize,
        beta_in: f64,
        beta_out: f64,
        sigma2: f64,
    },
}

fn weights<R: Rng + ?Sized>(
    n: usize,
    theta: &Option<Vec<f64>>,
    uniform: &Option<[f64; 2]>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match (theta, uniform) {
        (Some(t), _) => {
            if t.len() != n {
                return Err(Error::Validation(format!(
                    "theta has {} entries, expected {n}",
                    t.len()
                )));
            }
            Ok(t.clone())
        }
        (None, Some([lo, hi])) => {
            if !(lo <= hi && *lo >= 0.0) {
                return Err(Error::Validation(
                    "theta_uniform needs 0 <= low <= high".into(),
                ));
            }
            Ok((0..n)
                .map(|_| lo + (hi - lo) * rng.random::<f64>())
                .collect())
        }
        (None, None) => Err(Error::Validation(
            "either theta or theta_uniform is required".into(),
        )),
    }
}

impl ModelSpec {
    pub fn node_count(&self) -> Option<usize> {
        match self {
            ModelSpec::Er { n, .. }
            | ModelSpec::Sbm { n, .. }
            | ModelSpec::Dcsbm { n, .. }
            | ModelSpec::Lsm { n, .. }
            | ModelSpec::LsmHom { n, .. } => Some(*n),
            ModelSpec::ChungLu { n, theta, .. } => n.or(theta.as_ref().map(Vec::len)),
        }
    }

    /// Resolves the description into concrete model parameters.
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Model> {
        match self {
            ModelSpec::Er { n, p } => Ok(Model::Er(ErParams::new(*n, *p)?)),
            ModelSpec::Sbm {
                n,
                k,
                p_in,
                p_out,
                labels,
                omega,
            } => {
                let assignment = match labels {
                    Some(l) if l.len() == *n => CommunityAssignment::from_labels(l),
                    Some(_) => {
                        return Err(Error::Validation(
                            "labels must have one entry per node".into(),
                        ))
                    }
                    None => equal_blocks(*n, k.unwrap_or(2)),
                };
                let omega = match (omega, p_in, p_out) {
                    (Some(o), _, _) => o.clone(),
                    (None, Some(a), Some(b)) => planted_blocks(assignment.k(), *a, *b),
                    _ => {
                        return Err(Error::Validation(
                            "sbm needs omega or p_in and p_out".into(),
                        ))
                    }
                };
                Ok(Model::Sbm(SbmParams::new(assignment, omega)?))
            }
            ModelSpec::ChungLu {
                n,
                theta,
                theta_uniform,
            } => {
                let n = n
                    .or(theta.as_ref().map(Vec::len))
                    .ok_or_else(|| Error::Validation("chung_lu needs n or theta".into()))?;
                Ok(Model::ChungLu(ChungLuParams::new(weights(
                    n,
                    theta,
                    theta_uniform,
                    rng,
                )?)?))
            }
            ModelSpec::Dcsbm {
                n,
                k,
                p_in,
                p_out,
                theta,
                theta_uniform,
            } => {
                let theta = weights(*n, theta, theta_uniform, rng)?;
                Ok(Model::Dcsbm(DcsbmParams::new(
                    theta,
                    equal_blocks(*n, *k),
                    planted_blocks(*k, *p_in, *p_out),
                )?))
            }
            ModelSpec::Lsm { n, beta, sigma2 } => {
                Ok(Model::Lsm(LatentSpaceParams::new(*n, *beta, *sigma2)?))
            }
            ModelSpec::LsmHom {
                n,
                k,
                beta_in,
                beta_out,
                sigma2,
            } => Ok(Model::Lsm(LatentSpaceParams::homophilous(
                equal_blocks(*n, *k),
                *beta_in,
                *beta_out,
                *sigma2,
            )?)),
        }
    }

    /// Copy with one numeric parameter replaced, for sweeps.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<ModelSpec> {
        let mut spec = self.clone();
        let as_count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Validation(format!(
                    "{name} must be a positive integer, got {value}"
                )))
            }
        };
        let unknown = || Error::Validation(format!("model has no sweepable parameter '{name}'"));
        match (&mut spec, name) {
            (ModelSpec::Er { n, .. }, "n")
            | (ModelSpec::Sbm { n, .. }, "n")
            | (ModelSpec::Dcsbm { n, .. }, "n")
            | (ModelSpec::Lsm { n, .. }, "n")
            | (ModelSpec::LsmHom { n, .. }, "n") => *n = as_count()?,
            (ModelSpec::ChungLu { n, theta, .. }, "n") => {
                if theta.is_some() {
                    return Err(Error::Validation(
                        "cannot sweep n with explicit theta".into(),
                    ));
                }
                *n = Some(as_count()?);
            }
            (ModelSpec::Er { p, .. }, "p") => *p = value,
            (ModelSpec::Sbm { p_in, .. }, "p_in") => *p_in = Some(value),
            (ModelSpec::Sbm { p_out, .. }, "p_out") => *p_out = Some(value),
            (ModelSpec::Dcsbm { p_in, .. }, "p_in") => *p_in = value,
            (ModelSpec::Dcsbm { p_out, .. }, "p_out") => *p_out = value,
            (ModelSpec::Lsm { beta, .. }, "beta") => *beta = value,
            (ModelSpec::Lsm { sigma2, .. }, "sigma2")
            | (ModelSpec::LsmHom { sigma2, .. }, "sigma2") => *sigma2 = value,
            (ModelSpec::LsmHom { beta_in, .. }, "beta_in") => *beta_in = value,
            (ModelSpec::LsmHom { beta_out, .. }, "beta_out") => *beta_out = value,
            _ => return Err(unknown()),
        }
        Ok(spec)
    }
}
