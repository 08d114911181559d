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

//! Bootstrap and asymptotic-threshold tests of the homophily statistic.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::gamma::ln_gamma;

use crate::community_detection::Detector;
use crate::error::{Error, Result};
use crate::graph::{density, CommunityAssignment, Graph};
use crate::homophily::t_statistic;
use crate::null_models::{FittedNull, NullKind};
use crate::rng::stream;

/// Version of the [`TestReport`] field set.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Fresh null draws tried for a replicate on which the statistic is
/// undefined before it is recorded as negative infinity.
pub const MAX_REPLICATE_RETRIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Bootstrap,
    Asymptotic,
}

impl std::str::FromStr for TestMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bootstrap" => Ok(TestMethod::Bootstrap),
            "asymptotic" => Ok(TestMethod::Asymptotic),
            other => Err(Error::Validation(format!("unknown test method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportFlags {
    /// Replicates whose statistic stayed undefined after every retry.
    pub degenerate_replicates: usize,
    /// Detections (observed or replicate) that fell back from K = 1.
    pub k1_overrides: usize,
    pub clamped_pairs: usize,
    pub warnings: Vec<String>,
}

/// Threshold inputs recorded by the asymptotic test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInputs {
    pub k: usize,
    pub p_hat: f64,
    pub epsilon: f64,
    pub equal_sizes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub schema_version: u32,
    pub t_obs: f64,
    pub method: TestMethod,
    pub null_kind: NullKind,
    pub labeled: bool,
    pub p_value: Option<f64>,
    pub threshold_c: Option<f64>,
    pub reject: bool,
    pub alpha: f64,
    #[serde(rename = "B")]
    pub b: usize,
    /// Replicate statistics in replicate order. Undefined replicates are
    /// negative infinity here and `null` in JSON.
    #[serde(serialize_with = "ser_samples", deserialize_with = "de_samples")]
    pub bootstrap_samples: Vec<f64>,
    pub detector: Option<String>,
    pub detected_k: usize,
    pub seed: u64,
    pub null_parameters: serde_json::Value,
    pub threshold_inputs: Option<ThresholdInputs>,
    pub flags: ReportFlags,
}

fn ser_samples<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.is_finite().then_some(*x)))
}

fn de_samples<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let raw = Vec::<Option<f64>>::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|x| x.unwrap_or(f64::NEG_INFINITY))
        .collect())
}

impl TestReport {
    /// The p-value as text; a zero p-value is shown as `< 1/B`.
    pub fn p_value_display(&self) -> Option<String> {
        self.p_value.map(|p| {
            if p == 0.0 && self.b > 0 {
                format!("< {}", 1.0 / self.b as f64)
            } else {
                format!("{p}")
            }
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One-column CSV of the replicate statistics.
    pub fn write_samples_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t_star")?;
        for x in &self.bootstrap_samples {
            writeln!(out, "{x}")?;
        }
        Ok(())
    }
}

/// `#{samples >= t_obs} / B`.
pub fn bootstrap_p_value(t_obs: f64, samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain(
            "at least one bootstrap replicate is required".into(),
        ));
    }
    let hits = samples.iter().filter(|&&t| t >= t_obs).count();
    Ok(hits as f64 / samples.len() as f64)
}

#[derive(Debug, Clone, Copy)]
struct Replicate {
    value: f64,
    k1_override: bool,
}

/// Runs replicate `i` from stream `i + 1`, drawing again while the
/// statistic is undefined.
fn run_replicates<F>(b: usize, seed: u64, score: F) -> Result<Vec<Replicate>>
where
    F: Fn(&mut crate::rng::SimRng) -> Result<(f64, bool)> + Sync,
{
    (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64 + 1);
            for _ in 0..=MAX_REPLICATE_RETRIES {
                match score(&mut rng) {
                    Ok((value, k1_override)) => return Ok(Replicate { value, k1_override }),
                    Err(e) if e.is_degenerate() => continue,
                    Err(e) => return Err(e),
                }
            }
            Ok(Replicate {
                value: f64::NEG_INFINITY,
                k1_override: false,
            })
        })
        .collect()
}

fn check_common(b: usize, alpha: f64) -> Result<()> {
    if b == 0 {
        return Err(Error::Domain("B must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    Ok(())
}

fn bootstrap_report(
    t_obs: f64,
    replicates: Vec<Replicate>,
    null: &FittedNull,
    alpha: f64,
    seed: u64,
) -> Result<TestReport> {
    let samples: Vec<f64> = replicates.iter().map(|r| r.value).collect();
    let p = bootstrap_p_value(t_obs, &samples)?;
    let degenerate = samples.iter().filter(|x| !x.is_finite()).count();
    let mut warnings = null.warnings.clone();
    if degenerate > 0 {
        warnings.push(format!(
            "{degenerate} replicates stayed degenerate after {MAX_REPLICATE_RETRIES} redraws"
        ));
    }
    Ok(TestReport {
        schema_version: REPORT_SCHEMA_VERSION,
        t_obs,
        method: TestMethod::Bootstrap,
        null_kind: null.kind,
        labeled: false,
        p_value: Some(p),
        threshold_c: None,
        reject: p < alpha,
        alpha,
        b: samples.len(),
        bootstrap_samples: samples,
        detector: None,
        detected_k: 0,
        seed,
        null_parameters: null.describe(),
        threshold_inputs: None,
        flags: ReportFlags {
            degenerate_replicates: degenerate,
            k1_overrides: replicates.iter().filter(|r| r.k1_override).count(),
            clamped_pairs: null.clamped_pairs,
            warnings,
        },
    })
}

/// Bootstrap test of the detected-community statistic against `null`.
///
/// The observed graph is scored with stream 0 of `seed`; replicate `i`
/// uses stream `i + 1`, so the report does not depend on thread count.
pub fn bootstrap_test(
    g: &Graph,
    null: &FittedNull,
    b: usize,
    detector: &Detector,
    alpha: f64,
    seed: u64,
) -> Result<TestReport> {
    check_common(b, alpha)?;
    let observed = detector.detect(g, &mut stream(seed, 0))?;
    let replicates = run_replicates(b, seed, |rng| {
        let sample = null.sample(rng);
        let d = detector.detect(&sample, rng)?;
        Ok((d.statistic, d.k1_override))
    })?;
    let mut report = bootstrap_report(observed.statistic, replicates, null, alpha, seed)?;
    report.detector = Some(detector.name().to_string());
    report.detected_k = observed.assignment.k();
    report.flags.k1_overrides += usize::from(observed.k1_override);
    Ok(report)
}

/// Bootstrap test for a known assignment: every replicate is scored with
/// the same labels and no detection step.
pub fn labeled_bootstrap_test(
    g: &Graph,
    c_star: &CommunityAssignment,
    null: &FittedNull,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestReport> {
    check_common(b, alpha)?;
    let t_obs = t_statistic(c_star, g)?;
    let replicates = run_replicates(b, seed, |rng| {
        let sample = null.sample(rng);
        Ok((t_statistic(c_star, &sample)?, false))
    })?;
    let mut report = bootstrap_report(t_obs, replicates, null, alpha, seed)?;
    report.labeled = true;
    report.detected_k = c_star.k();
    Ok(report)
}

/// Natural log of `C(n - 1, k - 1)`.
fn ln_assignments_general(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64) - ln_gamma(k as f64) - ln_gamma((n - k + 1) as f64)
}

/// Natural log of `n! / ((n/k)!^k k!)`, with real-valued `n/k`.
fn ln_assignments_equal(n: usize, k: usize) -> f64 {
    let n = n as f64;
    let k = k as f64;
    ln_gamma(n + 1.0) - k * ln_gamma(n / k + 1.0) - ln_gamma(k + 1.0)
}

/// Rejection threshold for the maximized statistic under an ER null.
///
/// The general form counts `C(n-1, K-1)` assignments and scales by
/// `sqrt(2 (log 2N - log alpha)) / n`; the equal-size form counts
/// partitions into `K` equal blocks and scales by
/// `sqrt(8 (log 2N - log alpha) / (n (n - 2)))`. Both are multiplied by
/// `(1 + epsilon) / p_hat`.
pub fn asymptotic_threshold(
    n: usize,
    k: usize,
    alpha: f64,
    p_hat: f64,
    epsilon: f64,
    equal_sizes: bool,
) -> Result<f64> {
    if p_hat == 0.0 {
        return Err(Error::Degenerate(
            "threshold is undefined for an empty graph".into(),
        ));
    }
    if !(p_hat > 0.0 && p_hat <= 1.0) {
        return Err(Error::Domain(format!("p_hat = {p_hat} must lie in (0, 1]")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!(
            "epsilon = {epsilon} must be non-negative"
        )));
    }
    if n <= 2 || k < 2 || k > n {
        return Err(Error::Domain(format!(
            "need n > 2 and 2 <= K <= n, got n = {n}, K = {k}"
        )));
    }
    let nf = n as f64;
    let slack = std::f64::consts::LN_2 - alpha.ln();
    let base = if equal_sizes {
        (8.0 * (ln_assignments_equal(n, k) + slack) / (nf * (nf - 2.0))).sqrt()
    } else {
        (2.0 * (ln_assignments_general(n, k) + slack) / (nf * nf)).sqrt()
    };
    Ok(base * (1.0 + epsilon) / p_hat)
}

/// Compares the detected statistic with [`asymptotic_threshold`] at the
/// observed density. `k` defaults to the number of detected communities.
pub fn asymptotic_test(
    g: &Graph,
    k: Option<usize>,
    alpha: f64,
    epsilon: f64,
    detector: &Detector,
    equal_sizes: bool,
    seed: u64,
) -> Result<TestReport> {
    let observed = detector.detect(g, &mut stream(seed, 0))?;
    let k = k.unwrap_or(observed.assignment.k());
    let p_hat = density(g)?;
    let c = asymptotic_threshold(g.node_count(), k, alpha, p_hat, epsilon, equal_sizes)?;
    Ok(TestReport {
        schema_version: REPORT_SCHEMA_VERSION,
        t_obs: observed.statistic,
        method: TestMethod::Asymptotic,
        null_kind: NullKind::Er,
        labeled: false,
        p_value: None,
        threshold_c: Some(c),
        reject: observed.statistic > c,
        alpha,
        b: 0,
        bootstrap_samples: Vec::new(),
        detector: Some(detector.name().to_string()),
        detected_k: observed.assignment.k(),
        seed,
        null_parameters: serde_json::json!({ "p": p_hat }),
        threshold_inputs: Some(ThresholdInputs {
            k,
            p_hat,
            epsilon,
            equal_sizes,
        }),
        flags: ReportFlags {
            k1_overrides: usize::from(observed.k1_override),
            ..ReportFlags::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::null_models::{fit_er, ErParams, Model};
    use approx::assert_relative_eq;

    fn two_triangles() -> Graph {
        Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap()
    }

    #[test]
    fn p_value_counting() {
        assert_eq!(bootstrap_p_value(1.0, &[0.1, 0.5, 0.9]).unwrap(), 0.0);
        assert_eq!(bootstrap_p_value(0.1, &[0.1, 0.5, 0.9]).unwrap(), 1.0);
        assert_eq!(
            bootstrap_p_value(0.5, &[0.1, 0.5, 0.9, f64::NEG_INFINITY]).unwrap(),
            0.5
        );
        assert!(bootstrap_p_value(0.5, &[]).is_err());
    }

    #[test]
    fn equal_size_threshold_value() {
        let c = asymptotic_threshold(100, 2, 0.05, 0.3, 0.0, true).unwrap();
        assert!((c - 0.796).abs() < 1e-3, "C = {c}");
    }

    #[test]
    fn threshold_errors_and_monotonicity() {
        assert!(matches!(
            asymptotic_threshold(100, 2, 0.05, 0.0, 0.0, false),
            Err(Error::Degenerate(_))
        ));
        assert!(asymptotic_threshold(100, 1, 0.05, 0.3, 0.0, false).is_err());
        assert!(asymptotic_threshold(100, 2, 1.0, 0.3, 0.0, false).is_err());
        let mut prev = f64::INFINITY;
        for p in [0.05, 0.1, 0.3, 0.6, 1.0] {
            let c = asymptotic_threshold(100, 3, 0.05, p, 0.0, false).unwrap();
            assert!(c >= 0.0 && c < prev);
            prev = c;
        }
        let c0 = asymptotic_threshold(50, 2, 0.05, 0.3, 0.0, false).unwrap();
        let c1 = asymptotic_threshold(50, 2, 0.05, 0.3, 0.5, false).unwrap();
        assert_relative_eq!(c1, 1.5 * c0, epsilon = 1e-12);
    }

    #[test]
    fn labeled_two_triangles_reject() {
        let g = two_triangles();
        let c = CommunityAssignment::from_labels(&[0, 0, 0, 1, 1, 1]);
        let null = fit_er(&g).unwrap();
        let report = labeled_bootstrap_test(&g, &c, &null, 200, 0.05, 11).unwrap();
        assert_relative_eq!(report.t_obs, 2.5);
        // Null draws without cross edges tie at 2.5 (probability 0.6^9).
        assert!(report.bootstrap_samples.iter().all(|&t| t <= 2.5 + 1e-12));
        assert!(report.p_value.unwrap() < 0.05);
        assert!(report.reject);
        assert_eq!(report.bootstrap_samples.len(), 200);
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let g = two_triangles();
        let null = fit_er(&g).unwrap();
        let det = Detector::default();
        let a = bootstrap_test(&g, &null, 50, &det, 0.05, 3).unwrap();
        let b = bootstrap_test(&g, &null, 50, &det, 0.05, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn empty_null_records_degenerate_replicates() {
        let g = two_triangles();
        let mut null = fit_er(&g).unwrap();
        null.model = Model::Er(ErParams::new(6, 0.0).unwrap());
        let c = CommunityAssignment::from_labels(&[0, 0, 0, 1, 1, 1]);
        let report = labeled_bootstrap_test(&g, &c, &null, 5, 0.05, 0).unwrap();
        assert_eq!(report.flags.degenerate_replicates, 5);
        assert_eq!(report.p_value, Some(0.0));
        let json = report.to_json().unwrap();
        let back: TestReport = serde_json::from_str(&json).unwrap();
        assert!(back
            .bootstrap_samples
            .iter()
            .all(|x| *x == f64::NEG_INFINITY));
        assert_eq!(report.p_value_display().unwrap(), "< 0.2");
    }

    #[test]
    fn asymptotic_separated_cliques_reject() {
        let mut edges = Vec::new();
        for base in [0, 10] {
            for i in 0..10 {
                for j in i + 1..10 {
                    edges.push((base + i, base + j));
                }
            }
        }
        let g = Graph::from_edges(20, edges).unwrap();
        let r = asymptotic_test(&g, None, 0.05, 0.0, &Detector::default(), true, 0).unwrap();
        assert_relative_eq!(r.t_obs, 19.0 / 9.0, epsilon = 1e-12);
        assert!(r.reject);
        assert!(r.t_obs > r.threshold_c.unwrap());
    }
}
