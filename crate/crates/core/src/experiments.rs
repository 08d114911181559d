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

//! Monte Carlo harness: rejection-rate curves over a one-dimensional sweep
//! and the convergence of the statistic at a planted assignment.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community_detection::Detector;
use crate::error::{Error, Result};
use crate::homophily::{gamma, t_statistic};
use crate::hypothesis_tests::{asymptotic_test, bootstrap_test, TestMethod, TestReport};
use crate::null_models::{expected_matrix, fit_null, ModelSpec, NullKind};
use crate::rng::{child_seed, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    /// `n` or a model parameter name such as `p_in`.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestConfig {
    pub method: TestMethod,
    pub null: NullKind,
    #[serde(rename = "B")]
    pub b: usize,
    pub alpha: f64,
    pub detector: Detector,
    pub epsilon: f64,
    pub equal_sizes: bool,
    /// Communities for the threshold; the detected K when absent.
    pub k: Option<usize>,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            method: TestMethod::Bootstrap,
            null: NullKind::Er,
            b: 200,
            alpha: 0.05,
            detector: Detector::default(),
            epsilon: 0.0,
            equal_sizes: true,
            k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub model: ModelSpec,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub test: TestConfig,
    pub n_mc: usize,
    #[serde(default)]
    pub seed: u64,
    /// Keep one record per Monte Carlo run.
    #[serde(default)]
    pub keep_records: bool,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ScenarioConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_mc == 0 {
            return Err(Error::Validation("n_mc must be at least 1".into()));
        }
        if self.test.method == TestMethod::Asymptotic && self.test.null != NullKind::Er {
            return Err(Error::Validation(
                "the asymptotic test is only defined for the ER null".into(),
            ));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Validation("sweep has no values".into()));
            }
            for v in &sweep.values {
                self.model.with_parameter(&sweep.parameter, *v)?;
            }
        }
        Ok(())
    }

    /// Model for each sweep point, paired with the sweep value.
    fn points(&self) -> Result<Vec<(Option<f64>, ModelSpec)>> {
        match &self.sweep {
            None => Ok(vec![(None, self.model.clone())]),
            Some(s) => s
                .values
                .iter()
                .map(|&v| Ok((Some(v), self.model.with_parameter(&s.parameter, v)?)))
                .collect(),
        }
    }
}

/// Seed of Monte Carlo run `run` at sweep point `point`. Graphs depend only
/// on this seed, so scenarios that differ only in their test see the same
/// graphs.
pub fn run_seed(seed: u64, point: usize, run: usize) -> u64 {
    child_seed(child_seed(seed, point as u64), run as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub t_obs: Option<f64>,
    pub p_value: Option<f64>,
    pub threshold_c: Option<f64>,
    pub reject: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sweep_value: Option<f64>,
    pub rate: f64,
    pub se: f64,
    pub n_mc: usize,
    /// Runs whose test failed; they count as non-rejections.
    pub failed_runs: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionCurve {
    pub config: ScenarioConfig,
    pub points: Vec<CurvePoint>,
}

/// Monte Carlo standard error of a rejection rate.
pub fn rate_se(rate: f64, n_mc: usize) -> f64 {
    (rate * (1.0 - rate) / n_mc as f64).sqrt()
}

fn run_test(spec: &ModelSpec, test: &TestConfig, seed: u64) -> Result<TestReport> {
    let mut rng = stream(seed, 0);
    let model = spec.build(&mut rng)?;
    let g = model.sample(&mut rng);
    let test_seed = child_seed(seed, 1);
    match test.method {
        TestMethod::Bootstrap => {
            let null = fit_null(&g, test.null)?;
            bootstrap_test(&g, &null, test.b, &test.detector, test.alpha, test_seed)
        }
        TestMethod::Asymptotic => asymptotic_test(
            &g,
            test.k,
            test.alpha,
            test.epsilon,
            &test.detector,
            test.equal_sizes,
            test_seed,
        ),
    }
}

/// Rejection rate of the configured test at every sweep point.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RejectionCurve> {
    config.validate()?;
    let mut points = Vec::new();
    for (index, (value, spec)) in config.points()?.into_iter().enumerate() {
        let records: Vec<RunRecord> = (0..config.n_mc)
            .into_par_iter()
            .map(
                |run| match run_test(&spec, &config.test, run_seed(config.seed, index, run)) {
                    Ok(r) => RunRecord {
                        run,
                        t_obs: Some(r.t_obs),
                        p_value: r.p_value,
                        threshold_c: r.threshold_c,
                        reject: r.reject,
                        error: None,
                    },
                    Err(e) => RunRecord {
                        run,
                        t_obs: None,
                        p_value: None,
                        threshold_c: None,
                        reject: false,
                        error: Some(e.to_string()),
                    },
                },
            )
            .collect();
        let rejections = records.iter().filter(|r| r.reject).count();
        let rate = rejections as f64 / config.n_mc as f64;
        points.push(CurvePoint {
            sweep_value: value,
            rate,
            se: rate_se(rate, config.n_mc),
            n_mc: config.n_mc,
            failed_runs: records.iter().filter(|r| r.error.is_some()).count(),
            records: if config.keep_records {
                records
            } else {
                Vec::new()
            },
        });
    }
    Ok(RejectionCurve {
        config: config.clone(),
        points,
    })
}

impl RejectionCurve {
    pub fn rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rate).collect()
    }

    /// CSV with the full configuration as a `#` comment line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# scenario: {}", serde_json::to_string(&self.config)?)?;
        writeln!(out, "# seed: {}", self.config.seed)?;
        writeln!(out, "sweep_value,rate,se,n_mc")?;
        for p in &self.points {
            let value = p.sweep_value.map(|v| v.to_string()).unwrap_or_default();
            writeln!(out, "{value},{},{},{}", p.rate, p.se, p.n_mc)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub gamma: f64,
    pub mean_abs_deviation: f64,
    pub se: f64,
    /// Draws on which the statistic was undefined; excluded from the mean.
    pub skipped: usize,
}

/// Mean `|T(c*, A) - gamma(c*, P)|` over `n_mc` draws at each `n`, for a
/// model with a planted assignment.
pub fn convergence_check(
    spec: &ModelSpec,
    ns: &[usize],
    n_mc: usize,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    if n_mc == 0 {
        return Err(Error::Validation("n_mc must be at least 1".into()));
    }
    ns.iter()
        .enumerate()
        .map(|(index, &n)| {
            let spec = spec.with_parameter("n", n as f64)?;
            let point_seed = child_seed(seed, index as u64);
            let model = spec.build(&mut stream(point_seed, 0))?;
            let planted = model
                .planted()
                .ok_or_else(|| {
                    Error::Validation("convergence check needs a planted assignment".into())
                })?
                .clone();
            let population = gamma(&planted, &expected_matrix(&model, point_seed)?)?;
            let deviations: Vec<Option<f64>> = (0..n_mc)
                .into_par_iter()
                .map(|run| {
                    let g = model.sample(&mut stream(point_seed, run as u64 + 1));
                    t_statistic(&planted, &g)
                        .ok()
                        .map(|t| (t - population).abs())
                })
                .collect();
            let values: Vec<f64> = deviations.iter().flatten().copied().collect();
            if values.is_empty() {
                return Err(Error::Degenerate(format!(
                    "statistic undefined on every draw at n = {n}"
                )));
            }
            let count = values.len() as f64;
            let mean = values.iter().sum::<f64>() / count;
            let var =
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
            Ok(ConvergenceRow {
                n,
                gamma: population,
                mean_abs_deviation: mean,
                se: (var / count).sqrt(),
                skipped: n_mc - values.len(),
            })
        })
        .collect()
}
