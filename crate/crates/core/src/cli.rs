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

//! Command-line interface.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::community_detection::{CutCriterion, Detector, DEFAULT_MAX_SWEEPS};
use crate::error::{Error, Result};
use crate::experiments::{convergence_check, run_scenario, ScenarioConfig};
use crate::graph::{
    degrees, parse_edge_list, parse_labels, CommunityAssignment, Graph, Indexing, ParseOptions,
};
use crate::homophily::{er_characterization_check, gamma, EXHAUSTIVE_MAX_NODES};
use crate::hypothesis_tests::{
    asymptotic_test, bootstrap_test, labeled_bootstrap_test, TestReport, REPORT_SCHEMA_VERSION,
};
use crate::null_models::{expected_matrix, fit_null, ModelSpec, NullKind};
use crate::rng::{child_seed, stream};

/// Exit status for malformed input or invalid flags.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for input on which the statistic is undefined.
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "homotest",
    version,
    about = "Homophily statistic and bootstrap tests for networks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed for every random draw.
    #[arg(long, global = true, env = "HOMOTEST_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (directory for `describe` and multi-graph `generate`).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NullArg {
    Er,
    Cl,
    Lsm,
}

impl From<NullArg> for NullKind {
    fn from(n: NullArg) -> Self {
        match n {
            NullArg::Er => NullKind::Er,
            NullArg::Cl => NullKind::ChungLu,
            NullArg::Lsm => NullKind::Lsm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Bootstrap,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectorArg {
    Walktrap,
    LocalSearch,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CutArg {
    Modularity,
    T,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Edge list file, or `-` for standard input.
    pub input: PathBuf,
    /// Node ids in the file start at 1.
    #[arg(long)]
    pub one_indexed: bool,
    /// Drop self-loops instead of rejecting them.
    #[arg(long)]
    pub drop_self_loops: bool,
    /// Require undirected listing instead of taking the union of arcs.
    #[arg(long)]
    pub no_symmetrize: bool,
    /// Node count, for graphs with trailing isolated nodes.
    #[arg(long)]
    pub nodes: Option<usize>,
}

impl InputArgs {
    fn load(&self) -> Result<Graph> {
        let text = read_input(&self.input)?;
        parse_edge_list(
            &text,
            &ParseOptions {
                indexing: if self.one_indexed {
                    Indexing::One
                } else {
                    Indexing::Zero
                },
                symmetrize: !self.no_symmetrize,
                drop_self_loops: self.drop_self_loops,
                nodes: self.nodes,
            },
        )
    }
}

#[derive(Debug, Args)]
pub struct DetectorArgs {
    #[arg(long, value_enum, default_value = "walktrap")]
    pub detector: DetectorArg,
    /// Dendrogram cut for Walktrap.
    #[arg(long, value_enum, default_value = "modularity")]
    pub cut: CutArg,
    /// Random-walk length for Walktrap.
    #[arg(long, default_value_t = 4)]
    pub steps: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_SWEEPS)]
    pub max_sweeps: usize,
    /// Largest number of blocks for the exhaustive detector.
    #[arg(long)]
    pub k_max: Option<usize>,
}

impl DetectorArgs {
    fn detector(&self) -> Detector {
        match self.detector {
            DetectorArg::Walktrap => Detector::Walktrap {
                steps: self.steps,
                cut: match self.cut {
                    CutArg::Modularity => CutCriterion::Modularity,
                    CutArg::T => CutCriterion::TStatistic,
                },
            },
            DetectorArg::LocalSearch => Detector::LocalSearch {
                steps: self.steps,
                max_sweeps: self.max_sweeps,
            },
            DetectorArg::Exhaustive => Detector::Exhaustive { k_max: self.k_max },
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test an observed network for homophily.
    Test(TestArgs),
    /// Observed statistic with bootstrap histograms for several nulls, or
    /// population quantities of a model with `--model`.
    Describe(DescribeArgs),
    /// Sample graphs from a model parameter file.
    Generate(GenerateArgs),
    /// Fit a null model and print its parameters.
    Fit(FitArgs),
    /// Run a Monte Carlo scenario and print its rejection-rate curve.
    Simulate(SimulateArgs),
    /// Mean deviation of the statistic from its population value.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "er")]
    pub null: NullArg,
    #[arg(long, value_enum, default_value = "bootstrap")]
    pub method: MethodArg,
    /// Bootstrap replicates.
    #[arg(short = 'B', long = "B", default_value_t = 1000)]
    pub b: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Known community labels (one integer per node); runs the labeled test.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Threshold slack.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Communities for the threshold (default: detected).
    #[arg(long)]
    pub k: Option<usize>,
    /// Count all assignments instead of equal-size ones in the threshold.
    #[arg(long)]
    pub general_threshold: bool,
    /// Also write the replicate statistics as one-column CSV.
    #[arg(long)]
    pub samples_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    /// Edge list (omit with `--model`).
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub one_indexed: bool,
    #[arg(long)]
    pub drop_self_loops: bool,
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Model parameter file for population mode.
    #[arg(long, conflicts_with = "input")]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "er,cl")]
    pub nulls: Vec<NullArg>,
    #[arg(short = 'B', long = "B", default_value_t = 1000)]
    pub b: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// SVG histogram path (default: `histogram.svg` in the output directory).
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long)]
    pub one_indexed: bool,
    /// Write the planted assignment (one-based labels) here.
    #[arg(long)]
    pub planted: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "er")]
    pub null: NullArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub n_mc: usize,
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        Ok(fs::read_to_string(path)?)
    }
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Parses arguments and runs the command, returning the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_degenerate() {
                EXIT_DEGENERATE
            } else {
                EXIT_USAGE
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Test(args) => cmd_test(&cli.global, args),
        Command::Describe(args) => cmd_describe(&cli.global, args),
        Command::Generate(args) => cmd_generate(&cli.global, args),
        Command::Fit(args) => cmd_fit(&cli.global, args),
        Command::Simulate(args) => cmd_simulate(&cli.global, args),
        Command::Convergence(args) => cmd_convergence(&cli.global, args),
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "--alpha {alpha} must lie in (0, 1)"
        )))
    }
}

fn load_labels(path: &Path, g: &Graph) -> Result<CommunityAssignment> {
    let labels = parse_labels(&read_input(path)?)?;
    if labels.len() != g.node_count() {
        return Err(Error::Validation(format!(
            "{} labels for {} nodes",
            labels.len(),
            g.node_count()
        )));
    }
    Ok(labels)
}

fn cmd_test(global: &GlobalArgs, args: &TestArgs) -> Result<()> {
    let null = NullKind::from(args.null);
    if args.method == MethodArg::Asymptotic && null != NullKind::Er {
        return Err(Error::Validation(
            "the asymptotic test only supports --null er".into(),
        ));
    }
    if args.method == MethodArg::Asymptotic && args.labels.is_some() {
        return Err(Error::Validation(
            "--labels requires the bootstrap method".into(),
        ));
    }
    if args.b == 0 {
        return Err(Error::Validation("-B must be at least 1".into()));
    }
    check_alpha(args.alpha)?;
    let seed = global.seed.unwrap_or(0);
    let g = args.input.load()?;
    let detector = args.detector.detector();
    let report = match args.method {
        MethodArg::Asymptotic => asymptotic_test(
            &g,
            args.k,
            args.alpha,
            args.epsilon,
            &detector,
            !args.general_threshold,
            seed,
        )?,
        MethodArg::Bootstrap => {
            let labels = args
                .labels
                .as_deref()
                .map(|p| load_labels(p, &g))
                .transpose()?;
            let fitted = fit_null(&g, null)?;
            match labels {
                Some(c) => labeled_bootstrap_test(&g, &c, &fitted, args.b, args.alpha, seed)?,
                None => bootstrap_test(&g, &fitted, args.b, &detector, args.alpha, seed)?,
            }
        }
    };
    if let Some(path) = &args.samples_csv {
        report.write_samples_csv(fs::File::create(path)?)?;
    }
    match global.format.unwrap_or(Format::Json) {
        Format::Json => emit(&global.output, &report.to_json()?),
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_samples_csv(&mut buf)?;
            emit(&global.output, &String::from_utf8_lossy(&buf))
        }
    }
}

#[derive(Debug, Serialize)]
struct DescribeReport {
    schema_version: u32,
    t_obs: f64,
    detector: String,
    detected_k: usize,
    /// One-based community of each node.
    assignment: Vec<usize>,
    seed: u64,
    nulls: Vec<TestReport>,
}

fn cmd_describe(global: &GlobalArgs, args: &DescribeArgs) -> Result<()> {
    if let Some(model) = &args.model {
        return describe_population(global, model);
    }
    let input = args
        .input
        .as_ref()
        .ok_or_else(|| Error::Validation("describe needs an edge list or --model".into()))?;
    if args.nulls.is_empty() || args.b == 0 {
        return Err(Error::Validation(
            "describe needs at least one null and B >= 1".into(),
        ));
    }
    check_alpha(args.alpha)?;
    let format = global.format.unwrap_or(Format::Json);
    if format == Format::Csv && global.output.is_none() {
        return Err(Error::Validation("--format csv needs --output DIR".into()));
    }
    let seed = global.seed.unwrap_or(0);
    let g = InputArgs {
        input: input.clone(),
        one_indexed: args.one_indexed,
        drop_self_loops: args.drop_self_loops,
        no_symmetrize: false,
        nodes: args.nodes,
    }
    .load()?;
    let detector = args.detector.detector();
    let observed = detector.detect(&g, &mut stream(seed, 0))?;
    let mut nulls = Vec::new();
    for kind in &args.nulls {
        let fitted = fit_null(&g, NullKind::from(*kind))?;
        nulls.push(bootstrap_test(
            &g, &fitted, args.b, &detector, args.alpha, seed,
        )?);
    }
    let report = DescribeReport {
        schema_version: REPORT_SCHEMA_VERSION,
        t_obs: observed.statistic,
        detector: detector.name().to_string(),
        detected_k: observed.assignment.k(),
        assignment: observed.assignment.one_based(),
        seed,
        nulls,
    };
    let svg = overlay_histogram_svg(&report.nulls, report.t_obs);

    let Some(dir) = &global.output else {
        if let Some(path) = &args.svg {
            fs::write(path, &svg)?;
        }
        return emit(&None, &to_json(&report)?);
    };
    fs::create_dir_all(dir)?;
    fs::write(
        args.svg
            .clone()
            .unwrap_or_else(|| dir.join("histogram.svg")),
        &svg,
    )?;
    fs::write(
        dir.join("adjacency_by_community.csv"),
        ordered_adjacency_csv(&g, &community_order(&observed.assignment)),
    )?;
    fs::write(
        dir.join("adjacency_by_degree.csv"),
        ordered_adjacency_csv(&g, &degree_order(&g)),
    )?;
    match format {
        Format::Json => fs::write(dir.join("report.json"), to_json(&report)?)?,
        Format::Csv => {
            for r in &report.nulls {
                r.write_samples_csv(fs::File::create(
                    dir.join(format!("samples_{}.csv", r.null_kind.name())),
                )?)?;
            }
            let mut meta = serde_json::to_value(&report)?;
            for null in meta["nulls"].as_array_mut().into_iter().flatten() {
                if let Some(obj) = null.as_object_mut() {
                    obj.remove("bootstrap_samples");
                }
            }
            fs::write(dir.join("metadata.json"), to_json(&meta)?)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct PopulationReport {
    n: usize,
    mean_probability: f64,
    clamped_pairs: usize,
    planted_k: Option<usize>,
    planted_gamma: Option<f64>,
    /// Maximum over all assignments, for small models.
    max_gamma: Option<f64>,
    is_er: Option<bool>,
}

fn describe_population(global: &GlobalArgs, path: &Path) -> Result<()> {
    let spec: ModelSpec = serde_json::from_str(&read_input(path)?)?;
    let seed = global.seed.unwrap_or(0);
    let model = spec.build(&mut stream(seed, 0))?;
    let p = expected_matrix(&model, seed)?;
    let planted_gamma = model.planted().map(|c| gamma(c, &p)).transpose()?;
    let check = if (3..=EXHAUSTIVE_MAX_NODES).contains(&model.node_count()) {
        Some(er_characterization_check(&p)?)
    } else {
        None
    };
    let report = PopulationReport {
        n: model.node_count(),
        mean_probability: p.mean(),
        clamped_pairs: model.clamped_pairs(),
        planted_k: model.planted().map(CommunityAssignment::k),
        planted_gamma,
        max_gamma: check.as_ref().map(|c| c.max_gamma),
        is_er: check.map(|c| c.is_er),
    };
    emit(&global.output, &to_json(&report)?)
}

fn community_order(c: &CommunityAssignment) -> Vec<usize> {
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by_key(|&i| (c.label(i), i));
    order
}

fn degree_order(g: &Graph) -> Vec<usize> {
    let d = degrees(g);
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(d.as_slice()[i]), i));
    order
}

/// Adjacency matrix with rows and columns in `order`; the header row and
/// first column carry the original node ids.
pub fn ordered_adjacency_csv(g: &Graph, order: &[usize]) -> String {
    let mut out = String::from("node");
    for &j in order {
        let _ = write!(out, ",{j}");
    }
    out.push('\n');
    for &i in order {
        let _ = write!(out, "{i}");
        for &j in order {
            out.push_str(if g.has_edge(i, j) { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    out
}

const HISTOGRAM_BINS: usize = 30;

/// Overlaid histograms of replicate statistics with a vertical line at the
/// observed value. The first null is drawn dark, later ones lighter.
pub fn overlay_histogram_svg(reports: &[TestReport], t_obs: f64) -> String {
    let (w, h, margin) = (640.0, 400.0, 50.0);
    let finite = reports
        .iter()
        .flat_map(|r| r.bootstrap_samples.iter().copied())
        .chain(std::iter::once(t_obs))
        .filter(|x| x.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    let bin_width = (hi - lo) / HISTOGRAM_BINS as f64;
    let counts: Vec<Vec<usize>> = reports
        .iter()
        .map(|r| {
            let mut c = vec![0; HISTOGRAM_BINS];
            for &x in r.bootstrap_samples.iter().filter(|x| x.is_finite()) {
                c[(((x - lo) / bin_width) as usize).min(HISTOGRAM_BINS - 1)] += 1;
            }
            c
        })
        .collect();
    let top = counts.iter().flatten().copied().max().unwrap_or(1).max(1) as f64;
    let x_of = |v: f64| margin + (v - lo) / (hi - lo) * (w - 2.0 * margin);
    let y_of = |c: f64| h - margin - c / top * (h - 2.0 * margin);
    const COLOURS: [(&str, f64); 3] = [("#2f3e5c", 0.8), ("#8fb3d9", 0.6), ("#d9a35f", 0.5)];

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (idx, (report, bins)) in reports.iter().zip(&counts).enumerate() {
        let (colour, opacity) = COLOURS[idx.min(COLOURS.len() - 1)];
        let _ = writeln!(
            svg,
            r#"<g fill="{colour}" fill-opacity="{opacity}" data-null="{}">"#,
            report.null_kind.name()
        );
        for (b, &count) in bins.iter().enumerate().filter(|(_, c)| **c > 0) {
            let x0 = x_of(lo + b as f64 * bin_width);
            let x1 = x_of(lo + (b + 1) as f64 * bin_width);
            let y = y_of(count as f64);
            let _ = writeln!(
                svg,
                r#"<rect x="{x0:.2}" y="{y:.2}" width="{:.2}" height="{:.2}"/>"#,
                x1 - x0,
                h - margin - y
            );
        }
        let _ = writeln!(svg, "</g>");
        let ly = margin + 18.0 * idx as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.0}" y="{ly:.0}" width="12" height="12" fill="{colour}" fill-opacity="{opacity}"/><text x="{:.0}" y="{:.0}">{} null</text>"#,
            w - margin - 110.0,
            w - margin - 92.0,
            ly + 10.0,
            report.null_kind.name()
        );
    }
    let (x0, x1, base) = (margin, w - margin, h - margin);
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{base}" x2="{x1}" y2="{base}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x0}" y="{:.0}">{lo:.3}</text>"#,
        base + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x1}" y="{:.0}" text-anchor="end">{hi:.3}</text>"#,
        base + 16.0
    );
    if t_obs.is_finite() {
        let x = x_of(t_obs);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{margin}" x2="{x:.2}" y2="{base}" stroke="#c0392b" stroke-width="2" data-role="t_obs"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.0}" text-anchor="middle">T = {t_obs:.3}</text>"#,
            margin - 8.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn cmd_generate(global: &GlobalArgs, args: &GenerateArgs) -> Result<()> {
    if args.count == 0 {
        return Err(Error::Validation("--count must be at least 1".into()));
    }
    if args.count > 1 && global.output.is_none() {
        return Err(Error::Validation(
            "--count above 1 needs --output DIR".into(),
        ));
    }
    let spec: ModelSpec = serde_json::from_str(&read_input(&args.model)?)?;
    let seed = global.seed.unwrap_or(0);
    let indexing = if args.one_indexed {
        Indexing::One
    } else {
        Indexing::Zero
    };
    let mut planted = None;
    let mut graphs = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let mut rng = stream(child_seed(seed, i as u64), 0);
        let model = spec.build(&mut rng)?;
        planted = planted.or_else(|| model.planted().cloned());
        graphs.push(model.sample(&mut rng).to_edge_list(indexing));
    }
    if let (Some(path), Some(c)) = (&args.planted, &planted) {
        let text: String = c.one_based().iter().map(|l| format!("{l}\n")).collect();
        fs::write(path, text)?;
    }
    match (&global.output, args.count) {
        (out, 1) => emit(out, &graphs[0]),
        (Some(dir), _) => {
            fs::create_dir_all(dir)?;
            for (i, text) in graphs.iter().enumerate() {
                fs::write(dir.join(format!("graph_{i:04}.txt")), text)?;
            }
            Ok(())
        }
        (None, _) => unreachable!("checked above"),
    }
}

#[derive(Debug, Serialize)]
struct FitReport {
    kind: NullKind,
    nodes: usize,
    edges: usize,
    parameters: serde_json::Value,
    clamped_pairs: usize,
    warnings: Vec<String>,
}

fn cmd_fit(global: &GlobalArgs, args: &FitArgs) -> Result<()> {
    let g = args.input.load()?;
    let fitted = fit_null(&g, NullKind::from(args.null))?;
    let report = FitReport {
        kind: fitted.kind,
        nodes: fitted.source.nodes,
        edges: fitted.source.edges,
        parameters: fitted.describe(),
        clamped_pairs: fitted.clamped_pairs,
        warnings: fitted.warnings.clone(),
    };
    emit(&global.output, &to_json(&report)?)
}

fn cmd_simulate(global: &GlobalArgs, args: &SimulateArgs) -> Result<()> {
    let mut config = ScenarioConfig::from_json(&read_input(&args.scenario)?)?;
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    let curve = run_scenario(&config)?;
    match global.format.unwrap_or(Format::Csv) {
        Format::Json => emit(&global.output, &to_json(&curve)?),
        Format::Csv => {
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            emit(&global.output, &String::from_utf8_lossy(&buf))
        }
    }
}

fn cmd_convergence(global: &GlobalArgs, args: &ConvergenceArgs) -> Result<()> {
    let spec: ModelSpec = serde_json::from_str(&read_input(&args.model)?)?;
    let rows = convergence_check(&spec, &args.ns, args.n_mc, global.seed.unwrap_or(0))?;
    match global.format.unwrap_or(Format::Csv) {
        Format::Json => emit(&global.output, &to_json(&rows)?),
        Format::Csv => {
            let mut out = String::from("n,gamma,mean_abs_deviation,se,skipped\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.n, r.gamma, r.mean_abs_deviation, r.se, r.skipped
                );
            }
            emit(&global.output, &out)
        }
    }
}
