//! Experiment registry and the run driver behind the `qlsim` binary.
//!
//! A config file holds global keys (`seed`, `threads`, `out`) followed by one
//! `[section]` per experiment. The section name selects the experiment unless
//! an `experiment = NAME` key is given. Section keys:
//!
//! | key        | meaning                                              |
//! |------------|------------------------------------------------------|
//! | system     | system file; replaces the rotation angles            |
//! | corner     | fragment corner, one integer per axis                |
//! | edges      | fragment edge lengths, positive integers             |
//! | horizon    | number of steps (or stack depth, or largest `k`)     |
//! | bins       | bins per axis                                        |
//! | samples    | Monte Carlo samples or random trials                 |
//! | seed       | seed for every random draw of the experiment         |
//! | alpha      | list of tail thresholds                              |
//! | theta      | list of rotation angles (expressions like `pi/6`)    |
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or an
//! experiment cannot be completed, 2 for unreadable or malformed input, 3 for
//! input that parses but is invalid.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    backward_event, clt_experiment, error_independence_test, error_uniformity_test, frequency_preservation,
    hole_frequency_2d, kernel_estimate, martingale_check, max_deviation_experiment, mean_preimage_count,
    mixing_test, neutral_build, reachability_frequency, reachability_markov, wiener_max_modulus, NeutralSpec,
    TestReport,
};
use crate::dynamics::{FiniteLatticeSet, QuantizedSystem};
use crate::error::Error;
use crate::formats::{load_system, parse_ints, parse_lines, parse_reals, Entry};
use crate::geometry::{Cell, JordanSet};
use crate::lattice::{trig_average, weyl_bound, CompensatedSum, Fragment, IntVec};
use crate::output::{render_fragment, summary_json, write_csv, ExperimentSummary, PixelImage};
use crate::quasiperiodic::{power_stack, resonance_search, PowerDirection, QuasiperiodicSet};
use crate::tolerances;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT: &str = "qlsim-out";

/// Tolerance for reachability against its closed form on the default fragment.
pub const REACH_GAP: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("experiment failed: {0}")]
    Experiment(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Experiment(_) => 1,
        }
    }

    fn from_input(e: Error) -> Self {
        match e {
            Error::Parse { line, msg } => CliError::Parse(format!("line {line}: {msg}")),
            Error::Io(e) => CliError::Validation(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn failed(e: Error) -> CliError {
    CliError::Experiment(e.to_string())
}

/// Settings of one experiment run; `None` fields take the registry default.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    pub label: String,
    pub experiment: String,
    pub system: Option<PathBuf>,
    pub corner: Option<Vec<i64>>,
    pub edges: Option<Vec<i64>>,
    pub horizon: Option<i64>,
    pub bins: Option<i64>,
    pub samples: Option<i64>,
    pub seed: Option<u64>,
    pub alphas: Option<Vec<f64>>,
    pub thetas: Option<Vec<f64>>,
}

/// A parsed config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub experiments: Vec<ExperimentConfig>,
}

fn single_int(e: &Entry) -> Result<i64, CliError> {
    e.value
        .parse()
        .map_err(|_| CliError::Parse(format!("line {}: {} must be an integer, got `{}`", e.line, e.key, e.value)))
}

fn seed_value(e: &Entry) -> Result<u64, CliError> {
    e.value
        .parse()
        .map_err(|_| CliError::Parse(format!("line {}: seed must be a nonnegative integer, got `{}`", e.line, e.value)))
}

/// Parses config text; relative `system` paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig, CliError> {
    let entries = parse_lines(text).map_err(CliError::from_input)?;
    let mut cfg = RunConfig::default();
    let mut sections: Vec<ExperimentConfig> = Vec::new();
    let mut current: Option<String> = None;
    let mut seen = std::collections::BTreeSet::new();
    for e in &entries {
        if e.section != current {
            let label = e.section.clone().expect("sections never close");
            if !seen.insert(label.clone()) {
                return Err(CliError::Parse(format!("line {}: section [{label}] appears twice", e.line)));
            }
            sections.push(ExperimentConfig { experiment: label.clone(), label, ..Default::default() });
            current = e.section.clone();
        }
        let reals = |e: &Entry| parse_reals(&e.value, e.line).map_err(CliError::from_input);
        let ints = |e: &Entry| parse_ints(&e.value, e.line).map_err(CliError::from_input);
        let Some(s) = sections.last_mut().filter(|_| current.is_some()) else {
            match e.key.as_str() {
                "seed" => cfg.seed = Some(seed_value(e)?),
                "threads" => {
                    let t = single_int(e)?;
                    if t <= 0 {
                        return Err(CliError::Validation("threads must be positive".into()));
                    }
                    cfg.threads = Some(t as usize);
                }
                "out" => cfg.out = Some(PathBuf::from(&e.value)),
                _ => return Err(CliError::Parse(format!("line {}: unknown global key `{}`", e.line, e.key))),
            }
            continue;
        };
        match e.key.as_str() {
            "experiment" => s.experiment = e.value.clone(),
            "system" => s.system = Some(base.join(&e.value)),
            "corner" => s.corner = Some(ints(e)?),
            "edges" => s.edges = Some(ints(e)?),
            "horizon" => s.horizon = Some(single_int(e)?),
            "bins" => s.bins = Some(single_int(e)?),
            "samples" => s.samples = Some(single_int(e)?),
            "seed" => s.seed = Some(seed_value(e)?),
            "alpha" => s.alphas = Some(reals(e)?),
            "theta" => s.thetas = Some(reals(e)?),
            _ => {
                return Err(CliError::Parse(format!(
                    "line {}: unknown key `{}` in section [{}]",
                    e.line, e.key, s.label
                )))
            }
        }
    }
    cfg.experiments = sections;
    Ok(cfg)
}

/// Fully resolved settings handed to an experiment.
#[derive(Clone, Debug)]
pub struct Settings {
    pub label: String,
    pub system: Option<PathBuf>,
    pub fragment: Fragment,
    pub horizon: usize,
    pub bins: usize,
    pub samples: usize,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub thetas: Vec<f64>,
}

/// Registry defaults for one experiment.
#[derive(Clone, Debug)]
pub struct Defaults {
    pub corner: Vec<i64>,
    pub edges: Vec<i64>,
    pub horizon: i64,
    pub bins: i64,
    pub samples: i64,
    pub alphas: Vec<f64>,
    pub thetas: Vec<f64>,
}

/// Output of one experiment: checks plus optional named images.
#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub reports: Vec<TestReport>,
    pub images: Vec<(String, PixelImage)>,
}

type Runner = fn(&Settings) -> Result<ExperimentOutput, CliError>;

pub struct ExperimentEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub defaults: fn() -> Defaults,
    pub run: Runner,
}

fn square(edge: i64, centered: bool) -> (Vec<i64>, Vec<i64>) {
    let lo = if centered { -(edge / 2) } else { 0 };
    (vec![lo, lo], vec![edge, edge])
}

fn defaults(frag: (Vec<i64>, Vec<i64>), horizon: i64, bins: i64, samples: i64, thetas: &[f64]) -> Defaults {
    Defaults {
        corner: frag.0,
        edges: frag.1,
        horizon,
        bins,
        samples,
        alphas: vec![0.5, 1.0, 2.0],
        thetas: thetas.to_vec(),
    }
}

pub fn registry() -> &'static [ExperimentEntry] {
    &[
        ExperimentEntry {
            name: "rotation-reach",
            description: "fraction of the fragment reachable in `horizon` steps, with a PGM map",
            defaults: || defaults((vec![-50, -50], vec![101, 101]), 1, 1, 100_000, &[PI / 6.0]),
            run: rotation_reach,
        },
        ExperimentEntry {
            name: "hole-frequency",
            description: "Monte Carlo kernel probability of an empty preimage against (cos t + sin t - 1)^2",
            defaults: || defaults(square(1, false), 1, 1, 1_000_000, &[PI / 6.0, PI / 5.0, 1.0]),
            run: hole_frequency,
        },
        ExperimentEntry {
            name: "hole-supremum",
            description: "closed-form hole frequency just below pi/4 against (sqrt 2 - 1)^2",
            defaults: || defaults(square(1, false), 1, 1, 1, &[PI / 4.0 - 0.001]),
            run: hole_supremum,
        },
        ExperimentEntry {
            name: "roundoff-covariance",
            description: "covariance of the roundoff cell against I/12",
            defaults: || defaults(square(1, false), 2, 1, 1, &[]),
            run: roundoff_covariance,
        },
        ExperimentEntry {
            name: "error-uniformity",
            description: "chi-square test of pooled errors E_1..E_k for k = 1..horizon",
            defaults: || defaults(square(512, true), 4, 16, 1, &[1.0]),
            run: error_uniformity,
        },
        ExperimentEntry {
            name: "error-independence",
            description: "joint law of (E_1, E_k) against the product of marginals, k = 2..horizon",
            defaults: || defaults(square(512, true), 2, 8, 1, &[1.0]),
            run: error_independence,
        },
        ExperimentEntry {
            name: "martingale",
            description: "mean preimage count and the martingale of rescaled counts for N = 1..horizon",
            defaults: || defaults(square(301, true), 3, 1, 1, &[1.0]),
            run: martingale,
        },
        ExperimentEntry {
            name: "kernel-mean",
            description: "mean cardinality of kernel outcomes for A = {0} and {0, e_1}",
            defaults: || defaults(square(1, false), 1, 1, 100_000, &[1.0]),
            run: kernel_mean,
        },
        ExperimentEntry {
            name: "clt",
            description: "tail frequencies of normalized deviations against the Gaussian norm tail",
            defaults: || defaults((vec![100_000, 200_000], vec![100, 100]), 400, 1, 1, &[PI / 6.0]),
            run: clt,
        },
        ExperimentEntry {
            name: "max-deviation",
            description: "running maximum of deviations against a planar Wiener oracle (samples = oracle paths)",
            defaults: || {
                defaults((vec![100_000, 200_000], vec![100, 100]), 400, 1, tolerances::WIENER_PATHS as i64, &[PI / 6.0])
            },
            run: max_deviation,
        },
        ExperimentEntry {
            name: "weyl",
            description: "closed-form trigonometric averages against direct sums on random fragments",
            defaults: || defaults((vec![0, 0], vec![100, 100]), 1, 1, 1000, &[]),
            run: weyl,
        },
        ExperimentEntry {
            name: "quasiperiodic-frequency",
            description: "frequency of a set with random nonresonant Lambda and window of measure 0.35",
            defaults: || defaults(square(2000, false), 1, 1, 1, &[]),
            run: quasiperiodic_frequency,
        },
        ExperimentEntry {
            name: "frequency-preservation",
            description: "frequency of a forward-stack event of measure 0.3 before and after one step",
            defaults: || defaults(square(1000, true), 2, 1, 1, &[1.0]),
            run: frequency_preservation_run,
        },
        ExperimentEntry {
            name: "mixing",
            description: "F(T^-k A cap B) against F(A) F(B) = 0.12 for k = 1..horizon",
            defaults: || defaults(square(800, true), 8, 1, 1, &[1.0]),
            run: mixing,
        },
    ]
}

pub fn lookup(name: &str) -> Option<&'static ExperimentEntry> {
    registry().iter().find(|e| e.name == name)
}

fn positive(value: i64, field: &str) -> Result<usize, CliError> {
    if value <= 0 {
        return Err(CliError::Validation(format!("{field} must be positive, got {value}")));
    }
    Ok(value as usize)
}

/// Applies defaults and validates every field.
pub fn resolve(cfg: &ExperimentConfig, seed: u64) -> Result<Settings, CliError> {
    let entry = lookup(&cfg.experiment)
        .ok_or_else(|| CliError::Validation(format!("unknown experiment `{}`", cfg.experiment)))?;
    let d = (entry.defaults)();
    let corner = cfg.corner.clone().unwrap_or(d.corner);
    let edges = cfg.edges.clone().unwrap_or(d.edges);
    if corner.len() != edges.len() {
        return Err(CliError::Validation(format!(
            "corner has {} entries but edges has {}",
            corner.len(),
            edges.len()
        )));
    }
    if let Some((i, &e)) = edges.iter().enumerate().find(|(_, &e)| e <= 0) {
        return Err(CliError::Validation(format!("edges: entry {} is {e}, edges must be positive", i + 1)));
    }
    let fragment = Fragment::new(corner, edges.iter().map(|&e| e as u64).collect())
        .map_err(|e| CliError::Validation(format!("fragment: {e}")))?;
    let alphas = cfg.alphas.clone().unwrap_or(d.alphas);
    if let Some(a) = alphas.iter().find(|a| **a < 0.0) {
        return Err(CliError::Validation(format!("alpha must be nonnegative, got {a}")));
    }
    if let Some(path) = &cfg.system {
        if !path.is_file() {
            return Err(CliError::Validation(format!("system: file {} does not exist", path.display())));
        }
    }
    Ok(Settings {
        label: cfg.label.clone(),
        system: cfg.system.clone(),
        fragment,
        horizon: positive(cfg.horizon.unwrap_or(d.horizon), "horizon")?,
        bins: positive(cfg.bins.unwrap_or(d.bins), "bins")?,
        samples: positive(cfg.samples.unwrap_or(d.samples), "samples")?,
        seed: cfg.seed.unwrap_or(seed),
        alphas,
        thetas: cfg.thetas.clone().unwrap_or(d.thetas),
    })
}

fn fmt_angle(theta: f64) -> String {
    format!("{theta:.6}")
}

/// The systems an experiment runs on: the system file, or one rounded-off
/// rotation per angle.
fn systems(s: &Settings) -> Result<Vec<(String, QuantizedSystem, Option<f64>)>, CliError> {
    if let Some(path) = &s.system {
        let sys = load_system(path).map_err(CliError::from_input)?;
        return Ok(vec![(format!("system={}", path.display()), sys, None)]);
    }
    if s.thetas.is_empty() {
        return Err(CliError::Validation("theta: at least one angle is required".into()));
    }
    Ok(s.thetas
        .iter()
        .map(|&t| (format!("theta={}", fmt_angle(t)), QuantizedSystem::rotation(t), Some(t)))
        .collect())
}

fn require_fragment_dim(s: &Settings, n: usize) -> Result<(), CliError> {
    if s.fragment.dim() != n {
        return Err(CliError::Validation(format!(
            "corner/edges: fragment has {} axes, the system has {n}",
            s.fragment.dim()
        )));
    }
    Ok(())
}

fn prefixed(mut r: TestReport, prefix: &str) -> TestReport {
    r.parameter = if r.parameter.is_empty() { prefix.to_string() } else { format!("{prefix};{}", r.parameter) };
    r
}

fn rotation_reach(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let mut out = ExperimentOutput::default();
    let all = systems(s)?;
    let many = all.len() > 1;
    for (i, (tag, sys, theta)) in all.into_iter().enumerate() {
        require_fragment_dim(s, sys.dim())?;
        let est = reachability_frequency(&sys, s.horizon, &s.fragment).map_err(failed)?;
        let (target, threshold, source) = match theta {
            Some(t) if s.horizon == 1 && t > 0.0 && t < PI / 2.0 => {
                (1.0 - hole_frequency_2d(t).map_err(failed)?, REACH_GAP, 0.0)
            }
            _ => {
                let p = reachability_markov(&sys, s.horizon, s.samples, s.seed).map_err(failed)?;
                let target = p[s.horizon - 1];
                let sigma = (target * (1.0 - target) / s.samples as f64).sqrt();
                (target, REACH_GAP + 3.0 * sigma, 1.0)
            }
        };
        out.reports.push(
            TestReport::new("rotation-reach", format!("{tag};horizon={}", s.horizon))
                .measured(est.value, target)
                .below(threshold)
                .samples(est.total)
                .fragment(s.fragment.describe())
                .seed(s.seed)
                .diagnostic("hits", est.hits as f64)
                .diagnostic("markov_target", source),
        );
        if sys.dim() == 2 {
            let img = render_fragment(
                |x| sys.basin(x, s.horizon).map(|b| !b[s.horizon - 1].is_empty()).unwrap_or(false),
                &s.fragment,
            )
            .map_err(failed)?;
            let name = if many { format!("{}-{}", s.label, i + 1) } else { s.label.clone() };
            out.images.push((name, img));
        }
    }
    Ok(out)
}

fn rotation_angle(theta: Option<f64>, experiment: &str) -> Result<f64, CliError> {
    theta.ok_or_else(|| CliError::Validation(format!("system: {experiment} needs rotation angles, not a system file")))
}

fn hole_frequency(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let mut out = ExperimentOutput::default();
    for (tag, sys, theta) in systems(s)? {
        let theta = rotation_angle(theta, "hole-frequency")?;
        let target = hole_frequency_2d(theta).map_err(|e| CliError::Validation(format!("theta: {e}")))?;
        let origin = FiniteLatticeSet::singleton(IntVec::zeros(2));
        let k = kernel_estimate(&sys, &origin, s.samples, s.seed).map_err(failed)?;
        let p = k.probability(&FiniteLatticeSet::empty());
        let sigma = (target * (1.0 - target) / s.samples as f64).sqrt();
        out.reports.push(
            TestReport::new("hole-frequency", tag)
                .measured(p, target)
                .below((3.0 * sigma).min(2e-3))
                .samples(s.samples as u64)
                .seed(s.seed)
                .diagnostic("sigma", sigma),
        );
    }
    Ok(out)
}

fn hole_supremum(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let sup = (2f64.sqrt() - 1.0).powi(2);
    let mut out = ExperimentOutput::default();
    for &t in &s.thetas {
        let v = hole_frequency_2d(t).map_err(|e| CliError::Validation(format!("theta: {e}")))?;
        out.reports
            .push(TestReport::new("hole-supremum", format!("theta={}", fmt_angle(t))).measured(v, sup).below(0.002));
    }
    Ok(out)
}

fn roundoff_covariance(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let n = s.horizon;
    let psi = Cell::roundoff(n).covariance().map_err(failed)?;
    let gap = (psi - DMatrix::<f64>::identity(n, n) / 12.0).amax();
    Ok(ExperimentOutput {
        reports: vec![TestReport::new("roundoff-covariance", format!("n={n}")).statistic(gap).below(1e-12)],
        images: vec![],
    })
}

fn error_uniformity(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let mut out = ExperimentOutput::default();
    for (tag, sys, _) in systems(s)? {
        require_fragment_dim(s, sys.dim())?;
        for k in 1..=s.horizon {
            let r = error_uniformity_test(&sys, &s.fragment, k, s.bins).map_err(failed)?;
            let dev = r.diagnostics["max_bin_deviation"];
            let spread = TestReport::new("error-bin-deviation", format!("horizon={k};bins={}", s.bins))
                .statistic(dev)
                .below(tolerances::UNIFORMITY_MAX_BIN_DEVIATION)
                .degenerate(r.degenerate)
                .samples(r.samples)
                .fragment(r.fragment.clone())
                .hazards(r.hazards);
            out.reports.push(prefixed(r, &tag));
            out.reports.push(prefixed(spread, &tag));
        }
    }
    Ok(out)
}

fn error_independence(s: &Settings) -> Result<ExperimentOutput, CliError> {
    if s.horizon < 2 {
        return Err(CliError::Validation("horizon must be at least 2 for error-independence".into()));
    }
    let mut out = ExperimentOutput::default();
    for (tag, sys, _) in systems(s)? {
        require_fragment_dim(s, sys.dim())?;
        for k in 2..=s.horizon {
            let r = error_independence_test(&sys, &s.fragment, 1, k, s.bins).map_err(failed)?;
            out.reports.push(prefixed(r, &tag));
        }
    }
    Ok(out)
}

fn martingale(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let mut out = ExperimentOutput::default();
    for (tag, sys, _) in systems(s)? {
        require_fragment_dim(s, sys.dim())?;
        let mean = mean_preimage_count(&sys, &s.fragment).map_err(failed)?;
        out.reports.push(
            TestReport::new("mean-preimage-count", tag.clone())
                .measured(mean, 1.0 / sys.det().abs())
                .below(0.01)
                .samples(s.fragment.len() as u64)
                .fragment(s.fragment.describe()),
        );
        let event = backward_event(&sys, 2, 0.5).map_err(failed)?;
        for depth in 1..=s.horizon {
            for r in martingale_check(&sys, &s.fragment, depth, &event).map_err(failed)? {
                out.reports.push(prefixed(r, &tag));
            }
        }
    }
    Ok(out)
}

fn kernel_mean(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let mut out = ExperimentOutput::default();
    for (tag, sys, _) in systems(s)? {
        let n = sys.dim();
        let sources = [
            FiniteLatticeSet::singleton(IntVec::zeros(n)),
            FiniteLatticeSet::from(vec![IntVec::zeros(n), IntVec::unit(n, 0)]),
        ];
        for a in sources {
            let k = kernel_estimate(&sys, &a, s.samples, s.seed).map_err(failed)?;
            let m = k.mean_cardinality();
            let target = a.len() as f64 / sys.det().abs();
            out.reports.push(
                TestReport::new("kernel-mean", format!("{tag};A={a}"))
                    .measured(m.mean, target)
                    .below((3.0 * m.std_error).max(1e-12))
                    .samples(s.samples as u64)
                    .seed(s.seed)
                    .diagnostic("std_error", m.std_error)
                    .diagnostic("total_probability", k.total_probability()),
            );
        }
    }
    Ok(out)
}

/// Neutral data of a planar system whose matrix has eigenvalues `e^{+-i t}`.
pub fn planar_neutral(sys: &QuantizedSystem) -> crate::error::Result<NeutralSpec> {
    let l = sys.matrix();
    if sys.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: sys.dim() });
    }
    let det = l.determinant();
    let half_trace = l.trace() / 2.0;
    if (det - 1.0).abs() > tolerances::NEUTRAL_IDENTITY || half_trace.abs() >= 1.0 {
        return Err(Error::InvalidInput("L is not similar to a planar rotation".into()));
    }
    let theta = half_trace.acos();
    let (c, s) = (theta.cos(), theta.sin());
    // eigenvector a + ib of e^{i theta}; U = [a, -b] gives L U = U J(theta)
    let (a, b) = if l[(0, 1)].abs() >= l[(1, 0)].abs() {
        ([l[(0, 1)], c - l[(0, 0)]], [0.0, s])
    } else {
        ([c - l[(1, 1)], l[(1, 0)]], [s, 0.0])
    };
    let u = DMatrix::from_row_slice(2, 2, &[a[0], -b[0], a[1], -b[1]]);
    neutral_build(&u, &[theta], sys.covariance())
}

fn neutral_systems(s: &Settings) -> Result<Vec<(String, QuantizedSystem, NeutralSpec)>, CliError> {
    systems(s)?
        .into_iter()
        .map(|(tag, sys, theta)| {
            require_fragment_dim(s, sys.dim())?;
            let spec = match theta {
                Some(t) => neutral_build(&DMatrix::identity(2, 2), &[t.rem_euclid(2.0 * PI)], sys.covariance()),
                None => planar_neutral(&sys),
            }
            .map_err(|e| CliError::Validation(format!("system: {e}")))?;
            Ok((tag, sys, spec))
        })
        .collect()
}

fn clt(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let mut out = ExperimentOutput::default();
    for (tag, sys, spec) in neutral_systems(s)? {
        for r in clt_experiment(&sys, &spec, &s.fragment, s.horizon, &s.alphas).map_err(failed)? {
            out.reports.push(prefixed(r, &tag));
        }
    }
    Ok(out)
}

fn max_deviation(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let mut out = ExperimentOutput::default();
    let oracle = wiener_max_modulus(s.samples, tolerances::WIENER_STEPS, s.seed);
    for (tag, sys, spec) in neutral_systems(s)? {
        let o = max_deviation_experiment(&sys, &spec, &s.fragment, s.horizon, &oracle, s.seed).map_err(failed)?;
        out.reports.extend(o.reports.into_iter().map(|r| prefixed(r, &tag)));
    }
    Ok(out)
}

/// Direct fragment average of `exp(2 pi i omega^T x)`.
pub fn direct_trig_average(omega: &[f64], frag: &Fragment) -> Complex64 {
    let (mut re, mut im) = (CompensatedSum::default(), CompensatedSum::default());
    for x in frag.points() {
        let phase: f64 = omega.iter().zip(x.as_slice()).map(|(w, &c)| (w * c as f64).rem_euclid(1.0)).sum();
        let z = Complex64::from_polar(1.0, 2.0 * PI * phase);
        re.add(z.re);
        im.add(z.im);
    }
    Complex64::new(re.value(), im.value()) / frag.len() as f64
}

fn weyl(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let n = s.fragment.dim();
    let max_edge = *s.fragment.edges().iter().max().expect("nonempty fragment");
    let trials: Vec<(Vec<f64>, Fragment)> = (0..s.samples)
        .map(|i| {
            let mut rng = crate::analysis::rng::stream(s.seed, i as u64);
            let omega: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let corner: Vec<i64> = (0..n).map(|_| rng.random_range(-1000..=1000)).collect();
            let edges: Vec<u64> = (0..n).map(|_| rng.random_range(1..=max_edge)).collect();
            (omega, Fragment::new(corner, edges).expect("positive edges"))
        })
        .collect();
    let mut worst = 0f64;
    let mut violations = 0u64;
    let mut slack = f64::INFINITY;
    for (omega, frag) in &trials {
        let closed = trig_average(omega, frag).map_err(failed)?;
        let direct = direct_trig_average(omega, frag);
        worst = worst.max((closed - direct).norm());
        let bound = weyl_bound(omega, frag.min_edge());
        let margin = bound - closed.norm();
        if margin < -tolerances::INTEGRALITY {
            violations += 1;
        }
        slack = slack.min(margin);
    }
    Ok(ExperimentOutput {
        reports: vec![
            TestReport::new("weyl-closed-form", format!("trials={}", s.samples))
                .statistic(worst)
                .below(1e-10)
                .samples(s.samples as u64)
                .seed(s.seed),
            TestReport::new("weyl-bound", format!("trials={}", s.samples))
                .statistic(violations as f64)
                .below(0.5)
                .samples(s.samples as u64)
                .seed(s.seed)
                .diagnostic("min_margin", slack),
        ],
        images: vec![],
    })
}

/// Random `m x n` matrix with entries `a sqrt 2 + b sqrt 3 + c phi`, redrawn
/// until no resonance with `|u|_inf <= bound` is found.
pub fn random_nonresonant(m: usize, n: usize, bound: i64, seed: u64) -> (DMatrix<f64>, u64) {
    let basis = [2f64.sqrt(), 3f64.sqrt(), (1.0 + 5f64.sqrt()) / 2.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = 0;
    loop {
        draws += 1;
        let entries: Vec<f64> = (0..m * n)
            .map(|_| basis.iter().map(|b| rng.random_range(-3i32..=3) as f64 * b).sum())
            .collect();
        let lambda = DMatrix::from_row_slice(m, n, &entries);
        if resonance_search(&lambda, bound, tolerances::INTEGRALITY).is_none() {
            return (lambda, draws);
        }
    }
}

fn quasiperiodic_frequency(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let n = s.fragment.dim();
    let (lambda, draws) = random_nonresonant(2, n, 50, s.seed);
    let g = JordanSet::boxed(vec![0.0, 0.0], vec![0.5, 0.7]).map_err(failed)?;
    let q = QuasiperiodicSet::new(lambda, g).map_err(failed)?;
    let est = q.frequency(&s.fragment);
    Ok(ExperimentOutput {
        reports: vec![TestReport::new("quasiperiodic-frequency", "m=2;measure=0.35")
            .measured(est.value, q.theoretical_frequency())
            .below(0.01)
            .samples(est.total)
            .fragment(s.fragment.describe())
            .seed(s.seed)
            .diagnostic("lambda_draws", draws as f64)],
        images: vec![],
    })
}

/// Event `frac(L^k x) in G_k` for `k = 1..depth` with a product window of
/// the given measure, splitting it over the first coordinates.
pub fn forward_event(sys: &QuantizedSystem, depth: usize, measure: f64) -> crate::error::Result<QuasiperiodicSet> {
    let stack = power_stack(sys.matrix(), depth, PowerDirection::Forward)?;
    let m = stack.stacked.nrows();
    let n = sys.dim();
    let mut hi = vec![1.0; m];
    let per_block = measure.powf(1.0 / depth as f64);
    for k in 0..depth {
        hi[k * n] = per_block;
    }
    QuasiperiodicSet::new(stack.stacked, JordanSet::boxed(vec![0.0; m], hi)?)
}

fn frequency_preservation_run(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let mut out = ExperimentOutput::default();
    for (tag, sys, _) in systems(s)? {
        require_fragment_dim(s, sys.dim())?;
        let a = forward_event(&sys, s.horizon, 0.3).map_err(failed)?;
        let r = frequency_preservation(&sys, &a, &s.fragment).map_err(failed)?;
        out.reports.push(prefixed(r, &format!("{tag};depth={}", s.horizon)));
    }
    Ok(out)
}

fn mixing(s: &Settings) -> Result<ExperimentOutput, CliError> {
    let mut out = ExperimentOutput::default();
    for (tag, sys, _) in systems(s)? {
        require_fragment_dim(s, sys.dim())?;
        let a = forward_event(&sys, 1, 0.3).map_err(failed)?;
        let b = forward_event(&sys, 1, 0.4).map_err(failed)?;
        let reports = mixing_test(&sys, &a, &b, s.horizon, &s.fragment).map_err(failed)?;
        out.reports.extend(reports.into_iter().skip(1).map(|r| prefixed(r, &tag)));
    }
    Ok(out)
}

/// Command-line options after argument parsing.
#[derive(Clone, Debug, Default)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub experiment: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// What a run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub experiments: Vec<ExperimentSummary>,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.experiments.iter().all(|e| e.pass)
    }
}

/// One line per registered experiment.
pub fn list_experiments() -> String {
    registry().iter().map(|e| format!("{:<24} {}\n", e.name, e.description)).collect()
}

fn selected(inv: &Invocation) -> Result<(RunConfig, Vec<ExperimentConfig>), CliError> {
    let cfg = match &inv.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Parse(format!("cannot read config {}: {e}", path.display())))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            parse_config(&text, &base)?
        }
        None => RunConfig::default(),
    };
    let chosen = match (&inv.experiment, inv.config.is_some()) {
        (None, false) => return Err(CliError::Parse("nothing to run: pass --config or --experiment".into())),
        (None, true) => {
            if cfg.experiments.is_empty() {
                return Err(CliError::Validation("config has no experiment sections".into()));
            }
            cfg.experiments.clone()
        }
        (Some(name), _) => {
            let matching: Vec<ExperimentConfig> =
                cfg.experiments.iter().filter(|e| &e.label == name || &e.experiment == name).cloned().collect();
            if !matching.is_empty() {
                matching
            } else if lookup(name).is_some() {
                vec![ExperimentConfig { label: name.clone(), experiment: name.clone(), ..Default::default() }]
            } else {
                return Err(CliError::Validation(format!("unknown experiment `{name}`; see `qlsim list`")));
            }
        }
    };
    Ok((cfg, chosen))
}

/// Runs the selected experiments and writes `results.csv`, `summary.json`
/// and any images into the output directory.
pub fn execute(inv: &Invocation) -> Result<RunOutcome, CliError> {
    let (cfg, chosen) = selected(inv)?;
    let seed = inv.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let settings = chosen
        .iter()
        .map(|c| {
            let mut s = resolve(c, seed)?;
            if let Some(cli_seed) = inv.seed {
                s.seed = cli_seed;
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let threads = inv.threads.or(cfg.threads);
    if threads == Some(0) {
        return Err(CliError::Validation("threads must be positive".into()));
    }
    let out_dir = inv.out.clone().or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let work = || -> Result<Vec<(ExperimentSummary, Vec<(String, PixelImage)>)>, CliError> {
        chosen
            .iter()
            .zip(&settings)
            .map(|(c, s)| {
                let entry = lookup(&c.experiment).expect("resolved above");
                let output = (entry.run)(s)?;
                Ok((ExperimentSummary::new(&s.label, output.reports), output.images))
            })
            .collect()
    };
    let results = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Experiment(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Experiment(format!("cannot create {}: {e}", out_dir.display())))?;
    let io = |e: Error| CliError::Experiment(e.to_string());
    let mut images: BTreeMap<String, PixelImage> = BTreeMap::new();
    let mut experiments = Vec::new();
    for (summary, imgs) in results {
        images.extend(imgs);
        experiments.push(summary);
    }
    let reports: Vec<TestReport> = experiments.iter().flat_map(|e| e.reports.iter().cloned()).collect();
    let file = std::fs::File::create(out_dir.join("results.csv")).map_err(|e| io(e.into()))?;
    write_csv(&reports, file).map_err(io)?;
    std::fs::write(out_dir.join("summary.json"), summary_json(&experiments)).map_err(|e| io(e.into()))?;
    for (name, img) in &images {
        img.write_pgm(&out_dir.join(format!("{name}.pgm"))).map_err(io)?;
    }
    Ok(RunOutcome { out_dir, experiments })
}

/// Human-readable verdict lines.
pub fn verdicts(outcome: &RunOutcome) -> String {
    let mut s = String::new();
    for e in &outcome.experiments {
        for r in &e.reports {
            let verdict = if r.degenerate {
                "SKIP"
            } else if r.pass {
                "PASS"
            } else {
                "FAIL"
            };
            s.push_str(&format!(
                "{verdict} {:<24} {:<40} value={:.6} target={:.6} statistic={:.6e} threshold={:.6e}\n",
                r.experiment, r.parameter, r.value, r.target, r.statistic, r.threshold
            ));
        }
    }
    s
}

/// Runs and reports; returns the process exit code.
pub fn run(inv: &Invocation) -> i32 {
    match execute(inv) {
        Ok(outcome) => {
            print!("{}", verdicts(&outcome));
            println!("wrote {}", outcome.out_dir.display());
            if outcome.pass() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("qlsim: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_sections() {
        let text = "seed = 7\n[rotation-reach]\ntheta = pi/6 1\ncorner = -5 -5\nedges = 11 11\n[big]\nexperiment = weyl\nsamples = 3\n";
        let cfg = parse_config(text, Path::new(".")).unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.experiments.len(), 2);
        assert_eq!(cfg.experiments[0].thetas.as_ref().unwrap().len(), 2);
        assert_eq!(cfg.experiments[1].experiment, "weyl");
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let e = parse_config("[clt]\nfoo = 1\n", Path::new(".")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert_eq!(parse_config("bar = 2\n", Path::new(".")).unwrap_err().exit_code(), 2);
        assert_eq!(parse_config("[clt]\nhorizon = x\n", Path::new(".")).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn zero_edge_names_the_field() {
        let cfg = ExperimentConfig {
            label: "clt".into(),
            experiment: "clt".into(),
            edges: Some(vec![10, 0]),
            corner: Some(vec![0, 0]),
            ..Default::default()
        };
        let e = resolve(&cfg, 1).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("edges"));
    }

    #[test]
    fn registry_defaults_resolve() {
        for entry in registry() {
            let cfg = ExperimentConfig { label: entry.name.into(), experiment: entry.name.into(), ..Default::default() };
            resolve(&cfg, 1).unwrap();
        }
        assert!(list_experiments().lines().count() == registry().len());
    }

    #[test]
    fn planar_neutral_matches_rotation() {
        let sys = QuantizedSystem::rotation(1.0);
        let spec = planar_neutral(&sys).unwrap();
        assert!((spec.theta[0] - 1.0).abs() < 1e-12);
        assert!((spec.phi.clone() - DMatrix::identity(2, 2) / 12.0).amax() < 1e-12);
    }

    #[test]
    fn direct_and_closed_trig_sums_agree() {
        let f = Fragment::new(vec![-7, 3], vec![13, 9]).unwrap();
        let w = [0.413, -1.27];
        assert!((trig_average(&w, &f).unwrap() - direct_trig_average(&w, &f)).norm() < 1e-12);
    }
}
