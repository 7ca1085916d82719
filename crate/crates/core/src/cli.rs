//! Command-line harness.
//!
//! Every command writes one JSON document to stdout (or `--out`) and a short
//! human-readable summary to stderr. Exit codes: 0 success, 2 bound violation
//! or failed property check, 3 input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{compile, estimate_constants, projection_budget, ConstantsConfig, ErrorLedger};
use crate::control::{evolve, make_standard_splitting, AllowedRegion, ControlTrajectory, CostFunctional, CostKind, SplittingKind};
use crate::dense::{expm, CMatrix, DenseUnitary};
use crate::lie::{lie_closure, make_theorem2_family};
use crate::optimize::{minimize_cost, OptimizationProblem, OptimizerConfig, TpConfig};
use crate::pauli::{PauliExpansion, PauliWord};
use crate::sampling::{self, Rng};
use crate::verify::{self, VerifyConfig};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "geocomp", version, about = "Optimal-control bounds on quantum gate complexity")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommonArgs {
    /// Number of qubits.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Random seed; defaults to 0 and is echoed in every report.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Averaging window length Δ.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Per-window synthesis accuracy δ.
    #[arg(long = "small-delta", global = true)]
    #[serde(rename = "small_delta")]
    pub small_delta: Option<f64>,
    /// Penalty factor p for penalty costs.
    #[arg(long, global = true)]
    pub penalty: Option<f64>,
    /// Sample count for randomised estimates.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write tabular results as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// JSON file with defaults for any of the flags above.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl CommonArgs {
    /// Flags given on the command line win over the config file.
    fn merged(self) -> Result<Self> {
        let Some(path) = &self.config else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(path)?;
        let file: CommonArgs = serde_json::from_str(&text)?;
        Ok(Self {
            n: self.n.or(file.n),
            seed: self.seed.or(file.seed),
            delta: self.delta.or(file.delta),
            small_delta: self.small_delta.or(file.small_delta),
            penalty: self.penalty.or(file.penalty),
            samples: self.samples.or(file.samples),
            out: self.out.or(file.out),
            csv: self.csv.or(file.csv),
            config: self.config,
        })
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostArg {
    Subriemannian,
    TimeOptimal,
    Riemannian,
    L1,
}

impl CostArg {
    fn build(self, penalty: f64) -> Result<CostFunctional> {
        match self {
            Self::Subriemannian => Ok(CostFunctional::subriemannian()),
            Self::TimeOptimal => Ok(CostFunctional::time_optimal()),
            Self::Riemannian => CostFunctional::riemannian_penalty(penalty),
            Self::L1 => CostFunctional::l1_penalty(penalty),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplittingArg {
    Trivial,
    TwoLocal,
}

impl SplittingArg {
    fn kind(self) -> SplittingKind {
        match self {
            Self::Trivial => SplittingKind::Trivial,
            Self::TwoLocal => SplittingKind::TwoLocalTruncation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionArg {
    Unit,
    Drift,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a trajectory file and print the endpoint unitary.
    Evolve {
        trajectory: PathBuf,
    },
    /// Project, average and synthesize a trajectory; print the error ledger.
    Compile {
        trajectory: PathBuf,
        #[arg(long, value_enum, default_value = "two-local")]
        splitting: SplittingArg,
        #[arg(long, value_enum, default_value = "riemannian")]
        cost: CostArg,
        /// Write the gate sequence here; otherwise it is embedded in the report.
        #[arg(long)]
        gates: Option<PathBuf>,
    },
    /// Run the property suite.
    Verify {
        /// Multiply the averaging bound by this factor (test hook).
        #[arg(long, hide = true, default_value_t = 1.0)]
        corrupt_lemma1: f64,
    },
    /// Lie-algebra closure of Pauli-word generators or of the drift family.
    Liealg {
        #[arg(long)]
        theorem2: bool,
        /// Generators as `WORD` or `WORD:coef,WORD:coef`.
        #[arg(long, num_args = 1..)]
        generators: Vec<String>,
        #[arg(long, default_value_t = usize::MAX)]
        max_depth: usize,
    },
    /// Estimate the optimal cost of reaching a target unitary.
    Optimize {
        /// Rotation axis `x,y,z` of the target `exp(-i θ n·σ)` (single qubit).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        axis: Option<Vec<f64>>,
        /// Rotation angle θ.
        #[arg(long)]
        angle: Option<f64>,
        /// Use a seeded Haar-random SU(2^n) target.
        #[arg(long)]
        haar: bool,
        #[arg(long, value_enum, default_value = "subriemannian")]
        cost: CostArg,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        horizon: f64,
        #[arg(long, default_value_t = 16)]
        segments: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 300)]
        max_iterations: usize,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        /// Write the best trajectory file here.
        #[arg(long)]
        trajectory_out: Option<PathBuf>,
    },
    /// Dump the splitting constants.
    Constants {
        #[arg(long, value_enum, default_value = "riemannian")]
        cost: CostArg,
        #[arg(long, value_enum, default_value = "two-local")]
        splitting: SplittingArg,
        #[arg(long, value_enum, default_value = "unit")]
        region: RegionArg,
        /// Haar targets used for the T_P estimate.
        #[arg(long, default_value_t = 200)]
        tp_samples: usize,
    },
    /// Compile seeded random trajectories over a grid of Δ, δ and p.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05")]
        deltas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1e-6")]
        small_deltas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "64,1024")]
        penalties: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        segments: usize,
    },
}

/// Outcome of a command: the JSON report, a stderr summary, CSV rows and an
/// exit code.
struct Outcome {
    report: Value,
    summary: String,
    csv: Option<String>,
    code: i32,
}

impl Outcome {
    fn ok(report: Value, summary: String) -> Self {
        Self { report, summary, csv: None, code: EXIT_OK }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let common = match cli.common.merged() {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_INPUT;
        }
    };
    match dispatch(&common, &cli.command) {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.report).expect("reports serialise") + "\n";
            let written = match &common.out {
                Some(path) => std::fs::write(path, &text),
                None => stdout.write_all(text.as_bytes()),
            };
            if let (Some(path), Some(csv)) = (&common.csv, &out.csv) {
                if let Err(e) = std::fs::write(path, csv) {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_INPUT;
                }
            }
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_INPUT;
            }
            let _ = writeln!(stderr, "{}", out.summary);
            out.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn dispatch(common: &CommonArgs, command: &Command) -> Result<Outcome> {
    match command {
        Command::Evolve { trajectory } => cmd_evolve(common, trajectory),
        Command::Compile { trajectory, splitting, cost, gates } => cmd_compile(common, trajectory, *splitting, *cost, gates.as_deref()),
        Command::Verify { corrupt_lemma1 } => cmd_verify(common, *corrupt_lemma1),
        Command::Liealg { theorem2, generators, max_depth } => cmd_liealg(common, *theorem2, generators, *max_depth),
        Command::Optimize { axis, angle, haar, cost, horizon, segments, restarts, max_iterations, tolerance, trajectory_out } => {
            let target = optimize_target(common, axis.as_deref(), *angle, *haar)?;
            let cost = cost.build(common.penalty.unwrap_or(1.0))?;
            let mut problem = OptimizationProblem::new(target, cost, AllowedRegion::unit_cost(common.n.unwrap_or(1), if cost.kind() == CostKind::TimeOptimal { CostFunctional::subriemannian() } else { cost })?);
            problem.horizon = *horizon;
            problem.segments = *segments;
            problem.endpoint_tolerance = *tolerance;
            let cfg = OptimizerConfig { seed: common.seed(), restarts: *restarts, max_iterations: *max_iterations };
            cmd_optimize(&problem, &cfg, trajectory_out.as_deref())
        }
        Command::Constants { cost, splitting, region, tp_samples } => cmd_constants(common, *cost, *splitting, *region, *tp_samples),
        Command::Sweep { deltas, small_deltas, penalties, segments } => cmd_sweep(common, deltas, small_deltas, penalties, *segments),
    }
}

/// A blank file is the empty trajectory on `--n` qubits (default 1).
fn read_trajectory(common: &CommonArgs, path: &Path) -> Result<ControlTrajectory> {
    let text = std::fs::read_to_string(path)?;
    if text.trim().is_empty() {
        let n = common.n.unwrap_or(1);
        crate::config::check_qubits(n)?;
        return Ok(ControlTrajectory::new(n));
    }
    ControlTrajectory::from_json(&text)
}

fn matrix_json(m: &CMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|r| Value::Array((0..m.ncols()).map(|k| json!([m[(r, k)].re, m[(r, k)].im])).collect())).collect())
}

pub fn cmd_evolve_report(tr: &ControlTrajectory) -> Value {
    let u = evolve(tr);
    json!({
        "n": tr.n(),
        "T": tr.total_time(),
        "unitarity_residual": u.unitarity_residual(),
        "unitary": matrix_json(u.matrix()),
    })
}

fn cmd_evolve(common: &CommonArgs, path: &Path) -> Result<Outcome> {
    let tr = read_trajectory(common, path)?;
    let report = cmd_evolve_report(&tr);
    let summary = format!("evolved {} segments on {} qubits, T = {}", tr.segments().len(), tr.n(), tr.total_time());
    Ok(Outcome::ok(report, summary))
}

fn ledger_with_seed(mut ledger: ErrorLedger, seed: u64) -> ErrorLedger {
    ledger.seed = seed;
    ledger
}

fn cmd_compile(common: &CommonArgs, path: &Path, splitting: SplittingArg, cost: CostArg, gates_out: Option<&Path>) -> Result<Outcome> {
    let tr = read_trajectory(common, path)?;
    let s = make_standard_splitting(splitting.kind());
    let cost = cost.build(common.penalty.unwrap_or(1024.0))?;
    let delta = common.delta.unwrap_or(0.05);
    let small = common.small_delta.unwrap_or(1e-6);
    let (gates, ledger) = compile(&tr, &s, &cost, delta, small)?;
    let ledger = ledger_with_seed(ledger, common.seed());
    let budget = match s.kind() {
        SplittingKind::Trivial => Some(0.0),
        SplittingKind::TwoLocalTruncation => projection_budget(&cost, &s, &tr).unwrap_or(None),
    };
    let gate_file = gates.to_file();
    let mut report = json!({ "ledger": ledger, "projection_budget": budget });
    match gates_out {
        Some(p) => {
            std::fs::write(p, serde_json::to_string_pretty(&gate_file)? + "\n")?;
            report["gates_file"] = json!(p.display().to_string());
        }
        None => report["gates"] = serde_json::to_value(&gate_file)?,
    }
    let sound = ledger.is_sound();
    let summary = format!(
        "measured {:.3e} <= bound {:.3e} (projection {:.3e}, averaging {:.3e}, synthesis {:.3e}), {} gates: {}",
        ledger.measured_error,
        ledger.total_bound,
        ledger.projection_error,
        ledger.averaging_error,
        ledger.synthesis_error,
        ledger.gate_count,
        if sound { "sound" } else { "VIOLATION" }
    );
    Ok(Outcome { report, summary, csv: None, code: if sound { EXIT_OK } else { EXIT_VIOLATION } })
}

fn cmd_verify(common: &CommonArgs, scale: f64) -> Result<Outcome> {
    let cfg = VerifyConfig { seed: common.seed(), samples: common.samples.unwrap_or(100), lemma1_scale: scale };
    let report = verify::run_suite(&cfg)?;
    let mut summary = String::new();
    for c in &report.checks {
        summary.push_str(&format!(
            "{:<34} {:>6} samples  worst ratio {:.4}  {}\n",
            c.name,
            c.samples,
            c.worst_ratio,
            if c.passed { "pass" } else { "FAIL" }
        ));
    }
    summary.push_str(&format!("{} passed, {} failed", report.passes, report.failures));
    let code = if report.all_passed() { EXIT_OK } else { EXIT_VIOLATION };
    Ok(Outcome { report: serde_json::to_value(&report)?, summary, csv: None, code })
}

/// `WORD` or `WORD:coef,WORD:coef,...`.
fn parse_generator(spec: &str, n: Option<usize>) -> Result<PauliExpansion> {
    let mut terms = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (word, coef) = match part.split_once(':') {
            Some((w, c)) => (w.trim(), c.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad coefficient in `{part}`")))?),
            None => (part, 1.0),
        };
        terms.push((word.parse::<PauliWord>()?, coef));
    }
    let len = terms.first().map(|(w, _)| w.len()).ok_or_else(|| Error::InvalidParameter("empty generator".into()))?;
    if let Some(n) = n {
        if n != len {
            return Err(Error::LengthMismatch(n, len));
        }
    }
    PauliExpansion::from_terms(len, terms)
}

fn cmd_liealg(common: &CommonArgs, theorem2: bool, generators: &[String], max_depth: usize) -> Result<Outcome> {
    let seed = common.seed();
    let (gens, n) = if theorem2 {
        let n = common.n.unwrap_or(3);
        let sys = make_theorem2_family(n, seed)?;
        (vec![sys.drift().clone(), sys.control().clone()], n)
    } else {
        let gens = generators.iter().map(|g| parse_generator(g, common.n)).collect::<Result<Vec<_>>>()?;
        let n = gens.first().map(PauliExpansion::n).ok_or_else(|| Error::InvalidParameter("no generators given".into()))?;
        (gens, n)
    };
    let report = lie_closure(&gens, max_depth)?;
    let summary = format!(
        "closure dimension {} of {} at depth {}: {}",
        report.closure_dimension,
        report.full_dimension,
        report.depth,
        if report.is_bracket_generating { "bracket-generating" } else { "not bracket-generating" }
    );
    let mut value = serde_json::to_value(&report)?;
    value["n"] = json!(n);
    value["seed"] = json!(seed);
    Ok(Outcome::ok(value, summary))
}

fn optimize_target(common: &CommonArgs, axis: Option<&[f64]>, angle: Option<f64>, haar: bool) -> Result<DenseUnitary> {
    let n = common.n.unwrap_or(1);
    crate::config::check_qubits(n)?;
    if haar {
        return Ok(sampling::haar_special_unitary(&mut Rng::seed_from_u64(common.seed()), n));
    }
    let angle = angle.unwrap_or(0.0);
    let axis = axis.unwrap_or(&[1.0, 0.0, 0.0]);
    if n != 1 {
        return Err(Error::InvalidParameter("axis/angle targets are single-qubit; use --haar for n > 1".into()));
    }
    if axis.len() != 3 {
        return Err(Error::InvalidParameter(format!("rotation axis needs 3 components, got {}", axis.len())));
    }
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidParameter("rotation axis must be nonzero".into()));
    }
    let h = PauliExpansion::from_strs(1, &[("X", axis[0] / norm), ("Y", axis[1] / norm), ("Z", axis[2] / norm)])?;
    expm(&h.dense(), angle)
}

fn cmd_optimize(problem: &OptimizationProblem, cfg: &OptimizerConfig, trajectory_out: Option<&Path>) -> Result<Outcome> {
    let result = minimize_cost(problem, cfg)?;
    if let Some(p) = trajectory_out {
        std::fs::write(p, result.trajectory.to_json() + "\n")?;
    }
    let summary = format!(
        "best cost {:.6} with endpoint error {:.2e} ({}), {} restarts",
        result.best_cost,
        result.endpoint_error,
        if result.converged { "converged" } else { "not converged" },
        result.restarts_used
    );
    Ok(Outcome::ok(serde_json::to_value(result.report())?, summary))
}

fn cmd_constants(common: &CommonArgs, cost: CostArg, splitting: SplittingArg, region: RegionArg, tp_samples: usize) -> Result<Outcome> {
    let seed = common.seed();
    let n = common.n.unwrap_or(3);
    let cost = cost.build(common.penalty.unwrap_or(1024.0))?;
    let s = make_standard_splitting(splitting.kind());
    let region = match region {
        RegionArg::Unit => AllowedRegion::unit_cost(n, cost)?,
        RegionArg::Drift => AllowedRegion::Drift(make_theorem2_family(n, seed)?),
    };
    let cfg = ConstantsConfig {
        samples: common.samples.unwrap_or(1000),
        seed,
        tp: TpConfig { samples: tp_samples, seed, ..TpConfig::default() },
    };
    let report = estimate_constants(&cost, &s, &region, &cfg)?;
    let k = report.constants;
    let summary = format!("c_P = {}, T_P ~ {:.4}, R = {}, N_P = {:.4}, c_A = {}", k.c_p, k.t_p, k.r, k.n_p, k.c_a);
    Ok(Outcome::ok(serde_json::to_value(report)?, summary))
}

fn cmd_sweep(common: &CommonArgs, deltas: &[f64], small_deltas: &[f64], penalties: &[f64], segments: usize) -> Result<Outcome> {
    let seed = common.seed();
    let n = common.n.unwrap_or(3);
    let s = make_standard_splitting(SplittingKind::TwoLocalTruncation);
    let mut points = Vec::new();
    for &p in penalties {
        for &d in deltas {
            for &sd in small_deltas {
                points.push((p, d, sd));
            }
        }
    }
    use rayon::prelude::*;
    let rows = points
        .par_iter()
        .map(|&(p, delta, small)| {
            let cost = CostFunctional::riemannian_penalty(p)?;
            let region = AllowedRegion::unit_cost(n, cost)?;
            let mut rng = Rng::seed_from_u64(seed);
            let tr = verify::random_region_trajectory(&mut rng, &region, segments)?;
            let (_, ledger) = compile(&tr, &s, &cost, delta, small)?;
            let budget = projection_budget(&cost, &s, &tr)?;
            Ok((p, ledger_with_seed(ledger, seed), budget))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("penalty,delta,small_delta,projection_error,averaging_error,synthesis_error,total_bound,measured_error,gate_count,projection_budget\n");
    let mut all_sound = true;
    let mut json_rows = Vec::new();
    for (p, l, budget) in &rows {
        all_sound &= l.is_sound();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            p,
            l.delta,
            l.small_delta,
            l.projection_error,
            l.averaging_error,
            l.synthesis_error,
            l.total_bound,
            l.measured_error,
            l.gate_count,
            budget.map_or(String::new(), |b| b.to_string())
        ));
        json_rows.push(json!({ "penalty": p, "ledger": l, "projection_budget": budget }));
    }
    let summary = format!("{} sweep points, {}", rows.len(), if all_sound { "all sound" } else { "VIOLATION" });
    Ok(Outcome {
        report: json!({ "n": n, "seed": seed, "rows": json_rows }),
        summary,
        csv: Some(csv),
        code: if all_sound { EXIT_OK } else { EXIT_VIOLATION },
    })
}
