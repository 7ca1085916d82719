//! Small-instance estimates of the optimal cost `C(U)`, of `T_P`, and a
//! breadth-first gate-count oracle for single-qubit targets.
//!
//! Trajectories have a fixed number `K` of constant segments. For unit-cost
//! regions segment `k` is parameterised by a generator `a_k` with
//! `exp(-i a_k)` as its propagator, so `H_k = a_k / c(a_k)` and
//! `τ_k = c(a_k)`. Drift regions use `(α_k, τ_k)` directly. The objective is
//! `cost + μ·max(0, err - tol/2) + μ·max(0, T_total - horizon)` and is
//! minimised by compass search with escalating `μ`.

use std::collections::HashSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng as _, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{AllowedRegion, ControlTrajectory, CostFunctional, CostKind, Splitting, SplittingKind, TrajectoryFile};
use crate::dense::{c, distance, expm_hermitian, hermitian_log_traceless, phase_invariant_distance, CMatrix, DenseUnitary};
use crate::lie::DriftSystem;
use crate::pauli::{expand, PauliExpansion, PauliWord};
use crate::sampling::{self, Rng};
use crate::{Error, Result};

/// Largest accepted segment count.
pub const MAX_SEGMENTS: usize = 256;
/// Penalty weights tried in order.
const PENALTY_SCHEDULE: [f64; 5] = [10.0, 1e2, 1e3, 1e4, 1e5];
/// Compass search stops once its step falls below this.
const MIN_STEP: f64 = 1e-10;
/// Cap on stored group elements in the brute-force search.
const BFS_NODE_LIMIT: usize = 4_000_000;

#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub target: DenseUnitary,
    pub cost: CostFunctional,
    pub region: AllowedRegion,
    pub horizon: f64,
    pub segments: usize,
    pub endpoint_tolerance: f64,
}

impl OptimizationProblem {
    /// Defaults `T = 2π`, `K = 16`, tolerance `1e-6`.
    pub fn new(target: DenseUnitary, cost: CostFunctional, region: AllowedRegion) -> Self {
        Self { target, cost, region, horizon: 2.0 * PI, segments: 16, endpoint_tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub seed: u64,
    pub restarts: usize,
    /// Compass sweeps per penalty stage.
    pub max_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { seed: 0, restarts: 4, max_iterations: 300 }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub best_cost: f64,
    pub trajectory: ControlTrajectory,
    /// Spectral-norm distance of the endpoint to the target, no phase
    /// minimisation.
    pub endpoint_error: f64,
    pub restarts_used: usize,
    pub converged: bool,
    /// Best converged cost after each restart; `None` until one converges.
    pub best_after_restart: Vec<Option<f64>>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best_cost: f64,
    pub endpoint_error: f64,
    pub converged: bool,
    pub restarts_used: usize,
    pub best_after_restart: Vec<Option<f64>>,
    pub seed: u64,
    pub trajectory: TrajectoryFile,
}

impl OptimizationResult {
    pub fn report(&self) -> OptimizationReport {
        OptimizationReport {
            best_cost: self.best_cost,
            endpoint_error: self.endpoint_error,
            converged: self.converged,
            restarts_used: self.restarts_used,
            best_after_restart: self.best_after_restart.clone(),
            seed: self.seed,
            trajectory: self.trajectory.to_file(),
        }
    }
}

enum Parameterisation {
    Generators { words: Vec<PauliWord>, weights: Vec<usize>, dense: Vec<CMatrix>, region_cost: CostFunctional },
    Drift { system: DriftSystem, h1: CMatrix, h2: CMatrix },
}

impl Parameterisation {
    fn per_segment(&self) -> usize {
        match self {
            Self::Generators { words, .. } => words.len(),
            Self::Drift { .. } => 2,
        }
    }
}

struct Evaluator<'a> {
    problem: &'a OptimizationProblem,
    param: Parameterisation,
    n: usize,
}

#[derive(Debug, Clone, Copy)]
struct Evaluation {
    cost: f64,
    time: f64,
    error: f64,
}

/// `exp(-i a)` for Hermitian `a`; traceless 2x2 inputs use the closed form.
fn propagator(a: &CMatrix) -> CMatrix {
    if a.nrows() == 2 && (a[(0, 0)] + a[(1, 1)]).norm() < 1e-14 {
        let r2 = (a * a)[(0, 0)].re.max(0.0);
        let r = r2.sqrt();
        let sinc = if r < 1e-8 { 1.0 - r2 / 6.0 } else { r.sin() / r };
        return CMatrix::identity(2, 2) * c(r.cos()) + a * Complex64::new(0.0, -sinc);
    }
    expm_hermitian(a, 1.0)
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a OptimizationProblem) -> Result<Self> {
        let n = problem.target.n();
        if problem.region.n() != n {
            return Err(Error::LengthMismatch(n, problem.region.n()));
        }
        if problem.segments == 0 || problem.segments > MAX_SEGMENTS {
            return Err(Error::InvalidParameter(format!("segment count {} outside 1..={MAX_SEGMENTS}", problem.segments)));
        }
        if !(problem.endpoint_tolerance > 0.0) || !(problem.horizon > 0.0) {
            return Err(Error::InvalidParameter("endpoint tolerance and horizon must be positive".into()));
        }
        let param = match &problem.region {
            AllowedRegion::UnitCost { cost, .. } => {
                let words: Vec<PauliWord> = match cost.kind() {
                    CostKind::Subriemannian => PauliWord::up_to_weight(n, 2),
                    _ => PauliWord::all(n).filter(|w| !w.is_identity()).collect(),
                };
                let dense = words.iter().map(PauliWord::dense).collect();
                let weights = words.iter().map(PauliWord::weight).collect();
                Parameterisation::Generators { words, weights, dense, region_cost: *cost }
            }
            AllowedRegion::Drift(d) => Parameterisation::Drift { system: d.clone(), h1: d.drift().dense(), h2: d.control().dense() },
            AllowedRegion::Declared { .. } => {
                return Err(Error::InvalidParameter("declared regions cannot be optimised over".into()));
            }
        };
        Ok(Self { problem, param, n })
    }

    fn dim(&self) -> usize {
        self.problem.segments * self.param.per_segment()
    }

    /// Segment Hamiltonians and durations; zero-length segments are dropped.
    fn decode(&self, x: &[f64]) -> Result<ControlTrajectory> {
        let mut tr = ControlTrajectory::new(self.n);
        let m = self.param.per_segment();
        for chunk in x.chunks(m) {
            match &self.param {
                Parameterisation::Generators { words, region_cost, .. } => {
                    let a = PauliExpansion::from_terms(self.n, words.iter().cloned().zip(chunk.iter().copied()))?;
                    let rate = region_cost.cost_rate(&a)?;
                    if rate > 1e-14 {
                        tr.push_constant(a.scaled(1.0 / rate), rate)?;
                    }
                }
                Parameterisation::Drift { system, .. } => {
                    let (alpha, tau) = (chunk[0].clamp(-1.0, 1.0), chunk[1].abs());
                    if tau > 1e-14 {
                        tr.push_constant(system.hamiltonian(alpha)?, tau)?;
                    }
                }
            }
        }
        Ok(tr)
    }

    fn evaluate(&self, x: &[f64]) -> Evaluation {
        let d = 1usize << self.n;
        let mut u = CMatrix::identity(d, d);
        let (mut cost, mut time) = (0.0, 0.0);
        let m = self.param.per_segment();
        for chunk in x.chunks(m) {
            match &self.param {
                Parameterisation::Generators { weights, dense, region_cost, .. } => {
                    let pairs = || weights.iter().copied().zip(chunk.iter().copied());
                    let tau = region_cost.rate_of(pairs());
                    if tau <= 1e-14 {
                        continue;
                    }
                    let mut gen = CMatrix::zeros(d, d);
                    for (w, &coef) in dense.iter().zip(chunk) {
                        if coef != 0.0 {
                            gen += w * c(coef);
                        }
                    }
                    u = propagator(&gen) * u;
                    // rates are homogeneous of degree one
                    cost += match self.problem.cost.kind() {
                        CostKind::TimeOptimal => tau,
                        _ => self.problem.cost.rate_of(pairs()),
                    };
                    time += tau;
                }
                Parameterisation::Drift { h1, h2, .. } => {
                    let (alpha, tau) = (chunk[0].clamp(-1.0, 1.0), chunk[1].abs());
                    if tau <= 1e-14 {
                        continue;
                    }
                    let h = h1 + h2 * c(alpha);
                    u = expm_hermitian(&h, tau) * u;
                    let rate = match self.problem.cost.kind() {
                        CostKind::TimeOptimal => 1.0,
                        _ => self.problem.cost.cost_rate(&expand_drift(&self.param, alpha)).unwrap_or(f64::INFINITY),
                    };
                    cost += tau * rate;
                    time += tau;
                }
            }
        }
        Evaluation { cost, time, error: distance(&u, self.problem.target.matrix()) }
    }

    fn objective(&self, e: &Evaluation, mu: f64) -> f64 {
        let tol = 0.5 * self.problem.endpoint_tolerance;
        e.cost + mu * (e.error - tol).max(0.0) + mu * (e.time - self.problem.horizon).max(0.0)
    }

    /// Minimal traceless logarithm of the target split evenly over the
    /// segments, when the target has unit determinant and its logarithm
    /// uses only allowed words.
    fn warm_start(&self) -> Option<Vec<f64>> {
        let Parameterisation::Generators { words, .. } = &self.param else {
            return None;
        };
        let log = hermitian_log_traceless(&self.problem.target).ok()?;
        let e = expand(&log).ok()?;
        if e.terms().any(|(w, coef)| coef.abs() > 1e-9 && !words.contains(w)) {
            return None;
        }
        let k = self.problem.segments as f64;
        let chunk: Vec<f64> = words.iter().map(|w| e.coefficient(w) / k).collect();
        Some((0..self.problem.segments).flat_map(|_| chunk.iter().copied()).collect())
    }

    fn random_start(&self, rng: &mut Rng) -> Vec<f64> {
        let k = self.problem.segments;
        match &self.param {
            Parameterisation::Generators { words, .. } => {
                let scale = 1.0 / (k as f64 * (words.len() as f64).sqrt());
                (0..self.dim()).map(|_| sampling::normal(rng) * scale).collect()
            }
            Parameterisation::Drift { .. } => {
                let tau = self.problem.horizon / (2.0 * k as f64);
                (0..k).flat_map(|_| [rng.random_range(-1.0..=1.0), tau * rng.random::<f64>()]).collect()
            }
        }
    }

    /// Compass search at each penalty weight in turn, stopping after the
    /// first stage that meets the tolerance.
    fn descend(&self, mut x: Vec<f64>, max_iterations: usize) -> Vec<f64> {
        let initial_step = match self.param {
            Parameterisation::Generators { .. } => 0.25 / self.problem.segments as f64,
            Parameterisation::Drift { .. } => 0.25,
        };
        for &mu in &PENALTY_SCHEDULE {
            let mut best = self.objective(&self.evaluate(&x), mu);
            let mut step = initial_step;
            for _ in 0..max_iterations {
                let mut improved = false;
                for i in 0..x.len() {
                    for sign in [1.0, -1.0] {
                        let old = x[i];
                        x[i] = old + sign * step;
                        let f = self.objective(&self.evaluate(&x), mu);
                        if f < best {
                            best = f;
                            improved = true;
                            break;
                        }
                        x[i] = old;
                    }
                }
                if !improved {
                    step *= 0.5;
                    if step < MIN_STEP {
                        break;
                    }
                }
            }
            if self.evaluate(&x).error <= self.problem.endpoint_tolerance {
                break;
            }
        }
        x
    }
}

fn expand_drift(param: &Parameterisation, alpha: f64) -> PauliExpansion {
    match param {
        Parameterisation::Drift { system, .. } => system.hamiltonian(alpha).expect("clamped amplitude"),
        Parameterisation::Generators { .. } => unreachable!("drift only"),
    }
}

/// Seeded multi-restart estimate of `C(target)`.
///
/// Restart 0 starts from the minimal traceless logarithm when one is
/// available; the remaining restarts start at random. The result is an upper
/// estimate of the optimal cost only when `converged` is true.
pub fn minimize_cost(p: &OptimizationProblem, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    crate::config::check_qubits(p.target.n())?;
    let ev = Evaluator::new(p)?;
    let n = p.target.n();
    let d = 1usize << n;
    let identity_error = distance(&CMatrix::identity(d, d), p.target.matrix());
    if identity_error <= p.endpoint_tolerance {
        return Ok(OptimizationResult {
            best_cost: 0.0,
            trajectory: ControlTrajectory::new(n),
            endpoint_error: identity_error,
            restarts_used: 0,
            converged: true,
            best_after_restart: Vec::new(),
            seed: cfg.seed,
        });
    }
    let restarts = cfg.restarts.max(1);
    let warm = ev.warm_start();
    let outcomes: Vec<(Vec<f64>, Evaluation)> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let start = match (&warm, k) {
                (Some(w), 0) => w.clone(),
                _ => ev.random_start(&mut Rng::seed_from_u64(cfg.seed.wrapping_add(k as u64))),
            };
            let x = ev.descend(start, cfg.max_iterations);
            let e = ev.evaluate(&x);
            (x, e)
        })
        .collect();

    let tol = p.endpoint_tolerance;
    let ok = |e: &Evaluation| e.error <= tol && e.time <= p.horizon + 1e-12;
    let mut best: Option<usize> = None;
    let mut history = Vec::with_capacity(restarts);
    let mut best_converged: Option<f64> = None;
    for (k, (_, e)) in outcomes.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let eb = &outcomes[b].1;
                match (ok(e), ok(eb)) {
                    (true, false) => true,
                    (false, true) => false,
                    (true, true) => e.cost < eb.cost,
                    (false, false) => ev.objective(e, 1e5) < ev.objective(eb, 1e5),
                }
            }
        };
        if better {
            best = Some(k);
        }
        if ok(e) {
            best_converged = Some(best_converged.map_or(e.cost, |b: f64| b.min(e.cost)));
        }
        history.push(best_converged);
    }
    let (x, e) = &outcomes[best.expect("at least one restart")];
    Ok(OptimizationResult {
        best_cost: e.cost,
        trajectory: ev.decode(x)?,
        endpoint_error: e.error,
        restarts_used: restarts,
        converged: ok(e),
        best_after_restart: history,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpConfig {
    pub samples: usize,
    pub seed: u64,
    pub segments: usize,
    pub optimizer: OptimizerConfig,
}

impl Default for TpConfig {
    fn default() -> Self {
        Self { samples: 200, seed: 0, segments: 2, optimizer: OptimizerConfig { seed: 0, restarts: 1, max_iterations: 40 } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpEstimate {
    pub estimate: f64,
    pub samples: usize,
    pub converged_samples: usize,
    pub max_endpoint_error: f64,
}

/// Upper estimate of `T_P`: the largest time-optimal cost over Haar-random
/// SU(2) and SU(4) targets, using preferred controls on the target's
/// subsystem. Unit-cost regions are optimised on the subsystem itself; drift
/// regions act on the whole register with the target on qubits 1 (and 2).
pub fn estimate_tp(region: &AllowedRegion, splitting: &Splitting, cfg: &TpConfig) -> Result<TpEstimate> {
    let n = region.n();
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let sizes: Vec<usize> = if n >= 2 { vec![1, 2] } else { vec![1] };
    let jobs: Vec<(usize, DenseUnitary)> = (0..cfg.samples.max(1))
        .map(|k| {
            let size = sizes[k % sizes.len()];
            (size, sampling::haar_special_unitary(&mut rng, size))
        })
        .collect();
    let results = jobs
        .par_iter()
        .map(|(size, target)| {
            let (sub_region, full_target) = match region {
                AllowedRegion::UnitCost { cost, .. } => {
                    let preferred = match (splitting.kind(), cost.kind()) {
                        (SplittingKind::TwoLocalTruncation, _) | (_, CostKind::Subriemannian) => CostFunctional::subriemannian(),
                        _ => *cost,
                    };
                    (AllowedRegion::unit_cost(*size, preferred)?, target.clone())
                }
                AllowedRegion::Drift(_) => {
                    let rest = n - size;
                    let m = crate::dense::kron(target.matrix(), &CMatrix::identity(1 << rest, 1 << rest));
                    (region.clone(), DenseUnitary::from_product(n, m))
                }
                AllowedRegion::Declared { .. } => {
                    return Err(Error::InvalidParameter("T_P needs a unit-cost or drift region".into()));
                }
            };
            let mut p = OptimizationProblem::new(full_target, CostFunctional::time_optimal(), sub_region);
            p.segments = cfg.segments;
            minimize_cost(&p, &cfg.optimizer)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TpEstimate {
        estimate: results.iter().map(|r| r.best_cost).fold(0.0, f64::max),
        samples: results.len(),
        converged_samples: results.iter().filter(|r| r.converged).count(),
        max_endpoint_error: results.iter().map(|r| r.endpoint_error).fold(0.0, f64::max),
    })
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)])
}

pub fn t_gate() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), Complex64::from_polar(1.0, PI / 4.0)])
}

/// Phase-canonical rounded key: the matrix divided by the phase of its
/// first entry of magnitude above `1/(2√d)`.
fn phase_key(m: &CMatrix) -> Vec<i64> {
    let threshold = 0.5 / (m.nrows() as f64).sqrt();
    let pivot = m.iter().find(|z| z.norm() > threshold).copied().unwrap_or(c(1.0));
    let phase = pivot.conj() / pivot.norm();
    m.iter()
        .flat_map(|z| {
            let w = z * phase;
            [(w.re * 1e8).round() as i64, (w.im * 1e8).round() as i64]
        })
        .collect()
}

/// Minimal number of gates from `gate_set` whose product is within
/// phase-invariant distance `eps` of `target`, by breadth-first search up to
/// `max_length`. `None` when no product of at most `max_length` gates works.
pub fn brute_force_gate_complexity(target: &CMatrix, gate_set: &[CMatrix], eps: f64, max_length: usize) -> Option<usize> {
    let d = target.nrows();
    let identity = CMatrix::identity(d, d);
    if phase_invariant_distance(target, &identity) <= eps {
        return Some(0);
    }
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    seen.insert(phase_key(&identity));
    let mut frontier = vec![identity];
    for length in 1..=max_length {
        let mut next = Vec::new();
        for m in &frontier {
            for g in gate_set {
                let v = g * m;
                if phase_invariant_distance(target, &v) <= eps {
                    return Some(length);
                }
                if seen.insert(phase_key(&v)) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() || seen.len() > BFS_NODE_LIMIT {
            if seen.len() > BFS_NODE_LIMIT {
                log::warn!("gate search stopped at length {length}: node limit reached");
            }
            return None;
        }
        frontier = next;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Part1Config {
    pub optimizer: OptimizerConfig,
    pub segments: usize,
    pub tp: TpConfig,
    pub max_length: usize,
    /// Skips the `T_P` estimate when given.
    pub t_p: Option<f64>,
}

impl Default for Part1Config {
    fn default() -> Self {
        Self { optimizer: OptimizerConfig::default(), segments: 4, tp: TpConfig::default(), max_length: 40, t_p: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Part1Report {
    pub c_estimate: f64,
    pub endpoint_error: f64,
    pub converged: bool,
    pub g_epsilon: Option<usize>,
    pub eps: f64,
    pub c_p: f64,
    pub t_p: f64,
    /// `c_P T_P G_ε`.
    pub bound: f64,
    pub slack: f64,
    pub slack_rule: String,
    pub holds: bool,
}

/// Checks `C(U) ≤ c_P T_P G_ε + slack` for a single-qubit SU(2) target.
///
/// An ε-approximation `V` leaves a residual `W = U V†`. With `G ≥ 1` the sign
/// of `V` in SU(2) is free, so `W` can be taken within rotation angle
/// `2 arcsin(ε/2)` of the identity and costs at most `c_P` times that. With
/// `G = 0`, `W = U` and the slack is `c_P · 2 arcsin(‖U - I‖/2)`.
pub fn part1_crosscheck(target: &DenseUnitary, cost: &CostFunctional, gate_set: &[CMatrix], eps: f64, cfg: &Part1Config) -> Result<Part1Report> {
    if target.n() != 1 {
        return Err(Error::Dimension { expected: 2, got: target.dim() });
    }
    let region_cost = if cost.kind() == CostKind::TimeOptimal { CostFunctional::subriemannian() } else { *cost };
    let region = AllowedRegion::unit_cost(1, region_cost)?;
    let mut problem = OptimizationProblem::new(target.clone(), *cost, region.clone());
    problem.segments = cfg.segments;
    let opt = minimize_cost(&problem, &cfg.optimizer)?;
    let g = brute_force_gate_complexity(target.matrix(), gate_set, eps, cfg.max_length);
    let c_p = 1.0;
    let t_p = match cfg.t_p {
        Some(t) => t,
        None => estimate_tp(&region, &crate::control::make_standard_splitting(SplittingKind::Trivial), &cfg.tp)?.estimate,
    };
    let (slack, slack_rule) = match g {
        Some(0) => {
            let r = distance(target.matrix(), &CMatrix::identity(2, 2)).min(2.0);
            (c_p * 2.0 * (r / 2.0).asin(), "G=0: c_P * 2 asin(|U - I| / 2)".to_string())
        }
        _ => (c_p * 2.0 * (eps / 2.0).min(1.0).asin(), "G>=1: c_P * 2 asin(eps / 2)".to_string()),
    };
    let bound = g.map_or(f64::INFINITY, |g| c_p * t_p * g as f64);
    let holds = g.is_some() && opt.converged && opt.best_cost <= bound + slack + 1e-9;
    Ok(Part1Report {
        c_estimate: opt.best_cost,
        endpoint_error: opt.endpoint_error,
        converged: opt.converged,
        g_epsilon: g,
        eps,
        c_p,
        t_p,
        bound,
        slack,
        slack_rule,
        holds,
    })
}
