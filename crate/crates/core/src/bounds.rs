//! Splitting constants, the Δ-averaging estimate, first-order product-formula
//! synthesis and the compilation error ledger.

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{
    evolve, minimal_allowed_cost, project_trajectory, trajectory_cost, AllowedRegion, ControlTrajectory, CostFunctional,
    CostKind, Splitting, SplittingKind,
};
use crate::dense::{apply_local, c, distance, expm_hermitian, spectral_norm, CMatrix, DenseUnitary};
use crate::pauli::{PauliExpansion, PauliWord};
use crate::sampling::Rng;
use crate::{Error, Result};

/// Smallest accepted per-window synthesis accuracy.
pub const SYNTHESIS_FLOOR: f64 = 1e-12;
/// Cap on Trotter repetitions per window.
pub const MAX_TROTTER_STEPS: u64 = 1 << 32;
/// Pieces shorter than this are dropped when cutting segments into windows.
const TIME_EPS: f64 = 1e-14;

/// `2(e^x - 1 - x)` with `x = N_P Δ`.
pub fn lemma1_bound(n_p: f64, delta: f64) -> f64 {
    let x = n_p * delta;
    if x < 0.5 {
        // series keeps full relative precision for small x
        let mut term = x * x / 2.0;
        let mut sum = 0.0;
        let mut k = 2.0;
        while term > sum * 1e-18 && term > 0.0 {
            sum += term;
            k += 1.0;
            term *= x / k;
        }
        2.0 * sum
    } else {
        2.0 * (x.exp_m1() - x)
    }
}

/// One averaging window of a trajectory.
#[derive(Debug, Clone)]
pub struct AveragedWindow {
    pub start: f64,
    pub duration: f64,
    /// Duration-weighted mean of `H(t)` over the window.
    pub average: PauliExpansion,
    /// Exact evolution over the window.
    pub exact: DenseUnitary,
    /// `max ‖H(t)‖` over the window.
    pub max_norm: f64,
}

impl AveragedWindow {
    /// `‖U_exact - exp(-i H̄ Δ)‖`.
    pub fn averaging_error(&self) -> f64 {
        distance(self.exact.matrix(), &expm_hermitian(&self.average.dense(), self.duration))
    }

    pub fn lemma1_bound(&self) -> f64 {
        lemma1_bound(self.max_norm, self.duration)
    }
}

/// Cuts `tr` into windows of length `delta`; the last window is shorter when
/// `delta` does not divide `T`.
pub fn delta_average(tr: &ControlTrajectory, delta: f64) -> Result<Vec<AveragedWindow>> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("window length must be positive, got {delta}")));
    }
    let total = tr.total_time();
    if tr.is_empty() {
        return Ok(Vec::new());
    }
    let count = ((total / delta) - 1e-9).ceil().max(1.0) as usize;
    let mut bounds: Vec<f64> = (0..=count).map(|j| (j as f64 * delta).min(total)).collect();
    bounds[count] = total;

    let mut starts = Vec::with_capacity(tr.segments().len());
    let mut t = 0.0;
    for s in tr.segments() {
        starts.push(t);
        t += s.duration;
    }
    let norms: Vec<f64> = tr.segments().par_iter().map(|s| spectral_norm(&s.hamiltonian.dense())).collect();

    let n = tr.n();
    let windows = (0..count)
        .into_par_iter()
        .map(|j| {
            let (a, b) = (bounds[j], bounds[j + 1]);
            let len = b - a;
            let d = 1usize << n;
            let mut exact = CMatrix::identity(d, d);
            let mut average = PauliExpansion::zero(n);
            let mut max_norm: f64 = 0.0;
            for (k, s) in tr.segments().iter().enumerate() {
                let (s0, s1) = (starts[k], starts[k] + s.duration);
                let piece = s1.min(b) - s0.max(a);
                if piece <= TIME_EPS {
                    continue;
                }
                exact = expm_hermitian(&s.hamiltonian.dense(), piece) * exact;
                average = average.add_scaled(&s.hamiltonian, piece / len)?;
                max_norm = max_norm.max(norms[k]);
            }
            Ok(AveragedWindow {
                start: a,
                duration: len,
                average,
                exact: DenseUnitary::from_product(n, exact),
                max_norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(windows)
}

/// A one- or two-qubit gate with 0-based target qubits; `targets[0]` is the
/// most significant qubit of `matrix`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub targets: Vec<usize>,
    pub matrix: CMatrix,
}

/// `gates` applied in order, `repeat` times.
#[derive(Debug, Clone, PartialEq)]
pub struct GateBlock {
    pub repeat: u64,
    pub gates: Vec<Gate>,
}

/// A gate circuit stored as repeated blocks, so long product formulas stay
/// compact.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSequence {
    n: usize,
    blocks: Vec<GateBlock>,
}

impl GateSequence {
    pub fn new(n: usize) -> Self {
        Self { n, blocks: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[GateBlock] {
        &self.blocks
    }

    /// Appends a block after validating targets and unitarity.
    pub fn push_block(&mut self, block: GateBlock) -> Result<()> {
        for g in &block.gates {
            let k = g.targets.len();
            if !(1..=2).contains(&k) || g.targets.iter().any(|&q| q >= self.n) || (k == 2 && g.targets[0] == g.targets[1]) {
                return Err(Error::InvalidParameter(format!("bad gate targets {:?} on {} qubits", g.targets, self.n)));
            }
            if g.matrix.nrows() != 1 << k || g.matrix.ncols() != 1 << k {
                return Err(Error::Dimension { expected: 1 << k, got: g.matrix.nrows() });
            }
            DenseUnitary::new(g.matrix.clone())?;
        }
        if block.repeat > 0 && !block.gates.is_empty() {
            self.blocks.push(block);
        }
        Ok(())
    }

    pub fn append(&mut self, other: GateSequence) {
        self.blocks.extend(other.blocks);
    }

    pub fn gate_count(&self) -> u64 {
        self.blocks.iter().map(|b| b.repeat * b.gates.len() as u64).sum()
    }

    /// Gates in application order.
    pub fn gates(&self) -> impl Iterator<Item = &Gate> + '_ {
        self.blocks.iter().flat_map(|b| (0..b.repeat).flat_map(move |_| b.gates.iter()))
    }

    /// The circuit unitary; each block is formed once and raised to its
    /// repeat count by squaring.
    pub fn unitary(&self) -> DenseUnitary {
        let d = 1usize << self.n;
        let mut u = CMatrix::identity(d, d);
        for b in &self.blocks {
            let mut step = CMatrix::identity(d, d);
            for g in &b.gates {
                apply_local(&mut step, self.n, &g.targets, &g.matrix);
            }
            u = matrix_power(&step, b.repeat) * u;
        }
        DenseUnitary::from_product(self.n, u)
    }

    pub fn to_file(&self) -> GateSequenceFile {
        GateSequenceFile {
            n: self.n,
            gate_count: self.gate_count(),
            blocks: self
                .blocks
                .iter()
                .map(|b| GateBlockFile {
                    repeat: b.repeat,
                    gates: b
                        .gates
                        .iter()
                        .map(|g| GateFile {
                            targets: g.targets.iter().map(|q| q + 1).collect(),
                            matrix: (0..g.matrix.nrows())
                                .map(|r| (0..g.matrix.ncols()).map(|k| [g.matrix[(r, k)].re, g.matrix[(r, k)].im]).collect())
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &GateSequenceFile) -> Result<Self> {
        let mut seq = Self::new(file.n);
        for b in &file.blocks {
            let gates = b
                .gates
                .iter()
                .map(|g| {
                    let size = g.matrix.len();
                    if g.targets.contains(&0) {
                        return Err(Error::InvalidParameter("gate targets are 1-based".into()));
                    }
                    let matrix = CMatrix::from_fn(size, size, |r, k| {
                        let [re, im] = g.matrix[r].get(k).copied().unwrap_or([f64::NAN, f64::NAN]);
                        num_complex::Complex64::new(re, im)
                    });
                    Ok(Gate { targets: g.targets.iter().map(|q| q - 1).collect(), matrix })
                })
                .collect::<Result<Vec<_>>>()?;
            seq.push_block(GateBlock { repeat: b.repeat, gates })?;
        }
        Ok(seq)
    }
}

/// JSON form of a [`GateSequence`]: targets are 1-based, matrices row-major
/// lists of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSequenceFile {
    pub n: usize,
    pub gate_count: u64,
    pub blocks: Vec<GateBlockFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateBlockFile {
    pub repeat: u64,
    pub gates: Vec<GateFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateFile {
    pub targets: Vec<usize>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

fn matrix_power(m: &CMatrix, mut k: u64) -> CMatrix {
    let d = m.nrows();
    let mut result = CMatrix::identity(d, d);
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &base * &result;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Output of [`trotter_synthesize`].
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub gates: GateSequence,
    pub steps: u64,
    /// `(Δ²/2r) Σ_{j<k} ‖[h_j σ_j, h_k σ_k]‖`.
    pub certified_error: f64,
}

/// `Σ_{j<k} ‖[h_j σ_j, h_k σ_k]‖`: anticommuting words give `2|h_j h_k|`,
/// commuting words nothing.
pub fn commutator_sum(h: &PauliExpansion) -> f64 {
    let terms: Vec<(&PauliWord, f64)> = h.terms().collect();
    let mut sum = 0.0;
    for (j, (a, ha)) in terms.iter().enumerate() {
        for (b, hb) in &terms[j + 1..] {
            if !a.commutes_with(b) {
                sum += 2.0 * (ha * hb).abs();
            }
        }
    }
    sum
}

/// `exp(-i θ σ) = cos θ I - i sin θ σ` on the support of `σ`.
fn pauli_rotation(word: &PauliWord, theta: f64) -> Gate {
    let targets = word.support();
    let local = word.restrict(&targets).dense();
    let d = local.nrows();
    let matrix = CMatrix::identity(d, d) * c(theta.cos()) + local * num_complex::Complex64::new(0.0, -theta.sin());
    Gate { targets, matrix }
}

/// First-order Lie-Trotter circuit for `exp(-i H̄ Δ)` with accuracy `δ`.
///
/// Terms are taken in lexicographic word order; `r` is the least integer
/// with `(Δ²/2r) Σ_{j<k} ‖[h_j σ_j, h_k σ_k]‖ ≤ δ`.
pub fn trotter_synthesize(h: &PauliExpansion, delta: f64, small_delta: f64) -> Result<Synthesis> {
    if let Some((w, _)) = h.terms().find(|(w, _)| w.weight() > 2) {
        return Err(Error::NotTwoLocal(w.to_string()));
    }
    if !(small_delta >= SYNTHESIS_FLOOR) {
        return Err(Error::InvalidParameter(format!(
            "synthesis accuracy {small_delta:e} below the floor {SYNTHESIS_FLOOR:e}"
        )));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("evolution time must be nonnegative, got {delta}")));
    }
    let n = h.n();
    let mut gates = GateSequence::new(n);
    if h.is_empty() || delta == 0.0 {
        return Ok(Synthesis { gates, steps: 0, certified_error: 0.0 });
    }
    let s = commutator_sum(h);
    let need = (delta * delta * s / (2.0 * small_delta)).ceil().max(1.0);
    if need > MAX_TROTTER_STEPS as f64 {
        return Err(Error::TooManySteps(need as u64));
    }
    let steps = need as u64;
    let certified_error = delta * delta * s / (2.0 * steps as f64);
    let block = GateBlock {
        repeat: steps,
        gates: h.terms().map(|(w, coef)| pauli_rotation(w, coef * delta / steps as f64)).collect(),
    };
    gates.push_block(block)?;
    Ok(Synthesis { gates, steps, certified_error })
}

/// Additive decomposition of `‖U - U_A‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorLedger {
    /// `∫ ‖H(t) - H_P(t)‖ dt`, exact per segment.
    pub projection_error: f64,
    /// Sum of the per-window Δ-averaging bounds.
    pub averaging_error: f64,
    /// `δ` per window.
    pub synthesis_error: f64,
    pub total_bound: f64,
    /// `‖U - U_A‖` for the emitted circuit.
    pub measured_error: f64,
    pub gate_count: u64,
    pub delta: f64,
    pub small_delta: f64,
    pub seed: u64,
}

impl ErrorLedger {
    /// `measured_error ≤ total_bound` within `1e-8`.
    pub fn is_sound(&self) -> bool {
        self.measured_error <= self.total_bound + 1e-8
    }
}

/// `∫ ‖H(t) - P(H(t))‖ dt` over the segments of `tr`.
pub fn projection_integral(s: &Splitting, tr: &ControlTrajectory) -> f64 {
    tr.segments()
        .par_iter()
        .map(|seg| {
            let residual = seg.hamiltonian.add_scaled(&s.project(&seg.hamiltonian), -1.0).expect("same n");
            if residual.is_empty() {
                0.0
            } else {
                spectral_norm(&residual.dense()) * seg.duration
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, |a, b| a + b)
}

/// Project, Δ-average and synthesize `tr`, measuring the result against the
/// exact evolution.
pub fn compile(
    tr: &ControlTrajectory,
    s: &Splitting,
    _cost: &CostFunctional,
    delta: f64,
    small_delta: f64,
) -> Result<(GateSequence, ErrorLedger)> {
    if !(small_delta > 0.0) {
        return Err(Error::InvalidParameter(format!("synthesis accuracy must be positive, got {small_delta}")));
    }
    let projected = project_trajectory(s, tr);
    if let Some(seg) = projected.segments().iter().find(|seg| !seg.hamiltonian.is_two_local()) {
        let w = seg.hamiltonian.terms().find(|(w, _)| w.weight() > 2).map(|(w, _)| w.to_string()).unwrap_or_default();
        return Err(Error::NotTwoLocal(w));
    }
    let projection_error = projection_integral(s, tr);
    let windows = delta_average(&projected, delta)?;
    let synths = windows
        .par_iter()
        .map(|w| trotter_synthesize(&w.average, w.duration, small_delta))
        .collect::<Result<Vec<_>>>()?;
    let mut gates = GateSequence::new(tr.n());
    for syn in synths {
        gates.append(syn.gates);
    }
    let averaging_error = windows.iter().map(AveragedWindow::lemma1_bound).fold(0.0, |a, b| a + b);
    let synthesis_error = small_delta * windows.len() as f64;
    let measured_error = distance(evolve(tr).matrix(), gates.unitary().matrix());
    let ledger = ErrorLedger {
        projection_error,
        averaging_error,
        synthesis_error,
        total_bound: projection_error + averaging_error + synthesis_error,
        measured_error,
        gate_count: gates.gate_count(),
        delta,
        small_delta,
        seed: 0,
    };
    Ok((gates, ledger))
}

/// Empirical and analytic values of `R = max ‖H - P(H)‖ / c(H)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub empirical_max: f64,
    /// `None` when no closed form applies.
    pub analytic_bound: Option<f64>,
    pub samples: usize,
}

/// Closed-form bound on `R`: 0 when `P` is the identity on the region,
/// `2^n/p` for the Riemannian penalty and `1/p` for the ℓ1 penalty under
/// two-local truncation.
pub fn analytic_r(c: &CostFunctional, s: &Splitting, n: usize) -> Option<f64> {
    match (s.kind(), c.kind()) {
        (SplittingKind::Trivial, _) => Some(0.0),
        (SplittingKind::TwoLocalTruncation, CostKind::Subriemannian) => Some(0.0),
        (SplittingKind::TwoLocalTruncation, CostKind::RiemannianPenalty) => Some((1u64 << n) as f64 / c.penalty()),
        (SplittingKind::TwoLocalTruncation, CostKind::L1Penalty) => Some(1.0 / c.penalty()),
        (SplittingKind::TwoLocalTruncation, CostKind::TimeOptimal) => None,
    }
}

pub fn compute_r(c: &CostFunctional, s: &Splitting, region: &AllowedRegion, samples: usize, seed: u64) -> Result<RatioEstimate> {
    let analytic_bound = analytic_r(c, s, region.n());
    let mut rng = Rng::seed_from_u64(seed);
    let members = (0..samples).map(|_| region.sample(&mut rng)).collect::<Result<Vec<_>>>()?;
    let empirical_max = members
        .par_iter()
        .map(|h| {
            let rate = c.cost_rate(h)?;
            let residual = h.add_scaled(&s.project(h), -1.0)?;
            if residual.is_empty() || rate <= 0.0 {
                return Ok(0.0);
            }
            Ok(spectral_norm(&residual.dense()) / rate)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(RatioEstimate { empirical_max, analytic_bound, samples })
}

/// The constants entering both parts of the cost/gate-count comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplittingConstants {
    pub c_p: f64,
    pub t_p: f64,
    pub r: f64,
    pub n_p: f64,
    pub c_a: f64,
}

/// Seeded sample maxima reported next to the analytic constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstants {
    pub c_p_max: f64,
    pub n_p_max: f64,
    pub r_max: f64,
    pub t_p_samples: usize,
    pub t_p_max_endpoint_error: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub constants: SplittingConstants,
    pub empirical: EmpiricalConstants,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsConfig {
    pub samples: usize,
    pub seed: u64,
    pub tp: crate::optimize::TpConfig,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self { samples: 1000, seed: 0, tp: crate::optimize::TpConfig::default() }
    }
}

/// `max ‖H‖` over two-local `H` with `Σ h_σ² = 1` is at most `(√3/2) n`.
pub fn two_local_norm_bound(n: usize) -> f64 {
    3f64.sqrt() / 2.0 * n as f64
}

/// Analytic `N_P` for the preferred set of a unit-cost region.
fn analytic_np(preferred_cost: &CostFunctional, s: &Splitting, n: usize) -> f64 {
    match (preferred_cost.kind(), s.kind()) {
        // ‖H‖ ≤ Σ|h_σ| ≤ c(H)
        (CostKind::L1Penalty, _) => 1.0,
        (CostKind::Subriemannian, _) | (_, SplittingKind::TwoLocalTruncation) => two_local_norm_bound(n),
        // heavy part: ‖H''‖ ≤ Σ''|h| ≤ 2^n (Σ'' h²)^{1/2} ≤ 2^n / p
        _ => two_local_norm_bound(n) + (1u64 << n) as f64 / preferred_cost.penalty(),
    }
}

/// A seeded member of the preferred set `ℋ_P`.
fn sample_preferred(region: &AllowedRegion, s: &Splitting, rng: &mut Rng) -> Result<PauliExpansion> {
    let h = region.sample(rng)?;
    let p = s.project(&h);
    match region {
        AllowedRegion::UnitCost { cost, .. } if !p.is_empty() => {
            let rate = cost.cost_rate(&p)?;
            Ok(p.scaled(1.0 / rate))
        }
        AllowedRegion::UnitCost { .. } => sample_preferred(region, s, rng),
        _ => Ok(p),
    }
}

/// `c_P, T_P, R, N_P, c_A` for a cost, splitting and allowed region.
pub fn estimate_constants(c: &CostFunctional, s: &Splitting, region: &AllowedRegion, cfg: &ConstantsConfig) -> Result<ConstantsReport> {
    let n = region.n();
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let preferred = (0..cfg.samples.max(1)).map(|_| sample_preferred(region, s, &mut rng)).collect::<Result<Vec<_>>>()?;
    let rates = preferred.iter().map(|h| c.cost_rate(h)).collect::<Result<Vec<f64>>>()?;
    let c_p_max = rates.iter().copied().fold(0.0, f64::max);
    let n_p_max = preferred.par_iter().map(|h| spectral_norm(&h.dense())).reduce(|| 0.0, f64::max);

    let (c_p, n_p) = match region {
        AllowedRegion::UnitCost { cost, .. } if c.kind() == CostKind::TimeOptimal || cost == c => (1.0, analytic_np(cost, s, n)),
        AllowedRegion::Drift(d) if c.kind() == CostKind::TimeOptimal && s.is_trivial() => (1.0, d.max_norm()),
        _ => {
            log::warn!("no closed form for c_P, N_P in this configuration; using sample maxima");
            (c_p_max, n_p_max)
        }
    };
    let c_a = minimal_allowed_cost(c, region)?;
    let ratio = compute_r(c, s, region, cfg.samples.max(1), cfg.seed.wrapping_add(1))?;
    let r = ratio.analytic_bound.unwrap_or_else(|| {
        log::warn!("no closed form for R; using the sample maximum");
        ratio.empirical_max
    });
    let tp = crate::optimize::estimate_tp(region, s, &cfg.tp)?;
    Ok(ConstantsReport {
        constants: SplittingConstants { c_p, t_p: tp.estimate, r, n_p, c_a },
        empirical: EmpiricalConstants {
            c_p_max,
            n_p_max,
            r_max: ratio.empirical_max,
            t_p_samples: tp.samples,
            t_p_max_endpoint_error: tp.max_endpoint_error,
            samples: cfg.samples.max(1),
        },
        seed: cfg.seed,
    })
}

/// `c_P T_P G`.
pub fn gate_count_bound_part1(constants: &SplittingConstants, gate_count: u64) -> f64 {
    if gate_count == 0 {
        return 0.0;
    }
    constants.c_p * constants.t_p * gate_count as f64
}

/// `R · C(H(t))`, the a-priori bound on the projection integral.
pub fn projection_budget(c: &CostFunctional, s: &Splitting, tr: &ControlTrajectory) -> Result<Option<f64>> {
    let cost = trajectory_cost(c, tr)?;
    Ok(analytic_r(c, s, tr.n()).map(|r| r * cost))
}
