//! Seeded property suite: every inequality the toolkit relies on, checked on
//! random instances.

use rand::{Rng as _, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{compile, compute_r, delta_average, lemma1_bound, projection_integral, trotter_synthesize, two_local_norm_bound};
use crate::control::{
    evolve, make_standard_splitting, project_trajectory, trajectory_cost, AllowedRegion, ControlTrajectory, CostFunctional,
    SplittingKind,
};
use crate::dense::{distance, expm_hermitian, spectral_norm};
use crate::sampling::{self, Rng};
use crate::Result;

/// Numerical slack on every inequality.
pub const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random instances per check and parameter combination.
    pub samples: usize,
    /// Multiplies the averaging bound `2(e^x - 1 - x)`; anything below 1 is a deliberate
    /// corruption the suite must catch.
    pub lemma1_scale: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 0, samples: 100, lemma1_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` seen (relative deviation for the closed-form
    /// check).
    pub worst_ratio: f64,
    pub passed: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub passes: usize,
    pub failures: usize,
    pub seeds: Vec<u64>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failures == 0
    }
}

/// Accumulates `lhs ≤ rhs + SLACK` comparisons.
#[derive(Default)]
struct Tally {
    samples: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn record(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        if !(lhs <= rhs + SLACK) {
            self.violations += 1;
        }
        let ratio = if rhs > 0.0 { lhs / rhs } else if lhs <= SLACK { 0.0 } else { f64::INFINITY };
        self.worst = self.worst.max(ratio);
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.samples += other.samples;
        self.violations += other.violations;
        self.worst = self.worst.max(other.worst);
        self
    }

    fn finish(self, name: &str, seed: u64) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            samples: self.samples,
            violations: self.violations,
            worst_ratio: self.worst,
            passed: self.violations == 0,
            seed,
        }
    }
}

/// Random trajectory of unit-cost two-local segments with durations in
/// `[0.02, 0.3)`.
pub fn random_two_local_trajectory(rng: &mut Rng, n: usize, segments: usize) -> ControlTrajectory {
    let mut tr = ControlTrajectory::new(n);
    for _ in 0..segments {
        let h = sampling::unit_two_local(rng, n);
        tr.push_constant(h, rng.random_range(0.02..0.3)).expect("valid segment");
    }
    tr
}

/// Random trajectory of unit-cost members of `region` with durations in
/// `[0.02, 0.3)`.
pub fn random_region_trajectory(rng: &mut Rng, region: &AllowedRegion, segments: usize) -> Result<ControlTrajectory> {
    let mut tr = ControlTrajectory::new(region.n());
    for _ in 0..segments {
        let h = region.sample(rng)?;
        tr.push_constant(h, rng.random_range(0.02..0.3))?;
    }
    Ok(tr)
}

fn seeded(seed: u64, k: usize) -> Rng {
    Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64))
}

/// Every window of random two-local trajectories satisfies the Δ-averaging
/// bound with the window's exact maximal norm.
pub fn check_averaging_windows(cfg: &VerifyConfig, ns: &[usize], deltas: &[f64]) -> Result<CheckResult> {
    let mut combos = Vec::new();
    for &n in ns {
        for &d in deltas {
            for k in 0..cfg.samples {
                combos.push((n, d, k));
            }
        }
    }
    let tally = combos
        .par_iter()
        .map(|&(n, delta, k)| {
            let mut rng = seeded(cfg.seed, ((n * 10_000 + (delta * 1e4).round() as usize) << 24) + k);
            let tr = random_two_local_trajectory(&mut rng, n, 4);
            let mut t = Tally::default();
            for w in delta_average(&tr, delta)? {
                t.record(w.averaging_error(), cfg.lemma1_scale * lemma1_bound(w.max_norm, w.duration));
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(Tally::default(), Tally::merge);
    Ok(tally.finish("averaging_window_bound", cfg.seed))
}

/// The averaging bound as used by the suite agrees with an independent
/// evaluation of `2(e^x - 1 - x)` (reverse-order Taylor sum) to `1e-12`
/// relative on a grid of `x`.
pub fn check_averaging_closed_form(cfg: &VerifyConfig) -> CheckResult {
    let grid: Vec<f64> = (0..=200).map(|k| 1e-4 * 1.06f64.powi(k)).collect();
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for &x in &grid {
        let mut terms = Vec::with_capacity(80);
        let mut t = 1.0;
        for k in 1..80 {
            t *= x / k as f64;
            if k >= 2 {
                terms.push(t);
            }
        }
        let oracle = 2.0 * terms.iter().rev().sum::<f64>();
        let ours = cfg.lemma1_scale * lemma1_bound(x, 1.0);
        let rel = (ours - oracle).abs() / oracle;
        worst = worst.max(rel);
        if rel > 1e-12 {
            violations += 1;
        }
    }
    CheckResult {
        name: "averaging_closed_form".to_string(),
        samples: grid.len(),
        violations,
        worst_ratio: worst,
        passed: violations == 0,
        seed: cfg.seed,
    }
}

/// `‖U - U_P‖ ≤ ∫‖H - H_P‖ ≤ R · C` for penalty-region trajectories under
/// two-local truncation. Returns the two inequalities as separate checks.
pub fn check_triangle_chain(cfg: &VerifyConfig, n: usize, penalties: &[f64]) -> Result<(CheckResult, CheckResult)> {
    let s = make_standard_splitting(SplittingKind::TwoLocalTruncation);
    let mut jobs = Vec::new();
    for &p in penalties {
        for k in 0..cfg.samples {
            jobs.push((p, k));
        }
    }
    let pairs = jobs
        .par_iter()
        .map(|&(p, k)| {
            let cost = CostFunctional::riemannian_penalty(p)?;
            let region = AllowedRegion::unit_cost(n, cost)?;
            let mut rng = seeded(cfg.seed, ((p as usize) << 24) + k);
            let tr = random_region_trajectory(&mut rng, &region, 5)?;
            let projected = project_trajectory(&s, &tr);
            let gap = distance(evolve(&tr).matrix(), evolve(&projected).matrix());
            let integral = projection_integral(&s, &tr);
            let budget = (1u64 << n) as f64 / p * trajectory_cost(&cost, &tr)?;
            let (mut a, mut b) = (Tally::default(), Tally::default());
            a.record(gap, integral);
            b.record(integral, budget);
            Ok((a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    let (a, b) = pairs.into_iter().fold((Tally::default(), Tally::default()), |(x, y), (a, b)| (x.merge(a), y.merge(b)));
    Ok((a.finish("triangle_evolution_vs_integral", cfg.seed), b.finish("triangle_integral_vs_r_cost", cfg.seed)))
}

/// Sampled `R` never exceeds its closed form.
pub fn check_r_bounds(cfg: &VerifyConfig) -> Result<CheckResult> {
    let s = make_standard_splitting(SplittingKind::TwoLocalTruncation);
    let mut cases = Vec::new();
    for n in [2, 3] {
        for p in [64.0, 1024.0] {
            cases.push((n, CostFunctional::riemannian_penalty(p)?));
        }
        for p in [10.0, 100.0] {
            cases.push((n, CostFunctional::l1_penalty(p)?));
        }
    }
    let mut t = Tally::default();
    for (k, (n, cost)) in cases.iter().enumerate() {
        let region = AllowedRegion::unit_cost(*n, *cost)?;
        let r = compute_r(cost, &s, &region, cfg.samples, cfg.seed.wrapping_add(k as u64))?;
        t.record(r.empirical_max, r.analytic_bound.unwrap_or(f64::INFINITY));
        t.samples += r.samples - 1;
    }
    Ok(t.finish("r_analytic_bound", cfg.seed))
}

/// Unit-coefficient two-local Hamiltonians have `‖H‖ ≤ (√3/2) n`.
pub fn check_np_bound(cfg: &VerifyConfig, ns: &[usize]) -> Result<CheckResult> {
    let tally = ns
        .par_iter()
        .map(|&n| {
            let mut rng = seeded(cfg.seed, 1000 + n);
            let mut t = Tally::default();
            for _ in 0..cfg.samples {
                let h = sampling::unit_two_local(&mut rng, n);
                t.record(spectral_norm(&h.dense()), two_local_norm_bound(n));
            }
            t
        })
        .reduce(Tally::default, Tally::merge);
    Ok(tally.finish("np_two_local_bound", cfg.seed))
}

/// The product-formula certificate bounds the measured synthesis error.
pub fn check_trotter(cfg: &VerifyConfig) -> Result<CheckResult> {
    let tally = (0..cfg.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded(cfg.seed, 5000 + k);
            let n = 2 + k % 2;
            let h = sampling::unit_two_local(&mut rng, n);
            let delta = rng.random_range(0.01..0.3);
            let small = 10f64.powi(-rng.random_range(3..7));
            let syn = trotter_synthesize(&h, delta, small)?;
            let measured = distance(syn.gates.unitary().matrix(), &expm_hermitian(&h.dense(), delta));
            let mut t = Tally::default();
            t.record(measured, syn.certified_error.min(small));
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(Tally::default(), Tally::merge);
    Ok(tally.finish("trotter_certificate", cfg.seed))
}

/// `measured_error ≤ total_bound` for compiled random trajectories.
pub fn check_ledger(cfg: &VerifyConfig) -> Result<CheckResult> {
    let s = make_standard_splitting(SplittingKind::TwoLocalTruncation);
    let count = (cfg.samples / 10).max(1);
    let tally = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded(cfg.seed, 9000 + k);
            let cost = CostFunctional::riemannian_penalty(64.0)?;
            let region = AllowedRegion::unit_cost(3, cost)?;
            let tr = random_region_trajectory(&mut rng, &region, 3)?;
            let (_, ledger) = compile(&tr, &s, &cost, 0.1, 1e-6)?;
            let mut t = Tally::default();
            t.record(ledger.measured_error, ledger.total_bound);
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(Tally::default(), Tally::merge);
    Ok(tally.finish("ledger_soundness", cfg.seed))
}

/// Runs every check with the given configuration.
pub fn run_suite(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let (tri_a, tri_b) = check_triangle_chain(cfg, 3, &[64.0, 1024.0])?;
    let checks = vec![
        check_averaging_closed_form(cfg),
        check_averaging_windows(cfg, &[2, 3], &[0.05, 0.1, 0.2])?,
        tri_a,
        tri_b,
        check_r_bounds(cfg)?,
        check_np_bound(cfg, &[2, 3, 4])?,
        check_trotter(cfg)?,
        check_ledger(cfg)?,
    ];
    let passes = checks.iter().filter(|c| c.passed).count();
    Ok(VerifyReport { failures: checks.len() - passes, passes, checks, seeds: vec![cfg.seed] })
}
