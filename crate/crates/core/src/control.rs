//! Control trajectories, cost functionals, splittings and allowed regions.
//!
//! Controls are piecewise constant: a trajectory is an ordered list of
//! `(H, duration)` segments, so costs integrate exactly and the endpoint
//! unitary is an ordered product of segment exponentials.

use std::collections::BTreeMap;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{expm_hermitian, CMatrix, DenseUnitary};
use crate::lie::DriftSystem;
use crate::pauli::{PauliExpansion, PauliWord};
use crate::sampling::{self, Rng};
use crate::{Error, Result};

/// Tolerance on `c(H) = 1` for unit-cost region membership.
pub const REGION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// `sqrt(Σ h_σ²)` over one- and two-qubit words only.
    Subriemannian,
    /// `c(H) = 1`.
    TimeOptimal,
    /// `sqrt(Σ' h_σ² + p² Σ'' h_σ²)`.
    RiemannianPenalty,
    /// `Σ' |h_σ| + p Σ'' |h_σ|`.
    L1Penalty,
}

/// A cost rate `c(H)`. Primed sums run over words of weight at most two,
/// double-primed sums over weight three and above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostFunctional {
    kind: CostKind,
    penalty: f64,
}

impl CostFunctional {
    pub fn subriemannian() -> Self {
        Self { kind: CostKind::Subriemannian, penalty: 1.0 }
    }

    pub fn time_optimal() -> Self {
        Self { kind: CostKind::TimeOptimal, penalty: 1.0 }
    }

    pub fn riemannian_penalty(p: f64) -> Result<Self> {
        Self::new(CostKind::RiemannianPenalty, p)
    }

    pub fn l1_penalty(p: f64) -> Result<Self> {
        Self::new(CostKind::L1Penalty, p)
    }

    /// `penalty` is ignored (stored as 1) for the non-penalty kinds.
    pub fn new(kind: CostKind, penalty: f64) -> Result<Self> {
        match kind {
            CostKind::RiemannianPenalty | CostKind::L1Penalty => {
                if !(penalty.is_finite() && penalty >= 1.0) {
                    return Err(Error::InvalidParameter(format!("penalty must be >= 1, got {penalty}")));
                }
                Ok(Self { kind, penalty })
            }
            _ => Ok(Self { kind, penalty: 1.0 }),
        }
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn is_penalty(&self) -> bool {
        matches!(self.kind, CostKind::RiemannianPenalty | CostKind::L1Penalty)
    }

    /// Cost rate `c(H)`.
    pub fn cost_rate(&self, h: &PauliExpansion) -> Result<f64> {
        if self.kind == CostKind::Subriemannian {
            if let Some((w, _)) = h.terms().find(|(w, _)| w.weight() > 2) {
                return Err(Error::NotTwoLocal(w.to_string()));
            }
        }
        Ok(self.rate_of(h.terms().map(|(w, c)| (w.weight(), c))))
    }

    /// Cost rate from `(weight, coefficient)` pairs; Subriemannian costs
    /// count heavy words as if they were light.
    pub fn rate_of(&self, terms: impl Iterator<Item = (usize, f64)>) -> f64 {
        let p = self.penalty;
        let (mut light, mut heavy) = (0.0, 0.0);
        let l1 = self.kind == CostKind::L1Penalty;
        for (weight, c) in terms {
            let f = if l1 { c.abs() } else { c * c };
            if weight <= 2 {
                light += f;
            } else {
                heavy += f;
            }
        }
        match self.kind {
            CostKind::TimeOptimal => 1.0,
            CostKind::Subriemannian => (light + heavy).sqrt(),
            CostKind::RiemannianPenalty => (light + p * p * heavy).sqrt(),
            CostKind::L1Penalty => light + p * heavy,
        }
    }
}

/// Free-function form of [`CostFunctional::cost_rate`].
pub fn cost_rate(c: &CostFunctional, h: &PauliExpansion) -> Result<f64> {
    c.cost_rate(h)
}

/// One constant-control piece.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub hamiltonian: PauliExpansion,
    pub duration: f64,
}

impl Segment {
    pub fn new(hamiltonian: PauliExpansion, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidParameter(format!("segment duration must be positive, got {duration}")));
        }
        Ok(Self { hamiltonian, duration })
    }
}

/// Piecewise-constant control `H(t)` on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlTrajectory {
    n: usize,
    segments: Vec<Segment>,
}

impl ControlTrajectory {
    pub fn new(n: usize) -> Self {
        Self { n, segments: Vec::new() }
    }

    pub fn from_segments(n: usize, segments: Vec<Segment>) -> Result<Self> {
        let mut tr = Self::new(n);
        for s in segments {
            tr.push(s)?;
        }
        Ok(tr)
    }

    pub fn push(&mut self, segment: Segment) -> Result<()> {
        if segment.hamiltonian.n() != self.n {
            return Err(Error::LengthMismatch(self.n, segment.hamiltonian.n()));
        }
        Segment::new(segment.hamiltonian.clone(), segment.duration)?;
        self.segments.push(segment);
        Ok(())
    }

    pub fn push_constant(&mut self, hamiltonian: PauliExpansion, duration: f64) -> Result<()> {
        self.push(Segment::new(hamiltonian, duration)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `T = Σ durations`.
    pub fn total_time(&self) -> f64 {
        self.segments.iter().fold(0.0, |t, s| t + s.duration)
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &ControlTrajectory) -> Result<Self> {
        let mut out = self.clone();
        for s in &other.segments {
            out.push(s.clone())?;
        }
        Ok(out)
    }

    pub fn to_file(&self) -> TrajectoryFile {
        TrajectoryFile {
            n: self.n,
            segments: self
                .segments
                .iter()
                .map(|s| SegmentFile {
                    duration: s.duration,
                    terms: s.hamiltonian.terms().map(|(w, c)| (w.clone(), c)).collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: TrajectoryFile) -> Result<Self> {
        let mut tr = Self::new(file.n);
        for (k, seg) in file.segments.into_iter().enumerate() {
            let h = PauliExpansion::from_terms(file.n, seg.terms)
                .map_err(|e| Error::InvalidParameter(format!("segment {k}: {e}")))?;
            let s = Segment::new(h, seg.duration).map_err(|e| Error::InvalidParameter(format!("segment {k}: {e}")))?;
            tr.push(s)?;
        }
        Ok(tr)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("trajectory serialises")
    }

    /// Parses the trajectory JSON format; syntax errors carry line numbers.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TrajectoryFile = serde_json::from_str(text)?;
        crate::config::check_qubits(file.n)?;
        Self::from_file(file)
    }
}

/// On-disk trajectory: `{n, segments: [{duration, terms: {word: coeff}}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub n: usize,
    pub segments: Vec<SegmentFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFile {
    pub duration: f64,
    pub terms: BTreeMap<PauliWord, f64>,
}

/// `C(H(t)) = Σ duration · c(H)`.
pub fn trajectory_cost(c: &CostFunctional, tr: &ControlTrajectory) -> Result<f64> {
    tr.segments.iter().try_fold(0.0, |acc, s| Ok(acc + s.duration * c.cost_rate(&s.hamiltonian)?))
}

/// Endpoint `U(T)` of `dU/dt = -i H(t) U`, `U(0) = I`: later segments multiply
/// on the left.
pub fn evolve(tr: &ControlTrajectory) -> DenseUnitary {
    let factors: Vec<CMatrix> = tr
        .segments
        .par_iter()
        .map(|s| expm_hermitian(&s.hamiltonian.dense(), s.duration))
        .collect();
    let d = 1usize << tr.n;
    let u = factors.iter().fold(CMatrix::identity(d, d), |acc, f| f * acc);
    DenseUnitary::from_product(tr.n, u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplittingKind {
    /// Preferred set = allowed set, `P(H) = H`.
    Trivial,
    /// Preferred set = two-local Hamiltonians; `P` drops every term of
    /// weight three or more.
    TwoLocalTruncation,
}

/// A preferred set with its projection map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splitting {
    kind: SplittingKind,
}

impl Splitting {
    pub fn kind(&self) -> SplittingKind {
        self.kind
    }

    pub fn is_trivial(&self) -> bool {
        self.kind == SplittingKind::Trivial
    }

    pub fn preferred(&self, h: &PauliExpansion) -> bool {
        match self.kind {
            SplittingKind::Trivial => true,
            SplittingKind::TwoLocalTruncation => h.is_two_local(),
        }
    }

    pub fn project(&self, h: &PauliExpansion) -> PauliExpansion {
        match self.kind {
            SplittingKind::Trivial => h.clone(),
            SplittingKind::TwoLocalTruncation => h.filter(|w| w.weight() <= 2),
        }
    }
}

pub fn make_standard_splitting(kind: SplittingKind) -> Splitting {
    Splitting { kind }
}

/// `H_P(t) = P(H(t))` segmentwise, durations unchanged.
pub fn project_trajectory(s: &Splitting, tr: &ControlTrajectory) -> ControlTrajectory {
    ControlTrajectory {
        n: tr.n,
        segments: tr
            .segments
            .iter()
            .map(|seg| Segment { hamiltonian: s.project(&seg.hamiltonian), duration: seg.duration })
            .collect(),
    }
}

/// The set of allowed control Hamiltonians.
#[derive(Debug, Clone)]
pub enum AllowedRegion {
    /// `{H : c(H) = 1}` for a Subriemannian (two-local support) or penalty
    /// cost.
    UnitCost { n: usize, cost: CostFunctional },
    /// `H₁ + α H₂`, `|α| ≤ 1`.
    Drift(DriftSystem),
    /// A user region given by representative members and an explicit `c_A`.
    Declared { n: usize, min_cost: f64, members: Vec<PauliExpansion> },
}

impl AllowedRegion {
    pub fn unit_cost(n: usize, cost: CostFunctional) -> Result<Self> {
        if cost.kind() == CostKind::TimeOptimal {
            return Err(Error::InvalidParameter("time-optimal cost has no unit-cost region".into()));
        }
        Ok(Self::UnitCost { n, cost })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::UnitCost { n, .. } | Self::Declared { n, .. } => *n,
            Self::Drift(d) => d.n(),
        }
    }

    /// Membership test; unit-cost regions use [`REGION_TOLERANCE`].
    pub fn contains(&self, h: &PauliExpansion) -> bool {
        if h.n() != self.n() {
            return false;
        }
        match self {
            Self::UnitCost { cost, .. } => {
                cost.cost_rate(h).map(|c| (c - 1.0).abs() <= REGION_TOLERANCE).unwrap_or(false)
            }
            Self::Drift(d) => d.control_amplitude(h).is_some(),
            Self::Declared { members, .. } => members.iter().any(|m| m == h),
        }
    }

    /// Seeded sample of a region member. Unit-cost samples mix dense and
    /// sparse directions, and for penalty costs light-only, heavy-only and
    /// mixed supports.
    pub fn sample(&self, rng: &mut Rng) -> Result<PauliExpansion> {
        match self {
            Self::UnitCost { n, cost } => {
                let n = *n;
                let light = PauliWord::up_to_weight(n, 2);
                let heavy: Vec<PauliWord> = PauliWord::all(n).filter(|w| w.weight() > 2).collect();
                let words: Vec<PauliWord> = if cost.kind() == CostKind::Subriemannian || heavy.is_empty() {
                    light
                } else {
                    match rng.random_range(0..4) {
                        0 => light,
                        1 => heavy,
                        _ => light.into_iter().chain(heavy).collect(),
                    }
                };
                let raw = if rng.random_bool(0.5) {
                    sampling::unit_direction(rng, n, &words)
                } else {
                    sampling::sparse_direction(rng, n, &words, 0.2)
                };
                let rate = cost.cost_rate(&raw)?;
                Ok(raw.scaled(1.0 / rate))
            }
            Self::Drift(d) => d.hamiltonian(rng.random_range(-1.0..=1.0)),
            Self::Declared { members, .. } => {
                if members.is_empty() {
                    return Err(Error::InvalidParameter("declared region has no members".into()));
                }
                Ok(members[rng.random_range(0..members.len())].clone())
            }
        }
    }
}

/// `c_A = min_{H ∈ ℋ_A} c(H)` for the standard regions; declared regions
/// carry their own value.
pub fn minimal_allowed_cost(c: &CostFunctional, region: &AllowedRegion) -> Result<f64> {
    if c.kind() == CostKind::TimeOptimal {
        return Ok(1.0);
    }
    match region {
        AllowedRegion::UnitCost { cost, .. } if cost == c => Ok(1.0),
        AllowedRegion::Declared { min_cost, .. } => Ok(*min_cost),
        _ => Err(Error::InvalidParameter(
            "c_A is only analytic for a cost on its own unit-cost region; declare it explicitly".into(),
        )),
    }
}

/// `T ≤ C(U) / c_A`.
pub fn bound_t(c: &CostFunctional, region: &AllowedRegion, cost_value: f64) -> Result<f64> {
    let c_a = minimal_allowed_cost(c, region)?;
    if c_a <= 0.0 {
        return Err(Error::VacuousBound);
    }
    Ok(cost_value / c_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::distance;
    use rand::SeedableRng;

    fn e(n: usize, terms: &[(&str, f64)]) -> PauliExpansion {
        PauliExpansion::from_strs(n, terms).unwrap()
    }

    #[test]
    fn cost_rate_examples() {
        let h = e(3, &[("XZI", 0.6), ("IIY", 0.8)]);
        assert!((CostFunctional::subriemannian().cost_rate(&h).unwrap() - 1.0).abs() < 1e-15);
        let h = e(3, &[("XII", 0.5), ("XXX", 0.1)]);
        let l1 = CostFunctional::l1_penalty(10.0).unwrap();
        assert!((l1.cost_rate(&h).unwrap() - 1.5).abs() < 1e-15);
        let r = CostFunctional::riemannian_penalty(2.0).unwrap();
        assert_eq!(r.cost_rate(&e(1, &[("Z", 1.0)])).unwrap(), 1.0);
        assert!((r.cost_rate(&h).unwrap() - (0.25f64 + 4.0 * 0.01).sqrt()).abs() < 1e-15);
        assert_eq!(CostFunctional::time_optimal().cost_rate(&h).unwrap(), 1.0);
    }

    #[test]
    fn subriemannian_rejects_heavy_terms() {
        let h = e(3, &[("XXX", 0.5)]);
        assert!(matches!(CostFunctional::subriemannian().cost_rate(&h), Err(Error::NotTwoLocal(_))));
    }

    #[test]
    fn penalty_must_be_at_least_one() {
        assert!(CostFunctional::riemannian_penalty(0.5).is_err());
        assert!(CostFunctional::l1_penalty(f64::NAN).is_err());
    }

    #[test]
    fn trajectory_cost_examples() {
        let tr = ControlTrajectory::new(2);
        assert_eq!(trajectory_cost(&CostFunctional::subriemannian(), &tr).unwrap(), 0.0);

        let mut tr = ControlTrajectory::new(2);
        for h in [e(2, &[("XI", 1.0)]), e(2, &[("ZZ", 0.6), ("IY", 0.8)]), e(2, &[("YX", -1.0)])] {
            tr.push_constant(h, 0.2).unwrap();
        }
        assert!((trajectory_cost(&CostFunctional::subriemannian(), &tr).unwrap() - 0.6).abs() < 1e-15);
        assert!((trajectory_cost(&CostFunctional::time_optimal(), &tr).unwrap() - tr.total_time()).abs() < 1e-15);
    }

    #[test]
    fn segment_durations_must_be_positive() {
        let mut tr = ControlTrajectory::new(1);
        assert!(tr.push_constant(e(1, &[("X", 1.0)]), 0.0).is_err());
        assert!(tr.push_constant(e(2, &[("XX", 1.0)]), 1.0).is_err());
    }

    #[test]
    fn evolve_examples() {
        let u = evolve(&ControlTrajectory::new(2));
        assert_eq!(u.matrix(), &CMatrix::identity(4, 4));

        let mut tr = ControlTrajectory::new(1);
        tr.push_constant(e(1, &[("X", std::f64::consts::FRAC_PI_2)]), 1.0).unwrap();
        let expected = "X".parse::<PauliWord>().unwrap().dense() * num_complex::Complex64::new(0.0, -1.0);
        assert!(distance(evolve(&tr).matrix(), &expected) < 1e-14);
    }

    #[test]
    fn evolve_composes_in_time_order() {
        let mut a = ControlTrajectory::new(2);
        a.push_constant(e(2, &[("XI", 0.7), ("ZZ", 0.2)]), 0.4).unwrap();
        a.push_constant(e(2, &[("IY", -0.3)]), 0.9).unwrap();
        let mut b = ControlTrajectory::new(2);
        b.push_constant(e(2, &[("YX", 1.1)]), 0.3).unwrap();
        let whole = evolve(&a.concat(&b).unwrap());
        let parts = evolve(&b).compose(&evolve(&a));
        assert!(whole.distance(&parts) < 1e-13);
        // and the order matters
        let swapped = evolve(&a).compose(&evolve(&b));
        assert!(whole.distance(&swapped) > 1e-3);
    }

    #[test]
    fn projection_examples() {
        let mut tr = ControlTrajectory::new(3);
        tr.push_constant(e(3, &[("XII", 0.3), ("XXX", 0.7)]), 0.5).unwrap();
        let trivial = make_standard_splitting(SplittingKind::Trivial);
        assert_eq!(project_trajectory(&trivial, &tr), tr);
        let trunc = make_standard_splitting(SplittingKind::TwoLocalTruncation);
        let p = project_trajectory(&trunc, &tr);
        assert_eq!(p.segments()[0].hamiltonian, e(3, &[("XII", 0.3)]));
        assert_eq!(p.segments()[0].duration, 0.5);
        assert_eq!(project_trajectory(&trunc, &p), p);
        assert!(trunc.preferred(&e(3, &[("XZI", 1.0)])));
        assert!(!trunc.preferred(&e(3, &[("XZY", 1.0)])));
    }

    #[test]
    fn time_bounds() {
        let to = CostFunctional::time_optimal();
        let sr = CostFunctional::subriemannian();
        let region = AllowedRegion::unit_cost(2, sr).unwrap();
        assert_eq!(bound_t(&to, &region, 5.0).unwrap(), 5.0);
        assert_eq!(bound_t(&sr, &region, 2.5).unwrap(), 2.5);
        let rp = CostFunctional::riemannian_penalty(4.0).unwrap();
        let rregion = AllowedRegion::unit_cost(3, rp).unwrap();
        assert_eq!(bound_t(&rp, &rregion, 3.0).unwrap(), 3.0);
        let declared = AllowedRegion::Declared { n: 1, min_cost: 0.0, members: vec![] };
        assert!(matches!(bound_t(&sr, &declared, 1.0), Err(Error::VacuousBound)));
        assert!(bound_t(&rp, &region, 1.0).is_err());
    }

    #[test]
    fn unit_cost_samples_have_unit_cost() {
        let mut rng = Rng::seed_from_u64(4);
        for cost in [
            CostFunctional::subriemannian(),
            CostFunctional::riemannian_penalty(64.0).unwrap(),
            CostFunctional::l1_penalty(10.0).unwrap(),
        ] {
            let region = AllowedRegion::unit_cost(3, cost).unwrap();
            for _ in 0..200 {
                let h = region.sample(&mut rng).unwrap();
                assert!((cost.cost_rate(&h).unwrap() - 1.0).abs() < 1e-12);
                assert!(region.contains(&h));
            }
        }
    }

    #[test]
    fn json_roundtrip_and_errors() {
        let mut tr = ControlTrajectory::new(2);
        tr.push_constant(e(2, &[("XI", 0.25), ("ZZ", -1.0)]), 0.125).unwrap();
        let back = ControlTrajectory::from_json(&tr.to_json()).unwrap();
        assert_eq!(back, tr);

        let bad = "{\n  \"n\": 3,\n  \"segments\": [\n    {\"duration\": 1.0, \"terms\": {\"XQZ\": 1.0}}\n  ]\n}";
        let err = ControlTrajectory::from_json(bad).unwrap_err().to_string();
        assert!(err.contains("XQZ") && err.contains("line 4"), "{err}");
    }
}
