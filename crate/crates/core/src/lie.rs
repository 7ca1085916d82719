//! Dynamical Lie-algebra closure and the cyclic-shift drift family.
//!
//! Closure works over the reals in the space of Hermitian matrices with the
//! Frobenius inner product `Re tr(A†B)`; `i[A, B]` keeps Hermitian elements
//! Hermitian, and su(2^n) has real dimension `4^n - 1`.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::config::check_qubits;
use crate::dense::{c, expm_hermitian, hermitian_log_traceless, spectral_norm, CMatrix, DenseUnitary};
use crate::pauli::{expand, PauliExpansion, PauliWord};
use crate::sampling::{self, Rng};
use crate::{Error, Result};

/// Residual norm below which a bracket is treated as linearly dependent.
pub const INDEPENDENCE_THRESHOLD: f64 = 1e-9;
/// Coefficients below this are pruned from conjugated Hamiltonians.
const CONJUGATION_PRUNE: f64 = 1e-10;
/// Reseeds tried by [`make_theorem2_family`].
const FAMILY_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LieClosureReport {
    #[serde(rename = "generators")]
    pub generator_count: usize,
    #[serde(rename = "closure_dim")]
    pub closure_dimension: usize,
    #[serde(rename = "full_dim")]
    pub full_dimension: usize,
    #[serde(rename = "bracket_generating")]
    pub is_bracket_generating: bool,
    pub depth: usize,
}

/// An orthonormal real basis of Hermitian matrices, stored flattened as
/// `(re, im)` pairs.
struct RealSpan {
    vectors: Vec<Vec<f64>>,
    elements: Vec<CMatrix>,
}

impl RealSpan {
    fn new() -> Self {
        Self { vectors: Vec::new(), elements: Vec::new() }
    }

    fn flatten(m: &CMatrix) -> Vec<f64> {
        m.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// Adds `m` when its component orthogonal to the span exceeds the
    /// threshold; two Gram-Schmidt passes.
    fn try_add(&mut self, m: &CMatrix) -> bool {
        let mut v = Self::flatten(m);
        let scale = Self::dot(&v, &v).sqrt();
        if scale <= INDEPENDENCE_THRESHOLD {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= scale);
        for _ in 0..2 {
            for b in &self.vectors {
                let proj = Self::dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let residual = Self::dot(&v, &v).sqrt();
        if residual <= INDEPENDENCE_THRESHOLD {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= residual);
        let d = m.nrows();
        let element = CMatrix::from_fn(d, d, |r, col| {
            // nalgebra iterates column-major
            let k = 2 * (col * d + r);
            num_complex::Complex64::new(v[k], v[k + 1])
        });
        self.vectors.push(v);
        self.elements.push(element);
        true
    }

    fn dim(&self) -> usize {
        self.vectors.len()
    }
}

/// Real Lie algebra generated by Hermitian `generators` under `i[·,·]`.
///
/// Level 0 spans the generators; each further level brackets the elements
/// added at the previous level with the whole basis. Stops at a fixpoint, at
/// full dimension, or after `max_depth` levels.
pub fn lie_closure(generators: &[PauliExpansion], max_depth: usize) -> Result<LieClosureReport> {
    let dense: Vec<CMatrix> = {
        let first = generators
            .first()
            .ok_or_else(|| Error::InvalidParameter("lie_closure needs at least one generator".into()))?;
        let n = first.n();
        check_qubits(n)?;
        if let Some(g) = generators.iter().find(|g| g.n() != n) {
            return Err(Error::LengthMismatch(n, g.n()));
        }
        generators.iter().map(PauliExpansion::dense).collect()
    };
    let n = generators[0].n();
    Ok(closure_of_matrices(n, generators.len(), &dense, max_depth))
}

/// [`lie_closure`] on dense Hermitian matrices.
pub fn closure_of_matrices(n: usize, generator_count: usize, generators: &[CMatrix], max_depth: usize) -> LieClosureReport {
    let full = (1usize << (2 * n)) - 1;
    let mut span = RealSpan::new();
    let mut frontier: Vec<usize> = Vec::new();
    for g in generators {
        if span.try_add(g) {
            frontier.push(span.dim() - 1);
        }
    }
    let mut depth = 0;
    let iu = num_complex::Complex64::new(0.0, 1.0);
    while depth < max_depth && !frontier.is_empty() && span.dim() < full {
        let before = span.dim();
        let mut added = Vec::new();
        'level: for &a in &frontier {
            for b in 0..before {
                if a == b {
                    continue;
                }
                let (x, y) = (&span.elements[a], &span.elements[b]);
                let bracket = (x * y - y * x) * iu;
                if span.try_add(&bracket) {
                    added.push(span.dim() - 1);
                    if span.dim() == full {
                        break 'level;
                    }
                }
            }
        }
        if added.is_empty() {
            break;
        }
        depth += 1;
        frontier = added;
    }
    let closure_dimension = span.dim();
    LieClosureReport {
        generator_count,
        closure_dimension,
        full_dimension: full,
        is_bracket_generating: closure_dimension == full,
        depth,
    }
}

/// Drift control system `H = H₁ + α H₂`, `|α| ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSystem {
    n: usize,
    h1: PauliExpansion,
    h2: PauliExpansion,
}

impl DriftSystem {
    /// Bound on the steerable amplitude `|α|`.
    pub const CONTROL_BOUND: f64 = 1.0;

    pub fn new(h1: PauliExpansion, h2: PauliExpansion) -> Result<Self> {
        if h1.n() != h2.n() {
            return Err(Error::LengthMismatch(h1.n(), h2.n()));
        }
        Ok(Self { n: h1.n(), h1, h2 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn drift(&self) -> &PauliExpansion {
        &self.h1
    }

    pub fn control(&self) -> &PauliExpansion {
        &self.h2
    }

    /// `H₁ + α H₂`.
    pub fn hamiltonian(&self, alpha: f64) -> Result<PauliExpansion> {
        if !(alpha.abs() <= Self::CONTROL_BOUND) {
            return Err(Error::InvalidParameter(format!("control amplitude {alpha} outside [-1, 1]")));
        }
        self.h1.add_scaled(&self.h2, alpha)
    }

    /// The `α` with `h = H₁ + α H₂`, if one exists with `|α| ≤ 1`.
    pub fn control_amplitude(&self, h: &PauliExpansion) -> Option<f64> {
        let diff = h.add_scaled(&self.h1, -1.0).ok()?;
        let norm2: f64 = self.h2.terms().map(|(_, c)| c * c).sum();
        let alpha = if norm2 > 0.0 {
            self.h2.terms().map(|(w, c)| c * diff.coefficient(w)).sum::<f64>() / norm2
        } else {
            0.0
        };
        let residual = diff.add_scaled(&self.h2, -alpha).ok()?.coefficient_norm();
        (residual <= 1e-9 && alpha.abs() <= Self::CONTROL_BOUND + 1e-12).then_some(alpha)
    }

    /// `max_{|α|≤1} ‖H₁ + α H₂‖`; the norm is convex in `α`, so the maximum
    /// sits at an endpoint.
    pub fn max_norm(&self) -> f64 {
        let (a, b) = (self.h1.dense(), self.h2.dense());
        spectral_norm(&(&a + &b)).max(spectral_norm(&(&a - &b)))
    }
}

/// Permutation unitary taking the state of qubit 2 to qubit 3, ..., qubit n
/// to qubit 2, fixing qubit 1: `|q₁ q₂ … q_n⟩ ↦ |q₁ q_n q₂ … q_{n-1}⟩`.
pub fn cyclic_shift_unitary(n: usize) -> DenseUnitary {
    let d = 1usize << n;
    let mut m = CMatrix::zeros(d, d);
    for x in 0..d {
        let bit = |q: usize| (x >> (n - 1 - q)) & 1;
        let mut y = 0usize;
        for q in 0..n {
            let source = match q {
                0 => 0,
                1 => n - 1,
                _ => q - 1,
            };
            y |= bit(source) << (n - 1 - q);
        }
        m[(y, x)] = c(1.0);
    }
    DenseUnitary::from_product(n, m)
}

/// Traceless `H₂` with `exp(-i H₂)` equal to the cyclic shift of qubits
/// `2..n`.
pub fn cyclic_shift_hamiltonian(n: usize) -> Result<PauliExpansion> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("cyclic shift needs n >= 3, got {n}")));
    }
    check_qubits(n)?;
    let shift = cyclic_shift_unitary(n);
    let h = hermitian_log_traceless(&shift)?;
    Ok(expand(&h)?.pruned(CONJUGATION_PRUNE))
}

/// `H̃₁ = exp(-i H₂) H₁ exp(i H₂)`.
pub fn conjugated_hamiltonian(system: &DriftSystem) -> Result<PauliExpansion> {
    conjugate_by_control(system, system.drift())
}

fn conjugate_by_control(system: &DriftSystem, h: &PauliExpansion) -> Result<PauliExpansion> {
    let u = expm_hermitian(&system.control().dense(), 1.0);
    let conj = &u * h.dense() * u.adjoint();
    Ok(expand(&conj)?.pruned(CONJUGATION_PRUNE))
}

/// `H₁, H̃₁, H̃̃₁, …`: the drift conjugated `0..n-1` times by `exp(-i H₂)`,
/// which carries its qubit-2 support over qubits `2..n`.
pub fn conjugate_orbit(system: &DriftSystem) -> Result<Vec<PauliExpansion>> {
    let mut orbit = vec![system.drift().clone()];
    for _ in 1..system.n().saturating_sub(1) {
        let next = conjugate_by_control(system, orbit.last().expect("nonempty"))?;
        orbit.push(next);
    }
    Ok(orbit)
}

/// Random traceless two-qubit Hamiltonian on qubits 1 and 2 with unit
/// spectral norm.
fn random_pair_hamiltonian(rng: &mut Rng, n: usize) -> PauliExpansion {
    let words: Vec<PauliWord> = PauliWord::all(n).filter(|w| !w.is_identity() && w.support().iter().all(|&q| q < 2)).collect();
    let raw = sampling::gaussian_expansion(rng, n, &words);
    let norm = spectral_norm(&raw.dense());
    raw.scaled(1.0 / norm)
}

/// Places the two-qubit content of `h` (on qubits 1, 2) onto qubits
/// `targets` of a 3-qubit register.
fn place_on(h: &PauliExpansion, targets: [usize; 2]) -> PauliExpansion {
    let mut out = PauliExpansion::zero(3);
    for (w, coef) in h.terms() {
        let letters = w.letters();
        let word = PauliWord::from_sparse(3, &[(targets[0], letters[0]), (targets[1], letters[1])]).expect("3 qubits");
        out.add_term(word, coef).expect("non-identity word");
    }
    out
}

/// The drift family: seeded random two-qubit `H₁` on qubits (1,2) and the
/// cyclic-shift `H₂`.
///
/// `H₁` is accepted once `{H₁, H₁ on (1,3)}` generates su(8) on qubits
/// 1..3, and for `n = 3` once `{H₁, H₂}` generates su(8). After
/// `FAMILY_ATTEMPTS` failed seeds this is an error.
pub fn make_theorem2_family(n: usize, seed: u64) -> Result<DriftSystem> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("drift family needs n >= 3, got {n}")));
    }
    check_qubits(n)?;
    let h2 = cyclic_shift_hamiltonian(n)?;
    for attempt in 0..FAMILY_ATTEMPTS {
        let mut rng = Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let h1 = random_pair_hamiltonian(&mut rng, n);
        let pair = {
            let local = restrict_pair(&h1);
            let h1_3 = place_on(&local, [0, 1]);
            let h1_13 = place_on(&local, [0, 2]);
            lie_closure(&[h1_3, h1_13], usize::MAX)?
        };
        if !pair.is_bracket_generating {
            log::warn!("drift seed {} rejected: pair closure {}", seed.wrapping_add(attempt as u64), pair.closure_dimension);
            continue;
        }
        let system = DriftSystem::new(h1, h2.clone())?;
        if n == 3 && !lie_closure(&[system.drift().clone(), system.control().clone()], usize::MAX)?.is_bracket_generating {
            continue;
        }
        return Ok(system);
    }
    Err(Error::NotBracketGenerating(FAMILY_ATTEMPTS))
}

/// Two-qubit expansion of an operator supported on qubits 1 and 2.
fn restrict_pair(h: &PauliExpansion) -> PauliExpansion {
    let mut out = PauliExpansion::zero(2);
    for (w, coef) in h.terms() {
        out.add_term(w.restrict(&[0, 1]), coef).expect("support on the first two qubits");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{distance, eigh};

    fn e(n: usize, terms: &[(&str, f64)]) -> PauliExpansion {
        PauliExpansion::from_strs(n, terms).unwrap()
    }

    #[test]
    fn single_qubit_closures() {
        let r = lie_closure(&[e(1, &[("X", 1.0)])], 10).unwrap();
        assert_eq!((r.closure_dimension, r.is_bracket_generating), (1, false));
        let r = lie_closure(&[e(1, &[("X", 1.0)]), e(1, &[("Z", 1.0)])], 10).unwrap();
        assert_eq!((r.closure_dimension, r.full_dimension, r.is_bracket_generating), (3, 3, true));
        assert_eq!(r.depth, 1);
    }

    #[test]
    fn closure_errors() {
        assert!(lie_closure(&[], 3).is_err());
        assert!(lie_closure(&[e(1, &[("X", 1.0)]), e(2, &[("XX", 1.0)])], 3).is_err());
    }

    #[test]
    fn commuting_two_qubit_set() {
        let r = lie_closure(&[e(2, &[("ZI", 1.0)]), e(2, &[("IZ", 1.0)]), e(2, &[("ZZ", 1.0)])], 5).unwrap();
        assert_eq!(r.closure_dimension, 3);
        assert_eq!(r.depth, 0);
    }

    #[test]
    fn shift_permutes_qubits() {
        let s = cyclic_shift_unitary(3);
        for x in 0..8usize {
            let (q1, q2, q3) = (x >> 2 & 1, x >> 1 & 1, x & 1);
            let y = q1 << 2 | q3 << 1 | q2;
            assert_eq!(s.matrix()[(y, x)], c(1.0));
        }
        let s4 = cyclic_shift_unitary(4);
        assert_eq!(s4.matrix()[(0b0011, 0b0110)], c(1.0));
    }

    #[test]
    fn shift_hamiltonian_reproduces_shift() {
        for n in 3..=4 {
            let h2 = cyclic_shift_hamiltonian(n).unwrap();
            let u = expm_hermitian(&h2.dense(), 1.0);
            let s = cyclic_shift_unitary(n);
            assert!(distance(&u, s.matrix()) < 1e-9, "n={n}");
            let mut power = CMatrix::identity(1 << n, 1 << n);
            for _ in 0..n - 1 {
                power = &u * power;
            }
            assert!(distance(&power, &CMatrix::identity(1 << n, 1 << n)) < 1e-8);
        }
        assert!(cyclic_shift_hamiltonian(2).is_err());
    }

    #[test]
    fn conjugation_moves_support() {
        let h2 = cyclic_shift_hamiltonian(3).unwrap();
        let sys = DriftSystem::new(e(3, &[("ZZI", 1.0)]), h2.clone()).unwrap();
        let t = conjugated_hamiltonian(&sys).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t.coefficient(&"ZIZ".parse().unwrap()) - 1.0).abs() < 1e-9);

        let sys = DriftSystem::new(e(3, &[("XII", 0.4), ("YII", -0.2)]), h2).unwrap();
        let t = conjugated_hamiltonian(&sys).unwrap();
        assert!((t.add_scaled(sys.drift(), -1.0).unwrap()).coefficient_norm() < 1e-9);
    }

    #[test]
    fn conjugation_preserves_spectrum() {
        let sys = make_theorem2_family(3, 1).unwrap();
        let t = conjugated_hamiltonian(&sys).unwrap();
        let (a, _) = eigh(&sys.drift().dense());
        let (b, _) = eigh(&t.dense());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn family_properties() {
        let sys = make_theorem2_family(3, 7).unwrap();
        assert!(sys.drift().terms().all(|(w, _)| w.support().iter().all(|&q| q < 2)));
        assert!(sys.drift().is_two_local());
        assert!((spectral_norm(&sys.drift().dense()) - 1.0).abs() < 1e-10);
        let r = lie_closure(&[sys.drift().clone(), sys.control().clone()], usize::MAX).unwrap();
        assert!(r.is_bracket_generating);
        assert_eq!(r.closure_dimension, 63);
        assert!(make_theorem2_family(2, 0).is_err());
    }

    /// Independent closure: real coefficient vectors over Pauli words,
    /// brackets from exact word products, generators taken in a seeded
    /// random order.
    fn pauli_route_dimension(generators: &[PauliExpansion], seed: u64) -> usize {
        use crate::pauli::commutator_i;
        use rand::seq::SliceRandom;
        let n = generators[0].n();
        let words: Vec<PauliWord> = PauliWord::all(n).filter(|w| !w.is_identity()).collect();
        let to_vec = |e: &PauliExpansion| words.iter().map(|w| e.coefficient(w)).collect::<Vec<f64>>();
        let mut order: Vec<PauliExpansion> = generators.to_vec();
        order.shuffle(&mut Rng::seed_from_u64(seed));
        let mut basis: Vec<(Vec<f64>, PauliExpansion)> = Vec::new();
        let mut queue: std::collections::VecDeque<PauliExpansion> = order.into();
        while let Some(x) = queue.pop_front() {
            let mut v = to_vec(&x);
            for (b, _) in &basis {
                let p: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                v.iter_mut().zip(b).for_each(|(a, c)| *a -= p * c);
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm <= 1e-9 {
                continue;
            }
            v.iter_mut().for_each(|a| *a /= norm);
            let element = PauliExpansion::from_terms(n, words.iter().cloned().zip(v.iter().copied()).filter(|(_, c)| c.abs() > 1e-15)).unwrap();
            for (_, other) in &basis {
                queue.push_back(commutator_i(&element, other).unwrap());
            }
            basis.push((v, element));
            if basis.len() == words.len() {
                break;
            }
        }
        basis.len()
    }

    #[test]
    fn closure_agrees_with_pauli_route() {
        let sys = make_theorem2_family(3, 7).unwrap();
        let gens = vec![sys.drift().clone(), sys.control().clone()];
        assert_eq!(pauli_route_dimension(&gens, 1), 63);
        let cases: Vec<Vec<PauliExpansion>> = vec![
            vec![e(2, &[("XI", 1.0)]), e(2, &[("ZZ", 1.0)])],
            vec![e(2, &[("XI", 1.0)]), e(2, &[("IX", 1.0)]), e(2, &[("ZZ", 1.0)])],
            vec![e(3, &[("XXI", 1.0), ("YYI", 1.0)]), e(3, &[("IXX", 1.0), ("IYY", 1.0)])],
            vec![e(2, &[("XI", 0.3), ("ZX", 1.0)]), e(2, &[("IY", 1.0)])],
        ];
        for (k, gens) in cases.iter().enumerate() {
            let dense = lie_closure(gens, usize::MAX).unwrap().closure_dimension;
            for seed in 0..3 {
                assert_eq!(pauli_route_dimension(gens, seed), dense, "case {k} seed {seed}");
            }
        }
    }

    #[test]
    fn closure_is_order_independent_and_monotone() {
        use rand::seq::SliceRandom;
        let mut rng = Rng::seed_from_u64(17);
        let pool: Vec<PauliExpansion> = ["XIZ", "ZZI", "IYI", "IIX"].iter().map(|w| e(3, &[(w, 1.0)])).collect();
        let mut last = 0;
        for k in 1..=pool.len() {
            let mut subset = pool[..k].to_vec();
            let base = lie_closure(&subset, usize::MAX).unwrap().closure_dimension;
            assert!(base >= last);
            last = base;
            subset.shuffle(&mut rng);
            assert_eq!(lie_closure(&subset, usize::MAX).unwrap().closure_dimension, base);
        }
    }

    #[test]
    fn conjugate_orbit_spans_su() {
        for n in [3, 4] {
            let sys = make_theorem2_family(n, 2).unwrap();
            let orbit = conjugate_orbit(&sys).unwrap();
            assert_eq!(orbit.len(), n - 1);
            for (k, h) in orbit.iter().enumerate().skip(1) {
                let expected_support = [0, k + 1];
                assert!(h.terms().all(|(w, _)| w.support().iter().all(|q| expected_support.contains(q))), "n={n} k={k}");
            }
            let r = lie_closure(&orbit, usize::MAX).unwrap();
            assert!(r.is_bracket_generating, "n={n}: {r:?}");
        }
    }

    #[test]
    fn drift_amplitude_roundtrip() {
        let sys = make_theorem2_family(3, 3).unwrap();
        let h = sys.hamiltonian(-0.25).unwrap();
        assert!((sys.control_amplitude(&h).unwrap() + 0.25).abs() < 1e-12);
        assert!(sys.hamiltonian(1.5).is_err());
        assert!(sys.control_amplitude(&e(3, &[("XXX", 1.0)])).is_none());
        let bound = spectral_norm(&sys.drift().dense()) + spectral_norm(&sys.control().dense());
        assert!(sys.max_norm() <= bound + 1e-12);
    }
}
