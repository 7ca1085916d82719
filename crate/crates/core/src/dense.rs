//! Dense complex matrices: Hermitian eigendecomposition, exponentials,
//! logarithms of unitaries and the spectral norm.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::pauli::{hermitian_residual, HERMITIAN_TOLERANCE};
use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Unitarity tolerance used by [`DenseUnitary::new`].
pub const UNITARY_TOLERANCE: f64 = 1e-10;
/// Reconstruction tolerance for [`hermitian_log`].
pub const LOG_TOLERANCE: f64 = 1e-9;
/// Eigenphases within this distance of ±π are treated as exactly π.
const PI_TIE: f64 = 1e-10;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

/// `‖A - B‖` in spectral norm.
pub fn distance(a: &CMatrix, b: &CMatrix) -> f64 {
    spectral_norm(&(a - b))
}

/// `‖U†U - I‖`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let d = u.nrows();
    spectral_norm(&(u.adjoint() * u - CMatrix::identity(d, d)))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrised first, so only the Hermitian part is used.
pub fn eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (h + h.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(Ordering::Equal));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(h.nrows(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// `V diag(f(λ)) V†`.
fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let mut scaled = vectors.clone();
    for (k, &lambda) in values.iter().enumerate() {
        let z = f(lambda);
        scaled.column_mut(k).iter_mut().for_each(|e| *e *= z);
    }
    scaled * vectors.adjoint()
}

fn check_hermitian(h: &CMatrix) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension { expected: h.nrows(), got: h.ncols() });
    }
    let residual = hermitian_residual(h);
    if residual > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian(residual));
    }
    Ok(())
}

fn qubits_of(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::Dimension { expected: dim.next_power_of_two(), got: dim });
    }
    Ok(dim.trailing_zeros() as usize)
}

/// An n-qubit unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseUnitary {
    n: usize,
    matrix: CMatrix,
}

impl DenseUnitary {
    /// Checks unitarity to [`UNITARY_TOLERANCE`].
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, UNITARY_TOLERANCE)
    }

    pub fn with_tolerance(matrix: CMatrix, tolerance: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension { expected: matrix.nrows(), got: matrix.ncols() });
        }
        let n = qubits_of(matrix.nrows())?;
        let residual = unitarity_residual(&matrix);
        if residual > tolerance {
            return Err(Error::NotUnitary(residual));
        }
        Ok(Self { n, matrix })
    }

    /// Wraps a product of unitaries without rechecking.
    pub(crate) fn from_product(n: usize, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), 1 << n);
        Self { n, matrix }
    }

    pub fn identity(n: usize) -> Self {
        let d = 1usize << n;
        Self { n, matrix: CMatrix::identity(d, d) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { n: self.n, matrix: self.matrix.adjoint() }
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &DenseUnitary) -> Self {
        Self { n: self.n, matrix: &self.matrix * &other.matrix }
    }

    pub fn distance(&self, other: &DenseUnitary) -> f64 {
        distance(&self.matrix, &other.matrix)
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.matrix)
    }
}

/// `exp(-i H t)` for Hermitian `H`, via eigendecomposition.
pub fn expm(h: &CMatrix, t: f64) -> Result<DenseUnitary> {
    check_hermitian(h)?;
    let n = qubits_of(h.nrows())?;
    Ok(DenseUnitary::from_product(n, expm_hermitian(h, t)))
}

/// [`expm`] without input validation; `h` must be Hermitian.
pub(crate) fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let d = h.nrows();
    if t == 0.0 {
        return CMatrix::identity(d, d);
    }
    let (values, vectors) = eigh(h);
    spectral_map(&values, &vectors, |l| (-I * (l * t)).exp())
}

/// Eigenvectors and eigenphases in `(-π, π]` of a unitary.
///
/// `U` is normal, so its Hermitian and anti-Hermitian parts commute and a
/// generic real combination of them has the eigenvectors of `U`. A few
/// combinations are tried until the decomposition reproduces `U`.
fn unitary_eigen(u: &CMatrix) -> (Vec<f64>, CMatrix) {
    const MIXES: [f64; 4] = [0.618_033_988_749_894_8, 1.324_717_957_244_746, -0.453_397_651_516_403_8, 2.718_281_828_459_045];
    let cos_part = (u + u.adjoint()) * c(0.5);
    let sin_part = (u - u.adjoint()) * (-I * 0.5);
    let mut best: Option<(f64, Vec<f64>, CMatrix)> = None;
    for &mix in &MIXES {
        let (_, vectors) = eigh(&(&cos_part + &sin_part * c(mix)));
        let phases: Vec<f64> = (0..vectors.ncols())
            .map(|k| {
                let v = vectors.column(k);
                let z = (v.adjoint() * u * v)[(0, 0)];
                let mut phase = z.arg();
                if PI - phase.abs() < PI_TIE {
                    phase = PI;
                }
                phase
            })
            .collect();
        let rebuilt = spectral_map(&phases, &vectors, |p| (I * p).exp());
        let err = distance(&rebuilt, u);
        if err <= LOG_TOLERANCE {
            return (phases, vectors);
        }
        if best.as_ref().is_none_or(|(e, _, _)| err < *e) {
            best = Some((err, phases, vectors));
        }
    }
    let (err, phases, vectors) = best.expect("at least one mix tried");
    log::warn!("unitary eigendecomposition residual {err:.3e}");
    (phases, vectors)
}

/// Principal Hermitian logarithm: `H` with `exp(-iH) = U`.
///
/// Eigenphases `φ` of `U` lie in `(-π, π]`, a phase of exactly π is taken as
/// `+π`; `H` carries eigenvalue `-φ` on the corresponding eigenvector.
pub fn hermitian_log(u: &DenseUnitary) -> CMatrix {
    let (phases, vectors) = unitary_eigen(u.matrix());
    spectral_map(&phases, &vectors, |p| c(-p))
}

/// Traceless Hermitian logarithm of minimal Frobenius norm.
///
/// Starts from the principal branch and moves the phases closest to the
/// branch cut by `∓2π` until the trace vanishes. Requires `det U = 1`.
pub fn hermitian_log_traceless(u: &DenseUnitary) -> Result<CMatrix> {
    let (mut phases, vectors) = unitary_eigen(u.matrix());
    let total: f64 = phases.iter().sum();
    let k = (total / (2.0 * PI)).round();
    let off = total - 2.0 * PI * k;
    if off.abs() > 1e-8 {
        return Err(Error::DeterminantPhase(off));
    }
    let mut order: Vec<usize> = (0..phases.len()).collect();
    // Deterministic: by phase, then lexicographically by eigenvector entries.
    order.sort_by(|&a, &b| {
        phases[b].partial_cmp(&phases[a]).unwrap_or(Ordering::Equal).then_with(|| {
            let (va, vb) = (vectors.column(a), vectors.column(b));
            for (x, y) in va.iter().zip(vb.iter()) {
                let o = x.re.partial_cmp(&y.re).unwrap_or(Ordering::Equal).then(x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal));
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        })
    });
    let shifts = k.abs() as usize;
    if k > 0.0 {
        for &j in order.iter().take(shifts) {
            phases[j] -= 2.0 * PI;
        }
    } else if k < 0.0 {
        for &j in order.iter().rev().take(shifts) {
            phases[j] += 2.0 * PI;
        }
    }
    Ok(spectral_map(&phases, &vectors, |p| c(-p)))
}

/// `min_φ ‖U - e^{iφ} V‖`: half the angular width of the smallest arc
/// containing all eigenphases of `U†V`, mapped to a chord length.
pub fn phase_invariant_distance(u: &CMatrix, v: &CMatrix) -> f64 {
    let w = u.adjoint() * v;
    let mut phases = if w.nrows() == 2 {
        two_by_two_phases(&w)
    } else {
        let (p, _) = unitary_eigen(&w);
        p
    };
    phases.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let m = phases.len();
    let mut largest_gap = 2.0 * PI - (phases[m - 1] - phases[0]);
    for k in 1..m {
        largest_gap = largest_gap.max(phases[k] - phases[k - 1]);
    }
    let arc = (2.0 * PI - largest_gap).max(0.0);
    2.0 * (arc / 4.0).sin()
}

/// Eigenphases of a 2x2 unitary from its characteristic polynomial.
fn two_by_two_phases(w: &CMatrix) -> Vec<f64> {
    let tr = w[(0, 0)] + w[(1, 1)];
    let det = w[(0, 0)] * w[(1, 1)] - w[(0, 1)] * w[(1, 0)];
    let disc = (tr * tr - det * 4.0).sqrt();
    vec![((tr + disc) * 0.5).arg(), ((tr - disc) * 0.5).arg()]
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Left-multiplies `m` (acting on `n` qubits) by `gate` acting on `targets`.
/// `targets[0]` is the most significant local qubit of `gate`.
pub fn apply_local(m: &mut CMatrix, n: usize, targets: &[usize], gate: &CMatrix) {
    let k = targets.len();
    let local = 1usize << k;
    debug_assert_eq!(gate.nrows(), local);
    let bits: Vec<usize> = targets.iter().map(|&q| 1usize << (n - 1 - q)).collect();
    let target_mask: usize = bits.iter().sum();
    let dim = 1usize << n;
    let mut idx = vec![0usize; local];
    let mut buf = vec![Complex64::new(0.0, 0.0); local];
    for base in (0..dim).filter(|b| b & target_mask == 0) {
        for (l, slot) in idx.iter_mut().enumerate() {
            let mut r = base;
            for (j, &bit) in bits.iter().enumerate() {
                if l & (1 << (k - 1 - j)) != 0 {
                    r |= bit;
                }
            }
            *slot = r;
        }
        for col in 0..m.ncols() {
            for (l, b) in buf.iter_mut().enumerate() {
                *b = m[(idx[l], col)];
            }
            for (l, &r) in idx.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (s, b) in buf.iter().enumerate() {
                    acc += gate[(l, s)] * b;
                }
                m[(r, col)] = acc;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliWord;
    use crate::sampling::{random_hermitian, Rng};
    use rand::SeedableRng;

    fn x() -> CMatrix {
        "X".parse::<PauliWord>().unwrap().dense()
    }

    #[test]
    fn norms() {
        assert!((spectral_norm(&CMatrix::identity(8, 8)) - 1.0).abs() < 1e-14);
        let zz = "ZZ".parse::<PauliWord>().unwrap().dense();
        assert!((spectral_norm(&zz) - 1.0).abs() < 1e-14);
        let a = CMatrix::from_row_slice(2, 2, &[c(3.0), c(0.0), c(4.0), c(0.0)]);
        assert!((spectral_norm(&a) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn expm_examples() {
        let h = x() * c(PI / 2.0);
        assert_eq!(expm(&h, 0.0).unwrap().matrix(), &CMatrix::identity(2, 2));
        let u = expm(&h, 1.0).unwrap();
        let expected = x() * (-I);
        assert!(distance(u.matrix(), &expected) < 1e-14);
        let mut bad = x();
        bad[(0, 1)] = c(2.0);
        assert!(matches!(expm(&bad, 1.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn expm_group_property() {
        let mut rng = Rng::seed_from_u64(3);
        for n in 1..=3 {
            let h = random_hermitian(&mut rng, n);
            let (s, t) = (0.37, -1.21);
            let lhs = expm(&h, s).unwrap().compose(&expm(&h, t).unwrap());
            let rhs = expm(&h, s + t).unwrap();
            assert!(lhs.distance(&rhs) < 1e-12);
            assert!(rhs.unitarity_residual() < 1e-12);
        }
    }

    #[test]
    fn log_examples() {
        assert!(spectral_norm(&hermitian_log(&DenseUnitary::identity(2))) < 1e-14);
        let u = DenseUnitary::new(x() * (-I)).unwrap();
        let h = hermitian_log(&u);
        assert!(distance(&h, &(x() * c(PI / 2.0))) < 1e-12);
    }

    #[test]
    fn log_roundtrip_random() {
        let mut rng = Rng::seed_from_u64(11);
        for n in 1..=3 {
            for _ in 0..10 {
                let mut h = random_hermitian(&mut rng, n);
                let norm = spectral_norm(&h);
                h *= c(2.5 / norm);
                let u = expm(&h, 1.0).unwrap();
                let back = hermitian_log(&u);
                assert!(distance(&back, &h) < 1e-9, "n={n}");
            }
        }
    }

    #[test]
    fn log_at_branch_cut() {
        // -I on one qubit: both phases +π
        let u = DenseUnitary::new(-CMatrix::identity(2, 2)).unwrap();
        let h = hermitian_log(&u);
        assert!(distance(&h, &(CMatrix::identity(2, 2) * c(-PI))) < 1e-12);
        let h0 = hermitian_log_traceless(&u).unwrap();
        assert!(h0.trace().norm() < 1e-12);
        assert!(distance(&expm_hermitian(&h0, 1.0), u.matrix()) < 1e-12);
    }

    #[test]
    fn traceless_log_needs_unit_determinant() {
        let u = DenseUnitary::new(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), I]))).unwrap();
        assert!(matches!(hermitian_log_traceless(&u), Err(Error::DeterminantPhase(_))));
    }

    #[test]
    fn phase_invariant() {
        let u = expm(&x(), 0.3).unwrap();
        let v = u.matrix() * Complex64::from_polar(1.0, 1.1);
        assert!(phase_invariant_distance(u.matrix(), &v) < 1e-12);
        // exp(-iθZ) vs I: eigenphases ±θ, best phase leaves θ on each side
        let z = "Z".parse::<PauliWord>().unwrap().dense();
        let w = expm(&z, 0.2).unwrap();
        let d = phase_invariant_distance(w.matrix(), &CMatrix::identity(2, 2));
        assert!((d - 2.0 * (0.2f64 / 2.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn local_application_matches_kron() {
        let mut rng = Rng::seed_from_u64(5);
        let g = expm(&random_hermitian(&mut rng, 2), 1.0).unwrap().into_matrix();
        let id = CMatrix::identity(2, 2);
        // targets (0, 2) on 3 qubits: conjugate a kron embedding by a swap of qubits 1,2
        let mut m = CMatrix::identity(8, 8);
        apply_local(&mut m, 3, &[0, 1], &g);
        assert!(distance(&m, &kron(&g, &id)) < 1e-14);
        let mut m2 = CMatrix::identity(8, 8);
        apply_local(&mut m2, 3, &[1, 2], &g);
        assert!(distance(&m2, &kron(&id, &g)) < 1e-14);
        let mut m3 = CMatrix::identity(8, 8);
        apply_local(&mut m3, 3, &[2, 1], &g);
        let swap = crate::dense::tests::swap();
        assert!(distance(&m3, &kron(&id, &(&swap * &g * &swap))) < 1e-14);
    }

    pub(crate) fn swap() -> CMatrix {
        let mut s = CMatrix::zeros(4, 4);
        s[(0, 0)] = c(1.0);
        s[(1, 2)] = c(1.0);
        s[(2, 1)] = c(1.0);
        s[(3, 3)] = c(1.0);
        s
    }
}
