//! Seeded random samplers shared by the bound checks, the optimizer and the
//! property suite.

use rand::Rng as _;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::{c, CMatrix, DenseUnitary};
use crate::pauli::{PauliExpansion, PauliWord};
use num_complex::Complex64;

/// The generator used everywhere a seed is accepted.
pub type Rng = ChaCha8Rng;

pub fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Gaussian coefficients on the given words.
pub fn gaussian_expansion(rng: &mut Rng, n: usize, words: &[PauliWord]) -> PauliExpansion {
    let mut e = PauliExpansion::zero(n);
    for w in words {
        e.add_term(w.clone(), normal(rng)).expect("words share n and are not the identity");
    }
    e
}

/// Gaussian direction on all one- and two-qubit words with `Σ h_σ² = 1`.
pub fn unit_two_local(rng: &mut Rng, n: usize) -> PauliExpansion {
    let words = PauliWord::up_to_weight(n, 2);
    unit_direction(rng, n, &words)
}

/// Gaussian direction on `words`, normalised to unit coefficient norm.
pub fn unit_direction(rng: &mut Rng, n: usize, words: &[PauliWord]) -> PauliExpansion {
    loop {
        let e = gaussian_expansion(rng, n, words);
        let norm = e.coefficient_norm();
        if norm > 1e-12 {
            return e.scaled(1.0 / norm);
        }
    }
}

/// A random sparse expansion: each word of `words` is kept with probability
/// `density`, at least one word is always kept.
pub fn sparse_direction(rng: &mut Rng, n: usize, words: &[PauliWord], density: f64) -> PauliExpansion {
    let mut chosen: Vec<PauliWord> = words.iter().filter(|_| rng.random::<f64>() < density).cloned().collect();
    if chosen.is_empty() {
        chosen.push(words[rng.random_range(0..words.len())].clone());
    }
    unit_direction(rng, n, &chosen)
}

/// Random traceless Hermitian matrix with Gaussian Pauli coefficients.
pub fn random_hermitian(rng: &mut Rng, n: usize) -> CMatrix {
    let words: Vec<PauliWord> = PauliWord::all(n).filter(|w| !w.is_identity()).collect();
    gaussian_expansion(rng, n, &words).dense()
}

/// Haar-random element of U(2^n): QR of a complex Ginibre matrix with the
/// diagonal phases of R absorbed.
pub fn haar_unitary(rng: &mut Rng, n: usize) -> DenseUnitary {
    let d = 1usize << n;
    let g = CMatrix::from_fn(d, d, |_, _| Complex64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2);
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..d {
        let z = r[(k, k)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { c(1.0) };
        q.column_mut(k).iter_mut().for_each(|e| *e *= phase);
    }
    DenseUnitary::from_product(n, q)
}

/// Haar-random element of SU(2^n); one of the `2^n` determinant roots is
/// picked uniformly so the distribution stays Haar on SU.
pub fn haar_special_unitary(rng: &mut Rng, n: usize) -> DenseUnitary {
    let u = haar_unitary(rng, n);
    let d = u.dim() as f64;
    let det = u.matrix().determinant();
    let branch = rng.random_range(0..u.dim()) as f64;
    let phase = Complex64::from_polar(1.0, -(det.arg() + 2.0 * std::f64::consts::PI * branch) / d);
    DenseUnitary::from_product(u.n(), u.matrix() * phase)
}
