//! Pauli words and sparse real Pauli expansions.
//!
//! Qubit 1 is the leftmost letter of a word and the most significant bit of a
//! computational basis index, so `dense("XZ") = X ⊗ Z`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dense::CMatrix;
use crate::{Error, Result};

/// Coefficients with magnitude at or below this are dropped by [`expand`].
pub const COEFFICIENT_FLOOR: f64 = 1e-14;
/// Identity coefficient above which a matrix is rejected as not traceless.
pub const TRACE_TOLERANCE: f64 = 1e-10;
/// Hermiticity tolerance on the max-entry residual `|H - H†|`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// `self · other = i^k · letter`, returned as `(k, letter)`.
    fn product(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
        }
    }
}

/// A phase in `{+1, +i, -1, -i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    /// `i^k`.
    pub fn from_power(k: u8) -> Self {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn power(self) -> u8 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::PlusOne => Complex64::new(1.0, 0.0),
            Phase::PlusI => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }

    pub fn is_real(self) -> bool {
        matches!(self, Phase::PlusOne | Phase::MinusOne)
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase::from_power(self.power() + rhs.power())
    }
}

/// An n-qubit tensor product of Pauli letters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliWord {
    letters: Vec<Pauli>,
}

impl PauliWord {
    /// Builds a word; `letters` must be nonempty.
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidWord(String::new()));
        }
        Ok(Self { letters })
    }

    pub fn identity(n: usize) -> Self {
        Self { letters: vec![Pauli::I; n] }
    }

    /// The word with `letters[q] = p` for each `(q, p)` in `ops` (0-based) and
    /// identity elsewhere.
    pub fn from_sparse(n: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut letters = vec![Pauli::I; n];
        for &(q, p) in ops {
            if q >= n {
                return Err(Error::InvalidParameter(format!("qubit index {q} out of range for n={n}")));
            }
            letters[q] = p;
        }
        Self::new(letters)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// 0-based indices of the non-identity letters, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    /// The word restricted to `qubits`, in the given order.
    pub fn restrict(&self, qubits: &[usize]) -> PauliWord {
        PauliWord { letters: qubits.iter().map(|&q| self.letters[q]).collect() }
    }

    /// Bit masks (qubit 1 = most significant bit) of letters that flip the
    /// basis state (X, Y) and that contribute a sign (Y, Z).
    fn masks(&self) -> (usize, usize, u8) {
        let n = self.letters.len();
        let mut flip = 0usize;
        let mut sign = 0usize;
        let mut ys = 0u8;
        for (q, &p) in self.letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    sign |= bit;
                    ys += 1;
                }
                Pauli::Z => sign |= bit,
            }
        }
        (flip, sign, ys % 4)
    }

    /// Nonzero entries of the dense operator: column `x` has its single
    /// nonzero entry at row `x ^ flip`, with the returned value.
    pub(crate) fn monomial(&self) -> (usize, impl Fn(usize) -> Complex64) {
        let (flip, sign, ys) = self.masks();
        let base = Phase::from_power(ys).to_complex();
        (flip, move |x: usize| {
            if (x & sign).count_ones() % 2 == 1 {
                -base
            } else {
                base
            }
        })
    }

    /// Dense `2^n x 2^n` matrix.
    pub fn dense(&self) -> CMatrix {
        let dim = 1usize << self.letters.len();
        let (flip, value) = self.monomial();
        let mut m = DMatrix::zeros(dim, dim);
        for x in 0..dim {
            m[(x ^ flip, x)] = value(x);
        }
        m
    }

    /// True when the two words commute.
    pub fn commutes_with(&self, other: &PauliWord) -> bool {
        let anti = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(&a, &b)| a != Pauli::I && b != Pauli::I && a != b)
            .count();
        anti % 2 == 0
    }

    /// All `4^n` words in lexicographic order (I < X < Y < Z).
    pub fn all(n: usize) -> impl Iterator<Item = PauliWord> {
        (0..(1usize << (2 * n))).map(move |mut code| {
            let mut letters = vec![Pauli::I; n];
            for q in (0..n).rev() {
                letters[q] = Pauli::ALL[code & 3];
                code >>= 2;
            }
            PauliWord { letters }
        })
    }

    /// Non-identity words of weight at most `max_weight`, lexicographic.
    pub fn up_to_weight(n: usize, max_weight: usize) -> Vec<PauliWord> {
        Self::all(n)
            .filter(|w| {
                let wt = w.weight();
                wt >= 1 && wt <= max_weight
            })
            .collect()
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::InvalidWord(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        PauliWord::new(letters)
    }
}

impl serde::Serialize for PauliWord {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PauliWord {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct WordVisitor;
        impl serde::de::Visitor<'_> for WordVisitor {
            type Value = PauliWord;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonempty string over IXYZ")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<PauliWord, E> {
                v.parse().map_err(|_| E::custom(format!("invalid pauli word `{v}`")))
            }
        }
        deserializer.deserialize_str(WordVisitor)
    }
}

/// Product of two words: `dense(a) · dense(b) = phase · dense(word)`.
pub fn word_product(a: &PauliWord, b: &PauliWord) -> Result<(Phase, PauliWord)> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let mut k = 0u8;
    let letters = a
        .letters
        .iter()
        .zip(&b.letters)
        .map(|(&x, &y)| {
            let (pk, p) = x.product(y);
            k += pk;
            p
        })
        .collect();
    Ok((Phase::from_power(k), PauliWord { letters }))
}

/// A traceless Hermitian operator `Σ_σ h_σ σ` with real coefficients.
///
/// Terms are kept in lexicographic word order; zero coefficients and the
/// identity word are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliExpansion {
    n: usize,
    terms: BTreeMap<PauliWord, f64>,
}

impl PauliExpansion {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    /// Sums the given terms; repeated words accumulate.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliWord, f64)>,
    {
        let mut e = Self::zero(n);
        for (w, c) in terms {
            e.add_term(w, c)?;
        }
        Ok(e)
    }

    /// Convenience constructor from `(word, coefficient)` string pairs.
    pub fn from_strs(n: usize, terms: &[(&str, f64)]) -> Result<Self> {
        Self::from_terms(
            n,
            terms
                .iter()
                .map(|&(w, c)| w.parse::<PauliWord>().map(|w| (w, c)))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Adds `coefficient · word`, removing the entry if it cancels to zero.
    pub fn add_term(&mut self, word: PauliWord, coefficient: f64) -> Result<()> {
        if word.len() != self.n {
            return Err(Error::LengthMismatch(self.n, word.len()));
        }
        if !coefficient.is_finite() {
            return Err(Error::InvalidParameter(format!("coefficient {coefficient} for {word}")));
        }
        if coefficient == 0.0 {
            return Ok(());
        }
        if word.is_identity() {
            return Err(Error::IdentityTerm);
        }
        let entry = self.terms.entry(word).or_insert(0.0);
        *entry += coefficient;
        if *entry == 0.0 {
            self.terms.retain(|_, c| *c != 0.0);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, word: &PauliWord) -> f64 {
        self.terms.get(word).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliWord, f64)> + '_ {
        self.terms.iter().map(|(w, &c)| (w, c))
    }

    /// Largest term weight, 0 for the zero operator.
    pub fn max_weight(&self) -> usize {
        self.terms.keys().map(PauliWord::weight).max().unwrap_or(0)
    }

    pub fn is_two_local(&self) -> bool {
        self.max_weight() <= 2
    }

    /// `sqrt(Σ h_σ²)`.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Keeps only the terms accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&PauliWord) -> bool) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().filter(|(w, _)| keep(w)).map(|(w, &c)| (w.clone(), c)).collect(),
        }
    }

    /// Drops coefficients with magnitude at or below `tolerance`.
    pub fn pruned(&self, tolerance: f64) -> Self {
        self.filter_terms(|_, c| c.abs() > tolerance)
    }

    fn filter_terms(&self, mut keep: impl FnMut(&PauliWord, f64) -> bool) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().filter(|(w, &c)| keep(w, c)).map(|(w, &c)| (w.clone(), c)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        if factor == 0.0 {
            return Self::zero(self.n);
        }
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(w, &c)| (w.clone(), c * factor)).collect(),
        }
    }

    /// `self + factor · other`.
    pub fn add_scaled(&self, other: &PauliExpansion, factor: f64) -> Result<Self> {
        if other.n != self.n {
            return Err(Error::LengthMismatch(self.n, other.n));
        }
        let mut out = self.clone();
        for (w, c) in other.terms() {
            out.add_term(w.clone(), factor * c)?;
        }
        Ok(out)
    }

    /// Dense matrix `Σ h_σ σ`.
    pub fn dense(&self) -> CMatrix {
        reconstruct(self)
    }

    /// Parses the line-oriented `<word> <coefficient>` format; `#` starts a
    /// comment. The qubit count is taken from the first word unless `n` is
    /// given.
    pub fn parse_text(text: &str, n: Option<usize>) -> Result<Self> {
        let mut expansion: Option<PauliExpansion> = n.map(PauliExpansion::zero);
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let mut fields = line.split_whitespace();
            let word_str = fields.next().unwrap_or("");
            let coeff_str = fields
                .next()
                .ok_or_else(|| parse_err(format!("missing coefficient after `{word_str}`")))?;
            if fields.next().is_some() {
                return Err(parse_err("expected `<word> <coefficient>`".into()));
            }
            let word: PauliWord =
                word_str.parse().map_err(|_| parse_err(format!("invalid pauli word `{word_str}`")))?;
            let coeff: f64 =
                coeff_str.parse().map_err(|_| parse_err(format!("invalid coefficient `{coeff_str}`")))?;
            let e = expansion.get_or_insert_with(|| PauliExpansion::zero(word.len()));
            e.add_term(word, coeff).map_err(|err| parse_err(err.to_string()))?;
        }
        expansion.ok_or_else(|| Error::Parse { line: 0, message: "no terms and no qubit count".into() })
    }

    /// Inverse of [`PauliExpansion::parse_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (w, c) in self.terms() {
            s.push_str(&format!("{w} {c:?}\n"));
        }
        s
    }

    /// Word → coefficient map keyed by the word string.
    pub fn to_string_map(&self) -> BTreeMap<String, f64> {
        self.terms.iter().map(|(w, &c)| (w.to_string(), c)).collect()
    }

    pub fn from_string_map(n: usize, map: &BTreeMap<String, f64>) -> Result<Self> {
        Self::from_terms(
            n,
            map.iter()
                .map(|(w, &c)| w.parse::<PauliWord>().map(|w| (w, c)))
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

/// Hermiticity residual: largest entry of `|H - H†|`.
pub fn hermitian_residual(h: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..h.nrows() {
        for j in i..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

fn qubits_of_dimension(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::Dimension { expected: dim.next_power_of_two().max(2), got: dim });
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Pauli coefficients `h_σ = tr(σH)/2^n` of every word, identity included.
fn coefficients(h: &CMatrix) -> Result<(usize, Vec<(PauliWord, f64)>)> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension { expected: h.nrows(), got: h.ncols() });
    }
    let n = qubits_of_dimension(h.nrows())?;
    let scale = h.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let residual = hermitian_residual(h);
    if residual > HERMITIAN_TOLERANCE * scale {
        return Err(Error::NotHermitian(residual));
    }
    let dim = 1usize << n;
    let out = PauliWord::all(n)
        .map(|w| {
            let (flip, value) = w.monomial();
            let mut tr = Complex64::new(0.0, 0.0);
            for x in 0..dim {
                // σ[x^flip, x] · H[x, x^flip]
                tr += value(x) * h[(x, x ^ flip)];
            }
            (w, tr.re / dim as f64)
        })
        .collect();
    Ok((n, out))
}

/// Pauli expansion of a Hermitian traceless matrix.
///
/// Coefficients at or below [`COEFFICIENT_FLOOR`] are dropped. An identity
/// component above [`TRACE_TOLERANCE`] is an error; a smaller one is dropped.
pub fn expand(h: &CMatrix) -> Result<PauliExpansion> {
    let (n, coeffs) = coefficients(h)?;
    let mut e = PauliExpansion::zero(n);
    for (w, c) in coeffs {
        if w.is_identity() {
            if c.abs() > TRACE_TOLERANCE {
                return Err(Error::NotTraceless(c));
            }
            continue;
        }
        if c.abs() > COEFFICIENT_FLOOR {
            e.add_term(w, c)?;
        }
    }
    Ok(e)
}

/// Like [`expand`], but an identity component of any size is dropped with a
/// logged warning (the traceless part generates the same projective action).
pub fn expand_traceless_part(h: &CMatrix) -> Result<PauliExpansion> {
    let (n, coeffs) = coefficients(h)?;
    let mut e = PauliExpansion::zero(n);
    for (w, c) in coeffs {
        if w.is_identity() {
            if c.abs() > TRACE_TOLERANCE {
                log::warn!("dropping identity component {c:.3e} from Pauli expansion");
            }
            continue;
        }
        if c.abs() > COEFFICIENT_FLOOR {
            e.add_term(w, c)?;
        }
    }
    Ok(e)
}

/// Dense matrix `Σ_σ h_σ σ`.
pub fn reconstruct(e: &PauliExpansion) -> CMatrix {
    let dim = 1usize << e.n;
    let mut m = DMatrix::zeros(dim, dim);
    for (w, c) in e.terms() {
        let (flip, value) = w.monomial();
        for x in 0..dim {
            m[(x ^ flip, x)] += value(x) * c;
        }
    }
    m
}

/// `i[A, B]` computed exactly in the Pauli basis.
pub fn commutator_i(a: &PauliExpansion, b: &PauliExpansion) -> Result<PauliExpansion> {
    if a.n != b.n {
        return Err(Error::LengthMismatch(a.n, b.n));
    }
    let mut out = PauliExpansion::zero(a.n);
    for (wa, ca) in a.terms() {
        for (wb, cb) in b.terms() {
            if wa.commutes_with(wb) {
                continue;
            }
            // σaσb - σbσa = 2 σaσb for anticommuting words, with σaσb = ±i σc.
            let (phase, wc) = word_product(wa, wb)?;
            let sign = match phase {
                Phase::PlusI => -1.0,
                Phase::MinusI => 1.0,
                _ => unreachable!("anticommuting words multiply to an imaginary phase"),
            };
            out.add_term(wc, 2.0 * sign * ca * cb)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{spectral_norm, CMatrix};

    fn w(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn single_qubit_products() {
        assert_eq!(word_product(&w("X"), &w("Y")).unwrap(), (Phase::PlusI, w("Z")));
        assert_eq!(word_product(&w("XI"), &w("XI")).unwrap(), (Phase::PlusOne, w("II")));
        assert_eq!(word_product(&w("Z"), &w("Y")).unwrap(), (Phase::MinusI, w("X")));
    }

    #[test]
    fn product_length_mismatch() {
        assert!(matches!(word_product(&w("X"), &w("XY")), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn product_matches_dense_exhaustively() {
        for n in 1..=2 {
            let words: Vec<_> = PauliWord::all(n).collect();
            for a in &words {
                for b in &words {
                    let (phase, c) = word_product(a, b).unwrap();
                    let lhs = a.dense() * b.dense();
                    let rhs = c.dense() * phase.to_complex();
                    assert_eq!(max_diff(&lhs, &rhs), 0.0, "{a}·{b}");
                    assert_eq!(a.commutes_with(b), phase.is_real());
                }
            }
        }
    }

    #[test]
    fn xz_zx_against_dense() {
        let (phase, c) = word_product(&w("XZ"), &w("ZX")).unwrap();
        // (X⊗Z)(Z⊗X) = XZ ⊗ ZX = (-iY) ⊗ (iY) = Y⊗Y
        assert_eq!((phase, c.clone()), (Phase::PlusOne, w("YY")));
        let lhs = w("XZ").dense() * w("ZX").dense();
        assert_eq!(max_diff(&lhs, &(c.dense() * phase.to_complex())), 0.0);
    }

    #[test]
    fn weights_and_support() {
        assert_eq!(w("IXIZ").weight(), 2);
        assert_eq!(w("IXIZ").support(), vec![1, 3]);
        assert!(w("III").is_identity());
        assert!("XQZ".parse::<PauliWord>().is_err());
        assert!("".parse::<PauliWord>().is_err());
    }

    #[test]
    fn expand_zz() {
        let e = expand(&w("ZZ").dense()).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.coefficient(&w("ZZ")), 1.0);
        assert!(expand(&CMatrix::zeros(4, 4)).unwrap().is_empty());
    }

    #[test]
    fn expand_rejects_bad_input() {
        let mut m = w("X").dense();
        m[(0, 1)] = Complex64::new(2.0, 0.0);
        assert!(matches!(expand(&m), Err(Error::NotHermitian(_))));
        let id = CMatrix::identity(2, 2);
        assert!(matches!(expand(&id), Err(Error::NotTraceless(_))));
        let dropped = expand_traceless_part(&(id + w("Z").dense())).unwrap();
        assert_eq!(dropped, PauliExpansion::from_strs(1, &[("Z", 1.0)]).unwrap());
        assert!(expand(&CMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn reconstruct_examples() {
        let e = PauliExpansion::from_strs(1, &[("X", 0.5)]).unwrap();
        let m = reconstruct(&e);
        assert_eq!(m[(0, 1)], Complex64::new(0.5, 0.0));
        assert_eq!(m[(1, 0)], Complex64::new(0.5, 0.0));
        assert_eq!(m[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(reconstruct(&PauliExpansion::zero(2)), CMatrix::zeros(4, 4));
    }

    #[test]
    fn spectral_norm_of_pauli_combination() {
        let e = PauliExpansion::from_strs(1, &[("X", 0.3), ("Y", 0.4)]).unwrap();
        assert!((spectral_norm(&e.dense()) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn identity_term_rejected() {
        assert!(matches!(PauliExpansion::from_strs(2, &[("II", 1.0)]), Err(Error::IdentityTerm)));
        let mut e = PauliExpansion::from_strs(2, &[("XY", 1.0)]).unwrap();
        e.add_term(w("XY"), -1.0).unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn text_format() {
        let text = "# demo\nXZI 0.25\nIIZ -1.5  # trailing\n\n";
        let e = PauliExpansion::parse_text(text, None).unwrap();
        assert_eq!(e.n(), 3);
        assert_eq!(e.coefficient(&w("XZI")), 0.25);
        assert_eq!(e.coefficient(&w("IIZ")), -1.5);
        assert_eq!(PauliExpansion::parse_text(&e.to_text(), None).unwrap(), e);

        match PauliExpansion::parse_text("XX 1.0\nXQ 2.0\n", None) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("XQ"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(PauliExpansion::parse_text("XX 1.0\nXXX 2.0", None).is_err());
    }

    #[test]
    fn two_local_word_count() {
        for n in 1..=6 {
            let count = PauliWord::up_to_weight(n, 2).len();
            assert_eq!(count, 9 * n * (n - 1) / 2 + 3 * n, "n={n}");
        }
    }

    #[test]
    fn commutator_matches_dense() {
        let a = PauliExpansion::from_strs(2, &[("XI", 0.7), ("ZY", -0.2)]).unwrap();
        let b = PauliExpansion::from_strs(2, &[("ZZ", 0.4), ("YI", 1.1)]).unwrap();
        let c = commutator_i(&a, &b).unwrap();
        let (da, db) = (a.dense(), b.dense());
        let dense = (&da * &db - &db * &da) * Complex64::new(0.0, 1.0);
        assert!(max_diff(&c.dense(), &dense) < 1e-14);
    }
}
