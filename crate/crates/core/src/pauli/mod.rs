//! Pauli-word algebra, fermion-to-qubit encodings and the dense
//! exact-diagonalization reference.

mod dense;
mod transform;
mod word;

pub use dense::{
    apply, eigenvalues, expectation, expectation_complex, ground_state, restricted_ground_energy, to_dense,
    GroundState, QubitStateVector, DENSE_QUBIT_CAP,
};
pub use transform::{bravyi_kitaev, jordan_wigner, Encoding};
pub use word::{Pauli, PauliWord, Phase, MAX_QUBITS};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::ZERO_TOL;

/// Imaginary residue tolerated on coefficients of a Hermitian sum.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum PauliError {
    #[error("qubit count mismatch: {0} vs {1}")]
    QubitMismatch(usize, usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0} qubits exceed the dense diagonalization cap of {DENSE_QUBIT_CAP}")]
    Capacity(usize),
    #[error("operator is not Hermitian: imaginary residue {0:e} on `{1}`")]
    NotHermitian(f64, String),
}

/// `Σ_i α_i P_i` over a fixed number of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliWord, Complex64>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, terms: BTreeMap::new() }
    }

    pub fn identity(n_qubits: usize, coeff: f64) -> Self {
        Self::from_word(PauliWord::identity(n_qubits), Complex64::new(coeff, 0.0))
    }

    pub fn from_word(word: PauliWord, coeff: Complex64) -> Self {
        let mut s = Self::new(word.n_qubits());
        s.add_term(word, coeff);
        s
    }

    /// Build from `(coefficient, word)` pairs given as text, e.g. `(0.5, "XZ")`.
    pub fn from_pairs(pairs: &[(f64, &str)]) -> Result<Self, PauliError> {
        let first = pairs.first().ok_or_else(|| PauliError::Domain("empty term list".into()))?;
        let mut s = Self::new(first.1.len());
        for (c, w) in pairs {
            let word: PauliWord = w.parse()?;
            if word.n_qubits() != s.n_qubits {
                return Err(PauliError::QubitMismatch(s.n_qubits, word.n_qubits()));
            }
            s.add_term(word, Complex64::new(*c, 0.0));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, word: PauliWord, coeff: Complex64) {
        assert_eq!(word.n_qubits(), self.n_qubits, "word/sum qubit count mismatch");
        *self.terms.entry(word).or_default() += coeff;
    }

    pub fn coefficient(&self, word: &PauliWord) -> Complex64 {
        self.terms.get(word).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliWord, &Complex64)> {
        self.terms.iter()
    }

    pub fn words(&self) -> impl Iterator<Item = &PauliWord> {
        self.terms.keys()
    }

    /// Drop coefficients below the global zero threshold.
    pub fn simplify(mut self) -> Self {
        self.terms.retain(|_, c| c.norm() >= ZERO_TOL);
        self
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|c| *c *= factor);
        out
    }

    pub fn max_imaginary(&self) -> (f64, Option<PauliWord>) {
        self.terms
            .iter()
            .map(|(w, c)| (c.im.abs(), Some(*w)))
            .fold((0.0, None), |a, b| if b.0 > a.0 { b } else { a })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imaginary().0 < tol
    }

    /// Fail unless every coefficient is real within `tol`.
    pub fn check_hermitian(&self, tol: f64) -> Result<(), PauliError> {
        match self.max_imaginary() {
            (r, Some(w)) if r >= tol => Err(PauliError::NotHermitian(r, w.to_string())),
            _ => Ok(()),
        }
    }

    /// Real coefficients, after checking Hermiticity.
    pub fn real_terms(&self) -> Result<Vec<(PauliWord, f64)>, PauliError> {
        self.check_hermitian(HERMITIAN_TOL)?;
        Ok(self.terms.iter().map(|(w, c)| (*w, c.re)).collect())
    }

    /// Σ|α_i|, optionally skipping the identity coefficient.
    pub fn l1_norm(&self, include_identity: bool) -> f64 {
        self.terms
            .iter()
            .filter(|(w, _)| include_identity || !w.is_identity())
            .map(|(_, c)| c.norm())
            .sum()
    }

    pub fn constant(&self) -> Complex64 {
        self.coefficient(&PauliWord::identity(self.n_qubits))
    }

    /// Terms with only I/Z factors.
    pub fn diagonal_part(&self) -> Self {
        let mut out = Self::new(self.n_qubits);
        for (w, c) in &self.terms {
            if w.is_diagonal() {
                out.add_term(*w, *c);
            }
        }
        out
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, PauliError> {
        if self.n_qubits != other.n_qubits {
            return Err(PauliError::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        let mut out = Self::new(self.n_qubits);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (phase, w) = a.mul_unchecked(b);
                out.add_term(w, ca * cb * phase.to_complex());
            }
        }
        Ok(out.simplify())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, PauliError> {
        if self.n_qubits != other.n_qubits {
            return Err(PauliError::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(*w, *c);
        }
        Ok(out.simplify())
    }

    /// One term per line, `coefficient word`, preceded by a qubit-count comment.
    /// Real coefficients are written bare, complex ones as `(re,im)`.
    pub fn to_text(&self) -> String {
        let mut out = format!("# n_qubits={}\n", self.n_qubits);
        for (w, c) in &self.terms {
            if c.im == 0.0 {
                let _ = writeln!(out, "{:e} {}", c.re, w);
            } else {
                let _ = writeln!(out, "({:e},{:e}) {}", c.re, c.im, w);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, PauliError> {
        let mut n_qubits: Option<usize> = None;
        let mut pending = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("n_qubits=") {
                    n_qubits = Some(
                        v.trim()
                            .parse()
                            .map_err(|_| PauliError::Parse(format!("line {}: bad qubit count", lineno + 1)))?,
                    );
                }
                continue;
            }
            let (coeff, word) = line
                .rsplit_once(char::is_whitespace)
                .ok_or_else(|| PauliError::Parse(format!("line {}: expected `coefficient word`", lineno + 1)))?;
            let bad = |what: &str| PauliError::Parse(format!("line {}: bad {what}", lineno + 1));
            let coeff = coeff.trim();
            let c = if let Some(inner) = coeff.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
                let (re, im) = inner.split_once(',').ok_or_else(|| bad("complex coefficient"))?;
                Complex64::new(
                    re.trim().parse().map_err(|_| bad("real part"))?,
                    im.trim().parse().map_err(|_| bad("imaginary part"))?,
                )
            } else {
                Complex64::new(coeff.parse().map_err(|_| bad("coefficient"))?, 0.0)
            };
            pending.push((c, word.parse::<PauliWord>()?));
        }
        let n = match (n_qubits, pending.first()) {
            (Some(n), _) => n,
            (None, Some((_, w))) => w.n_qubits(),
            (None, None) => return Err(PauliError::Parse("empty Pauli sum without qubit count".into())),
        };
        let mut out = Self::new(n);
        for (c, w) in pending {
            if w.n_qubits() != n {
                return Err(PauliError::QubitMismatch(n, w.n_qubits()));
            }
            out.add_term(w, c);
        }
        Ok(out)
    }
}

/// `ab − ba`, simplified.
pub fn commutator(a: &PauliSum, b: &PauliSum) -> Result<PauliSum, PauliError> {
    if a.n_qubits != b.n_qubits {
        return Err(PauliError::QubitMismatch(a.n_qubits, b.n_qubits));
    }
    let mut out = PauliSum::new(a.n_qubits);
    for (wa, ca) in &a.terms {
        for (wb, cb) in &b.terms {
            if wa.commutes_with(wb) {
                continue;
            }
            // anticommuting words: [P, Q] = 2PQ
            let (phase, w) = wa.mul_unchecked(wb);
            out.add_term(w, ca * cb * phase.to_complex() * 2.0);
        }
    }
    Ok(out.simplify())
}

/// `a · b = phase · word`, checked.
pub fn pauli_multiply(a: &PauliWord, b: &PauliWord) -> Result<(Phase, PauliWord), PauliError> {
    a.multiply(b)
}

impl Add for PauliSum {
    type Output = PauliSum;
    fn add(self, rhs: PauliSum) -> PauliSum {
        self.try_add(&rhs).expect("qubit count mismatch in PauliSum addition")
    }
}

impl Sub for PauliSum {
    type Output = PauliSum;
    fn sub(self, rhs: PauliSum) -> PauliSum {
        self + (-rhs)
    }
}

impl Neg for PauliSum {
    type Output = PauliSum;
    fn neg(self) -> PauliSum {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: &PauliSum) -> PauliSum {
        self.try_mul(rhs).expect("qubit count mismatch in PauliSum product")
    }
}
