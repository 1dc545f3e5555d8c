use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{PauliError, PauliSum, PauliWord, HERMITIAN_TOL};

/// Largest qubit count accepted by the dense routines.
pub const DENSE_QUBIT_CAP: usize = 14;

/// Imaginary part of an expectation value worth a warning.
const IMAG_RESIDUE_WARN: f64 = 1e-8;

/// Amplitudes on the computational basis. Index `i` reads qubit 0 as its most
/// significant bit, so `|q_0 q_1 … q_{m-1}⟩` is the binary expansion of `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitStateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl QubitStateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, PauliError> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(PauliError::Domain(format!("state length {len} is not a power of two")));
        }
        Ok(Self { n_qubits: len.trailing_zeros() as usize, amplitudes })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::default(); 1 << n_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amplitudes }
    }

    /// Basis state from per-qubit bits, qubit 0 first.
    pub fn from_bits(bits: &[bool]) -> Self {
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        Self::basis(bits.len(), index)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Result<Self, PauliError> {
        let n = self.norm();
        if n < crate::ZERO_TOL {
            return Err(PauliError::Domain("cannot normalize a zero vector".into()));
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(self)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `|⟨self|other⟩|²`
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// Fix the global phase so the largest amplitude (lowest index on ties) is real and positive.
    pub fn canonical_phase(mut self) -> Self {
        let mut best = 0usize;
        let mut best_mag = -1.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm() > best_mag + 1e-9 {
                best = i;
                best_mag = a.norm();
            }
        }
        if best_mag > 0.0 {
            let phase = self.amplitudes[best].conj() / best_mag;
            self.amplitudes.iter_mut().for_each(|a| *a *= phase);
        }
        self
    }
}

/// Word masks in basis-index bit order (qubit `q` ↦ bit `m-1-q`).
fn index_masks(w: &PauliWord) -> (usize, usize) {
    let n = w.n_qubits();
    let flip = |mask: u64| -> usize {
        (0..n).filter(|q| mask >> q & 1 == 1).fold(0usize, |acc, q| acc | 1 << (n - 1 - q))
    };
    (flip(w.x_mask()), flip(w.z_mask()))
}

fn check_cap(n: usize) -> Result<(), PauliError> {
    if n > DENSE_QUBIT_CAP {
        Err(PauliError::Capacity(n))
    } else {
        Ok(())
    }
}

/// `H|ψ⟩`, computed word by word.
pub fn apply(h: &PauliSum, psi: &QubitStateVector) -> Result<Vec<Complex64>, PauliError> {
    if h.n_qubits() != psi.n_qubits {
        return Err(PauliError::QubitMismatch(h.n_qubits(), psi.n_qubits));
    }
    let mut out = vec![Complex64::default(); psi.amplitudes.len()];
    for (w, c) in h.terms() {
        let (xm, zm) = index_masks(w);
        let base = c * super::Phase::from_power(w.y_count()).to_complex();
        for (i, a) in psi.amplitudes.iter().enumerate() {
            let sign = if (zm & i).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[i ^ xm] += base * a * sign;
        }
    }
    Ok(out)
}

/// Dense `2^m × 2^m` matrix.
pub fn to_dense(h: &PauliSum) -> Result<DMatrix<Complex64>, PauliError> {
    let n = h.n_qubits();
    check_cap(n)?;
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for (w, c) in h.terms() {
        let (xm, zm) = index_masks(w);
        let base = c * super::Phase::from_power(w.y_count()).to_complex();
        for col in 0..dim {
            let sign = if (zm & col).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            m[(col ^ xm, col)] += base * sign;
        }
    }
    Ok(m)
}

/// Real symmetric matrix, available when every word has an even number of Y
/// factors and real coefficients.
fn to_dense_real(h: &PauliSum) -> Option<DMatrix<f64>> {
    if h.terms().any(|(w, c)| w.y_count() % 2 == 1 || c.im.abs() > 0.0) {
        return None;
    }
    let n = h.n_qubits();
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for (w, c) in h.terms() {
        let (xm, zm) = index_masks(w);
        let base = if w.y_count() % 4 == 2 { -c.re } else { c.re };
        for col in 0..dim {
            let sign = if (zm & col).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            m[(col ^ xm, col)] += base * sign;
        }
    }
    Some(m)
}

enum Decomposition {
    Real(SymmetricEigen<f64, nalgebra::Dyn>),
    Complex(SymmetricEigen<Complex64, nalgebra::Dyn>),
}

fn decompose(h: &PauliSum) -> Result<Decomposition, PauliError> {
    check_cap(h.n_qubits())?;
    h.check_hermitian(HERMITIAN_TOL)?;
    Ok(match to_dense_real(h) {
        Some(m) => Decomposition::Real(m.symmetric_eigen()),
        None => Decomposition::Complex(to_dense(h)?.symmetric_eigen()),
    })
}

/// Full spectrum in ascending order.
pub fn eigenvalues(h: &PauliSum) -> Result<Vec<f64>, PauliError> {
    check_cap(h.n_qubits())?;
    h.check_hermitian(HERMITIAN_TOL)?;
    let mut ev: Vec<f64> = match to_dense_real(h) {
        Some(m) => m.symmetric_eigenvalues().iter().copied().collect(),
        None => to_dense(h)?.symmetric_eigenvalues().iter().copied().collect(),
    };
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundState {
    pub energy: f64,
    pub state: QubitStateVector,
}

/// Lowest eigenpair by dense diagonalization.
pub fn ground_state(h: &PauliSum) -> Result<GroundState, PauliError> {
    let n = h.n_qubits();
    let (energy, amplitudes) = match decompose(h)? {
        Decomposition::Real(eig) => {
            let k = argmin(eig.eigenvalues.as_slice());
            let v = eig.eigenvectors.column(k).iter().map(|&a| Complex64::new(a, 0.0)).collect();
            (eig.eigenvalues[k], v)
        }
        Decomposition::Complex(eig) => {
            let k = argmin(eig.eigenvalues.as_slice());
            (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())
        }
    };
    let state = QubitStateVector { n_qubits: n, amplitudes }.normalized()?.canonical_phase();
    Ok(GroundState { energy, state })
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Lowest eigenvalue of `H` restricted to the basis states selected by `keep`.
pub fn restricted_ground_energy(h: &PauliSum, keep: impl Fn(usize) -> bool) -> Result<f64, PauliError> {
    h.check_hermitian(HERMITIAN_TOL)?;
    let full = to_dense(h)?;
    let idx: Vec<usize> = (0..full.nrows()).filter(|&i| keep(i)).collect();
    if idx.is_empty() {
        return Err(PauliError::Domain("empty subspace".into()));
    }
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| full[(idx[r], idx[c])]);
    Ok(sub.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min))
}

/// `⟨ψ|H|ψ⟩` including any imaginary part.
pub fn expectation_complex(h: &PauliSum, psi: &QubitStateVector) -> Result<Complex64, PauliError> {
    let hpsi = apply(h, psi)?;
    Ok(psi.amplitudes.iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum())
}

/// Real part of `⟨ψ|H|ψ⟩`; a noticeable imaginary residue is logged.
pub fn expectation(h: &PauliSum, psi: &QubitStateVector) -> Result<f64, PauliError> {
    let e = expectation_complex(h, psi)?;
    if e.im.abs() > IMAG_RESIDUE_WARN {
        log::warn!("expectation value has imaginary residue {:e}", e.im);
    }
    Ok(e.re)
}
