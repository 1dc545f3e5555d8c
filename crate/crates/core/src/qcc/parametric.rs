//! `U(τ)† H U(τ)` kept symbolic in the entangler amplitudes.
//!
//! Conjugating a word `W` by `exp(−iτP/2)` leaves it alone when `W` and `P`
//! commute and otherwise yields `cosτ·W + sinτ·(−iWP)`. Every term of the
//! transformed Hamiltonian is therefore a real coefficient times a Pauli word
//! times one `cos τ_k` or `sin τ_k` factor for some subset of entanglers.

use std::collections::BTreeMap;

use crate::pauli::{Pauli, PauliSum, PauliWord, HERMITIAN_TOL};

use super::QccError;

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricTerm {
    pub word: PauliWord,
    pub coeff: f64,
    /// Entanglers contributing a `cos τ_k` factor.
    pub cos_mask: u32,
    /// Entanglers contributing a `sin τ_k` factor.
    pub sin_mask: u32,
    qubits: Vec<(u8, Pauli)>,
}

#[derive(Debug, Clone)]
pub struct ParametricHamiltonian {
    n_qubits: usize,
    entanglers: Vec<PauliWord>,
    terms: Vec<ParametricTerm>,
}

/// Angle vector layout: `[θ_0..θ_{m−1}, φ_0..φ_{m−1}, τ_0..τ_{N−1}]`.
pub fn n_params(m: usize, n_ent: usize) -> usize {
    2 * m + n_ent
}

impl ParametricHamiltonian {
    pub fn new(h: &PauliSum, entanglers: &[PauliWord]) -> Result<Self, QccError> {
        if entanglers.len() > 32 {
            return Err(QccError::Domain("at most 32 entanglers supported".into()));
        }
        let m = h.n_qubits();
        if let Some(p) = entanglers.iter().find(|p| p.n_qubits() != m) {
            return Err(QccError::Domain(format!("entangler {p} does not act on {m} qubits")));
        }
        let mut current: BTreeMap<(PauliWord, u32, u32), f64> = BTreeMap::new();
        for (w, c) in h.real_terms()? {
            *current.entry((w, 0, 0)).or_insert(0.0) += c;
        }
        for (k, p) in entanglers.iter().enumerate() {
            let bit = 1u32 << k;
            let mut next: BTreeMap<(PauliWord, u32, u32), f64> = BTreeMap::new();
            for ((w, cm, sm), c) in current {
                if w.commutes_with(p) {
                    *next.entry((w, cm, sm)).or_insert(0.0) += c;
                    continue;
                }
                *next.entry((w, cm | bit, sm)).or_insert(0.0) += c;
                let (phase, wp) = w.multiply(p)?;
                // −i · phase is real for anticommuting words
                let factor = crate::pauli::Phase::from_power(phase.power() as u32 + 3).to_complex();
                debug_assert!(factor.im.abs() < HERMITIAN_TOL);
                *next.entry((wp, cm, sm | bit)).or_insert(0.0) += c * factor.re;
            }
            current = next;
        }
        let terms = current
            .into_iter()
            .filter(|(_, c)| c.abs() >= crate::ZERO_TOL)
            .map(|((word, cos_mask, sin_mask), coeff)| ParametricTerm {
                word,
                coeff,
                cos_mask,
                sin_mask,
                qubits: (0..m)
                    .filter_map(|q| {
                        let p = word.get(q);
                        (p != Pauli::I).then_some((q as u8, p))
                    })
                    .collect(),
            })
            .collect();
        Ok(Self { n_qubits: m, entanglers: entanglers.to_vec(), terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_entanglers(&self) -> usize {
        self.entanglers.len()
    }

    pub fn entanglers(&self) -> &[PauliWord] {
        &self.entanglers
    }

    pub fn terms(&self) -> &[ParametricTerm] {
        &self.terms
    }

    pub fn n_params(&self) -> usize {
        n_params(self.n_qubits, self.entanglers.len())
    }

    /// Numeric transformed Hamiltonian at amplitudes `tau`.
    pub fn at(&self, tau: &[f64]) -> PauliSum {
        let mut out = PauliSum::new(self.n_qubits);
        for t in &self.terms {
            let f = tau_factor(t, tau);
            out.add_term(t.word, num_complex::Complex64::new(t.coeff * f, 0.0));
        }
        out.simplify()
    }

    pub fn energy(&self, angles: &[f64]) -> f64 {
        let m = self.n_qubits;
        let table = QubitTable::new(&angles[..m], &angles[m..2 * m]);
        let tau = &angles[2 * m..];
        self.terms
            .iter()
            .map(|t| {
                let mut v = t.coeff * tau_factor(t, tau);
                for &(q, p) in &t.qubits {
                    v *= table.value(q as usize, p);
                }
                v
            })
            .sum()
    }

    /// Energy and its gradient over the full angle vector.
    pub fn energy_and_gradient(&self, angles: &[f64], grad: &mut [f64]) -> f64 {
        let m = self.n_qubits;
        let n_ent = self.entanglers.len();
        let table = QubitTable::new(&angles[..m], &angles[m..2 * m]);
        let tau = &angles[2 * m..];
        let (ct, st): (Vec<f64>, Vec<f64>) = tau.iter().map(|t| (t.cos(), t.sin())).unzip();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut values: Vec<f64> = Vec::with_capacity(m + n_ent);
        let mut prefix: Vec<f64> = Vec::with_capacity(m + n_ent + 1);
        let mut total = 0.0;
        for t in &self.terms {
            values.clear();
            for &(q, p) in &t.qubits {
                values.push(table.value(q as usize, p));
            }
            for k in 0..n_ent {
                if t.cos_mask >> k & 1 == 1 {
                    values.push(ct[k]);
                } else if t.sin_mask >> k & 1 == 1 {
                    values.push(st[k]);
                }
            }
            prefix.clear();
            prefix.push(1.0);
            for v in &values {
                prefix.push(prefix.last().unwrap() * v);
            }
            total += t.coeff * prefix[values.len()];
            // walk the factors right to left, carrying the suffix product
            let mut suffix = 1.0;
            let mut idx = values.len();
            for k in (0..n_ent).rev() {
                let (is_cos, is_sin) = (t.cos_mask >> k & 1 == 1, t.sin_mask >> k & 1 == 1);
                if !(is_cos || is_sin) {
                    continue;
                }
                idx -= 1;
                let others = t.coeff * prefix[idx] * suffix;
                grad[2 * m + k] += others * if is_cos { -st[k] } else { ct[k] };
                suffix *= values[idx];
            }
            for &(q, p) in t.qubits.iter().rev() {
                idx -= 1;
                let others = t.coeff * prefix[idx] * suffix;
                let q = q as usize;
                let (dth, dph) = table.derivatives(q, p);
                grad[q] += others * dth;
                grad[m + q] += others * dph;
                suffix *= values[idx];
            }
        }
        total
    }
}

fn tau_factor(t: &ParametricTerm, tau: &[f64]) -> f64 {
    let mut f = 1.0;
    let mut cm = t.cos_mask;
    while cm != 0 {
        f *= tau[cm.trailing_zeros() as usize].cos();
        cm &= cm - 1;
    }
    let mut sm = t.sin_mask;
    while sm != 0 {
        f *= tau[sm.trailing_zeros() as usize].sin();
        sm &= sm - 1;
    }
    f
}

/// Per-qubit spin-coherent expectation values `⟨X⟩, ⟨Y⟩, ⟨Z⟩`.
pub(crate) struct QubitTable {
    st: Vec<f64>,
    ct: Vec<f64>,
    sp: Vec<f64>,
    cp: Vec<f64>,
}

impl QubitTable {
    pub(crate) fn new(theta: &[f64], phi: &[f64]) -> Self {
        Self {
            st: theta.iter().map(|t| t.sin()).collect(),
            ct: theta.iter().map(|t| t.cos()).collect(),
            sp: phi.iter().map(|t| t.sin()).collect(),
            cp: phi.iter().map(|t| t.cos()).collect(),
        }
    }

    pub(crate) fn value(&self, q: usize, p: Pauli) -> f64 {
        match p {
            Pauli::I => 1.0,
            Pauli::X => self.cp[q] * self.st[q],
            Pauli::Y => self.sp[q] * self.st[q],
            Pauli::Z => self.ct[q],
        }
    }

    /// `(∂/∂θ, ∂/∂φ)` of [`QubitTable::value`].
    fn derivatives(&self, q: usize, p: Pauli) -> (f64, f64) {
        match p {
            Pauli::I => (0.0, 0.0),
            Pauli::X => (self.cp[q] * self.ct[q], -self.sp[q] * self.st[q]),
            Pauli::Y => (self.sp[q] * self.ct[q], self.cp[q] * self.st[q]),
            Pauli::Z => (-self.st[q], 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_conjugated_by_y() {
        let h = PauliSum::from_pairs(&[(1.0, "Z")]).unwrap();
        let ph = ParametricHamiltonian::new(&h, &["Y".parse().unwrap()]).unwrap();
        let t = 0.37f64;
        let at = ph.at(&[t]);
        assert!((at.coefficient(&"Z".parse().unwrap()).re - t.cos()).abs() < 1e-15);
        assert!((at.coefficient(&"X".parse().unwrap()).re + t.sin()).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = PauliSum::from_pairs(&[(0.4, "XZY"), (-0.3, "ZZI"), (0.7, "IXX"), (0.2, "YIZ"), (0.1, "III")]).unwrap();
        let ents: Vec<PauliWord> = ["XYI", "IYZ"].iter().map(|s| s.parse().unwrap()).collect();
        let ph = ParametricHamiltonian::new(&h, &ents).unwrap();
        let x: Vec<f64> = (0..ph.n_params()).map(|i| 0.3 + 0.71 * i as f64).collect();
        let mut g = vec![0.0; x.len()];
        let e = ph.energy_and_gradient(&x, &mut g);
        assert!((e - ph.energy(&x)).abs() < 1e-14);
        let h5 = 1e-5;
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h5;
            let mut xm = x.clone();
            xm[i] -= h5;
            let fd = (ph.energy(&xp) - ph.energy(&xm)) / (2.0 * h5);
            assert!((fd - g[i]).abs() < 1e-8, "param {i}: {fd} vs {}", g[i]);
        }
    }
}
