//! Molecular integrals and second-quantized Hamiltonians.
//!
//! Integrals arrive in chemist notation `(pq|rs)` from FCIDUMP files. Spin
//! orbitals are interleaved: spatial orbital `p` with spin α is mode `2p`, with
//! spin β mode `2p + 1`.

mod fcidump;
mod fermion;

pub use fcidump::{parse_fcidump, write_fcidump};
pub use fermion::{FermionOperator, LadderOp, LadderString};

use num_complex::Complex64;
use thiserror::Error;

use crate::ZERO_TOL;

#[derive(Debug, Error)]
pub enum MolhamError {
    #[error("FCIDUMP parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("FCIDUMP consistency error at line {line}: {msg}")]
    Consistency { line: usize, msg: String },
    #[error("domain error: {0}")]
    Domain(String),
}

/// One- and two-electron integrals over spatial orbitals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    pub n_orbitals: usize,
    pub n_electrons: usize,
    /// Twice the spin projection.
    pub ms2: i64,
    pub core_energy: f64,
    /// Row-major `n × n`.
    pub one_body: Vec<f64>,
    /// Row-major `n⁴`, chemist order `(pq|rs)`.
    pub two_body: Vec<f64>,
    /// Parsed but unused by the Hamiltonian builder.
    pub orbsym: Vec<u32>,
    pub isym: Option<u32>,
}

impl IntegralSet {
    pub fn zeros(n_orbitals: usize, n_electrons: usize) -> Self {
        Self {
            n_orbitals,
            n_electrons,
            ms2: 0,
            core_energy: 0.0,
            one_body: vec![0.0; n_orbitals * n_orbitals],
            two_body: vec![0.0; n_orbitals.pow(4)],
            orbsym: Vec::new(),
            isym: None,
        }
    }

    pub fn one(&self, p: usize, q: usize) -> f64 {
        self.one_body[p * self.n_orbitals + q]
    }

    pub fn two(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_orbitals;
        self.two_body[((p * n + q) * n + r) * n + s]
    }

    pub fn set_one(&mut self, p: usize, q: usize, value: f64) {
        let n = self.n_orbitals;
        self.one_body[p * n + q] = value;
        self.one_body[q * n + p] = value;
    }

    /// Store `value` at `(pq|rs)` and all of its permutation partners.
    pub fn set_two(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        let n = self.n_orbitals;
        for (a, b, c, d) in fcidump::eightfold(p, q, r, s) {
            self.two_body[((a * n + b) * n + c) * n + d] = value;
        }
    }

    pub fn n_spin_orbitals(&self) -> usize {
        2 * self.n_orbitals
    }

    /// Largest violation of the one-body and 8-fold two-body symmetries.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n_orbitals;
        let mut worst = 0.0f64;
        for p in 0..n {
            for q in 0..n {
                worst = worst.max((self.one(p, q) - self.one(q, p)).abs());
                for r in 0..n {
                    for s in 0..n {
                        let v = self.two(p, q, r, s);
                        for (a, b, c, d) in fcidump::eightfold(p, q, r, s) {
                            worst = worst.max((self.two(a, b, c, d) - v).abs());
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Fold `n_frozen` doubly occupied orbitals into a core energy and effective
/// one-body integrals, keeping the next `n_active` orbitals.
pub fn restrict_active_space(
    ints: &IntegralSet,
    n_frozen: usize,
    n_active: usize,
) -> Result<IntegralSet, MolhamError> {
    if n_active == 0 || n_frozen + n_active > ints.n_orbitals {
        return Err(MolhamError::Domain(format!(
            "{n_frozen} frozen + {n_active} active orbitals do not fit in {}",
            ints.n_orbitals
        )));
    }
    if 2 * n_frozen > ints.n_electrons {
        return Err(MolhamError::Domain(format!(
            "{n_frozen} frozen orbitals need {} electrons, only {} available",
            2 * n_frozen,
            ints.n_electrons
        )));
    }
    let mut out = IntegralSet::zeros(n_active, ints.n_electrons - 2 * n_frozen);
    out.ms2 = ints.ms2;
    out.isym = ints.isym;
    if !ints.orbsym.is_empty() {
        out.orbsym = ints.orbsym[n_frozen..n_frozen + n_active].to_vec();
    }

    let frozen = 0..n_frozen;
    let mut core = ints.core_energy;
    for f in frozen.clone() {
        core += 2.0 * ints.one(f, f);
        for g in frozen.clone() {
            core += 2.0 * ints.two(f, f, g, g) - ints.two(f, g, g, f);
        }
    }
    out.core_energy = core;

    for p in 0..n_active {
        for q in 0..n_active {
            let (pp, qq) = (p + n_frozen, q + n_frozen);
            let mut h = ints.one(pp, qq);
            for f in frozen.clone() {
                h += 2.0 * ints.two(pp, qq, f, f) - ints.two(pp, f, f, qq);
            }
            out.one_body[p * n_active + q] = h;
            for r in 0..n_active {
                for s in 0..n_active {
                    let v = ints.two(pp, qq, r + n_frozen, s + n_frozen);
                    out.two_body[((p * n_active + q) * n_active + r) * n_active + s] = v;
                }
            }
        }
    }
    Ok(out)
}

/// `H = Σ h_pq a†_p a_q + ½ Σ (pq|rs) a†_{pσ} a†_{rτ} a_{sτ} a_{qσ} + E_core` over
/// spin orbitals.
pub fn build_hamiltonian(ints: &IntegralSet) -> FermionOperator {
    let n = ints.n_orbitals;
    let mut h = FermionOperator::identity(ints.core_energy);
    for p in 0..n {
        for q in 0..n {
            let v = ints.one(p, q);
            if v.abs() < ZERO_TOL {
                continue;
            }
            for spin in 0..2 {
                h.add_term(
                    vec![LadderOp::create(2 * p + spin), LadderOp::annihilate(2 * q + spin)],
                    Complex64::new(v, 0.0),
                );
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = ints.two(p, q, r, s);
                    if v.abs() < ZERO_TOL {
                        continue;
                    }
                    for sigma in 0..2 {
                        for tau in 0..2 {
                            let (i, j) = (2 * p + sigma, 2 * r + tau);
                            let (k, l) = (2 * s + tau, 2 * q + sigma);
                            if i == j || k == l {
                                continue;
                            }
                            h.add_term(
                                vec![
                                    LadderOp::create(i),
                                    LadderOp::create(j),
                                    LadderOp::annihilate(k),
                                    LadderOp::annihilate(l),
                                ],
                                Complex64::new(0.5 * v, 0.0),
                            );
                        }
                    }
                }
            }
        }
    }
    h.simplify()
}

/// `N̂ = Σ_i a†_i a_i` over `n_modes` modes.
pub fn number_operator(n_modes: usize) -> FermionOperator {
    (0..n_modes).fold(FermionOperator::zero(), |acc, i| acc + FermionOperator::hopping(i, i, 1.0))
}

/// `H + w (N - N̂)²`, normal ordered.
pub fn add_number_penalty(
    h: &FermionOperator,
    n_modes: usize,
    n_electrons: usize,
    weight: f64,
) -> Result<FermionOperator, MolhamError> {
    if !(weight > 0.0) {
        return Err(MolhamError::Domain(format!("penalty weight must be positive, got {weight}")));
    }
    let shifted = FermionOperator::identity(n_electrons as f64) - number_operator(n_modes);
    let penalty = (&shifted * &shifted).scale(Complex64::new(weight, 0.0));
    Ok((h.clone() + penalty).normal_ordered())
}

/// `S_z = ½ Σ_p (n_{2p} − n_{2p+1})`.
pub fn sz_operator(n_modes: usize) -> Result<FermionOperator, MolhamError> {
    if n_modes % 2 != 0 {
        return Err(MolhamError::Domain(format!(
            "S_z needs an even number of interleaved spin orbitals, got {n_modes}"
        )));
    }
    let mut op = FermionOperator::zero();
    for p in 0..n_modes / 2 {
        op = op + FermionOperator::hopping(2 * p, 2 * p, 0.5) + FermionOperator::hopping(2 * p + 1, 2 * p + 1, -0.5);
    }
    Ok(op)
}

/// Occupation-number basis state `|n_0, n_1, …, n_{M-1}⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationState {
    bits: Vec<bool>,
}

impl OccupationState {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Mode 0 is the most significant bit of `index`.
    pub fn from_index(index: usize, n_modes: usize) -> Self {
        let bits = (0..n_modes).map(|q| (index >> (n_modes - 1 - q)) & 1 == 1).collect();
        Self { bits }
    }

    pub fn index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn n_modes(&self) -> usize {
        self.bits.len()
    }

    pub fn n_occupied(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_integrals(n: usize, nelec: usize, seed: u64) -> IntegralSet {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut ints = IntegralSet::zeros(n, nelec);
        ints.core_energy = rng.random_range(-1.0..1.0);
        for p in 0..n {
            for q in 0..=p {
                ints.set_one(p, q, rng.random_range(-1.0..1.0));
            }
        }
        // positive-ish two-body tensor from a real "density" so it resembles an ERI
        for p in 0..n {
            for q in 0..=p {
                for r in 0..n {
                    for s in 0..=r {
                        if p * (p + 1) / 2 + q >= r * (r + 1) / 2 + s {
                            ints.set_two(p, q, r, s, rng.random_range(-0.3..0.3));
                        }
                    }
                }
            }
        }
        ints
    }

    fn spectrum(op: &FermionOperator, n_modes: usize) -> Vec<(f64, usize)> {
        // eigenpairs restricted by particle number: the operator commutes with N̂,
        // so diagonalize each number block separately.
        let dense = op.to_dense(n_modes);
        let mut out = Vec::new();
        for count in 0..=n_modes {
            let idx: Vec<usize> = (0..1usize << n_modes)
                .filter(|i| i.count_ones() as usize == count)
                .collect();
            let block = nalgebra::DMatrix::from_fn(idx.len(), idx.len(), |a, b| dense[(idx[a], idx[b])]);
            let eig = nalgebra::SymmetricEigen::new(block);
            out.extend(eig.eigenvalues.iter().map(|e| (*e, count)));
        }
        out
    }

    #[test]
    fn active_space_identity_case() {
        let ints = random_integrals(3, 2, 4);
        let out = restrict_active_space(&ints, 0, 3).unwrap();
        assert_eq!(out, ints);
    }

    #[test]
    fn active_space_preconditions() {
        let ints = random_integrals(3, 2, 4);
        assert!(matches!(restrict_active_space(&ints, 2, 2), Err(MolhamError::Domain(_))));
        assert!(matches!(restrict_active_space(&ints, 2, 1), Err(MolhamError::Domain(_))));
    }

    #[test]
    fn frozen_core_matches_pinned_enumeration() {
        // Brute force: full 3-orbital Hamiltonian restricted to determinants with
        // orbital 0 doubly occupied must reproduce the frozen-core problem.
        let ints = random_integrals(3, 4, 11);
        let full = build_hamiltonian(&ints).to_dense(6);
        let pinned: Vec<usize> = (0..64usize)
            .filter(|&i| i.count_ones() == 4 && (i >> 5) & 1 == 1 && (i >> 4) & 1 == 1)
            .collect();
        let block = nalgebra::DMatrix::from_fn(pinned.len(), pinned.len(), |a, b| full[(pinned[a], pinned[b])]);
        let mut want: Vec<f64> = nalgebra::SymmetricEigen::new(block).eigenvalues.iter().copied().collect();
        want.sort_by(f64::total_cmp);

        let reduced = restrict_active_space(&ints, 1, 2).unwrap();
        assert_eq!(reduced.n_electrons, 2);
        let mut got: Vec<f64> = spectrum(&build_hamiltonian(&reduced), 4)
            .into_iter()
            .filter(|(_, n)| *n == 2)
            .map(|(e, _)| e)
            .collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10, "{g} vs {w}");
        }
    }

    #[test]
    fn single_orbital_hamiltonian() {
        let mut ints = IntegralSet::zeros(1, 1);
        ints.set_one(0, 0, -0.7);
        ints.core_energy = 0.25;
        let h = build_hamiltonian(&ints);
        let want = FermionOperator::identity(0.25)
            + FermionOperator::hopping(0, 0, -0.7)
            + FermionOperator::hopping(1, 1, -0.7);
        assert_eq!(h, want);
    }

    #[test]
    fn two_body_coefficients_are_half_integrals() {
        let ints = random_integrals(2, 2, 3);
        let h = build_hamiltonian(&ints);
        let halves: Vec<f64> = ints.two_body.iter().map(|v| 0.5 * v).collect();
        for (ops, c) in h.terms() {
            if ops.len() == 4 {
                assert!(c.im == 0.0);
                assert!(halves.iter().any(|h| (h.abs() - c.re.abs()).abs() < 1e-15));
            }
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_and_conserves_number() {
        let ints = random_integrals(3, 2, 7);
        let h = build_hamiltonian(&ints);
        assert!(h.is_hermitian(1e-12));
        let comm = h.commutator(&number_operator(6));
        assert!(comm.terms().all(|(_, c)| c.norm() < 1e-10));
    }

    #[test]
    fn number_operator_counts() {
        assert_eq!(number_operator(1), FermionOperator::hopping(0, 0, 1.0));
        let n2 = number_operator(2).to_dense(2);
        let diag: Vec<f64> = (0..4).map(|i| n2[(i, i)].re).collect();
        assert_eq!(diag, vec![0.0, 1.0, 1.0, 2.0]);
        for m in 1..=8 {
            let op = number_operator(m);
            for idx in 0..1usize << m {
                let s = OccupationState::from_index(idx, m);
                assert_eq!(op.expectation(&s).re, s.n_occupied() as f64);
            }
        }
    }

    #[test]
    fn penalty_spectrum_by_counting() {
        let p = add_number_penalty(&FermionOperator::zero(), 2, 1, 1.0).unwrap();
        let m = p.to_dense(2);
        let diag: Vec<f64> = (0..4).map(|i| m[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 0.0, 0.0, 1.0]);
        for idx in 0..16usize {
            let s = OccupationState::from_index(idx, 4);
            let pen = add_number_penalty(&FermionOperator::zero(), 4, 2, 3.0).unwrap();
            let want = 3.0 * (2.0 - s.n_occupied() as f64).powi(2);
            assert!((pen.expectation(&s).re - want).abs() < 1e-12);
        }
        assert!(matches!(add_number_penalty(&FermionOperator::zero(), 2, 1, 0.0), Err(MolhamError::Domain(_))));
    }

    #[test]
    fn penalty_separates_sectors() {
        for seed in 0..5 {
            let ints = random_integrals(3, 2, 100 + seed);
            let h = build_hamiltonian(&ints);
            // spectral radius bound via dense norm of H
            let spec = spectrum(&h, 6);
            let lo = spec.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
            let hi = spec.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
            let w = 1.01 * (hi - lo) + 1e-3;
            let hp = add_number_penalty(&h, 6, 2, w).unwrap();
            assert!(hp.is_hermitian(1e-12));
            let spec = spectrum(&hp, 6);
            let worst_n = spec.iter().filter(|e| e.1 == 2).map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
            let best_other = spec.iter().filter(|e| e.1 != 2).map(|e| e.0).fold(f64::INFINITY, f64::min);
            assert!(worst_n < best_other);
        }
    }

    #[test]
    fn sz_eigenvalues() {
        let sz = sz_operator(2).unwrap();
        assert_eq!(sz.expectation(&OccupationState::new(vec![true, false])).re, 0.5);
        assert_eq!(sz.expectation(&OccupationState::new(vec![true, true])).re, 0.0);
        assert!(sz_operator(3).is_err());
        for m in [2, 4, 6] {
            let sz = sz_operator(m).unwrap();
            for idx in 0..1usize << m {
                let s = OccupationState::from_index(idx, m);
                let na = s.bits().iter().step_by(2).filter(|&&b| b).count() as f64;
                let nb = s.bits().iter().skip(1).step_by(2).filter(|&&b| b).count() as f64;
                assert_eq!(sz.expectation(&s).re, (na - nb) / 2.0);
            }
        }
    }

    #[test]
    fn occupation_index_roundtrip() {
        for idx in 0..32 {
            assert_eq!(OccupationState::from_index(idx, 5).index(), idx);
        }
        assert_eq!(OccupationState::from_index(0b10, 2).bits(), &[true, false]);
    }
}
