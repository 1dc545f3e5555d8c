//! Second-quantized operators over spin-orbital modes.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::OccupationState;
use crate::ZERO_TOL;

/// A single creation (`dagger = true`) or annihilation operator on one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LadderOp {
    pub mode: usize,
    pub dagger: bool,
}

impl LadderOp {
    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self { mode, dagger: false }
    }

    fn adjoint(self) -> Self {
        Self { mode: self.mode, dagger: !self.dagger }
    }
}

/// Ordered product of ladder operators, leftmost first.
pub type LadderString = Vec<LadderOp>;

/// Weighted sum of ladder-operator strings.
///
/// Strings are stored exactly as written; [`FermionOperator::normal_ordered`]
/// brings an operator to canonical form (creators left, each group in
/// descending mode order), which is the only form in which two operators can be
/// compared term by term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FermionOperator {
    terms: BTreeMap<LadderString, Complex64>,
}

impl FermionOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity(coeff: f64) -> Self {
        let mut op = Self::zero();
        op.add_term(Vec::new(), Complex64::new(coeff, 0.0));
        op
    }

    pub fn term(ops: LadderString, coeff: Complex64) -> Self {
        let mut op = Self::zero();
        op.add_term(ops, coeff);
        op
    }

    /// `a†_p a_q`
    pub fn hopping(p: usize, q: usize, coeff: f64) -> Self {
        Self::term(
            vec![LadderOp::create(p), LadderOp::annihilate(q)],
            Complex64::new(coeff, 0.0),
        )
    }

    pub fn add_term(&mut self, ops: LadderString, coeff: Complex64) {
        let entry = self.terms.entry(ops).or_insert(Complex64::new(0.0, 0.0));
        *entry += coeff;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&LadderString, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the empty string (the scalar part), without normal ordering.
    pub fn constant(&self) -> Complex64 {
        self.terms.get(&Vec::new()).copied().unwrap_or_default()
    }

    /// One past the largest mode index touched, 0 for a scalar operator.
    pub fn mode_bound(&self) -> usize {
        self.terms
            .keys()
            .flat_map(|s| s.iter().map(|o| o.mode + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|c| *c *= factor);
        out
    }

    /// Drop terms with magnitude below the global zero threshold.
    pub fn simplify(mut self) -> Self {
        self.terms.retain(|_, c| c.norm() >= ZERO_TOL);
        self
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (ops, c) in &self.terms {
            let rev: LadderString = ops.iter().rev().map(|o| o.adjoint()).collect();
            out.add_term(rev, c.conj());
        }
        out
    }

    /// Canonical form: creation operators left of annihilation operators, each
    /// block in descending mode order, repeated operators eliminated.
    pub fn normal_ordered(&self) -> Self {
        let mut out = Self::zero();
        for (ops, c) in &self.terms {
            normal_order_string(ops.clone(), *c, &mut out);
        }
        out.simplify()
    }

    /// Largest deviation between the normal-ordered operator and its adjoint.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = (self.clone() - self.adjoint()).normal_ordered();
        diff.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() < tol
    }

    /// `[self, other]`, normal ordered.
    pub fn commutator(&self, other: &Self) -> Self {
        (self * other - other * self).normal_ordered()
    }

    /// Apply to a single occupation state, yielding the output superposition.
    pub fn apply(&self, state: &OccupationState) -> Vec<(OccupationState, Complex64)> {
        let mut acc: BTreeMap<Vec<bool>, Complex64> = BTreeMap::new();
        for (ops, c) in &self.terms {
            if let Some((bits, sign)) = apply_string(ops, state.bits()) {
                *acc.entry(bits).or_default() += c * sign;
            }
        }
        acc.into_iter()
            .filter(|(_, c)| c.norm() >= ZERO_TOL)
            .map(|(bits, c)| (OccupationState::new(bits), c))
            .collect()
    }

    /// `<n|O|n>` for an occupation basis state.
    pub fn expectation(&self, state: &OccupationState) -> Complex64 {
        let mut total = Complex64::default();
        for (ops, c) in &self.terms {
            if let Some((bits, sign)) = apply_string(ops, state.bits()) {
                if bits == state.bits() {
                    total += c * sign;
                }
            }
        }
        total
    }

    /// Dense matrix on the `2^n_modes` occupation basis built directly from the
    /// fermionic action. Basis index `i` has mode 0 in the most significant bit.
    pub fn to_dense(&self, n_modes: usize) -> DMatrix<Complex64> {
        let dim = 1usize << n_modes;
        let mut mat = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let state = OccupationState::from_index(col, n_modes);
            for (ops, c) in &self.terms {
                if let Some((bits, sign)) = apply_string(ops, state.bits()) {
                    let row = OccupationState::new(bits).index();
                    mat[(row, col)] += c * sign;
                }
            }
        }
        mat
    }
}

/// Apply `ops` (rightmost first) to `bits`; `None` when the result vanishes.
fn apply_string(ops: &[LadderOp], bits: &[bool]) -> Option<(Vec<bool>, f64)> {
    let mut bits = bits.to_vec();
    let mut sign = 1.0;
    for op in ops.iter().rev() {
        if op.mode >= bits.len() || bits[op.mode] == op.dagger {
            return None;
        }
        let parity = bits[..op.mode].iter().filter(|&&b| b).count();
        if parity % 2 == 1 {
            sign = -sign;
        }
        bits[op.mode] = op.dagger;
    }
    Some((bits, sign))
}

fn normal_order_string(mut ops: LadderString, mut coeff: Complex64, out: &mut FermionOperator) {
    for i in 1..ops.len() {
        for j in (1..=i).rev() {
            let right = ops[j];
            let left = ops[j - 1];
            if right.dagger && !left.dagger {
                ops.swap(j - 1, j);
                coeff = -coeff;
                if right.mode == left.mode {
                    // a_p a†_p = 1 - a†_p a_p
                    let mut contracted = ops[..j - 1].to_vec();
                    contracted.extend_from_slice(&ops[j + 1..]);
                    normal_order_string(contracted, -coeff, out);
                }
            } else if right.dagger == left.dagger {
                if right.mode == left.mode {
                    return;
                }
                if right.mode > left.mode {
                    ops.swap(j - 1, j);
                    coeff = -coeff;
                }
            }
        }
    }
    out.add_term(ops, coeff);
}

impl Add for FermionOperator {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (ops, c) in rhs.terms {
            self.add_term(ops, c);
        }
        self
    }
}

impl Sub for FermionOperator {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for FermionOperator {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &FermionOperator {
    type Output = FermionOperator;
    fn mul(self, rhs: &FermionOperator) -> FermionOperator {
        let mut out = FermionOperator::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                let mut ops = a.clone();
                ops.extend_from_slice(b);
                out.add_term(ops, ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for FermionOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (ops, c) in &self.terms {
            write!(f, "({:+e}{:+e}i) [", c.re, c.im)?;
            for (k, op) in ops.iter().enumerate() {
                if k > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}{}", op.mode, if op.dagger { "^" } else { "" })?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn anticommutator_normal_orders_to_delta() {
        for i in 0..3 {
            for j in 0..3 {
                let a = FermionOperator::term(vec![LadderOp::annihilate(i)], c(1.0));
                let ad = FermionOperator::term(vec![LadderOp::create(j)], c(1.0));
                let anti = (&a * &ad + &ad * &a).normal_ordered();
                if i == j {
                    assert_eq!(anti, FermionOperator::identity(1.0));
                } else {
                    assert!(anti.is_empty());
                }
            }
        }
    }

    #[test]
    fn repeated_creator_vanishes() {
        let op = FermionOperator::term(vec![LadderOp::create(1), LadderOp::create(1)], c(2.0));
        assert!(op.normal_ordered().is_empty());
    }

    #[test]
    fn apply_tracks_fermionic_sign() {
        // a†_0 on |01> = |11>, a†_1 on |10> = -|11>
        let s01 = OccupationState::new(vec![false, true]);
        let s10 = OccupationState::new(vec![true, false]);
        let a0 = FermionOperator::term(vec![LadderOp::create(0)], c(1.0));
        let a1 = FermionOperator::term(vec![LadderOp::create(1)], c(1.0));
        assert_eq!(a0.apply(&s01)[0].1, c(1.0));
        assert_eq!(a1.apply(&s10)[0].1, c(-1.0));
    }

    #[test]
    fn adjoint_of_hopping() {
        let op = FermionOperator::hopping(0, 2, 0.5);
        let adj = op.adjoint();
        assert_eq!(adj, FermionOperator::hopping(2, 0, 0.5));
    }

    #[test]
    fn dense_matrix_of_number_operator_is_diagonal() {
        let op = FermionOperator::hopping(0, 0, 1.0) + FermionOperator::hopping(1, 1, 1.0);
        let m = op.to_dense(2);
        let diag: Vec<f64> = (0..4).map(|i| m[(i, i)].re).collect();
        assert_eq!(diag, vec![0.0, 1.0, 1.0, 2.0]);
    }
}
