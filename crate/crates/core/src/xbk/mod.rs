//! Expanded-copy ground-state search: an `m`-qubit Hamiltonian is mapped onto
//! `r` classical copies of its qubits so that a signed superposition of copy
//! states becomes a minimum of a diagonal spin polynomial.
//!
//! Spin `z = +1` stands for qubit state `|0⟩`. The variable of qubit `i` in
//! copy `j` (both 0-based) is `j·m + i`.

use std::collections::HashMap;
use std::time::Duration;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ising::{exact_solve_polynomial, minimize_polynomial, IsingError, Sampler, ZPolynomial};
use crate::pauli::{Pauli, PauliError, PauliSum, QubitStateVector, HERMITIAN_TOL};
use crate::ZERO_TOL;

/// Largest imaginary coefficient tolerated in a transformed polynomial.
const IMAG_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum XbkError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("every sample has zero weight")]
    DegenerateSector,
    #[error("assignment has no weight on any basis state")]
    DegenerateAssignment,
    #[error("no convergence after {0} iterations")]
    Convergence(usize),
    #[error("every sign sector degenerated")]
    MethodFailure,
    #[error(transparent)]
    Ising(#[from] IsingError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// `S_p(j)`: the first `p` copies carry sign −1.
pub fn sector_sign(p: usize, j: usize) -> f64 {
    if j < p {
        -1.0
    } else {
        1.0
    }
}

fn check_sector(r: usize, p: usize) -> Result<(), XbkError> {
    if r == 0 {
        return Err(XbkError::Domain("copy count must be at least 1".into()));
    }
    if p > r / 2 {
        return Err(XbkError::Domain(format!("sector p={p} outside 0..={}", r / 2)));
    }
    Ok(())
}

/// `Σ_{j,k} S_p(j) S_p(k) H^{(j,k)}` as a spin polynomial over `r·m` variables.
pub fn xbk_transform(h: &PauliSum, r: usize, p: usize) -> Result<ZPolynomial, XbkError> {
    check_sector(r, p)?;
    let m = h.n_qubits();
    let n = r * m;
    if n > 128 {
        return Err(XbkError::Domain(format!("{n} copy variables exceed the supported 128")));
    }
    let mut acc: HashMap<u128, Complex64> = HashMap::new();
    let mut partial: Vec<(u128, Complex64)> = Vec::new();
    let mut next = Vec::new();
    for (word, &alpha) in h.terms() {
        for j in 0..r {
            for k in 0..r {
                if j == k && !word.is_diagonal() {
                    continue;
                }
                let sign = sector_sign(p, j) * sector_sign(p, k);
                partial.clear();
                partial.push((0, alpha * sign));
                for q in 0..m {
                    let zj = 1u128 << (j * m + q);
                    let zk = 1u128 << (k * m + q);
                    let factors = pair_factor(word.get(q), zj, zk, j == k);
                    next.clear();
                    for &(mask, c) in &partial {
                        for &(fm, fc) in factors.iter().flatten() {
                            next.push((mask ^ fm, c * fc));
                        }
                    }
                    std::mem::swap(&mut partial, &mut next);
                }
                for &(mask, c) in &partial {
                    *acc.entry(mask).or_default() += c;
                }
            }
        }
    }
    let mut poly = ZPolynomial::new(n);
    for (mask, c) in acc {
        if c.im.abs() >= IMAG_TOL {
            return Err(XbkError::Integrity(format!(
                "imaginary residue {:e} in transformed polynomial; input is not Hermitian",
                c.im
            )));
        }
        if c.re.abs() >= ZERO_TOL {
            poly.add_canonical(mask_vars(mask), c.re);
        }
    }
    Ok(poly)
}

/// Matrix element `⟨φ_j|σ|φ_k⟩` of one qubit as a polynomial in `z_j`, `z_k`.
fn pair_factor(p: Pauli, zj: u128, zk: u128, same: bool) -> [Option<(u128, Complex64)>; 2] {
    let half = Complex64::new(0.5, 0.0);
    let one = Complex64::new(1.0, 0.0);
    if same {
        return match p {
            Pauli::I => [Some((0, one)), None],
            Pauli::Z => [Some((zj, one)), None],
            Pauli::X | Pauli::Y => [None, None],
        };
    }
    match p {
        Pauli::I => [Some((0, half)), Some((zj | zk, half))],
        Pauli::X => [Some((0, half)), Some((zj | zk, -half))],
        Pauli::Z => [Some((zj, half)), Some((zk, half))],
        Pauli::Y => [Some((zj, Complex64::new(0.0, -0.5))), Some((zk, Complex64::new(0.0, 0.5)))],
    }
}

fn mask_vars(mut m: u128) -> Vec<u32> {
    let mut v = Vec::with_capacity(m.count_ones() as usize);
    while m != 0 {
        v.push(m.trailing_zeros());
        m &= m - 1;
    }
    v
}

/// Polynomial equal to `Σ_i b_i²` for the signed copy counts of an assignment.
pub fn cp_operator(m: usize, r: usize, p: usize) -> Result<ZPolynomial, XbkError> {
    xbk_transform(&PauliSum::identity(m, 1.0), r, p)
}

/// The transformed pair `(H′_p, C_p)` for one sector.
#[derive(Debug, Clone)]
pub struct XBKProblem {
    pub source: PauliSum,
    pub r: usize,
    pub p: usize,
    pub h_poly: ZPolynomial,
    pub c_poly: ZPolynomial,
}

impl XBKProblem {
    pub fn new(source: &PauliSum, r: usize, p: usize) -> Result<Self, XbkError> {
        Ok(Self {
            source: source.clone(),
            r,
            p,
            h_poly: xbk_transform(source, r, p)?,
            c_poly: cp_operator(source.n_qubits(), r, p)?,
        })
    }

    /// `D = H′_p − λ C_p`
    pub fn dinkelbach(&self, lambda: f64) -> ZPolynomial {
        let mut d = self.h_poly.clone();
        d.add_scaled(&self.c_poly, -lambda);
        d.simplify()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XbkOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Starting λ; the diagonal minimum of `H` when absent.
    pub lambda0: Option<f64>,
}

impl Default for XbkOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iterations: 100, lambda0: None }
    }
}

/// Outcome of the λ loop in one sector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterateOutcome {
    /// Lowest Rayleigh quotient `H′/C` over every valid sample seen.
    pub lambda: f64,
    pub assignment: Vec<i8>,
    pub iterations: usize,
    pub lambda_history: Vec<f64>,
    pub quadratic_vars: usize,
    pub quadratize_time: Duration,
    pub sample_time: Duration,
}

/// Iterate `λ ← λ + min D / C(a)` until the minimum of `D = H′ − λC` is non-negative.
///
/// Assignments with `C = 0` encode no state and are skipped. The returned λ is
/// the Rayleigh quotient of the returned assignment, so it is always realized.
pub fn xbk_iterate(
    h_poly: &ZPolynomial,
    c_poly: &ZPolynomial,
    lambda0: f64,
    sampler: &dyn Sampler,
    tol: f64,
    max_iterations: usize,
) -> Result<IterateOutcome, XbkError> {
    if tol <= 0.0 {
        return Err(XbkError::Domain("tolerance must be positive".into()));
    }
    let mut lambda = lambda0;
    let mut best: Option<(f64, Vec<i8>)> = None;
    let mut history = vec![lambda0];
    let mut out = IterateOutcome {
        lambda: f64::NAN,
        assignment: Vec::new(),
        iterations: 0,
        lambda_history: Vec::new(),
        quadratic_vars: 0,
        quadratize_time: Duration::ZERO,
        sample_time: Duration::ZERO,
    };
    for iteration in 1..=max_iterations {
        let mut d = h_poly.clone();
        d.add_scaled(c_poly, -lambda);
        let d = d.simplify();
        let sol = minimize_polynomial(&d, sampler)?;
        out.quadratic_vars = out.quadratic_vars.max(sol.quadratic_vars);
        out.quadratize_time += sol.quadratize_time;
        out.sample_time += sol.sample_time;
        out.iterations = iteration;

        let mut step: Option<(f64, f64)> = None;
        for s in sol.samples.samples() {
            let c = c_poly.evaluate(&s.assignment)?;
            if c < 0.5 {
                continue;
            }
            let rq = h_poly.evaluate(&s.assignment)? / c;
            if best.as_ref().is_none_or(|(b, _)| rq < *b) {
                best = Some((rq, s.assignment.clone()));
            }
            if step.is_none() {
                // samples are sorted by D, so the first valid one is the best
                step = Some((s.energy, c));
            }
        }
        let min_any = sol.samples.best().map_or(0.0, |s| s.energy);
        let Some((minval, c)) = step else {
            // only zero-weight samples: they sit at D = 0
            if best.is_some() && min_any >= -tol {
                break;
            }
            return Err(XbkError::DegenerateSector);
        };
        if minval >= -tol {
            break;
        }
        let next = lambda + minval / c;
        history.push(next);
        if (next - lambda).abs() < tol {
            break;
        }
        lambda = next;
        if iteration == max_iterations {
            return Err(XbkError::Convergence(iteration));
        }
    }
    let (rq, a) = best.ok_or(XbkError::DegenerateSector)?;
    out.lambda = rq;
    out.assignment = a;
    out.lambda_history = history;
    Ok(out)
}

/// Signed basis-state counts and the normalized state `a_i = b_i / √Σb²`.
pub fn recover_state(assignment: &[i8], m: usize, r: usize, p: usize) -> Result<(Vec<i64>, QubitStateVector), XbkError> {
    check_sector(r, p)?;
    if assignment.len() != r * m {
        return Err(XbkError::Domain(format!("assignment length {} is not r·m = {}", assignment.len(), r * m)));
    }
    let mut b = vec![0i64; 1 << m];
    for j in 0..r {
        let idx = (0..m).fold(0usize, |acc, q| (acc << 1) | (assignment[j * m + q] < 0) as usize);
        b[idx] += sector_sign(p, j) as i64;
    }
    let norm2: i64 = b.iter().map(|x| x * x).sum();
    if norm2 == 0 {
        return Err(XbkError::DegenerateAssignment);
    }
    let norm = (norm2 as f64).sqrt();
    let amps = b.iter().map(|&x| Complex64::new(x as f64 / norm, 0.0)).collect();
    Ok((b, QubitStateVector::new(amps)?))
}

/// Smallest diagonal matrix element of `H`.
pub fn diagonal_minimum(h: &PauliSum) -> Result<f64, XbkError> {
    let m = h.n_qubits();
    let mut diag = ZPolynomial::new(m);
    for (w, c) in h.diagonal_part().terms() {
        let vars: Vec<u32> = (0..m as u32).filter(|&q| w.get(q as usize) == Pauli::Z).collect();
        diag.add_canonical(vars, c.re);
    }
    let set = exact_solve_polynomial(&diag)?;
    Ok(set.best().map_or(0.0, |s| s.energy))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorReport {
    pub p: usize,
    pub energy: Option<f64>,
    pub iterations: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XBKResult {
    pub energy: f64,
    pub sector: usize,
    pub r: usize,
    pub iterations: usize,
    pub assignment: Vec<i8>,
    pub b_counts: Vec<i64>,
    pub state: QubitStateVector,
    pub sectors: Vec<SectorReport>,
    /// Largest 2-local model handed to the sampler.
    pub quadratic_vars: usize,
    pub quadratize_time: Duration,
    pub sample_time: Duration,
}

/// Run the λ loop in every sector `p = 0..=⌊r/2⌋` and keep the lowest energy.
pub fn xbk_ground_state(h: &PauliSum, r: usize, sampler: &dyn Sampler, opts: &XbkOptions) -> Result<XBKResult, XbkError> {
    check_sector(r, 0)?;
    h.check_hermitian(HERMITIAN_TOL)?;
    let m = h.n_qubits();
    let lambda0 = match opts.lambda0 {
        Some(l) => l,
        None => diagonal_minimum(h)?,
    };
    let mut sectors = Vec::new();
    let mut winner: Option<(usize, IterateOutcome)> = None;
    let mut quadratic_vars = 0;
    let mut quadratize_time = Duration::ZERO;
    let mut sample_time = Duration::ZERO;
    for p in 0..=r / 2 {
        let prob = XBKProblem::new(h, r, p)?;
        match xbk_iterate(&prob.h_poly, &prob.c_poly, lambda0, sampler, opts.tol, opts.max_iterations) {
            Ok(o) => {
                quadratic_vars = quadratic_vars.max(o.quadratic_vars);
                quadratize_time += o.quadratize_time;
                sample_time += o.sample_time;
                sectors.push(SectorReport { p, energy: Some(o.lambda), iterations: o.iterations, degenerate: false });
                if winner.as_ref().is_none_or(|(_, w)| o.lambda < w.lambda) {
                    winner = Some((p, o));
                }
            }
            Err(XbkError::DegenerateSector) => {
                log::info!("xbk: sector p={p} degenerate, skipped");
                sectors.push(SectorReport { p, energy: None, iterations: 0, degenerate: true });
            }
            Err(e) => {
                log::warn!("xbk: sector p={p} failed: {e}");
                return Err(e);
            }
        }
    }
    let (sector, o) = winner.ok_or(XbkError::MethodFailure)?;
    let (b_counts, state) = recover_state(&o.assignment, m, r, sector)?;
    Ok(XBKResult {
        energy: o.lambda,
        sector,
        r,
        iterations: o.iterations,
        assignment: o.assignment,
        b_counts,
        state,
        sectors,
        quadratic_vars,
        quadratize_time,
        sample_time,
    })
}

/// Spin-variable counts before and after quadratization of `D = H′_0 − λ₀C_0`.
pub fn xbk_variable_counts(h: &PauliSum, r: usize) -> Result<(usize, usize), XbkError> {
    let prob = XBKProblem::new(h, r, 0)?;
    let d = prob.dinkelbach(diagonal_minimum(h)?);
    let q = crate::ising::quadratize(&d);
    Ok((r * h.n_qubits(), q.n_vars))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{exact_solve_polynomial as solve, ExactSampler};
    use crate::pauli::{expectation, ground_state};

    fn sum(pairs: &[(f64, &str)]) -> PauliSum {
        PauliSum::from_pairs(pairs).unwrap()
    }

    fn min_of(p: &ZPolynomial) -> f64 {
        solve(p).unwrap().best().unwrap().energy
    }

    #[test]
    fn x_vanishes_on_one_copy() {
        assert!(xbk_transform(&sum(&[(1.0, "X")]), 1, 0).unwrap().is_empty());
    }

    #[test]
    fn x_two_copies_negative_sector() {
        let p = xbk_transform(&sum(&[(1.0, "X")]), 2, 1).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.constant(), -1.0);
        assert_eq!(p.coefficient(&[0, 1]), 1.0);
        assert_eq!(min_of(&p), -2.0);
    }

    #[test]
    fn z_two_copies() {
        let p = xbk_transform(&sum(&[(1.0, "Z")]), 2, 0).unwrap();
        assert_eq!(p.coefficient(&[0]), 2.0);
        assert_eq!(p.coefficient(&[1]), 2.0);
        assert_eq!(p.len(), 2);
        assert_eq!(min_of(&p), -4.0);
    }

    #[test]
    fn cp_examples() {
        for m in 1..4 {
            let c = cp_operator(m, 1, 0).unwrap();
            assert_eq!(c.len(), 1);
            assert_eq!(c.constant(), 1.0);
        }
        assert_eq!(cp_operator(1, 2, 0).unwrap().evaluate(&[-1, -1]).unwrap(), 4.0);
        assert_eq!(cp_operator(1, 2, 1).unwrap().evaluate(&[1, -1]).unwrap(), 2.0);
    }

    #[test]
    fn cp_counts_signed_copies() {
        let (m, r) = (2, 3);
        for p in 0..=1 {
            let c = cp_operator(m, r, p).unwrap();
            for mask in 0..1usize << (m * r) {
                let a: Vec<i8> = (0..m * r).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
                let expect = match recover_state(&a, m, r, p) {
                    Ok((b, _)) => b.iter().map(|x| x * x).sum::<i64>() as f64,
                    Err(_) => 0.0,
                };
                assert_eq!(c.evaluate(&a).unwrap(), expect);
            }
        }
    }

    #[test]
    fn recover_examples() {
        let (b, s) = recover_state(&[1, -1], 1, 2, 1).unwrap();
        assert_eq!(b, vec![-1, 1]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re + r).abs() < 1e-15);
        let (b, _) = recover_state(&[1, -1, 1, -1], 2, 2, 0).unwrap();
        assert_eq!(b, vec![0, 2, 0, 0]);
        assert!(matches!(recover_state(&[1, 1], 1, 2, 1), Err(XbkError::DegenerateAssignment)));
    }

    #[test]
    fn x_worked_iteration() {
        let h = sum(&[(1.0, "X")]);
        let prob = XBKProblem::new(&h, 2, 1).unwrap();
        let o = xbk_iterate(&prob.h_poly, &prob.c_poly, 0.0, &ExactSampler, 1e-9, 100).unwrap();
        assert_eq!(o.lambda, -1.0);
        assert_eq!(o.iterations, 2);
        assert_eq!(o.lambda_history, vec![0.0, -1.0]);
    }

    #[test]
    fn x_ground_state_two_copies() {
        let h = sum(&[(1.0, "X")]);
        let res = xbk_ground_state(&h, 2, &ExactSampler, &XbkOptions::default()).unwrap();
        assert_eq!(res.energy, -1.0);
        assert_eq!(res.sector, 1);
        let exact = ground_state(&h).unwrap();
        assert!((res.state.fidelity(&exact.state) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_copy_is_diagonal_minimum() {
        let h = sum(&[(0.3, "ZI"), (-0.7, "IZ"), (0.2, "ZZ"), (0.9, "XX"), (0.1, "II")]);
        let res = xbk_ground_state(&h, 1, &ExactSampler, &XbkOptions::default()).unwrap();
        assert!((res.energy - diagonal_minimum(&h).unwrap()).abs() < 1e-12);
        assert!((res.energy - expectation(&h, &res.state).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_terminates_immediately() {
        let h = sum(&[(1.0, "Z")]);
        let prob = XBKProblem::new(&h, 1, 0).unwrap();
        let o = xbk_iterate(&prob.h_poly, &prob.c_poly, -1.0, &ExactSampler, 1e-9, 100).unwrap();
        assert_eq!((o.lambda, o.iterations), (-1.0, 1));
    }

    #[test]
    fn complex_input_rejected() {
        let mut h = sum(&[(1.0, "XY")]);
        h.add_term("ZZ".parse().unwrap(), Complex64::new(0.0, 0.5));
        assert!(xbk_transform(&h, 2, 0).is_err());
    }
}
