use super::{IsingError, QuadraticModel, SampleSet, ZPolynomial, ENERGY_TOL};

/// Largest variable count [`exact_solve`] will enumerate.
pub const EXACT_VAR_CAP: usize = 25;

/// Upper bound on the number of degenerate optima kept.
const MAX_LISTED: usize = 1 << 16;

/// All global minima of a quadratic model by full enumeration.
pub fn exact_solve(q: &QuadraticModel) -> Result<SampleSet, IsingError> {
    let p = q.to_polynomial();
    let set = exact_solve_polynomial(&p)?;
    Ok(set)
}

/// All global minima of a spin polynomial.
///
/// The energy of every assignment comes from one Walsh-Hadamard transform of
/// the coefficient vector indexed by variable mask; bit `i` set means `s_i = −1`.
pub fn exact_solve_polynomial(p: &ZPolynomial) -> Result<SampleSet, IsingError> {
    let n = p.n_vars();
    if n > EXACT_VAR_CAP {
        return Err(IsingError::Capacity(n));
    }
    let energies = all_energies(p);
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = ENERGY_TOL * min.abs().max(1.0);
    let mut raw = Vec::new();
    for (b, &e) in energies.iter().enumerate() {
        if e <= min + tol {
            if raw.len() == MAX_LISTED {
                log::warn!("more than {MAX_LISTED} degenerate optima; list truncated");
                break;
            }
            let a = assignment_of(b, n);
            let exact = p.evaluate_unchecked(&a);
            raw.push((a, exact));
        }
    }
    Ok(SampleSet::from_raw(raw))
}

/// Energy of every assignment, indexed by the mask of `−1` spins.
pub(crate) fn all_energies(p: &ZPolynomial) -> Vec<f64> {
    let n = p.n_vars();
    let mut a = vec![0.0f64; 1usize << n];
    for (vars, c) in p.terms() {
        let m = vars.iter().fold(0usize, |m, &i| m | 1 << i);
        a[m] += c;
    }
    walsh_hadamard(&mut a);
    a
}

fn walsh_hadamard(a: &mut [f64]) {
    let mut h = 1;
    while h < a.len() {
        for block in a.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*u, *v);
                *u = x + y;
                *v = x - y;
            }
        }
        h *= 2;
    }
}

pub(crate) fn assignment_of(mask: usize, n: usize) -> Vec<i8> {
    (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect()
}
