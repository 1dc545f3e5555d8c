use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};

use super::{QuadraticModel, ZPolynomial};
use crate::ZERO_TOL;

/// Widest polynomial handled by the dense spin-to-binary conversion.
const DENSE_CONVERSION_MAX_VARS: usize = 24;

/// Reduce a spin polynomial to a 2-local model with the same minima.
///
/// Works in binary form: repeatedly replaces the most frequent variable pair
/// `x_a x_b` of the remaining cubic-or-higher terms by a fresh `x_w`, adding
/// the penalty `M(x_a x_b − 2x_a w − 2x_b w + 3w)` with `M` exceeding the total
/// weight of the rewritten terms.
pub fn quadratize(p: &ZPolynomial) -> QuadraticModel {
    if p.degree() <= 2 {
        return QuadraticModel::from_polynomial(p).expect("degree checked");
    }
    let n = p.n_vars();
    let binary = to_binary(p);
    let mut reducer = Reducer::new(n, binary);
    reducer.run();
    reducer.into_model(n)
}

/// Binary coefficients of `p` under `s_i = 1 − 2x_i`, as (sorted vars, coeff).
fn to_binary(p: &ZPolynomial) -> Vec<(Vec<u32>, f64)> {
    let n = p.n_vars();
    let sparse_cost: f64 = p.terms().map(|(v, _)| (v.len() as f64).exp2()).sum();
    let dense_cost = n as f64 * (n as f64).exp2();
    let raw: Vec<(Vec<u32>, f64)> = if n <= DENSE_CONVERSION_MAX_VARS && dense_cost < sparse_cost {
        to_binary_dense(p)
    } else {
        to_binary_sparse(p)
    };
    raw.into_iter().filter(|(_, c)| c.abs() >= ZERO_TOL).collect()
}

fn mask_vars(m: u128) -> Vec<u32> {
    let mut vars = Vec::with_capacity(m.count_ones() as usize);
    let mut m = m;
    while m != 0 {
        vars.push(m.trailing_zeros());
        m &= m - 1;
    }
    vars
}

/// `d_T = (−2)^{|T|} Σ_{S ⊇ T} c_S` via an in-place superset-sum transform.
fn to_binary_dense(p: &ZPolynomial) -> Vec<(Vec<u32>, f64)> {
    let n = p.n_vars();
    let mut a = vec![0.0f64; 1usize << n];
    for (vars, c) in p.terms() {
        a[vars.iter().fold(0usize, |m, &i| m | 1 << i)] += c;
    }
    for bit in 0..n {
        let b = 1usize << bit;
        for m in 0..a.len() {
            if m & b == 0 {
                a[m] += a[m | b];
            }
        }
    }
    a.iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(m, c)| {
            let k = m.count_ones() as i32;
            (mask_vars(m as u128), c * (-2.0f64).powi(k))
        })
        .collect()
}

fn to_binary_sparse(p: &ZPolynomial) -> Vec<(Vec<u32>, f64)> {
    assert!(p.n_vars() <= 128, "quadratization supports at most 128 variables");
    let mut acc: HashMap<u128, f64> = HashMap::new();
    for (vars, c) in p.terms() {
        let full = vars.iter().fold(0u128, |m, &i| m | 1 << i);
        // walk all submasks of `full`
        let mut sub = full;
        loop {
            let k = sub.count_ones() as i32;
            *acc.entry(sub).or_insert(0.0) += c * (-2.0f64).powi(k);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & full;
        }
    }
    let mut out: Vec<(Vec<u32>, f64)> = acc.into_iter().map(|(m, c)| (mask_vars(m), c)).collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

struct Term {
    vars: Vec<u32>,
    coeff: f64,
}

struct Reducer {
    terms: Vec<Term>,
    /// var -> ids of high-degree terms that contained it when added (lazy)
    occurrences: Vec<Vec<u32>>,
    counts: HashMap<(u32, u32), u32>,
    queue: BTreeSet<(Reverse<u32>, u32, u32)>,
    /// binary quadratic penalty contributions: (vars, coeff)
    penalties: Vec<(Vec<u32>, f64)>,
    aux: Vec<(u32, (u32, u32))>,
    n_vars: u32,
}

impl Reducer {
    fn new(n: usize, binary: Vec<(Vec<u32>, f64)>) -> Self {
        let mut r = Reducer {
            terms: Vec::with_capacity(binary.len()),
            occurrences: vec![Vec::new(); n],
            counts: HashMap::new(),
            queue: BTreeSet::new(),
            penalties: Vec::new(),
            aux: Vec::new(),
            n_vars: n as u32,
        };
        for (vars, coeff) in binary {
            let id = r.terms.len() as u32;
            if vars.len() >= 3 {
                for &v in &vars {
                    r.occurrences[v as usize].push(id);
                }
                for (i, &a) in vars.iter().enumerate() {
                    for &b in &vars[i + 1..] {
                        *r.counts.entry((a, b)).or_insert(0) += 1;
                    }
                }
            }
            r.terms.push(Term { vars, coeff });
        }
        for (&(a, b), &c) in &r.counts {
            r.queue.insert((Reverse(c), a, b));
        }
        r
    }

    fn bump(&mut self, a: u32, b: u32, delta: i32) {
        let key = (a.min(b), a.max(b));
        let old = self.counts.get(&key).copied().unwrap_or(0);
        let new = (old as i64 + delta as i64) as u32;
        if old > 0 {
            self.queue.remove(&(Reverse(old), key.0, key.1));
        }
        if new > 0 {
            self.counts.insert(key, new);
            self.queue.insert((Reverse(new), key.0, key.1));
        } else {
            self.counts.remove(&key);
        }
    }

    fn run(&mut self) {
        while let Some(&(_, a, b)) = self.queue.iter().next() {
            let (scan, other) = if self.occurrences[a as usize].len() <= self.occurrences[b as usize].len() {
                (a, b)
            } else {
                (b, a)
            };
            let hits: Vec<u32> = self.occurrences[scan as usize]
                .iter()
                .copied()
                .filter(|&t| {
                    let vars = &self.terms[t as usize].vars;
                    vars.len() >= 3 && vars.binary_search(&scan).is_ok() && vars.binary_search(&other).is_ok()
                })
                .collect();
            debug_assert!(!hits.is_empty());
            let w = self.n_vars;
            self.n_vars += 1;
            self.occurrences.push(Vec::new());
            let weight: f64 = hits.iter().map(|&t| self.terms[t as usize].coeff.abs()).sum();
            let m = 1.0 + 2.0 * weight;
            self.penalties.push((vec![a, b], m));
            self.penalties.push((vec![a, w], -2.0 * m));
            self.penalties.push((vec![b, w], -2.0 * m));
            self.penalties.push((vec![w], 3.0 * m));
            self.aux.push((w, (a, b)));
            for t in hits {
                self.substitute(t, a, b, w);
            }
        }
    }

    fn substitute(&mut self, t: u32, a: u32, b: u32, w: u32) {
        let old = std::mem::take(&mut self.terms[t as usize].vars);
        let rest: Vec<u32> = old.iter().copied().filter(|&v| v != a && v != b).collect();
        if rest.len() + 1 >= 3 {
            self.bump(a, b, -1);
            for &v in &rest {
                self.bump(a, v, -1);
                self.bump(b, v, -1);
                self.bump(w, v, 1);
            }
            self.occurrences[w as usize].push(t);
        } else {
            for (i, &x) in old.iter().enumerate() {
                for &y in &old[i + 1..] {
                    self.bump(x, y, -1);
                }
            }
        }
        let mut vars = rest;
        vars.push(w);
        self.terms[t as usize].vars = vars;
    }

    fn into_model(self, n_original: usize) -> QuadraticModel {
        let n = self.n_vars as usize;
        let mut q = QuadraticModel::new(n);
        q.n_original = n_original;
        q.aux_map = self.aux.into_iter().collect();
        let binary = self.terms.into_iter().map(|t| (t.vars, t.coeff)).chain(self.penalties);
        // x_i = (1 − s_i)/2
        for (vars, c) in binary {
            match vars.as_slice() {
                [] => q.offset += c,
                [i] => {
                    q.offset += c / 2.0;
                    q.add_linear(*i, -c / 2.0);
                }
                [i, j] => {
                    q.offset += c / 4.0;
                    q.add_linear(*i, -c / 4.0);
                    q.add_linear(*j, -c / 4.0);
                    q.add_quadratic(*i, *j, c / 4.0);
                }
                _ => unreachable!("reduction leaves only 2-local terms"),
            }
        }
        q.simplify()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::exact::all_energies;

    fn brute_min(p: &ZPolynomial) -> f64 {
        all_energies(p).into_iter().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn quadratic_input_is_copied() {
        let mut p = ZPolynomial::new(3);
        p.add_term(&[0, 1], 0.5);
        p.add_term(&[2], -1.0);
        p.add_term(&[], 0.25);
        let q = quadratize(&p);
        assert_eq!(q.n_aux(), 0);
        assert_eq!(q.to_polynomial(), p);
    }

    #[test]
    fn triple_product() {
        let mut p = ZPolynomial::new(3);
        p.add_term(&[0, 1, 2], 1.0);
        let q = quadratize(&p);
        assert!(q.n_aux() >= 1);
        assert!((brute_min(&q.to_polynomial()) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_and_sparse_conversion_agree() {
        let mut p = ZPolynomial::new(6);
        p.add_term(&[0, 1, 2, 3, 4, 5], 0.3);
        p.add_term(&[1, 3, 5], -0.7);
        p.add_term(&[0, 2], 1.1);
        p.add_term(&[], 0.5);
        let mut d = to_binary_dense(&p);
        let mut s = to_binary_sparse(&p);
        d.retain(|(_, c)| c.abs() > 1e-14);
        s.retain(|(_, c)| c.abs() > 1e-14);
        d.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(d.len(), s.len());
        for (x, y) in d.iter().zip(&s) {
            assert_eq!(x.0, y.0);
            assert!((x.1 - y.1).abs() < 1e-12);
        }
    }

    #[test]
    fn aux_consistent_at_optimum() {
        let mut p = ZPolynomial::new(5);
        p.add_term(&[0, 1, 2, 3], -1.5);
        p.add_term(&[1, 2, 4], 0.8);
        p.add_term(&[0, 3, 4], 1.2);
        let q = quadratize(&p);
        let set = crate::ising::exact_solve(&q).unwrap();
        for s in set.samples() {
            assert!(q.aux_consistent(&s.assignment));
        }
        assert!((set.best().unwrap().energy - brute_min(&p)).abs() < 1e-9);
    }
}
