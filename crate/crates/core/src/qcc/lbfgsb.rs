//! Box-constrained limited-memory quasi-Newton minimizer.
//!
//! Projected L-BFGS: the two-loop direction is computed on the variables not
//! pinned at an active bound, then a backtracking Armijo search runs along the
//! projected path.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct BoxOptions {
    pub max_iterations: usize,
    pub history: usize,
    /// Stop when the projected gradient infinity-norm drops below this.
    pub gtol: f64,
    /// Stop when successive energies differ by less than this.
    pub ftol: f64,
}

impl Default for BoxOptions {
    fn default() -> Self {
        Self { max_iterations: 400, history: 10, gtol: 1e-9, ftol: 1e-13 }
    }
}

#[derive(Debug, Clone)]
pub struct BoxResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut norm = 0.0f64;
    for i in 0..x.len() {
        let step = (x[i] - g[i]).clamp(lo[i], hi[i]) - x[i];
        norm = norm.max(step.abs());
    }
    norm
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize `f` over the box `[lo, hi]`. `f` writes its gradient into the slice.
pub fn minimize_box(
    mut f: impl FnMut(&[f64], &mut [f64]) -> f64,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &BoxOptions,
) -> BoxResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        if projected_gradient_norm(&x, &g, lo, hi) < opts.gtol {
            break;
        }
        iterations += 1;
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let mut d = two_loop(&g, &memory, &free);
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            memory.clear();
            d = g.iter().zip(&free).map(|(gi, &fr)| if fr { -gi } else { 0.0 }).collect();
            slope = dot(&d, &g);
            if slope >= 0.0 {
                break;
            }
        }
        // first step of a fresh memory is scaled to move at most one unit
        let mut alpha = if memory.is_empty() {
            (1.0 / d.iter().fold(0.0f64, |m, v| m.max(v.abs()))).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = x[i] + alpha * d[i];
            }
            project(&mut trial, lo, hi);
            let f_trial = f(&trial, &mut g_trial);
            let decrease: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
            if f_trial <= fx + 1e-4 * decrease && f_trial <= fx {
                accepted = true;
                let s: Vec<f64> = (0..n).map(|i| trial[i] - x[i]).collect();
                let y: Vec<f64> = (0..n).map(|i| g_trial[i] - g[i]).collect();
                let sy = dot(&s, &y);
                if sy > 1e-16 * dot(&y, &y).max(1e-300) {
                    memory.push_back((s, y, 1.0 / sy));
                    if memory.len() > opts.history {
                        memory.pop_front();
                    }
                }
                let df = fx - f_trial;
                x.copy_from_slice(&trial);
                g.copy_from_slice(&g_trial);
                fx = f_trial;
                if df < opts.ftol * fx.abs().max(1.0) && memory.len() > 1 {
                    return BoxResult { x, value: fx, iterations };
                }
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            if memory.is_empty() {
                break;
            }
            memory.clear();
        }
    }
    BoxResult { x, value: fx, iterations }
}

fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, free: &[bool]) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(x, &f)| if f { *x } else { 0.0 }).collect() };
    let mut q = mask(g);
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let s = mask(s);
        let a = rho * dot(&s, &q);
        for (qi, yi) in q.iter_mut().zip(y.iter().zip(free)) {
            if *yi.1 {
                *qi -= a * yi.0;
            }
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let yy = dot(&mask(y), &mask(y));
        let sy = dot(&mask(s), &mask(y));
        if yy > 0.0 && sy > 0.0 {
            q.iter_mut().for_each(|v| *v *= sy / yy);
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(&mask(y), &q);
        for (qi, si) in q.iter_mut().zip(s.iter().zip(free)) {
            if *si.1 {
                *qi += (a - b) * si.0;
            }
        }
    }
    q.iter().map(|v| -v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_unconstrained() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let r = minimize_box(f, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], &BoxOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r);
    }

    #[test]
    fn active_bound() {
        // minimum of (x+1)^2 + (y-2)^2 on [0,1]^2 is (0, 1)
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] + 1.0);
            g[1] = 2.0 * (x[1] - 2.0);
            (x[0] + 1.0).powi(2) + (x[1] - 2.0).powi(2)
        };
        let r = minimize_box(f, &[0.5, 0.5], &[0.0, 0.0], &[1.0, 1.0], &BoxOptions::default());
        assert_eq!(r.x, vec![0.0, 1.0]);
        assert_eq!(r.value, 2.0);
    }
}
