//! Qubit mean-field and qubit coupled-cluster energies on an annealer.
//!
//! A product of spin-coherent states turns `⟨H⟩` into a trigonometric function
//! of Bloch angles; Pauli-word entanglers `exp(−iτP/2)` add correlation. Each
//! angle's domain is folded in half by a ±1 sign variable so that, with the
//! reduced angles fixed, the energy is a spin polynomial in the signs. The
//! optimizer alternates between sampling the signs and a bounded quasi-Newton
//! step in the reduced angles.

mod lbfgsb;
mod parametric;

pub use lbfgsb::{minimize_box, BoxOptions, BoxResult};
pub use parametric::{ParametricHamiltonian, ParametricTerm};

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ising::{exact_solve_polynomial, minimize_polynomial, IsingError, Sampler, ZPolynomial};
use crate::pauli::{commutator, Pauli, PauliError, PauliSum, PauliWord, QubitStateVector, HERMITIAN_TOL};
use parametric::QubitTable;

#[derive(Debug, Error)]
pub enum QccError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("no entangler candidates: no product of two Hamiltonian words has an odd number of Y factors; pass entanglers explicitly")]
    EmptyPool,
    #[error("optimizer raised the energy by {0:e}")]
    Divergence(f64),
    #[error(transparent)]
    Ising(#[from] IsingError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Per-qubit Bloch angles `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl BlochState {
    pub fn new(theta: Vec<f64>, phi: Vec<f64>) -> Result<Self, QccError> {
        if theta.len() != phi.len() {
            return Err(QccError::Domain("θ and φ lengths differ".into()));
        }
        Ok(Self { theta, phi })
    }

    /// All qubits in `|0⟩`.
    pub fn zero(m: usize) -> Self {
        Self { theta: vec![0.0; m], phi: vec![0.0; m] }
    }

    pub fn n_qubits(&self) -> usize {
        self.theta.len()
    }

    /// `⊗_q [cos(θ_q/2)|0⟩ + e^{iφ_q} sin(θ_q/2)|1⟩]`
    pub fn product_state(&self) -> QubitStateVector {
        let m = self.n_qubits();
        let amps = (0..1usize << m)
            .map(|idx| {
                (0..m).fold(Complex64::new(1.0, 0.0), |acc, q| {
                    let one = idx >> (m - 1 - q) & 1 == 1;
                    let (t, p) = (self.theta[q], self.phi[q]);
                    acc * if one { Complex64::from_polar((t / 2.0).sin(), p) } else { Complex64::new((t / 2.0).cos(), 0.0) }
                })
            })
            .collect();
        QubitStateVector::new(amps).expect("power-of-two length")
    }
}

/// `Σ α_i Π_q ⟨σ⟩_q` with `⟨X⟩ = cosφ sinθ`, `⟨Y⟩ = sinφ sinθ`, `⟨Z⟩ = cosθ`.
pub fn bloch_energy(h: &PauliSum, s: &BlochState) -> Result<f64, QccError> {
    if h.n_qubits() != s.n_qubits() {
        return Err(QccError::Domain(format!("{} qubits vs {} Bloch angles", h.n_qubits(), s.n_qubits())));
    }
    let table = QubitTable::new(&s.theta, &s.phi);
    Ok(h.terms().map(|(w, c)| c.re * word_value(&table, w)).sum())
}

fn word_value(table: &QubitTable, w: &PauliWord) -> f64 {
    (0..w.n_qubits()).map(|q| table.value(q, w.get(q))).product()
}

/// Entangler words with their amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglerSet {
    pub words: Vec<PauliWord>,
    pub amplitudes: Vec<f64>,
}

impl EntanglerSet {
    pub fn new(words: Vec<PauliWord>, amplitudes: Vec<f64>) -> Result<Self, QccError> {
        if words.len() != amplitudes.len() {
            return Err(QccError::Domain("word and amplitude counts differ".into()));
        }
        let distinct: BTreeSet<_> = words.iter().collect();
        if distinct.len() != words.len() {
            return Err(QccError::Domain("entangler words must be distinct".into()));
        }
        if words.iter().any(|w| w.is_identity()) {
            return Err(QccError::Domain("identity is not an entangler".into()));
        }
        Ok(Self { words, amplitudes })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// `H^(k) = H^(k−1) − (i sinτ_k/2)[H^(k−1), P_k] + ((1 − cosτ_k)/2) P_k [H^(k−1), P_k]`
pub fn qcc_transform(h: &PauliSum, e: &EntanglerSet) -> Result<PauliSum, QccError> {
    let mut cur = h.clone();
    for (p, &tau) in e.words.iter().zip(&e.amplitudes) {
        if p.n_qubits() != h.n_qubits() {
            return Err(QccError::Pauli(PauliError::QubitMismatch(h.n_qubits(), p.n_qubits())));
        }
        let ps = PauliSum::from_word(*p, Complex64::new(1.0, 0.0));
        let comm = commutator(&cur, &ps)?;
        let a = comm.scale(Complex64::new(0.0, -tau.sin() / 2.0));
        let b = ps.try_mul(&comm)?.scale(Complex64::new((1.0 - tau.cos()) / 2.0, 0.0));
        cur = cur.try_add(&a)?.try_add(&b)?;
    }
    if let (r, Some(w)) = cur.max_imaginary() {
        if r >= HERMITIAN_TOL {
            return Err(QccError::Integrity(format!("imaginary residue {r:e} on {w} after transform")));
        }
    }
    Ok(cur)
}

/// `dE/dτ` at `τ = 0` for entangler `p`: `⟨(−i/2)[H, P]⟩`.
pub fn entangler_gradient(h: &PauliSum, s: &BlochState, p: &PauliWord) -> Result<f64, QccError> {
    let table = QubitTable::new(&s.theta, &s.phi);
    let mut g = 0.0;
    for (w, c) in h.terms() {
        if w.commutes_with(p) {
            continue;
        }
        let (phase, wp) = w.multiply(p)?;
        let f = crate::pauli::Phase::from_power(phase.power() as u32 + 3).to_complex().re;
        g += c.re * f * word_value(&table, &wp);
    }
    Ok(g)
}

/// `d²E/dτ²` at `τ = 0`: `½⟨P[H, P]⟩`.
pub fn entangler_curvature(h: &PauliSum, s: &BlochState, p: &PauliWord) -> Result<f64, QccError> {
    let table = QubitTable::new(&s.theta, &s.phi);
    Ok(h.terms()
        .filter(|(w, _)| !w.commutes_with(p))
        .map(|(w, c)| -c.re * word_value(&table, w))
        .sum())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntanglerSelection {
    pub set: EntanglerSet,
    /// Screening gradients of the chosen words, same order.
    pub gradients: Vec<f64>,
    /// Distinct flip sets in the pool.
    pub pool_size: usize,
    /// More entanglers were requested than the pool holds.
    pub truncated: bool,
}

/// Odd-Y products of distinct Hamiltonian words, phase stripped.
pub fn entangler_pool(h: &PauliSum) -> Vec<PauliWord> {
    let words: Vec<PauliWord> = h.words().copied().collect();
    let mut pool = BTreeSet::new();
    for (i, a) in words.iter().enumerate() {
        for b in &words[i + 1..] {
            let (_, w) = a.multiply(b).expect("same qubit count");
            if w.y_count() % 2 == 1 {
                pool.insert(w);
            }
        }
    }
    pool.into_iter().collect()
}

/// Rank the pool by `|dE/dτ|`, then `|d²E/dτ²|`, then word order, keep the
/// best word of each flip set (X/Y positions), and return the first `n`.
pub fn select_entanglers(h: &PauliSum, s: &BlochState, n: usize) -> Result<EntanglerSelection, QccError> {
    let pool = entangler_pool(h);
    if pool.is_empty() {
        return Err(QccError::EmptyPool);
    }
    let scored: Vec<(PauliWord, f64, f64)> = pool
        .iter()
        .map(|p| Ok((*p, entangler_gradient(h, s, p)?, entangler_curvature(h, s, p)?)))
        .collect::<Result<_, QccError>>()?;
    // keys quantized relative to the pool maximum, so optimizer noise ties with zero
    let gmax = scored.iter().fold(0.0f64, |m, r| m.max(r.1.abs())).max(f64::MIN_POSITIVE);
    let cmax = scored.iter().fold(0.0f64, |m, r| m.max(r.2.abs())).max(f64::MIN_POSITIVE);
    let key = |v: f64, max: f64| (v.abs() / max * 1e6).round() as i64;
    let mut ranked: Vec<(i64, i64, PauliWord, f64)> =
        scored.into_iter().map(|(p, g, c)| (key(g, gmax), key(c, cmax), p, g)).collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
    // words with the same flip set couple the same basis states; keep the best of each
    let mut flips = BTreeSet::new();
    ranked.retain(|r| flips.insert(r.2.x_mask()));
    let truncated = n > ranked.len();
    if truncated {
        log::warn!("requested {n} entanglers but the pool holds only {}", ranked.len());
    }
    let chosen = &ranked[..n.min(ranked.len())];
    Ok(EntanglerSelection {
        set: EntanglerSet::new(chosen.iter().map(|r| r.2).collect(), vec![0.0; chosen.len()])?,
        gradients: chosen.iter().map(|r| r.3).collect(),
        pool_size: ranked.len(),
        truncated,
    })
}

/// Sign variables per angle kind: θ takes 0 or 1, φ and τ take 0 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldProfile {
    pub theta: u8,
    pub phi: u8,
    pub tau: u8,
}

impl Default for FoldProfile {
    fn default() -> Self {
        Self { theta: 1, phi: 2, tau: 2 }
    }
}

impl FromStr for FoldProfile {
    type Err = QccError;

    /// `theta=1,phi=2,tau=2`; omitted kinds are unfolded.
    fn from_str(s: &str) -> Result<Self, QccError> {
        let mut p = FoldProfile { theta: 0, phi: 0, tau: 0 };
        for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| QccError::Domain(format!("fold entry `{part}` is not kind=count")))?;
            let v: u8 = v.trim().parse().map_err(|_| QccError::Domain(format!("bad fold count in `{part}`")))?;
            match (k.trim(), v) {
                ("theta", 0 | 1) => p.theta = v,
                ("phi", 0 | 2) => p.phi = v,
                ("tau", 0 | 2) => p.tau = v,
                _ => return Err(QccError::Domain(format!("unsupported fold `{part}` (theta∈{{0,1}}, phi,tau∈{{0,2}})"))),
            }
        }
        Ok(p)
    }
}

impl fmt::Display for FoldProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "theta={},phi={},tau={}", self.theta, self.phi, self.tau)
    }
}

/// Which angles are folded. A folded θ carries one sign variable, a folded φ
/// or τ carries two (the signs of its cosine and sine).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldConfig {
    pub fold_theta: Vec<bool>,
    pub fold_phi: Vec<bool>,
    pub fold_tau: Vec<bool>,
}

impl FoldConfig {
    pub fn full(m: usize, n_ent: usize) -> Self {
        Self::from_profile(&FoldProfile::default(), m, n_ent)
    }

    pub fn none(m: usize, n_ent: usize) -> Self {
        Self { fold_theta: vec![false; m], fold_phi: vec![false; m], fold_tau: vec![false; n_ent] }
    }

    pub fn from_profile(p: &FoldProfile, m: usize, n_ent: usize) -> Self {
        Self { fold_theta: vec![p.theta > 0; m], fold_phi: vec![p.phi > 0; m], fold_tau: vec![p.tau > 0; n_ent] }
    }

    pub fn discrete_count(&self) -> usize {
        let c = |v: &[bool]| v.iter().filter(|&&b| b).count();
        c(&self.fold_theta) + 2 * c(&self.fold_phi) + 2 * c(&self.fold_tau)
    }

    fn layout(&self) -> Layout {
        let mut next = 0usize;
        let mut take = |n: usize| {
            let i = next;
            next += n;
            i
        };
        let theta = self.fold_theta.iter().map(|&f| f.then(|| take(1))).collect();
        let phi = self.fold_phi.iter().map(|&f| f.then(|| (take(1), take(1)))).collect();
        let tau = self.fold_tau.iter().map(|&f| f.then(|| (take(1), take(1)))).collect();
        Layout { theta, phi, tau, n: next }
    }
}

/// Sign-variable indices: θ signs first, then `(cos, sin)` pairs for φ, then for τ.
struct Layout {
    theta: Vec<Option<usize>>,
    phi: Vec<Option<(usize, usize)>>,
    tau: Vec<Option<(usize, usize)>>,
    n: usize,
}

impl Layout {
    fn m(&self) -> usize {
        self.theta.len()
    }

    /// Full-range angles and `d full / d reduced` from reduced angles and signs.
    fn to_full(&self, y: &[f64], signs: &[i8]) -> (Vec<f64>, Vec<f64>) {
        let m = self.m();
        let mut full = y.to_vec();
        let mut jac = vec![1.0; y.len()];
        for q in 0..m {
            if let Some(t) = self.theta[q] {
                if signs[t] < 0 {
                    full[q] = PI - y[q];
                    jac[q] = -1.0;
                }
            }
            if let Some((c, s)) = self.phi[q] {
                let (v, d) = quadrant(y[m + q], signs[c], signs[s]);
                full[m + q] = v;
                jac[m + q] = d;
            }
        }
        for (k, slot) in self.tau.iter().enumerate() {
            if let Some((v, u)) = *slot {
                let (a, d) = quadrant(y[2 * m + k], signs[v], signs[u]);
                full[2 * m + k] = a;
                jac[2 * m + k] = d;
            }
        }
        (full, jac)
    }

    /// Inverse of [`Layout::to_full`]; unfolded entries pass through.
    fn to_reduced(&self, full: &[f64]) -> (Vec<f64>, Vec<i8>) {
        let m = self.m();
        let mut y = full.to_vec();
        let mut signs = vec![1i8; self.n];
        for q in 0..m {
            if let Some(t) = self.theta[q] {
                let th = full[q].clamp(0.0, PI);
                if th > FRAC_PI_2 {
                    signs[t] = -1;
                    y[q] = PI - th;
                } else {
                    y[q] = th;
                }
            }
            if let Some((c, s)) = self.phi[q] {
                let (r, sc, ss) = unquadrant(full[m + q]);
                y[m + q] = r;
                signs[c] = sc;
                signs[s] = ss;
            }
        }
        for (k, slot) in self.tau.iter().enumerate() {
            if let Some((v, u)) = *slot {
                let (r, sc, ss) = unquadrant(full[2 * m + k]);
                y[2 * m + k] = r;
                signs[v] = sc;
                signs[u] = ss;
            }
        }
        (y, signs)
    }

    /// Where a reduced angle sits on the boundary that two sign choices share,
    /// pick the sign that makes the inward direction a descent direction.
    /// Leaves the full-range angles, and so the energy, unchanged.
    fn reorient(&self, y: &[f64], signs: &mut [i8], grad: impl Fn(&[f64], &mut [f64]) -> f64) -> bool {
        let (full, _) = self.to_full(y, signs);
        let mut g = vec![0.0; full.len()];
        grad(&full, &mut g);
        let m = self.m();
        let mut flipped = false;
        let mut flip = |v: &mut i8| {
            *v = -*v;
            flipped = true;
        };
        let eps = crate::ZERO_TOL;
        for q in 0..m {
            if let Some(t) = self.theta[q] {
                if y[q] == FRAC_PI_2 && signs[t] as f64 * g[q] < -eps {
                    flip(&mut signs[t]);
                }
            }
        }
        let pairs = self.phi.iter().enumerate().map(|(q, p)| (m + q, *p));
        let pairs = pairs.chain(self.tau.iter().enumerate().map(|(k, p)| (2 * m + k, *p)));
        for (i, slot) in pairs {
            let Some((c, s)) = slot else { continue };
            let slope = (signs[c] * signs[s]) as f64 * g[i];
            if y[i] == 0.0 && slope > eps {
                flip(&mut signs[s]);
            } else if y[i] == FRAC_PI_2 && slope < -eps {
                flip(&mut signs[c]);
            }
        }
        flipped
    }

    fn is_folded(&self, i: usize) -> bool {
        let m = self.m();
        if i < m {
            self.theta[i].is_some()
        } else if i < 2 * m {
            self.phi[i - m].is_some()
        } else {
            self.tau[i - 2 * m].is_some()
        }
    }

    fn bounds(&self, n_params: usize) -> (Vec<f64>, Vec<f64>) {
        let m = self.m();
        (0..n_params)
            .map(|i| {
                if self.is_folded(i) {
                    (0.0, FRAC_PI_2)
                } else if i < m {
                    (0.0, PI)
                } else {
                    (-TAU, TAU)
                }
            })
            .unzip()
    }
}

/// Angle with `cos` sign `c` and `sin` sign `s` whose reference angle is `r`.
fn quadrant(r: f64, c: i8, s: i8) -> (f64, f64) {
    match (c > 0, s > 0) {
        (true, true) => (r, 1.0),
        (false, true) => (PI - r, -1.0),
        (false, false) => (PI + r, 1.0),
        (true, false) => (TAU - r, -1.0),
    }
}

fn unquadrant(a: f64) -> (f64, i8, i8) {
    let (s, c) = a.sin_cos();
    let r = s.abs().atan2(c.abs()).clamp(0.0, FRAC_PI_2);
    (r, if c >= 0.0 { 1 } else { -1 }, if s >= 0.0 { 1 } else { -1 })
}

/// The folded energy as a multilinear polynomial in the sign variables, with
/// trigonometric factors evaluated at the reduced angles `y`.
///
/// `y` uses the parametric layout `[θ, φ, τ]`; folded entries must lie in
/// `[0, π/2]`, unfolded entries are full-range values.
pub fn fold_and_project(h: &ParametricHamiltonian, y: &[f64], f: &FoldConfig) -> Result<ZPolynomial, QccError> {
    let m = h.n_qubits();
    let layout = f.layout();
    if y.len() != h.n_params() || layout.m() != m || layout.tau.len() != h.n_entanglers() {
        return Err(QccError::Domain("angle vector or fold configuration does not match the Hamiltonian".into()));
    }
    for (i, &v) in y.iter().enumerate() {
        if layout.is_folded(i) && !(-1e-12..=FRAC_PI_2 + 1e-12).contains(&v) {
            return Err(QccError::Domain(format!("reduced angle {v} at position {i} outside [0, π/2]")));
        }
    }
    let (st, ct): (Vec<f64>, Vec<f64>) = y.iter().map(|v| v.sin_cos()).unzip();
    let mut poly = ZPolynomial::new(layout.n);
    let mut vars = Vec::new();
    for t in h.terms() {
        vars.clear();
        let mut c = t.coeff;
        for q in 0..m {
            let (th, ph) = (q, m + q);
            match t.word.get(q) {
                Pauli::I => {}
                Pauli::X => {
                    c *= st[th] * ct[ph];
                    if let Some((cv, _)) = layout.phi[q] {
                        vars.push(cv as u32);
                    }
                }
                Pauli::Y => {
                    c *= st[th] * st[ph];
                    if let Some((_, sv)) = layout.phi[q] {
                        vars.push(sv as u32);
                    }
                }
                Pauli::Z => {
                    c *= ct[th];
                    if let Some(tv) = layout.theta[q] {
                        vars.push(tv as u32);
                    }
                }
            }
        }
        for k in 0..h.n_entanglers() {
            let i = 2 * m + k;
            if t.cos_mask >> k & 1 == 1 {
                c *= ct[i];
                if let Some((v, _)) = layout.tau[k] {
                    vars.push(v as u32);
                }
            } else if t.sin_mask >> k & 1 == 1 {
                c *= st[i];
                if let Some((_, u)) = layout.tau[k] {
                    vars.push(u as u32);
                }
            }
        }
        poly.add_term(&vars, c);
    }
    Ok(poly.simplify())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QccOptions {
    pub n_ent: usize,
    pub folds: FoldProfile,
    /// Explicit entangler words; screening is skipped when given.
    pub entanglers: Option<Vec<PauliWord>>,
    pub tol: f64,
    pub max_outer: usize,
    pub starts: usize,
    /// Also run from the diagonal-minimum start when it is not the QMF winner.
    pub basis_reference: bool,
    pub seed: u64,
}

impl Default for QccOptions {
    fn default() -> Self {
        Self { n_ent: 4, folds: FoldProfile::default(), entanglers: None, tol: 1e-7, max_outer: 50, starts: 8, basis_reference: true, seed: 0 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct QccTimings {
    pub qmf: Duration,
    pub screening: Duration,
    pub quadratize: Duration,
    pub sample: Duration,
    pub optimize: Duration,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QCCResult {
    pub energy: f64,
    pub qmf_energy: f64,
    /// Full-range angles.
    pub bloch: BlochState,
    pub entanglers: EntanglerSet,
    pub discrete: Vec<i8>,
    pub outer_iterations: usize,
    pub discrete_vars: usize,
    /// Largest 2-local model handed to the sampler.
    pub quadratic_vars: usize,
    pub pool_truncated: bool,
    pub energy_history: Vec<f64>,
    pub timings: QccTimings,
}

impl QCCResult {
    /// Transformed Hamiltonian at the reported amplitudes.
    pub fn transformed(&self, h: &PauliSum) -> Result<PauliSum, QccError> {
        qcc_transform(h, &self.entanglers)
    }
}

fn derived_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ k.wrapping_add(1).wrapping_mul(0xD6E8_FEB8_6659_FD93)
}

/// Lowest diagonal element's basis state as Bloch angles.
fn diagonal_minimum_state(h: &PauliSum) -> Result<BlochState, QccError> {
    let m = h.n_qubits();
    let mut diag = ZPolynomial::new(m);
    for (w, c) in h.diagonal_part().terms() {
        let vars: Vec<u32> = (0..m as u32).filter(|&q| w.get(q as usize) == Pauli::Z).collect();
        diag.add_canonical(vars, c.re);
    }
    let set = exact_solve_polynomial(&diag)?;
    let a = &set.best().expect("non-empty enumeration").assignment;
    Ok(BlochState { theta: a.iter().map(|&s| if s < 0 { PI } else { 0.0 }).collect(), phi: vec![0.0; m] })
}

/// Local QMF minima from each start, in start order.
///
/// Start 0 is the lowest diagonal basis state; the rest are uniform random.
pub fn qmf_starts(h: &PauliSum, starts: usize, seed: u64) -> Result<Vec<(f64, BlochState)>, QccError> {
    let m = h.n_qubits();
    let ph = ParametricHamiltonian::new(h, &[])?;
    let layout = FoldConfig::none(m, 0).layout();
    let (lo, hi) = layout.bounds(2 * m);
    let first = diagonal_minimum_state(h)?;
    let opts = BoxOptions::default();
    Ok((0..starts.max(1))
        .into_par_iter()
        .map(|k| {
            let x0: Vec<f64> = if k == 0 {
                first.theta.iter().chain(&first.phi).copied().collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, k as u64));
                let th: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..PI)).collect();
                let ph: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..TAU)).collect();
                th.into_iter().chain(ph).collect()
            };
            let r = minimize_box(|x, g| ph.energy_and_gradient(x, g), &x0, &lo, &hi, &opts);
            let state = BlochState { theta: r.x[..m].to_vec(), phi: r.x[m..].iter().map(|v| v.rem_euclid(TAU)).collect() };
            (r.value, state)
        })
        .collect())
}

fn lowest(runs: &[(f64, BlochState)]) -> usize {
    (0..runs.len()).min_by(|&a, &b| runs[a].0.total_cmp(&runs[b].0).then(a.cmp(&b))).expect("at least one start")
}

/// Multi-start bounded minimization of the mean-field energy.
pub fn qmf_optimize(h: &PauliSum, starts: usize, seed: u64) -> Result<(f64, BlochState), QccError> {
    let runs = qmf_starts(h, starts, seed)?;
    Ok(runs[lowest(&runs)].clone())
}

/// Alternate sign sampling and continuous relaxation from the QMF optimum.
///
/// When the best QMF start is not the diagonal-minimum start, the loop also
/// runs from the latter's optimum and the lower result is kept.
pub fn qcc_optimize(h: &PauliSum, opts: &QccOptions, sampler: &dyn Sampler) -> Result<QCCResult, QccError> {
    h.check_hermitian(HERMITIAN_TOL)?;
    let t0 = Instant::now();
    let runs = qmf_starts(h, opts.starts, opts.seed)?;
    let qmf_time = t0.elapsed();
    let best = lowest(&runs);
    let mut refs = vec![best];
    if opts.basis_reference && best != 0 && (runs[0].0 - runs[best].0).abs() > 1e-9 {
        refs.push(0);
    }
    let mut out: Option<QCCResult> = None;
    let mut timings = QccTimings { qmf: qmf_time, ..Default::default() };
    for i in refs {
        let mut r = qcc_from_reference(h, &runs[i].1, opts, sampler)?;
        add_timings(&mut timings, &r.timings);
        r.qmf_energy = runs[best].0;
        out = match out {
            Some(o) if o.energy <= r.energy => Some(o),
            _ => Some(r),
        };
    }
    let mut r = out.expect("at least one reference");
    r.timings = timings;
    Ok(r)
}

fn add_timings(acc: &mut QccTimings, t: &QccTimings) {
    acc.qmf += t.qmf;
    acc.screening += t.screening;
    acc.quadratize += t.quadratize;
    acc.sample += t.sample;
    acc.optimize += t.optimize;
}

/// Entangler screening and the alternating loop from one QMF state.
pub fn qcc_from_reference(
    h: &PauliSum,
    qmf_state: &BlochState,
    opts: &QccOptions,
    sampler: &dyn Sampler,
) -> Result<QCCResult, QccError> {
    let m = h.n_qubits();
    let mut timings = QccTimings::default();
    let qmf_energy = bloch_energy(h, qmf_state)?;
    let t1 = Instant::now();
    let (words, gradients, pool_truncated) = match &opts.entanglers {
        Some(words) => {
            let g = words.iter().map(|p| entangler_gradient(h, qmf_state, p)).collect::<Result<_, _>>()?;
            (words.clone(), g, false)
        }
        None if opts.n_ent == 0 => (Vec::new(), Vec::new(), false),
        None => {
            let sel = select_entanglers(h, qmf_state, opts.n_ent)?;
            (sel.set.words, sel.gradients, sel.truncated)
        }
    };
    timings.screening = t1.elapsed();
    let n_ent = words.len();
    let ph = ParametricHamiltonian::new(h, &words)?;
    let folds = FoldConfig::from_profile(&opts.folds, m, n_ent);
    let layout = folds.layout();
    let (lo, hi) = layout.bounds(ph.n_params());

    let full0: Vec<f64> =
        qmf_state.theta.iter().chain(&qmf_state.phi).copied().chain(std::iter::repeat_n(0.0, n_ent)).collect();
    let (mut y, mut signs) = layout.to_reduced(&full0);
    // point each sin-sign downhill so the amplitudes can leave zero
    for (k, slot) in layout.tau.iter().enumerate() {
        if let Some((_, u)) = *slot {
            signs[u] = if gradients[k] > 0.0 { -1 } else { 1 };
        }
    }
    let energy_at = |y: &[f64], signs: &[i8]| ph.energy(&layout.to_full(y, signs).0);
    let mut current = energy_at(&y, &signs);
    let mut history = vec![current];
    let mut quadratic_vars = 0;
    let mut outer = 0;
    let box_opts = BoxOptions::default();
    while outer < opts.max_outer {
        outer += 1;
        let start = current;
        if layout.n > 0 {
            let poly = fold_and_project(&ph, &y, &folds)?;
            let sol = minimize_polynomial(&poly, sampler)?;
            timings.quadratize += sol.quadratize_time;
            timings.sample += sol.sample_time;
            quadratic_vars = quadratic_vars.max(sol.quadratic_vars);
            if let Some(best) = sol.samples.best() {
                let e = energy_at(&y, &best.assignment);
                if e < current - crate::ZERO_TOL {
                    signs.clone_from(&best.assignment);
                    current = e;
                }
            }
        }
        let t2 = Instant::now();
        for pass in 0..=ph.n_params() {
            let flipped = layout.reorient(&y, &mut signs, |full, g| ph.energy_and_gradient(full, g));
            if pass > 0 && !flipped {
                break;
            }
            let e = energy_at(&y, &signs);
            if e > current + 1e-12 {
                return Err(QccError::Divergence(e - current));
            }
            current = current.min(e);
            let res = minimize_box(
                |x, g| {
                    let (full, jac) = layout.to_full(x, &signs);
                    let e = ph.energy_and_gradient(&full, g);
                    g.iter_mut().zip(&jac).for_each(|(gi, j)| *gi *= j);
                    e
                },
                &y,
                &lo,
                &hi,
                &box_opts,
            );
            if res.value > current + 1e-9 {
                return Err(QccError::Divergence(res.value - current));
            }
            if res.value <= current {
                y = res.x;
                current = res.value;
            }
        }
        timings.optimize += t2.elapsed();
        history.push(current);
        if start - current < opts.tol {
            break;
        }
    }

    let (full, _) = layout.to_full(&y, &signs);
    let energy = ph.energy(&full);
    let bloch = BlochState { theta: full[..m].to_vec(), phi: full[m..2 * m].iter().map(|v| v.rem_euclid(TAU)).collect() };
    let amplitudes = full[2 * m..].iter().map(|v| v.rem_euclid(TAU)).collect();
    Ok(QCCResult {
        energy,
        qmf_energy,
        bloch,
        entanglers: EntanglerSet::new(words, amplitudes)?,
        discrete: signs,
        outer_iterations: outer,
        discrete_vars: layout.n,
        quadratic_vars,
        pool_truncated,
        energy_history: history,
        timings,
    })
}

/// Discrete-variable counts before and after quadratization of the folded
/// energy, evaluated at generic reduced angles so no coefficient vanishes by accident.
pub fn qcc_variable_counts(h: &PauliSum, n_ent: usize, profile: &FoldProfile) -> Result<(usize, usize), QccError> {
    let m = h.n_qubits();
    let state = BlochState { theta: vec![PI / 8.0; m], phi: vec![PI / 8.0; m] };
    let words = if n_ent == 0 { Vec::new() } else { select_entanglers(h, &state, n_ent)?.set.words };
    let ph = ParametricHamiltonian::new(h, &words)?;
    let folds = FoldConfig::from_profile(profile, m, words.len());
    let y: Vec<f64> = (0..ph.n_params()).map(|i| PI / 8.0 + 0.01 * i as f64).collect();
    let poly = fold_and_project(&ph, &y, &folds)?;
    let q = crate::ising::quadratize(&poly);
    Ok((folds.discrete_count(), q.n_vars))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{exact_solve_polynomial, ExactSampler};
    use crate::pauli::{eigenvalues, expectation};

    fn sum(pairs: &[(f64, &str)]) -> PauliSum {
        PauliSum::from_pairs(pairs).unwrap()
    }

    fn w(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    #[test]
    fn bloch_examples() {
        let s = BlochState::new(vec![0.4], vec![0.0]).unwrap();
        assert!((bloch_energy(&sum(&[(1.0, "Z")]), &s).unwrap() - 0.4f64.cos()).abs() < 1e-15);
        let s = BlochState::new(vec![FRAC_PI_2], vec![PI]).unwrap();
        assert!((bloch_energy(&sum(&[(1.0, "X")]), &s).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn bloch_matches_product_state() {
        let h = sum(&[(0.3, "XYZ"), (-0.8, "ZZI"), (0.5, "IYX"), (0.25, "III")]);
        let s = BlochState::new(vec![0.3, 1.9, 2.7], vec![4.0, 0.2, 5.5]).unwrap();
        let direct = expectation(&h, &s.product_state()).unwrap();
        assert!((bloch_energy(&h, &s).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn transform_identity_and_single_qubit() {
        let h = sum(&[(1.0, "Z")]);
        let zero = EntanglerSet::new(vec![w("Y")], vec![0.0]).unwrap();
        assert_eq!(qcc_transform(&h, &zero).unwrap(), h);
        let t = 0.8f64;
        let out = qcc_transform(&h, &EntanglerSet::new(vec![w("Y")], vec![t]).unwrap()).unwrap();
        assert!((out.coefficient(&w("Z")).re - t.cos()).abs() < 1e-15);
        assert!((out.coefficient(&w("X")).re + t.sin()).abs() < 1e-15);
    }

    #[test]
    fn transform_preserves_spectrum_and_matches_parametric() {
        let h = sum(&[(0.4, "XZY"), (-0.3, "ZZI"), (0.7, "IXX"), (0.2, "YIZ")]);
        let e = EntanglerSet::new(vec![w("XYI"), w("YZX")], vec![0.9, -2.1]).unwrap();
        let out = qcc_transform(&h, &e).unwrap();
        let (a, b) = (eigenvalues(&h).unwrap(), eigenvalues(&out).unwrap());
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
        let ph = ParametricHamiltonian::new(&h, &e.words).unwrap();
        let diff = ph.at(&e.amplitudes) - out;
        assert!(diff.terms().all(|(_, c)| c.norm() < 1e-12));
    }

    #[test]
    fn pool_contains_y_from_x_times_z() {
        let pool = entangler_pool(&sum(&[(1.0, "X"), (1.0, "Z")]));
        assert_eq!(pool, vec![w("Y")]);
        let sel = select_entanglers(&sum(&[(1.0, "X"), (1.0, "Z")]), &BlochState::zero(1), 3).unwrap();
        assert!(sel.truncated);
        assert_eq!(sel.set.len(), 1);
        assert!(matches!(select_entanglers(&sum(&[(1.0, "Z")]), &BlochState::zero(1), 1), Err(QccError::EmptyPool)));
    }

    #[test]
    fn screening_gradient_matches_finite_difference() {
        let h = sum(&[(0.4, "XZY"), (-0.3, "ZZI"), (0.7, "IXX"), (0.2, "YIZ")]);
        let s = BlochState::new(vec![0.3, 1.2, 2.0], vec![0.5, 3.0, 4.4]).unwrap();
        for p in entangler_pool(&h) {
            let e = |t: f64| {
                let set = EntanglerSet::new(vec![p], vec![t]).unwrap();
                bloch_energy(&qcc_transform(&h, &set).unwrap(), &s).unwrap()
            };
            let d = 1e-3;
            let fd = (e(-2.0 * d) - 8.0 * e(-d) + 8.0 * e(d) - e(2.0 * d)) / (12.0 * d);
            let g = entangler_gradient(&h, &s, &p).unwrap();
            assert!((fd - g).abs() < 1e-9, "{p}: {fd} vs {g}");
            let fd2 = (e(d) - 2.0 * e(0.0) + e(-d)) / (d * d);
            assert!((fd2 - entangler_curvature(&h, &s, &p).unwrap()).abs() < 1e-5);
        }
    }

    #[test]
    fn fold_examples() {
        let ph = ParametricHamiltonian::new(&sum(&[(1.0, "Z")]), &[]).unwrap();
        let f = FoldConfig { fold_theta: vec![true], fold_phi: vec![false], fold_tau: vec![] };
        let p = fold_and_project(&ph, &[0.0, 0.0], &f).unwrap();
        assert_eq!(p.coefficient(&[0]), 1.0);
        assert_eq!(exact_solve_polynomial(&p).unwrap().best().unwrap().energy, -1.0);
        let ph = ParametricHamiltonian::new(&sum(&[(1.0, "ZZ")]), &[]).unwrap();
        let f = FoldConfig { fold_theta: vec![true; 2], fold_phi: vec![false; 2], fold_tau: vec![] };
        let p = fold_and_project(&ph, &[0.3, 0.5, 0.0, 0.0], &f).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p.coefficient(&[0, 1]) - 0.3f64.cos() * 0.5f64.cos()).abs() < 1e-15);
        assert!(fold_and_project(&ph, &[2.0, 0.5, 0.0, 0.0], &f).is_err());
    }

    #[test]
    fn folded_polynomial_matches_full_energy() {
        let h = sum(&[(0.4, "XZY"), (-0.3, "ZZI"), (0.7, "IXX"), (0.2, "YIZ"), (0.5, "ZIZ")]);
        let words = vec![w("XYI"), w("IYZ")];
        let ph = ParametricHamiltonian::new(&h, &words).unwrap();
        let f = FoldConfig { fold_theta: vec![true, false, true], fold_phi: vec![true, true, false], fold_tau: vec![true, false] };
        let layout = f.layout();
        assert_eq!(layout.n, 2 + 4 + 2);
        let y = [0.2, 2.5, 1.1, 0.7, 0.4, -1.3, 0.9, 2.2];
        let poly = fold_and_project(&ph, &y, &f).unwrap();
        for mask in 0..1usize << layout.n {
            let signs: Vec<i8> = (0..layout.n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
            let (full, _) = layout.to_full(&y, &signs);
            let direct = bloch_energy(
                &qcc_transform(&h, &EntanglerSet::new(words.clone(), full[6..].to_vec()).unwrap()).unwrap(),
                &BlochState::new(full[..3].to_vec(), full[3..6].to_vec()).unwrap(),
            )
            .unwrap();
            assert!((poly.evaluate(&signs).unwrap() - direct).abs() < 1e-10);
            let (y2, s2) = layout.to_reduced(&full);
            assert_eq!(s2, signs);
            assert!(y2.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn fold_profile_parsing() {
        assert_eq!("theta=1,phi=2,tau=2".parse::<FoldProfile>().unwrap(), FoldProfile::default());
        assert_eq!("theta=1".parse::<FoldProfile>().unwrap(), FoldProfile { theta: 1, phi: 0, tau: 0 });
        assert!("phi=1".parse::<FoldProfile>().is_err());
        assert_eq!(FoldConfig::full(6, 4).discrete_count(), 26);
    }

    #[test]
    fn single_qubit_qmf() {
        let h = sum(&[(1.0, "Z")]);
        let opts = QccOptions { n_ent: 0, folds: FoldProfile { theta: 0, phi: 0, tau: 0 }, ..Default::default() };
        let r = qcc_optimize(&h, &opts, &ExactSampler).unwrap();
        assert!((r.energy + 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_qubit_qcc_reaches_ground_state() {
        let h = sum(&[(0.5, "ZI"), (0.3, "IZ"), (0.2, "XX"), (0.2, "YY"), (-0.1, "ZZ")]);
        let opts = QccOptions { n_ent: 2, ..Default::default() };
        let r = qcc_optimize(&h, &opts, &ExactSampler).unwrap();
        let exact = eigenvalues(&h).unwrap()[0];
        assert!(r.energy >= exact - 1e-9 && r.energy <= r.qmf_energy + 1e-9);
        assert!((r.energy - exact).abs() < 1e-6, "{} vs {exact}", r.energy);
        let direct = bloch_energy(&r.transformed(&h).unwrap(), &r.bloch).unwrap();
        assert!((direct - r.energy).abs() < 1e-9);
    }
}
