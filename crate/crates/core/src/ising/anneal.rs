use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{QuadraticModel, SampleSet};

/// Couplings smaller than this fraction of the largest one are ignored when
/// sizing the temperature range.
const SCALE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub reads: usize,
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for AnnealParams {
    fn default() -> Self {
        Self { reads: 100, sweeps: 1000, seed: 0 }
    }
}

/// Geometric inverse-temperature ramp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Schedule {
    /// `β₀ = 0.1/⟨Δmax⟩` and `β₁ = 10/min Δmin` from per-variable flip-energy scales.
    pub fn for_model(q: &QuadraticModel, adj: &Adjacency) -> Self {
        let biggest = q
            .linear
            .iter()
            .map(|h| h.abs())
            .chain(q.quadratic.values().map(|c| c.abs()))
            .fold(0.0, f64::max);
        if biggest == 0.0 {
            return Self { beta_start: 1.0, beta_end: 1.0 };
        }
        let floor = biggest * SCALE_FLOOR;
        let mut max_sum = 0.0;
        let mut n_active = 0usize;
        let mut min_delta = f64::INFINITY;
        for i in 0..q.n_vars {
            let h = q.linear[i].abs();
            let mut total = h;
            let mut smallest = if h > floor { h } else { f64::INFINITY };
            for &(_, j) in adj.neighbours(i) {
                let c = j.abs();
                total += c;
                if c > floor {
                    smallest = smallest.min(c);
                }
            }
            if total > floor {
                max_sum += 2.0 * total;
                n_active += 1;
            }
            if smallest.is_finite() {
                min_delta = min_delta.min(2.0 * smallest);
            }
        }
        let beta_start = 0.1 / (max_sum / n_active as f64);
        let beta_end = (10.0 / min_delta).max(beta_start);
        Self { beta_start, beta_end }
    }

    pub fn beta(&self, sweep: usize, sweeps: usize) -> f64 {
        if sweeps <= 1 {
            return self.beta_end;
        }
        let t = sweep as f64 / (sweeps - 1) as f64;
        self.beta_start * (self.beta_end / self.beta_start).powf(t)
    }
}

/// Compressed neighbour lists.
pub struct Adjacency {
    start: Vec<usize>,
    entries: Vec<(u32, f64)>,
}

impl Adjacency {
    pub fn new(q: &QuadraticModel) -> Self {
        let mut deg = vec![0usize; q.n_vars + 1];
        for &(i, j) in q.quadratic.keys() {
            deg[i as usize] += 1;
            deg[j as usize] += 1;
        }
        let mut start = vec![0usize; q.n_vars + 1];
        for i in 0..q.n_vars {
            start[i + 1] = start[i] + deg[i];
        }
        let mut fill = start.clone();
        let mut entries = vec![(0u32, 0.0); start[q.n_vars]];
        for (&(i, j), &c) in &q.quadratic {
            entries[fill[i as usize]] = (j, c);
            fill[i as usize] += 1;
            entries[fill[j as usize]] = (i, c);
            fill[j as usize] += 1;
        }
        Self { start, entries }
    }

    fn neighbours(&self, i: usize) -> &[(u32, f64)] {
        &self.entries[self.start[i]..self.start[i + 1]]
    }
}

fn read_seed(seed: u64, read: usize) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ (read as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Metropolis single-spin-flip simulated annealing, one independent chain per read.
///
/// Each chain keeps the best state it visits. Results depend only on the
/// model and `params`, not on thread count.
pub fn anneal(q: &QuadraticModel, params: &AnnealParams) -> SampleSet {
    let reads = params.reads.max(1);
    let sweeps = params.sweeps.max(1);
    let adj = Adjacency::new(q);
    let schedule = Schedule::for_model(q, &adj);
    let raw: Vec<(Vec<i8>, f64)> = (0..reads)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(read_seed(params.seed, r));
            let best = chain(q, &adj, &schedule, sweeps, &mut rng);
            let e = q.evaluate_unchecked(&best);
            (best, e)
        })
        .collect();
    SampleSet::from_raw(raw)
}

fn chain(q: &QuadraticModel, adj: &Adjacency, schedule: &Schedule, sweeps: usize, rng: &mut ChaCha8Rng) -> Vec<i8> {
    let n = q.n_vars;
    let mut s: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    // local field f_i = h_i + Σ_j J_ij s_j
    let mut field: Vec<f64> = (0..n)
        .map(|i| q.linear[i] + adj.neighbours(i).iter().map(|&(j, c)| c * s[j as usize] as f64).sum::<f64>())
        .collect();
    let mut energy = q.evaluate_unchecked(&s);
    let mut best = s.clone();
    let mut best_energy = energy;
    for sweep in 0..sweeps {
        let beta = schedule.beta(sweep, sweeps);
        for i in 0..n {
            let si = s[i] as f64;
            let delta = -2.0 * si * field[i];
            if delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp() {
                s[i] = -s[i];
                energy += delta;
                for &(j, c) in adj.neighbours(i) {
                    field[j as usize] -= 2.0 * c * si;
                }
                if energy < best_energy - 1e-12 {
                    best_energy = energy;
                    best.copy_from_slice(&s);
                }
            }
        }
    }
    best
}
