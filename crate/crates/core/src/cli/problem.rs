//! Fixture loading, qubit Hamiltonian assembly and per-method runners.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ising::{AnnealParams, ExactSampler, RemoteSampler, Sampler, SimulatedAnnealer};
use crate::molham::{
    add_number_penalty, build_hamiltonian, parse_fcidump, restrict_active_space, sz_operator, FermionOperator, IntegralSet,
};
use crate::pauli::{ground_state, Encoding, PauliSum};
use crate::qcc::{qcc_optimize, qcc_variable_counts, FoldProfile, QccOptions};
use crate::xbk::{xbk_ground_state, xbk_variable_counts, XbkOptions};

use super::CliError;

/// One record of a fixture `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub label: f64,
    pub reference_energy: f64,
    pub n_orbitals: usize,
    pub n_electrons: usize,
    #[serde(default)]
    pub frozen: Option<usize>,
    #[serde(default)]
    pub active: Option<usize>,
    #[serde(default)]
    pub molecule: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct Manifest {
    entries: Vec<ManifestEntry>,
}

/// Look for a `manifest.json` in the ancestors of `path` that lists it.
pub fn find_manifest_entry(path: &Path) -> Option<ManifestEntry> {
    let abs = fs::canonicalize(path).ok()?;
    for dir in abs.ancestors().skip(1) {
        let candidate = dir.join("manifest.json");
        let Ok(text) = fs::read_to_string(&candidate) else { continue };
        let Ok(manifest) = serde_json::from_str::<Manifest>(&text) else { continue };
        let rel = abs.strip_prefix(dir).ok()?;
        if let Some(e) = manifest.entries.into_iter().find(|e| Path::new(&e.file) == rel) {
            return Some(e);
        }
    }
    None
}

/// Geometry value encoded as `name_<value>.fcidump`.
pub fn label_from_path(path: &Path) -> Option<f64> {
    let stem = path.file_stem()?.to_str()?;
    stem.rsplit_once('_')?.1.parse().ok()
}

#[derive(Debug, Clone, Default)]
pub struct ProblemOptions {
    pub encoding: Encoding,
    /// Overrides the manifest's frozen-orbital count.
    pub frozen: Option<usize>,
    pub active: Option<usize>,
    /// Number-penalty weight; defaults to twice the Pauli one-norm.
    pub penalty: Option<f64>,
    /// Skip the spin-projection penalty.
    pub no_spin_penalty: bool,
}

/// A fixture turned into a penalized qubit Hamiltonian.
#[derive(Debug, Clone)]
pub struct Problem {
    pub path: PathBuf,
    pub label: Option<f64>,
    pub integrals: IntegralSet,
    pub reference_energy: Option<f64>,
    pub penalty_weight: f64,
    /// Qubit Hamiltonian without the number penalty.
    pub bare: PauliSum,
    pub hamiltonian: PauliSum,
}

impl Problem {
    pub fn load(path: &Path, opts: &ProblemOptions) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let raw = parse_fcidump(&text)?;
        let entry = find_manifest_entry(path);
        let frozen = opts.frozen.or(entry.as_ref().and_then(|e| e.frozen)).unwrap_or(0);
        let active = opts.active.or(entry.as_ref().and_then(|e| e.active));
        let integrals = match (frozen, active) {
            (0, None) => raw,
            (f, a) => restrict_active_space(&raw, f, a.unwrap_or(raw.n_orbitals - f))?,
        };
        let label = entry.as_ref().map(|e| e.label).or_else(|| label_from_path(path));
        Self::from_integrals(path.to_path_buf(), label, integrals, entry.map(|e| e.reference_energy), opts)
    }

    pub fn from_integrals(
        path: PathBuf,
        label: Option<f64>,
        integrals: IntegralSet,
        reference_energy: Option<f64>,
        opts: &ProblemOptions,
    ) -> Result<Self, CliError> {
        let n_modes = integrals.n_spin_orbitals();
        let fermion = build_hamiltonian(&integrals);
        let bare = opts.encoding.transform(&fermion, n_modes)?;
        let penalty_weight = opts.penalty.unwrap_or_else(|| default_penalty_weight(&bare));
        let mut penalized = add_number_penalty(&fermion, n_modes, integrals.n_electrons, penalty_weight)?;
        if !opts.no_spin_penalty {
            penalized = add_spin_penalty(&penalized, n_modes, integrals.ms2, penalty_weight)?;
        }
        let hamiltonian = opts.encoding.transform(&penalized, n_modes)?;
        Ok(Self { path, label, integrals, reference_energy, penalty_weight, bare, hamiltonian })
    }

    pub fn n_qubits(&self) -> usize {
        self.hamiltonian.n_qubits()
    }
}

/// `H + w (2Ŝ_z − MS2)²`; the penalty is at least `w` off the target projection.
pub fn add_spin_penalty(h: &FermionOperator, n_modes: usize, ms2: i64, weight: f64) -> Result<FermionOperator, CliError> {
    let shifted = sz_operator(n_modes)?.scale(Complex64::new(2.0, 0.0)) - FermionOperator::identity(ms2 as f64);
    let penalty = (&shifted * &shifted).scale(Complex64::new(weight, 0.0));
    Ok((h.clone() + penalty).normal_ordered())
}

/// `2 Σ |α_i|` over the non-identity terms of the bare qubit Hamiltonian.
pub fn default_penalty_weight(bare: &PauliSum) -> f64 {
    2.0 * bare.l1_norm(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Sa,
    Exact,
    Remote,
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub reads: usize,
    pub sweeps: usize,
    pub seed: u64,
    pub endpoint: Option<String>,
    pub timeout: Duration,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        let p = AnnealParams::default();
        Self { kind: SamplerKind::Sa, reads: p.reads, sweeps: p.sweeps, seed: p.seed, endpoint: None, timeout: Duration::from_secs(60) }
    }
}

impl SamplerConfig {
    pub fn build(&self) -> Result<Box<dyn Sampler>, CliError> {
        Ok(match self.kind {
            SamplerKind::Sa => Box::new(SimulatedAnnealer::new(AnnealParams { reads: self.reads, sweeps: self.sweeps, seed: self.seed })),
            SamplerKind::Exact => Box::new(ExactSampler),
            SamplerKind::Remote => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .ok_or_else(|| CliError::Usage("remote sampler needs --endpoint or the endpoint environment variable".into()))?;
                Box::new(RemoteSampler { endpoint, reads: self.reads, timeout: self.timeout })
            }
        })
    }
}

/// A method and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    Exact,
    Xbk { r: usize, tol: f64 },
    Qcc { n_ent: usize, folds: FoldProfile, tol: f64, max_outer: usize, starts: usize },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Xbk { .. } => "xbk",
            Method::Qcc { .. } => "qcc",
        }
    }

    pub fn xbk_default() -> Self {
        let o = XbkOptions::default();
        Method::Xbk { r: 2, tol: o.tol }
    }

    pub fn qcc_default() -> Self {
        let o = QccOptions::default();
        Method::Qcc { n_ent: o.n_ent, folds: o.folds, tol: o.tol, max_outer: o.max_outer, starts: o.starts }
    }
}

/// Wall-clock split of one method run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Phases {
    pub transform: f64,
    pub quadratize: f64,
    pub sample: f64,
    pub optimize: f64,
}

impl Phases {
    pub fn total(&self) -> f64 {
        self.transform + self.quadratize + self.sample + self.optimize
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodOutcome {
    pub energy: f64,
    pub seconds: f64,
    /// `(pre, post)` quadratization variable counts.
    pub qubit_counts: Option<(usize, usize)>,
    pub phases: Phases,
    /// Method-specific result document.
    pub detail: serde_json::Value,
}

/// Run `method` on `problem`.
pub fn run_method(problem: &Problem, method: &Method, sampler: &SamplerConfig) -> Result<MethodOutcome, CliError> {
    let h = &problem.hamiltonian;
    let start = Instant::now();
    match method {
        Method::Exact => {
            let g = ground_state(h)?;
            let seconds = start.elapsed().as_secs_f64();
            Ok(MethodOutcome {
                energy: g.energy,
                seconds,
                qubit_counts: None,
                phases: Phases { optimize: seconds, ..Default::default() },
                detail: serde_json::json!({ "energy": g.energy, "state": complex_pairs(g.state.amplitudes()) }),
            })
        }
        Method::Xbk { r, tol } => {
            let s = sampler.build()?;
            let opts = XbkOptions { tol: *tol, ..Default::default() };
            let res = xbk_ground_state(h, *r, s.as_ref(), &opts)?;
            let seconds = start.elapsed().as_secs_f64();
            let (q, smp) = (res.quadratize_time.as_secs_f64(), res.sample_time.as_secs_f64());
            Ok(MethodOutcome {
                energy: res.energy,
                seconds,
                qubit_counts: Some((r * h.n_qubits(), res.quadratic_vars)),
                phases: Phases { transform: (seconds - q - smp).max(0.0), quadratize: q, sample: smp, optimize: 0.0 },
                detail: serde_json::json!({
                    "energy": res.energy,
                    "sector": res.sector,
                    "r": res.r,
                    "iterations": res.iterations,
                    "state": complex_pairs(res.state.amplitudes()),
                    "b_counts": res.b_counts,
                }),
            })
        }
        Method::Qcc { n_ent, folds, tol, max_outer, starts } => {
            let s = sampler.build()?;
            let opts = QccOptions {
                n_ent: *n_ent,
                folds: *folds,
                entanglers: None,
                tol: *tol,
                max_outer: *max_outer,
                starts: *starts,
                basis_reference: true,
                seed: sampler.seed,
            };
            let res = qcc_optimize(h, &opts, s.as_ref())?;
            let seconds = start.elapsed().as_secs_f64();
            let t = &res.timings;
            let signs: BTreeMap<String, i8> = res.discrete.iter().enumerate().map(|(i, &v)| (format!("z{i}"), v)).collect();
            Ok(MethodOutcome {
                energy: res.energy,
                seconds,
                qubit_counts: Some((res.discrete_vars, res.quadratic_vars)),
                phases: Phases {
                    transform: (t.qmf + t.screening).as_secs_f64(),
                    quadratize: t.quadratize.as_secs_f64(),
                    sample: t.sample.as_secs_f64(),
                    optimize: t.optimize.as_secs_f64(),
                },
                detail: serde_json::json!({
                    "energy": res.energy,
                    "qmf_energy": res.qmf_energy,
                    "theta": res.bloch.theta,
                    "phi": res.bloch.phi,
                    "entanglers": res.entanglers.words.iter().zip(&res.entanglers.amplitudes)
                        .map(|(w, t)| serde_json::json!({ "word": w.to_string(), "tau": t }))
                        .collect::<Vec<_>>(),
                    "signs": signs,
                    "outer_iterations": res.outer_iterations,
                    "pool_truncated": res.pool_truncated,
                }),
            })
        }
    }
}

fn complex_pairs(a: &[num_complex::Complex64]) -> Vec<[f64; 2]> {
    a.iter().map(|c| [c.re, c.im]).collect()
}

/// `(pre, post)` quadratization counts without running the optimizer.
pub fn variable_counts(problem: &Problem, method: &Method) -> Result<Option<(usize, usize)>, CliError> {
    let h = &problem.hamiltonian;
    Ok(match method {
        Method::Exact => None,
        Method::Xbk { r, .. } => Some(xbk_variable_counts(h, *r)?),
        Method::Qcc { n_ent, folds, .. } => Some(qcc_variable_counts(h, *n_ent, folds)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(rel: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
    }

    #[test]
    fn labels_from_names() {
        assert_eq!(label_from_path(Path::new("a/h3p_0.98.fcidump")), Some(0.98));
        assert_eq!(label_from_path(Path::new("h2o_109.0.fcidump")), Some(109.0));
        assert_eq!(label_from_path(Path::new("nolabel.fcidump")), None);
    }

    #[test]
    fn manifest_lookup() {
        let e = find_manifest_entry(&fixture("h2o_bond/h2o_0.96.fcidump")).unwrap();
        assert_eq!((e.frozen, e.active), (Some(3), Some(4)));
        assert!(find_manifest_entry(Path::new("/nonexistent.fcidump")).is_none());
    }

    #[test]
    fn h2_exact_matches_reference() {
        let p = Problem::load(&fixture("h2/h2_0.7414.fcidump"), &ProblemOptions::default()).unwrap();
        assert_eq!(p.n_qubits(), 4);
        let out = run_method(&p, &Method::Exact, &SamplerConfig::default()).unwrap();
        assert!((out.energy - p.reference_energy.unwrap()).abs() < 1e-8);
    }

    #[test]
    fn h2o_active_space() {
        let p = Problem::load(&fixture("h2o_bond/h2o_0.96.fcidump"), &ProblemOptions::default()).unwrap();
        assert_eq!(p.n_qubits(), 8);
        let out = run_method(&p, &Method::Exact, &SamplerConfig::default()).unwrap();
        assert!((out.energy - p.reference_energy.unwrap()).abs() < 1e-8);
    }
}
