//! Diagonal spin polynomials, quadratization, and samplers.
//!
//! Spins take values in {−1, +1}. Binary variables, where they appear, follow
//! `x = (1 − s)/2`, so `s = −1` is the "set" state.

mod anneal;
mod exact;
mod quadratize;
mod remote;
mod sampler;

pub use anneal::{anneal, AnnealParams, Schedule};
pub use exact::{exact_solve, exact_solve_polynomial, EXACT_VAR_CAP};
pub use quadratize::quadratize;
pub use remote::{remote_sample, RemoteRequest, RemoteResponse};
pub use sampler::{minimize_polynomial, ExactSampler, PolynomialSolution, RemoteSampler, Sampler, SimulatedAnnealer};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ZERO_TOL;

/// Tolerance for agreement between a stored and a recomputed energy.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum IsingError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0} variables exceed the exact-enumeration cap of {EXACT_VAR_CAP}")]
    Capacity(usize),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("integrity error: {0}")]
    Integrity(String),
}

/// `Σ_S c_S Π_{i∈S} s_i` with each `S` a sorted, duplicate-free index set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZPolynomial {
    n_vars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl ZPolynomial {
    pub fn new(n_vars: usize) -> Self {
        Self { n_vars, terms: BTreeMap::new() }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Add `coeff · Π s_i`; repeated indices cancel in pairs.
    pub fn add_term(&mut self, vars: &[u32], coeff: f64) {
        let mut v = vars.to_vec();
        v.sort_unstable();
        let mut folded: Vec<u32> = Vec::with_capacity(v.len());
        for i in v {
            if folded.last() == Some(&i) {
                folded.pop();
            } else {
                folded.push(i);
            }
        }
        self.add_canonical(folded, coeff);
    }

    /// Add a term whose index set is already sorted and duplicate-free.
    pub(crate) fn add_canonical(&mut self, vars: Vec<u32>, coeff: f64) {
        if let Some(&last) = vars.last() {
            assert!((last as usize) < self.n_vars, "variable {last} out of range");
        }
        *self.terms.entry(vars).or_insert(0.0) += coeff;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &f64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, vars: &[u32]) -> f64 {
        self.terms.get(vars).copied().unwrap_or(0.0)
    }

    pub fn constant(&self) -> f64 {
        self.coefficient(&[])
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn simplify(mut self) -> Self {
        self.terms.retain(|_, c| c.abs() >= ZERO_TOL);
        self
    }

    pub fn scale(&self, f: f64) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|c| *c *= f);
        out
    }

    /// `self + f · other`
    pub fn add_scaled(&mut self, other: &ZPolynomial, f: f64) {
        assert_eq!(self.n_vars, other.n_vars);
        for (k, c) in &other.terms {
            *self.terms.entry(k.clone()).or_insert(0.0) += f * c;
        }
    }

    pub fn evaluate(&self, assignment: &[i8]) -> Result<f64, IsingError> {
        check_len(self.n_vars, assignment)?;
        Ok(self.evaluate_unchecked(assignment))
    }

    pub(crate) fn evaluate_unchecked(&self, assignment: &[i8]) -> f64 {
        self.terms
            .iter()
            .map(|(vars, c)| {
                let neg = vars.iter().filter(|&&i| assignment[i as usize] < 0).count();
                if neg % 2 == 0 {
                    *c
                } else {
                    -c
                }
            })
            .sum()
    }

    /// Same polynomial over a larger variable range.
    pub fn with_n_vars(mut self, n_vars: usize) -> Self {
        assert!(n_vars >= self.n_vars);
        self.n_vars = n_vars;
        self
    }
}

fn check_len(n: usize, a: &[i8]) -> Result<(), IsingError> {
    if a.len() != n {
        return Err(IsingError::Domain(format!("assignment has length {}, expected {n}", a.len())));
    }
    if a.iter().any(|&s| s != 1 && s != -1) {
        return Err(IsingError::Domain("assignment entries must be ±1".into()));
    }
    Ok(())
}

/// `offset + Σ h_i s_i + Σ_{i<j} J_ij s_i s_j`.
///
/// Variables `0..n_original` are the problem variables; anything above is an
/// auxiliary introduced by [`quadratize`], listed in `aux_map` as the binary
/// product `x_w = x_a x_b` it stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub n_vars: usize,
    pub n_original: usize,
    pub linear: Vec<f64>,
    pub quadratic: BTreeMap<(u32, u32), f64>,
    pub offset: f64,
    pub aux_map: BTreeMap<u32, (u32, u32)>,
}

impl QuadraticModel {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            n_original: n_vars,
            linear: vec![0.0; n_vars],
            quadratic: BTreeMap::new(),
            offset: 0.0,
            aux_map: BTreeMap::new(),
        }
    }

    pub fn n_aux(&self) -> usize {
        self.n_vars - self.n_original
    }

    pub fn add_linear(&mut self, i: u32, h: f64) {
        self.linear[i as usize] += h;
    }

    pub fn add_quadratic(&mut self, i: u32, j: u32, coupling: f64) {
        assert_ne!(i, j, "self-coupling is not 2-local");
        assert!((i.max(j) as usize) < self.n_vars);
        *self.quadratic.entry((i.min(j), i.max(j))).or_insert(0.0) += coupling;
    }

    pub fn evaluate(&self, assignment: &[i8]) -> Result<f64, IsingError> {
        check_len(self.n_vars, assignment)?;
        Ok(self.evaluate_unchecked(assignment))
    }

    pub(crate) fn evaluate_unchecked(&self, s: &[i8]) -> f64 {
        let lin: f64 = self.linear.iter().zip(s).map(|(h, &si)| h * si as f64).sum();
        let quad: f64 = self
            .quadratic
            .iter()
            .map(|(&(i, j), c)| c * (s[i as usize] * s[j as usize]) as f64)
            .sum();
        self.offset + lin + quad
    }

    /// Drop zero couplings.
    pub fn simplify(mut self) -> Self {
        self.quadratic.retain(|_, c| c.abs() >= ZERO_TOL);
        self.linear.iter_mut().filter(|h| h.abs() < ZERO_TOL).for_each(|h| *h = 0.0);
        self
    }

    pub fn to_polynomial(&self) -> ZPolynomial {
        let mut p = ZPolynomial::new(self.n_vars);
        if self.offset != 0.0 {
            p.add_canonical(Vec::new(), self.offset);
        }
        for (i, h) in self.linear.iter().enumerate() {
            if *h != 0.0 {
                p.add_canonical(vec![i as u32], *h);
            }
        }
        for (&(i, j), c) in &self.quadratic {
            p.add_canonical(vec![i, j], *c);
        }
        p
    }

    /// 2-local polynomial as a model, no auxiliaries.
    pub fn from_polynomial(p: &ZPolynomial) -> Result<Self, IsingError> {
        if p.degree() > 2 {
            return Err(IsingError::Domain(format!("polynomial has degree {} > 2", p.degree())));
        }
        let mut q = Self::new(p.n_vars());
        for (vars, &c) in p.terms() {
            match vars.as_slice() {
                [] => q.offset += c,
                [i] => q.add_linear(*i, c),
                [i, j] => q.add_quadratic(*i, *j, c),
                _ => unreachable!(),
            }
        }
        Ok(q)
    }

    /// Whether every auxiliary equals the binary product it encodes.
    pub fn aux_consistent(&self, s: &[i8]) -> bool {
        self.aux_map.iter().all(|(&w, &(a, b))| {
            let x = |i: u32| (s[i as usize] < 0) as u8;
            x(w) == x(a) * x(b)
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let wire = ModelWire::from(self);
        serde_json::to_value(wire).expect("model serialization cannot fail")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, IsingError> {
        let wire: ModelWire = serde_json::from_value(v.clone()).map_err(|e| IsingError::Protocol(e.to_string()))?;
        wire.try_into()
    }
}

/// JSON form: `{"linear": {"i": h}, "quadratic": {"i,j": J}, "offset", "n_vars", "aux_map": {"w": [a, b]}}`.
#[derive(Serialize, Deserialize)]
struct ModelWire {
    linear: BTreeMap<String, f64>,
    quadratic: BTreeMap<String, f64>,
    offset: f64,
    #[serde(default)]
    n_vars: Option<usize>,
    #[serde(default)]
    n_original: Option<usize>,
    #[serde(default)]
    aux_map: BTreeMap<String, (u32, u32)>,
}

impl From<&QuadraticModel> for ModelWire {
    fn from(q: &QuadraticModel) -> Self {
        Self {
            linear: q.linear.iter().enumerate().map(|(i, h)| (i.to_string(), *h)).collect(),
            quadratic: q.quadratic.iter().map(|(&(i, j), c)| (format!("{i},{j}"), *c)).collect(),
            offset: q.offset,
            n_vars: Some(q.n_vars),
            n_original: Some(q.n_original),
            aux_map: q.aux_map.iter().map(|(w, p)| (w.to_string(), *p)).collect(),
        }
    }
}

impl TryFrom<ModelWire> for QuadraticModel {
    type Error = IsingError;

    fn try_from(w: ModelWire) -> Result<Self, IsingError> {
        let bad = |s: &str| IsingError::Protocol(format!("bad variable key `{s}`"));
        let linear: Vec<(u32, f64)> = w
            .linear
            .iter()
            .map(|(k, h)| k.trim().parse().map(|i| (i, *h)).map_err(|_| bad(k)))
            .collect::<Result<_, _>>()?;
        let quadratic: Vec<(u32, u32, f64)> = w
            .quadratic
            .iter()
            .map(|(k, c)| {
                let (a, b) = k.split_once(',').ok_or_else(|| bad(k))?;
                Ok((a.trim().parse().map_err(|_| bad(k))?, b.trim().parse().map_err(|_| bad(k))?, *c))
            })
            .collect::<Result<_, IsingError>>()?;
        let aux: Vec<(u32, (u32, u32))> = w
            .aux_map
            .iter()
            .map(|(k, p)| k.trim().parse().map(|i| (i, *p)).map_err(|_| bad(k)))
            .collect::<Result<_, _>>()?;
        let max_idx = linear
            .iter()
            .map(|(i, _)| *i)
            .chain(quadratic.iter().flat_map(|(a, b, _)| [*a, *b]))
            .chain(aux.iter().map(|(i, _)| *i))
            .max()
            .map_or(0, |m| m as usize + 1);
        let n_vars = w.n_vars.unwrap_or(max_idx);
        if max_idx > n_vars {
            return Err(IsingError::Protocol(format!("variable index {} out of range", max_idx - 1)));
        }
        let mut q = QuadraticModel::new(n_vars);
        q.offset = w.offset;
        for (i, h) in linear {
            q.add_linear(i, h);
        }
        for (a, b, c) in quadratic {
            if a == b {
                return Err(IsingError::Protocol(format!("self-coupling on variable {a}")));
            }
            q.add_quadratic(a, b, c);
        }
        q.aux_map = aux.into_iter().collect();
        q.n_original = w.n_original.unwrap_or(n_vars - q.aux_map.len());
        Ok(q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub assignment: Vec<i8>,
    pub energy: f64,
    pub multiplicity: usize,
}

/// Distinct samples in ascending energy order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    samples: Vec<Sample>,
}

impl SampleSet {
    /// Merge duplicate assignments and sort by energy, then assignment.
    pub fn from_raw(raw: impl IntoIterator<Item = (Vec<i8>, f64)>) -> Self {
        Self::from_weighted(raw.into_iter().map(|(a, e)| (a, e, 1)))
    }

    /// As [`SampleSet::from_raw`] with explicit multiplicities.
    pub fn from_weighted(raw: impl IntoIterator<Item = (Vec<i8>, f64, usize)>) -> Self {
        let mut merged: BTreeMap<Vec<i8>, (f64, usize)> = BTreeMap::new();
        for (a, e, k) in raw {
            merged.entry(a).and_modify(|(_, m)| *m += k).or_insert((e, k));
        }
        let mut samples: Vec<Sample> = merged
            .into_iter()
            .map(|(assignment, (energy, multiplicity))| Sample { assignment, energy, multiplicity })
            .collect();
        samples.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.assignment.cmp(&b.assignment)));
        Self { samples }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn best(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_reads(&self) -> usize {
        self.samples.iter().map(|s| s.multiplicity).sum()
    }

    /// Check every stored energy against `energy_of`.
    pub fn verify(&self, energy_of: impl Fn(&[i8]) -> f64, tol: f64) -> Result<(), IsingError> {
        for s in &self.samples {
            let e = energy_of(&s.assignment);
            if (e - s.energy).abs() > tol {
                return Err(IsingError::Integrity(format!(
                    "stored energy {} differs from recomputed {} by {:e}",
                    s.energy,
                    e,
                    (e - s.energy).abs()
                )));
            }
        }
        Ok(())
    }
}

/// Either kind of diagonal model, for [`evaluate`].
pub enum Model<'a> {
    Polynomial(&'a ZPolynomial),
    Quadratic(&'a QuadraticModel),
}

pub fn evaluate(model: Model<'_>, assignment: &[i8]) -> Result<f64, IsingError> {
    match model {
        Model::Polynomial(p) => p.evaluate(assignment),
        Model::Quadratic(q) => q.evaluate(assignment),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_term_value() {
        let mut p = ZPolynomial::new(3);
        p.add_term(&[0, 1, 2], 1.0);
        assert_eq!(evaluate(Model::Polynomial(&p), &[-1, -1, -1]).unwrap(), -1.0);
        assert!(p.evaluate(&[1, 1]).is_err());
    }

    #[test]
    fn empty_model_is_offset() {
        let mut q = QuadraticModel::new(2);
        q.offset = 3.5;
        assert_eq!(q.evaluate(&[1, -1]).unwrap(), 3.5);
        assert_eq!(ZPolynomial::new(0).evaluate(&[]).unwrap(), 0.0);
    }

    #[test]
    fn repeated_indices_fold() {
        let mut p = ZPolynomial::new(3);
        p.add_term(&[2, 0, 2, 1, 0], 0.5);
        assert_eq!(p.coefficient(&[1]), 0.5);
        p.add_term(&[1, 1], 2.0);
        assert_eq!(p.constant(), 2.0);
    }

    #[test]
    fn json_roundtrip() {
        let mut q = QuadraticModel::new(4);
        q.add_linear(0, 0.25);
        q.add_quadratic(3, 1, -1.5);
        q.offset = 0.1;
        q.n_original = 3;
        q.aux_map.insert(3, (0, 1));
        let v = q.to_json();
        assert_eq!(v["quadratic"]["1,3"], -1.5);
        assert_eq!(QuadraticModel::from_json(&v).unwrap(), q);
    }

    #[test]
    fn sample_set_merges_and_sorts() {
        let s = SampleSet::from_raw(vec![(vec![1, 1], 2.0), (vec![-1, 1], -1.0), (vec![1, 1], 2.0)]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.best().unwrap().energy, -1.0);
        assert_eq!(s.samples()[1].multiplicity, 2);
    }
}
