use std::time::{Duration, Instant};

use super::{
    anneal, exact_solve, exact_solve_polynomial, quadratize, remote_sample, AnnealParams, IsingError, QuadraticModel,
    SampleSet, ZPolynomial, EXACT_VAR_CAP,
};

/// Anything that can minimize a 2-local spin model.
pub trait Sampler: Send + Sync {
    fn name(&self) -> &'static str;

    fn sample_quadratic(&self, q: &QuadraticModel) -> Result<SampleSet, IsingError>;

    /// Solve a higher-order polynomial without quadratizing, when supported.
    fn sample_polynomial_direct(&self, _p: &ZPolynomial) -> Option<Result<SampleSet, IsingError>> {
        None
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimulatedAnnealer {
    pub params: AnnealParams,
}

impl SimulatedAnnealer {
    pub fn new(params: AnnealParams) -> Self {
        Self { params }
    }
}

impl Sampler for SimulatedAnnealer {
    fn name(&self) -> &'static str {
        "sa"
    }

    fn sample_quadratic(&self, q: &QuadraticModel) -> Result<SampleSet, IsingError> {
        Ok(anneal(q, &self.params))
    }
}

/// Exhaustive enumeration; polynomials are solved directly.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSampler;

impl Sampler for ExactSampler {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn sample_quadratic(&self, q: &QuadraticModel) -> Result<SampleSet, IsingError> {
        exact_solve(q)
    }

    fn sample_polynomial_direct(&self, p: &ZPolynomial) -> Option<Result<SampleSet, IsingError>> {
        (p.n_vars() <= EXACT_VAR_CAP).then(|| exact_solve_polynomial(p))
    }
}

#[derive(Debug, Clone)]
pub struct RemoteSampler {
    pub endpoint: String,
    pub reads: usize,
    pub timeout: Duration,
}

impl Sampler for RemoteSampler {
    fn name(&self) -> &'static str {
        "remote"
    }

    fn sample_quadratic(&self, q: &QuadraticModel) -> Result<SampleSet, IsingError> {
        remote_sample(q, &self.endpoint, self.reads, self.timeout)
    }
}

/// Samples of a polynomial projected back onto its own variables.
#[derive(Debug, Clone)]
pub struct PolynomialSolution {
    pub samples: SampleSet,
    /// Variables of the 2-local model handed to the sampler (0 when solved directly).
    pub quadratic_vars: usize,
    pub quadratize_time: Duration,
    pub sample_time: Duration,
}

/// Minimize `p` with `sampler`, quadratizing first unless the sampler can
/// take the polynomial as is. Energies are re-evaluated on `p`.
pub fn minimize_polynomial(p: &ZPolynomial, sampler: &dyn Sampler) -> Result<PolynomialSolution, IsingError> {
    let t0 = Instant::now();
    if let Some(direct) = sampler.sample_polynomial_direct(p) {
        let samples = direct?;
        return Ok(PolynomialSolution {
            samples,
            quadratic_vars: 0,
            quadratize_time: Duration::ZERO,
            sample_time: t0.elapsed(),
        });
    }
    let q = quadratize(p);
    let quadratize_time = t0.elapsed();
    let t1 = Instant::now();
    let set = sampler.sample_quadratic(&q)?;
    let sample_time = t1.elapsed();
    let n = p.n_vars();
    let projected = set.samples().iter().map(|s| {
        let a = s.assignment[..n].to_vec();
        let e = p.evaluate_unchecked(&a);
        (a, e, s.multiplicity)
    });
    Ok(PolynomialSolution {
        samples: SampleSet::from_weighted(projected),
        quadratic_vars: q.n_vars,
        quadratize_time,
        sample_time,
    })
}
