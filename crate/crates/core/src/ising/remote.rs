use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{IsingError, QuadraticModel, SampleSet};

/// Tolerance on the energies a remote service reports.
const REMOTE_ENERGY_TOL: f64 = 1e-6;

/// Body POSTed to a sampling service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub linear: BTreeMap<String, f64>,
    pub quadratic: BTreeMap<String, f64>,
    pub offset: f64,
    pub num_reads: usize,
}

impl RemoteRequest {
    pub fn new(q: &QuadraticModel, num_reads: usize) -> Self {
        Self {
            linear: q.linear.iter().enumerate().map(|(i, h)| (i.to_string(), *h)).collect(),
            quadratic: q.quadratic.iter().map(|(&(i, j), c)| (format!("{i},{j}"), *c)).collect(),
            offset: q.offset,
            num_reads,
        }
    }

    /// Rebuild the model a request describes, e.g. on the serving side.
    pub fn to_model(&self) -> Result<QuadraticModel, IsingError> {
        let v = serde_json::json!({
            "linear": self.linear,
            "quadratic": self.quadratic,
            "offset": self.offset,
        });
        QuadraticModel::from_json(&v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteResponse {
    pub samples: Vec<Vec<i8>>,
    pub energies: Vec<f64>,
}

impl RemoteResponse {
    pub fn from_sample_set(set: &SampleSet) -> Self {
        let mut samples = Vec::new();
        let mut energies = Vec::new();
        for s in set.samples() {
            for _ in 0..s.multiplicity {
                samples.push(s.assignment.clone());
                energies.push(s.energy);
            }
        }
        Self { samples, energies }
    }
}

/// Sample `q` on a remote service and re-validate what comes back.
pub fn remote_sample(
    q: &QuadraticModel,
    endpoint: &str,
    reads: usize,
    timeout: Duration,
) -> Result<SampleSet, IsingError> {
    let agent = ureq::AgentBuilder::new().timeout(timeout).build();
    let body = serde_json::to_value(RemoteRequest::new(q, reads)).expect("request serializes");
    let resp = match agent.post(endpoint).send_json(body) {
        Ok(r) => r,
        Err(ureq::Error::Status(code, r)) => {
            return Err(IsingError::Protocol(format!(
                "service answered HTTP {code}: {}",
                r.into_string().unwrap_or_default()
            )))
        }
        Err(e) => return Err(IsingError::Transport(e.to_string())),
    };
    let text = resp.into_string().map_err(|e| IsingError::Transport(e.to_string()))?;
    let parsed: RemoteResponse =
        serde_json::from_str(&text).map_err(|e| IsingError::Protocol(format!("malformed response: {e}")))?;
    validate(q, parsed)
}

fn validate(q: &QuadraticModel, r: RemoteResponse) -> Result<SampleSet, IsingError> {
    if r.samples.len() != r.energies.len() {
        return Err(IsingError::Protocol(format!(
            "{} samples but {} energies",
            r.samples.len(),
            r.energies.len()
        )));
    }
    if r.samples.is_empty() {
        return Err(IsingError::Protocol("response contains no samples".into()));
    }
    let mut raw = Vec::with_capacity(r.samples.len());
    for (a, e) in r.samples.into_iter().zip(r.energies) {
        let local = q.evaluate(&a).map_err(|e| IsingError::Protocol(format!("bad sample: {e}")))?;
        if (local - e).abs() > REMOTE_ENERGY_TOL {
            return Err(IsingError::Integrity(format!("reported energy {e} but model gives {local}")));
        }
        raw.push((a, local));
    }
    Ok(SampleSet::from_raw(raw))
}
