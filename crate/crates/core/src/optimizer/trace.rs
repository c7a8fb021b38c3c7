use std::io::Write;

use serde::{Deserialize, Serialize};

use super::AlgorithmParams;
use crate::error::{Error, Result};
use crate::hamiltonian::Disorder;

pub const TRACE_CSV_HEADER: [&str; 8] = [
    "step",
    "q",
    "energy_per_spin",
    "benchmark_eh",
    "gap",
    "rayleigh",
    "grad_dot",
    "used_fallback",
];

/// One point `sigma_{j/k}` of a radial path and the direction taken from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub step: usize,
    /// `j / k`
    pub q: f64,
    pub point: Vec<f64>,
    /// `v_j`; absent at the endpoint.
    pub direction: Option<Vec<f64>>,
    pub energy_per_spin: f64,
    /// `-E_H(q)`
    pub benchmark: f64,
    /// `energy_per_spin + E_H(q)`
    pub gap: f64,
    /// `v_j^T Hess v_j`; absent at the origin and the endpoint.
    pub rayleigh: Option<f64>,
    pub grad_dot: Option<f64>,
    pub used_fallback: bool,
    pub power_iterations: usize,
    /// Max `|d^3/dt^3 H(sigma_j + t v_j)|` over the segment to the next point.
    pub third_derivative: Option<f64>,
}

/// Full record of a radial run; the JSON form is what replay verification reads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathTrace {
    pub mixture: String,
    pub n: usize,
    pub seed: u64,
    pub params: AlgorithmParams,
    pub steps: Vec<PathStep>,
}

impl PathTrace {
    pub(crate) fn new(d: &Disorder, params: AlgorithmParams) -> Self {
        PathTrace {
            mixture: d.mixture().to_string(),
            n: d.n(),
            seed: d.seed(),
            steps: Vec::with_capacity(params.k + 1),
            params,
        }
    }

    /// Whether the run reached the sphere.
    pub fn is_complete(&self) -> bool {
        self.steps.len() == self.params.k + 1
    }

    pub fn final_energy(&self) -> f64 {
        self.steps.last().map(|s| s.energy_per_spin).unwrap_or(0.0)
    }

    /// `max_j (energy_per_spin + E_H(j/k))`.
    pub fn sup_gap(&self) -> f64 {
        self.steps.iter().map(|s| s.gap).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn fallback_count(&self) -> usize {
        self.steps.iter().filter(|s| s.used_fallback).count()
    }

    /// Run constant `C_3 = sqrt(N) max_j third_derivative_j`.
    pub fn third_derivative_constant(&self) -> f64 {
        let max = self
            .steps
            .iter()
            .filter_map(|s| s.third_derivative)
            .fold(0.0, f64::max);
        max * (self.n as f64).sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("trace JSON: {e}")))
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the per-step table with header
/// `step,q,energy_per_spin,benchmark_eh,gap,rayleigh,grad_dot,used_fallback`.
/// `benchmark_eh` holds `-E_H(q)`; cells without a value are left empty.
pub fn write_trace_csv<W: Write>(trace: &PathTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(TRACE_CSV_HEADER).map_err(err)?;
    for s in &trace.steps {
        w.write_record([
            s.step.to_string(),
            s.q.to_string(),
            s.energy_per_spin.to_string(),
            s.benchmark.to_string(),
            s.gap.to_string(),
            opt(s.rayleigh),
            opt(s.grad_dot),
            if s.used_fallback { "1" } else { "0" }.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

/// One iterate of the on-sphere descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereStep {
    pub step: usize,
    pub point: Vec<f64>,
    pub energy_per_spin: f64,
    pub rayleigh: Option<f64>,
    pub grad_dot: Option<f64>,
    pub used_fallback: bool,
    /// Max `|d^3/dt^3 H(sigma_i + t v_i)|` over `t in [0, sqrt(N tau)]`.
    pub third_derivative: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereTrace {
    pub mixture: String,
    pub n: usize,
    pub seed: u64,
    pub p: u32,
    pub tau: f64,
    pub params: AlgorithmParams,
    pub steps: Vec<SphereStep>,
}

impl SphereTrace {
    pub fn final_energy(&self) -> f64 {
        self.steps.last().map(|s| s.energy_per_spin).unwrap_or(0.0)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.energy_per_spin).collect()
    }

    /// Per-step cushion per spin: Rayleigh slack `epsilon tau / 2` plus the
    /// largest third-order Taylor remainder `(N tau)^{3/2} D3 / (6 N)`.
    pub fn cushion(&self) -> f64 {
        let n = self.n as f64;
        let len = (n * self.tau).sqrt();
        let d3 = self
            .steps
            .iter()
            .filter_map(|s| s.third_derivative)
            .fold(0.0, f64::max);
        0.5 * self.params.epsilon * self.tau + len.powi(3) * d3 / (6.0 * n)
    }

    pub fn fallback_count(&self) -> usize {
        self.steps.iter().filter(|s| s.used_fallback).count()
    }
}
