//! Independent replay of a recorded radial trace.

use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{Disorder, Point};
use crate::mixture::energy_benchmark;
use crate::optimizer::PathTrace;
use crate::Mixture;

const NORM_TOL: f64 = 1e-9;
const ORTHO_TOL: f64 = 1e-10;
const UNIT_TOL: f64 = 1e-12;
const VALUE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub step: usize,
    pub check: &'static str,
    pub detail: String,
}

/// Outcome of a replay. A partial trace can pass; `complete` says whether
/// it reached the sphere.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub complete: bool,
    pub steps_checked: usize,
    pub violations: Vec<Violation>,
}

impl Verdict {
    /// Steps with at least one violation, ascending.
    pub fn violated_steps(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.violations.iter().map(|v| v.step).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Reads a JSON trace and replays it against `d`.
pub fn verify_trace(trace_file: &Path, d: &Disorder) -> Result<Verdict> {
    let text = std::fs::read_to_string(trace_file).map_err(|e| Error::io(trace_file, e))?;
    verify_path_trace(&PathTrace::from_json(&text)?, d)
}

/// Recomputes gradient and Hessian at every recorded point and re-checks
/// the direction conditions, the recorded values, the radial norms,
/// orthogonality and the step increments.
pub fn verify_path_trace(trace: &PathTrace, d: &Disorder) -> Result<Verdict> {
    let mixture: Mixture = trace.mixture.parse()?;
    if mixture != *d.mixture() || trace.n != d.n() || trace.seed != d.seed() {
        return Err(Error::DisorderMismatch(format!(
            "trace was recorded for mixture={} n={} seed={}, disorder is mixture={} n={} seed={}",
            trace.mixture,
            trace.n,
            trace.seed,
            d.mixture(),
            d.n(),
            d.seed()
        )));
    }
    let n = trace.n;
    let nf = n as f64;
    let k = trace.params.k;
    let eps = trace.params.epsilon;
    let h = (nf / k as f64).sqrt();
    let mut out = Vec::new();
    let mut flag = |step: usize, check: &'static str, detail: String| {
        out.push(Violation { step, check, detail });
    };

    for (i, s) in trace.steps.iter().enumerate() {
        let j = s.step;
        if j != i || s.point.len() != n {
            flag(j, "layout", format!("entry {i} has step {j} and {} coordinates", s.point.len()));
            continue;
        }
        let q = j as f64 / k as f64;
        if s.q != q {
            flag(j, "q", format!("recorded {} expected {q}", s.q));
        }
        let sigma = DVector::from_column_slice(&s.point);
        let norm_sq = sigma.norm_squared();
        let want = nf * q;
        let norm_ok = if j == 0 {
            norm_sq == 0.0
        } else {
            (norm_sq / want - 1.0).abs() <= NORM_TOL
        };
        if !norm_ok {
            flag(j, "norm", format!("|sigma|^2 = {norm_sq}, expected {want}"));
        }

        let point = Point::from(sigma.clone());
        let energy = d.energy(&point)? / nf;
        if !close(energy, s.energy_per_spin, NORM_TOL) {
            flag(j, "energy", format!("recorded {} recomputed {energy}", s.energy_per_spin));
        }
        let bench = -energy_benchmark(d.mixture(), q)?;
        if !close(bench, s.benchmark, NORM_TOL) || !close(s.gap, s.energy_per_spin - s.benchmark, NORM_TOL) {
            flag(j, "benchmark", format!("benchmark {} gap {} expected {bench}", s.benchmark, s.gap));
        }

        let Some(v) = &s.direction else {
            // a partial trace ends on the point where no direction was found
            if i + 1 < trace.steps.len() {
                flag(j, "direction", "missing direction before the last recorded point".into());
            }
            continue;
        };
        let v = DVector::from_column_slice(v);
        if v.len() != n || (v.norm() - 1.0).abs() > UNIT_TOL {
            flag(j, "unit", format!("|v| = {}", v.norm()));
        }
        if v.len() == n && v.dot(&sigma).abs() > ORTHO_TOL {
            flag(j, "orthogonality", format!("v . sigma = {:e}", v.dot(&sigma)));
        }
        if let Some(next) = trace.steps.get(i + 1) {
            if next.point.len() == n && v.len() == n {
                let gap = (DVector::from_column_slice(&next.point) - (&sigma + &v * h)).norm();
                if gap > NORM_TOL * nf.sqrt() {
                    flag(j, "increment", format!("|sigma_next - sigma - h v| = {gap:e}"));
                }
            }
        }
        if j == 0 {
            if s.rayleigh.is_some() || s.grad_dot.is_some() {
                flag(0, "origin", "conditions recorded at the origin".into());
            }
            continue;
        }
        let (Some(r), Some(g)) = (s.rayleigh, s.grad_dot) else {
            flag(j, "conditions", "rayleigh or grad_dot missing".into());
            continue;
        };
        if v.len() != n {
            continue;
        }
        let target = -2.0 * d.mixture().eval(q, 2)?.sqrt() + eps;
        let grad = d.projected_gradient(&point)?;
        let hess = d.projected_hessian(&point)?;
        let r_now = (v.transpose() * &hess * &v)[(0, 0)];
        let g_now = v.dot(&grad);
        if !close(r, r_now, VALUE_TOL) {
            flag(j, "rayleigh", format!("recorded {r} recomputed {r_now}"));
        }
        if !close(g, g_now, VALUE_TOL) {
            flag(j, "grad_dot", format!("recorded {g} recomputed {g_now}"));
        }
        if r > target || r_now > target + VALUE_TOL * (1.0 + target.abs()) {
            flag(j, "curvature", format!("rayleigh {r} (recomputed {r_now}) above target {target}"));
        }
        if g > 0.0 || g_now > VALUE_TOL * (1.0 + grad.norm()) {
            flag(j, "descent", format!("grad_dot {g} (recomputed {g_now}) is positive"));
        }
    }
    Ok(Verdict {
        passed: out.is_empty(),
        complete: trace.is_complete(),
        steps_checked: trace.steps.len(),
        violations: out,
    })
}
