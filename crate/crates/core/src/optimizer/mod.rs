//! Greedy Hessian descent.
//!
//! The radial path starts at the origin and takes `k` orthogonal steps of
//! length `sqrt(N/k)`, each along a unit direction `v` orthogonal to the
//! current point with `v . grad <= 0` and
//! `v^T Hess v <= -2 sqrt(nu''(q)) + epsilon`, where `Hess` is the projected
//! Hessian. Since every increment is orthogonal, `|sigma_{j/k}|^2 = N j/k`.
//! For pure models the same step can be taken on the sphere and
//! renormalized; see [`run_pure_sphere`].

mod direction;
mod trace;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::hamiltonian::{poly_derivative, Disorder, Order, Point};
use crate::mixture::energy_benchmark;

pub use direction::{find_direction, Direction};
pub use trace::{write_trace_csv, PathStep, PathTrace, SphereStep, SphereTrace, TRACE_CSV_HEADER};

/// Knobs of the descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmParams {
    /// Number of radial steps.
    pub k: usize,
    /// Slack in the Rayleigh condition.
    pub epsilon: f64,
    /// Shift `L` of the power iteration on `Hess - L I`. `None` uses
    /// `3 sqrt(nu''(q)) + 1` at each step.
    pub power_shift: Option<f64>,
    pub power_iters_max: usize,
    /// Fall back to a dense eigensolve when power iteration stalls.
    pub rayleigh_check: bool,
    /// Seed of the power-iteration start vectors (and of `v_0` / `sigma_0`
    /// when those are randomized); independent of the disorder seed.
    pub rng_seed: u64,
    /// Draw `v_0` uniformly instead of using `e_1`.
    pub random_v0: bool,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        AlgorithmParams {
            k: 50,
            epsilon: 0.1,
            power_shift: None,
            power_iters_max: 500,
            rayleigh_check: true,
            rng_seed: 0,
            random_v0: false,
        }
    }
}

impl AlgorithmParams {
    pub fn new(k: usize, epsilon: f64) -> Self {
        AlgorithmParams {
            k,
            epsilon,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Argument(format!(
                "epsilon must be > 0 (got {})",
                self.epsilon
            )));
        }
        if self.power_iters_max < 1 {
            return Err(Error::Argument("power_iters_max must be ≥ 1".into()));
        }
        if let Some(l) = self.power_shift {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Argument(format!("power shift must be > 0 (got {l})")));
            }
        }
        Ok(())
    }
}

/// A run that stopped early, with everything recorded before the failure.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct PathError {
    #[source]
    pub error: Error,
    pub partial: Option<Box<PathTrace>>,
}

impl From<Error> for PathError {
    fn from(error: Error) -> Self {
        PathError {
            error,
            partial: None,
        }
    }
}

impl From<PathError> for Error {
    fn from(e: PathError) -> Self {
        e.error
    }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut *rng));
        let norm = v.norm();
        if norm > 0.0 {
            return v / norm;
        }
    }
}

/// `max_{s in [0,1]} |f'''(s)|` for the line polynomial `f`.
fn max_third_derivative(coeffs: &[f64]) -> f64 {
    if coeffs.len() < 4 {
        return 0.0;
    }
    // f''' has degree deg - 3; a fine grid is exact for deg <= 4 and tight beyond
    let grid = if coeffs.len() <= 5 { 1 } else { 64 };
    (0..=grid)
        .map(|i| poly_derivative(coeffs, 3, i as f64 / grid as f64).abs())
        .fold(0.0, f64::max)
}

/// Third directional derivative bound along the segment `x -> x + len v`,
/// per unit direction: `max |d^3/dt^3 H(x + t v)|` for `t in [0, len]`.
fn segment_third_derivative(d: &Disorder, x: &Point, v: &DVector<f64>, len: f64) -> Result<f64> {
    let coeffs = d.line_polynomial(x, &(v * len))?;
    Ok(max_third_derivative(&coeffs) / len.powi(3))
}

/// Runs the radial origin-to-sphere descent.
pub fn run_radial_path(d: &Disorder, params: &AlgorithmParams) -> Result<PathTrace, PathError> {
    params.validate()?;
    if params.k < 2 {
        return Err(Error::Argument(format!("k must be ≥ 2 (got {})", params.k)).into());
    }
    let n = d.n();
    let k = params.k;
    let mixture = d.mixture();
    let nf = n as f64;
    let h = (nf / k as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);

    let mut trace = PathTrace::new(d, params.clone());
    let v0 = if params.random_v0 {
        random_unit(n, &mut rng)
    } else {
        DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 })
    };
    let origin = Point::zeros(n);
    trace.steps.push(PathStep {
        step: 0,
        q: 0.0,
        point: vec![0.0; n],
        direction: Some(v0.as_slice().to_vec()),
        energy_per_spin: 0.0,
        benchmark: 0.0,
        gap: 0.0,
        rayleigh: None,
        grad_dot: None,
        used_fallback: false,
        power_iterations: 0,
        third_derivative: Some(segment_third_derivative(d, &origin, &v0, h)?),
    });
    let mut sigma = &v0 * h;

    for j in 1..=k {
        let q_grid = j as f64 / k as f64;
        let point = Point::from(sigma.clone());
        let benchmark = -energy_benchmark(mixture, q_grid)?;
        let order = if j < k { Order::Hessian } else { Order::Energy };
        let ev = d.evaluate(&point, order)?;
        let energy_per_spin = ev.energy / nf;
        let mut record = PathStep {
            step: j,
            q: q_grid,
            point: sigma.as_slice().to_vec(),
            direction: None,
            energy_per_spin,
            benchmark,
            gap: energy_per_spin - benchmark,
            rayleigh: None,
            grad_dot: None,
            used_fallback: false,
            power_iterations: 0,
            third_derivative: None,
        };
        if j == k {
            trace.steps.push(record);
            break;
        }
        let q = point.q().min(1.0);
        let grad = crate::hamiltonian::project_gradient(&ev.gradient.expect("gradient"), &point)?;
        let hess = crate::hamiltonian::project_hessian(&ev.hessian.expect("hessian"), &point)?;
        let found = match find_direction(&hess, &grad, &point, params, mixture.nu2(q), &mut rng) {
            Ok(found) => found,
            Err(Error::SpectralFailure { achieved, target, .. }) => {
                trace.steps.push(record);
                return Err(PathError {
                    error: Error::SpectralFailure {
                        step: j,
                        achieved,
                        target,
                    },
                    partial: Some(Box::new(trace)),
                });
            }
            Err(e) => return Err(e.into()),
        };
        record.third_derivative = Some(segment_third_derivative(d, &point, &found.v, h)?);
        record.rayleigh = Some(found.rayleigh);
        record.grad_dot = Some(found.grad_dot);
        record.used_fallback = found.used_fallback;
        record.power_iterations = found.iterations;
        record.direction = Some(found.v.as_slice().to_vec());
        trace.steps.push(record);
        sigma += &found.v * h;
    }
    Ok(trace)
}

/// Energy per spin at `q` on the continuous path
/// `sigma_{j/k + t} = sigma_{j/k} + sqrt(N t) v_j`.
pub fn interpolate_energy(trace: &PathTrace, d: &Disorder, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Argument(format!("q must lie in [0, 1] (got {q})")));
    }
    let k = trace.params.k as f64;
    let n = trace.n as f64;
    let j = ((q * k + 1e-9).floor() as usize).min(trace.params.k);
    let t = (q - j as f64 / k).max(0.0);
    let step = trace.steps.get(j).ok_or_else(|| Error::Domain {
        what: "q",
        detail: format!("trace covers steps 0..{}, q = {q} needs step {j}", trace.steps.len()),
    })?;
    let mut x = DVector::from_column_slice(&step.point);
    if t > 0.0 {
        let v = step.direction.as_ref().ok_or_else(|| Error::Domain {
            what: "q",
            detail: format!("step {j} has no direction recorded"),
        })?;
        x += DVector::from_column_slice(v) * (n * t).sqrt();
    }
    Ok(d.energy(&Point::from(x))? / n)
}

/// `tau / ((1 + tau)^{p/2} - 1)`, which tends to `2/p` as `tau -> 0`.
pub fn tau_limit_constant(tau: f64, p: u32) -> f64 {
    tau / (0.5 * p as f64 * tau.ln_1p()).exp_m1()
}

/// Upper bound on `H(sigma_k)/N` after `k` on-sphere steps from `e0`:
///
/// `(1+tau)^{-pk/2} e0 - (sqrt(nu''(1)) tau - cushion) (1 - (1+tau)^{-pk/2}) / ((1+tau)^{p/2} - 1)`
///
/// where `cushion` bounds the per-step slack (Rayleigh slack plus the
/// third-order Taylor remainder, per spin).
pub fn pure_recursion_bound(e0: f64, tau: f64, p: u32, nu2_one: f64, k: usize, cushion: f64) -> f64 {
    let half_p = 0.5 * p as f64;
    let a_k = (-(half_p * k as f64) * tau.ln_1p()).exp();
    let denom = (half_p * tau.ln_1p()).exp_m1();
    a_k * e0 - (nu2_one.sqrt() * tau - cushion) * (1.0 - a_k) / denom
}

/// On-sphere descent for a pure degree-`p` model: from a uniform start on
/// the sphere of radius `sqrt(N)`, step `sigma + sqrt(N tau) v` and rescale
/// back to radius `sqrt(N)`.
pub fn run_pure_sphere(
    d: &Disorder,
    p: u32,
    tau: f64,
    steps: usize,
    params: &AlgorithmParams,
) -> Result<SphereTrace, PathError> {
    params.validate()?;
    if d.mixture().pure_degree() != Some(p) {
        return Err(Error::Argument(format!(
            "on-sphere descent needs a pure degree-{p} model (got {})",
            d.mixture()
        ))
        .into());
    }
    if !(tau > 0.0 && tau <= 0.5) {
        return Err(Error::Argument(format!("tau must lie in (0, 0.5] (got {tau})")).into());
    }
    let n = d.n();
    let nf = n as f64;
    let radius = nf.sqrt();
    let step_len = (nf * tau).sqrt();
    let nu2_one = d.mixture().nu2(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut sigma = random_unit(n, &mut rng) * radius;
    let mut trace = SphereTrace {
        mixture: d.mixture().to_string(),
        n,
        seed: d.seed(),
        p,
        tau,
        params: params.clone(),
        steps: Vec::with_capacity(steps + 1),
    };
    for i in 0..=steps {
        let point = Point::from(sigma.clone());
        let order = if i < steps { Order::Hessian } else { Order::Energy };
        let ev = d.evaluate(&point, order)?;
        let mut record = SphereStep {
            step: i,
            point: sigma.as_slice().to_vec(),
            energy_per_spin: ev.energy / nf,
            rayleigh: None,
            grad_dot: None,
            used_fallback: false,
            third_derivative: None,
        };
        if i == steps {
            trace.steps.push(record);
            break;
        }
        let grad = crate::hamiltonian::project_gradient(&ev.gradient.expect("gradient"), &point)?;
        let hess = crate::hamiltonian::project_hessian(&ev.hessian.expect("hessian"), &point)?;
        let found = match find_direction(&hess, &grad, &point, params, nu2_one, &mut rng) {
            Ok(found) => found,
            Err(Error::SpectralFailure { achieved, target, .. }) => {
                return Err(PathError {
                    error: Error::SpectralFailure {
                        step: i,
                        achieved,
                        target,
                    },
                    partial: None,
                })
            }
            Err(e) => return Err(e.into()),
        };
        record.rayleigh = Some(found.rayleigh);
        record.grad_dot = Some(found.grad_dot);
        record.used_fallback = found.used_fallback;
        record.third_derivative = Some(segment_third_derivative(d, &point, &found.v, step_len)?);
        trace.steps.push(record);
        let moved = &sigma + &found.v * step_len;
        sigma = &moved * (radius / moved.norm());
    }
    Ok(trace)
}
