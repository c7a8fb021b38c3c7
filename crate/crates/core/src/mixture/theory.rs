use serde::Serialize;

use super::quadrature::{integrate, QUAD_TOL};
use super::Mixture;
use crate::error::{Error, Result};

/// Grid size used when the caller does not pick one.
pub const FULL_RSB_GRID: usize = 10_000;
/// Slack allowed on `f''` before a mixture is declared not full-RSB.
pub const FULL_RSB_TOL: f64 = 1e-12;

const ROOT_TOL: f64 = 1e-14;
const MAX_Q_P: f64 = 1.0 - 1e-9;

/// Result of the concavity test for `f(q) = nu''(q)^(-1/2)` on `(0, 1]`.
#[derive(Clone, Debug, Serialize)]
pub struct RsbClassification {
    pub is_full_rsb: bool,
    /// `min_q -f''(q)` over the grid; non-negative for concave `f`.
    pub margin: f64,
    pub grid_size: usize,
}

/// `f''` for `f = nu''^(-1/2)`, in closed form.
fn inv_sqrt_nu2_second_derivative(m: &Mixture, q: f64) -> Result<f64> {
    let n2 = m.deriv(q, 2);
    if n2 <= 0.0 {
        return Err(Error::Singularity { q });
    }
    let n3 = m.deriv(q, 3);
    let n4 = m.deriv(q, 4);
    Ok(0.5 * n2.powf(-2.5) * (1.5 * n3 * n3 - n2 * n4))
}

/// Tests concavity of `nu''(q)^(-1/2)` on the uniform grid `i / grid_size`,
/// `i = 1..=grid_size`.
pub fn classify_full_rsb(mixture: &Mixture, grid_size: usize) -> Result<RsbClassification> {
    if grid_size < 100 {
        return Err(Error::Argument(format!(
            "grid_size must be ≥ 100 (got {grid_size})"
        )));
    }
    let mut margin = f64::INFINITY;
    for i in 1..=grid_size {
        let q = i as f64 / grid_size as f64;
        margin = margin.min(-inv_sqrt_nu2_second_derivative(mixture, q)?);
    }
    Ok(RsbClassification {
        is_full_rsb: margin >= -FULL_RSB_TOL,
        margin,
        grid_size,
    })
}

/// `E_H(q) = int_0^q sqrt(nu''(t)) dt`, the ground-state energy on the
/// sphere of radius `sqrt(Nq)` for full-RSB mixtures.
pub fn energy_benchmark(mixture: &Mixture, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Argument(format!("q must lie in [0, 1] (got {q})")));
    }
    integrate(|t| mixture.nu2(t).max(0.0).sqrt(), 0.0, q, QUAD_TOL)
}

/// Threshold energy `E_inf = 2 sqrt((p-1)/p)` of the pure p-spin model.
pub fn e_infinity(p: u32) -> Result<f64> {
    if p < 2 {
        return Err(Error::Argument(format!("p must be ≥ 2 (got {p})")));
    }
    let p = p as f64;
    Ok(2.0 * ((p - 1.0) / p).sqrt())
}

/// Parisi endpoint and density for a full-RSB mixture at inverse
/// temperature `beta`.
#[derive(Clone, Debug)]
pub struct ParisiData {
    pub beta: f64,
    pub q_p: f64,
    mixture: Mixture,
}

impl ParisiData {
    /// `x_P(q) = nu'''(q) / (2 beta nu''(q)^(3/2))` on `[0, q_P)`.
    pub fn density(&self, q: f64) -> Result<f64> {
        if !(0.0..self.q_p).contains(&q) {
            return Err(Error::Domain {
                what: "q",
                detail: format!("density defined on [0, q_P) = [0, {}), got {q}", self.q_p),
            });
        }
        Ok(eta(&self.mixture, q) / self.beta)
    }

    pub fn mixture(&self) -> &Mixture {
        &self.mixture
    }
}

/// `eta(q) = -d/dq nu''(q)^(-1/2)`.
fn eta(m: &Mixture, q: f64) -> f64 {
    let n2 = m.deriv(q, 2);
    m.deriv(q, 3) / (2.0 * n2 * n2.sqrt())
}

/// Solves `nu''(q)^(-1/2) = beta (1 - q)` for the Parisi endpoint.
///
/// Returns `q_P = 0` on the replica-symmetric side
/// `beta <= nu''(0)^(-1/2)`.
pub fn q_parisi(mixture: &Mixture, beta: f64) -> Result<ParisiData> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Argument(format!("beta must be > 0 (got {beta})")));
    }
    let data = |q_p| ParisiData {
        beta,
        q_p,
        mixture: mixture.clone(),
    };
    let n2_0 = mixture.nu2(0.0);
    // nu''(0) = 0 puts the threshold at +inf.
    if n2_0 <= 0.0 || beta <= n2_0.powf(-0.5) {
        return Ok(data(0.0));
    }
    let phi = |q: f64| mixture.nu2(q).powf(-0.5) - beta * (1.0 - q);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let (f_lo, f_hi) = (phi(lo), phi(hi));
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::Inconsistent(format!(
            "nu''(q)^(-1/2) - beta (1-q) has no sign change on (0,1) (values {f_lo}, {f_hi})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= ROOT_TOL {
            break;
        }
    }
    let q_p = 0.5 * (lo + hi);
    if q_p > MAX_Q_P {
        return Err(Error::Domain {
            what: "q_P",
            detail: format!("q_P = {q_p} exceeds 1 - 1e-9; beta = {beta} is too large"),
        });
    }
    Ok(data(q_p))
}

/// Density of the Parisi measure at `q < q_P`.
pub fn parisi_density(mixture: &Mixture, beta: f64, q: f64) -> Result<f64> {
    q_parisi(mixture, beta)?.density(q)
}

/// `nu_q(s) = nu(q + (1-q)s) - nu(q) - (1-q) nu'(q) s`, stored as its
/// polynomial coefficients in `s` so the first two orders vanish exactly.
#[derive(Clone, Debug)]
pub struct ShiftedMixture {
    q: f64,
    /// `coeffs[m]` multiplies `s^m`; entries 0 and 1 are zero.
    coeffs: Vec<f64>,
}

impl ShiftedMixture {
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn value(&self, s: f64) -> f64 {
        self.deriv(s, 0)
    }

    /// `d^order/ds^order nu_q(s)`.
    pub fn deriv(&self, s: f64, order: usize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(order)
            .map(|(m, c)| {
                let falling: f64 = (0..order).map(|i| (m - i) as f64).product();
                c * falling * s.powi((m - order) as i32)
            })
            .sum()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Builds `nu_q` for `q` in `[0, 1)`.
pub fn shifted_mixture(mixture: &Mixture, q: f64) -> Result<ShiftedMixture> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Argument(format!("q must lie in [0, 1) (got {q})")));
    }
    let mut coeffs = vec![0.0; mixture.degree() as usize + 1];
    let scale = 1.0 - q;
    for &(p, gamma) in mixture.terms() {
        for m in 2..=p {
            coeffs[m as usize] +=
                gamma * gamma * binomial(p, m) * q.powi((p - m) as i32) * scale.powi(m as i32);
        }
    }
    Ok(ShiftedMixture { q, coeffs })
}

/// Outcome of the replica-symmetric check on `nu_{q_P}`.
#[derive(Clone, Debug, Serialize)]
pub struct RsCondition {
    pub holds: bool,
    /// Largest `g(s)` seen on the grid.
    pub worst: f64,
    pub argmax_s: f64,
}

/// Checks `g(s) = beta^2 nu_{q_P}(s) + log(1-s) + s < 0` on the grid
/// `s = i / grid_size`, `i = 1..grid_size`.
pub fn rs_condition(mixture: &Mixture, beta: f64, grid_size: usize) -> Result<RsCondition> {
    if grid_size < 1000 {
        return Err(Error::Argument(format!(
            "grid_size must be ≥ 1000 (got {grid_size})"
        )));
    }
    let parisi = q_parisi(mixture, beta)?;
    let shifted = shifted_mixture(mixture, parisi.q_p)?;
    let b2 = beta * beta;
    let mut worst = f64::NEG_INFINITY;
    let mut argmax_s = 0.0;
    for i in 1..grid_size {
        let s = i as f64 / grid_size as f64;
        let g = b2 * shifted.value(s) + (-s).ln_1p() + s;
        if g > worst {
            worst = g;
            argmax_s = s;
        }
    }
    Ok(RsCondition {
        holds: worst < 0.0,
        worst,
        argmax_s,
    })
}

/// Crisanti-Sommers functional evaluated at the Parisi distribution,
/// using the explicit density below `q_P`.
pub fn crisanti_sommers_at_xp(mixture: &Mixture, beta: f64) -> Result<f64> {
    let parisi = q_parisi(mixture, beta)?;
    let q_p = parisi.q_p;
    if q_p == 0.0 {
        return Ok(0.5 * beta * beta * mixture.nu(1.0));
    }
    let eta_term = integrate(|q| eta(mixture, q) * mixture.deriv(q, 1), 0.0, q_p, QUAD_TOL)?;
    let ground = integrate(|q| mixture.nu2(q).sqrt(), 0.0, q_p, QUAD_TOL)?;
    Ok(0.5
        * (beta * eta_term
            + beta * beta * (mixture.nu(1.0) - mixture.nu(q_p))
            + beta * ground
            + (1.0 - q_p).ln()))
}

/// TAP lower bound on the free energy:
/// `beta E_H(q_P) + log(1 - q_P)/2 + beta^2 nu_{q_P}(1)/2`.
pub fn tap_rhs(mixture: &Mixture, beta: f64) -> Result<f64> {
    let parisi = q_parisi(mixture, beta)?;
    let q_p = parisi.q_p;
    let shifted = shifted_mixture(mixture, q_p)?;
    let ground = energy_benchmark(mixture, q_p)?;
    Ok(beta * ground + 0.5 * (1.0 - q_p).ln() + 0.5 * beta * beta * shifted.value(1.0))
}
