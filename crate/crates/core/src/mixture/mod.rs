//! Mixture polynomials `nu(x) = sum_p gamma_p^2 x^p` and the closed-form
//! theory built on them: ground-state curve, full-RSB test, Parisi endpoint
//! and density, the TAP lower bound and the Crisanti-Sommers value at the
//! Parisi measure, plus semicircle edge statistics.

mod quadrature;
mod semicircle;
mod theory;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use quadrature::{integrate, QUAD_TOL};
pub use semicircle::{ks_distance, ldp_rate, semicircle_cdf};
pub use theory::{
    classify_full_rsb, crisanti_sommers_at_xp, e_infinity, energy_benchmark, parisi_density,
    q_parisi, rs_condition, shifted_mixture, tap_rhs, ParisiData, RsCondition, RsbClassification,
    ShiftedMixture, FULL_RSB_GRID, FULL_RSB_TOL,
};

/// Largest derivative order supported by [`Mixture::eval`].
pub const MAX_ORDER: u32 = 4;

/// A finite mixture. Terms are kept sorted by degree, each with `gamma > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    terms: Vec<(u32, f64)>,
}

impl Mixture {
    /// Builds a mixture from `(p, gamma_p)` pairs.
    ///
    /// Zero coefficients are accepted and dropped; at least one must be
    /// positive.
    pub fn new(pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut terms: Vec<(u32, f64)> = Vec::new();
        for (p, gamma) in pairs {
            if p < 2 {
                return Err(Error::MixtureParse(format!("p must be ≥ 2 (got p={p})")));
            }
            if !gamma.is_finite() {
                return Err(Error::MixtureParse(format!(
                    "gamma_{p} must be finite (got {gamma})"
                )));
            }
            if gamma < 0.0 {
                return Err(Error::MixtureParse(format!(
                    "gamma_{p} must be ≥ 0 (got {gamma})"
                )));
            }
            if terms.iter().any(|&(q, _)| q == p) {
                return Err(Error::MixtureParse(format!("duplicate degree p={p}")));
            }
            terms.push((p, gamma));
        }
        terms.retain(|&(_, g)| g > 0.0);
        if terms.is_empty() {
            return Err(Error::MixtureParse(
                "at least one gamma_p must be positive".into(),
            ));
        }
        terms.sort_by_key(|&(p, _)| p);
        Ok(Mixture { terms })
    }

    /// Pure model `nu(x) = x^p`.
    pub fn pure(p: u32) -> Result<Self> {
        Self::new([(p, 1.0)])
    }

    /// Active `(p, gamma_p)` pairs in increasing `p`.
    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.last().map(|&(p, _)| p).unwrap_or(0)
    }

    /// `Some(p)` when the mixture has a single active degree.
    pub fn pure_degree(&self) -> Option<u32> {
        match self.terms.as_slice() {
            [(p, _)] => Some(*p),
            _ => None,
        }
    }

    /// `d^order/dq^order nu(q)` for `q` in `[0, 1]`.
    pub fn eval(&self, q: f64, order: u32) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Argument(format!("q must lie in [0, 1] (got {q})")));
        }
        if order > MAX_ORDER {
            return Err(Error::Argument(format!(
                "derivative order must be in 0..={MAX_ORDER} (got {order})"
            )));
        }
        Ok(self.deriv(q, order))
    }

    /// Unchecked derivative evaluation, valid for any real `q` and order.
    pub(crate) fn deriv(&self, q: f64, order: u32) -> f64 {
        self.terms
            .iter()
            .filter(|&&(p, _)| p >= order)
            .map(|&(p, gamma)| {
                let falling: f64 = (0..order).map(|i| (p - i) as f64).product();
                gamma * gamma * falling * q.powi((p - order) as i32)
            })
            .sum()
    }

    pub(crate) fn nu(&self, q: f64) -> f64 {
        self.deriv(q, 0)
    }

    pub(crate) fn nu2(&self, q: f64) -> f64 {
        self.deriv(q, 2)
    }
}

/// Free-function form of [`Mixture::eval`].
pub fn eval_nu(mixture: &Mixture, q: f64, order: u32) -> Result<f64> {
    mixture.eval(q, order)
}

impl FromStr for Mixture {
    type Err = Error;

    /// Parses `p:gamma` pairs separated by commas, e.g. `2:1.0,4:0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in s.split(',') {
            let item = item.trim();
            if item.is_empty() {
                return Err(Error::MixtureParse(format!("empty term in {s:?}")));
            }
            let (p, gamma) = item
                .split_once(':')
                .ok_or_else(|| Error::MixtureParse(format!("expected p:gamma, got {item:?}")))?;
            let p: i64 = p
                .trim()
                .parse()
                .map_err(|_| Error::MixtureParse(format!("bad degree in {item:?}")))?;
            if p < 2 {
                return Err(Error::MixtureParse(format!("p must be ≥ 2 (got p={p})")));
            }
            let p = u32::try_from(p)
                .map_err(|_| Error::MixtureParse(format!("degree too large in {item:?}")))?;
            let gamma: f64 = gamma
                .trim()
                .parse()
                .map_err(|_| Error::MixtureParse(format!("bad coefficient in {item:?}")))?;
            pairs.push((p, gamma));
        }
        Mixture::new(pairs)
    }
}

impl fmt::Display for Mixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (p, gamma)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}:{gamma:?}")?;
        }
        Ok(())
    }
}
