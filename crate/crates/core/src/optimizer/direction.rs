use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_chacha::ChaCha8Rng;

use super::{random_unit, AlgorithmParams};
use crate::error::{Error, Result};
use crate::hamiltonian::Point;

/// A direction accepted by [`find_direction`].
#[derive(Clone, Debug)]
pub struct Direction {
    /// Unit vector orthogonal to the current point.
    pub v: DVector<f64>,
    /// `v^T Hess v`.
    pub rayleigh: f64,
    /// `v . grad`, never positive.
    pub grad_dot: f64,
    /// Power iterations spent (the cap when the fallback ran).
    pub iterations: usize,
    pub used_fallback: bool,
}

fn remove_component(v: &mut DVector<f64>, unit: &DVector<f64>) {
    let c = unit.dot(v);
    v.axpy(-c, unit, 1.0);
}

fn rayleigh(hess: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(hess * v))
}

/// Finds a unit `v` orthogonal to `sigma` with
/// `v^T hess v <= -2 sqrt(nu2_q) + epsilon` and `v . grad <= 0`.
///
/// Runs the shifted power iteration `u <- (hess - L I) u` from a random start
/// in the orthogonal complement of `sigma`, re-projecting and renormalizing
/// each iterate, and stops as soon as the Rayleigh target is met. If the cap
/// is reached and `params.rayleigh_check` is set, the most negative
/// eigenvector from a dense eigensolve is tried instead.
pub fn find_direction(
    hess: &DMatrix<f64>,
    grad: &DVector<f64>,
    sigma: &Point,
    params: &AlgorithmParams,
    nu2_q: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Direction> {
    let n = sigma.dim();
    if hess.nrows() != n || hess.ncols() != n || grad.len() != n {
        return Err(Error::Argument(format!(
            "shape mismatch: hess {}x{}, grad {}, point {}",
            hess.nrows(),
            hess.ncols(),
            grad.len(),
            n
        )));
    }
    let norm = sigma.coords().norm();
    if norm == 0.0 {
        return Err(Error::Domain {
            what: "point",
            detail: "directions are undefined at the origin".into(),
        });
    }
    let unit = sigma.coords() / norm;
    let edge = nu2_q.max(0.0).sqrt();
    let target = -2.0 * edge + params.epsilon;
    let shift = params.power_shift.unwrap_or(3.0 * edge + 1.0);

    let mut u = random_unit(n, rng);
    remove_component(&mut u, &unit);
    u.normalize_mut();

    let mut best = f64::INFINITY;
    let mut accepted = None;
    for it in 1..=params.power_iters_max {
        let mut next = hess * &u;
        next.axpy(-shift, &u, 1.0);
        remove_component(&mut next, &unit);
        let len = next.norm();
        if len == 0.0 || !len.is_finite() {
            break;
        }
        u = next / len;
        let r = rayleigh(hess, &u);
        best = best.min(r);
        if r <= target {
            accepted = Some((u.clone(), r, it, false));
            break;
        }
    }

    if accepted.is_none() && params.rayleigh_check {
        let eig = SymmetricEigen::new(hess.clone());
        // most negative eigenvalue whose eigenvector is not the zero mode
        let pick = (0..n)
            .filter(|&i| eig.eigenvectors.column(i).dot(&unit).abs() < 0.5)
            .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        if let Some(i) = pick {
            let mut v: DVector<f64> = eig.eigenvectors.column(i).into_owned();
            remove_component(&mut v, &unit);
            v.normalize_mut();
            let r = rayleigh(hess, &v);
            best = best.min(r);
            if r <= target {
                accepted = Some((v, r, params.power_iters_max, true));
            }
        }
    }

    let Some((mut v, r, iterations, used_fallback)) = accepted else {
        return Err(Error::SpectralFailure {
            step: 0,
            achieved: best,
            target,
        });
    };
    let mut grad_dot = v.dot(grad);
    if grad_dot > 0.0 {
        v.neg_mut();
        grad_dot = -grad_dot;
    }
    Ok(Direction {
        v,
        rayleigh: r,
        grad_dot,
        iterations,
        used_fallback,
    })
}
