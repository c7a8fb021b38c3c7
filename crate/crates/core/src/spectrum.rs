//! Spectra of the projected Hessian against the semicircle law.
//!
//! At a point `sigma` with `|sigma|^2 = qN` the projected Hessian has the
//! eigenvector `sigma` with eigenvalue 0; the remaining `N - 1` eigenvalues
//! are distributed as `sqrt((N-1)/N) sqrt(nu''(q))` times a GOE spectrum.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Disorder, Point};
use crate::mixture::{ks_distance, semicircle_cdf};

/// Minimum overlap with `sigma` for an eigenvector to count as the zero mode.
pub const ZERO_MODE_OVERLAP: f64 = 0.99;

/// Projected Hessian spectrum at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub q: f64,
    pub epsilon: f64,
    pub n: usize,
    /// The `N - 1` eigenvalues left after removing the zero mode, sorted.
    pub eigenvalues: Vec<f64>,
    /// `#{lambda <= -2 sqrt(nu''(q)) + epsilon}`.
    pub count_below_soft: usize,
    /// `#{lambda <= -2 sqrt(nu''(q)) - epsilon}`.
    pub count_below_hard: usize,
    /// Kolmogorov-Smirnov distance of the rescaled spectrum to the
    /// semicircle.
    pub ks_distance: f64,
    pub lambda_min: f64,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    q: f64,
    epsilon: f64,
    n: usize,
    count_below_soft: usize,
    count_below_hard: usize,
    lambda_min: f64,
    ks_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<&'a [f64]>,
}

impl SpectrumReport {
    pub fn to_json(&self, with_eigenvalues: bool) -> Result<String> {
        let view = ReportJson {
            q: self.q,
            epsilon: self.epsilon,
            n: self.n,
            count_below_soft: self.count_below_soft,
            count_below_hard: self.count_below_hard,
            lambda_min: self.lambda_min,
            ks_distance: self.ks_distance,
            eigenvalues: with_eigenvalues.then_some(self.eigenvalues.as_slice()),
        };
        serde_json::to_string_pretty(&view).map_err(|e| Error::Format(e.to_string()))
    }
}

fn eigen(h: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let e = h.symmetric_eigen();
    if e.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("symmetric eigensolve produced non-finite values".into()));
    }
    Ok(e)
}

fn sorted(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values
}

/// Eigen-decomposes the projected Hessian at `x`, removes the zero mode and
/// compares the rest with the semicircle edge at slack `epsilon`.
pub fn analyze_hessian(d: &Disorder, x: &Point, epsilon: f64) -> Result<SpectrumReport> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::Argument(format!("epsilon must be finite and >= 0 (got {epsilon})")));
    }
    let hess = d.projected_hessian(x)?;
    let n = x.dim();
    let q = x.q();
    let nu2 = d.mixture().eval(q, 2)?;
    if nu2 <= 0.0 {
        return Err(Error::Singularity { q });
    }
    let e = eigen(hess)?;
    let unit = x.coords() / x.norm_sq().sqrt();
    let zero = (0..n)
        .filter(|&i| e.eigenvectors.column(i).dot(&unit).abs() > ZERO_MODE_OVERLAP)
        .min_by(|&a, &b| e.eigenvalues[a].abs().total_cmp(&e.eigenvalues[b].abs()))
        .ok_or_else(|| {
            Error::Inconsistent(format!(
                "no eigenvector has overlap > {ZERO_MODE_OVERLAP} with the point"
            ))
        })?;
    let eigenvalues = sorted(
        (0..n)
            .filter(|&i| i != zero)
            .map(|i| e.eigenvalues[i])
            .collect(),
    );
    let edge = -2.0 * nu2.sqrt();
    let count_below_soft = eigenvalues.iter().filter(|&&l| l <= edge + epsilon).count();
    let count_below_hard = eigenvalues.iter().filter(|&&l| l <= edge - epsilon).count();
    let scale = (n as f64 / (n as f64 - 1.0)).sqrt() / nu2.sqrt();
    let rescaled: Vec<f64> = eigenvalues.iter().map(|l| l * scale).collect();
    Ok(SpectrumReport {
        q,
        epsilon,
        n,
        lambda_min: eigenvalues[0],
        count_below_soft,
        count_below_hard,
        ks_distance: ks_distance(&rescaled, semicircle_cdf),
        eigenvalues,
    })
}

/// Sorted spectrum of an `n x n` GOE matrix with variance `2/n` on the
/// diagonal and `1/n` off it, so the support tends to `[-2, 2]`.
pub fn goe_reference(n: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Argument(format!("GOE dimension must be >= 2 (got {n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let off = (1.0 / n as f64).sqrt();
    let diag = (2.0 / n as f64).sqrt();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            let v = z * if i == j { diag } else { off };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(sorted(eigen(m)?.eigenvalues.iter().copied().collect()))
}

/// Cauchy interlacing of a compression to one dimension less:
/// `full[i] <= inner[i] <= full[i + 1]` up to `tol`. Both inputs sorted.
pub fn interlaces(full: &[f64], inner: &[f64], tol: f64) -> bool {
    full.len() == inner.len() + 1
        && inner
            .iter()
            .enumerate()
            .all(|(i, &l)| full[i] - tol <= l && l <= full[i + 1] + tol)
}

/// Euclidean Hessian spectrum at `x` and the projected spectrum with the
/// zero mode removed, both sorted.
pub fn paired_spectra(d: &Disorder, x: &Point) -> Result<(Vec<f64>, Vec<f64>)> {
    let full = sorted(eigen(d.euclidean_hessian(x)?)?.eigenvalues.iter().copied().collect());
    let projected = analyze_hessian(d, x, 0.0)?.eigenvalues;
    Ok((full, projected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::sample_disorder;
    use crate::Mixture;
    use nalgebra::DVector;

    fn point_at(n: usize, q: f64, seed: u64) -> Point {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        Point::from(&v * ((q * n as f64).sqrt() / v.norm()))
    }

    #[test]
    fn report_invariants() {
        let n = 80;
        let d = sample_disorder(&Mixture::pure(3).unwrap(), n, 2).unwrap();
        let r = analyze_hessian(&d, &point_at(n, 0.5, 1), 0.3).unwrap();
        assert_eq!(r.eigenvalues.len(), n - 1);
        assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.count_below_hard <= r.count_below_soft);
        assert!((0.0..=1.0).contains(&r.ks_distance));
        assert_eq!(r.lambda_min, r.eigenvalues[0]);
        // bulk lives on [-2 sqrt 3, 2 sqrt 3] up to edge fluctuations
        assert!(r.lambda_min > -2.0 * 3f64.sqrt() - 0.5);
        assert!(r.ks_distance < 0.15);
    }

    #[test]
    fn zero_mode_is_removed_even_among_small_eigenvalues() {
        // the bulk has eigenvalues near 0 too; only the one along sigma goes
        let n = 30;
        let d = sample_disorder(&Mixture::pure(2).unwrap(), n, 7).unwrap();
        let x = point_at(n, 0.8, 3);
        let r = analyze_hessian(&d, &x, 0.1).unwrap();
        let (full, proj) = paired_spectra(&d, &x).unwrap();
        assert_eq!(proj, r.eigenvalues);
        assert!(interlaces(&full, &proj, 1e-9));
    }

    #[test]
    fn errors() {
        let d = sample_disorder(&Mixture::pure(3).unwrap(), 10, 0).unwrap();
        assert!(matches!(
            analyze_hessian(&d, &Point::zeros(10), 0.1),
            Err(Error::Domain { .. })
        ));
        assert!(analyze_hessian(&d, &point_at(10, 0.5, 0), -1.0).is_err());
        assert!(goe_reference(1, 0).is_err());
    }

    #[test]
    fn json_layout() {
        let d = sample_disorder(&Mixture::pure(2).unwrap(), 12, 0).unwrap();
        let r = analyze_hessian(&d, &point_at(12, 0.5, 0), 0.2).unwrap();
        let short: serde_json::Value = serde_json::from_str(&r.to_json(false).unwrap()).unwrap();
        assert!(short.get("eigenvalues").is_none());
        for key in ["q", "epsilon", "n", "count_below_soft", "count_below_hard", "lambda_min", "ks_distance"] {
            assert!(short.get(key).is_some(), "{key}");
        }
        let long: serde_json::Value = serde_json::from_str(&r.to_json(true).unwrap()).unwrap();
        assert_eq!(long["eigenvalues"].as_array().unwrap().len(), 11);
    }

    #[test]
    fn goe_is_centered_and_deterministic() {
        let n = 200;
        let reps = 100;
        let means: Vec<f64> = (0..reps)
            .map(|s| goe_reference(n, s).unwrap().iter().sum::<f64>() / n as f64)
            .collect();
        let m = means.iter().sum::<f64>() / reps as f64;
        let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert!(m.abs() < 3.0 * (var / reps as f64).sqrt());
        assert_eq!(goe_reference(20, 4).unwrap(), goe_reference(20, 4).unwrap());
    }

    #[test]
    fn goe_edge_and_semicircle_fit() {
        let ev = goe_reference(1000, 11).unwrap();
        assert!(ks_distance(&ev, semicircle_cdf) <= 0.05);
        let top = *ev.last().unwrap();
        assert!(top > 1.8 && top < 2.2, "{top}");
    }
}
