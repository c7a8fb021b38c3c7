#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use spinpath::hamiltonian::{Disorder, Point};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(&mut *rng))
}

/// Uniform point on the sphere of radius `sqrt(qN)`.
pub fn sphere_point(n: usize, q: f64, rng: &mut ChaCha8Rng) -> Point {
    let v = gaussian(n, rng);
    Point::from(&v * ((q * n as f64).sqrt() / v.norm()))
}

/// Point of the ball with `|x|^2 / N` uniform on `[0.05, 1]`.
pub fn ball_point(n: usize, rng: &mut ChaCha8Rng) -> Point {
    let u: f64 = rand::Rng::random_range(rng, 0.05..1.0);
    sphere_point(n, u, rng)
}

/// Two points with `|x|^2 = |y|^2 = N` and `x . y / N = r`.
pub fn pair_with_overlap(n: usize, r: f64, rng: &mut ChaCha8Rng) -> (Point, Point) {
    let u = gaussian(n, rng).normalize();
    let mut w = gaussian(n, rng);
    w -= &u * u.dot(&w);
    let w = w.normalize();
    let s = (n as f64).sqrt();
    let x = &u * s;
    let y = (&u * r + &w * (1.0 - r * r).max(0.0).sqrt()) * s;
    (Point::from(x), Point::from(y))
}

/// Symmetric coupling matrix `A` of a pure `p = 2` model, `H = x^T A x`,
/// built straight from the stored coefficients.
pub fn coupling_matrix(d: &Disorder, gamma: f64) -> DMatrix<f64> {
    let n = d.n();
    let c = d.coefficients(2).expect("degree 2 present");
    let scale = gamma / (n as f64).sqrt();
    let mut a = DMatrix::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            let v = scale * c[idx];
            if i == j {
                a[(i, i)] = v;
            } else {
                a[(i, j)] = v / 2.0;
                a[(j, i)] = v / 2.0;
            }
            idx += 1;
        }
    }
    a
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min(a: DMatrix<f64>) -> f64 {
    a.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Relative errors of central-difference gradient and Hessian at `x`.
pub fn finite_difference_errors(d: &Disorder, x: &Point, h: f64) -> (f64, f64) {
    let n = d.n();
    let g = d.euclidean_gradient(x).unwrap();
    let hess = d.euclidean_hessian(x).unwrap();
    let mut fd_g = DVector::zeros(n);
    let mut fd_h = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut plus = x.coords().clone();
        plus[i] += h;
        let mut minus = x.coords().clone();
        minus[i] -= h;
        let (plus, minus) = (Point::from(plus), Point::from(minus));
        fd_g[i] = (d.energy(&plus).unwrap() - d.energy(&minus).unwrap()) / (2.0 * h);
        let col = (d.euclidean_gradient(&plus).unwrap() - d.euclidean_gradient(&minus).unwrap()) / (2.0 * h);
        fd_h.set_column(i, &col);
    }
    ((&fd_g - &g).norm() / g.norm(), (&fd_h - &hess).norm() / hess.norm())
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
