//! Gaussian disorder of a finite mixture and exact evaluation of the
//! Hamiltonian
//!
//! `H(x) = sum_p gamma_p N^{-(p-1)/2} sum_{i_1<=...<=i_p} J~_{i_1..i_p} x_{i_1}...x_{i_p}`
//!
//! together with its Euclidean and projected derivatives on the ball of
//! radius `sqrt(N)`. Only the symmetrized coefficients `J~` over sorted
//! multi-indices are stored; each is a centred Gaussian whose variance is
//! the number of distinct orderings of its index multiset.

mod io;
pub mod tuples;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixture::Mixture;

pub use io::{dump_disorder, restore_disorder};
use tuples::{balanced_ranges, first_index_offsets, for_each_tuple, orderings, tuple_count};

/// Default ceiling on coefficient storage, 4 GiB.
pub const DEFAULT_MEMORY_BUDGET: u128 = 4 << 30;

/// Highest degree accepted by the sampler.
pub const MAX_DEGREE: u32 = 16;

const PARALLEL_MIN_TUPLES: usize = 1 << 16;
const MAX_CHUNKS: usize = 16;
const HESSIAN_SCRATCH_BYTES: usize = 256 << 20;

/// A configuration in `R^N`, usually inside the ball `|x|^2 <= N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: DVector<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point {
            coords: DVector::from_vec(coords),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Point {
            coords: DVector::zeros(n),
        }
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.norm_squared()
    }

    /// `|x|^2 / N`, recomputed on every call.
    pub fn q(&self) -> f64 {
        self.norm_sq() / self.dim() as f64
    }
}

impl From<DVector<f64>> for Point {
    fn from(coords: DVector<f64>) -> Self {
        Point { coords }
    }
}

#[derive(Clone, Debug)]
struct DegreeTensor {
    p: usize,
    /// `gamma_p N^{-(p-1)/2}`
    scale: f64,
    offsets: Vec<usize>,
    coeffs: Vec<f64>,
}

/// Sampled coefficients of one Hamiltonian. Immutable once built.
#[derive(Clone, Debug)]
pub struct Disorder {
    mixture: Mixture,
    n: usize,
    seed: u64,
    tensors: Vec<DegreeTensor>,
}

/// Which derivatives [`Disorder::evaluate`] should accumulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Energy,
    Gradient,
    Hessian,
}

/// Energy and (optionally) Euclidean derivatives at one point.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub energy: f64,
    pub gradient: Option<DVector<f64>>,
    pub hessian: Option<DMatrix<f64>>,
}

/// Bytes needed to store the coefficients of `mixture` at dimension `n`.
pub fn disorder_bytes(mixture: &Mixture, n: usize) -> u128 {
    mixture
        .terms()
        .iter()
        .map(|&(p, _)| tuple_count(n, p as usize) * 8)
        .sum()
}

/// Samples disorder under [`DEFAULT_MEMORY_BUDGET`].
pub fn sample_disorder(mixture: &Mixture, n: usize, seed: u64) -> Result<Disorder> {
    sample_disorder_with_budget(mixture, n, seed, DEFAULT_MEMORY_BUDGET)
}

/// Samples disorder for `mixture` at dimension `n`.
///
/// Degree `p` draws from its own ChaCha8 stream (stream id `p`) keyed by
/// `seed`, one standard Gaussian per sorted tuple in lexicographic order,
/// scaled by the square root of the tuple's ordering count.
pub fn sample_disorder_with_budget(
    mixture: &Mixture,
    n: usize,
    seed: u64,
    budget_bytes: u128,
) -> Result<Disorder> {
    if n < 2 {
        return Err(Error::Argument(format!("N must be ≥ 2 (got {n})")));
    }
    if mixture.degree() > MAX_DEGREE {
        return Err(Error::Argument(format!(
            "degree {} exceeds the supported maximum {MAX_DEGREE}",
            mixture.degree()
        )));
    }
    let needed = disorder_bytes(mixture, n);
    if needed > budget_bytes {
        return Err(Error::Capacity {
            needed,
            budget: budget_bytes,
        });
    }
    let tensors = mixture
        .terms()
        .iter()
        .map(|&(p, gamma)| {
            let p = p as usize;
            let offsets = first_index_offsets(n, p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut coeffs = Vec::with_capacity(offsets[n]);
            for_each_tuple(n, p, 0..n, &offsets, |t, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                coeffs.push(orderings(t).sqrt() * z);
            });
            DegreeTensor {
                p,
                scale: gamma * (n as f64).powf(-((p - 1) as f64) / 2.0),
                offsets,
                coeffs,
            }
        })
        .collect();
    Ok(Disorder {
        mixture: mixture.clone(),
        n,
        seed,
        tensors,
    })
}

#[derive(Default)]
struct Partial {
    energy: f64,
    grad: Vec<f64>,
    upper: Vec<f64>,
}

fn chunk_count(n: usize, tuples: usize, order: Order) -> usize {
    if tuples < PARALLEL_MIN_TUPLES {
        return 1;
    }
    if order == Order::Hessian {
        let per = n * n * 8;
        (HESSIAN_SCRATCH_BYTES / per.max(1)).clamp(1, MAX_CHUNKS)
    } else {
        MAX_CHUNKS
    }
}

impl DegreeTensor {
    fn accumulate(&self, n: usize, x: &[f64], range: std::ops::Range<usize>, order: Order) -> Partial {
        let p = self.p;
        let mut out = Partial {
            energy: 0.0,
            grad: if order >= Order::Gradient { vec![0.0; n] } else { Vec::new() },
            upper: if order >= Order::Hessian { vec![0.0; n * n] } else { Vec::new() },
        };
        match p {
            2 => {
                self.accumulate_quadratic(n, x, range, order, &mut out);
                return out;
            }
            3 => {
                self.accumulate_cubic(n, x, range, order, &mut out);
                return out;
            }
            _ => {}
        }
        let mut pre = vec![1.0; p + 1];
        let mut suf = vec![1.0; p + 1];
        for_each_tuple(n, p, range, &self.offsets, |t, idx| {
            let j = self.coeffs[idx];
            for k in 0..p {
                pre[k + 1] = pre[k] * x[t[k]];
            }
            out.energy += j * pre[p];
            if order == Order::Energy {
                return;
            }
            for k in (0..p).rev() {
                suf[k] = suf[k + 1] * x[t[k]];
            }
            for k in 0..p {
                out.grad[t[k]] += j * pre[k] * suf[k + 1];
            }
            if order == Order::Hessian {
                for k in 0..p {
                    let row = t[k] * n;
                    let mut mid = j * pre[k];
                    for l in k + 1..p {
                        out.upper[row + t[l]] += mid * suf[l + 1];
                        mid *= x[t[l]];
                    }
                }
            }
        });
        out
    }

    // Tuples (i, j) with j in i..n are contiguous, so the inner loop is a
    // dot product plus row updates.
    fn accumulate_quadratic(&self, n: usize, x: &[f64], range: std::ops::Range<usize>, order: Order, out: &mut Partial) {
        for i in range {
            let base = self.offsets[i];
            let c = &self.coeffs[base..base + (n - i)];
            let xs = &x[i..];
            let dot: f64 = c.iter().zip(xs).map(|(a, b)| a * b).sum();
            out.energy += x[i] * dot;
            if order == Order::Energy {
                continue;
            }
            out.grad[i] += dot;
            let xi = x[i];
            for (g, &cj) in out.grad[i..].iter_mut().zip(c) {
                *g += cj * xi;
            }
            if order == Order::Hessian {
                for (u, &cj) in out.upper[i * n + i..(i + 1) * n].iter_mut().zip(c) {
                    *u += cj;
                }
            }
        }
    }

    // Tuples (i, j, k) with k in j..n are contiguous for fixed (i, j).
    fn accumulate_cubic(&self, n: usize, x: &[f64], range: std::ops::Range<usize>, order: Order, out: &mut Partial) {
        for i in range {
            let mut idx = self.offsets[i];
            let xi = x[i];
            for j in i..n {
                let len = n - j;
                let c = &self.coeffs[idx..idx + len];
                idx += len;
                let xj = x[j];
                let xs = &x[j..];
                let dot: f64 = c.iter().zip(xs).map(|(a, b)| a * b).sum();
                out.energy += xi * xj * dot;
                if order == Order::Energy {
                    continue;
                }
                out.grad[i] += xj * dot;
                out.grad[j] += xi * dot;
                let xij = xi * xj;
                for (g, &ck) in out.grad[j..].iter_mut().zip(c) {
                    *g += ck * xij;
                }
                if order == Order::Hessian {
                    out.upper[i * n + j] += dot;
                    if i == j {
                        let twice = 2.0 * xi;
                        for (u, &ck) in out.upper[i * n + i..(i + 1) * n].iter_mut().zip(c) {
                            *u += ck * twice;
                        }
                        continue;
                    }
                    let (head, tail) = out.upper.split_at_mut(j * n);
                    for (u, &ck) in head[i * n + j..(i + 1) * n].iter_mut().zip(c) {
                        *u += ck * xj;
                    }
                    for (u, &ck) in tail[j..n].iter_mut().zip(c) {
                        *u += ck * xi;
                    }
                }
            }
        }
    }

    fn evaluate(&self, n: usize, x: &[f64], order: Order) -> Partial {
        let ranges = balanced_ranges(&self.offsets, chunk_count(n, self.coeffs.len(), order));
        let parts: Vec<Partial> = if ranges.len() == 1 {
            vec![self.accumulate(n, x, 0..n, order)]
        } else {
            ranges
                .into_par_iter()
                .map(|r| self.accumulate(n, x, r, order))
                .collect()
        };
        // fixed summation order keeps results independent of thread count
        let mut iter = parts.into_iter();
        let mut total = iter.next().unwrap_or_default();
        for part in iter {
            total.energy += part.energy;
            for (a, b) in total.grad.iter_mut().zip(&part.grad) {
                *a += b;
            }
            for (a, b) in total.upper.iter_mut().zip(&part.upper) {
                *a += b;
            }
        }
        total
    }

    fn line_polynomial(&self, n: usize, x: &[f64], dir: &[f64]) -> Vec<f64> {
        let p = self.p;
        let dot2 = |c: &[f64], from: usize| -> (f64, f64) {
            c.iter()
                .zip(&x[from..])
                .zip(&dir[from..])
                .fold((0.0, 0.0), |(a, b), ((&ck, &xk), &dk)| (a + ck * xk, b + ck * dk))
        };
        let run = |range: std::ops::Range<usize>| {
            let mut acc = vec![0.0; p + 1];
            if p == 2 {
                for i in range {
                    let base = self.offsets[i];
                    let (px, pd) = dot2(&self.coeffs[base..base + (n - i)], i);
                    acc[0] += x[i] * px;
                    acc[1] += x[i] * pd + dir[i] * px;
                    acc[2] += dir[i] * pd;
                }
                return acc;
            }
            if p == 3 {
                for i in range {
                    let mut idx = self.offsets[i];
                    for j in i..n {
                        let len = n - j;
                        let (px, pd) = dot2(&self.coeffs[idx..idx + len], j);
                        idx += len;
                        let a0 = x[i] * x[j];
                        let a1 = x[i] * dir[j] + dir[i] * x[j];
                        let a2 = dir[i] * dir[j];
                        acc[0] += a0 * px;
                        acc[1] += a0 * pd + a1 * px;
                        acc[2] += a1 * pd + a2 * px;
                        acc[3] += a2 * pd;
                    }
                }
                return acc;
            }
            let mut poly = vec![0.0; p + 1];
            for_each_tuple(n, p, range, &self.offsets, |t, idx| {
                poly.iter_mut().for_each(|c| *c = 0.0);
                poly[0] = 1.0;
                for (deg, &i) in t.iter().enumerate() {
                    let (a, b) = (x[i], dir[i]);
                    for m in (0..=deg + 1).rev() {
                        let lower = if m > 0 { poly[m - 1] } else { 0.0 };
                        poly[m] = poly[m] * a + lower * b;
                    }
                }
                let j = self.coeffs[idx];
                for (c, v) in acc.iter_mut().zip(&poly) {
                    *c += j * v;
                }
            });
            acc
        };
        let ranges = balanced_ranges(&self.offsets, chunk_count(n, self.coeffs.len(), Order::Gradient));
        let parts: Vec<Vec<f64>> = ranges.into_par_iter().map(run).collect();
        let mut total = vec![0.0; p + 1];
        for part in parts {
            for (a, b) in total.iter_mut().zip(part) {
                *a += b;
            }
        }
        total
    }
}

impl Disorder {
    pub fn mixture(&self) -> &Mixture {
        &self.mixture
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Symmetrized coefficients of degree `p` in sorted-tuple order.
    pub fn coefficients(&self, p: u32) -> Option<&[f64]> {
        self.tensors
            .iter()
            .find(|t| t.p == p as usize)
            .map(|t| t.coeffs.as_slice())
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.dim() != self.n {
            return Err(Error::Argument(format!(
                "point has dimension {}, disorder has N = {}",
                x.dim(),
                self.n
            )));
        }
        Ok(())
    }

    /// Energy with Euclidean derivatives up to `order`, in one pass over
    /// the coefficients of each degree.
    pub fn evaluate(&self, x: &Point, order: Order) -> Result<Evaluation> {
        self.check_dim(x)?;
        let n = self.n;
        let xs = x.coords().as_slice();
        let mut energy = 0.0;
        let mut grad = vec![0.0; if order >= Order::Gradient { n } else { 0 }];
        let mut upper = vec![0.0; if order >= Order::Hessian { n * n } else { 0 }];
        for tensor in &self.tensors {
            let part = tensor.evaluate(n, xs, order);
            energy += tensor.scale * part.energy;
            for (a, b) in grad.iter_mut().zip(&part.grad) {
                *a += tensor.scale * b;
            }
            for (a, b) in upper.iter_mut().zip(&part.upper) {
                *a += tensor.scale * b;
            }
        }
        let gradient = (order >= Order::Gradient).then(|| DVector::from_vec(grad));
        let hessian = (order >= Order::Hessian).then(|| {
            DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Less => upper[i * n + j],
                std::cmp::Ordering::Greater => upper[j * n + i],
                std::cmp::Ordering::Equal => 2.0 * upper[i * n + i],
            })
        });
        Ok(Evaluation {
            energy,
            gradient,
            hessian,
        })
    }

    pub fn energy(&self, x: &Point) -> Result<f64> {
        Ok(self.evaluate(x, Order::Energy)?.energy)
    }

    pub fn euclidean_gradient(&self, x: &Point) -> Result<DVector<f64>> {
        Ok(self
            .evaluate(x, Order::Gradient)?
            .gradient
            .expect("gradient requested"))
    }

    pub fn euclidean_hessian(&self, x: &Point) -> Result<DMatrix<f64>> {
        Ok(self
            .evaluate(x, Order::Hessian)?
            .hessian
            .expect("hessian requested"))
    }

    /// Gradient projected onto the orthogonal complement of `x`.
    pub fn projected_gradient(&self, x: &Point) -> Result<DVector<f64>> {
        let g = self.euclidean_gradient(x)?;
        project_gradient(&g, x)
    }

    /// `M H M` with `M = I - x x^T / |x|^2`.
    pub fn projected_hessian(&self, x: &Point) -> Result<DMatrix<f64>> {
        let h = self.euclidean_hessian(x)?;
        project_hessian(&h, x)
    }

    /// Coefficients `c_0..c_deg` of the polynomial `s -> H(x + s dir)`.
    pub fn line_polynomial(&self, x: &Point, dir: &DVector<f64>) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if dir.len() != self.n {
            return Err(Error::Argument(format!(
                "direction has dimension {}, disorder has N = {}",
                dir.len(),
                self.n
            )));
        }
        let mut total = vec![0.0; self.mixture.degree() as usize + 1];
        for tensor in &self.tensors {
            let c = tensor.line_polynomial(self.n, x.coords().as_slice(), dir.as_slice());
            for (a, b) in total.iter_mut().zip(c) {
                *a += tensor.scale * b;
            }
        }
        Ok(total)
    }
}

fn unit_of(x: &Point) -> Result<DVector<f64>> {
    let norm = x.coords().norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Domain {
            what: "point",
            detail: format!("projection needs 0 < |x| < inf (got |x| = {norm})"),
        });
    }
    Ok(x.coords() / norm)
}

/// `M g` for `M = I - x x^T / |x|^2`.
pub fn project_gradient(g: &DVector<f64>, x: &Point) -> Result<DVector<f64>> {
    let u = unit_of(x)?;
    let along = u.dot(g);
    Ok(g - &u * along)
}

/// `M H M` for `M = I - x x^T / |x|^2`, in `O(N^2)`.
pub fn project_hessian(h: &DMatrix<f64>, x: &Point) -> Result<DMatrix<f64>> {
    let u = unit_of(x)?;
    let w = h * &u;
    let c = u.dot(&w);
    let n = u.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        h[(i, j)] - (u[i] * w[j] + w[i] * u[j]) + c * (u[i] * u[j])
    }))
}

/// `E[H(x) H(y)] = N nu(x . y / N)`.
pub fn covariance_expectation(mixture: &Mixture, x: &Point, y: &Point) -> f64 {
    let n = x.dim() as f64;
    n * mixture.deriv(x.coords().dot(y.coords()) / n, 0)
}

/// Derivatives of `s -> sum c_m s^m` of the given order at `s`.
pub fn poly_derivative(coeffs: &[f64], order: usize, s: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(order)
        .rev()
        .fold(0.0, |acc, (m, c)| {
            let falling: f64 = (0..order).map(|i| (m - i) as f64).product();
            acc * s + c * falling
        })
}
