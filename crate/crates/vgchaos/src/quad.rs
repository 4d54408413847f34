//! Quadrature primitives: adaptive Simpson integration and Gauss-Hermite
//! rules.

use crate::error::{Result, VgError};
use nalgebra::{DMatrix, SymmetricEigen};

/// Adaptive Simpson on `[a, b]`.
///
/// `tol` is an absolute tolerance for the whole interval; it is divided
/// between subintervals in the usual way. The interval is seeded with
/// `initial_panels` splits so narrow features away from the midpoint are
/// not missed.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64
where
    F: Fn(f64) -> f64,
{
    adaptive_simpson_panels(f, a, b, tol, max_depth, 8)
}

pub fn adaptive_simpson_panels<F>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
    initial_panels: usize,
) -> f64
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    let panels = initial_panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == panels { b } else { lo + h };
        let m = 0.5 * (lo + hi);
        let (flo, fm, fhi) = (f(lo), f(m), f(hi));
        let whole = simpson(lo, hi, flo, fm, fhi);
        total += simpson_rec(
            f,
            lo,
            hi,
            flo,
            fm,
            fhi,
            whole,
            tol / panels as f64,
            max_depth,
        );
    }
    total
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Gauss-Hermite rule for the physicists' weight `exp(-x^2)`.
///
/// Nodes and weights come from the symmetric eigenvalue problem of the
/// Jacobi matrix (Golub-Welsch); the weight attached to node `x_i` is
/// `sqrt(pi) * v_{0,i}^2` with `v` the normalized eigenvector.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 512 {
            return Err(VgError::InvalidParameter {
                name: "n",
                reason: format!("Gauss-Hermite size {n} outside 1..=512"),
            });
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let beta = (k as f64 / 2.0).sqrt();
            jac[(k - 1, k)] = beta;
            jac[(k, k - 1)] = beta;
        }
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let node = eig.eigenvalues[i];
                let v0 = eig.eigenvectors[(0, i)];
                (node, std::f64::consts::PI.sqrt() * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(GaussHermite {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Integral of `f(x) exp(-x^2)` over the line.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Expectation of `g(Z)` for a standard normal `Z`.
    pub fn gaussian_expectation<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        let c = 1.0 / std::f64::consts::PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| c * w * g(std::f64::consts::SQRT_2 * x))
            .sum()
    }
}
