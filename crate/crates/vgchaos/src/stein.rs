//! Numerical Stein machinery for Variance-Gamma targets.
//!
//! Three layers:
//!
//! - characterization residuals: quadrature of the second-order Stein
//!   operator applied to a test function against the target density;
//!   the residual vanishes exactly on the target law, which re-derives the
//!   moment recursions numerically;
//! - explicit solution bounds `c_0, c_1, c_2^1, c_2^2` for symmetric
//!   targets with integer shape (the only case with closed-form
//!   constants; everything else is non-constructive and never fabricated
//!   here);
//! - a spectral collocation solver for the Stein equation
//!   `sigma^2 (x + r theta) f'' + (sigma^2 r + 2 theta (x + r theta)) f' - x f
//!    = h - E[h(Y)]`
//!   on a truncated symmetric interval, with boundedness enforced through
//!   asymptotic Robin conditions that damp the growing homogeneous
//!   solution.
//!
//! The equation has a regular singular point where the leading coefficient
//! `sigma^2 (x + r theta)` vanishes; the grid never places a node exactly
//! there (odd interval count keeps the centre off the grid) and the
//! bounded solution stays regular across it.

use crate::error::{Result, VgError};
use crate::gamma::gamma;
use crate::quad::GaussHermite;
use crate::vgdist::{vg_expectation, VGParams};
use nalgebra::{DMatrix, DVector};

/// Bounds on the Stein solution and its derivatives for a symmetric
/// target with rate `lambda` and integer shape `r`:
/// `||f|| <= c0 ||h - E h||`, `||f'|| <= c1 ||h - E h||`,
/// `||f''|| <= c2_1 ||h'|| + c2_2 ||h - E h||`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteinConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2_1: f64,
    pub c2_2: f64,
}

/// Closed-form constants; stated for positive integer shapes only, and
/// explicitly refused outside that hypothesis rather than extrapolated.
pub fn stein_constants(lambda: f64, shape: f64) -> Result<SteinConstants> {
    if !(lambda > 0.0) {
        return Err(VgError::InvalidParameter {
            name: "lambda",
            reason: format!("rate must be positive, got {lambda}"),
        });
    }
    if !(shape > 0.0) || shape.fract() != 0.0 {
        return Err(VgError::SteinConstantsShape { r: shape });
    }
    let r = shape;
    let pi = std::f64::consts::PI;
    let c0 = (1.0 / lambda.sqrt()) * (1.0 / r + pi * gamma(0.5 * r) / (2.0 * gamma(0.5 * r + 0.5)));
    let c1 = (1.0 / lambda) * (1.0 / r + 1.0 / (r + 1.0));
    let tail = (pi.sqrt() / (2.0 * r + 3.0).sqrt()) + 1.0 / r;
    let c2_1 = 3.0 / lambda * tail;
    let c2_2 = 4.0 / lambda.powf(1.5) * tail;
    Ok(SteinConstants { c0, c1, c2_1, c2_2 })
}

/// A test function with two derivatives. `growth_degree` bounds its
/// polynomial growth so expectation quadrature can size its domain.
pub trait TestFunction {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
    fn growth_degree(&self) -> usize {
        2
    }
}

/// Dense polynomial with exact derivatives (ascending coefficients).
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }

    /// The monomial `x^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Polynomial { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![0.0]);
        }
        Polynomial {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        }
    }
}

impl TestFunction for Polynomial {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }
    fn d1(&self, x: f64) -> f64 {
        self.derivative().eval(x)
    }
    fn d2(&self, x: f64) -> f64 {
        self.derivative().derivative().eval(x)
    }
    fn growth_degree(&self) -> usize {
        self.degree()
    }
}

/// Test function from three closures (value, first and second derivative).
pub struct SmoothFn<F0, F1, F2>
where
    F0: Fn(f64) -> f64,
    F1: Fn(f64) -> f64,
    F2: Fn(f64) -> f64,
{
    pub f: F0,
    pub df: F1,
    pub d2f: F2,
}

impl<F0, F1, F2> TestFunction for SmoothFn<F0, F1, F2>
where
    F0: Fn(f64) -> f64,
    F1: Fn(f64) -> f64,
    F2: Fn(f64) -> f64,
{
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn d1(&self, x: f64) -> f64 {
        (self.df)(x)
    }
    fn d2(&self, x: f64) -> f64 {
        (self.d2f)(x)
    }
    fn growth_degree(&self) -> usize {
        0
    }
}

fn mean_zero_law(p: &VGParams) -> Result<VGParams> {
    if p.mu() == 0.0 || p.mean() == 0.0 {
        Ok(p.to_mean_zero())
    } else {
        Err(VgError::NotCentred { mean: p.mean() })
    }
}

/// Residual of the symmetric-target characterization
/// `E[(1/lambda^2) Y f''(Y) + (2 shape / lambda^2) f'(Y) - Y f(Y)]`
/// under the true law (zero there for every admissible `f`).
pub fn residual_symgamma(lambda: f64, shape: f64, f: &dyn TestFunction) -> Result<f64> {
    if !(lambda > 0.0 && shape > 0.0) {
        return Err(VgError::InvalidParameter {
            name: "lambda/shape",
            reason: "must be positive".into(),
        });
    }
    let p = VGParams::centred(2.0 * shape, 0.0, 1.0 / lambda)?;
    let il2 = 1.0 / (lambda * lambda);
    vg_expectation(
        &p,
        |x| il2 * x * f.d2(x) + 2.0 * shape * il2 * f.d1(x) - x * f.value(x),
        f.growth_degree() + 1,
    )
}

/// Residual of the Variance-Gamma characterization
/// `E[sigma^2 (Y + r theta) f''(Y) + (sigma^2 r + 2 theta (Y + r theta)) f'(Y) - Y f(Y)]`
/// under the mean-zero law with `p`'s shape parameters.
pub fn residual_vg(p: &VGParams, f: &dyn TestFunction) -> Result<f64> {
    let law = mean_zero_law(p)?;
    let (r, th, s2) = (law.r(), law.theta(), law.sigma() * law.sigma());
    vg_expectation(
        &law,
        |x| s2 * (x + r * th) * f.d2(x) + (s2 * r + 2.0 * th * (x + r * th)) * f.d1(x) - x * f.value(x),
        f.growth_degree() + 1,
    )
}

/// Laplace second-derivative identity `E[f(Y)] - f(0) - b^2 E[f''(Y)]`.
pub fn laplace_identity(b: f64, f: &dyn TestFunction) -> Result<f64> {
    if !(b > 0.0) {
        return Err(VgError::InvalidParameter {
            name: "b",
            reason: format!("scale must be positive, got {b}"),
        });
    }
    let p = VGParams::centred(2.0, 0.0, b)?;
    let lhs = vg_expectation(&p, |x| f.value(x), f.growth_degree())?;
    let rhs = vg_expectation(&p, |x| f.d2(x), f.growth_degree())?;
    Ok(lhs - f.value(0.0) - b * b * rhs)
}

/// Gaussian first-order residual `E[f'(Z) - Z f(Z)]` by Gauss-Hermite
/// quadrature.
pub fn normal_residual(f: &dyn TestFunction) -> f64 {
    let gh = GaussHermite::new(96).expect("static size");
    gh.gaussian_expectation(|z| f.d1(z) - z * f.value(z))
}

/// Grid specification for the collocation solver.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Number of collocation points (forced even so the interval count is
    /// odd and the centre stays off the grid).
    pub points: usize,
    /// Override for the truncation half-width; by default the domain is
    /// cut where the target density mass beyond is below `1e-12`.
    pub truncation: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 512,
            truncation: None,
        }
    }
}

/// Tabulated solution of the Stein equation with derivatives, plus the
/// interior residual achieved.
#[derive(Debug, Clone)]
pub struct SteinSolution {
    xs: Vec<f64>,
    f: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    weights: Vec<f64>,
    pub expectation_h: f64,
    pub max_interior_residual: f64,
}

impl SteinSolution {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }
    pub fn values(&self) -> &[f64] {
        &self.f
    }
    pub fn derivatives(&self) -> (&[f64], &[f64]) {
        (&self.f1, &self.f2)
    }

    fn interp(&self, ys: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xj, &wj), &yj) in self.xs.iter().zip(&self.weights).zip(ys) {
            let dx = x - xj;
            if dx == 0.0 {
                return yj;
            }
            let c = wj / dx;
            num += c * yj;
            den += c;
        }
        num / den
    }

    /// `(f, f', f'')` at an arbitrary point by barycentric interpolation
    /// of the collocation data.
    pub fn evaluate(&self, x: f64) -> (f64, f64, f64) {
        (
            self.interp(&self.f, x),
            self.interp(&self.f1, x),
            self.interp(&self.f2, x),
        )
    }

    pub fn sup_f(&self) -> f64 {
        self.f.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
    pub fn sup_f1(&self) -> f64 {
        self.f1.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
    pub fn sup_f2(&self) -> f64 {
        self.f2.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// CSV rows `x, f, f', f''`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,f,f_prime,f_second\n");
        for i in 0..self.xs.len() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.xs[i], self.f[i], self.f1[i], self.f2[i]
            ));
        }
        s
    }
}

impl TestFunction for SteinSolution {
    fn value(&self, x: f64) -> f64 {
        self.interp(&self.f, x)
    }
    fn d1(&self, x: f64) -> f64 {
        self.interp(&self.f1, x)
    }
    fn d2(&self, x: f64) -> f64 {
        self.interp(&self.f2, x)
    }
    fn growth_degree(&self) -> usize {
        0
    }
}

/// Collocation solver; factors the operator once and solves per test
/// function.
pub struct SteinSolver {
    law: VGParams,
    truncation: f64,
    xs: Vec<f64>,        // ascending physical nodes
    weights: Vec<f64>,   // barycentric weights
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    row_scale: Vec<f64>,
    residual_tolerance: f64,
}

impl SteinSolver {
    pub fn new(p: &VGParams, grid: &GridSpec) -> Result<Self> {
        let law = mean_zero_law(p)?;
        let points = grid.points.max(32) & !1; // even point count
        let n = points - 1; // odd interval count: no node at the centre
        let t = match grid.truncation {
            Some(t) => t,
            None => {
                // Mass beyond T below 1e-12: exponential tails with the
                // slower of the two rates.
                let (rl, rr) = law.tail_rates();
                let rate = rl.min(rr);
                let scale = law.variance().sqrt();
                let mut t = (30.0 / rate).max(4.0 * scale);
                while t < 1e6 && (-(rate * t)).exp() / rate > 1e-13 {
                    t *= 1.2;
                }
                t + law.mean().abs() + law.mu().abs()
            }
        };

        // Chebyshev-Gauss-Lobatto nodes, descending in j, ascending in x
        // after the flip below.
        let raw: Vec<f64> = (0..=n).map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos()).collect();
        // Exact antisymmetry x_j = -x_{n-j} helps the singular point stay
        // off the grid.
        let mut xs_cheb = raw.clone();
        for j in 0..=n / 2 {
            let v = 0.5 * (raw[j] - raw[n - j]);
            xs_cheb[j] = v;
            xs_cheb[n - j] = -v;
        }
        let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
        let m = n + 1;
        let mut d = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            let mut row_sum = 0.0;
            for j in 0..m {
                if i != j {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let v = c(i) / c(j) * sign / (xs_cheb[i] - xs_cheb[j]);
                    d[(i, j)] = v;
                    row_sum += v;
                }
            }
            d[(i, i)] = -row_sum; // negative-sum trick
        }
        // Physical scaling: x_phys = T * x_cheb.
        let d1 = d.map(|v| v / t);
        let d2 = &d1 * &d1;
        let xs_phys: Vec<f64> = xs_cheb.iter().map(|&x| t * x).collect();

        let (r, th, s2) = (law.r(), law.theta(), law.sigma() * law.sigma());
        let dd = (th * th + s2).sqrt();
        let m_plus = (-th + dd) / s2;
        let m_minus = (-th - dd) / s2;

        let coeff_a = |x: f64| s2 * (x + r * th);
        let coeff_b = |x: f64| s2 * r + 2.0 * th * (x + r * th);

        let mut mat = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            let x = xs_phys[i];
            if i == 0 {
                // x = +T: f' - m_minus f = beta_plus (decaying-mode Robin).
                for j in 0..m {
                    mat[(0, j)] = d1[(0, j)];
                }
                mat[(0, 0)] -= m_minus;
            } else if i == n {
                // x = -T: f' - m_plus f = beta_minus.
                for j in 0..m {
                    mat[(n, j)] = d1[(n, j)];
                }
                mat[(n, n)] -= m_plus;
            } else {
                let (a, b) = (coeff_a(x), coeff_b(x));
                for j in 0..m {
                    mat[(i, j)] = a * d2[(i, j)] + b * d1[(i, j)];
                }
                mat[(i, i)] -= x; // c(x) = -x
            }
        }
        // Row equilibration keeps the LU well conditioned despite the
        // N^2/T scale of the differentiation rows.
        let mut row_scale = vec![1.0; m];
        for i in 0..m {
            let mut mx = 0.0f64;
            for j in 0..m {
                mx = mx.max(mat[(i, j)].abs());
            }
            let s = if mx > 0.0 { 1.0 / mx } else { 1.0 };
            row_scale[i] = s;
            for j in 0..m {
                mat[(i, j)] *= s;
            }
        }
        let lu = mat.lu();

        // Ascending storage for interpolation and export.
        let mut xs = xs_phys.clone();
        xs.reverse();
        let mut weights: Vec<f64> = (0..m)
            .map(|j| {
                let base = if j == 0 || j == n { 0.5 } else { 1.0 };
                if j % 2 == 0 {
                    base
                } else {
                    -base
                }
            })
            .collect();
        weights.reverse();

        Ok(SteinSolver {
            law,
            truncation: t,
            xs,
            weights,
            d1,
            d2,
            lu,
            row_scale,
            residual_tolerance: 1e-6,
        })
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn solve(&self, h: &dyn TestFunction) -> Result<SteinSolution> {
        let m = self.xs.len();
        let n = m - 1;
        let t = self.truncation;
        let law = &self.law;
        let (r, th, s2) = (law.r(), law.theta(), law.sigma() * law.sigma());
        let dd = (th * th + s2).sqrt();
        let m_plus = (-th + dd) / s2;
        let m_minus = (-th - dd) / s2;
        let eh = vg_expectation(law, |x| h.value(x), h.growth_degree())?;
        let rhs_fn = |x: f64| h.value(x) - eh;

        // Descending (Chebyshev) order for the linear system.
        let xs_desc: Vec<f64> = self.xs.iter().rev().copied().collect();
        let mut rhs = DVector::<f64>::zeros(m);
        for i in 1..n {
            rhs[i] = rhs_fn(xs_desc[i]);
        }
        // Asymptotic particular solution f ~ -rhs(x)/x fixes the Robin data.
        let (r_hi, dh_hi) = (rhs_fn(t), h.d1(t));
        rhs[0] = -dh_hi / t + r_hi / (t * t) + m_minus * r_hi / t;
        let (r_lo, dh_lo) = (rhs_fn(-t), h.d1(-t));
        rhs[n] = dh_lo / t + r_lo / (t * t) - m_plus * r_lo / t;
        for i in 0..m {
            rhs[i] *= self.row_scale[i];
        }

        let sol = self.lu.solve(&rhs).ok_or_else(|| VgError::QuadratureFailure {
            context: "collocation matrix is singular".into(),
        })?;
        let f1 = &self.d1 * &sol;
        let f2 = &self.d2 * &sol;

        let mut f_vals: Vec<f64> = sol.iter().copied().collect();
        let mut f1_vals: Vec<f64> = f1.iter().copied().collect();
        let mut f2_vals: Vec<f64> = f2.iter().copied().collect();
        f_vals.reverse();
        f1_vals.reverse();
        f2_vals.reverse();

        let mut solution = SteinSolution {
            xs: self.xs.clone(),
            f: f_vals,
            f1: f1_vals,
            f2: f2_vals,
            weights: self.weights.clone(),
            expectation_h: eh,
            max_interior_residual: 0.0,
        };

        // Residual between nodes on the interior 80% of the domain.
        let mut max_res = 0.0f64;
        let mut max_at = 0.0f64;
        for i in 0..n {
            let x = 0.5 * (self.xs[i] + self.xs[i + 1]);
            if x.abs() > 0.8 * t {
                continue;
            }
            let (pf, pf1, pf2) = solution.evaluate(x);
            let res = s2 * (x + r * th) * pf2 + (s2 * r + 2.0 * th * (x + r * th)) * pf1
                - x * pf
                - rhs_fn(x);
            if res.abs() > max_res {
                max_res = res.abs();
                max_at = x;
            }
        }
        solution.max_interior_residual = max_res;
        if max_res > self.residual_tolerance {
            return Err(VgError::SteinSolveResidual {
                max_residual: max_res,
                at: max_at,
                tolerance: self.residual_tolerance,
            });
        }
        Ok(solution)
    }
}

/// One-shot convenience wrapper around [`SteinSolver`].
pub fn solve_stein(p: &VGParams, h: &dyn TestFunction, grid: &GridSpec) -> Result<SteinSolution> {
    SteinSolver::new(p, grid)?.solve(h)
}
