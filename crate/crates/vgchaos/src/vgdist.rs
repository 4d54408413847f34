//! The Variance-Gamma family: exact analytics and sampling.
//!
//! A `VGParams { r, theta, sigma, mu }` law has density
//!
//! ```text
//! p(x) = exp(theta (x - mu) / sigma^2) / (sigma sqrt(pi) Gamma(r/2))
//!        * (|x - mu| / (2 D))^{(r-1)/2} * K_{(r-1)/2}(D |x - mu| / sigma^2)
//! ```
//!
//! with `D = sqrt(theta^2 + sigma^2)`. Its mean is `mu + r theta` and its
//! variance `r (sigma^2 + 2 theta^2)`.
//!
//! Two centring conventions appear in practice and both are supported
//! explicitly: [`VGParams::centred`] fixes the density location `mu = 0`
//! (the law of natural representatives such as products of correlated
//! normals, mean `r theta`), while [`VGParams::mean_zero`] shifts by
//! `mu = -r theta` so the law has mean zero. Cumulant and moment formulas,
//! the Stein operator and all distance bounds refer to the mean-zero
//! representative; `vg_cumulants`/`vg_moments` therefore accept either
//! convention and always describe the mean-zero law.

use crate::bessel::bessel_k_scaled;
use crate::empirical::SampleSet;
use crate::error::{Result, VgError};
use crate::gamma::ln_gamma;
use crate::quad::adaptive_simpson_panels;
use crate::rng::SeedStream;
use rand_distr::{Distribution, Gamma as GammaDist, StandardNormal};
use serde::{Deserialize, Serialize};

/// Parameters `(r, theta, sigma, mu)` of a Variance-Gamma law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VGParams {
    r: f64,
    theta: f64,
    sigma: f64,
    mu: f64,
}

impl VGParams {
    pub fn new(r: f64, theta: f64, sigma: f64, mu: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(VgError::InvalidParameter {
                name: "r",
                reason: format!("shape must be positive and finite, got {r}"),
            });
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(VgError::InvalidParameter {
                name: "sigma",
                reason: format!("tail scale must be positive and finite, got {sigma}"),
            });
        }
        if !theta.is_finite() || !mu.is_finite() {
            return Err(VgError::InvalidParameter {
                name: "theta/mu",
                reason: "asymmetry and location must be finite".into(),
            });
        }
        Ok(VGParams { r, theta, sigma, mu })
    }

    /// Density location at the origin (mean `r * theta`).
    pub fn centred(r: f64, theta: f64, sigma: f64) -> Result<Self> {
        Self::new(r, theta, sigma, 0.0)
    }

    /// Shifted so the law has mean zero (`mu = -r * theta`).
    pub fn mean_zero(r: f64, theta: f64, sigma: f64) -> Result<Self> {
        Self::new(r, theta, sigma, -r * theta)
    }

    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mean(&self) -> f64 {
        self.mu + self.r * self.theta
    }

    pub fn variance(&self) -> f64 {
        self.r * (self.sigma * self.sigma + 2.0 * self.theta * self.theta)
    }

    /// The mean-zero representative with the same `(r, theta, sigma)`.
    pub fn to_mean_zero(&self) -> VGParams {
        VGParams {
            mu: -self.r * self.theta,
            ..*self
        }
    }

    /// Exponential decay rates of the left and right density tails.
    pub fn tail_rates(&self) -> (f64, f64) {
        let d = (self.theta * self.theta + self.sigma * self.sigma).sqrt();
        let s2 = self.sigma * self.sigma;
        ((d + self.theta) / s2, (d - self.theta) / s2)
    }

    fn is_centred_convention(&self) -> bool {
        self.mu == 0.0 || (self.mu + self.r * self.theta).abs() <= 1e-12 * (1.0 + self.variance().sqrt())
    }
}

/// Cumulants `kappa_1..kappa_6` of a (mean-zero) law plus the standard
/// moment conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantSet {
    kappa: [f64; 6],
}

impl CumulantSet {
    pub fn from_kappas(kappa: [f64; 6]) -> Self {
        CumulantSet { kappa }
    }

    /// `j` is the cumulant order, 1..=6.
    pub fn kappa(&self, j: usize) -> f64 {
        assert!((1..=6).contains(&j), "cumulant order {j} outside 1..=6");
        self.kappa[j - 1]
    }

    pub fn kappas(&self) -> [f64; 6] {
        self.kappa
    }

    /// Raw moments `m_1..m_6` of the mean-zero law with these cumulants.
    pub fn to_moments(&self) -> [f64; 6] {
        assert!(
            self.kappa[0] == 0.0,
            "moment conversion implemented for mean-zero laws only"
        );
        let [_, k2, k3, k4, k5, k6] = self.kappa;
        [
            0.0,
            k2,
            k3,
            k4 + 3.0 * k2 * k2,
            k5 + 10.0 * k3 * k2,
            k6 + 15.0 * k4 * k2 + 10.0 * k3 * k3 + 15.0 * k2 * k2 * k2,
        ]
    }

    /// Inverse of [`CumulantSet::to_moments`].
    pub fn from_moments(m: [f64; 6]) -> Self {
        assert!(m[0] == 0.0, "moment conversion implemented for mean-zero laws only");
        let [_, m2, m3, m4, m5, m6] = m;
        CumulantSet {
            kappa: [
                0.0,
                m2,
                m3,
                m4 - 3.0 * m2 * m2,
                m5 - 10.0 * m3 * m2,
                m6 - 15.0 * m4 * m2 - 10.0 * m3 * m3 + 30.0 * m2 * m2 * m2,
            ],
        }
    }
}

/// Density of the law `p` at `x`.
///
/// At the location point the density is finite only for `r > 1`;
/// for `r <= 1` the (integrable) singularity is reported as
/// [`VgError::PoleAtLocation`] so quadrature callers split the domain.
pub fn vg_density(p: &VGParams, x: f64) -> Result<f64> {
    let z = (x - p.mu).abs();
    let nu = 0.5 * (p.r - 1.0);
    let s2 = p.sigma * p.sigma;
    let d = (p.theta * p.theta + s2).sqrt();
    let ln_pref = -p.sigma.ln() - 0.5 * std::f64::consts::PI.ln() - ln_gamma(0.5 * p.r);
    if z == 0.0 {
        if p.r > 1.0 {
            // z^nu K_nu(c z) -> Gamma(nu) 2^{nu-1} c^{-nu}; c = D / sigma^2.
            let ln_limit = ln_pref + ln_gamma(nu) + (nu - 1.0) * std::f64::consts::LN_2
                + nu * (s2 / (2.0 * d * d)).ln();
            return Ok(ln_limit.exp());
        }
        return Err(VgError::PoleAtLocation { r: p.r });
    }
    let y = d * z / s2;
    let k_scaled = bessel_k_scaled(nu.abs(), y)?;
    let ln_density = ln_pref + p.theta * (x - p.mu) / s2 - y + nu * (z / (2.0 * d)).ln() + k_scaled.ln();
    Ok(ln_density.exp())
}

/// Cumulants of the mean-zero law with `p`'s shape parameters.
///
/// Requires `p` in one of the two centred conventions (`mu = 0` or
/// `mu = -r theta`); a generic shifted law is rejected.
pub fn vg_cumulants(p: &VGParams) -> Result<CumulantSet> {
    if !p.is_centred_convention() {
        return Err(VgError::NotCentred { mean: p.mean() });
    }
    let (r, t, s) = (p.r, p.theta, p.sigma);
    let (t2, s2) = (t * t, s * s);
    Ok(CumulantSet::from_kappas([
        0.0,
        r * (s2 + 2.0 * t2),
        2.0 * r * t * (3.0 * s2 + 4.0 * t2),
        6.0 * r * (s2 * s2 + 8.0 * s2 * t2 + 8.0 * t2 * t2),
        24.0 * r * t * (5.0 * s2 * s2 + 20.0 * s2 * t2 + 16.0 * t2 * t2),
        120.0 * r * (s2 + 2.0 * t2) * (s2 * s2 + 16.0 * s2 * t2 + 16.0 * t2 * t2),
    ]))
}

/// Raw moments `m_1..m_6` of the mean-zero law, through the recursive
/// relations implied by the Stein characterization.
pub fn vg_moments(p: &VGParams) -> Result<[f64; 6]> {
    if !p.is_centred_convention() {
        return Err(VgError::NotCentred { mean: p.mean() });
    }
    let (r, t, s) = (p.r, p.theta, p.sigma);
    let s2 = s * s;
    let m2 = r * (s2 + 2.0 * t * t);
    let m3 = 2.0 * r * t * s2 + 4.0 * t * m2;
    let m4 = (3.0 * s2 * (2.0 + r) + 6.0 * r * t * t) * m2 + 6.0 * t * m3;
    let m5 = 12.0 * r * t * s2 * m2 + (8.0 * r * t * t + 4.0 * r * s2 + 12.0 * s2) * m3 + 8.0 * t * m4;
    let m6 = 20.0 * r * t * s2 * m3 + (5.0 * s2 * (4.0 + r) + 10.0 * r * t * t) * m4 + 10.0 * t * m5;
    Ok([0.0, m2, m3, m4, m5, m6])
}

/// Truncation point: beyond `T` (distance from the location) the density
/// times a polynomial weight of the given degree is below `exp(-margin)`
/// relative scale.
fn truncation(p: &VGParams, rate: f64, poly_degree: usize, margin: f64) -> f64 {
    let scale = p.variance().sqrt().max(p.sigma);
    let mut t = (margin / rate).max(2.0 * scale);
    for _ in 0..200 {
        let need = margin + poly_degree as f64 * t.max(1.0).ln() + (0.5 * (p.r - 1.0)).max(0.0) * t.max(1.0).ln();
        if rate * t >= need {
            break;
        }
        t *= 1.25;
    }
    t
}

/// `E[g(Y)]` for `Y ~ p`, by adaptive quadrature with the domain split at
/// the location point (substituting `x = mu ± u^2` there so the integrable
/// singularity of small-shape densities is flattened).
///
/// `poly_degree` bounds the polynomial growth of `g` and widens the
/// truncated domain accordingly.
pub fn vg_expectation<F>(p: &VGParams, g: F, poly_degree: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (rate_l, rate_r) = p.tail_rates();
    let t_l = truncation(p, rate_l, poly_degree, 45.0);
    let t_r = truncation(p, rate_r, poly_degree, 45.0);
    let lo = p.mu - t_l;
    let hi = p.mu + t_r;

    let dens = |x: f64| vg_density(p, x).unwrap_or(0.0);
    // Probe a scale for the absolute tolerance.
    let mut scale = 0.0f64;
    for i in 0..=32 {
        let x = lo + (hi - lo) * i as f64 / 32.0;
        if x != p.mu {
            scale = scale.max((g(x) * dens(x)).abs());
        }
    }
    let tol = 1e-13 * scale.max(1e-300) * (hi - lo);

    // x = mu + u^2 on the right, x = mu - u^2 on the left.
    let right = {
        let f = |u: f64| {
            let x = p.mu + u * u;
            if x == p.mu {
                0.0
            } else {
                2.0 * u * g(x) * dens(x)
            }
        };
        adaptive_simpson_panels(&f, 0.0, t_r.sqrt(), 0.5 * tol, 48, 24)
    };
    let left = {
        let f = |u: f64| {
            let x = p.mu - u * u;
            if x == p.mu {
                0.0
            } else {
                2.0 * u * g(x) * dens(x)
            }
        };
        adaptive_simpson_panels(&f, 0.0, t_l.sqrt(), 0.5 * tol, 48, 24)
    };
    let v = left + right;
    if !v.is_finite() {
        return Err(VgError::QuadratureFailure {
            context: format!("vg_expectation produced {v}"),
        });
    }
    Ok(v)
}

/// i.i.d. draws via the normal variance-mean mixture
/// `Y = mu + theta V + sigma sqrt(V) Z` with `V ~ Gamma(r/2, scale 2)`.
pub fn vg_sample(p: &VGParams, n: usize, seed: u64) -> SampleSet {
    let stream = SeedStream::new(seed);
    // Marsaglia-Tsang style sampler from rand_distr; valid for all shapes,
    // including shape r/2 < 1 (product-of-normals case).
    let gamma = GammaDist::new(0.5 * p.r, 2.0).expect("validated parameters");
    let values = stream.generate(n, |rng| {
        let v: f64 = gamma.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        p.mu + p.theta * v + p.sigma * v.sqrt() * z
    });
    SampleSet::new(
        values,
        seed,
        format!(
            "vg_sample(r={},theta={},sigma={},mu={})",
            p.r, p.theta, p.sigma, p.mu
        ),
    )
    .expect("sampler produces finite values")
}

/// Tabulated CDF with monotone cubic interpolation; built once per
/// parameter set because quantile lookups sit in hot Monte Carlo loops.
#[derive(Debug, Clone)]
pub struct CdfTable {
    lo: f64,
    h: f64,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
}

impl CdfTable {
    pub fn build(p: &VGParams) -> Result<Self> {
        let (rate_l, rate_r) = p.tail_rates();
        let t_l = truncation(p, rate_l, 0, 40.0);
        let t_r = truncation(p, rate_r, 0, 40.0);
        let mut lo = p.mu - t_l;
        let hi = p.mu + t_r;
        let scale = p.variance().sqrt();
        let target_h = scale / 600.0;
        let n = (((hi - lo) / target_h).ceil() as usize).clamp(4096, 65536);
        let mut h = (hi - lo) / n as f64;
        // Keep the location point off the grid.
        let frac = ((p.mu - lo) / h).fract();
        if frac < 1e-6 || frac > 1.0 - 1e-6 {
            lo -= h / 3.0;
            h = (hi - lo) / n as f64;
        }

        let dens = |x: f64| vg_density(p, x).unwrap_or(f64::INFINITY);
        let mut pdf = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let d = dens(x);
            if !d.is_finite() {
                return Err(VgError::QuadratureFailure {
                    context: format!("density not finite at grid node x={x}"),
                });
            }
            pdf.push(d);
        }

        let mut cdf = Vec::with_capacity(n + 1);
        // Left tail is exponential with rate rate_l up to subpolynomial terms.
        cdf.push(pdf[0] / rate_l);
        for i in 0..n {
            let a = lo + i as f64 * h;
            let b = a + h;
            let mass = if a < p.mu && p.mu < b {
                singular_panel_mass(p, a, b)
            } else {
                let m = dens(0.5 * (a + b));
                h / 6.0 * (pdf[i] + 4.0 * m + pdf[i + 1])
            };
            cdf.push(cdf[i] + mass);
        }
        let total = cdf[n] + pdf[n] / rate_r;
        let inv = 1.0 / total;
        for v in cdf.iter_mut() {
            *v *= inv;
        }
        for v in pdf.iter_mut() {
            *v *= inv;
        }
        Ok(CdfTable { lo, h, cdf, pdf })
    }

    fn n(&self) -> usize {
        self.cdf.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.lo + self.h * self.n() as f64)
    }

    /// Interval-local monotone cubic (Fritsch-Carlson limited slopes).
    fn eval_interval(&self, i: usize, t: f64) -> (f64, f64) {
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        let delta = (c1 - c0) / self.h;
        let (mut m0, mut m1) = (self.pdf[i], self.pdf[i + 1]);
        if delta <= 0.0 {
            m0 = 0.0;
            m1 = 0.0;
        } else {
            let (a, b) = (m0 / delta, m1 / delta);
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                m0 = tau * a * delta;
                m1 = tau * b * delta;
            }
        }
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let value = h00 * c0 + h10 * self.h * m0 + h01 * c1 + h11 * self.h * m1;
        let d00 = 6.0 * t * (t - 1.0);
        let d10 = (1.0 - t) * (1.0 - 3.0 * t);
        let d01 = -d00;
        let d11 = t * (3.0 * t - 2.0);
        let deriv = (d00 * c0 + d01 * c1) / self.h + d10 * m0 + d11 * m1;
        (value, deriv)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let pos = (x - self.lo) / self.h;
        let i = (pos as usize).min(self.n() - 1);
        self.eval_interval(i, pos - i as f64).0
    }

    /// Inverse CDF by bracketed Newton on the interpolant.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(VgError::QuantileDomain { u });
        }
        let n = self.n();
        if u <= self.cdf[0] {
            return Ok(self.lo);
        }
        if u >= self.cdf[n] {
            return Ok(self.lo + self.h * n as f64);
        }
        let i = match self.cdf.binary_search_by(|c| c.total_cmp(&u)) {
            Ok(j) => j.min(n - 1),
            Err(j) => j.saturating_sub(1).min(n - 1),
        };
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        let mut t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        let (mut tlo, mut thi) = (0.0f64, 1.0f64);
        for _ in 0..64 {
            let (v, d) = self.eval_interval(i, t);
            let err = v - u;
            if err.abs() <= 1e-16 {
                break;
            }
            if err > 0.0 {
                thi = t;
            } else {
                tlo = t;
            }
            // d is d(cdf)/dx; the Newton step in interval coordinates
            // carries the extra factor h.
            let mut next = if d > 0.0 { t - err / (d * self.h) } else { f64::NAN };
            if !(next > tlo && next < thi) {
                next = 0.5 * (tlo + thi);
            }
            if (next - t).abs() < 1e-16 {
                t = next;
                break;
            }
            t = next;
        }
        Ok(self.lo + (i as f64 + t) * self.h)
    }
}

/// Mass of a grid panel containing the location point, where the density
/// may have a kink or an integrable singularity.
fn singular_panel_mass(p: &VGParams, a: f64, b: f64) -> f64 {
    let dens = |x: f64| vg_density(p, x).unwrap_or(0.0);
    let left = {
        let w = (p.mu - a).max(0.0).sqrt();
        let f = |u: f64| {
            let x = p.mu - u * u;
            if x == p.mu {
                0.0
            } else {
                2.0 * u * dens(x)
            }
        };
        adaptive_simpson_panels(&f, 0.0, w, 1e-15, 40, 8)
    };
    let right = {
        let w = (b - p.mu).max(0.0).sqrt();
        let f = |u: f64| {
            let x = p.mu + u * u;
            if x == p.mu {
                0.0
            } else {
                2.0 * u * dens(x)
            }
        };
        adaptive_simpson_panels(&f, 0.0, w, 1e-15, 40, 8)
    };
    left + right
}

/// CDF value by table construction (convenience; builds a table).
pub fn vg_cdf(p: &VGParams, x: f64) -> Result<f64> {
    Ok(CdfTable::build(p)?.cdf(x))
}

/// Quantile by monotone inversion (convenience; builds a table).
pub fn vg_quantile(p: &VGParams, u: f64) -> Result<f64> {
    CdfTable::build(p)?.quantile(u)
}

/// Constructors for the special and limiting cases of the family. Each
/// value records the provenance of its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum SpecialCase {
    /// Laplace law with scale `b`.
    Laplace { b: f64 },
    /// Difference of two independent Gamma(lambda, shape) variables.
    SymGamma { lambda: f64, shape: f64 },
    /// Product of centred bivariate normals with correlation `rho`.
    ProductNormals { rho: f64, sigma_x: f64, sigma_y: f64 },
    /// Difference of correlated Gamma marginals with rates `lambda1`,
    /// `lambda2` and common shape.
    GammaDifference {
        shape: f64,
        lambda1: f64,
        lambda2: f64,
        rho: f64,
    },
    /// `VG(r, 0, sigma/sqrt(r))`: tends to `N(0, sigma2)` as `r` grows.
    GaussLimit { sigma2: f64, r: f64 },
    /// `VG(2 shape, 1/(2 lambda), sigma)`: tends to Gamma(lambda, shape)
    /// as `sigma` shrinks.
    GammaLimit { lambda: f64, shape: f64, sigma: f64 },
}

impl SpecialCase {
    pub fn params(&self) -> Result<VGParams> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(VgError::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                })
            }
        }
        match *self {
            SpecialCase::Laplace { b } => {
                positive("laplace.b", b)?;
                VGParams::centred(2.0, 0.0, b)
            }
            SpecialCase::SymGamma { lambda, shape } => {
                positive("sym_gamma.lambda", lambda)?;
                positive("sym_gamma.shape", shape)?;
                VGParams::centred(2.0 * shape, 0.0, 1.0 / lambda)
            }
            SpecialCase::ProductNormals { rho, sigma_x, sigma_y } => {
                positive("product_normals.sigma_x", sigma_x)?;
                positive("product_normals.sigma_y", sigma_y)?;
                if !(rho.abs() < 1.0) {
                    return Err(VgError::InvalidParameter {
                        name: "product_normals.rho",
                        reason: format!("correlation must satisfy |rho| < 1, got {rho}"),
                    });
                }
                let s = sigma_x * sigma_y;
                VGParams::centred(1.0, rho * s, s * (1.0 - rho * rho).sqrt())
            }
            SpecialCase::GammaDifference {
                shape,
                lambda1,
                lambda2,
                rho,
            } => {
                positive("gamma_difference.shape", shape)?;
                positive("gamma_difference.lambda1", lambda1)?;
                positive("gamma_difference.lambda2", lambda2)?;
                if !(0.0..1.0).contains(&rho) {
                    return Err(VgError::InvalidParameter {
                        name: "gamma_difference.rho",
                        reason: format!("correlation must lie in [0, 1), got {rho}"),
                    });
                }
                VGParams::centred(
                    2.0 * shape,
                    0.5 / lambda1 - 0.5 / lambda2,
                    (1.0 - rho * rho).sqrt() / (lambda1 * lambda2).sqrt(),
                )
            }
            SpecialCase::GaussLimit { sigma2, r } => {
                positive("gauss_limit.sigma2", sigma2)?;
                positive("gauss_limit.r", r)?;
                VGParams::centred(r, 0.0, (sigma2 / r).sqrt())
            }
            SpecialCase::GammaLimit { lambda, shape, sigma } => {
                positive("gamma_limit.lambda", lambda)?;
                positive("gamma_limit.shape", shape)?;
                positive("gamma_limit.sigma", sigma)?;
                VGParams::centred(2.0 * shape, 0.5 / lambda, sigma)
            }
        }
    }
}
