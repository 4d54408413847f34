//! Exact calculus on the second Gaussian chaos through symmetric matrices.
//!
//! A kernel `A` (symmetric, d x d) represents the quadratic functional
//! `F = z' A z - tr A` of a standard Gaussian vector `z`. Its cumulants
//! are traces of matrix powers, `kappa_p = 2^{p-1} (p-1)! tr(A^p)`, and the
//! iterated Gamma functionals have the pathwise closed form
//! `Gamma_j = 2^{j-1} z' A^j z` for `j >= 2`. Everything the distance
//! bounds need is therefore exact matrix arithmetic; Monte Carlo enters
//! only where a bound is defined as an absolute first moment.

use crate::empirical::SampleSet;
use crate::error::{Result, VgError};
use crate::numeric::{factorial, mean_and_batch_se, MC_BATCHES};
use crate::report::BoundReport;
use crate::rng::SeedStream;
use crate::vgdist::{vg_moments, CumulantSet, VGParams};
use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric kernel of a second-chaos element.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2 {
    dim: usize,
    entries: Vec<f64>, // row-major, exactly symmetric after construction
}

impl Kernel2 {
    /// Builds from row-major entries; symmetrizes exactly and rejects
    /// asymmetry above `1e-12` (relative to the largest entry).
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(VgError::DimensionMismatch {
                left: entries.len(),
                right: dim * dim,
            });
        }
        let scale = entries.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mut sym = entries;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = sym[i * dim + j];
                let b = sym[j * dim + i];
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(VgError::InvalidParameter {
                        name: "entries",
                        reason: format!("asymmetric at ({i},{j}): {a} vs {b}"),
                    });
                }
                let v = 0.5 * (a + b);
                sym[i * dim + j] = v;
                sym[j * dim + i] = v;
            }
        }
        Ok(Kernel2 { dim, entries: sym })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(VgError::DimensionMismatch {
                    left: row.len(),
                    right: dim,
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(dim, entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Kernel2 {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut k = Kernel2::zeros(dim);
        for (i, &v) in diag.iter().enumerate() {
            k.entries[i * dim + i] = v;
        }
        k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn scale(&self, c: f64) -> Kernel2 {
        Kernel2 {
            dim: self.dim,
            entries: self.entries.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &Kernel2) -> Result<Kernel2> {
        if self.dim != other.dim {
            return Err(VgError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(Kernel2 {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn matmul(&self, other: &Kernel2) -> Result<Vec<f64>> {
        if self.dim != other.dim {
            return Err(VgError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(matmul_raw(&self.entries, &other.entries, self.dim))
    }

    /// `A^p` for `p >= 1` (symmetric).
    pub fn power(&self, p: usize) -> Kernel2 {
        assert!(p >= 1);
        let mut acc = self.entries.clone();
        for _ in 1..p {
            acc = matmul_raw(&acc, &self.entries, self.dim);
        }
        Kernel2 {
            dim: self.dim,
            entries: acc,
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    /// `tr(A^p)` via explicit matrix powers.
    pub fn trace_power(&self, p: usize) -> f64 {
        self.power(p).trace()
    }

    /// Frobenius norm; equals the Hilbert-Schmidt norm of the kernel.
    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn matvec(&self, z: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..d {
            let row = &self.entries[i * d..(i + 1) * d];
            out[i] = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
        out
    }

    fn quadratic_form(&self, z: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            let row = &self.entries[i * d..(i + 1) * d];
            let ri: f64 = row.iter().zip(z).map(|(a, b)| a * b).sum();
            acc += z[i] * ri;
        }
        acc
    }

    /// Eigenvalues of the associated Hilbert-Schmidt operator.
    pub fn spectrum(&self) -> SpectralKernel {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.entries);
        let eig = SymmetricEigen::new(m);
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        SpectralKernel { eigenvalues: ev }
    }

    /// Dense row-major text form: one row per line, entries
    /// comma-separated with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| format!("{:.16e}", self.entry(i, j)))
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|e| VgError::InvalidParameter {
                name: "kernel csv",
                reason: e.to_string(),
            })?);
        }
        Kernel2::from_rows(&rows)
    }
}

fn matmul_raw(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * d..(k + 1) * d];
            let orow = &mut out[i * d..(i + 1) * d];
            for j in 0..d {
                orow[j] += aik * brow[j];
            }
        }
    }
    out
}

/// A kernel described by its Hilbert-Schmidt eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralKernel {
    eigenvalues: Vec<f64>,
}

impl SpectralKernel {
    pub fn new(eigenvalues: Vec<f64>) -> Self {
        SpectralKernel { eigenvalues }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Diagonal embedding; all quantities in scope are orthogonally
    /// invariant, so the embedding choice does not matter.
    pub fn embed(&self) -> Kernel2 {
        Kernel2::diagonal(&self.eigenvalues)
    }

    pub fn power_sum(&self, p: usize) -> f64 {
        self.eigenvalues.iter().map(|v| v.powi(p as i32)).sum()
    }
}

/// `kappa_p(I_2(A)) = 2^{p-1} (p-1)! tr(A^p)` for `p` in `2..=6`.
pub fn cumulant2(a: &Kernel2, p: usize) -> Result<f64> {
    if !(2..=6).contains(&p) {
        return Err(VgError::InvalidParameter {
            name: "p",
            reason: format!("cumulant order {p} outside 2..=6"),
        });
    }
    Ok(2f64.powi(p as i32 - 1) * factorial(p - 1) * a.trace_power(p))
}

/// All six cumulants (`kappa_1 = 0`).
pub fn cumulant_set2(a: &Kernel2) -> CumulantSet {
    let mut k = [0.0; 6];
    for (p, slot) in k.iter_mut().enumerate().skip(1) {
        *slot = cumulant2(a, p + 1).expect("order in range");
    }
    CumulantSet::from_kappas(k)
}

/// Pathwise Gamma functional at Gaussian coordinates `z`.
///
/// `j = 1` is the functional itself, `z' A z - tr A`; for `j >= 2` the
/// closed form is `2^{j-1} z' A^j z`, so `E[Gamma_j] = kappa_j / (j-1)!`.
pub fn gamma_path(a: &Kernel2, z: &[f64], j: usize) -> Result<f64> {
    if z.len() != a.dim() {
        return Err(VgError::DimensionMismatch {
            left: z.len(),
            right: a.dim(),
        });
    }
    if j == 0 {
        return Err(VgError::InvalidParameter {
            name: "j",
            reason: "Gamma order starts at 1".into(),
        });
    }
    if j == 1 {
        return Ok(a.quadratic_form(z) - a.trace());
    }
    let ap = a.power(j);
    Ok(2f64.powi(j as i32 - 1) * ap.quadratic_form(z))
}

/// `<D I_2(A), -D L^{-1} I_2(B)> = 2 z' A B z` for a second-chaos pair.
pub fn cross_gamma_path(a: &Kernel2, b: &Kernel2, z: &[f64]) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(VgError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    if z.len() != a.dim() {
        return Err(VgError::DimensionMismatch {
            left: z.len(),
            right: a.dim(),
        });
    }
    let az = a.matvec(z);
    let bz = b.matvec(z);
    Ok(2.0 * az.iter().zip(&bz).map(|(x, y)| x * y).sum::<f64>())
}

/// `Cov(I_2(A)^2, I_2(B)^2)` by exact Gaussian moment expansion:
/// `32 tr(A^2 B^2) + 16 tr(ABAB) + 8 tr(AB)^2`.
pub fn cov_squares(a: &Kernel2, b: &Kernel2) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(VgError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let d = a.dim();
    let ab = matmul_raw(a.entries(), b.entries(), d);
    let a2 = matmul_raw(a.entries(), a.entries(), d);
    let b2 = matmul_raw(b.entries(), b.entries(), d);
    let tr = |m: &[f64]| (0..d).map(|i| m[i * d + i]).sum::<f64>();
    let a2b2 = matmul_raw(&a2, &b2, d);
    let abab = matmul_raw(&ab, &ab, d);
    let tr_ab = tr(&ab);
    Ok(32.0 * tr(&a2b2) + 16.0 * tr(&abab) + 8.0 * tr_ab * tr_ab)
}

/// Samples of the second-chaos functional `z' A z - tr A`.
pub fn sample_chaos2(a: &Kernel2, n: usize, seed: u64) -> SampleSet {
    let stream = SeedStream::new(seed);
    let d = a.dim();
    let tr = a.trace();
    let values = stream.generate(n, |rng| {
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        a.quadratic_form(&z) - tr
    });
    SampleSet::new(values, seed, format!("chaos2(dim={d})")).expect("finite draws")
}

fn require_centred(target: &VGParams) -> Result<()> {
    if target.mu() == 0.0 || target.mean() == 0.0 {
        Ok(())
    } else {
        Err(VgError::NotCentred {
            mean: target.mean(),
        })
    }
}

/// Exact interior of the squared-bound functional:
/// `E[(Gamma_3 - 2 theta Gamma_2 - sigma^2 (F + r theta))^2]` expanded in
/// the first six cumulants of the kernel.
pub fn vg_bound2_interior(a: &Kernel2, target: &VGParams) -> f64 {
    let k = cumulant_set2(a);
    let (k2, k3, k4, k5, k6) = (k.kappa(2), k.kappa(3), k.kappa(4), k.kappa(5), k.kappa(6));
    let (r, th, sg) = (target.r(), target.theta(), target.sigma());
    let s2 = sg * sg;
    k6 / 120.0 - th / 6.0 * k5 + (2.0 * th * th - s2) / 3.0 * k4
        + (2.0 - r) * th * s2 * k3
        + 0.25 * k3 * k3
        - 2.0 * th * k2 * k3
        + (s2 * s2 + 4.0 * r * th * th * s2) * k2
        + 4.0 * th * th * k2 * k2
        + r * r * th * th * s2 * s2
}

/// Six-cumulant polynomial of the symmetric-target bound, written in terms
/// of the target shape `r_s` (`= r/2` of the Variance-Gamma target):
/// `kappa_6/120 - kappa_4 kappa_2 / (6 r_s) + kappa_2^3 / (4 r_s^2)
///  + kappa_3^2 / 6`.
pub fn symmetric_interior_polynomial(a: &Kernel2, shape: f64) -> f64 {
    let k = cumulant_set2(a);
    let (k2, k3, k4, k6) = (k.kappa(2), k.kappa(3), k.kappa(4), k.kappa(6));
    k6 / 120.0 - k4 * k2 / (6.0 * shape) + k2 * k2 * k2 / (4.0 * shape * shape)
        + k3 * k3 / 6.0
}

const FLAG_INTERIOR_NEGATIVE: &str = "interior_negative";

/// Squared-interior bound for a Variance-Gamma target.
///
/// Report terms: `interior` (the exact cumulant polynomial; provably a
/// second moment, so clamped at zero for the root when tiny negative and
/// flagged `interior_negative` below `-1e-9`), `sqrt_interior`,
/// `variance_gap`, and for symmetric targets additionally
/// `interior_symmetric` (the six-moment-form polynomial). Constants of the
/// underlying inequality are non-constructive for `theta != 0` and are
/// reported as 1.
pub fn vg_bound2(a: &Kernel2, target: &VGParams) -> Result<BoundReport> {
    require_centred(target)?;
    let interior = vg_bound2_interior(a, target);
    let k2 = cumulant2(a, 2)?;
    let variance_gap = (target.variance() - k2).abs();
    let sqrt_interior = interior.max(0.0).sqrt();
    let mut report = BoundReport::new();
    report.push("interior", interior);
    if target.theta() == 0.0 {
        report.push(
            "interior_symmetric",
            symmetric_interior_polynomial(a, 0.5 * target.r()),
        );
    }
    report.push("sqrt_interior", sqrt_interior);
    report.push("variance_gap", variance_gap);
    report.total = sqrt_interior + variance_gap;
    if interior < -1e-9 {
        report.flag(FLAG_INTERIOR_NEGATIVE);
    }
    Ok(report)
}

/// Monte Carlo evaluation of the L1 form of the bound:
/// `E|sigma^2 (F + r theta) + 2 theta Gamma_2 - Gamma_3|` plus the exact
/// variance gap. The integrand is exact pathwise; only the expectation is
/// estimated, and its standard error is reported.
pub fn result1_l1_bound(a: &Kernel2, target: &VGParams, n_mc: usize, seed: u64) -> Result<BoundReport> {
    require_centred(target)?;
    let d = a.dim();
    let tr = a.trace();
    let a2 = a.power(2);
    let a3 = a.power(3);
    let (r, th, s2) = (target.r(), target.theta(), target.sigma() * target.sigma());
    let stream = SeedStream::new(seed);
    let values = stream.generate(n_mc, |rng| {
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let f = a.quadratic_form(&z) - tr;
        let g2 = 2.0 * a2.quadratic_form(&z);
        let g3 = 4.0 * a3.quadratic_form(&z);
        (s2 * (f + r * th) + 2.0 * th * g2 - g3).abs()
    });
    let (mean, se) = mean_and_batch_se(&values, MC_BATCHES);
    let k2 = cumulant2(a, 2)?;
    let variance_gap = (target.variance() - k2).abs();
    let mut report = BoundReport::new();
    report.push_estimated("l1_term", mean, se);
    report.push("variance_gap", variance_gap);
    report.total = mean + variance_gap;
    Ok(report)
}

/// Contraction-norm diagnostics for the four classical limit criteria.
#[derive(Debug, Clone)]
pub struct ContractionDiagnostics {
    /// `||A^2||_F`: vanishes along Gaussian limits.
    pub gauss_norm: f64,
    /// `||A^2 - theta A||_F` with `theta = 1/(2 lambda)`: vanishes along
    /// Gamma limits. `None` for symmetric targets.
    pub gamma_norm: Option<f64>,
    /// `||4 A^3 - A / lambda^2||_F` with `lambda = 1/sigma`.
    pub symgamma_norm: f64,
    /// `|tr A^3|`, the symmetric-target third-moment condition.
    pub symgamma_trace_abs: f64,
    /// `||4 A^3 - 2 theta A^2 - sigma^2 A||_F`.
    pub vg_norm: f64,
    /// `tr A^3` and the asymmetric-target value it must approach.
    pub vg_trace: f64,
    pub vg_trace_target: f64,
}

pub fn contraction_diag2(a: &Kernel2, target: &VGParams) -> ContractionDiagnostics {
    let (r, th, sg) = (target.r(), target.theta(), target.sigma());
    let a2 = a.power(2);
    let a3 = a.power(3);
    let frob_of = |m: &Kernel2| m.frobenius();
    let combo = |c3: f64, c2: f64, c1: f64| {
        let mut entries = Vec::with_capacity(a.entries().len());
        for i in 0..a.entries().len() {
            entries.push(c3 * a3.entries()[i] + c2 * a2.entries()[i] + c1 * a.entries()[i]);
        }
        Kernel2 {
            dim: a.dim(),
            entries,
        }
    };
    let lambda_c = 1.0 / sg;
    ContractionDiagnostics {
        gauss_norm: frob_of(&a2),
        gamma_norm: if th > 0.0 {
            Some(frob_of(&combo(0.0, 1.0, -th)))
        } else {
            None
        },
        symgamma_norm: frob_of(&combo(4.0, 0.0, -1.0 / (lambda_c * lambda_c))),
        symgamma_trace_abs: a3.trace().abs(),
        vg_norm: frob_of(&combo(4.0, -2.0 * th, -(sg * sg))),
        vg_trace: a3.trace(),
        vg_trace_target: 0.75 * r * th * sg * sg + r * th * th * th,
    }
}

/// Spectral diagnostics of the symmetric-target criteria.
#[derive(Debug, Clone)]
pub struct EigenDiagnostics {
    /// `sum_j (mu_j / lambda^2 - 4 mu_j^3)^2`.
    pub cubic_mismatch: f64,
    /// `sum_j mu_j^3`.
    pub trace_cubes: f64,
    /// For `q = 2..=qmax`: `|sum_j mu_j^{2q} - (r / lambda^2) (1/(4 lambda^2))^{q-1}|`.
    ///
    /// The target value is the isometry-consistent one: the variance
    /// normalization `E[F^2] = 2 sum_j mu_j^2 = 2 r / lambda^2` forces
    /// `sum_j mu_j^2 = r / lambda^2`, and each recursion step multiplies
    /// by `1/(4 lambda^2)`; exact spectra (`+-1/(2 lambda)`, `r` pairs)
    /// attain it with zero gap.
    pub even_power_gaps: Vec<(usize, f64)>,
}

pub fn eigen_diag(spec: &SpectralKernel, lambda: f64, shape: f64, qmax: usize) -> Result<EigenDiagnostics> {
    if qmax < 2 {
        return Err(VgError::InvalidParameter {
            name: "qmax",
            reason: format!("need qmax >= 2, got {qmax}"),
        });
    }
    let l2 = lambda * lambda;
    let cubic_mismatch = spec
        .eigenvalues()
        .iter()
        .map(|&m| {
            let v = m / l2 - 4.0 * m * m * m;
            v * v
        })
        .sum();
    let trace_cubes = spec.power_sum(3);
    let mut gaps = Vec::new();
    for q in 2..=qmax {
        let target = shape / l2 * (1.0 / (4.0 * l2)).powi(q as i32 - 1);
        gaps.push((q, (spec.power_sum(2 * q) - target).abs()));
    }
    Ok(EigenDiagnostics {
        cubic_mismatch,
        trace_cubes,
        even_power_gaps: gaps,
    })
}

/// Spectrum with `m` eigenvalues `+1/(2 lambda)` and `m` eigenvalues
/// `-1/(2 lambda)`: the exact kernel of the symmetric-Gamma law with
/// shape `m/2` and rate `lambda`. Satisfies `A = (2 lambda)^2 A^3` and
/// `tr A^3 = 0`.
pub fn exact_symgamma_kernel(m: usize, lambda: f64) -> SpectralKernel {
    assert!(m >= 1 && lambda > 0.0);
    let v = 0.5 / lambda;
    let mut ev = vec![v; m];
    ev.extend(std::iter::repeat_n(-v, m));
    SpectralKernel::new(ev)
}

/// Gaps between the kernel's moments and the target's, for the orders the
/// six-moment criteria require: `{2, 4, 6}` when the target is symmetric,
/// `{2, 3, 4, 5, 6}` otherwise.
#[derive(Debug, Clone)]
pub struct SixMomentReport {
    pub gaps: Vec<(usize, f64)>,
}

impl SixMomentReport {
    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().fold(0.0, |m, &(_, g)| m.max(g))
    }

    pub fn gap(&self, order: usize) -> Option<f64> {
        self.gaps.iter().find(|&&(o, _)| o == order).map(|&(_, g)| g)
    }
}

pub fn six_moment_check(a: &Kernel2, target: &VGParams) -> Result<SixMomentReport> {
    require_centred(target)?;
    let m_kernel = cumulant_set2(a).to_moments();
    let m_target = vg_moments(target)?;
    let orders: &[usize] = if target.theta() == 0.0 {
        &[2, 4, 6]
    } else {
        &[2, 3, 4, 5, 6]
    };
    Ok(SixMomentReport {
        gaps: orders
            .iter()
            .map(|&j| (j, (m_kernel[j - 1] - m_target[j - 1]).abs()))
            .collect(),
    })
}

/// Gaussian-target bound. Reports the plain polynomial
/// `T = kappa_6/120 + kappa_3^2/4` (which equals `E[Gamma_3^2]` exactly),
/// its square root, and the variance gap `|sigma^2 - kappa_2|`; the total
/// uses the square-rooted form.
pub fn gauss_bound2(a: &Kernel2, sigma2: f64) -> Result<BoundReport> {
    if !(sigma2 > 0.0) {
        return Err(VgError::InvalidParameter {
            name: "sigma2",
            reason: format!("target variance must be positive, got {sigma2}"),
        });
    }
    let k = cumulant_set2(a);
    let t = k.kappa(6) / 120.0 + 0.25 * k.kappa(3) * k.kappa(3);
    let sqrt_t = t.max(0.0).sqrt();
    let gap = (sigma2 - k.kappa(2)).abs();
    let mut report = BoundReport::new();
    report.push("gamma3_second_moment", t);
    report.push("sqrt_gamma3_second_moment", sqrt_t);
    report.push("variance_gap", gap);
    report.total = sqrt_t + gap;
    if t < -1e-9 {
        report.flag(FLAG_INTERIOR_NEGATIVE);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(rows: &[&[f64]]) -> Kernel2 {
        Kernel2::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn construction_symmetrizes_and_rejects() {
        let k = Kernel2::new(2, vec![1.0, 2.0 + 5e-14, 2.0, -1.0]).unwrap();
        assert_eq!(k.entry(0, 1), k.entry(1, 0));
        assert!(Kernel2::new(2, vec![1.0, 2.0, 2.5, -1.0]).is_err());
        assert!(Kernel2::new(2, vec![1.0, 2.0, 2.0]).is_err());
    }

    #[test]
    fn frozen_cumulants_diag() {
        // A = diag(1, -1): tr A^p alternates {2, 0, 2, 0, 2}.
        let a = Kernel2::diagonal(&[1.0, -1.0]);
        assert_eq!(cumulant2(&a, 2).unwrap(), 4.0);
        assert_eq!(cumulant2(&a, 3).unwrap(), 0.0);
        assert_eq!(cumulant2(&a, 4).unwrap(), 96.0);
        assert_eq!(cumulant2(&a, 5).unwrap(), 0.0);
        assert_eq!(cumulant2(&a, 6).unwrap(), 7680.0);
        // Zero kernel.
        let z = Kernel2::zeros(3);
        for p in 2..=6 {
            assert_eq!(cumulant2(&z, p).unwrap(), 0.0);
        }
        // kappa_3 of diag(1) is 2^2 2! tr(A^3) = 8.
        let one = Kernel2::diagonal(&[1.0]);
        assert_eq!(cumulant2(&one, 3).unwrap(), 8.0);
        assert!(cumulant2(&one, 7).is_err());
    }

    #[test]
    fn scale_equivariance() {
        let a = kernel(&[&[0.7, -0.3, 0.1], &[-0.3, 0.2, 0.4], &[0.1, 0.4, -0.5]]);
        let c = 1.7;
        let ac = a.scale(c);
        for p in 2..=6 {
            let lhs = cumulant2(&ac, p).unwrap();
            let rhs = c.powi(p as i32) * cumulant2(&a, p).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-10), "p={p}");
        }
    }

    #[test]
    fn gamma_path_small_cases() {
        let a = kernel(&[&[0.5, 0.25], &[0.25, -1.0]]);
        let z = [0.3, -1.2];
        // j = 1 is the functional itself.
        let f = gamma_path(&a, &z, 1).unwrap();
        let direct = 0.5 * z[0] * z[0] + 2.0 * 0.25 * z[0] * z[1] - z[1] * z[1] - a.trace();
        assert!((f - direct).abs() < 1e-14);
        // Zero kernel annihilates all higher Gammas.
        let zk = Kernel2::zeros(2);
        for j in 2..=4 {
            assert_eq!(gamma_path(&zk, &z, j).unwrap(), 0.0);
        }
        assert!(gamma_path(&a, &[1.0], 2).is_err());
        assert!(gamma_path(&a, &z, 0).is_err());
    }

    #[test]
    fn exact_kernel_properties() {
        let m = 3;
        let lambda = 0.5;
        let spec = exact_symgamma_kernel(m, lambda);
        let a = spec.embed();
        // E[I_2(f)^2] = 4 m at lambda = 1/2.
        assert_eq!(cumulant2(&a, 2).unwrap(), 4.0 * m as f64);
        // A = (2 lambda)^2 A^3 entrywise.
        let a3 = a.power(3);
        let c = (2.0 * lambda) * (2.0 * lambda);
        for (x, y) in a.entries().iter().zip(a3.entries()) {
            assert!((x - c * y).abs() < 1e-14);
        }
        assert!(a3.trace().abs() < 1e-14);
    }

    #[test]
    fn interior_vanishes_at_exact_kernel() {
        for &(m, lambda) in &[(1usize, 0.5f64), (2, 1.0), (4, 2.0)] {
            let a = exact_symgamma_kernel(m, lambda).embed();
            let shape = m as f64 / 2.0;
            let target = VGParams::centred(2.0 * shape, 0.0, 1.0 / lambda).unwrap();
            let rep = vg_bound2(&a, &target).unwrap();
            assert!(rep.value("interior").unwrap().abs() < 1e-10);
            assert!(rep.value("interior_symmetric").unwrap().abs() < 1e-10);
            assert!(rep.value("variance_gap").unwrap().abs() < 1e-12);
            assert!(!rep.has_flag("interior_negative"));
        }
    }

    #[test]
    fn zero_kernel_bound_is_target_variance() {
        let target = VGParams::centred(2.0, 0.5, 1.0).unwrap();
        let rep = vg_bound2(&Kernel2::zeros(3), &target).unwrap();
        assert_eq!(rep.value("variance_gap").unwrap(), target.variance());
        // theta = 0 target, A = 0: L1 term is exactly zero pathwise.
        let sym = VGParams::centred(2.0, 0.0, 1.0).unwrap();
        let rep = result1_l1_bound(&Kernel2::zeros(3), &sym, 1000, 7).unwrap();
        assert_eq!(rep.value("l1_term").unwrap(), 0.0);
    }

    #[test]
    fn six_moment_gaps_zero_kernel_vs_laplace() {
        let target = VGParams::centred(2.0, 0.0, 1.0).unwrap();
        let rep = six_moment_check(&Kernel2::zeros(2), &target).unwrap();
        assert_eq!(rep.gap(2).unwrap(), 2.0);
        assert_eq!(rep.gap(4).unwrap(), 24.0);
        assert_eq!(rep.gap(6).unwrap(), 720.0);
    }

    #[test]
    fn six_moment_gaps_exact_kernel() {
        let a = exact_symgamma_kernel(2, 1.0).embed();
        let target = VGParams::centred(2.0, 0.0, 1.0).unwrap();
        let rep = six_moment_check(&a, &target).unwrap();
        assert!(rep.max_gap() < 1e-10);
    }

    #[test]
    fn gauss_bound_exact_trace_arithmetic() {
        // diag(1/sqrt(n)) with n entries: T = 16/n + 32/n^2 exactly.
        for &n in &[4usize, 16, 64] {
            let a = Kernel2::diagonal(&vec![1.0 / (n as f64).sqrt(); n]);
            let rep = gauss_bound2(&a, 2.0).unwrap();
            let expect = 16.0 / n as f64 + 32.0 / (n as f64 * n as f64);
            let got = rep.value("gamma3_second_moment").unwrap();
            assert!((got - expect).abs() < 1e-12, "n={n}: {got} vs {expect}");
        }
        // Quadrupling n divides the leading term by 4.
        let t4 = gauss_bound2(&Kernel2::diagonal(&vec![0.5; 4]), 2.0)
            .unwrap()
            .value("gamma3_second_moment")
            .unwrap();
        let t16 = gauss_bound2(&Kernel2::diagonal(&vec![0.25; 16]), 2.0)
            .unwrap()
            .value("gamma3_second_moment")
            .unwrap();
        let ratio = t16 / t4;
        assert!(ratio > 0.15 && ratio < 0.30, "ratio {ratio}");
        // A = 0: T = 0 and the gap is sigma^2.
        let rep = gauss_bound2(&Kernel2::zeros(2), 1.5).unwrap();
        assert_eq!(rep.value("gamma3_second_moment").unwrap(), 0.0);
        assert_eq!(rep.value("variance_gap").unwrap(), 1.5);
    }

    #[test]
    fn contraction_diagnostics_exact_cases() {
        // Exact symmetric-Gamma spectrum: case (c) vanishes.
        let lambda = 0.7;
        let a = exact_symgamma_kernel(2, lambda).embed();
        let target = VGParams::centred(2.0, 0.0, 1.0 / lambda).unwrap();
        let d = contraction_diag2(&a, &target);
        assert!(d.symgamma_norm < 1e-13);
        assert!(d.symgamma_trace_abs < 1e-13);
        // Idempotent-up-to-scale kernel: case (b) vanishes at theta = 1/(2 lambda).
        let lam = 1.3f64;
        let a = Kernel2::diagonal(&[0.5 / lam]);
        let target = VGParams::centred(2.0, 0.5 / lam, 0.3).unwrap();
        let d = contraction_diag2(&a, &target);
        assert!(d.gamma_norm.unwrap() < 1e-14);
    }

    #[test]
    fn eigen_diag_exact_and_zero() {
        let lambda = 0.8;
        let m = 3;
        let spec = exact_symgamma_kernel(m, lambda);
        let d = eigen_diag(&spec, lambda, m as f64 / 2.0, 5).unwrap();
        assert!(d.cubic_mismatch < 1e-14);
        assert!(d.trace_cubes.abs() < 1e-14);
        for &(_, gap) in &d.even_power_gaps {
            assert!(gap < 1e-12);
        }
        // Zero kernel: gaps are the target values themselves.
        let z = SpectralKernel::new(vec![0.0; 4]);
        let d = eigen_diag(&z, lambda, 1.0, 3).unwrap();
        let l2 = lambda * lambda;
        for &(q, gap) in &d.even_power_gaps {
            let target = 1.0 / l2 * (1.0 / (4.0 * l2)).powi(q as i32 - 1);
            assert!((gap - target).abs() < 1e-14);
        }
        assert!(eigen_diag(&z, lambda, 1.0, 1).is_err());
    }

    #[test]
    fn eigen_diag_perturbation_slope() {
        // Perturbing the exact spectrum by eps moves the diagnostics at
        // rate O(eps): the ratio between eps = 1e-3 and 1e-4 is ~10 for the
        // trace and ~100 for the squared mismatch.
        let lambda = 1.0;
        let base = exact_symgamma_kernel(2, lambda);
        let diag_at = |eps: f64| {
            let ev: Vec<f64> = base.eigenvalues().iter().map(|v| v + eps).collect();
            eigen_diag(&SpectralKernel::new(ev), lambda, 1.0, 2).unwrap()
        };
        let d3 = diag_at(1e-3);
        let d4 = diag_at(1e-4);
        let t_ratio = d3.trace_cubes.abs() / d4.trace_cubes.abs();
        assert!((t_ratio - 10.0).abs() < 0.5, "trace ratio {t_ratio}");
        let m_ratio = d3.cubic_mismatch / d4.cubic_mismatch;
        assert!((m_ratio - 100.0).abs() < 7.0, "mismatch ratio {m_ratio}");
    }

    #[test]
    fn cov_squares_disjoint_and_self() {
        let a = Kernel2::diagonal(&[1.0, 0.0]);
        let b = Kernel2::diagonal(&[0.0, 1.0]);
        assert_eq!(cov_squares(&a, &b).unwrap(), 0.0);
        // Self-covariance is the variance of F^2 = m4 - m2^2.
        let k = kernel(&[&[0.4, -0.2], &[-0.2, 1.1]]);
        let m = cumulant_set2(&k).to_moments();
        let var = m[3] - m[1] * m[1];
        let got = cov_squares(&k, &k).unwrap();
        assert!((got - var).abs() < 1e-10 * var.abs().max(1.0));
    }

    #[test]
    fn csv_round_trip() {
        let a = kernel(&[&[0.25, -1.5], &[-1.5, 3.0]]);
        let text = a.to_csv();
        let b = Kernel2::from_csv(&text).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = Kernel2::diagonal(&[1.0, -1.0]);
        let s1 = sample_chaos2(&a, 100, 42);
        let s2 = sample_chaos2(&a, 100, 42);
        assert_eq!(s1.values(), s2.values());
        // diag(1): draws are Z^2 - 1, bounded below by -1.
        let one = Kernel2::diagonal(&[1.0]);
        let s = sample_chaos2(&one, 10_000, 7);
        assert!(s.values().iter().all(|&v| v >= -1.0));
    }
}
