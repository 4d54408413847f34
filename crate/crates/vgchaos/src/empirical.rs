//! Monte Carlo estimation layer: reproducible sample sets, empirical
//! Wasserstein distances, unbiased cumulant estimators (k-statistics),
//! homogeneous sums and the multivariate bound assembly.
//!
//! Standard errors follow the batch-means convention (50 batches by
//! default) so acceptance thresholds of the form "within 3 standard
//! errors" are deterministic given the seed.

use crate::chaos2::{cov_squares, cumulant2, Kernel2};
use crate::error::{Result, VgError};
use crate::numeric::{compensated_mean, compensated_sum, factorial, mean_and_batch_se, MC_BATCHES};
use crate::report::BoundReport;
use crate::rng::SeedStream;
use crate::tensorq::{SymTensor, MAX_DIM, MAX_INPUT_ORDER};
use crate::vgdist::{CdfTable, CumulantSet, VGParams};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Finite sample with full generation provenance: `(seed, meta)`
/// determine the values bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    seed: u64,
    meta: String,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, seed: u64, meta: impl Into<String>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(VgError::InvalidParameter {
                name: "values",
                reason: "sample sets hold finite values only".into(),
            });
        }
        Ok(SampleSet {
            values,
            seed,
            meta: meta.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn meta(&self) -> &str {
        &self.meta
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    pub fn mean(&self) -> f64 {
        compensated_mean(&self.values)
    }

    /// Single-column CSV with a header comment carrying seed and meta.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# seed={} meta={}\nvalue\n", self.seed, self.meta);
        for v in &self.values {
            s.push_str(&format!("{:.16e}\n", v));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut seed = 0u64;
        let mut meta = String::new();
        let mut values = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line == "value" {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(s) = rest.strip_prefix("seed=") {
                    let (s_part, m_part) = s.split_once(" meta=").unwrap_or((s, ""));
                    seed = s_part.trim().parse().unwrap_or(0);
                    meta = m_part.to_string();
                }
                continue;
            }
            values.push(line.parse::<f64>().map_err(|e| VgError::InvalidParameter {
                name: "sample csv",
                reason: e.to_string(),
            })?);
        }
        SampleSet::new(values, seed, meta)
    }
}

/// Exact 1-Wasserstein distance between two empirical laws of equal size
/// (the order-statistics coupling). Unequal sizes are trimmed to the
/// shorter length before sorting, recorded in the distance's meta only
/// through the return; callers that care pass equal sizes.
pub fn wasserstein_1d(s1: &SampleSet, s2: &SampleSet) -> Result<f64> {
    if s1.is_empty() || s2.is_empty() {
        return Err(VgError::EmptySampleSet);
    }
    let n = s1.len().min(s2.len());
    let mut a = s1.values()[..n].to_vec();
    let mut b = s2.values()[..n].to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).collect();
    Ok(compensated_sum(&diffs) / n as f64)
}

/// Empirical distance to a Variance-Gamma law by quantile coupling:
/// `mean_i |x_(i) - Q((i - 1/2) / n)|`.
pub fn wasserstein_to_table(s: &SampleSet, table: &CdfTable) -> Result<f64> {
    if s.is_empty() {
        return Err(VgError::EmptySampleSet);
    }
    let sorted = s.sorted();
    let n = sorted.len();
    let mut diffs = Vec::with_capacity(n);
    for (i, &x) in sorted.iter().enumerate() {
        let u = (i as f64 + 0.5) / n as f64;
        diffs.push((x - table.quantile(u)?).abs());
    }
    Ok(compensated_sum(&diffs) / n as f64)
}

pub fn wasserstein_to_vg(s: &SampleSet, p: &VGParams) -> Result<f64> {
    wasserstein_to_table(s, &CdfTable::build(p)?)
}

/// Unbiased cumulant estimates with batch-means standard errors.
#[derive(Debug, Clone)]
pub struct CumulantEstimate {
    pub estimate: CumulantSet,
    pub std_error: [f64; 6],
    pub n: usize,
}

impl CumulantEstimate {
    /// Absolute z-score of the estimate against a reference value.
    pub fn z_score(&self, order: usize, reference: f64) -> f64 {
        (self.estimate.kappa(order) - reference).abs() / self.std_error[order - 1]
    }
}

fn k_stats_raw(xs: &[f64]) -> [f64; 6] {
    let n = xs.len() as f64;
    let mean = compensated_mean(xs);
    let mut sums = [0.0f64; 5]; // powers 2..6 of deviations
    let mut comps = [0.0f64; 5];
    for &x in xs {
        let d = x - mean;
        let mut p = d;
        for k in 0..5 {
            p *= d;
            // Neumaier step.
            let t = sums[k] + p;
            if sums[k].abs() >= p.abs() {
                comps[k] += (sums[k] - t) + p;
            } else {
                comps[k] += (p - t) + sums[k];
            }
            sums[k] = t;
        }
    }
    let m: Vec<f64> = (0..5).map(|k| (sums[k] + comps[k]) / n).collect();
    let (m2, m3, m4, m5, m6) = (m[0], m[1], m[2], m[3], m[4]);

    let k2 = n / (n - 1.0) * m2;
    let k3 = n / (n - 1.0) * n / (n - 2.0) * m3;
    let k4 = n / (n - 1.0) * n / (n - 2.0) / (n - 3.0) * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2);
    let k5 = n / (n - 1.0) * n / (n - 2.0) * n / (n - 3.0) / (n - 4.0)
        * ((n + 5.0) * m5 - 10.0 * (n - 1.0) * m2 * m3);
    let k6 = n / (n - 1.0) * n / (n - 2.0) / ((n - 3.0) * (n - 4.0) * (n - 5.0))
        * ((n + 1.0) * (n * n + 15.0 * n - 4.0) * m6
            - 15.0 * (n - 1.0) * (n - 1.0) * (n + 4.0) * m2 * m4
            - 10.0 * (n - 1.0) * (n * n - n + 4.0) * m3 * m3
            + 30.0 * n * (n - 1.0) * (n - 2.0) * m2 * m2 * m2);
    [mean, k2, k3, k4, k5, k6]
}

/// k-statistics (minimum-variance unbiased cumulant estimators) through
/// order `up_to <= 6`, with batch-means standard errors.
pub fn k_statistics(s: &SampleSet, up_to: usize) -> Result<CumulantEstimate> {
    if up_to > 6 || up_to < 2 {
        return Err(VgError::InvalidParameter {
            name: "up_to",
            reason: format!("supported orders are 2..=6, got {up_to}"),
        });
    }
    let n = s.len();
    if n < 7 {
        return Err(VgError::SampleTooSmall { required: 7, got: n });
    }
    let full = k_stats_raw(s.values());
    let nb = if n >= 7 * MC_BATCHES { MC_BATCHES } else { (n / 7).clamp(2, MC_BATCHES) };
    let batch = n / nb;
    let mut batch_stats: Vec<[f64; 6]> = Vec::with_capacity(nb);
    for b in 0..nb {
        let lo = b * batch;
        let hi = if b + 1 == nb { n } else { lo + batch };
        batch_stats.push(k_stats_raw(&s.values()[lo..hi]));
    }
    let mut se = [0.0f64; 6];
    for j in 0..6 {
        let mean = batch_stats.iter().map(|k| k[j]).sum::<f64>() / nb as f64;
        let var = batch_stats
            .iter()
            .map(|k| (k[j] - mean) * (k[j] - mean))
            .sum::<f64>()
            / (nb - 1) as f64;
        se[j] = (var / nb as f64).sqrt();
    }
    Ok(CumulantEstimate {
        estimate: CumulantSet::from_kappas(full),
        std_error: se,
        n,
    })
}

/// Symmetric coefficients vanishing on diagonals, stored canonically on
/// strictly increasing index tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousCoeff {
    n: usize,
    q: usize,
    /// Sorted by index tuple; `h(i_1..i_q)` for `i_1 < .. < i_q`.
    terms: Vec<(Vec<usize>, f64)>,
}

impl HomogeneousCoeff {
    /// From explicit canonical entries (strictly increasing tuples).
    pub fn new(n: usize, q: usize, mut terms: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        if q < 1 || n < q {
            return Err(VgError::InvalidCoefficients {
                reason: format!("need q >= 1 and n >= q, got n={n}, q={q}"),
            });
        }
        for (idx, _) in &terms {
            if idx.len() != q {
                return Err(VgError::InvalidCoefficients {
                    reason: format!("index tuple {:?} has wrong arity", idx),
                });
            }
            if idx.windows(2).any(|w| w[0] >= w[1]) || idx.iter().any(|&i| i >= n) {
                return Err(VgError::InvalidCoefficients {
                    reason: format!("index tuple {:?} not strictly increasing inside 0..{n}", idx),
                });
            }
        }
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(VgError::InvalidCoefficients {
                reason: "duplicate index tuple".into(),
            });
        }
        Ok(HomogeneousCoeff { n, q, terms })
    }

    /// Evaluates the canonical coefficient over every index tuple via
    /// symmetry; zero on diagonals by construction.
    pub fn value(&self, idx: &[usize]) -> f64 {
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return 0.0;
        }
        match self.terms.binary_search_by(|t| t.0.cmp(&sorted)) {
            Ok(k) => self.terms[k].1,
            Err(_) => 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn terms(&self) -> &[(Vec<usize>, f64)] {
        &self.terms
    }

    /// Path-coupling family: `h(i, i+1) = value`, zero elsewhere.
    pub fn banded(n: usize, value: f64) -> Result<Self> {
        let terms = (0..n - 1).map(|i| (vec![i, i + 1], value)).collect();
        Self::new(n, 2, terms)
    }

    /// Banded family normalized so the homogeneous sum has unit variance:
    /// `E[H^2] = 4 sum_{i<j} h^2 = 1`.
    pub fn banded_unit_variance(n: usize) -> Result<Self> {
        Self::banded(n, 0.5 / ((n - 1) as f64).sqrt())
    }

    /// Variance `E[H^2] = (q!)^2 * sum over canonical tuples of h^2`
    /// (unit-variance centred base laws make the monomials orthonormal).
    pub fn sum_variance(&self) -> f64 {
        let qf = factorial(self.q);
        qf * qf * self.terms.iter().map(|(_, v)| v * v).sum::<f64>()
    }

    /// The second-chaos kernel whose Gaussian functional matches the
    /// Gaussian-base homogeneous sum (`q = 2` only): the symmetric matrix
    /// with entries `h(i, j)` off the diagonal.
    pub fn embed_kernel(&self) -> Result<Kernel2> {
        if self.q != 2 {
            return Err(VgError::InvalidCoefficients {
                reason: format!("kernel embedding needs q = 2, got {}", self.q),
            });
        }
        let mut entries = vec![0.0; self.n * self.n];
        for (idx, v) in &self.terms {
            entries[idx[0] * self.n + idx[1]] = *v;
            entries[idx[1] * self.n + idx[0]] = *v;
        }
        Kernel2::new(self.n, entries)
    }

    /// Dense symmetric tensor embedding (desk-scale `n` only).
    pub fn embed_tensor(&self) -> Result<SymTensor> {
        if self.n > MAX_DIM || self.q > MAX_INPUT_ORDER {
            return Err(VgError::Capacity {
                what: "homogeneous coefficient embedding",
                requested: self.n.max(self.q),
                limit: MAX_DIM,
            });
        }
        let size = self.n.pow(self.q as u32);
        let mut data = vec![0.0; size];
        let mut idx = vec![0usize; self.q];
        for (flat, slot) in data.iter_mut().enumerate() {
            crate::tensorq::decode_index(flat, self.n, &mut idx);
            *slot = self.value(&idx);
        }
        SymTensor::new(self.q, self.n, data)
    }
}

/// Unit-variance centred base laws for homogeneous sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseLaw {
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt(3), sqrt(3)]` (scaled to unit variance).
    UniformScaled,
}

impl BaseLaw {
    fn draw(&self, rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        match self {
            BaseLaw::Gaussian => StandardNormal.sample(rng),
            BaseLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            BaseLaw::UniformScaled => (2.0 * rng.random::<f64>() - 1.0) * 3.0f64.sqrt(),
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            BaseLaw::Gaussian => "gaussian",
            BaseLaw::Rademacher => "rademacher",
            BaseLaw::UniformScaled => "uniform",
        }
    }
}

/// i.i.d. draws of the homogeneous sum
/// `H = sum h(i_1..i_q) X_{i_1} .. X_{i_q} = q! sum_{i_1<..<i_q} h(..) X ..`.
pub fn homogeneous_sum(c: &HomogeneousCoeff, base: BaseLaw, n_draws: usize, seed: u64) -> SampleSet {
    let stream = SeedStream::new(seed);
    let qf = factorial(c.q);
    let n = c.n;
    let values = stream.generate(n_draws, |rng| {
        let xs: Vec<f64> = (0..n).map(|_| base.draw(rng)).collect();
        let mut acc = 0.0;
        for (idx, v) in &c.terms {
            let mut prod = qf * v;
            for &i in idx {
                prod *= xs[i];
            }
            acc += prod;
        }
        acc
    });
    SampleSet::new(
        values,
        seed,
        format!("homogeneous_sum(n={},q={},base={})", c.n, c.q, base.tag()),
    )
    .expect("finite draws")
}

/// Multivariate bound assembly for a vector of second-chaos components
/// sharing the same Gaussian coordinates.
///
/// Per component `j` the term `A(j)` couples the Monte Carlo mean of
/// `|sigma_j^2 (F_j + r_j theta_j) + 2 theta_j Gamma_2(F_j) - Gamma_3(F_j)|`
/// with the exact variance gap; per ordered pair the cross term `B(i,j)`
/// is the Monte Carlo mean of `|2 z' A_i A_j z|`. The exact
/// `Cov(F_i^2, F_j^2)` matrix is reported alongside. Constants are 1.
pub fn multivariate_bound(
    kernels: &[Kernel2],
    targets: &[VGParams],
    n_mc: usize,
    seed: u64,
) -> Result<BoundReport> {
    if kernels.is_empty() || kernels.len() != targets.len() {
        return Err(VgError::DimensionMismatch {
            left: kernels.len(),
            right: targets.len(),
        });
    }
    let d = kernels[0].dim();
    for k in kernels {
        if k.dim() != d {
            return Err(VgError::DimensionMismatch {
                left: k.dim(),
                right: d,
            });
        }
    }
    for t in targets {
        if t.mu() != 0.0 && t.mean() != 0.0 {
            return Err(VgError::NotCentred { mean: t.mean() });
        }
    }
    let m = kernels.len();
    let stream = SeedStream::new(seed);
    let traces: Vec<f64> = kernels.iter().map(|k| k.trace()).collect();

    // Per-draw integrands: one |..| per component, one per ordered pair.
    let mut a_samples: Vec<Vec<f64>> = vec![Vec::with_capacity(n_mc); m];
    let mut b_samples: Vec<Vec<f64>> = vec![Vec::with_capacity(n_mc); m * m];
    let zs = stream.generate(n_mc * d, |rng| StandardNormal.sample(rng));
    for step in 0..n_mc {
        let z = &zs[step * d..(step + 1) * d];
        let az: Vec<Vec<f64>> = kernels.iter().map(|k| k.matvec(z)).collect();
        let a2z: Vec<Vec<f64>> = kernels.iter().zip(&az).map(|(k, v)| k.matvec(v)).collect();
        for j in 0..m {
            let t = &targets[j];
            let (r, th, s2) = (t.r(), t.theta(), t.sigma() * t.sigma());
            let f = dot(z, &az[j]) - traces[j];
            let g2 = 2.0 * dot(&az[j], &az[j]);
            let g3 = 4.0 * dot(&az[j], &a2z[j]);
            a_samples[j].push((s2 * (f + r * th) + 2.0 * th * g2 - g3).abs());
            for i in 0..m {
                if i != j {
                    b_samples[i * m + j].push((2.0 * dot(&az[i], &az[j])).abs());
                }
            }
        }
    }

    let mut report = BoundReport::new();
    let mut total = 0.0;
    for j in 0..m {
        let (mean, se) = mean_and_batch_se(&a_samples[j], MC_BATCHES);
        let gap = (targets[j].variance() - cumulant2(&kernels[j], 2)?).abs();
        report.push_estimated(&format!("l1_{}", j + 1), mean, se);
        report.push(&format!("variance_gap_{}", j + 1), gap);
        report.push(&format!("A_{}", j + 1), mean + gap);
        total += mean + gap;
    }
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let (mean, se) = mean_and_batch_se(&b_samples[i * m + j], MC_BATCHES);
                report.push_estimated(&format!("B_{}_{}", i + 1, j + 1), mean, se);
                total += mean;
            }
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            report.push(
                &format!("cov_sq_{}_{}", i + 1, j + 1),
                cov_squares(&kernels[i], &kernels[j])?,
            );
        }
    }
    report.total = total;
    Ok(report)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
