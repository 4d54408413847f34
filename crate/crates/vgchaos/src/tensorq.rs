//! Dense symmetric tensor calculus for chaos kernels of general order.
//!
//! Kernels are dense order-`q` tensors over a `d`-dimensional coordinate
//! space at desk scale (`d <= 6`, `q <= 4`, intermediate order `<= 8`,
//! enforced with explicit capacity errors). Raw contractions are kept
//! unsymmetrized until a symmetrized contraction is required, then
//! symmetrized once; this mirrors the distinction between the plain and
//! the symmetrized pairing and never silently changes values.

use crate::empirical::SampleSet;
use crate::error::{Result, VgError};
use crate::numeric::{binomial, factorial};
use crate::report::BoundReport;
use crate::rng::SeedStream;
use crate::vgdist::VGParams;
use rand_distr::{Distribution, StandardNormal};
use std::collections::BTreeMap;

pub const MAX_DIM: usize = 6;
pub const MAX_INPUT_ORDER: usize = 4;
pub const MAX_RESULT_ORDER: usize = 8;

const SYMMETRY_TOL: f64 = 1e-12;

/// Dense tensor, not necessarily symmetric. Row-major layout: the last
/// index varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    order: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(order: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(VgError::Capacity {
                what: "tensor dimension",
                requested: dim,
                limit: MAX_DIM,
            });
        }
        let size = dim.pow(order as u32);
        if data.len() != size {
            return Err(VgError::DimensionMismatch {
                left: data.len(),
                right: size,
            });
        }
        Ok(Tensor { order, dim, data })
    }

    pub fn zeros(order: usize, dim: usize) -> Self {
        Tensor {
            order,
            dim,
            data: vec![0.0; dim.pow(order as u32)],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[flat_index(idx, self.dim)]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Tensor invariant under every index permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    inner: Tensor,
}

impl SymTensor {
    /// Validates full permutation symmetry through all adjacent
    /// transpositions (they generate the symmetric group).
    pub fn new(order: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if order > MAX_INPUT_ORDER && order > 0 {
            // Orders above the desk cap only arise as contraction results;
            // constructing them directly is allowed up to the result cap.
            if order > MAX_RESULT_ORDER {
                return Err(VgError::Capacity {
                    what: "tensor order",
                    requested: order,
                    limit: MAX_RESULT_ORDER,
                });
            }
        }
        let t = Tensor::new(order, dim, data)?;
        let scale = t.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if order >= 2 {
            let mut idx = vec![0usize; order];
            for flat in 0..t.data.len() {
                decode_index(flat, dim, &mut idx);
                for s in 0..order - 1 {
                    if idx[s] < idx[s + 1] {
                        let mut swapped = idx.clone();
                        swapped.swap(s, s + 1);
                        let other = t.data[flat_index(&swapped, dim)];
                        if (t.data[flat] - other).abs() > SYMMETRY_TOL * scale {
                            return Err(VgError::InvalidParameter {
                                name: "data",
                                reason: format!(
                                    "not symmetric at {:?} swap ({},{}): {} vs {}",
                                    idx,
                                    s,
                                    s + 1,
                                    t.data[flat],
                                    other
                                ),
                            });
                        }
                    }
                }
            }
        }
        Ok(SymTensor { inner: t })
    }

    fn from_symmetric_unchecked(inner: Tensor) -> Self {
        SymTensor { inner }
    }

    pub fn zeros(order: usize, dim: usize) -> Self {
        SymTensor {
            inner: Tensor::zeros(order, dim),
        }
    }

    /// `e_j ^ (tensor q)`: the rank-one kernel concentrated on coordinate `j`.
    pub fn basis_power(order: usize, dim: usize, j: usize) -> Self {
        let mut t = Tensor::zeros(order, dim);
        let idx = vec![j; order];
        t.data[flat_index(&idx, dim)] = 1.0;
        SymTensor { inner: t }
    }

    /// Scalar (order-0) tensor.
    pub fn scalar(dim: usize, value: f64) -> Self {
        SymTensor {
            inner: Tensor {
                order: 0,
                dim,
                data: vec![value],
            },
        }
    }

    pub fn order(&self) -> usize {
        self.inner.order
    }
    pub fn dim(&self) -> usize {
        self.inner.dim
    }
    pub fn data(&self) -> &[f64] {
        &self.inner.data
    }
    pub fn as_tensor(&self) -> &Tensor {
        &self.inner
    }
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.inner.get(idx)
    }
    pub fn norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn inner_product(&self, other: &SymTensor) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(VgError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        if self.order() != other.order() {
            return Err(VgError::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(self
            .data()
            .iter()
            .zip(other.data())
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn scale(&self, c: f64) -> SymTensor {
        SymTensor {
            inner: Tensor {
                order: self.order(),
                dim: self.dim(),
                data: self.data().iter().map(|v| c * v).collect(),
            },
        }
    }

    pub fn add_scaled(&self, other: &SymTensor, c: f64) -> Result<SymTensor> {
        if self.dim() != other.dim() || self.order() != other.order() {
            return Err(VgError::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(SymTensor {
            inner: Tensor {
                order: self.order(),
                dim: self.dim(),
                data: self
                    .data()
                    .iter()
                    .zip(other.data())
                    .map(|(a, b)| a + c * b)
                    .collect(),
            },
        })
    }

    /// Text form: `order dim` header line, then the flat entries.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.order(), self.dim());
        for v in self.data() {
            s.push_str(&format!("{:.16e}\n", v));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or(VgError::InvalidParameter {
            name: "tensor text",
            reason: "missing header".into(),
        })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(VgError::InvalidParameter {
                name: "tensor text",
                reason: "header must be `order dim`".into(),
            });
        }
        let order: usize = parts[0].parse().map_err(|_| VgError::InvalidParameter {
            name: "tensor text",
            reason: "bad order".into(),
        })?;
        let dim: usize = parts[1].parse().map_err(|_| VgError::InvalidParameter {
            name: "tensor text",
            reason: "bad dim".into(),
        })?;
        let data: std::result::Result<Vec<f64>, _> = lines.map(|l| l.trim().parse::<f64>()).collect();
        let data = data.map_err(|e| VgError::InvalidParameter {
            name: "tensor text",
            reason: e.to_string(),
        })?;
        SymTensor::new(order, dim, data)
    }
}

pub fn flat_index(idx: &[usize], dim: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

pub fn decode_index(mut flat: usize, dim: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}

/// Contraction of the last `r` slots of `f` against the first `r` slots of
/// `g`. The result has order `p + q - 2r` and is in general not symmetric.
pub fn contract(f: &SymTensor, g: &SymTensor, r: usize) -> Result<Tensor> {
    if f.dim() != g.dim() {
        return Err(VgError::DimensionMismatch {
            left: f.dim(),
            right: g.dim(),
        });
    }
    let (p, q, d) = (f.order(), g.order(), f.dim());
    if r > p.min(q) {
        return Err(VgError::ContractionRange { r, max: p.min(q) });
    }
    let out_order = p + q - 2 * r;
    if out_order > MAX_RESULT_ORDER {
        return Err(VgError::Capacity {
            what: "contraction result order",
            requested: out_order,
            limit: MAX_RESULT_ORDER,
        });
    }
    let rows = d.pow((p - r) as u32);
    let mid = d.pow(r as u32);
    let cols = d.pow((q - r) as u32);
    let mut out = vec![0.0; rows * cols];
    let fd = f.data();
    let gd = g.data();
    for i in 0..rows {
        let frow = &fd[i * mid..(i + 1) * mid];
        let orow = &mut out[i * cols..(i + 1) * cols];
        for (k, &fv) in frow.iter().enumerate() {
            if fv == 0.0 {
                continue;
            }
            let grow = &gd[k * cols..(k + 1) * cols];
            for (o, &gv) in orow.iter_mut().zip(grow) {
                *o += fv * gv;
            }
        }
    }
    Tensor::new(out_order, d, out)
}

/// Canonical symmetrization: the average over all index permutations,
/// computed exactly through orbit means (each entry of the symmetrized
/// tensor is the mean of the input over the orbit of its index multiset).
pub fn symmetrize(t: &Tensor) -> Result<SymTensor> {
    let k = t.order();
    if k > MAX_RESULT_ORDER {
        return Err(VgError::Capacity {
            what: "symmetrization order",
            requested: k,
            limit: MAX_RESULT_ORDER,
        });
    }
    if k <= 1 {
        return Ok(SymTensor::from_symmetric_unchecked(t.clone()));
    }
    let d = t.dim();
    let size = t.data().len();
    let mut sums = vec![0.0f64; size];
    let mut counts = vec![0u32; size];
    let mut idx = vec![0usize; k];
    let mut sorted = vec![0usize; k];
    for flat in 0..size {
        decode_index(flat, d, &mut idx);
        sorted.copy_from_slice(&idx);
        sorted.sort_unstable();
        let canon = flat_index(&sorted, d);
        sums[canon] += t.data()[flat];
        counts[canon] += 1;
    }
    let mut out = vec![0.0f64; size];
    for flat in 0..size {
        decode_index(flat, d, &mut idx);
        sorted.copy_from_slice(&idx);
        sorted.sort_unstable();
        let canon = flat_index(&sorted, d);
        out[flat] = sums[canon] / counts[canon] as f64;
    }
    Ok(SymTensor::from_symmetric_unchecked(Tensor {
        order: k,
        dim: d,
        data: out,
    }))
}

/// Symmetrized contraction.
pub fn sym_contract(f: &SymTensor, g: &SymTensor, r: usize) -> Result<SymTensor> {
    symmetrize(&contract(f, g, r)?)
}

/// The combinatorial constants attached to iterated contractions in the
/// Gamma representation:
/// `c_q(r) = q (r-1)! C(q-1, r-1)^2` and recursively
/// `c_q(r_1..r_a) = q (r_a-1)! C(a q - 2(r_1+..+r_{a-1}) - 1, r_a - 1)
///                  C(q-1, r_a-1) c_q(r_1..r_{a-1})`.
///
/// The index list must be admissible: each `r_i` is between 1 and the
/// order of the accumulated tensor (capped at `q`), and every proper
/// prefix leaves a tensor of positive order.
pub fn cq(q: usize, rs: &[usize]) -> Result<f64> {
    if q < 2 || rs.is_empty() {
        return Err(VgError::InadmissibleIndices {
            q,
            indices: rs.to_vec(),
        });
    }
    let mut c = 1.0;
    let mut prefix = 0usize;
    for (i, &r) in rs.iter().enumerate() {
        let a = i + 1;
        let lhs_order = a * q - 2 * prefix;
        if r < 1 || r > lhs_order.min(q) {
            return Err(VgError::InadmissibleIndices {
                q,
                indices: rs.to_vec(),
            });
        }
        c *= q as f64 * factorial(r - 1) * binomial(lhs_order - 1, r - 1) * binomial(q - 1, r - 1);
        prefix += r;
        if i + 1 < rs.len() && 2 * prefix >= (a + 1) * q {
            return Err(VgError::InadmissibleIndices {
                q,
                indices: rs.to_vec(),
            });
        }
    }
    Ok(c)
}

/// Second Gamma functional decomposed by chaos level:
/// a constant `q! ||f||^2` plus kernels `c_q(r) (f ~x_r f)` at level
/// `2q - 2r`, `r = 1..q-1`.
#[derive(Debug, Clone)]
pub struct Gamma2Decomposition {
    pub constant: f64,
    /// Chaos order -> kernel (coefficients already applied).
    pub levels: BTreeMap<usize, SymTensor>,
}

pub fn gamma2_decomp(f: &SymTensor) -> Result<Gamma2Decomposition> {
    let q = f.order();
    if q < 2 {
        return Err(VgError::InvalidParameter {
            name: "f",
            reason: format!("chaos order must be >= 2, got {q}"),
        });
    }
    let norm2 = f.inner_product(f)?;
    let mut levels = BTreeMap::new();
    for r in 1..q {
        let kernel = sym_contract(f, f, r)?.scale(cq(q, &[r])?);
        levels.insert(2 * q - 2 * r, kernel);
    }
    Ok(Gamma2Decomposition {
        constant: factorial(q) * norm2,
        levels,
    })
}

/// Third Gamma functional decomposed by chaos level. For even `q` the
/// levels are `0, 2, .., 3q-4`; for odd `q` they are odd
/// (`1, 3, .., 3q-4`), mirroring the even construction with `p = q - 1`.
#[derive(Debug, Clone)]
pub struct GammaDecomposition {
    pub q: usize,
    pub dim: usize,
    /// Chaos order -> kernel `g_k` (coefficients applied).
    pub levels: BTreeMap<usize, SymTensor>,
}

impl GammaDecomposition {
    /// The level-0 scalar, present only for even `q`; equals
    /// `E[I_q(f)^3] / 2`, hence also `E[Gamma_3]`.
    pub fn level0(&self) -> Option<f64> {
        self.levels.get(&0).map(|t| t.data()[0])
    }

    /// `E[Gamma_3^2]`: the sum of `(order)! ||g||^2` over levels, by the
    /// isometry of multiple integrals.
    pub fn second_moment(&self) -> f64 {
        self.levels
            .iter()
            .map(|(&order, g)| factorial(order) * g.data().iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

pub fn gamma3_decomp(f: &SymTensor) -> Result<GammaDecomposition> {
    let q = f.order();
    if q < 2 {
        return Err(VgError::InvalidParameter {
            name: "f",
            reason: format!("chaos order must be >= 2, got {q}"),
        });
    }
    let mut levels: BTreeMap<usize, SymTensor> = BTreeMap::new();
    // Admissible double contractions (r, s): r in 1..q (the first
    // contraction leaves a positive-order tensor), s in 1..=min(2q-2r, q).
    for r in 1..q {
        let inner = sym_contract(f, f, r)?;
        for s in 1..=(2 * q - 2 * r).min(q) {
            let coeff = cq(q, &[r, s])?;
            let kernel = sym_contract(&inner, f, s)?.scale(coeff);
            let order = 3 * q - 2 * r - 2 * s;
            match levels.entry(order) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(kernel);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let updated = e.get().add_scaled(&kernel, 1.0)?;
                    e.insert(updated);
                }
            }
        }
    }
    Ok(GammaDecomposition {
        q,
        dim: f.dim(),
        levels,
    })
}

/// `E[Gamma_3(I_q(f))^2]` from the level decomposition.
pub fn gamma3_second_moment(f: &SymTensor) -> Result<f64> {
    Ok(gamma3_decomp(f)?.second_moment())
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

/// Contraction-norm form of the squared-bound interior
/// `E[(sigma^2 (F + r theta) + 2 theta Gamma_2 - Gamma_3)^2]` for a chaos
/// kernel of even order (any order when the target is symmetric).
///
/// Terms: the squared third-moment gap, the middle-level norm, the
/// theta-corrected low levels and the uncorrected top levels.
pub fn vg_contraction_bound(f: &SymTensor, target: &VGParams) -> Result<BoundReport> {
    require_centred(target)?;
    let q = f.order();
    let theta = target.theta();
    if q % 2 == 1 && theta != 0.0 {
        return Err(VgError::OddChaosAsymmetricTarget { q, theta });
    }
    let (r_target, s2) = (target.r(), target.sigma() * target.sigma());
    let decomp = gamma3_decomp(f)?;
    let m2 = factorial(q) * f.inner_product(f)?;
    let m3 = 2.0 * decomp.level0().unwrap_or(0.0);
    let third_gap = 0.5 * m3 - (2.0 * theta * m2 + r_target * theta * s2);
    let p1 = third_gap * third_gap;

    // Middle level: the I_q coefficient of Gamma_3 - 2 theta Gamma_2 - sigma^2 F.
    let mut middle = decomp
        .levels
        .get(&q)
        .cloned()
        .unwrap_or_else(|| SymTensor::zeros(q, f.dim()));
    if theta != 0.0 {
        // Even q here; Gamma_2's middle level is c_q(q/2) (f ~x_{q/2} f).
        let g2_mid = sym_contract(f, f, q / 2)?.scale(cq(q, &[q / 2])?);
        middle = middle.add_scaled(&g2_mid, -2.0 * theta)?;
    }
    middle = middle.add_scaled(f, -s2)?;
    let p2 = factorial(q) * middle.inner_product(&middle)?;

    // Remaining levels: theta-corrections live at the Gamma_2 levels
    // 2q - 2r (r = 1..q-1); everything above is Gamma_3-only.
    let mut p3 = 0.0;
    let mut p4 = 0.0;
    for (&order, g) in &decomp.levels {
        if order == 0 || order == q {
            continue;
        }
        let corrected = if theta != 0.0 && order < 2 * q && order % 2 == 0 {
            let r = q - order / 2; // Gamma_2 level 2q - 2r = order
            let g2_level = sym_contract(f, f, r)?.scale(cq(q, &[r])?);
            g.add_scaled(&g2_level, -2.0 * theta)?
        } else {
            g.clone()
        };
        let contribution = factorial(order) * corrected.inner_product(&corrected)?;
        if order < 2 * q {
            p3 += contribution;
        } else {
            p4 += contribution;
        }
    }

    let mut report = BoundReport::new();
    report.push("third_moment_gap_sq", p1);
    report.push("middle_level", p2);
    report.push("low_levels", p3);
    report.push("top_levels", p4);
    let interior = p1 + p2 + p3 + p4;
    report.push("interior", interior);
    let variance_gap = (target.variance() - m2).abs();
    report.push("sqrt_interior", interior.max(0.0).sqrt());
    report.push("variance_gap", variance_gap);
    report.total = interior.max(0.0).sqrt() + variance_gap;
    Ok(report)
}

/// Symmetric-target contraction functional
/// `E[(F / lambda^2 - Gamma_3)^2]`, valid for both parities of `q`.
pub fn symgamma_contraction_bound(f: &SymTensor, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(VgError::InvalidParameter {
            name: "lambda",
            reason: format!("rate must be positive, got {lambda}"),
        });
    }
    let q = f.order();
    if q < 2 {
        return Err(VgError::InvalidParameter {
            name: "f",
            reason: format!("chaos order must be >= 2, got {q}"),
        });
    }
    let decomp = gamma3_decomp(f)?;
    let inv_l2 = 1.0 / (lambda * lambda);
    let mut middle = decomp
        .levels
        .get(&q)
        .cloned()
        .unwrap_or_else(|| SymTensor::zeros(q, f.dim()));
    middle = middle.add_scaled(f, -inv_l2)?;
    let mut total = factorial(q) * middle.inner_product(&middle)?;
    for (&order, g) in &decomp.levels {
        if order == q {
            continue;
        }
        total += factorial(order) * g.inner_product(g)?;
    }
    Ok(total)
}

/// Upper bound for a sum of two chaoses against a symmetric target:
/// `8` times the two own middle-level mismatches plus the cross-term sum
/// with its combinatorial coefficients.
pub fn mixed_sum_bound(f1: &SymTensor, f2: &SymTensor, lambda: f64) -> Result<f64> {
    let (q1, q2) = (f1.order(), f2.order());
    if q1 < 2 || q1 >= q2 {
        return Err(VgError::InvalidParameter {
            name: "orders",
            reason: format!("need 2 <= q1 < q2, got q1={q1}, q2={q2}"),
        });
    }
    if f1.dim() != f2.dim() {
        return Err(VgError::DimensionMismatch {
            left: f1.dim(),
            right: f2.dim(),
        });
    }
    let inv_l2 = 1.0 / (lambda * lambda);
    let mut total = 0.0;
    for f in [f1, f2] {
        let q = f.order();
        let mut own = f.scale(inv_l2);
        for r in 1..q {
            let inner = sym_contract(f, f, r)?;
            let term = sym_contract(&inner, f, q - r)?;
            own = own.add_scaled(&term, -cq(q, &[r, q - r])?)?;
        }
        total += 8.0 * own.inner_product(&own)?;
    }

    // Cross terms over (i, j, k, r, s) with the displayed coefficients;
    // ranges intersected with well-definedness of the contractions.
    let fs = [f1, f2];
    let qs = [q1, q2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let r_max = qs[i].min(qs[j]).min(qs[k]);
                for r in 1..=r_max {
                    let inner = sym_contract(fs[j], fs[k], r)?;
                    let s_max = qs[i].min(qs[j] + qs[k] - 2 * r);
                    for s in 1..=s_max {
                        if i == j && j == k && (r == qs[i] || s == qs[i] - r) {
                            continue;
                        }
                        let term = sym_contract(fs[i], &inner, s)?;
                        let coeff = (qs[i] * qs[j]) as f64
                            * factorial(r - 1)
                            * binomial(qs[i] - 1, r - 1)
                            * binomial(qs[j] - 1, r - 1)
                            * factorial(s - 1)
                            * binomial(qs[i] - 1, s - 1)
                            * binomial(qs[j] + qs[k] - 2 * r - 1, s - 1);
                        total += coeff * term.inner_product(&term)?;
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Probabilists' Hermite values `H_0..H_max` at `x`.
fn hermite_row(x: f64, max: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(max + 1);
    h.push(1.0);
    if max >= 1 {
        h.push(x);
    }
    for k in 1..max {
        let next = x * h[k] - k as f64 * h[k - 1];
        h.push(next);
    }
    h
}

/// Evaluation plan for `I_q(f)` as a polynomial in the Gaussian
/// coordinates: one term per non-decreasing multi-index, weighted by the
/// orbit size.
struct EvalPlan {
    q: usize,
    dim: usize,
    /// (coefficient * orbit weight, multiplicities as (coordinate, power))
    terms: Vec<(f64, Vec<(usize, usize)>)>,
}

impl EvalPlan {
    fn new(f: &SymTensor) -> Self {
        let (q, d) = (f.order(), f.dim());
        let mut terms = Vec::new();
        let mut idx = vec![0usize; q];
        loop {
            let coeff = f.get(&idx);
            if coeff != 0.0 {
                let mut mults: Vec<(usize, usize)> = Vec::new();
                for &j in &idx {
                    match mults.last_mut() {
                        Some((jj, m)) if *jj == j => *m += 1,
                        _ => mults.push((j, 1)),
                    }
                }
                let mut orbit = factorial(q);
                for &(_, m) in &mults {
                    orbit /= factorial(m);
                }
                terms.push((coeff * orbit, mults));
            }
            // Next non-decreasing index.
            let mut pos = q;
            loop {
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
                pos -= 1;
                if idx[pos] + 1 < d {
                    let v = idx[pos] + 1;
                    for slot in idx.iter_mut().skip(pos) {
                        *slot = v;
                    }
                    break;
                }
            }
            if pos == usize::MAX {
                break;
            }
        }
        EvalPlan { q, dim: d, terms }
    }

    fn eval(&self, z: &[f64]) -> f64 {
        let table: Vec<Vec<f64>> = z.iter().map(|&x| hermite_row(x, self.q)).collect();
        let mut acc = 0.0;
        for (w, mults) in &self.terms {
            let mut prod = *w;
            for &(j, m) in mults {
                prod *= table[j][m];
            }
            acc += prod;
        }
        acc
    }
}

/// `I_q(f)` evaluated at Gaussian coordinates `z`: the Hermite-product
/// polynomial `sum_idx f[idx] prod_j H_{m_j}(z_j)` with `m_j` the
/// multiplicity of coordinate `j` in `idx`.
pub fn multiple_integral_at(f: &SymTensor, z: &[f64]) -> Result<f64> {
    if z.len() != f.dim() {
        return Err(VgError::DimensionMismatch {
            left: z.len(),
            right: f.dim(),
        });
    }
    Ok(EvalPlan::new(f).eval(z))
}

/// i.i.d. samples of `I_q(f)` over standard Gaussian coordinates.
pub fn sample_multiple_integral(f: &SymTensor, n: usize, seed: u64) -> SampleSet {
    let plan = EvalPlan::new(f);
    let d = plan.dim;
    let stream = SeedStream::new(seed);
    let values = stream.generate(n, |rng| {
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        plan.eval(&z)
    });
    SampleSet::new(values, seed, format!("chaosq(q={},dim={d})", plan.q)).expect("finite draws")
}

/// Double-versus-single contraction comparison: every double contraction
/// of positive order against `max_l ||f x_l f||^{3/2}`.
///
/// Pairs whose double contraction collapses to a scalar
/// (`3q - 2r - 2r' = 0`) are excluded from the margin: the scalar is the
/// third-moment functional `<f ~x_{q/2} f, f>`, for which the `3/2`-power
/// domination fails (a two-eigenvalue kernel with weights 0.9/0.1 gives
/// `|tr A^3| = 0.885 > ||A^2||^{3/2} = 0.862`); it is reported separately
/// with its Cauchy-Schwarz cap `||f x_{q/2} f|| * ||f||`.
#[derive(Debug, Clone)]
pub struct ContractionComparison {
    /// `(r, r', ||(f ~x_r f) ~x_{r'} f||)` over positive-order results.
    pub double_norms: Vec<(usize, usize, f64)>,
    /// `max_l ||f x_l f||` over `l = 1..q-1` (plain contraction).
    pub single_max: f64,
    /// `min (single_max^{3/2} - double_norm)`; the inequality holds when
    /// this is non-negative (up to rounding).
    pub worst_margin: f64,
    /// `|<f ~x_{q/2} f, f>|` and its Cauchy-Schwarz bound, for even `q`.
    pub scalar_case: Option<(f64, f64)>,
}

pub fn double_vs_single_contraction_check(f: &SymTensor) -> Result<ContractionComparison> {
    let q = f.order();
    if q < 2 {
        return Err(VgError::InvalidParameter {
            name: "f",
            reason: format!("chaos order must be >= 2, got {q}"),
        });
    }
    let mut single_max = 0.0f64;
    for l in 1..q {
        single_max = single_max.max(contract(f, f, l)?.norm());
    }
    let rhs = single_max.powf(1.5);
    let mut double_norms = Vec::new();
    let mut worst = f64::INFINITY;
    let mut scalar_case = None;
    for r in 1..q {
        let inner = sym_contract(f, f, r)?;
        for rp in 1..=(2 * q - 2 * r).min(q) {
            let value = sym_contract(&inner, f, rp)?;
            if 3 * q == 2 * r + 2 * rp {
                let cap = contract(f, f, q / 2)?.norm() * f.norm();
                scalar_case = Some((value.norm(), cap));
                continue;
            }
            let norm = value.norm();
            worst = worst.min(rhs - norm);
            double_norms.push((r, rp, norm));
        }
    }
    Ok(ContractionComparison {
        double_norms,
        single_max,
        worst_margin: worst,
        scalar_case,
    })
}
