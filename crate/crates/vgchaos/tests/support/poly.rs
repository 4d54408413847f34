//! Exact polynomial algebra over Gaussian coordinates: an independent
//! Malliavin-recursion oracle.
//!
//! Functionals are multivariate polynomials in `z = (z_1..z_d)`. The
//! gradient gives the derivative operator, chaos projections come from
//! exact monomial-to-Hermite conversion, and the pseudo-inverse of the
//! generator divides each chaos projection by minus its order. Iterating
//! `G_{j+1} = <grad F, -grad Linv G_j>` reproduces the Gamma functionals
//! with no reference to the closed forms under test.

use std::collections::BTreeMap;

const EPS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct MPoly {
    pub dim: usize,
    pub terms: BTreeMap<Vec<u32>, f64>,
}

impl MPoly {
    pub fn zero(dim: usize) -> Self {
        MPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = MPoly::zero(dim);
        p.insert(vec![0; dim], c);
        p
    }

    pub fn var(dim: usize, j: usize) -> Self {
        let mut e = vec![0u32; dim];
        e[j] = 1;
        let mut p = MPoly::zero(dim);
        p.insert(e, 1.0);
        p
    }

    pub fn insert(&mut self, exps: Vec<u32>, coeff: f64) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(e) => {
                if coeff != 0.0 {
                    e.insert(coeff);
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().abs() < EPS {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.insert(e.clone(), c);
        }
        out
    }

    pub fn scale(&self, c: f64) -> MPoly {
        MPoly {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), c * v)).collect(),
        }
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        let mut out = MPoly::zero(self.dim);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.insert(e, ca * cb);
            }
        }
        out
    }

    pub fn diff(&self, j: usize) -> MPoly {
        let mut out = MPoly::zero(self.dim);
        for (e, &c) in &self.terms {
            if e[j] > 0 {
                let mut en = e.clone();
                en[j] -= 1;
                out.insert(en, c * e[j] as f64);
            }
        }
        out
    }

    /// `E[P(Z)]` for iid standard normals: product over variables of the
    /// raw moments `E[Z^n] = (n-1)!!` (odd orders vanish).
    pub fn gaussian_expectation(&self) -> f64 {
        let mut total = 0.0;
        'term: for (e, &c) in &self.terms {
            let mut prod = c;
            for &n in e {
                if n % 2 == 1 {
                    continue 'term;
                }
                prod *= double_factorial(n.saturating_sub(1));
            }
            total += prod;
        }
        total
    }

    /// Decomposition into chaos levels: `P = sum_m J_m(P)` where `J_m`
    /// projects onto Hermite total degree `m`. Each projection is
    /// returned as a plain polynomial again.
    pub fn chaos_projections(&self) -> BTreeMap<usize, MPoly> {
        let mut hermite_coeffs: BTreeMap<usize, BTreeMap<Vec<u32>, f64>> = BTreeMap::new();
        for (e, &c) in &self.terms {
            // Per-variable monomial -> Hermite coefficients.
            let per_var: Vec<Vec<(u32, f64)>> = e
                .iter()
                .map(|&n| {
                    monomial_to_hermite(n)
                        .into_iter()
                        .enumerate()
                        .filter(|(_, v)| *v != 0.0)
                        .map(|(k, v)| (k as u32, v))
                        .collect()
                })
                .collect();
            // Tensor product over variables.
            let mut stack: Vec<(Vec<u32>, f64)> = vec![(Vec::with_capacity(self.dim), c)];
            for choices in &per_var {
                let mut next = Vec::with_capacity(stack.len() * choices.len());
                for (prefix, coeff) in &stack {
                    for &(k, v) in choices {
                        let mut p = prefix.clone();
                        p.push(k);
                        next.push((p, coeff * v));
                    }
                }
                stack = next;
            }
            for (kvec, coeff) in stack {
                let m: u32 = kvec.iter().sum();
                *hermite_coeffs
                    .entry(m as usize)
                    .or_default()
                    .entry(kvec)
                    .or_insert(0.0) += coeff;
            }
        }
        // Expand each Hermite combination back into monomials.
        let mut out = BTreeMap::new();
        for (m, combo) in hermite_coeffs {
            let mut proj = MPoly::zero(self.dim);
            for (kvec, coeff) in combo {
                if coeff.abs() < EPS {
                    continue;
                }
                let mut prod = MPoly::constant(self.dim, coeff);
                for (j, &k) in kvec.iter().enumerate() {
                    if k > 0 {
                        prod = prod.mul(&hermite_poly(self.dim, j, k));
                    }
                }
                proj = proj.add(&prod);
            }
            if !proj.terms.is_empty() {
                out.insert(m, proj);
            }
        }
        out
    }

    /// `-L^{-1} P`: divides each chaos projection of order `m >= 1` by `m`
    /// and drops the constant.
    pub fn neg_linv(&self) -> MPoly {
        let mut out = MPoly::zero(self.dim);
        for (m, proj) in self.chaos_projections() {
            if m >= 1 {
                out = out.add(&proj.scale(1.0 / m as f64));
            }
        }
        out
    }
}

fn double_factorial(n: u32) -> f64 {
    let mut v = 1.0;
    let mut k = n;
    while k > 1 {
        v *= k as f64;
        k -= 2;
    }
    v
}

/// Probabilists' Hermite `H_k(z_j)` as a polynomial.
fn hermite_poly(dim: usize, j: usize, k: u32) -> MPoly {
    let mut hm1 = MPoly::constant(dim, 1.0);
    if k == 0 {
        return hm1;
    }
    let x = MPoly::var(dim, j);
    let mut h = x.clone();
    for n in 1..k {
        let next = x.mul(&h).add(&hm1.scale(-(n as f64)));
        hm1 = h;
        h = next;
    }
    h
}

/// Coefficients `c_k` in `x^n = sum_k c_k H_k(x)`:
/// `c_k = n! / (2^{(n-k)/2} ((n-k)/2)! k!)` for `k = n, n-2, ..`.
fn monomial_to_hermite(n: u32) -> Vec<f64> {
    let mut out = vec![0.0; n as usize + 1];
    let fact = |m: u32| -> f64 { (1..=m).map(|v| v as f64).product() };
    let mut k = n as i64;
    while k >= 0 {
        let half = (n as i64 - k) / 2;
        out[k as usize] =
            fact(n) / (2f64.powi(half as i32) * fact(half as u32) * fact(k as u32));
        k -= 2;
    }
    out
}

/// `I_q(f)` as a polynomial: `sum_idx f[idx] prod_j H_{mult_j}(z_j)`.
pub fn multiple_integral_poly(f: &vgchaos::tensorq::SymTensor) -> MPoly {
    let (q, d) = (f.order(), f.dim());
    let mut out = MPoly::zero(d);
    let mut idx = vec![0usize; q];
    let size = d.pow(q as u32);
    for flat in 0..size {
        vgchaos::tensorq::decode_index(flat, d, &mut idx);
        let c = f.data()[flat];
        if c == 0.0 {
            continue;
        }
        let mut mult = vec![0u32; d];
        for &i in &idx {
            mult[i] += 1;
        }
        let mut prod = MPoly::constant(d, c);
        for (j, &m) in mult.iter().enumerate() {
            if m > 0 {
                prod = prod.mul(&hermite_poly(d, j, m));
            }
        }
        out = out.add(&prod);
    }
    out
}

/// Gamma functionals by the Malliavin recursion:
/// `G_1 = F`, `G_{j+1} = <grad F, -grad Linv G_j>`.
pub fn gamma_poly(f: &MPoly, j: usize) -> MPoly {
    assert!(j >= 1);
    let grad_f: Vec<MPoly> = (0..f.dim).map(|k| f.diff(k)).collect();
    let mut g = f.clone();
    for _ in 1..j {
        let w = g.neg_linv();
        let mut next = MPoly::zero(f.dim);
        for (k, gf) in grad_f.iter().enumerate() {
            next = next.add(&gf.mul(&w.diff(k)));
        }
        g = next;
    }
    g
}

/// Hermite polynomial exposed for oracle self-validation tests.
pub fn hermite_poly_pub(dim: usize, j: usize, k: u32) -> MPoly {
    hermite_poly(dim, j, k)
}
