//! Shared test support: independent oracles and deterministic random
//! inputs. Everything here deliberately avoids the code paths under test.
#![allow(dead_code)]

pub mod isserlis;
pub mod poly;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vgchaos::chaos2::Kernel2;
use vgchaos::tensorq::{symmetrize, SymTensor, Tensor};
use vgchaos::vgdist::VGParams;

pub fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric kernel with entries of order one, Frobenius-normalized
/// to the given scale.
pub fn random_kernel(dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> Kernel2 {
    let mut entries = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let v: f64 = StandardNormal.sample(rng);
            entries[i * dim + j] = v;
            entries[j * dim + i] = v;
        }
    }
    let k = Kernel2::new(dim, entries).unwrap();
    let f = k.frobenius();
    if f > 0.0 {
        k.scale(scale / f)
    } else {
        k
    }
}

/// Random symmetric tensor of the given order, norm-normalized.
pub fn random_sym_tensor(order: usize, dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> SymTensor {
    let size = dim.pow(order as u32);
    let data: Vec<f64> = (0..size).map(|_| StandardNormal.sample(rng)).collect();
    let raw = Tensor::new(order, dim, data).unwrap();
    let s = symmetrize(&raw).unwrap();
    let n = s.norm();
    if n > 0.0 {
        s.scale(scale / n)
    } else {
        s
    }
}

/// Random centred target parameters in a moderate range.
pub fn random_target(rng: &mut ChaCha8Rng) -> VGParams {
    let r = 0.5 + 2.5 * rng.random::<f64>();
    let theta = -1.0 + 2.0 * rng.random::<f64>();
    let sigma = 0.3 + 1.2 * rng.random::<f64>();
    VGParams::centred(r, theta, sigma).unwrap()
}

pub fn random_gaussian_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Random orthogonal matrix (QR of a Gaussian matrix).
pub fn random_rotation(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let m = nalgebra::DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let q = m.qr().q();
    (0..dim)
        .map(|i| (0..dim).map(|j| q[(i, j)]).collect())
        .collect()
}

/// Applies a rotation to every tensor slot:
/// `f'[j_1..j_q] = sum R[j_1,i_1] .. R[j_q,i_q] f[i_1..i_q]`.
pub fn rotate_tensor(f: &SymTensor, rot: &[Vec<f64>]) -> SymTensor {
    let (q, d) = (f.order(), f.dim());
    let mut data = f.data().to_vec();
    // One mode at a time.
    for slot in 0..q {
        let stride_after = d.pow((q - 1 - slot) as u32);
        let stride_block = stride_after * d;
        let blocks = data.len() / stride_block;
        let mut next = vec![0.0; data.len()];
        for b in 0..blocks {
            for inner in 0..stride_after {
                let base = b * stride_block + inner;
                for newi in 0..d {
                    let mut acc = 0.0;
                    for (oldi, row) in rot[newi].iter().enumerate() {
                        acc += row * data[base + oldi * stride_after];
                    }
                    next[base + newi * stride_after] = acc;
                }
            }
        }
        data = next;
    }
    SymTensor::new(q, d, data).expect("rotation preserves symmetry")
}

/// Mean and iid standard error of a sample (for quick 3-SE checks).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
