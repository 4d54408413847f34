//! Tensor-calculus validation against independent oracles: exact
//! polynomial Malliavin recursion, raw index enumeration, and Monte Carlo.

mod support;

use rand::Rng;
use support::poly::{gamma_poly, hermite_poly_pub, multiple_integral_poly, MPoly};
use support::{
    mean_se, random_rotation, random_sym_tensor, random_target, rotate_tensor, test_rng,
};
use vgchaos::chaos2::{cumulant2, vg_bound2_interior, Kernel2};
use vgchaos::empirical::k_statistics;
use vgchaos::numeric::factorial;
use vgchaos::tensorq::{
    contract, cq, decode_index, double_vs_single_contraction_check, flat_index, gamma2_decomp,
    gamma3_decomp, gamma3_second_moment, mixed_sum_bound, multiple_integral_at,
    sample_multiple_integral, symgamma_contraction_bound, symmetrize,
    vg_contraction_bound, SymTensor,
};
use vgchaos::vgdist::VGParams;

fn polys_close(a: &MPoly, b: &MPoly, tol: f64) -> bool {
    let keys: std::collections::BTreeSet<_> =
        a.terms.keys().chain(b.terms.keys()).cloned().collect();
    keys.iter().all(|k| {
        let va = a.terms.get(k).copied().unwrap_or(0.0);
        let vb = b.terms.get(k).copied().unwrap_or(0.0);
        (va - vb).abs() <= tol * (1.0 + va.abs().max(vb.abs()))
    })
}

#[test]
fn oracle_self_checks() {
    // H_4(x) = x^4 - 6 x^2 + 3; E[H_4] = 0; E[H_4^2] = 4!.
    let h4 = hermite_poly_pub(1, 0, 4);
    assert_eq!(h4.terms[&vec![4u32]], 1.0);
    assert_eq!(h4.terms[&vec![2u32]], -6.0);
    assert_eq!(h4.terms[&vec![0u32]], 3.0);
    assert!(h4.gaussian_expectation().abs() < 1e-12);
    assert!((h4.mul(&h4).gaussian_expectation() - 24.0).abs() < 1e-10);
    // Chaos projection of z^2 = H_2 + 1.
    let z2 = MPoly::var(1, 0).mul(&MPoly::var(1, 0));
    let proj = z2.chaos_projections();
    assert_eq!(proj[&0].terms[&vec![0u32]], 1.0);
    assert_eq!(proj[&2].terms[&vec![0u32]], -1.0);
    // Gamma_2 of H_2(z) = z^2 - 1: the recursion gives 2 z^2.
    let f = proj[&2].clone();
    let g2 = gamma_poly(&f, 2);
    assert_eq!(g2.terms[&vec![2u32]], 2.0);
}

#[test]
fn multiple_integral_matches_polynomial_oracle() {
    let mut rng = test_rng(0x7e01);
    for &(q, d) in &[(2usize, 3usize), (3, 2), (4, 2)] {
        let f = random_sym_tensor(q, d, 1.0, &mut rng);
        let fp = multiple_integral_poly(&f);
        for _ in 0..5 {
            let z = support::random_gaussian_vector(d, &mut rng);
            let direct = multiple_integral_at(&f, &z).unwrap();
            let via_poly: f64 = fp
                .terms
                .iter()
                .map(|(e, c)| {
                    c * e
                        .iter()
                        .enumerate()
                        .map(|(j, &n)| z[j].powi(n as i32))
                        .product::<f64>()
                })
                .sum();
            assert!(
                (direct - via_poly).abs() < 1e-9 * (1.0 + direct.abs()),
                "q={q} d={d}: {direct} vs {via_poly}"
            );
        }
        // Isometry at the polynomial level: E[I_q(f)^2] = q! ||f||^2.
        let second = fp.mul(&fp).gaussian_expectation();
        let expect = factorial(q) * f.inner_product(&f).unwrap();
        assert!((second - expect).abs() < 1e-9 * (1.0 + expect));
    }
}

#[test]
fn gamma2_decomposition_matches_malliavin_recursion() {
    let mut rng = test_rng(0x7e02);
    for &(q, d) in &[(2usize, 3usize), (3, 2), (4, 2)] {
        let f = random_sym_tensor(q, d, 1.0, &mut rng);
        let decomp = gamma2_decomp(&f).unwrap();
        // Reassemble Gamma_2 as a polynomial: constant + sum I_m(kernel).
        let mut assembled = MPoly::constant(d, decomp.constant);
        for kernel in decomp.levels.values() {
            assembled = assembled.add(&multiple_integral_poly(kernel));
        }
        let oracle = gamma_poly(&multiple_integral_poly(&f), 2);
        assert!(
            polys_close(&assembled, &oracle, 1e-9),
            "Gamma_2 mismatch at q={q}, d={d}"
        );
    }
}

#[test]
fn gamma3_decomposition_matches_malliavin_recursion() {
    // Validates levels, coefficients and the odd-order bookkeeping in one
    // shot: the reassembled decomposition must equal the recursion's
    // polynomial identically.
    let mut rng = test_rng(0x7e03);
    for &(q, d) in &[(2usize, 3usize), (3, 2), (4, 2)] {
        let f = random_sym_tensor(q, d, 1.0, &mut rng);
        let decomp = gamma3_decomp(&f).unwrap();
        let mut assembled = MPoly::zero(d);
        for kernel in decomp.levels.values() {
            assembled = assembled.add(&multiple_integral_poly(kernel));
        }
        let oracle = gamma_poly(&multiple_integral_poly(&f), 3);
        assert!(
            polys_close(&assembled, &oracle, 1e-9),
            "Gamma_3 mismatch at q={q}, d={d}"
        );
        // Second moment through the isometry vs direct expectation.
        let direct = oracle.mul(&oracle).gaussian_expectation();
        let via_levels = gamma3_second_moment(&f).unwrap();
        assert!(
            (direct - via_levels).abs() < 1e-8 * (1.0 + direct.abs()),
            "E[Gamma_3^2] mismatch at q={q}, d={d}: {direct} vs {via_levels}"
        );
    }
}

#[test]
fn pathwise_gamma_matches_recursion_second_chaos() {
    // gamma_path's closed form 2^{j-1} z' A^j z against the symbolic
    // recursion at 20 random kernel/point pairs.
    let mut rng = test_rng(0x7e04);
    for _ in 0..20 {
        let d = 2 + (rng.random::<u32>() % 2) as usize;
        let a = support::random_kernel(d, 1.0, &mut rng);
        let f = SymTensor::new(2, d, a.entries().to_vec()).unwrap();
        let fp = multiple_integral_poly(&f);
        let z = support::random_gaussian_vector(d, &mut rng);
        for j in 1..=4 {
            let closed = vgchaos::chaos2::gamma_path(&a, &z, j).unwrap();
            let gp = gamma_poly(&fp, j);
            let oracle: f64 = gp
                .terms
                .iter()
                .map(|(e, c)| {
                    c * e
                        .iter()
                        .enumerate()
                        .map(|(k, &n)| z[k].powi(n as i32))
                        .product::<f64>()
                })
                .sum();
            assert!(
                (closed - oracle).abs() < 1e-9 * (1.0 + oracle.abs()),
                "j={j}: {closed} vs {oracle}"
            );
        }
    }
}

#[test]
fn contraction_adjointness_raw_indices() {
    // <f x_r g, h> computed by the library equals a raw index summation.
    let mut rng = test_rng(0x7e05);
    let d = 3;
    let f = random_sym_tensor(2, d, 1.0, &mut rng);
    let g = random_sym_tensor(3, d, 1.0, &mut rng);
    let c = contract(&f, &g, 1).unwrap(); // order 3
    let h = random_sym_tensor(3, d, 1.0, &mut rng);
    let lib: f64 = c.data().iter().zip(h.data()).map(|(a, b)| a * b).sum();
    // Raw: sum_{i,k,j1,j2} f[i,k] g[k,j1,j2] h[i,j1,j2].
    let mut raw = 0.0;
    for i in 0..d {
        for k in 0..d {
            for j1 in 0..d {
                for j2 in 0..d {
                    raw += f.get(&[i, k]) * g.get(&[k, j1, j2]) * h.get(&[i, j1, j2]);
                }
            }
        }
    }
    assert!((lib - raw).abs() < 1e-10 * (1.0 + raw.abs()));
}

#[test]
fn symmetrize_is_norm_contraction() {
    let mut rng = test_rng(0x7e06);
    for trial in 0..50usize {
        let q = 2 + trial % 3;
        let d = 2 + trial % 2;
        let size = d.pow(q as u32);
        let data: Vec<f64> = (0..size).map(|_| rng.random::<f64>() - 0.5).collect();
        let raw = vgchaos::tensorq::Tensor::new(q, d, data).unwrap();
        let s = symmetrize(&raw).unwrap();
        assert!(s.norm() <= raw.norm() + 1e-12, "trial {trial}");
    }
}

#[test]
fn gamma3_level_expectation_is_half_third_cumulant() {
    let mut rng = test_rng(0x7e07);
    let f = random_sym_tensor(2, 3, 1.0, &mut rng);
    let a = Kernel2::new(3, f.data().to_vec()).unwrap();
    let decomp = gamma3_decomp(&f).unwrap();
    // E[Gamma_3] = level-0 scalar = kappa_3 / 2.
    let level0 = decomp.level0().unwrap();
    let kappa3 = cumulant2(&a, 3).unwrap();
    assert!((level0 - 0.5 * kappa3).abs() < 1e-10 * (1.0 + kappa3.abs()));
}

#[test]
fn contraction_bound_matches_interior_oracle() {
    // E[(sigma^2 (F + r theta) + 2 theta Gamma_2 - Gamma_3)^2] computed by
    // exact polynomial expectation vs the contraction-norm assembly.
    let mut rng = test_rng(0x7e08);
    for &(q, d) in &[(2usize, 2usize), (2, 3), (4, 2)] {
        let f = random_sym_tensor(q, d, 0.9, &mut rng);
        let target = random_target(&mut rng);
        let (r, th, s2) = (target.r(), target.theta(), target.sigma() * target.sigma());
        let fp = multiple_integral_poly(&f);
        let g2 = gamma_poly(&fp, 2);
        let g3 = gamma_poly(&fp, 3);
        // sigma^2 (F + r theta) + 2 theta Gamma_2 - Gamma_3.
        let expr = fp
            .scale(s2)
            .add(&MPoly::constant(d, s2 * r * th))
            .add(&g2.scale(2.0 * th))
            .add(&g3.scale(-1.0));
        let oracle = expr.mul(&expr).gaussian_expectation();
        let report = vg_contraction_bound(&f, &target).unwrap();
        let interior = report.value("interior").unwrap();
        assert!(
            (interior - oracle).abs() < 1e-8 * (1.0 + oracle.abs()),
            "q={q} d={d}: {interior} vs {oracle}"
        );
    }
}

#[test]
fn odd_order_symmetric_bound_matches_oracle() {
    // q = 3 against E[(F/lambda^2 - Gamma_3)^2] by polynomial expectation.
    let mut rng = test_rng(0x7e09);
    let f = random_sym_tensor(3, 2, 1.0, &mut rng);
    let lambda = 1.3f64;
    let fp = multiple_integral_poly(&f);
    let g3 = gamma_poly(&fp, 3);
    let expr = fp.scale(1.0 / (lambda * lambda)).add(&g3.scale(-1.0));
    let oracle = expr.mul(&expr).gaussian_expectation();
    let got = symgamma_contraction_bound(&f, lambda).unwrap();
    assert!(
        (got - oracle).abs() < 1e-8 * (1.0 + oracle.abs()),
        "{got} vs {oracle}"
    );
}

#[test]
fn q2_bound_equals_second_chaos_interior() {
    let mut rng = test_rng(0x7e0a);
    for _ in 0..10 {
        let d = 2 + (rng.random::<u32>() % 4) as usize;
        let f = random_sym_tensor(2, d, 0.8, &mut rng);
        let a = Kernel2::new(d, f.data().to_vec()).unwrap();
        let target = random_target(&mut rng);
        let tensor_route = vg_contraction_bound(&f, &target)
            .unwrap()
            .value("interior")
            .unwrap();
        let matrix_route = vg_bound2_interior(&a, &target);
        assert!(
            (tensor_route - matrix_route).abs() < 1e-9 * (1.0 + matrix_route.abs()),
            "{tensor_route} vs {matrix_route}"
        );
    }
}

#[test]
fn symmetric_specialization_of_vg_bound() {
    let mut rng = test_rng(0x7e0b);
    let f = random_sym_tensor(4, 2, 1.0, &mut rng);
    let lambda = 0.9f64;
    let target = VGParams::centred(3.0, 0.0, 1.0 / lambda).unwrap();
    let a = vg_contraction_bound(&f, &target)
        .unwrap()
        .value("interior")
        .unwrap();
    let b = symgamma_contraction_bound(&f, lambda).unwrap();
    assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
}

#[test]
fn bound_is_rotation_invariant() {
    let mut rng = test_rng(0x7e0c);
    for &(q, d) in &[(2usize, 3usize), (3, 3)] {
        let f = random_sym_tensor(q, d, 1.0, &mut rng);
        let rot = random_rotation(d, &mut rng);
        let f_rot = rotate_tensor(&f, &rot);
        let lambda = 1.1;
        let a = symgamma_contraction_bound(&f, lambda).unwrap();
        let b = symgamma_contraction_bound(&f_rot, lambda).unwrap();
        assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "q={q}: {a} vs {b}");
    }
}

#[test]
fn mixed_sum_bound_matches_enumeration_oracle() {
    // Independent brute-force assembly of the displayed formula at
    // q1 = 2, q2 = 3, d = 2, including the f2 = 0 reduction.
    let mut rng = test_rng(0x7e0d);
    let f1 = random_sym_tensor(2, 2, 1.0, &mut rng);
    let f2 = random_sym_tensor(3, 2, 0.7, &mut rng);
    let zero3 = SymTensor::zeros(3, 2);
    let lambda = 1.2f64;

    let oracle = |fa: &SymTensor, fb: &SymTensor| -> f64 {
        let inv_l2 = 1.0 / (lambda * lambda);
        let fs = [fa, fb];
        let qs = [fa.order(), fb.order()];
        let mut total = 0.0;
        for f in fs {
            let q = f.order();
            // own term: || f/lambda^2 - sum_r c_q(r, q-r) (f ~x_r f) ~x_{q-r} f ||^2
            let mut own = f.scale(inv_l2);
            for r in 1..q {
                let inner = symmetrize(&contract(f, f, r).unwrap()).unwrap();
                let term = symmetrize(&contract(&inner, f, q - r).unwrap()).unwrap();
                own = own.add_scaled(&term, -cq(q, &[r, q - r]).unwrap()).unwrap();
            }
            total += 8.0 * own.inner_product(&own).unwrap();
        }
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for r in 1..=qs[i].min(qs[j]).min(qs[k]) {
                        let inner = symmetrize(&contract(fs[j], fs[k], r).unwrap()).unwrap();
                        for s in 1..=qs[i].min(qs[j] + qs[k] - 2 * r) {
                            if i == j && j == k && (r == qs[i] || s == qs[i] - r) {
                                continue;
                            }
                            let term = symmetrize(&contract(fs[i], &inner, s).unwrap()).unwrap();
                            let coeff = (qs[i] * qs[j]) as f64
                                * factorial(r - 1)
                                * binom(qs[i] - 1, r - 1)
                                * binom(qs[j] - 1, r - 1)
                                * factorial(s - 1)
                                * binom(qs[i] - 1, s - 1)
                                * binom(qs[j] + qs[k] - 2 * r - 1, s - 1);
                            total += coeff * term.inner_product(&term).unwrap();
                        }
                    }
                }
            }
        }
        total
    };

    let got = mixed_sum_bound(&f1, &f2, lambda).unwrap();
    let expect = oracle(&f1, &f2);
    assert!((got - expect).abs() < 1e-9 * (1.0 + expect), "{got} vs {expect}");

    let got0 = mixed_sum_bound(&f1, &zero3, lambda).unwrap();
    let expect0 = oracle(&f1, &zero3);
    assert!((got0 - expect0).abs() < 1e-9 * (1.0 + expect0));
}

fn binom(n: usize, k: usize) -> f64 {
    vgchaos::numeric::binomial(n, k)
}

#[test]
fn mc_isometry_and_odd_third_moment() {
    let mut rng = test_rng(0x7e0e);
    let f = random_sym_tensor(3, 3, 1.0, &mut rng);
    let n = 200_000;
    let s = sample_multiple_integral(&f, n, 2024);
    // E[I_q(f)^2] = q! ||f||^2 within 3 SE.
    let sq: Vec<f64> = s.values().iter().map(|v| v * v).collect();
    let (mean, se) = mean_se(&sq);
    let expect = factorial(3) * f.inner_product(&f).unwrap();
    assert!(
        (mean - expect).abs() <= 3.0 * se,
        "isometry: {mean} vs {expect} (se {se})"
    );
    // Odd chaos: E[I_3(f)^3] = 0 within 3 SE.
    let cubes: Vec<f64> = s.values().iter().map(|v| v * v * v).collect();
    let (m3, se3) = mean_se(&cubes);
    assert!(m3.abs() <= 3.0 * se3, "third moment {m3} (se {se3})");
}

#[test]
fn sampled_moments_match_trace_formulas_q2() {
    // Kernel route vs Hermite-evaluation route must agree in law: compare
    // k-statistics of sample_multiple_integral with exact cumulants.
    let mut rng = test_rng(0x7e0f);
    let f = random_sym_tensor(2, 3, 1.0, &mut rng);
    let a = Kernel2::new(3, f.data().to_vec()).unwrap();
    let s = sample_multiple_integral(&f, 400_000, 99);
    let k = k_statistics(&s, 6).unwrap();
    for order in 2..=4 {
        let expect = cumulant2(&a, order).unwrap();
        assert!(
            k.z_score(order, expect) <= 3.0,
            "order {order}: {} vs {expect}",
            k.estimate.kappa(order)
        );
    }
}

#[test]
fn double_vs_single_holds_on_random_tensors() {
    let mut rng = test_rng(0x7e10);
    for trial in 0..60 {
        let q = 2 + trial % 3;
        let d = 2 + trial % 3;
        let f = random_sym_tensor(q, d, 1.0, &mut rng);
        let cmp = double_vs_single_contraction_check(&f).unwrap();
        assert!(
            cmp.worst_margin >= -1e-12,
            "trial {trial} (q={q}, d={d}): margin {}",
            cmp.worst_margin
        );
        // The scalar (third-moment) case obeys its Cauchy-Schwarz cap.
        if let Some((value, cap)) = cmp.scalar_case {
            assert!(value <= cap + 1e-12, "scalar {value} vs cap {cap}");
        }
    }
}

#[test]
fn decode_flat_round_trip() {
    let mut idx = vec![0usize; 3];
    for flat in 0..27 {
        decode_index(flat, 3, &mut idx);
        assert_eq!(flat_index(&idx, 3), flat);
    }
}
