//! Brute-force Wick-pairing (Isserlis) oracle for Gaussian moments of
//! quadratic forms, independent of the trace formulas under test.

use vgchaos::chaos2::Kernel2;

/// `E[z_{a_1} .. z_{a_k}]` for iid standard normals: the sum over perfect
/// matchings of positions whose paired coordinates agree.
pub fn gaussian_product_moment(indices: &[usize]) -> f64 {
    if indices.is_empty() {
        return 1.0;
    }
    if indices.len() % 2 == 1 {
        return 0.0;
    }
    let mut total = 0.0;
    let first = indices[0];
    for p in 1..indices.len() {
        if indices[p] == first {
            let rest: Vec<usize> = indices[1..]
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != p - 1)
                .map(|(_, &v)| v)
                .collect();
            total += gaussian_product_moment(&rest);
        }
    }
    total
}

/// `E[prod_k z' M_k z]` by full index enumeration and Wick pairings.
pub fn quadratic_form_moment(mats: &[&Kernel2]) -> f64 {
    let k = mats.len();
    if k == 0 {
        return 1.0;
    }
    let d = mats[0].dim();
    let mut idx = vec![0usize; 2 * k];
    let mut total = 0.0;
    loop {
        let mut coeff = 1.0;
        for (m, mat) in mats.iter().enumerate() {
            coeff *= mat.entry(idx[2 * m], idx[2 * m + 1]);
            if coeff == 0.0 {
                break;
            }
        }
        if coeff != 0.0 {
            total += coeff * gaussian_product_moment(&idx);
        }
        // Odometer.
        let mut pos = 2 * k;
        loop {
            if pos == 0 {
                return total;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < d {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// `Cov(F^2, G^2)` for centred quadratic forms `F = z'Az - tr A`,
/// `G = z'Bz - tr B`, assembled purely from Wick moments.
pub fn cov_squares_bruteforce(a: &Kernel2, b: &Kernel2) -> f64 {
    let (ta, tb) = (a.trace(), b.trace());
    let m = |mats: &[&Kernel2]| quadratic_form_moment(mats);
    // E[(Qa - ta)^2 (Qb - tb)^2] expanded in raw quadratic-form moments.
    let e_f2g2 = m(&[a, a, b, b]) - 2.0 * tb * m(&[a, a, b]) + tb * tb * m(&[a, a])
        - 2.0 * ta * (m(&[a, b, b]) - 2.0 * tb * m(&[a, b]) + tb * tb * m(&[a]))
        + ta * ta * (m(&[b, b]) - 2.0 * tb * m(&[b]) + tb * tb);
    let e_f2 = m(&[a, a]) - ta * ta;
    let e_g2 = m(&[b, b]) - tb * tb;
    e_f2g2 - e_f2 * e_g2
}
