//! Small fixed-size helpers shared by the geometry modules.

use nalgebra::{Matrix2, SVector, Vector4};

pub type Vec4 = Vector4<f64>;
pub type Vec8 = SVector<f64, 8>;
/// Coordinates of a point or vector in the ambient space of either target.
pub type Point = Vec8;
/// Components of a 2-vector of R^8 in the basis e_a ^ e_b, a < b, lexicographic.
pub type Bivec8 = SVector<f64, 28>;
/// Components of a 2-vector of R^4 in the basis e12, e13, e14, e23, e24, e34.
pub type Bivec4 = SVector<f64, 6>;

pub fn vec8_from(a: &Vec4, b: &Vec4) -> Vec8 {
    let mut x = Vec8::zeros();
    x.fixed_rows_mut::<4>(0).copy_from(a);
    x.fixed_rows_mut::<4>(4).copy_from(b);
    x
}

pub fn split8(x: &Vec8) -> (Vec4, Vec4) {
    (x.fixed_rows::<4>(0).into_owned(), x.fixed_rows::<4>(4).into_owned())
}

pub const PAIR8: [(usize, usize); 28] = {
    let mut out = [(0usize, 0usize); 28];
    let mut k = 0;
    let mut a = 0;
    while a < 8 {
        let mut b = a + 1;
        while b < 8 {
            out[k] = (a, b);
            k += 1;
            b += 1;
        }
        a += 1;
    }
    out
};

pub fn wedge8(x: &Vec8, y: &Vec8) -> Bivec8 {
    let mut out = Bivec8::zeros();
    for (k, &(a, b)) in PAIR8.iter().enumerate() {
        out[k] = x[a] * y[b] - x[b] * y[a];
    }
    out
}

/// Contracts an antisymmetric coefficient array against y: returns G y with G_ab = c_k for (a,b) = PAIR8[k].
pub fn bivec_apply(c: &Bivec8, y: &Vec8) -> Vec8 {
    let mut out = Vec8::zeros();
    for (k, &(a, b)) in PAIR8.iter().enumerate() {
        out[a] += c[k] * y[b];
        out[b] -= c[k] * y[a];
    }
    out
}

pub fn wedge4(x: &Vec4, y: &Vec4) -> Bivec4 {
    Bivec4::from([
        x[0] * y[1] - x[1] * y[0],
        x[0] * y[2] - x[2] * y[0],
        x[0] * y[3] - x[3] * y[0],
        x[1] * y[2] - x[2] * y[1],
        x[1] * y[3] - x[3] * y[1],
        x[2] * y[3] - x[3] * y[2],
    ])
}

/// Hodge star on 2-vectors of R^4 with the orientation e1 ^ e2 ^ e3 ^ e4.
pub fn hodge4(x: &Bivec4) -> Bivec4 {
    Bivec4::from([x[5], -x[4], x[3], x[2], -x[1], x[0]])
}

/// Multiplication by i on C^2 = R^4 with z1 = y1 + i y2, z2 = y3 + i y4.
pub fn mul_i(y: &Vec4) -> Vec4 {
    Vec4::new(-y[1], y[0], -y[3], y[2])
}

pub fn omega0(u: &Vec4, v: &Vec4) -> f64 {
    mul_i(u).dot(v)
}

pub fn inverse2(g: &Matrix2<f64>) -> Option<Matrix2<f64>> {
    let det = g.determinant();
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    Some(Matrix2::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]) / det)
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Conjugate gradients for a symmetric positive semidefinite operator. Stops when the residual
/// norm drops below `rel_tol` times the initial one.
pub fn conjugate_gradient(apply: impl Fn(&[f64]) -> Vec<f64>, rhs: &[f64], rel_tol: f64, max_iter: usize) -> Vec<f64> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let stop = rel_tol * rel_tol * rr.max(1e-300);
    for _ in 0..max_iter {
        if rr <= stop {
            break;
        }
        let ap = apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            break;
        }
        let a = rr / pap;
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let rr2: f64 = r.iter().map(|v| v * v).sum();
        let b = rr2 / rr;
        rr = rr2;
        for i in 0..n {
            p[i] = r[i] + b * p[i];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hodge_is_an_involution_and_matches_volume() {
        let e = |i: usize| {
            let mut v = Vec4::zeros();
            v[i] = 1.0;
            v
        };
        for i in 0..4 {
            for j in (i + 1)..4 {
                let b = wedge4(&e(i), &e(j));
                let s = hodge4(&b);
                assert_eq!(hodge4(&s), b);
                // b ^ *b = |b|^2 vol, read off from the pairing with the complementary basis element
                assert!((s.norm() - 1.0).abs() < 1e-15);
            }
        }
        let s = hodge4(&wedge4(&e(0), &e(2)));
        assert_eq!(s, -wedge4(&e(1), &e(3)));
    }

    #[test]
    fn bivec_apply_is_the_adjoint_of_wedge() {
        let x = Vec8::from_fn(|i, _| (i as f64 * 0.7).sin());
        let y = Vec8::from_fn(|i, _| (i as f64 * 1.3).cos());
        let c = Bivec8::from_fn(|k, _| (k as f64 * 0.37).sin());
        let lhs = c.dot(&wedge8(&x, &y));
        let rhs = x.dot(&bivec_apply(&c, &y));
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
