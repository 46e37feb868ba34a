//! Pointwise geometry of the Stiefel manifold V2(R4) of orthonormal 2-frames.
//!
//! A point is a pair (a, b) of orthonormal vectors of R^4, a tangent vector a pair
//! (V, W) with V.a = 0, W.b = 0 and a.W + V.b = 0. The contact form is
//! alpha = a.db - b.da, with Reeb field R = (b, -a) and alpha(R) = -2.

use nalgebra::{Matrix2, Matrix4x2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hodge4, split8, vec8_from, wedge4, Bivec4, Vec4, Vec8};

pub const POINT_TOL: f64 = 1e-12;
pub const TANGENT_TOL: f64 = 1e-12;
pub const HORIZONTAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StiefelPoint {
    a: Vec4,
    b: Vec4,
}

impl StiefelPoint {
    pub fn new(a: Vec4, b: Vec4) -> Result<Self> {
        let p = StiefelPoint { a, b };
        let defect = p.frame_defect();
        if defect > POINT_TOL {
            return Err(Error::Domain(format!(
                "frame is not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(p)
    }

    pub fn from_vec8(x: &Vec8) -> Result<Self> {
        let (a, b) = split8(x);
        Self::new(a, b)
    }

    pub fn standard() -> Self {
        StiefelPoint {
            a: Vec4::new(1.0, 0.0, 0.0, 0.0),
            b: Vec4::new(0.0, 1.0, 0.0, 0.0),
        }
    }

    pub fn a(&self) -> &Vec4 {
        &self.a
    }

    pub fn b(&self) -> &Vec4 {
        &self.b
    }

    pub fn to_vec8(&self) -> Vec8 {
        vec8_from(&self.a, &self.b)
    }

    pub fn frame_defect(&self) -> f64 {
        (self.a.norm_squared() - 1.0)
            .abs()
            .max((self.b.norm_squared() - 1.0).abs())
            .max(self.a.dot(&self.b).abs())
    }

    /// Flow of the Reeb field for time theta.
    pub fn reeb_rotate(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        StiefelPoint {
            a: self.a * c + self.b * s,
            b: -self.a * s + self.b * c,
        }
    }

    fn close_to(&self, other: &StiefelPoint) -> bool {
        (self.a - other.a).amax() <= POINT_TOL && (self.b - other.b).amax() <= POINT_TOL
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StiefelTangent {
    pub v: Vec4,
    pub w: Vec4,
    base: StiefelPoint,
}

impl StiefelTangent {
    pub fn new(base: StiefelPoint, v: Vec4, w: Vec4) -> Result<Self> {
        let x = StiefelTangent { v, w, base };
        let d = x.tangency_defect();
        if d > TANGENT_TOL * (1.0 + v.norm() + w.norm()) {
            return Err(Error::Domain(format!(
                "vector is not tangent to V2(R4) (defect {d:.3e})"
            )));
        }
        Ok(x)
    }

    pub fn base(&self) -> &StiefelPoint {
        &self.base
    }

    pub fn to_vec8(&self) -> Vec8 {
        vec8_from(&self.v, &self.w)
    }

    pub fn norm(&self) -> f64 {
        (self.v.norm_squared() + self.w.norm_squared()).sqrt()
    }

    pub fn dot(&self, other: &StiefelTangent) -> f64 {
        self.v.dot(&other.v) + self.w.dot(&other.w)
    }

    pub fn scale(&self, s: f64) -> Self {
        StiefelTangent {
            v: self.v * s,
            w: self.w * s,
            base: self.base,
        }
    }

    pub fn tangency_defect(&self) -> f64 {
        let p = &self.base;
        self.v
            .dot(&p.a)
            .abs()
            .max(self.w.dot(&p.b).abs())
            .max((p.a.dot(&self.w) + self.v.dot(&p.b)).abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrassmannPoint {
    pub g_plus: Bivec4,
    pub g_minus: Bivec4,
}

/// Tangent vector to S2+ x S2- at a GrassmannPoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrassmannTangent {
    pub plus: Bivec4,
    pub minus: Bivec4,
}

impl GrassmannTangent {
    pub fn norm(&self) -> f64 {
        (self.plus.norm_squared() + self.minus.norm_squared()).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeFrame {
    pub rho: f64,
    pub phi: f64,
    pub r_gauge: f64,
    /// 2 phi / rho^2; `None` at rho = 0.
    pub sigma: Option<f64>,
}

impl GaugeFrame {
    pub fn from_rho_phi(rho: f64, phi: f64) -> Self {
        let r4 = rho.powi(4) + 4.0 * phi * phi;
        let sigma = if rho > 0.0 {
            Some(2.0 * phi / (rho * rho))
        } else {
            None
        };
        GaugeFrame {
            rho,
            phi,
            r_gauge: r4.sqrt().sqrt(),
            sigma,
        }
    }

    /// arctan(sigma), extended by +-pi/2 (sign of phi) where sigma is unset.
    pub fn arctan_sigma(&self) -> f64 {
        match self.sigma {
            Some(s) => s.atan(),
            None if self.phi > 0.0 => std::f64::consts::FRAC_PI_2,
            None if self.phi < 0.0 => -std::f64::consts::FRAC_PI_2,
            None => 0.0,
        }
    }
}

fn check_base(p: &StiefelPoint, x: &StiefelTangent) -> Result<()> {
    if x.base.close_to(p) {
        Ok(())
    } else {
        Err(Error::Domain("tangent vector based at a different point".into()))
    }
}

pub fn contact_form(p: &StiefelPoint, x: &StiefelTangent) -> Result<f64> {
    check_base(p, x)?;
    Ok(p.a.dot(&x.w) - p.b.dot(&x.v))
}

pub fn reeb(p: &StiefelPoint) -> StiefelTangent {
    StiefelTangent {
        v: p.b,
        w: -p.a,
        base: *p,
    }
}

/// Orthogonal projection of an arbitrary vector of R^8 onto T_p V2(R4).
pub fn tangent_project(p: &StiefelPoint, x: &Vec8) -> StiefelTangent {
    let (mut v, mut w) = split8(x);
    let s = 0.5 * (p.a.dot(&w) + v.dot(&p.b));
    v -= p.a * p.a.dot(&v) + p.b * s;
    w -= p.b * p.b.dot(&w) + p.a * s;
    StiefelTangent { v, w, base: *p }
}

pub fn horizontal_project(p: &StiefelPoint, x: &StiefelTangent) -> Result<StiefelTangent> {
    check_base(p, x)?;
    let d = x.tangency_defect();
    if d > TANGENT_TOL * (1.0 + x.norm()) {
        return Err(Error::Domain(format!(
            "vector is not tangent to V2(R4) (defect {d:.3e})"
        )));
    }
    let r = reeb(p);
    let c = 0.5 * x.dot(&r);
    Ok(StiefelTangent {
        v: x.v - r.v * c,
        w: x.w - r.w * c,
        base: *p,
    })
}

fn check_horizontal(p: &StiefelPoint, x: &StiefelTangent) -> Result<()> {
    check_base(p, x)?;
    let scale = 1.0 + x.norm();
    let alpha = (p.a.dot(&x.w) - p.b.dot(&x.v)).abs();
    let span = p
        .a
        .dot(&x.v)
        .abs()
        .max(p.b.dot(&x.v).abs())
        .max(p.a.dot(&x.w).abs())
        .max(p.b.dot(&x.w).abs());
    if alpha > HORIZONTAL_TOL * scale || span > HORIZONTAL_TOL * scale {
        return Err(Error::Domain(format!(
            "vector is not horizontal (alpha {alpha:.3e}, span component {span:.3e})"
        )));
    }
    Ok(())
}

pub fn jh(p: &StiefelPoint, x: &StiefelTangent) -> Result<StiefelTangent> {
    check_horizontal(p, x)?;
    Ok(StiefelTangent {
        v: -x.w,
        w: x.v,
        base: *p,
    })
}

/// Nabla_Z R = (d_Z b, -d_Z a).
pub fn covariant_reeb(p: &StiefelPoint, z: &StiefelTangent) -> Result<StiefelTangent> {
    check_horizontal(p, z)?;
    Ok(StiefelTangent {
        v: z.w,
        w: -z.v,
        base: *p,
    })
}

/// dalpha(X, Y) = 2 (X_a.Y_b - Y_a.X_b).
pub fn d_alpha(x: &StiefelTangent, y: &StiefelTangent) -> f64 {
    2.0 * (x.v.dot(&y.w) - y.v.dot(&x.w))
}

fn split_dual(x: &Bivec4) -> (Bivec4, Bivec4) {
    let s = hodge4(x);
    let k = std::f64::consts::FRAC_1_SQRT_2;
    ((x + s) * k, (x - s) * k)
}

pub fn hopf_project(p: &StiefelPoint) -> GrassmannPoint {
    let (g_plus, g_minus) = split_dual(&wedge4(&p.a, &p.b));
    GrassmannPoint { g_plus, g_minus }
}

/// Differential of the Hopf projection on horizontal vectors, normalized so that it is an
/// isometry onto T(S2+ x S2-).
pub fn hopf_push(p: &StiefelPoint, x: &StiefelTangent) -> Result<GrassmannTangent> {
    check_horizontal(p, x)?;
    let d = wedge4(&x.v, &p.b) + wedge4(&p.a, &x.w);
    let (plus, minus) = split_dual(&d);
    let k = std::f64::consts::FRAC_1_SQRT_2;
    Ok(GrassmannTangent {
        plus: plus * k,
        minus: minus * k,
    })
}

// Orthonormal bases of the self-dual and anti-self-dual 2-vectors.
fn dual_coords(x: &Bivec4, plus: bool) -> Vector3<f64> {
    let k = std::f64::consts::FRAC_1_SQRT_2;
    if plus {
        Vector3::new(x[0] + x[5], x[1] - x[4], x[2] + x[3]) * k
    } else {
        Vector3::new(x[0] - x[5], x[1] + x[4], x[2] - x[3]) * k
    }
}

fn from_dual_coords(c: &Vector3<f64>, plus: bool) -> Bivec4 {
    let k = std::f64::consts::FRAC_1_SQRT_2;
    let s = if plus { 1.0 } else { -1.0 };
    Bivec4::from([c[0], c[1], c[2], s * c[2], -s * c[1], s * c[0]]) * k
}

/// Product complex structure on CP1 x conj(CP1) = S2+ x S2-: rotation by +90 degrees on the
/// self-dual factor and by -90 degrees on the anti-self-dual factor.
pub fn grassmann_j(g: &GrassmannPoint, xi: &GrassmannTangent) -> GrassmannTangent {
    let gp = dual_coords(&g.g_plus, true);
    let gm = dual_coords(&g.g_minus, false);
    let xp = dual_coords(&xi.plus, true);
    let xm = dual_coords(&xi.minus, false);
    GrassmannTangent {
        plus: from_dual_coords(&gp.cross(&xp), true),
        minus: from_dual_coords(&(-gm.cross(&xm)), false),
    }
}

/// phi_{p0}(p) = a.b0 - a0.b.
pub fn legendrian_coordinate(p0: &StiefelPoint, p: &StiefelPoint) -> f64 {
    p.a.dot(&p0.b) - p0.a.dot(&p.b)
}

pub fn gauge(p0: &StiefelPoint, p: &StiefelPoint) -> GaugeFrame {
    let rho = (p.to_vec8() - p0.to_vec8()).norm();
    GaugeFrame::from_rho_phi(rho, legendrian_coordinate(p0, p))
}

pub fn quasi_distance(p: &StiefelPoint, q: &StiefelPoint) -> f64 {
    gauge(p, q).r_gauge
}

/// Polar retraction of the 4x2 matrix [a_raw | b_raw] onto V2(R4), using the closed-form square
/// root of the 2x2 Gram matrix G: sqrt(G) = (G + sqrt(det G) I) / sqrt(tr G + 2 sqrt(det G)).
pub fn retract(a_raw: &Vec4, b_raw: &Vec4) -> Result<StiefelPoint> {
    let m = Matrix4x2::from_columns(&[*a_raw, *b_raw]);
    let gram: Matrix2<f64> = m.transpose() * m;
    let det = gram.determinant();
    let tr = gram.trace();
    if !(det > 1e-24 * tr * tr) || !det.is_finite() {
        return Err(Error::DegenerateFrame(format!(
            "Gram determinant {det:.3e}, trace {tr:.3e}"
        )));
    }
    let s = det.sqrt();
    let t = (tr + 2.0 * s).sqrt();
    let root = (gram + Matrix2::identity() * s) / t;
    let inv = Matrix2::new(root[(1, 1)], -root[(0, 1)], -root[(1, 0)], root[(0, 0)]) / root.determinant();
    let mut u = m * inv;
    // one Newton-Schulz step tightens orthonormality for ill-conditioned inputs
    let e = u.transpose() * u;
    u = u * (Matrix2::identity() * 1.5 - e * 0.5);
    Ok(StiefelPoint {
        a: u.column(0).into_owned(),
        b: u.column(1).into_owned(),
    })
}

pub fn retract8(x: &Vec8) -> Result<StiefelPoint> {
    let (a, b) = split8(x);
    retract(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn e(i: usize) -> Vec4 {
        let mut v = Vec4::zeros();
        v[i] = 1.0;
        v
    }

    #[test]
    fn contact_form_examples() {
        let p = StiefelPoint::standard();
        assert_eq!(contact_form(&p, &reeb(&p)).unwrap(), -2.0);
        let x = StiefelTangent::new(p, e(2), Vec4::zeros()).unwrap();
        assert_eq!(contact_form(&p, &x).unwrap(), 0.0);
        let th = std::f64::consts::FRAC_PI_3;
        let x = StiefelTangent::new(p, e(2) * th.cos(), e(3) * th.sin()).unwrap();
        assert_eq!(contact_form(&p, &x).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_base_is_a_domain_error() {
        let p = StiefelPoint::standard();
        let q = StiefelPoint::new(e(2), e(3)).unwrap();
        let x = reeb(&q);
        assert!(matches!(contact_form(&p, &x), Err(Error::Domain(_))));
    }

    #[test]
    fn reeb_of_standard_frame() {
        let p = StiefelPoint::standard();
        let r = reeb(&p);
        assert_eq!(r.v, e(1));
        assert_eq!(r.w, -e(0));
        assert_eq!(r.tangency_defect(), 0.0);
        assert!((r.norm() * r.norm() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn horizontal_projection_examples() {
        let p = StiefelPoint::standard();
        let z = horizontal_project(&p, &reeb(&p)).unwrap();
        assert!(z.norm() < 1e-15);
        let x = StiefelTangent::new(p, e(2), e(3)).unwrap();
        assert_eq!(horizontal_project(&p, &x).unwrap(), x);
        assert!(StiefelTangent::new(p, e(1), Vec4::zeros()).is_err());
    }

    #[test]
    fn jh_examples() {
        let p = StiefelPoint::standard();
        let x = StiefelTangent::new(p, e(2), Vec4::zeros()).unwrap();
        let y = jh(&p, &x).unwrap();
        assert_eq!((y.v, y.w), (Vec4::zeros(), e(2)));
        let x = StiefelTangent::new(p, e(2), e(3)).unwrap();
        let y = jh(&p, &x).unwrap();
        assert_eq!((y.v, y.w), (-e(3), e(2)));
        assert_eq!(y.norm(), x.norm());
        assert!(jh(&p, &reeb(&p)).is_err());
    }

    #[test]
    fn hopf_projection_of_standard_frame() {
        let g = hopf_project(&StiefelPoint::standard());
        let k = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(g.g_plus, Bivec4::from([k, 0.0, 0.0, 0.0, 0.0, k]));
        assert_eq!(g.g_minus, Bivec4::from([k, 0.0, 0.0, 0.0, 0.0, -k]));
    }

    #[test]
    fn hopf_push_intertwines_complex_structures() {
        let p = StiefelPoint::standard();
        let x = StiefelTangent::new(p, e(2), Vec4::zeros()).unwrap();
        let g = hopf_project(&p);
        let lhs = hopf_push(&p, &jh(&p, &x).unwrap()).unwrap();
        let rhs = grassmann_j(&g, &hopf_push(&p, &x).unwrap());
        assert!((lhs.plus - rhs.plus).norm() < 1e-15);
        assert!((lhs.minus - rhs.minus).norm() < 1e-15);
        assert!((hopf_push(&p, &x).unwrap().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grassmann_j_follows_the_wedge_rule() {
        // J_{(a^b)+}((a^c)+) = (a^d)+ and J_{(a^b)-}((a^c)-) = -(a^d)-
        let g = hopf_project(&StiefelPoint::standard());
        let (ac_p, ac_m) = split_dual(&wedge4(&e(0), &e(2)));
        let (ad_p, ad_m) = split_dual(&wedge4(&e(0), &e(3)));
        let out = grassmann_j(&g, &GrassmannTangent { plus: ac_p, minus: ac_m });
        assert!((out.plus - ad_p).norm() < 1e-15);
        assert!((out.minus + ad_m).norm() < 1e-15);
    }

    #[test]
    fn covariant_reeb_example() {
        let p = StiefelPoint::standard();
        let z = StiefelTangent::new(p, e(2), Vec4::zeros()).unwrap();
        let c = covariant_reeb(&p, &z).unwrap();
        assert_eq!((c.v, c.w), (Vec4::zeros(), -e(2)));
        assert_eq!(z.dot(&c), 0.0);
    }

    #[test]
    fn gauge_examples() {
        let p0 = StiefelPoint::standard();
        let g = gauge(&p0, &p0);
        assert_eq!((g.rho, g.phi, g.r_gauge, g.sigma), (0.0, 0.0, 0.0, None));
        let p = p0.reeb_rotate(std::f64::consts::FRAC_PI_2);
        let g = gauge(&p0, &p);
        assert!((g.rho * g.rho - 4.0).abs() < 1e-14);
        assert!((g.phi - 2.0).abs() < 1e-15);
        assert!((g.r_gauge.powi(4) - 32.0).abs() < 1e-12);
        assert!((g.sigma.unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn retract_examples() {
        let p = retract(&(e(0) * 2.0), &(e(1) * 3.0)).unwrap();
        assert!((p.a - e(0)).norm() < 1e-15 && (p.b - e(1)).norm() < 1e-15);
        let q = StiefelPoint::standard().reeb_rotate(0.3);
        let r = retract(q.a(), q.b()).unwrap();
        assert!((r.to_vec8() - q.to_vec8()).amax() < 1e-14);
        assert!(matches!(
            retract(&e(0), &(e(0) * 2.0)),
            Err(Error::DegenerateFrame(_))
        ));
    }

    #[test]
    fn retract_matches_gram_schmidt_symmetrized_oracle() {
        let a = e(0) + e(1) * 0.1;
        let b = e(1);
        let p = retract(&a, &b).unwrap();
        // polar factor from the eigen-decomposition of the Gram matrix
        let m = Matrix4x2::from_columns(&[a, b]);
        let eig = SymmetricEigen::new(m.transpose() * m);
        let d = Matrix2::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let u = m * (eig.eigenvectors * d * eig.eigenvectors.transpose());
        assert!((p.a - u.column(0)).norm() < 1e-10);
        assert!((p.b - u.column(1)).norm() < 1e-10);
        // Gram-Schmidt then symmetrize: the GS frame rotated by the angle that makes
        // the frame's pairing with [a|b] symmetric equals the polar factor
        let g1 = a.normalize();
        let g2 = (b - g1 * g1.dot(&b)).normalize();
        let k = Matrix4x2::from_columns(&[g1, g2]);
        let c = k.transpose() * m;
        let theta = (c[(1, 0)] - c[(0, 1)]).atan2(c[(0, 0)] + c[(1, 1)]);
        let rot = Matrix2::new(theta.cos(), -theta.sin(), theta.sin(), theta.cos());
        let sym = k * rot;
        assert!((p.a - sym.column(0)).norm() < 1e-10);
        assert!((p.b - sym.column(1)).norm() < 1e-10);
        assert!(p.frame_defect() < 1e-14);

    }
}
