//! The Heisenberg model H^2 = (R^5, alpha) with alpha = -dphi + y1 dy2 - y2 dy1 + y3 dy4 - y4 dy3.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mul_i, omega0, Vec4, Vec8};
use crate::stiefel::GaugeFrame;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergPoint {
    pub phi: f64,
    pub y: Vec4,
}

/// A vector at a point of H^2, components (phi, y1..y4).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HVector {
    pub phi: f64,
    pub y: Vec4,
}

impl HeisenbergPoint {
    pub fn new(phi: f64, y: Vec4) -> Self {
        HeisenbergPoint { phi, y }
    }

    pub fn origin() -> Self {
        HeisenbergPoint::new(0.0, Vec4::zeros())
    }

    /// Ambient storage: (phi, y1, y2, y3, y4, 0, 0, 0).
    pub fn to_vec8(&self) -> Vec8 {
        let mut x = Vec8::zeros();
        x[0] = self.phi;
        x.fixed_rows_mut::<4>(1).copy_from(&self.y);
        x
    }

    pub fn from_vec8(x: &Vec8) -> Self {
        HeisenbergPoint::new(x[0], x.fixed_rows::<4>(1).into_owned())
    }
}

impl HVector {
    pub fn new(phi: f64, y: Vec4) -> Self {
        HVector { phi, y }
    }

    pub fn to_vec8(&self) -> Vec8 {
        HeisenbergPoint::new(self.phi, self.y).to_vec8()
    }

    pub fn from_vec8(x: &Vec8) -> Self {
        let p = HeisenbergPoint::from_vec8(x);
        HVector::new(p.phi, p.y)
    }
}

pub fn contact_form_h(q: &HeisenbergPoint, x: &HVector) -> f64 {
    -x.phi + omega0(&q.y, &x.y)
}

/// dalpha = 2 omega0 (dy1^dy2 + dy3^dy4 doubled).
pub fn d_alpha_h(x: &HVector, y: &HVector) -> f64 {
    2.0 * omega0(&x.y, &y.y)
}

/// Horizontal lift of a vector of C^2 to the point q.
pub fn horizontal_lift(q: &HeisenbergPoint, m: &Vec4) -> HVector {
    HVector::new(omega0(&q.y, m), *m)
}

/// (phi, y) -> (phi / r^2, y / r).
pub fn dilate(q: &HeisenbergPoint, r: f64) -> Result<HeisenbergPoint> {
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("dilation factor must be positive, got {r}")));
    }
    Ok(HeisenbergPoint::new(q.phi / (r * r), q.y / r))
}

pub fn dilate_push(x: &HVector, r: f64) -> Result<HVector> {
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("dilation factor must be positive, got {r}")));
    }
    Ok(HVector::new(x.phi / (r * r), x.y / r))
}

/// phi_{q0}(q) = phi - phi0 - omega0(y0, y).
pub fn legendrian_coordinate_h(q0: &HeisenbergPoint, q: &HeisenbergPoint) -> f64 {
    q.phi - q0.phi - omega0(&q0.y, &q.y)
}

pub fn model_gauge(q: &HeisenbergPoint) -> f64 {
    (q.y.norm_squared().powi(2) + 4.0 * q.phi * q.phi).sqrt().sqrt()
}

pub fn gauge_h(q0: &HeisenbergPoint, q: &HeisenbergPoint) -> GaugeFrame {
    GaugeFrame::from_rho_phi((q.y - q0.y).norm(), legendrian_coordinate_h(q0, q))
}

/// A scalar field on H^2 given by its value and its partial derivatives (d/dphi, d/dy).
pub trait HeisenbergField {
    fn value(&self, q: &HeisenbergPoint) -> f64;
    fn gradient(&self, q: &HeisenbergPoint) -> HVector;
}

/// Horizontal gradient components X_k h = dh/dy_k + (i y)_k dh/dphi.
pub fn horizontal_gradient_h(q: &HeisenbergPoint, grad: &HVector) -> Vec4 {
    grad.y + mul_i(&q.y) * grad.phi
}

/// X_h = J grad_H h - 2 h d/dphi.
pub fn hamiltonian_field_h<F: HeisenbergField + ?Sized>(h: &F, q: &HeisenbergPoint) -> HVector {
    let g = horizontal_gradient_h(q, &h.gradient(q));
    let mut x = horizontal_lift(q, &mul_i(&g));
    x.phi -= 2.0 * h.value(q);
    x
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianSampleGrid {
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
    pub periodic: [bool; 2],
    /// Row-major samples, index i1 * n2 + i2.
    pub u: Vec<[f64; 4]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedGrid {
    pub grid: LagrangianSampleGrid,
    pub phi: Vec<f64>,
    /// Increment of phi around each periodic direction, `None` for open directions.
    pub periods: [Option<f64>; 2],
    pub max_loop_residual: f64,
    pub tol_lag: f64,
}

impl LagrangianSampleGrid {
    pub fn sample<F: Fn(f64, f64) -> Vec4>(
        n1: usize,
        n2: usize,
        h1: f64,
        h2: f64,
        periodic: [bool; 2],
        f: F,
    ) -> Self {
        let mut u = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            for j in 0..n2 {
                let v = f(i as f64 * h1, j as f64 * h2);
                u.push([v[0], v[1], v[2], v[3]]);
            }
        }
        LagrangianSampleGrid { n1, n2, h1, h2, periodic, u }
    }

    /// Samples of (cos s, sin s, cos t, sin t) on a periodic n x n grid of [0, 2pi)^2.
    pub fn clifford(n: usize) -> Self {
        let h = 2.0 * std::f64::consts::PI / n as f64;
        Self::sample(n, n, h, h, [true, true], |s, t| {
            Vec4::new(s.cos(), s.sin(), t.cos(), t.sin())
        })
    }

    pub fn at(&self, i: usize, j: usize) -> Vec4 {
        Vec4::from(self.u[i * self.n2 + j])
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::Parameter("grid needs at least 2 samples per direction".into()));
        }
        if self.u.len() != self.n1 * self.n2 {
            return Err(Error::Parameter(format!(
                "grid has {} samples, expected {}",
                self.u.len(),
                self.n1 * self.n2
            )));
        }
        if self.u.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("grid contains non-finite samples".into()));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(usize, usize)> {
        let m1 = if self.periodic[0] { self.n1 } else { self.n1 - 1 };
        let m2 = if self.periodic[1] { self.n2 } else { self.n2 - 1 };
        let mut out = Vec::with_capacity(m1 * m2);
        for i in 0..m1 {
            for j in 0..m2 {
                out.push((i, j));
            }
        }
        out
    }

    /// Increment of phi along the chord between two samples: midpoint rule for u1 du2 - u2 du1 + ...
    fn increment(a: &Vec4, b: &Vec4) -> f64 {
        omega0(&((a + b) * 0.5), &(b - a))
    }

    /// Discrete pullback of omega over a cell: half the loop integral of the Liouville form.
    pub fn cell_residual(&self, i: usize, j: usize) -> f64 {
        let i1 = (i + 1) % self.n1;
        let j1 = (j + 1) % self.n2;
        let c = [self.at(i, j), self.at(i1, j), self.at(i1, j1), self.at(i, j1)];
        let mut s = 0.0;
        for k in 0..4 {
            s += Self::increment(&c[k], &c[(k + 1) % 4]);
        }
        0.5 * s
    }

    /// Default tolerance 1e-8 times the largest squared cell edge.
    pub fn default_tol(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (i, j) in self.cells() {
            let i1 = (i + 1) % self.n1;
            let j1 = (j + 1) % self.n2;
            m = m
                .max((self.at(i1, j) - self.at(i, j)).norm_squared())
                .max((self.at(i, j1) - self.at(i, j)).norm_squared());
        }
        1e-8 * m.max(f64::MIN_POSITIVE)
    }
}

/// Integrates dphi_u = u1 du2 - u2 du1 + u3 du4 - u4 du3 from the (0,0) corner, first along
/// the i1 direction at i2 = 0, then along each row in the i2 direction.
pub fn legendrian_lift(
    u: &LagrangianSampleGrid,
    base_value: f64,
    tol: Option<f64>,
) -> Result<LiftedGrid> {
    u.validate()?;
    let tol_lag = tol.unwrap_or_else(|| u.default_tol());
    let mut worst = (0usize, 0usize);
    let mut max_res: f64 = 0.0;
    for (i, j) in u.cells() {
        let r = u.cell_residual(i, j).abs();
        if r > max_res {
            max_res = r;
            worst = (i, j);
        }
    }
    if max_res > tol_lag {
        return Err(Error::Constraint {
            what: "grid is not Lagrangian".into(),
            cell: worst,
            residual: max_res,
            tol: tol_lag,
        });
    }
    let (n1, n2) = (u.n1, u.n2);
    let mut phi = vec![0.0; n1 * n2];
    phi[0] = base_value;
    for i in 1..n1 {
        phi[i * n2] = phi[(i - 1) * n2] + LagrangianSampleGrid::increment(&u.at(i - 1, 0), &u.at(i, 0));
    }
    for i in 0..n1 {
        for j in 1..n2 {
            phi[i * n2 + j] = phi[i * n2 + j - 1]
                + LagrangianSampleGrid::increment(&u.at(i, j - 1), &u.at(i, j));
        }
    }
    let mut periods = [None, None];
    if u.periodic[0] {
        let mut s = 0.0;
        for i in 0..n1 {
            s += LagrangianSampleGrid::increment(&u.at(i, 0), &u.at((i + 1) % n1, 0));
        }
        periods[0] = Some(s);
    }
    if u.periodic[1] {
        let mut s = 0.0;
        for j in 0..n2 {
            s += LagrangianSampleGrid::increment(&u.at(0, j), &u.at(0, (j + 1) % n2));
        }
        periods[1] = Some(s);
    }
    Ok(LiftedGrid {
        grid: u.clone(),
        phi,
        periods,
        max_loop_residual: max_res,
        tol_lag,
    })
}

impl LiftedGrid {
    pub fn point(&self, i: usize, j: usize) -> HeisenbergPoint {
        HeisenbergPoint::new(self.phi[i * self.grid.n2 + j], self.grid.at(i, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    struct Lin(HVector, f64);
    impl HeisenbergField for Lin {
        fn value(&self, q: &HeisenbergPoint) -> f64 {
            self.0.phi * q.phi + self.0.y.dot(&q.y) + self.1
        }
        fn gradient(&self, _q: &HeisenbergPoint) -> HVector {
            self.0
        }
    }

    #[test]
    fn contact_form_examples() {
        let o = HeisenbergPoint::origin();
        assert_eq!(contact_form_h(&o, &HVector::new(1.0, Vec4::zeros())), -1.0);
        let q = HeisenbergPoint::new(0.0, Vec4::new(1.0, 0.0, 0.0, 0.0));
        assert_eq!(contact_form_h(&q, &HVector::new(0.0, Vec4::new(0.0, 1.0, 0.0, 0.0))), 1.0);
        let m = Vec4::new(0.3, -1.0, 2.0, 0.5);
        assert_eq!(contact_form_h(&q, &horizontal_lift(&q, &m)), 0.0);
    }

    #[test]
    fn dilation_examples() {
        let q = HeisenbergPoint::new(4.0, Vec4::new(2.0, 0.0, 0.0, 0.0));
        assert_eq!(dilate(&q, 1.0).unwrap(), q);
        assert_eq!(dilate(&q, 2.0).unwrap(), HeisenbergPoint::new(1.0, Vec4::new(1.0, 0.0, 0.0, 0.0)));
        assert!(dilate(&q, 0.0).is_err());
        let q = HeisenbergPoint::new(-0.7, Vec4::new(0.2, 1.1, -0.4, 0.9));
        let r = 1.7;
        assert!((model_gauge(&dilate(&q, r).unwrap()) - model_gauge(&q) / r).abs() < 1e-14);
    }

    #[test]
    fn dilation_pulls_alpha_back_to_r2_alpha() {
        let q = HeisenbergPoint::new(0.3, Vec4::new(0.2, 1.1, -0.4, 0.9));
        let x = HVector::new(0.5, Vec4::new(-0.3, 0.8, 0.1, 0.7));
        for r in [0.5, 2.0, 3.0] {
            let lhs = contact_form_h(&q, &x);
            let rhs = r * r
                * contact_form_h(&dilate(&q, r).unwrap(), &dilate_push(&x, r).unwrap());
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_hamiltonian_is_a_reeb_multiple() {
        let x = hamiltonian_field_h(&Lin(HVector::new(0.0, Vec4::zeros()), 1.5), &HeisenbergPoint::origin());
        assert_eq!(x, HVector::new(-3.0, Vec4::zeros()));
    }

    #[test]
    fn coordinate_hamiltonian_at_origin() {
        let h = Lin(HVector::new(0.0, Vec4::new(1.0, 0.0, 0.0, 0.0)), 0.0);
        let x = hamiltonian_field_h(&h, &HeisenbergPoint::origin());
        assert_eq!(x, HVector::new(0.0, Vec4::new(0.0, 1.0, 0.0, 0.0)));
    }

    #[test]
    fn minus_phi_generates_the_dilations() {
        let h = Lin(HVector::new(-1.0, Vec4::zeros()), 0.0);
        let q = HeisenbergPoint::new(0.4, Vec4::new(0.3, -1.2, 0.5, 0.8));
        let x = hamiltonian_field_h(&h, &q);
        // d/dr of dilate(q, 1/r) at r = 1 is y.d/dy + 2 phi d/dphi
        assert!((x.y - q.y).norm() < 1e-15);
        assert!((x.phi - 2.0 * q.phi).abs() < 1e-15);
    }

    #[test]
    fn clifford_lift_integrates_to_s_plus_t() {
        let n = 256;
        let lift = legendrian_lift(&LagrangianSampleGrid::clifford(n), 0.5, None).unwrap();
        let h = 2.0 * PI / n as f64;
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let exact = 0.5 + (i + j) as f64 * h;
                err = err.max((lift.point(i, j).phi - exact).abs());
            }
        }
        assert!(err < 2.0 * PI * h * h / 3.0, "err {err}");
        for p in lift.periods {
            assert!((p.unwrap() - 2.0 * PI).abs() < 2.0 * PI * h * h / 6.0 + 1e-12);
        }
        // grid edges are exactly horizontal with the midpoint rule
        let mut res: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = lift.point(i, j);
                let q = lift.point(i, (j + 1) % n);
                let m = HeisenbergPoint::new(0.5 * (p.phi + q.phi), (p.y + q.y) * 0.5);
                let mut d = HVector::new(q.phi - p.phi, q.y - p.y);
                if j + 1 == n {
                    d.phi += lift.periods[1].unwrap();
                }
                res = res.max(contact_form_h(&m, &d).abs());
            }
        }
        assert!(res < 1e-8, "res {res}");
    }

    #[test]
    fn constant_map_lifts_to_constant() {
        let g = LagrangianSampleGrid::sample(5, 4, 0.1, 0.1, [false, false], |_, _| {
            Vec4::new(1.0, 2.0, 3.0, 4.0)
        });
        let lift = legendrian_lift(&g, 0.25, Some(1e-12)).unwrap();
        assert!(lift.phi.iter().all(|&p| p == 0.25));
    }

    #[test]
    fn graph_with_area_form_is_rejected() {
        let g = LagrangianSampleGrid::sample(6, 6, 0.2, 0.2, [false, false], |s, t| {
            Vec4::new(s, t, 0.0, 0.0)
        });
        match legendrian_lift(&g, 0.0, None) {
            Err(Error::Constraint { residual, .. }) => assert!((residual - 0.04).abs() < 1e-12),
            other => panic!("expected constraint error, got {other:?}"),
        }
    }
}
