//! Uniform access to the two contact targets on ambient coordinate vectors.
//!
//! Points of V2(R4) are stored as (a, b) in R^8. Points of H^2 are stored as
//! (phi, y1, y2, y3, y4, 0, 0, 0). Metric quantities of H^2 are measured through the
//! projection to C^2, i.e. on the y-coordinates; for V2(R4) the Euclidean metric of R^8 is used.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::heisenberg::{gauge_h, HeisenbergPoint};
use crate::linalg::{mul_i, omega0, split8, vec8_from, Point, Vec4};
use crate::stiefel::{self, GaugeFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Stiefel,
    Heisenberg,
}

fn y_of(p: &Point) -> Vec4 {
    p.fixed_rows::<4>(1).into_owned()
}

fn with_y(phi: f64, y: &Vec4) -> Point {
    HeisenbergPoint::new(phi, *y).to_vec8()
}

/// Same representative of phi modulo `period`, centered at zero.
pub fn reduce_period(x: f64, period: Option<f64>) -> f64 {
    match period {
        Some(p) if p > 0.0 => x - p * (x / p).round(),
        _ => x,
    }
}

impl Target {
    pub fn dim(self) -> usize {
        match self {
            Target::Stiefel => 8,
            Target::Heisenberg => 5,
        }
    }

    pub fn reeb_alpha(self) -> f64 {
        match self {
            Target::Stiefel => -2.0,
            Target::Heisenberg => -1.0,
        }
    }

    pub fn contact_form(self, p: &Point, x: &Point) -> f64 {
        match self {
            Target::Stiefel => {
                let (a, b) = split8(p);
                let (v, w) = split8(x);
                a.dot(&w) - b.dot(&v)
            }
            Target::Heisenberg => -x[0] + omega0(&y_of(p), &y_of(x)),
        }
    }

    pub fn reeb(self, p: &Point) -> Point {
        match self {
            Target::Stiefel => {
                let (a, b) = split8(p);
                vec8_from(&b, &(-a))
            }
            Target::Heisenberg => with_y(1.0, &Vec4::zeros()),
        }
    }

    pub fn tangent_project(self, p: &Point, x: &Point) -> Point {
        match self {
            Target::Stiefel => {
                let (a, b) = split8(p);
                let (v, w) = split8(x);
                let s = 0.5 * (a.dot(&w) + v.dot(&b));
                vec8_from(
                    &(v - a * a.dot(&v) - b * s),
                    &(w - b * b.dot(&w) - a * s),
                )
            }
            Target::Heisenberg => with_y(x[0], &y_of(x)),
        }
    }

    pub fn horizontal_project(self, p: &Point, x: &Point) -> Point {
        match self {
            Target::Stiefel => {
                let t = self.tangent_project(p, x);
                let r = self.reeb(p);
                t - r * (t.dot(&r) / r.norm_squared())
            }
            Target::Heisenberg => {
                let y = y_of(x);
                with_y(omega0(&y_of(p), &y), &y)
            }
        }
    }

    /// Horizontal gradient of a function with Euclidean gradient `grad` at p.
    pub fn horizontal_gradient(self, p: &Point, grad: &Point) -> Point {
        match self {
            Target::Stiefel => self.horizontal_project(p, grad),
            Target::Heisenberg => {
                let yp = y_of(p);
                let g = y_of(grad) + mul_i(&yp) * grad[0];
                with_y(omega0(&yp, &g), &g)
            }
        }
    }

    /// J_H on a horizontal ambient vector at p.
    pub fn j_horizontal(self, p: &Point, x: &Point) -> Point {
        match self {
            Target::Stiefel => {
                let (v, w) = split8(x);
                vec8_from(&(-w), &v)
            }
            Target::Heisenberg => {
                let g = mul_i(&y_of(x));
                with_y(omega0(&y_of(p), &g), &g)
            }
        }
    }

    /// The part of a vector seen by the metric.
    pub fn measure(self, x: &Point) -> Point {
        match self {
            Target::Stiefel => *x,
            Target::Heisenberg => with_y(0.0, &y_of(x)),
        }
    }

    /// Horizontal lift of a measured vector: for H^2 adds the phi-component, for V2 the
    /// horizontal projection.
    pub fn lift_measured(self, p: &Point, m: &Point) -> Point {
        self.horizontal_project(p, m)
    }

    /// J applied to a measured vector.
    pub fn j_measured(self, p: &Point, m: &Point) -> Point {
        match self {
            Target::Stiefel => self.j_horizontal(p, &self.horizontal_project(p, m)),
            Target::Heisenberg => with_y(0.0, &mul_i(&y_of(m))),
        }
    }

    pub fn retract(self, p: &Point) -> Result<Point> {
        match self {
            Target::Stiefel => Ok(stiefel::retract8(p)?.to_vec8()),
            Target::Heisenberg => Ok(with_y(p[0], &y_of(p))),
        }
    }

    pub fn point_defect(self, p: &Point) -> f64 {
        match self {
            Target::Stiefel => {
                let (a, b) = split8(p);
                (a.norm_squared() - 1.0)
                    .abs()
                    .max((b.norm_squared() - 1.0).abs())
                    .max(a.dot(&b).abs())
            }
            Target::Heisenberg => p.fixed_rows::<3>(5).amax(),
        }
    }

    /// Flow of the Reeb field for time t.
    pub fn reeb_flow(self, p: &Point, t: f64) -> Point {
        match self {
            Target::Stiefel => {
                let (a, b) = split8(p);
                let (s, c) = t.sin_cos();
                vec8_from(&(a * c + b * s), &(-a * s + b * c))
            }
            Target::Heisenberg => {
                let mut q = *p;
                q[0] += t;
                q
            }
        }
    }

    /// Folland-Koranyi gauge of p relative to p0. For H^2 the Legendrian coordinate is reduced
    /// modulo `phi_period` when the surface lives in a quotient by phi-translations.
    pub fn gauge(self, p0: &Point, p: &Point, phi_period: Option<f64>) -> GaugeFrame {
        let (rho, phi) = self.rho_phi(p0, p, phi_period);
        GaugeFrame::from_rho_phi(rho, phi)
    }

    fn rho_phi(self, p0: &Point, p: &Point, phi_period: Option<f64>) -> (f64, f64) {
        match self {
            Target::Stiefel => {
                let (a0, b0) = split8(p0);
                let (a, b) = split8(p);
                ((p - p0).norm(), a.dot(&b0) - a0.dot(&b))
            }
            Target::Heisenberg => {
                let g = gauge_h(&HeisenbergPoint::from_vec8(p0), &HeisenbergPoint::from_vec8(p));
                (g.rho, reduce_period(g.phi, phi_period))
            }
        }
    }

    /// Euclidean gradients of rho^2 and of the Legendrian coordinate phi_{p0} at p.
    pub fn gauge_gradients(self, p0: &Point, p: &Point) -> (Point, Point) {
        match self {
            Target::Stiefel => {
                let (a0, b0) = split8(p0);
                ((p - p0) * 2.0, vec8_from(&b0, &(-a0)))
            }
            Target::Heisenberg => {
                let dy = y_of(p) - y_of(p0);
                (with_y(0.0, &(dy * 2.0)), with_y(1.0, &(-mul_i(&y_of(p0)))))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stiefel::StiefelPoint;

    #[test]
    fn reeb_normalizations() {
        let p = StiefelPoint::standard().reeb_rotate(0.4).to_vec8();
        assert_eq!(Target::Stiefel.contact_form(&p, &Target::Stiefel.reeb(&p)), -2.0);
        let q = with_y(0.3, &Vec4::new(1.0, 2.0, 3.0, 4.0));
        assert_eq!(Target::Heisenberg.contact_form(&q, &Target::Heisenberg.reeb(&q)), -1.0);
    }

    #[test]
    fn horizontal_projection_kills_alpha() {
        let p = StiefelPoint::new(Vec4::new(0.6, 0.8, 0.0, 0.0), Vec4::new(0.0, 0.0, 0.6, 0.8))
            .unwrap()
            .to_vec8();
        let x = Point::from_fn(|i, _| (i as f64 + 1.0).sin());
        let hx = Target::Stiefel.horizontal_project(&p, &x);
        assert!(Target::Stiefel.contact_form(&p, &hx).abs() < 1e-15);
        let q = with_y(0.3, &Vec4::new(1.0, 2.0, 3.0, 4.0));
        let hx = Target::Heisenberg.horizontal_project(&q, &x);
        assert!(Target::Heisenberg.contact_form(&q, &hx).abs() < 1e-14);
    }

    #[test]
    fn reduce_period_centers() {
        let p = Some(2.0 * std::f64::consts::PI);
        assert!((reduce_period(6.0, p) - (6.0 - 2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert_eq!(reduce_period(0.5, p), 0.5);
        assert_eq!(reduce_period(7.0, None), 7.0);
    }
}
