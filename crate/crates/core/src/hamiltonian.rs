//! Hamiltonian functions on the targets and their contact vector fields.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Point;
use crate::target::Target;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ReebConvention {
    /// X_h = J grad_H h - 2 h R, horizontal part rescaled to make the field contact.
    #[default]
    #[serde(rename = "thm1")]
    Thm1,
    /// X_h = J grad_H h + (h/2) R, horizontal part rescaled to make the field contact.
    #[serde(rename = "sec231")]
    Sec231,
}

impl ReebConvention {
    pub fn reeb_coefficient(self) -> f64 {
        match self {
            ReebConvention::Thm1 => -2.0,
            ReebConvention::Sec231 => 0.5,
        }
    }

    /// Coefficient of J grad_H h that makes c h R + s J grad_H h a contact vector field.
    pub fn horizontal_scale(self, target: Target) -> f64 {
        0.5 * self.reeb_coefficient() * target.reeb_alpha()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Support {
    Everywhere,
    /// Euclidean ball in measured coordinates (all of R^8 for V2, the y-coordinates for H^2).
    MeasuredBall { center: Point, radius: f64 },
    /// Gauge shell {inner <= r_gauge(base, .) <= outer}.
    GaugeShell {
        target: Target,
        base: Point,
        inner: f64,
        outer: f64,
        phi_period: Option<f64>,
    },
}

impl Support {
    pub fn contains(&self, target: Target, p: &Point) -> bool {
        match self {
            Support::Everywhere => true,
            Support::MeasuredBall { center, radius } => {
                (target.measure(p) - target.measure(center)).norm() < *radius
            }
            Support::GaugeShell {
                target,
                base,
                inner,
                outer,
                phi_period,
            } => {
                let r = target.gauge(base, p, *phi_period).r_gauge;
                r >= *inner && r <= *outer
            }
        }
    }
}

/// A scalar function on the ambient coordinates of a target, with Euclidean partial derivatives.
pub trait Hamiltonian: Sync {
    fn value(&self, p: &Point) -> f64;
    fn gradient(&self, p: &Point) -> Point;
    fn support(&self) -> Support {
        Support::Everywhere
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constant(pub f64);

impl Hamiltonian for Constant {
    fn value(&self, _p: &Point) -> f64 {
        self.0
    }
    fn gradient(&self, _p: &Point) -> Point {
        Point::zeros()
    }
}

/// Sum of monomials c * prod x_i^{e_i}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<(f64, [u8; 8])>,
}

impl Polynomial {
    pub fn coordinate(i: usize, c: f64) -> Self {
        let mut e = [0u8; 8];
        e[i] = 1;
        Polynomial { terms: vec![(c, e)] }
    }

    /// Random polynomial of total degree <= `degree` in the first `dim` coordinates, with
    /// coefficients uniform in [-1, 1].
    pub fn random<R: Rng>(rng: &mut R, dim: usize, degree: u8) -> Self {
        let mut terms = Vec::new();
        let mut e = [0u8; 8];
        fn rec<R: Rng>(rng: &mut R, dim: usize, k: usize, left: u8, e: &mut [u8; 8], out: &mut Vec<(f64, [u8; 8])>) {
            if k == dim {
                out.push((rng.gen_range(-1.0..1.0), *e));
                return;
            }
            for d in 0..=left {
                e[k] = d;
                rec(rng, dim, k + 1, left - d, e, out);
            }
            e[k] = 0;
        }
        rec(rng, dim, 0, degree, &mut e, &mut terms);
        Polynomial { terms }
    }

    /// Sum of absolute coefficients, a scale for tolerances.
    pub fn scale(&self) -> f64 {
        self.terms.iter().map(|t| t.0.abs()).sum::<f64>().max(1e-300)
    }
}

impl Hamiltonian for Polynomial {
    fn value(&self, p: &Point) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().enumerate().map(|(i, &k)| p[i].powi(k as i32)).product::<f64>())
            .sum()
    }

    fn gradient(&self, p: &Point) -> Point {
        let mut g = Point::zeros();
        for (c, e) in &self.terms {
            for j in 0..8 {
                if e[j] == 0 {
                    continue;
                }
                let mut m = c * e[j] as f64;
                for (i, &k) in e.iter().enumerate() {
                    let k = if i == j { k - 1 } else { k };
                    m *= p[i].powi(k as i32);
                }
                g[j] += m;
            }
        }
        g
    }
}

/// amplitude * (1 - |m - c|^2 / radius^2)^3 on the measured ball, zero outside; C^2.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    pub target: Target,
    pub center: Point,
    pub radius: f64,
    pub amplitude: f64,
}

impl Hamiltonian for Bump {
    fn value(&self, p: &Point) -> f64 {
        let d = self.target.measure(&(p - self.center));
        let s = 1.0 - d.norm_squared() / (self.radius * self.radius);
        if s <= 0.0 {
            0.0
        } else {
            self.amplitude * s * s * s
        }
    }

    fn gradient(&self, p: &Point) -> Point {
        let d = self.target.measure(&(p - self.center));
        let r2 = self.radius * self.radius;
        let s = 1.0 - d.norm_squared() / r2;
        if s <= 0.0 {
            Point::zeros()
        } else {
            d * (-6.0 * self.amplitude * s * s / r2)
        }
    }

    fn support(&self) -> Support {
        Support::MeasuredBall {
            center: self.center,
            radius: self.radius,
        }
    }
}

/// Horizontal gradient of h at p, as an ambient vector.
pub fn horizontal_gradient(target: Target, h: &dyn Hamiltonian, p: &Point) -> Point {
    target.horizontal_gradient(p, &h.gradient(p))
}

/// Contact vector field c h R + s J grad_H h for explicit coefficients.
pub fn contact_field_with(
    target: Target,
    h: &dyn Hamiltonian,
    p: &Point,
    horizontal_scale: f64,
    reeb_coefficient: f64,
) -> Point {
    let g = horizontal_gradient(target, h, p);
    target.j_horizontal(p, &g) * horizontal_scale + target.reeb(p) * (reeb_coefficient * h.value(p))
}

pub fn hamiltonian_field(target: Target, h: &dyn Hamiltonian, p: &Point, conv: ReebConvention) -> Point {
    contact_field_with(target, h, p, conv.horizontal_scale(target), conv.reeb_coefficient())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vec4;
    use crate::stiefel::StiefelPoint;
    use rand::SeedableRng;

    #[test]
    fn polynomial_gradient_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let h = Polynomial::random(&mut rng, 8, 3);
        let p = Point::from_fn(|i, _| 0.1 * i as f64 - 0.3);
        let g = h.gradient(&p);
        for j in 0..8 {
            let mut e = Point::zeros();
            e[j] = 1e-5;
            let fd = (h.value(&(p + e)) - h.value(&(p - e))) / 2e-5;
            assert!((fd - g[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn unit_hamiltonian_on_stiefel_is_minus_two_reeb() {
        let p = StiefelPoint::new(Vec4::new(0.6, 0.8, 0.0, 0.0), Vec4::new(0.0, 0.0, 0.8, -0.6))
            .unwrap()
            .to_vec8();
        let x = hamiltonian_field(Target::Stiefel, &Constant(1.0), &p, ReebConvention::Thm1);
        assert!((x - Target::Stiefel.reeb(&p) * -2.0).norm() < 1e-15);
    }

    #[test]
    fn zero_hamiltonian_gives_zero_field() {
        let p = StiefelPoint::standard().to_vec8();
        for t in [Target::Stiefel, Target::Heisenberg] {
            for c in [ReebConvention::Thm1, ReebConvention::Sec231] {
                assert_eq!(hamiltonian_field(t, &Constant(0.0), &p, c), Point::zeros());
            }
        }
    }

    #[test]
    fn bump_gradient_matches_finite_differences() {
        let b = Bump {
            target: Target::Heisenberg,
            center: Point::from_fn(|i, _| if i == 1 { 1.0 } else { 0.0 }),
            radius: 0.8,
            amplitude: 2.0,
        };
        let p = Point::from_fn(|i, _| if i < 5 { 0.1 * i as f64 + 0.05 } else { 0.0 });
        let g = b.gradient(&p);
        for j in 0..5 {
            let mut e = Point::zeros();
            e[j] = 1e-6;
            let fd = (b.value(&(p + e)) - b.value(&(p - e))) / 2e-6;
            assert!((fd - g[j]).abs() < 1e-8, "{j}: {fd} vs {}", g[j]);
        }
        assert_eq!(g[0], 0.0);
    }
}
