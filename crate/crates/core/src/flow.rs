//! Hamiltonian deformations of discrete immersions, time steps with Reeb-direction restoration
//! of the Legendrian constraint, and the nodal Hamiltonian operator used by descent.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{hamiltonian_field, Hamiltonian, ReebConvention};
use crate::immersion::DiscreteImmersion;
use crate::linalg::{conjugate_gradient, Point};

/// X_h evaluated at every vertex.
pub fn hamiltonian_deformation(imm: &DiscreteImmersion, h: &dyn Hamiltonian, conv: ReebConvention) -> Vec<Point> {
    imm.positions
        .par_iter()
        .map(|p| hamiltonian_field(imm.target, h, p, conv))
        .collect()
}

/// Moves every vertex by tau * w and retracts to the target, without restoration.
pub fn euler_step(imm: &DiscreteImmersion, w: &[Point], tau: f64) -> Result<DiscreteImmersion> {
    if w.len() != imm.positions.len() {
        return Err(Error::Parameter("deformation has the wrong length".into()));
    }
    let positions = imm
        .positions
        .iter()
        .zip(w)
        .map(|(p, x)| imm.target.retract(&(p + x * tau)))
        .collect::<Result<Vec<_>>>()?;
    Ok(imm.with_positions(positions))
}

#[derive(Clone, Debug)]
pub struct FlowOutcome {
    pub immersion: DiscreteImmersion,
    pub residual_before: f64,
    pub residual_after: f64,
    pub iterations: usize,
}

/// Conjugate gradients for the graph Laplacian B^T B of the edge incidence B.
fn solve_graph_laplacian(imm: &DiscreteImmersion, rhs: &[f64]) -> Vec<f64> {
    let edges = imm.mesh.edges();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for e in edges {
            let d = x[e.v[1]] - x[e.v[0]];
            y[e.v[1]] += d;
            y[e.v[0]] -= d;
        }
        y
    };
    conjugate_gradient(apply, rhs, 1e-14, 4 * rhs.len() + 100)
}

/// Gauss-Newton on the edge residuals over per-vertex Reeb shifts. Runs at most `max_iter`
/// iterations and stops early once the residual is below `tol` or stops decreasing.
pub fn restore(imm: &DiscreteImmersion, tol: f64, max_iter: usize) -> Result<(DiscreteImmersion, f64, usize)> {
    let a = imm.target.reeb_alpha();
    let mut cur = imm.clone();
    let mut res = cur.legendrian_residual();
    let mut it = 0;
    while it < max_iter && res.max > tol {
        let mut rhs = vec![0.0; cur.positions.len()];
        for (e, r) in imm.mesh.edges().iter().zip(&res.per_edge) {
            rhs[e.v[1]] -= r / a;
            rhs[e.v[0]] += r / a;
        }
        let c = solve_graph_laplacian(&cur, &rhs);
        let positions: Vec<Point> = cur
            .positions
            .iter()
            .zip(&c)
            .map(|(p, s)| cur.target.reeb_flow(p, *s))
            .collect();
        let next = cur.with_positions(positions);
        let nres = next.legendrian_residual();
        it += 1;
        if nres.max >= res.max {
            break;
        }
        cur = next;
        res = nres;
    }
    Ok((cur, res.max, it))
}

/// Moves by tau * w, retracts, and restores the Legendrian constraint with up to 5 Reeb-direction
/// Gauss-Newton iterations. Fails when the residual stays above the immersion's tolerance.
pub fn flow_step(imm: &DiscreteImmersion, w: &[Point], tau: f64) -> Result<FlowOutcome> {
    if !(tau > 0.0) {
        return Err(Error::Parameter("tau must be positive".into()));
    }
    let moved = euler_step(imm, w, tau)?;
    let before = moved.legendrian_residual().max;
    let (out, after, iterations) = restore(&moved, imm.legendrian_tol, 5)?;
    if after > imm.legendrian_tol {
        return Err(Error::StepRejected {
            residual: after,
            tol: imm.legendrian_tol,
            iterations,
        });
    }
    Ok(FlowOutcome {
        immersion: out,
        residual_before: before,
        residual_after: after,
        iterations,
    })
}

/// The linear map from nodal values h to the deformation s J grad^Sigma h + c h R, where the
/// surface gradient comes from the quadratic fit stencils.
#[derive(Clone, Debug)]
pub struct NodalHamiltonian {
    /// Ambient image of the unit partial derivatives of h at each vertex.
    coeff: Vec<[Point; 2]>,
    reeb: Vec<Point>,
    reeb_coefficient: f64,
    pub mass: Vec<f64>,
}

impl NodalHamiltonian {
    pub fn new(imm: &DiscreteImmersion, conv: ReebConvention) -> Result<Self> {
        let fits = imm.mesh.vertex_fits()?;
        let t = imm.target;
        let s = conv.horizontal_scale(t);
        let coeff = (0..imm.mesh.n_vertices())
            .map(|v| {
                let p = imm.positions[v];
                let fit = &fits[v];
                let mut d = [Point::zeros(); 2];
                for (k, &(u, w)) in fit.nbrs.iter().enumerate() {
                    let dv = t.measure(&(imm.shifted(u, w) - p));
                    d[0] += dv * fit.weights[k][0];
                    d[1] += dv * fit.weights[k][1];
                }
                let g = nalgebra::Matrix2::new(d[0].dot(&d[0]), d[0].dot(&d[1]), d[0].dot(&d[1]), d[1].dot(&d[1]));
                let gi = g.try_inverse().ok_or(Error::DegenerateFace { face: v, norm: 0.0 })?;
                Ok([0, 1].map(|j| {
                    let grad = d[0] * gi[(0, j)] + d[1] * gi[(1, j)];
                    t.lift_measured(&p, &t.j_measured(&p, &grad)) * s
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        let frames = imm.face_frames()?;
        let mut mass = vec![0.0; imm.mesh.n_vertices()];
        for (f, fr) in frames.iter().enumerate() {
            for v in imm.mesh.triangles()[f] {
                mass[v] += fr.area / 3.0;
            }
        }
        Ok(NodalHamiltonian {
            coeff,
            reeb: imm.positions.iter().map(|p| t.reeb(p)).collect(),
            reeb_coefficient: conv.reeb_coefficient(),
            mass,
        })
    }

    fn partials(imm: &DiscreteImmersion, h: &[f64], v: usize) -> [f64; 2] {
        let fit = &imm.mesh.vertex_fits().unwrap()[v];
        let mut d = [0.0; 2];
        for (k, &(u, _)) in fit.nbrs.iter().enumerate() {
            d[0] += fit.weights[k][0] * (h[u] - h[v]);
            d[1] += fit.weights[k][1] * (h[u] - h[v]);
        }
        d
    }

    pub fn apply(&self, imm: &DiscreteImmersion, h: &[f64]) -> Vec<Point> {
        (0..h.len())
            .map(|v| {
                let d = Self::partials(imm, h, v);
                self.coeff[v][0] * d[0] + self.coeff[v][1] * d[1] + self.reeb[v] * (self.reeb_coefficient * h[v])
            })
            .collect()
    }

    /// The transpose of [`Self::apply`] in the Euclidean pairings.
    pub fn adjoint(&self, imm: &DiscreteImmersion, g: &[Point]) -> Vec<f64> {
        let fits = imm.mesh.vertex_fits().unwrap();
        let mut out = vec![0.0; g.len()];
        for v in 0..g.len() {
            let b = [self.coeff[v][0].dot(&g[v]), self.coeff[v][1].dot(&g[v])];
            for (k, &(u, _)) in fits[v].nbrs.iter().enumerate() {
                let x = fits[v].weights[k][0] * b[0] + fits[v].weights[k][1] * b[1];
                out[u] += x;
                out[v] -= x;
            }
            out[v] += self.reeb_coefficient * self.reeb[v].dot(&g[v]);
        }
        out
    }
}

/// Smooth random function on the parameter torus: low Fourier modes, scaled to max |h| = 1.
pub fn random_torus_function(imm: &DiscreteImmersion, seed: u64) -> Result<Vec<f64>> {
    let period = imm.mesh.uv_period().ok_or(Error::MissingUv)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for k in -2i32..=2 {
        for l in -2i32..=2 {
            if k == 0 && l == 0 {
                continue;
            }
            modes.push((k as f64, l as f64, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)));
        }
    }
    let h: Vec<f64> = (0..imm.mesh.n_vertices())
        .map(|v| {
            let u = imm.mesh.uv(v).unwrap();
            let (x, y) = (2.0 * PI * u[0] / period[0], 2.0 * PI * u[1] / period[1]);
            modes.iter().map(|(k, l, a, th)| a * (k * x + l * y + th).cos()).sum()
        })
        .collect();
    let m = h.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok(h.iter().map(|x| x / m).collect())
}

/// Applies the nodal Hamiltonian deformation of `amplitude * h` for unit time and restores.
pub fn deform(imm: &DiscreteImmersion, h: &[f64], amplitude: f64, conv: ReebConvention) -> Result<DiscreteImmersion> {
    let op = NodalHamiltonian::new(imm, conv)?;
    let hs: Vec<f64> = h.iter().map(|x| x * amplitude).collect();
    let w = op.apply(imm, &hs);
    let moved = euler_step(imm, &w, 1.0)?;
    let (mut out, res, _) = restore(&moved, 0.0, 5)?;
    let scale = out.max_edge_length();
    out.legendrian_tol = (2.0 * res).max(1e-10 * scale * scale);
    out.face_frames()?;
    Ok(out)
}

const PERTURBATION_SUBSTEPS: usize = 10;

fn perturb(base: DiscreteImmersion, amplitude: f64, seed: u64) -> Result<DiscreteImmersion> {
    let h = random_torus_function(&base, seed)?;
    let mut cur = base;
    for _ in 0..PERTURBATION_SUBSTEPS {
        cur = deform(&cur, &h, amplitude / PERTURBATION_SUBSTEPS as f64, ReebConvention::default())?;
    }
    Ok(cur)
}

/// The Clifford lift deformed by a smooth random Hamiltonian of the given amplitude.
pub fn perturbed_clifford(n: usize, amplitude: f64, seed: u64) -> Result<DiscreteImmersion> {
    perturb(crate::corpus::clifford_lift(n, 0.0, false)?, amplitude, seed)
}

/// The V2(R4) torus deformed by a smooth random Hamiltonian of the given amplitude.
pub fn perturbed_stiefel_torus(n: usize, amplitude: f64, seed: u64) -> Result<DiscreteImmersion> {
    perturb(crate::corpus::stiefel_torus(n, 0.0)?, amplitude, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeSample {
    pub tau: f64,
    pub growth: f64,
}

/// max_e |r_e(tau) - r_e(0)| after an unrestored Euler step, for each tau.
pub fn residual_growth(imm: &DiscreteImmersion, w: &[Point], taus: &[f64]) -> Result<Vec<SlopeSample>> {
    let r0 = imm.legendrian_residual().per_edge;
    taus.iter()
        .map(|&tau| {
            let r = euler_step(imm, w, tau)?.legendrian_residual().per_edge;
            let growth = r.iter().zip(&r0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok(SlopeSample { tau, growth })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::target::Target;
    use crate::hamiltonian::{Constant, Polynomial};

    #[test]
    fn zero_field_leaves_immersion_unchanged() {
        let imm = corpus::clifford_lift(8, 0.0, false).unwrap();
        let w = vec![Point::zeros(); imm.positions.len()];
        let out = flow_step(&imm, &w, 0.1).unwrap();
        assert_eq!(out.immersion.positions, imm.positions);
    }

    #[test]
    fn unit_hamiltonian_rotates_frames() {
        let imm = corpus::stiefel_torus(6, 0.0).unwrap();
        let w = hamiltonian_deformation(&imm, &Constant(1.0), ReebConvention::Thm1);
        for (x, p) in w.iter().zip(&imm.positions) {
            assert!((x - Target::Stiefel.reeb(p) * -2.0).norm() < 1e-15);
        }
    }

    #[test]
    fn nodal_adjoint_is_the_transpose() {
        let imm = corpus::clifford_lift(8, 0.2, false).unwrap();
        let op = NodalHamiltonian::new(&imm, ReebConvention::Thm1).unwrap();
        let h = random_torus_function(&imm, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g: Vec<Point> = (0..h.len()).map(|_| Point::from_fn(|_, _| rng.gen_range(-1.0..1.0))).collect();
        let lhs: f64 = op.apply(&imm, &h).iter().zip(&g).map(|(a, b)| a.dot(b)).sum();
        let rhs: f64 = op.adjoint(&imm, &g).iter().zip(&h).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn quadratic_hamiltonians_preserve_the_constraint_to_second_order() {
        let imm = corpus::clifford_lift(16, 0.0, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut h = Polynomial::random(&mut rng, 5, 2);
        h.terms.retain(|(_, e)| e[0] == 0);
        let w = hamiltonian_deformation(&imm, &h, ReebConvention::Thm1);
        let s = residual_growth(&imm, &w, &[1e-2, 1e-3]).unwrap();
        let slope = (s[0].growth / s[1].growth).log10();
        assert!(slope > 1.9, "{slope}");
    }

    #[test]
    fn perturbed_clifford_is_legendrian() {
        let imm = perturbed_clifford(16, 1e-2, 3).unwrap();
        assert!(imm.legendrian_residual().max <= imm.legendrian_tol);
    }
}
