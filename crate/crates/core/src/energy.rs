//! The penalized area E_eps = sum dvol + eps^4 sum (1 + |dT|^2_g)^2 dvol with its exact gradient.
//!
//! Per face, the partials come from the affine interpolant in uv; the derivative of the Gauss
//! 2-vector T is the least-squares fit of T over the faces sharing a vertex with the face.

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::immersion::DiscreteImmersion;
use crate::linalg::{bivec_apply, wedge8, Bivec8, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub epsilon: f64,
    pub area: f64,
    pub penalty: f64,
    pub total: f64,
    pub entropy_indicator: f64,
}

/// Per-vertex gradient of E_eps in ambient coordinates, projected to the tangent spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstVariation {
    pub energy: EnergyBreakdown,
    pub per_vertex: Vec<Point>,
}

impl FirstVariation {
    pub fn pair(&self, w: &[Point]) -> f64 {
        self.per_vertex.iter().zip(w).map(|(g, x)| g.dot(x)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.per_vertex.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt()
    }
}

struct Face {
    d: [Point; 2],
    gi: Matrix2<f64>,
    dvol: f64,
    bnorm: f64,
    t: Bivec8,
    uv_area: f64,
}

fn faces(imm: &DiscreteImmersion) -> Result<Vec<Face>> {
    if !imm.mesh.has_uv() {
        return Err(Error::MissingUv);
    }
    let tg = imm.target;
    (0..imm.mesh.n_faces())
        .into_par_iter()
        .map(|f| {
            let prm = imm.mesh.face_param(f).unwrap();
            let m = imm.corners(f).map(|x| tg.measure(&x));
            let d = [0, 1].map(|k| m[0] * prm.bary[0][k] + m[1] * prm.bary[1][k] + m[2] * prm.bary[2][k]);
            let g = Matrix2::new(d[0].dot(&d[0]), d[0].dot(&d[1]), d[0].dot(&d[1]), d[1].dot(&d[1]));
            let det = g.determinant();
            if !(det > 0.0) {
                return Err(Error::DegenerateFace { face: f, norm: 0.0 });
            }
            let b = wedge8(&d[0], &d[1]);
            let bnorm = b.norm();
            if !(bnorm > 0.0) {
                return Err(Error::DegenerateFace { face: f, norm: 0.0 });
            }
            Ok(Face {
                d,
                gi: g.try_inverse().unwrap(),
                dvol: det.sqrt(),
                bnorm,
                t: b / bnorm,
                uv_area: prm.area,
            })
        })
        .collect()
}

fn dt(imm: &DiscreteImmersion, fs: &[Face], f: usize) -> Result<[Bivec8; 2]> {
    let st = &imm.mesh.face_stencils()?[f];
    let mut out = [Bivec8::zeros(), Bivec8::zeros()];
    for (n, w) in st.nbrs.iter().zip(&st.weights) {
        let diff = fs[*n].t - fs[f].t;
        out[0] += diff * w[0];
        out[1] += diff * w[1];
    }
    Ok(out)
}

fn gram(d: &[Bivec8; 2]) -> Matrix2<f64> {
    let c = d[0].dot(&d[1]);
    Matrix2::new(d[0].norm_squared(), c, c, d[1].norm_squared())
}

fn contract(a: &Matrix2<f64>, b: &Matrix2<f64>) -> f64 {
    a.component_mul(b).sum()
}

fn breakdown(eps: f64, area: f64, penalty: f64) -> EnergyBreakdown {
    EnergyBreakdown {
        epsilon: eps,
        area,
        penalty,
        total: area + penalty,
        entropy_indicator: penalty * (1.0 / eps).ln(),
    }
}

/// Per-face |dT|^2_g.
pub fn gauss_map_energy_density(imm: &DiscreteImmersion) -> Result<Vec<f64>> {
    let fs = faces(imm)?;
    (0..fs.len())
        .map(|f| Ok(contract(&fs[f].gi, &gram(&dt(imm, &fs, f)?))))
        .collect()
}

pub fn energy(imm: &DiscreteImmersion, eps: f64) -> Result<EnergyBreakdown> {
    if !(eps >= 0.0) {
        return Err(Error::Parameter("epsilon must be non-negative".into()));
    }
    let fs = faces(imm)?;
    let e4 = eps.powi(4);
    let parts: Vec<(f64, f64)> = (0..fs.len())
        .into_par_iter()
        .map(|f| {
            let a = fs[f].uv_area * fs[f].dvol;
            if e4 == 0.0 {
                return Ok((a, 0.0));
            }
            let q = contract(&fs[f].gi, &gram(&dt(imm, &fs, f)?));
            Ok((a, e4 * a * (1.0 + q).powi(2)))
        })
        .collect::<Result<_>>()?;
    let area = parts.iter().map(|p| p.0).sum();
    let penalty = parts.iter().map(|p| p.1).sum();
    Ok(breakdown(eps, area, penalty))
}

/// Exact gradient of the discrete E_eps (reverse mode), projected to the target tangent spaces.
pub fn energy_gradient(imm: &DiscreteImmersion, eps: f64) -> Result<FirstVariation> {
    let raw = raw_gradient(imm, eps)?;
    let per_vertex = raw
        .1
        .iter()
        .zip(&imm.positions)
        .map(|(g, p)| imm.target.tangent_project(p, g))
        .collect();
    Ok(FirstVariation {
        energy: raw.0,
        per_vertex,
    })
}

fn raw_gradient(imm: &DiscreteImmersion, eps: f64) -> Result<(EnergyBreakdown, Vec<Point>)> {
    let fs = faces(imm)?;
    let nf = fs.len();
    let e4 = eps.powi(4);
    let stencils = if e4 > 0.0 { Some(imm.mesh.face_stencils()?) } else { None };

    // per face: energy parts, adjoint of g, adjoint of dT
    struct Local {
        area: f64,
        penalty: f64,
        gbar: Matrix2<f64>,
        dbar: [Bivec8; 2],
    }
    let locals: Vec<Local> = (0..nf)
        .into_par_iter()
        .map(|f| {
            let fc = &fs[f];
            let a = fc.uv_area;
            let half_gi = fc.gi * (0.5 * fc.dvol);
            if e4 == 0.0 {
                return Ok(Local {
                    area: a * fc.dvol,
                    penalty: 0.0,
                    gbar: half_gi * a,
                    dbar: [Bivec8::zeros(), Bivec8::zeros()],
                });
            }
            let d = dt(imm, &fs, f)?;
            let m = gram(&d);
            let q = contract(&fc.gi, &m);
            let k = e4 * a * fc.dvol * 2.0 * (1.0 + q);
            let gbar = half_gi * (a * (1.0 + e4 * (1.0 + q).powi(2))) - fc.gi * m * fc.gi * k;
            let dbar = [
                (d[0] * fc.gi[(0, 0)] + d[1] * fc.gi[(0, 1)]) * (2.0 * k),
                (d[0] * fc.gi[(1, 0)] + d[1] * fc.gi[(1, 1)]) * (2.0 * k),
            ];
            Ok(Local {
                area: a * fc.dvol,
                penalty: e4 * a * fc.dvol * (1.0 + q).powi(2),
                gbar,
                dbar,
            })
        })
        .collect::<Result<_>>()?;

    // adjoint of T per face, accumulated in a fixed order
    let mut tbar = vec![Bivec8::zeros(); nf];
    if let Some(st) = stencils {
        for f in 0..nf {
            let l = &locals[f];
            for (n, w) in st[f].nbrs.iter().zip(&st[f].weights) {
                let c = l.dbar[0] * w[0] + l.dbar[1] * w[1];
                tbar[*n] += c;
                tbar[f] -= c;
            }
        }
    }

    let grads: Vec<[Point; 3]> = (0..nf)
        .into_par_iter()
        .map(|f| {
            let fc = &fs[f];
            let l = &locals[f];
            let tb = tbar[f];
            let bbar = (tb - fc.t * fc.t.dot(&tb)) / fc.bnorm;
            let mut dbar = [bivec_apply(&bbar, &fc.d[1]), -bivec_apply(&bbar, &fc.d[0])];
            for i in 0..2 {
                for j in 0..2 {
                    dbar[i] += fc.d[j] * (l.gbar[(i, j)] + l.gbar[(j, i)]);
                }
            }
            let prm = imm.mesh.face_param(f).unwrap();
            [0, 1, 2].map(|c| imm.target.measure(&(dbar[0] * prm.bary[c][0] + dbar[1] * prm.bary[c][1])))
        })
        .collect();
    let mut out = vec![Point::zeros(); imm.mesh.n_vertices()];
    for (f, g) in grads.iter().enumerate() {
        let t = imm.mesh.triangles()[f];
        for c in 0..3 {
            out[t[c]] += g[c];
        }
    }
    let area = locals.iter().map(|l| l.area).sum();
    let penalty = locals.iter().map(|l| l.penalty).sum();
    Ok((breakdown(eps, area, penalty), out))
}

/// d/dt E_eps(Lambda + t w) at t = 0, assembled directly from the variations of the metric,
/// of the area element and of the Gauss map. `w` is first projected to the tangent spaces.
pub fn first_variation(imm: &DiscreteImmersion, eps: f64, w: &[Point]) -> Result<f64> {
    if w.len() != imm.positions.len() {
        return Err(Error::Parameter("variation has the wrong length".into()));
    }
    let tg = imm.target;
    let w: Vec<Point> = w.iter().zip(&imm.positions).map(|(x, p)| tg.tangent_project(p, x)).collect();
    let fs = faces(imm)?;
    let nf = fs.len();
    let e4 = eps.powi(4);
    let pd: Vec<[Point; 2]> = (0..nf)
        .map(|f| {
            let prm = imm.mesh.face_param(f).unwrap();
            let t = imm.mesh.triangles()[f];
            let m = t.map(|v| tg.measure(&w[v]));
            [0, 1].map(|k| m[0] * prm.bary[0][k] + m[1] * prm.bary[1][k] + m[2] * prm.bary[2][k])
        })
        .collect();
    let mut gdot = Vec::with_capacity(nf);
    let mut tdot = Vec::with_capacity(nf);
    for f in 0..nf {
        let (d, dw) = (&fs[f].d, &pd[f]);
        let gd = Matrix2::from_fn(|i, j| dw[i].dot(&d[j]) + d[i].dot(&dw[j]));
        let bdot = wedge8(&dw[0], &d[1]) + wedge8(&d[0], &dw[1]);
        tdot.push((bdot - fs[f].t * fs[f].t.dot(&bdot)) / fs[f].bnorm);
        gdot.push(gd);
    }
    let mut total = 0.0;
    for f in 0..nf {
        let fc = &fs[f];
        let dvol_dot = 0.5 * fc.dvol * contract(&fc.gi, &gdot[f]);
        if e4 == 0.0 {
            total += fc.uv_area * dvol_dot;
            continue;
        }
        let st = &imm.mesh.face_stencils()?[f];
        let d = dt(imm, &fs, f)?;
        let mut dd = [Bivec8::zeros(), Bivec8::zeros()];
        for (n, wt) in st.nbrs.iter().zip(&st.weights) {
            let diff = tdot[*n] - tdot[f];
            dd[0] += diff * wt[0];
            dd[1] += diff * wt[1];
        }
        let m = gram(&d);
        let q = contract(&fc.gi, &m);
        let mdot = Matrix2::from_fn(|i, j| dd[i].dot(&d[j]) + d[i].dot(&dd[j]));
        let qdot = contract(&fc.gi, &mdot) - contract(&(fc.gi * gdot[f] * fc.gi), &m);
        total += fc.uv_area * (dvol_dot * (1.0 + e4 * (1.0 + q).powi(2)) + e4 * fc.dvol * 2.0 * (1.0 + q) * qdot);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use rand::{Rng, SeedableRng};

    fn random_field(imm: &DiscreteImmersion, seed: u64) -> Vec<Point> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        imm.positions
            .iter()
            .map(|p| imm.target.tangent_project(p, &Point::from_fn(|_, _| rng.gen_range(-1.0..1.0))))
            .collect()
    }

    fn fd(imm: &DiscreteImmersion, eps: f64, w: &[Point], h: f64) -> f64 {
        let e = |t: f64| {
            let pos = imm.positions.iter().zip(w).map(|(p, x)| p + x * t).collect();
            energy(&imm.with_positions(pos), eps).unwrap().total
        };
        let d = |h: f64| (e(h) - e(-h)) / (2.0 * h);
        (4.0 * d(h / 2.0) - d(h)) / 3.0
    }

    #[test]
    fn flat_unit_patch_energy() {
        let imm = corpus::flat_patch(1, 1.0).unwrap();
        let e = energy(&imm, 0.1).unwrap();
        assert!((e.area - 1.0).abs() < 1e-15);
        assert!((e.penalty - 1e-4).abs() < 1e-15);
        assert!((e.total - 1.0001).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_forward_mode_and_differences() {
        for (k, imm) in [
            corpus::clifford_lift(8, 0.3, false).unwrap(),
            corpus::stiefel_torus(8, 0.2).unwrap(),
            corpus::curved_patch(6, 0.6, 1.0).unwrap(),
        ]
        .iter()
        .enumerate()
        {
            for eps in [0.0, 0.7] {
                let w = random_field(imm, k as u64);
                let g = energy_gradient(imm, eps).unwrap().pair(&w);
                let f = first_variation(imm, eps, &w).unwrap();
                let n = fd(imm, eps, &w, 1e-4);
                assert!((g - f).abs() < 1e-9 * g.abs().max(1.0), "{k} {eps}: {g} vs {f}");
                assert!((g - n).abs() < 1e-6 * g.abs().max(1.0), "{k} {eps}: {g} vs {n}");
            }
        }
    }

    #[test]
    fn flat_patch_interior_gradient_vanishes() {
        let imm = corpus::flat_patch(6, 1.0).unwrap();
        let g = energy_gradient(&imm, 0.0).unwrap();
        for v in 0..imm.mesh.n_vertices() {
            if !imm.mesh.is_boundary_vertex(v) {
                assert!(g.per_vertex[v].norm() < 1e-14);
            }
        }
    }
}
