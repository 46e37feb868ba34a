//! Second fundamental form, mean curvature one-form, Lagrangian angle and Hopf differential of
//! discrete immersions. Second derivatives come from quadratic least-squares fits in uv.

use std::collections::VecDeque;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::immersion::DiscreteImmersion;
use crate::linalg::Point;
use crate::mesh::Wrap;

#[derive(Clone, Debug, PartialEq)]
pub struct VertexCurvature {
    pub partials: [Point; 2],
    pub metric: Matrix2<f64>,
    pub metric_inv: Matrix2<f64>,
    /// Normal parts of d11, d12, d22 (measured).
    pub second: [Point; 3],
    pub ii_norm2: f64,
    pub mean: Point,
    /// Largest |alpha(d_ij Lambda)| over the three second derivatives.
    pub reeb_component: f64,
    /// Components of the mean curvature one-form in uv coordinates.
    pub gamma: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureReport {
    pub vertices: Vec<VertexCurvature>,
    /// Vertices whose fit fell back to the 2-ring.
    pub fit_warnings: Vec<usize>,
}

impl CurvatureReport {
    pub fn max_reeb_component(&self) -> f64 {
        self.vertices.iter().map(|v| v.reeb_component).fold(0.0, f64::max)
    }

    pub fn mean_norms(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.mean.norm()).collect()
    }
}

/// Orthonormal basis of the normal space span(R, J d1, J d2) in measured coordinates.
fn normal_basis(imm: &DiscreteImmersion, p: &Point, d: &[Point; 2]) -> Vec<Point> {
    let t = imm.target;
    let mut cands = vec![t.j_measured(p, &d[0]), t.j_measured(p, &d[1])];
    let r = t.measure(&t.reeb(p));
    if r.norm() > 0.0 {
        cands.insert(0, r);
    }
    let mut tangent: Vec<Point> = Vec::new();
    for x in d {
        let mut y = *x;
        for q in &tangent {
            y -= q * q.dot(&y);
        }
        tangent.push(y / y.norm());
    }
    let mut basis: Vec<Point> = Vec::new();
    for c in cands {
        let mut y = c;
        for q in tangent.iter().chain(basis.iter()) {
            y -= q * q.dot(&y);
        }
        let l = y.norm();
        if l > 1e-8 * c.norm() {
            basis.push(y / l);
        }
    }
    basis
}

/// First derivatives of the quadratic vertex fits in ambient coordinates.
pub fn fitted_partials(imm: &DiscreteImmersion) -> Result<Vec<[Point; 2]>> {
    let fits = imm.mesh.vertex_fits()?;
    Ok((0..imm.mesh.n_vertices())
        .map(|v| {
            let p = imm.positions[v];
            let fit = &fits[v];
            let mut d = [Point::zeros(); 2];
            for (k, &(u, w)) in fit.nbrs.iter().enumerate() {
                let dv = imm.shifted(u, w) - p;
                d[0] += dv * fit.weights[k][0];
                d[1] += dv * fit.weights[k][1];
            }
            d
        })
        .collect())
}

pub fn second_fundamental_form(imm: &DiscreteImmersion) -> Result<CurvatureReport> {
    let fits = imm.mesh.vertex_fits()?;
    let t = imm.target;
    let vertices: Vec<VertexCurvature> = (0..imm.mesh.n_vertices())
        .into_par_iter()
        .map(|v| {
            let p = imm.positions[v];
            let fit = &fits[v];
            let mut c = [Point::zeros(); 5];
            for (k, &(u, w)) in fit.nbrs.iter().enumerate() {
                let dv = imm.shifted(u, w) - p;
                for j in 0..5 {
                    c[j] += dv * fit.weights[k][j];
                }
            }
            let reeb_component = [c[2], c[3], c[4]]
                .iter()
                .map(|x| t.contact_form(&p, x).abs())
                .fold(0.0, f64::max);
            let d = [t.measure(&c[0]), t.measure(&c[1])];
            let metric = Matrix2::new(d[0].dot(&d[0]), d[0].dot(&d[1]), d[0].dot(&d[1]), d[1].dot(&d[1]));
            let gi = metric.try_inverse().ok_or(Error::DegenerateFace { face: v, norm: 0.0 })?;
            let basis = normal_basis(imm, &p, &d);
            let proj = |x: &Point| -> Point {
                let m = t.measure(x);
                basis.iter().fold(Point::zeros(), |acc, q| acc + q * q.dot(&m))
            };
            let second = [proj(&c[2]), proj(&c[3]), proj(&c[4])];
            let ii = |i: usize, j: usize| -> &Point { &second[i + j] };
            let mut ii_norm2 = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            ii_norm2 += gi[(i, k)] * gi[(j, l)] * ii(i, j).dot(ii(k, l));
                        }
                    }
                }
            }
            let mean = (second[0] * gi[(0, 0)] + second[1] * (2.0 * gi[(0, 1)]) + second[2] * gi[(1, 1)]) * 0.5;
            let gamma = [0, 1].map(|i| 2.0 * t.j_measured(&p, &d[i]).dot(&mean));
            Ok(VertexCurvature {
                partials: d,
                metric,
                metric_inv: gi,
                second,
                ii_norm2,
                mean,
                reeb_component,
                gamma,
            })
        })
        .collect::<Result<_>>()?;
    let fit_warnings = fits.iter().enumerate().filter(|(_, f)| f.two_ring).map(|(v, _)| v).collect();
    Ok(CurvatureReport { vertices, fit_warnings })
}

/// Per-face (|d1|^2 - |d2|^2)/4 - i (d1 . d2)/2, as (re, im).
pub fn hopf_differential(imm: &DiscreteImmersion) -> Result<Vec<(f64, f64)>> {
    if !imm.mesh.has_uv() {
        return Err(Error::MissingUv);
    }
    Ok(imm
        .face_frames()?
        .iter()
        .map(|f| {
            let [d1, d2] = &f.partials;
            (0.25 * (d1.norm_squared() - d2.norm_squared()), -0.5 * d1.dot(d2))
        })
        .collect())
}

pub fn hopf_max(imm: &DiscreteImmersion) -> Result<f64> {
    Ok(hopf_differential(imm)?.iter().map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max))
}

/// Conformal-coordinate Dirichlet energy 1/2 sum |dLambda|^2 over uv.
pub fn dirichlet_energy(imm: &DiscreteImmersion) -> Result<f64> {
    if !imm.mesh.has_uv() {
        return Err(Error::MissingUv);
    }
    let frames = imm.face_frames()?;
    Ok((0..frames.len())
        .map(|f| imm.mesh.face_param(f).unwrap().area * frames[f].conformal_factor)
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCurvatureForm {
    /// Integral of d beta = gamma / 2 along each edge, from v[0] to v[1].
    pub edge_dbeta: Vec<f64>,
    /// Sum of d beta around each face.
    pub face_curl: Vec<f64>,
    /// Curl divided by the face area.
    pub face_curl_density: Vec<f64>,
    /// Lagrangian angle integrated along a BFS tree rooted at the first vertex of each component.
    pub beta: Vec<f64>,
    /// Periods of beta along the two uv directions (least squares over fundamental cycles).
    pub periods: Option<[f64; 2]>,
    /// Largest |cycle integral - wrap . periods| over fundamental cycles.
    pub cycle_defect: f64,
    /// Cotangent Laplacian of beta per vertex, None on boundary vertices.
    pub laplacian: Vec<Option<f64>>,
}

impl MeanCurvatureForm {
    pub fn max_laplacian(&self) -> f64 {
        self.laplacian.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()))
    }

    pub fn max_curl_density(&self) -> f64 {
        self.face_curl_density.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }
}

/// Cotangent weights per edge and vertex areas (a third of the adjacent face areas).
pub fn cotan_weights(imm: &DiscreteImmersion) -> Result<(Vec<f64>, Vec<f64>)> {
    let frames = imm.face_frames()?;
    let mesh = &imm.mesh;
    let mut w = vec![0.0; mesh.edges().len()];
    let mut area = vec![0.0; mesh.n_vertices()];
    for f in 0..mesh.n_faces() {
        let p = imm.corners(f).map(|x| imm.target.measure(&x));
        let t = mesh.triangles()[f];
        for c in 0..3 {
            area[t[c]] += frames[f].area / 3.0;
            let a = p[(c + 1) % 3] - p[c];
            let b = p[(c + 2) % 3] - p[c];
            let cross2 = (a.norm_squared() * b.norm_squared() - a.dot(&b).powi(2)).max(0.0);
            let cot = a.dot(&b) / cross2.sqrt();
            // the corner c faces the edge (c+1, c+2)
            let (e, _) = mesh.face_edges(f)[(c + 1) % 3];
            w[e] += 0.5 * cot;
        }
    }
    Ok((w, area))
}

pub fn mean_curvature_one_form(imm: &DiscreteImmersion, curv: &CurvatureReport) -> Result<MeanCurvatureForm> {
    let mesh = &imm.mesh;
    if !mesh.has_uv() {
        return Err(Error::MissingUv);
    }
    let edge_dbeta: Vec<f64> = mesh
        .edges()
        .iter()
        .map(|e| {
            let u0 = mesh.uv(e.v[0]).unwrap();
            let u1 = mesh.uv(e.v[1]).unwrap();
            let s = mesh.uv_shift(e.wrap);
            let du = [u1[0] + s[0] - u0[0], u1[1] + s[1] - u0[1]];
            let g0 = curv.vertices[e.v[0]].gamma;
            let g1 = curv.vertices[e.v[1]].gamma;
            0.25 * ((g0[0] + g1[0]) * du[0] + (g0[1] + g1[1]) * du[1])
        })
        .collect();
    let frames = imm.face_frames()?;
    let mut face_curl = Vec::with_capacity(mesh.n_faces());
    let mut face_curl_density = Vec::with_capacity(mesh.n_faces());
    for f in 0..mesh.n_faces() {
        let c: f64 = mesh
            .face_edges(f)
            .iter()
            .map(|&(e, fwd)| if fwd { edge_dbeta[e] } else { -edge_dbeta[e] })
            .sum();
        face_curl.push(c);
        face_curl_density.push(c / frames[f].area);
    }

    // BFS tree integration on the universal cover of each component
    let nv = mesh.n_vertices();
    let mut beta = vec![f64::NAN; nv];
    let mut lift: Vec<Wrap> = vec![[0, 0]; nv];
    let mut adj: Vec<Vec<(usize, usize, bool)>> = vec![Vec::new(); nv];
    for (i, e) in mesh.edges().iter().enumerate() {
        adj[e.v[0]].push((i, e.v[1], true));
        adj[e.v[1]].push((i, e.v[0], false));
    }
    let mut tree = vec![false; mesh.edges().len()];
    for root in 0..nv {
        if !beta[root].is_nan() {
            continue;
        }
        beta[root] = 0.0;
        let mut q = VecDeque::from([root]);
        while let Some(v) = q.pop_front() {
            for &(e, u, fwd) in &adj[v] {
                if beta[u].is_nan() {
                    let ed = &mesh.edges()[e];
                    let (db, w) = if fwd { (edge_dbeta[e], ed.wrap) } else { (-edge_dbeta[e], [-ed.wrap[0], -ed.wrap[1]]) };
                    beta[u] = beta[v] + db;
                    lift[u] = [lift[v][0] + w[0], lift[v][1] + w[1]];
                    tree[e] = true;
                    q.push_back(u);
                }
            }
        }
    }
    let mut cycles = Vec::new();
    for (i, e) in mesh.edges().iter().enumerate() {
        if tree[i] {
            continue;
        }
        let [a, b] = e.v;
        let w = [lift[a][0] + e.wrap[0] - lift[b][0], lift[a][1] + e.wrap[1] - lift[b][1]];
        cycles.push((w, beta[a] + edge_dbeta[i] - beta[b]));
    }
    let periods = if mesh.uv_period().is_some() {
        let mut m = Matrix2::zeros();
        let mut r = Vector2::zeros();
        for (w, val) in &cycles {
            let wv = Vector2::new(w[0] as f64, w[1] as f64);
            m += wv * wv.transpose();
            r += wv * *val;
        }
        m.try_inverse().map(|mi| {
            let p = mi * r;
            [p[0], p[1]]
        })
    } else {
        None
    };
    let pv = periods.unwrap_or([0.0, 0.0]);
    let cycle_defect = cycles
        .iter()
        .map(|(w, v)| (v - w[0] as f64 * pv[0] - w[1] as f64 * pv[1]).abs())
        .fold(0.0, f64::max);

    let (cw, varea) = cotan_weights(imm)?;
    let mut lap = vec![0.0; nv];
    for (i, e) in mesh.edges().iter().enumerate() {
        lap[e.v[0]] += cw[i] * edge_dbeta[i];
        lap[e.v[1]] -= cw[i] * edge_dbeta[i];
    }
    let laplacian = (0..nv)
        .map(|v| (!mesh.is_boundary_vertex(v)).then(|| lap[v] / varea[v]))
        .collect();
    Ok(MeanCurvatureForm {
        edge_dbeta,
        face_curl,
        face_curl_density,
        beta,
        periods,
        cycle_defect,
        laplacian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use std::f64::consts::PI;

    #[test]
    fn flat_patch_has_no_curvature() {
        let imm = corpus::flat_patch(8, 1.0).unwrap();
        let c = second_fundamental_form(&imm).unwrap();
        for v in &c.vertices {
            assert!(v.ii_norm2 < 1e-16 && v.mean.norm() < 1e-8);
        }
        let m = mean_curvature_one_form(&imm, &c).unwrap();
        assert!(m.beta.iter().all(|b| b.abs() < 1e-8));
    }

    #[test]
    fn clifford_mean_curvature_is_constant() {
        let imm = corpus::clifford_lift(32, 0.0, false).unwrap();
        let c = second_fundamental_form(&imm).unwrap();
        let h = c.mean_norms();
        for x in &h {
            assert!((x - 0.5f64.sqrt()).abs() < 0.01, "{x}");
        }
        let m = mean_curvature_one_form(&imm, &c).unwrap();
        let p = m.periods.unwrap();
        assert!((p[0] - PI).abs() < 0.02 && (p[1] - PI).abs() < 0.02, "{p:?}");
    }

    #[test]
    fn stretched_patch_hopf() {
        let imm = corpus::stretched_patch(2, 1.0, 2.0).unwrap();
        for (re, im) in hopf_differential(&imm).unwrap() {
            assert!((re - 0.75).abs() < 1e-14 && im.abs() < 1e-14);
        }
    }

    #[test]
    fn valence_three_vertex_falls_back() {
        let imm = corpus::valence3_cone().unwrap();
        let c = second_fundamental_form(&imm).unwrap();
        assert!(c.fit_warnings.contains(&0));
    }
}
