//! Discrete Legendrian immersions: vertex images of a [`SurfaceMesh`] in a target, per-face
//! frames and per-edge Legendrian residuals.

use std::sync::Arc;

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{wedge8, Bivec8, Point};
use crate::mesh::{MeshData, SurfaceMesh, Wrap};
use crate::target::Target;

#[derive(Clone, Debug)]
pub struct DiscreteImmersion {
    pub mesh: Arc<SurfaceMesh>,
    pub target: Target,
    pub positions: Vec<Point>,
    /// Ambient translations applied when a corner wraps once around each period of uv.
    pub deck: [Point; 2],
    pub legendrian_tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceFrame {
    pub base: Point,
    pub partials: [Point; 2],
    pub metric: Matrix2<f64>,
    pub metric_inv: Matrix2<f64>,
    pub dvol: f64,
    pub area: f64,
    /// (|d1|^2 + |d2|^2) / 2, equal to e^{2 lambda} in conformal coordinates.
    pub conformal_factor: f64,
    pub gauss: Bivec8,
    pub normals: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendrianResidual {
    pub per_edge: Vec<f64>,
    pub max: f64,
    pub l2: f64,
}

impl DiscreteImmersion {
    pub fn new(
        mesh: Arc<SurfaceMesh>,
        target: Target,
        positions: Vec<Point>,
        deck: [Point; 2],
        legendrian_tol: f64,
    ) -> Result<Self> {
        if positions.len() != mesh.n_vertices() {
            return Err(Error::Mesh(format!(
                "{} positions for {} vertices",
                positions.len(),
                mesh.n_vertices()
            )));
        }
        for (v, p) in positions.iter().enumerate() {
            if !p.iter().all(|x| x.is_finite()) {
                return Err(Error::Domain(format!("vertex {v} is not finite")));
            }
            let d = target.point_defect(p);
            if d > 1e-10 {
                return Err(Error::Domain(format!("vertex {v} is off the target (defect {d:.2e})")));
            }
        }
        match target {
            Target::Stiefel => {
                if deck.iter().any(|d| d.norm() != 0.0) {
                    return Err(Error::Parameter("deck translations must vanish on V2(R4)".into()));
                }
            }
            Target::Heisenberg => {
                if deck.iter().any(|d| d.rows(1, 7).amax() != 0.0) {
                    return Err(Error::Parameter("deck translations must be phi-translations".into()));
                }
            }
        }
        let imm = DiscreteImmersion {
            mesh,
            target,
            positions,
            deck,
            legendrian_tol,
        };
        imm.face_frames()?;
        Ok(imm)
    }

    pub fn with_positions(&self, positions: Vec<Point>) -> Self {
        DiscreteImmersion {
            mesh: self.mesh.clone(),
            target: self.target,
            positions,
            deck: self.deck,
            legendrian_tol: self.legendrian_tol,
        }
    }

    /// The translation of the period: None when the surface is not a quotient by phi-shifts.
    pub fn phi_period(&self) -> Option<f64> {
        match self.target {
            Target::Heisenberg => {
                let p = self.deck[0][0].abs().max(self.deck[1][0].abs());
                (p > 0.0).then_some(p)
            }
            Target::Stiefel => None,
        }
    }

    pub fn shifted(&self, v: usize, w: Wrap) -> Point {
        self.positions[v] + self.deck[0] * w[0] as f64 + self.deck[1] * w[1] as f64
    }

    /// Unwrapped positions of the corners of face f.
    pub fn corners(&self, f: usize) -> [Point; 3] {
        let t = self.mesh.triangles()[f];
        [0, 1, 2].map(|c| self.shifted(t[c], self.mesh.corner_wrap(f, c)))
    }

    /// Parameter chart of face f: unwrapped uv, or an intrinsic chart from the measured edges.
    pub fn chart(&self, f: usize) -> [[f64; 2]; 3] {
        if let Some(u) = self.mesh.corner_uv(f) {
            return u;
        }
        let p = self.corners(f).map(|x| self.target.measure(&x));
        let e1 = p[1] - p[0];
        let e2 = p[2] - p[0];
        let l = e1.norm();
        let x = e2.dot(&e1) / l;
        let y = (e2.norm_squared() - x * x).max(0.0).sqrt();
        [[0.0, 0.0], [l, 0.0], [x, y]]
    }

    pub fn face_frame(&self, f: usize) -> Result<FaceFrame> {
        let t = self.target;
        let corners = self.corners(f);
        let m = corners.map(|x| t.measure(&x));
        let u = self.chart(f);
        let e = Matrix2::new(u[1][0] - u[0][0], u[2][0] - u[0][0], u[1][1] - u[0][1], u[2][1] - u[0][1]);
        let det = e.determinant();
        let inv = e.try_inverse().filter(|_| det > 0.0).ok_or(Error::DegenerateFace { face: f, norm: 0.0 })?;
        let a = m[1] - m[0];
        let b = m[2] - m[0];
        let d1 = a * inv[(0, 0)] + b * inv[(1, 0)];
        let d2 = a * inv[(0, 1)] + b * inv[(1, 1)];
        let metric = Matrix2::new(d1.dot(&d1), d1.dot(&d2), d1.dot(&d2), d2.dot(&d2));
        let gdet = metric.determinant();
        let scale = metric[(0, 0)].max(metric[(1, 1)]);
        if !(gdet > 1e-24 * scale * scale) || !(scale > 0.0) {
            return Err(Error::DegenerateFace {
                face: f,
                norm: gdet.max(0.0).sqrt(),
            });
        }
        let dvol = gdet.sqrt();
        let gauss = wedge8(&d1, &d2) / dvol;
        let base = t.retract(&((corners[0] + corners[1] + corners[2]) / 3.0))?;
        let mut normals: Vec<Point> = Vec::with_capacity(3);
        let tangent = [d1 / d1.norm(), {
            let q = d2 - d1 * (d1.dot(&d2) / d1.norm_squared());
            q / q.norm()
        }];
        for c in [t.reeb(&base), t.j_measured(&base, &d1), t.j_measured(&base, &d2)] {
            let mut n = c;
            for q in tangent.iter().chain(normals.iter()) {
                n -= q * q.dot(&n);
            }
            let l = n.norm();
            if l > 1e-8 * c.norm() {
                normals.push(n / l);
            }
        }
        Ok(FaceFrame {
            base,
            partials: [d1, d2],
            metric,
            metric_inv: metric.try_inverse().unwrap(),
            dvol,
            area: dvol * 0.5 * det,
            conformal_factor: 0.5 * (metric[(0, 0)] + metric[(1, 1)]),
            gauss,
            normals,
        })
    }

    pub fn face_frames(&self) -> Result<Vec<FaceFrame>> {
        (0..self.mesh.n_faces()).into_par_iter().map(|f| self.face_frame(f)).collect()
    }

    pub fn area(&self) -> Result<f64> {
        Ok(self.face_frames()?.iter().map(|f| f.area).sum())
    }

    /// alpha at the (retracted) midpoint applied to the chord of each edge.
    pub fn legendrian_residual(&self) -> LegendrianResidual {
        let t = self.target;
        let per_edge: Vec<f64> = self
            .mesh
            .edges()
            .par_iter()
            .map(|e| {
                let p = self.positions[e.v[0]];
                let q = self.shifted(e.v[1], e.wrap);
                let mid = (p + q) * 0.5;
                let m = t.retract(&mid).unwrap_or(mid);
                t.contact_form(&m, &(q - p))
            })
            .collect();
        let max = per_edge.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        let l2 = per_edge.iter().map(|r| r * r).sum::<f64>().sqrt();
        LegendrianResidual { per_edge, max, l2 }
    }

    pub fn check_legendrian(&self) -> Result<LegendrianResidual> {
        let r = self.legendrian_residual();
        if r.max > self.legendrian_tol {
            let e = r
                .per_edge
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |b, (i, x)| if x.abs() > b.1 { (i, x.abs()) } else { b })
                .0;
            let v = self.mesh.edges()[e].v;
            return Err(Error::Constraint {
                what: "immersion is not Legendrian".into(),
                cell: (v[0], v[1]),
                residual: r.max,
                tol: self.legendrian_tol,
            });
        }
        Ok(r)
    }

    /// Largest measured edge length.
    pub fn max_edge_length(&self) -> f64 {
        self.mesh
            .edges()
            .iter()
            .map(|e| {
                let d = self.shifted(e.v[1], e.wrap) - self.positions[e.v[0]];
                self.target.measure(&d).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_file(&self) -> MeshFile {
        let dim = self.target.dim();
        MeshFile {
            target: self.target,
            vertices: self
                .positions
                .iter()
                .map(|p| p.iter().take(dim).copied().collect())
                .collect(),
            mesh: self.mesh.data().clone(),
            deck: self.deck.map(|d| d.iter().take(dim).copied().collect()),
            legendrian_tol: self.legendrian_tol,
        }
    }

    pub fn from_file(file: &MeshFile) -> Result<Self> {
        let dim = file.target.dim();
        let to_point = |x: &Vec<f64>| -> Result<Point> {
            if x.len() != dim {
                return Err(Error::Mesh(format!("expected {dim} coordinates, got {}", x.len())));
            }
            let mut p = Point::zeros();
            for (i, v) in x.iter().enumerate() {
                p[i] = *v;
            }
            Ok(p)
        };
        let positions = file.vertices.iter().map(to_point).collect::<Result<Vec<_>>>()?;
        let deck = [to_point(&file.deck[0])?, to_point(&file.deck[1])?];
        let mesh = Arc::new(SurfaceMesh::new(file.mesh.clone())?);
        DiscreteImmersion::new(mesh, file.target, positions, deck, file.legendrian_tol)
    }
}

/// On-disk form of an immersion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub target: Target,
    pub vertices: Vec<Vec<f64>>,
    #[serde(flatten)]
    pub mesh: MeshData,
    pub deck: [Vec<f64>; 2],
    pub legendrian_tol: f64,
}
