//! Test surfaces shared by the acceptance suite and the command-line harness.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::{legendrian_lift, HeisenbergPoint, LagrangianSampleGrid, LiftedGrid};
use crate::immersion::DiscreteImmersion;
use crate::linalg::{vec8_from, Point, Vec4};
use crate::mesh::{open_grid, periodic_grid, MeshData, SurfaceMesh};
use crate::target::Target;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    FlatPatch,
    CliffordLift,
    ReebOrbitTubeExcluded,
    PerturbedClifford,
    DoubleSheet,
    StiefelTorus,
    CurvedPatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusGenerator {
    pub family: Family,
    pub resolution: usize,
    /// Warp, perturbation amplitude, sheet angle or curvature, depending on the family.
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub seed: u64,
    /// Side length of the patch families.
    #[serde(default = "unit")]
    pub size: f64,
}

fn unit() -> f64 {
    1.0
}

impl CorpusGenerator {
    pub fn generate(&self) -> Result<DiscreteImmersion> {
        let n = self.resolution;
        match self.family {
            Family::FlatPatch => flat_patch(n, self.size),
            Family::CliffordLift => clifford_lift(n, self.amplitude, false),
            Family::ReebOrbitTubeExcluded => Err(Error::Parameter(
                "the Reeb orbit tube is a degenerate fixture and is not generated".into(),
            )),
            Family::PerturbedClifford => crate::flow::perturbed_clifford(n, self.amplitude, self.seed),
            Family::DoubleSheet => double_sheet(n, self.size, self.amplitude),
            Family::StiefelTorus => stiefel_torus(n, self.amplitude),
            Family::CurvedPatch => curved_patch(n, self.size, self.amplitude),
        }
    }
}

fn heis(phi: f64, y: [f64; 4]) -> Point {
    HeisenbergPoint::new(phi, Vec4::from(y)).to_vec8()
}

fn legendrian_tol_for(imm: &DiscreteImmersion) -> f64 {
    let h = imm.max_edge_length();
    (2.0 * imm.legendrian_residual().max).max(1e-10 * h * h).max(1e-14)
}

fn finish(mesh: MeshData, target: Target, positions: Vec<Point>, deck: [Point; 2]) -> Result<DiscreteImmersion> {
    let mesh = Arc::new(SurfaceMesh::new(mesh)?);
    let mut imm = DiscreteImmersion::new(mesh, target, positions, deck, f64::INFINITY)?;
    imm.legendrian_tol = legendrian_tol_for(&imm);
    Ok(imm)
}

/// The Legendrian plane (0, x1, 0, x2, 0) over [-size/2, size/2]^2, n x n cells.
pub fn flat_patch(n: usize, size: f64) -> Result<DiscreteImmersion> {
    let data = open_grid(n, n, [-0.5 * size, -0.5 * size], [size, size]);
    let positions = data.uv.as_ref().unwrap().iter().map(|u| heis(0.0, [u[0], 0.0, u[1], 0.0])).collect();
    finish(data, Target::Heisenberg, positions, [Point::zeros(); 2])
}

/// Flat patch with the first parameter direction stretched by `stretch`.
pub fn stretched_patch(n: usize, size: f64, stretch: f64) -> Result<DiscreteImmersion> {
    let data = open_grid(n, n, [-0.5 * size, -0.5 * size], [size, size]);
    let positions = data
        .uv
        .as_ref()
        .unwrap()
        .iter()
        .map(|u| heis(0.0, [stretch * u[0], 0.0, u[1], 0.0]))
        .collect();
    finish(data, Target::Heisenberg, positions, [Point::zeros(); 2])
}

/// Legendrian lift of the Lagrangian graph y = (x1, f_1, x2, f_2) of the gradient of
/// f = c (x1^3 - 3 x1 x2^2) / 3 + c x1^2 x2 / 2; phi = x . grad f - 2 f.
pub fn curved_patch(n: usize, size: f64, c: f64) -> Result<DiscreteImmersion> {
    let data = open_grid(n, n, [-0.5 * size, -0.5 * size], [size, size]);
    let positions = data
        .uv
        .as_ref()
        .unwrap()
        .iter()
        .map(|u| {
            let (x, y) = (u[0], u[1]);
            let f = c * (x * x * x - 3.0 * x * y * y) / 3.0 + 0.5 * c * x * x * y;
            let f1 = c * (x * x - y * y) + c * x * y;
            let f2 = -2.0 * c * x * y + 0.5 * c * x * x;
            heis(x * f1 + y * f2 - 2.0 * f, [x, f1, y, f2])
        })
        .collect();
    finish(data, Target::Heisenberg, positions, [Point::zeros(); 2])
}

/// Two copies of the flat patch, the second rotated by e^{i theta} in both complex factors.
pub fn double_sheet(n: usize, size: f64, theta: f64) -> Result<DiscreteImmersion> {
    let a = open_grid(n, n, [-0.5 * size, -0.5 * size], [size, size]);
    let nv = a.n_vertices;
    let uv = a.uv.clone().unwrap();
    let mut triangles = a.triangles.clone();
    triangles.extend(a.triangles.iter().map(|t| t.map(|v| v + nv)));
    let mut uv2 = uv.clone();
    uv2.extend(uv.iter().copied());
    let (s, co) = theta.sin_cos();
    let mut positions: Vec<Point> = uv.iter().map(|u| heis(0.0, [u[0], 0.0, u[1], 0.0])).collect();
    positions.extend(uv.iter().map(|u| heis(0.0, [co * u[0], s * u[0], co * u[1], s * u[1]])));
    let data = MeshData {
        n_vertices: 2 * nv,
        triangles,
        uv: Some(uv2),
        uv_period: None,
        corner_wrap: None,
        genus: 0,
        boundary_loops: Vec::new(),
    };
    finish(data, Target::Heisenberg, positions, [Point::zeros(); 2])
}

/// Clifford torus samples (cos s, sin s, cos t, sin t) with s = xi1 + warp sin xi1 and
/// t = xi2 + warp sin xi2 on the periodic parameter square [0, 2 pi)^2.
pub fn clifford_grid(n: usize, warp: f64) -> LagrangianSampleGrid {
    let h = 2.0 * PI / n as f64;
    LagrangianSampleGrid::sample(n, n, h, h, [true, true], |a, b| {
        let s = a + warp * a.sin();
        let t = b + warp * b.sin();
        Vec4::new(s.cos(), s.sin(), t.cos(), t.sin())
    })
}

/// Legendrian lift of the Clifford torus in the quotient of H^2 by the phi-translation of the
/// lift's period. With `analytic_phi` the exact phi = s + t is used instead of the discrete lift.
pub fn clifford_lift(n: usize, warp: f64, analytic_phi: bool) -> Result<DiscreteImmersion> {
    if warp.abs() >= 1.0 {
        return Err(Error::Parameter("warp must lie in (-1, 1)".into()));
    }
    let grid = clifford_grid(n, warp);
    let data = periodic_grid(n, n, [2.0 * PI, 2.0 * PI]);
    let (positions, periods) = if analytic_phi {
        let pos = (0..n * n)
            .map(|k| {
                let (a, b) = ((k / n) as f64 * grid.h1, (k % n) as f64 * grid.h2);
                let u = grid.u[k];
                heis(a + warp * a.sin() + b + warp * b.sin(), u)
            })
            .collect();
        (pos, [2.0 * PI, 2.0 * PI])
    } else {
        let lift = legendrian_lift(&grid, 0.0, None)?;
        let pos = (0..n * n).map(|k| heis(lift.phi[k], grid.u[k])).collect();
        (pos, [lift.periods[0].unwrap(), lift.periods[1].unwrap()])
    };
    let deck = periods.map(|p| heis(p, [0.0; 4]));
    finish(data, Target::Heisenberg, positions, deck)
}

/// Triangulated immersion of a lifted grid: a torus when both directions are periodic (deck given by
/// the periods of phi), a disk when neither is.
pub fn immersion_from_lift(lift: &LiftedGrid) -> Result<DiscreteImmersion> {
    let g = &lift.grid;
    let positions = (0..g.n1 * g.n2).map(|k| heis(lift.phi[k], g.u[k])).collect();
    match lift.periods {
        [Some(p1), Some(p2)] => {
            let data = periodic_grid(g.n1, g.n2, [g.n1 as f64 * g.h1, g.n2 as f64 * g.h2]);
            finish(data, Target::Heisenberg, positions, [heis(p1, [0.0; 4]), heis(p2, [0.0; 4])])
        }
        [None, None] => {
            let size = [(g.n1 - 1) as f64 * g.h1, (g.n2 - 1) as f64 * g.h2];
            let data = open_grid(g.n1 - 1, g.n2 - 1, [0.0, 0.0], size);
            finish(data, Target::Heisenberg, positions, [Point::zeros(); 2])
        }
        _ => Err(Error::Parameter("grids periodic in exactly one direction are not triangulated".into())),
    }
}

/// Lift of the product torus of circles of radii r1, r2 in arclength parameters, with n1 and n2
/// cells along the two circles.
pub fn clifford_lift_radii(n1: usize, n2: usize, r1: f64, r2: f64) -> Result<DiscreteImmersion> {
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::Parameter("radii must be positive".into()));
    }
    let (p1, p2) = (2.0 * PI * r1, 2.0 * PI * r2);
    let grid = LagrangianSampleGrid::sample(n1, n2, p1 / n1 as f64, p2 / n2 as f64, [true, true], |a, b| {
        Vec4::new(r1 * (a / r1).cos(), r1 * (a / r1).sin(), r2 * (b / r2).cos(), r2 * (b / r2).sin())
    });
    let data = periodic_grid(n1, n2, [p1, p2]);
    let lift = legendrian_lift(&grid, 0.0, None)?;
    let positions = (0..n1 * n2).map(|k| heis(lift.phi[k], grid.u[k])).collect();
    let deck = [lift.periods[0].unwrap(), lift.periods[1].unwrap()].map(|p| heis(p, [0.0; 4]));
    finish(data, Target::Heisenberg, positions, deck)
}

/// The Legendrian torus a = (cos s, sin s, 0, 0), b = (0, 0, cos t, sin t) in V2(R4), with the
/// parameters warped as in [`clifford_grid`].
pub fn stiefel_torus(n: usize, warp: f64) -> Result<DiscreteImmersion> {
    if warp.abs() >= 1.0 {
        return Err(Error::Parameter("warp must lie in (-1, 1)".into()));
    }
    let data = periodic_grid(n, n, [2.0 * PI, 2.0 * PI]);
    let positions = data
        .uv
        .as_ref()
        .unwrap()
        .iter()
        .map(|u| {
            let s = u[0] + warp * u[0].sin();
            let t = u[1] + warp * u[1].sin();
            vec8_from(&Vec4::new(s.cos(), s.sin(), 0.0, 0.0), &Vec4::new(0.0, 0.0, t.cos(), t.sin()))
        })
        .collect();
    finish(data, Target::Stiefel, positions, [Point::zeros(); 2])
}

/// A small flat disk whose center vertex has valence 3.
pub fn valence3_cone() -> Result<DiscreteImmersion> {
    let mut uv = vec![[0.0, 0.0]];
    for i in 0..3 {
        let a = 2.0 * PI * i as f64 / 3.0;
        uv.push([0.1 * a.cos(), 0.1 * a.sin()]);
    }
    for i in 0..6 {
        let a = 2.0 * PI * i as f64 / 6.0;
        uv.push([0.25 * a.cos(), 0.25 * a.sin()]);
    }
    let r = |i: usize| 1 + i % 3;
    let o = |i: usize| 4 + i % 6;
    let mut triangles = Vec::new();
    for i in 0..3 {
        triangles.push([0, r(i), r(i + 1)]);
        triangles.push([r(i), o(2 * i), o(2 * i + 1)]);
        triangles.push([r(i), o(2 * i + 1), r(i + 1)]);
        triangles.push([r(i + 1), o(2 * i + 1), o(2 * i + 2)]);
    }
    let positions = uv.iter().map(|u| heis(0.0, [u[0], 0.0, u[1], 0.0])).collect();
    let data = MeshData {
        n_vertices: uv.len(),
        triangles,
        uv: Some(uv),
        uv_period: None,
        corner_wrap: None,
        genus: 0,
        boundary_loops: Vec::new(),
    };
    finish(data, Target::Heisenberg, positions, [Point::zeros(); 2])
}

/// Flat patch data with one vertex moved onto its neighbor, collapsing the faces around it.
pub fn collapsed_face_positions(n: usize) -> (Arc<SurfaceMesh>, Vec<Point>) {
    let data = open_grid(n, n, [-0.5, -0.5], [1.0, 1.0]);
    let mut positions: Vec<Point> = data.uv.as_ref().unwrap().iter().map(|u| heis(0.0, [u[0], 0.0, u[1], 0.0])).collect();
    let m = n + 1;
    let c = (n / 2) * m + n / 2;
    positions[c] = positions[c + 1];
    (Arc::new(SurfaceMesh::new(data).unwrap()), positions)
}

/// Samples of the non-Lagrangian graph (s, t, 0, 0).
pub fn non_lagrangian_grid(n: usize) -> LagrangianSampleGrid {
    let h = 1.0 / (n - 1) as f64;
    LagrangianSampleGrid::sample(n, n, h, h, [false, false], |s, t| Vec4::new(s, t, 0.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_patch_frames_are_isometric() {
        let imm = flat_patch(1, 1.0).unwrap();
        assert_eq!(imm.mesh.n_faces(), 2);
        for f in imm.face_frames().unwrap() {
            assert!((f.metric - nalgebra::Matrix2::identity()).amax() < 1e-15);
        }
        assert!((imm.area().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(imm.legendrian_residual().max, 0.0);
    }

    #[test]
    fn lifted_clifford_grid_matches_the_corpus_lift() {
        let lift = legendrian_lift(&clifford_grid(12, 0.0), 0.0, None).unwrap();
        let a = immersion_from_lift(&lift).unwrap();
        let b = clifford_lift(12, 0.0, false).unwrap();
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.deck, b.deck);
        let open = LagrangianSampleGrid::sample(5, 4, 0.1, 0.2, [false, false], |a, b| Vec4::new(a, 0.0, b, 0.0));
        let patch = immersion_from_lift(&legendrian_lift(&open, 0.0, None).unwrap()).unwrap();
        assert!((patch.area().unwrap() - 0.4 * 0.6).abs() < 1e-14);
    }

    #[test]
    fn collapsed_face_is_rejected() {
        let (mesh, pos) = collapsed_face_positions(4);
        let r = DiscreteImmersion::new(mesh, Target::Heisenberg, pos, [Point::zeros(); 2], 1.0);
        assert!(matches!(r, Err(Error::DegenerateFace { .. })));
    }

    #[test]
    fn stiefel_torus_is_legendrian_and_flat() {
        let imm = stiefel_torus(16, 0.0).unwrap();
        assert!(imm.legendrian_residual().max < 1e-15);
        let area = imm.area().unwrap();
        assert!((area / (4.0 * PI * PI) - 1.0).abs() < 0.03);
    }

    #[test]
    fn curved_patch_is_legendrian_to_third_order() {
        let r1 = curved_patch(16, 0.5, 1.0).unwrap().legendrian_residual().max;
        let r2 = curved_patch(32, 0.5, 1.0).unwrap().legendrian_residual().max;
        assert!(r1 > 0.0 && r1 / r2 > 7.0, "{r1} {r2}");
    }
}
