//! Weak Hamiltonian stationarity tested on superlevel sets of a function on the surface.

use crate::error::{Error, Result};
use crate::hamiltonian::{hamiltonian_field, Hamiltonian, ReebConvention};
use crate::immersion::DiscreteImmersion;

/// Integral of N g^ij <d_i L, d_j W> over the faces whose majority of corners satisfies f > lambda,
/// with W = X_h(L) interpolated linearly on each face.
pub fn weak_stationarity_residual(
    imm: &DiscreteImmersion,
    multiplicity: &[u32],
    h: &dyn Hamiltonian,
    f: &[f64],
    lambda: f64,
    conv: ReebConvention,
) -> Result<f64> {
    let mesh = &imm.mesh;
    let n = mesh.n_vertices();
    if multiplicity.len() != n || f.len() != n {
        return Err(Error::Parameter(format!(
            "expected {n} multiplicities and function values, got {} and {}",
            multiplicity.len(),
            f.len()
        )));
    }
    if multiplicity.contains(&0) {
        return Err(Error::Parameter("multiplicities must be positive".into()));
    }
    let t = imm.target;
    let support = h.support();
    for face in 0..mesh.n_faces() {
        let tri = mesh.triangles()[face];
        let above = tri.iter().filter(|&&v| f[v] > lambda).count();
        if above == 0 || above == 3 {
            continue;
        }
        let corners = imm.corners(face);
        let mut samples: Vec<_> = corners.to_vec();
        for c in 0..3 {
            let (a, b) = (tri[c], tri[(c + 1) % 3]);
            if (f[a] > lambda) != (f[b] > lambda) {
                let s = (lambda - f[a]) / (f[b] - f[a]);
                samples.push(t.retract(&(corners[c] * (1.0 - s) + corners[(c + 1) % 3] * s))?);
            }
        }
        if let Some(p) = samples.iter().find(|p| support.contains(t, p) && h.value(p) != 0.0) {
            return Err(Error::Localisation {
                face,
                detail: format!("h = {:.3e} on the level band", h.value(p)),
            });
        }
    }
    let field: Vec<_> = imm.positions.iter().map(|p| t.measure(&hamiltonian_field(t, h, p, conv))).collect();
    let mut total = 0.0;
    for face in 0..mesh.n_faces() {
        let tri = mesh.triangles()[face];
        let above = tri.iter().filter(|&&v| f[v] > lambda).count();
        if above < 2 {
            continue;
        }
        let frame = imm.face_frame(face)?;
        let u = imm.chart(face);
        let e = nalgebra::Matrix2::new(u[1][0] - u[0][0], u[2][0] - u[0][0], u[1][1] - u[0][1], u[2][1] - u[0][1]);
        let inv = e.try_inverse().ok_or(Error::DegenerateFace { face, norm: 0.0 })?;
        let a = field[tri[1]] - field[tri[0]];
        let b = field[tri[2]] - field[tri[0]];
        let dw = [a * inv[(0, 0)] + b * inv[(1, 0)], a * inv[(0, 1)] + b * inv[(1, 1)]];
        let mut pairing = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                pairing += frame.metric_inv[(i, j)] * frame.partials[i].dot(&dw[j]);
            }
        }
        let nf = tri.iter().map(|&v| multiplicity[v] as f64).sum::<f64>() / 3.0;
        total += nf * pairing * frame.area;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::hamiltonian::Bump;

    fn uv_distance(imm: &DiscreteImmersion, v0: usize) -> Vec<f64> {
        let mesh = &imm.mesh;
        let period = mesh.uv_period().unwrap();
        let c = mesh.uv(v0).unwrap();
        (0..mesh.n_vertices())
            .map(|v| {
                let p = mesh.uv(v).unwrap();
                let d = [0, 1].map(|k| {
                    let x = (p[k] - c[k]).rem_euclid(period[k]);
                    x.min(period[k] - x)
                });
                (d[0] * d[0] + d[1] * d[1]).sqrt()
            })
            .collect()
    }

    #[test]
    fn bump_straddling_the_level_set_is_rejected() {
        let imm = corpus::clifford_lift(16, 0.0, false).unwrap();
        let h = Bump {
            target: imm.target,
            center: imm.positions[0],
            radius: 1.0,
            amplitude: 1.0,
        };
        let f: Vec<f64> = uv_distance(&imm, 0).iter().map(|d| -d).collect();
        let err = weak_stationarity_residual(&imm, &vec![1; imm.mesh.n_vertices()], &h, &f, -0.5, ReebConvention::Thm1);
        assert!(matches!(err, Err(Error::Localisation { .. })));
    }

    #[test]
    fn flat_patch_is_stationary() {
        let imm = corpus::flat_patch(12, 1.0).unwrap();
        let center = imm.positions[imm.mesh.n_vertices() / 2];
        let h = Bump {
            target: imm.target,
            center,
            radius: 0.2,
            amplitude: 1.0,
        };
        let f: Vec<f64> = imm.positions.iter().map(|p| -(p - center).norm()).collect();
        let r = weak_stationarity_residual(&imm, &vec![2; imm.mesh.n_vertices()], &h, &f, -0.35, ReebConvention::Thm1).unwrap();
        assert!(r.abs() < 1e-12, "{r}");
    }
}
