//! Oriented triangle meshes with optional periodic uv parameters.
//!
//! A periodic parameter domain is described by `uv_period` together with a per-corner
//! integer `corner_wrap`: the corner `c` of triangle `f` sits at
//! `uv[v] + corner_wrap[f][c] * uv_period` in the unwrapped parameter plane.

use std::collections::{BTreeMap, VecDeque};
use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Wrap = [i32; 2];

fn sub_wrap(a: Wrap, b: Wrap) -> Wrap {
    [a[0] - b[0], a[1] - b[1]]
}

fn add_wrap(a: Wrap, b: Wrap) -> Wrap {
    [a[0] + b[0], a[1] + b[1]]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshData {
    pub n_vertices: usize,
    pub triangles: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uv: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uv_period: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corner_wrap: Option<Vec<[Wrap; 3]>>,
    pub genus: usize,
    #[serde(default)]
    pub boundary_loops: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub v: [usize; 2],
    /// Wrap of v[1] relative to v[0].
    pub wrap: Wrap,
    /// Adjacent faces; the first one traverses the edge from v[0] to v[1].
    pub faces: [Option<usize>; 2],
}

/// Quadratic least-squares stencil at a vertex: coefficients of
/// (d_u, d_v, d_uu, d_uv, d_vv) are sum_k weights[k] * (f_k - f_v).
#[derive(Clone, Debug, PartialEq)]
pub struct VertexFit {
    pub nbrs: Vec<(usize, Wrap)>,
    pub weights: Vec<[f64; 5]>,
    pub two_ring: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceParam {
    /// Gradients of the three barycentric coordinates in the unwrapped uv chart.
    pub bary: [[f64; 2]; 3],
    pub area: f64,
    pub centroid: [f64; 2],
}

/// Least-squares derivative stencil of a face-constant quantity: d_k Q ~ sum_n weights[n][k] (Q_n - Q_f)
/// over the faces sharing a vertex with f.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceStencil {
    pub nbrs: Vec<usize>,
    pub weights: Vec<[f64; 2]>,
}

#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    data: MeshData,
    edges: Vec<Edge>,
    face_edges: Vec<[(usize, bool); 3]>,
    vertex_faces: Vec<Vec<(usize, usize)>>,
    ring: Vec<Vec<(usize, Wrap)>>,
    boundary_vertex: Vec<bool>,
    boundary_loops: Vec<Vec<usize>>,
    components: Vec<usize>,
    n_components: usize,
    params: Option<Vec<FaceParam>>,
    fits: OnceLock<Result<Vec<VertexFit>>>,
    stencils: OnceLock<Result<Vec<FaceStencil>>>,
}

impl SurfaceMesh {
    pub fn new(data: MeshData) -> Result<Self> {
        let nv = data.n_vertices;
        let nf = data.triangles.len();
        if nf == 0 {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        for (f, t) in data.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::Mesh(format!("triangle {f} has invalid indices {t:?}")));
            }
        }
        if let Some(uv) = &data.uv {
            if uv.len() != nv {
                return Err(Error::Mesh("uv length differs from vertex count".into()));
            }
        }
        match (&data.uv_period, &data.corner_wrap) {
            (Some(_), Some(w)) if w.len() != nf => {
                return Err(Error::Mesh("corner_wrap length differs from triangle count".into()))
            }
            (Some(_), None) | (None, Some(_)) => {
                return Err(Error::Mesh("uv_period and corner_wrap must be given together".into()))
            }
            _ => {}
        }
        if data.uv_period.is_some() && data.uv.is_none() {
            return Err(Error::Mesh("uv_period requires uv".into()));
        }

        let wrap_of = |f: usize, c: usize| -> Wrap {
            data.corner_wrap.as_ref().map(|w| w[f][c]).unwrap_or([0, 0])
        };

        // half-edges keyed by (from, to, relative wrap)
        let mut half: BTreeMap<(usize, usize, Wrap), usize> = BTreeMap::new();
        for (f, t) in data.triangles.iter().enumerate() {
            for c in 0..3 {
                let (a, b) = (t[c], t[(c + 1) % 3]);
                let w = sub_wrap(wrap_of(f, (c + 1) % 3), wrap_of(f, c));
                if half.insert((a, b, w), f).is_some() {
                    return Err(Error::Mesh(format!(
                        "half-edge {a}->{b} used twice (non-manifold or inconsistent orientation)"
                    )));
                }
            }
        }
        let mut edges: Vec<Edge> = Vec::new();
        let mut edge_id: BTreeMap<(usize, usize, Wrap), usize> = BTreeMap::new();
        for (&(a, b, w), &f) in &half {
            let key = if a < b { (a, b, w) } else { (b, a, [-w[0], -w[1]]) };
            match edge_id.get(&key) {
                Some(&e) => {
                    edges[e].faces[1] = Some(f);
                }
                None => {
                    edge_id.insert(key, edges.len());
                    edges.push(Edge {
                        v: [a, b],
                        wrap: w,
                        faces: [Some(f), None],
                    });
                }
            }
        }
        let mut face_edges = vec![[(0usize, true); 3]; nf];
        for (f, t) in data.triangles.iter().enumerate() {
            for c in 0..3 {
                let (a, b) = (t[c], t[(c + 1) % 3]);
                let w = sub_wrap(wrap_of(f, (c + 1) % 3), wrap_of(f, c));
                let key = if a < b { (a, b, w) } else { (b, a, [-w[0], -w[1]]) };
                let e = edge_id[&key];
                face_edges[f][c] = (e, edges[e].v[0] == a && edges[e].wrap == w);
            }
        }

        let mut vertex_faces = vec![Vec::new(); nv];
        for (f, t) in data.triangles.iter().enumerate() {
            for c in 0..3 {
                vertex_faces[t[c]].push((f, c));
            }
        }
        if let Some(v) = vertex_faces.iter().position(|l| l.is_empty()) {
            return Err(Error::Mesh(format!("vertex {v} belongs to no triangle")));
        }
        let mut ring: Vec<Vec<(usize, Wrap)>> = vec![Vec::new(); nv];
        for e in &edges {
            let [a, b] = e.v;
            ring[a].push((b, e.wrap));
            ring[b].push((a, [-e.wrap[0], -e.wrap[1]]));
        }
        for r in ring.iter_mut() {
            r.sort();
        }

        let mut boundary_vertex = vec![false; nv];
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        for (&(a, b, w), _) in &half {
            if !half.contains_key(&(b, a, [-w[0], -w[1]])) {
                boundary_vertex[a] = true;
                boundary_vertex[b] = true;
                if next.insert(a, b).is_some() {
                    return Err(Error::Mesh(format!("vertex {a} is a boundary pinch point")));
                }
            }
        }
        let mut boundary_loops = Vec::new();
        let mut seen = BTreeMap::new();
        for &start in next.keys() {
            if seen.contains_key(&start) {
                continue;
            }
            let mut lp = vec![start];
            seen.insert(start, ());
            let mut cur = next[&start];
            while cur != start {
                lp.push(cur);
                seen.insert(cur, ());
                cur = *next
                    .get(&cur)
                    .ok_or_else(|| Error::Mesh("open boundary chain".into()))?;
            }
            boundary_loops.push(lp);
        }

        let mut components = vec![usize::MAX; nv];
        let mut nc = 0;
        for s in 0..nv {
            if components[s] != usize::MAX {
                continue;
            }
            let mut q = VecDeque::from([s]);
            components[s] = nc;
            while let Some(v) = q.pop_front() {
                for &(u, _) in &ring[v] {
                    if components[u] == usize::MAX {
                        components[u] = nc;
                        q.push_back(u);
                    }
                }
            }
            nc += 1;
        }

        let chi = nv as i64 - edges.len() as i64 + nf as i64;
        let expected = 2 * nc as i64 - 2 * data.genus as i64 - boundary_loops.len() as i64;
        if chi != expected {
            return Err(Error::Mesh(format!(
                "Euler characteristic {chi} inconsistent with genus {} ({} components, {} boundary loops)",
                data.genus,
                nc,
                boundary_loops.len()
            )));
        }
        if !data.boundary_loops.is_empty() {
            let mut declared: Vec<usize> = data.boundary_loops.iter().flatten().copied().collect();
            let mut found: Vec<usize> = boundary_loops.iter().flatten().copied().collect();
            declared.sort();
            found.sort();
            if declared != found {
                return Err(Error::Mesh("declared boundary loops do not match the mesh".into()));
            }
        }

        let mut mesh = SurfaceMesh {
            data,
            edges,
            face_edges,
            vertex_faces,
            ring,
            boundary_vertex,
            boundary_loops,
            components,
            n_components: nc,
            params: None,
            fits: OnceLock::new(),
            stencils: OnceLock::new(),
        };
        if mesh.data.uv.is_some() {
            let mut params = Vec::with_capacity(nf);
            for f in 0..nf {
                let u = mesh.corner_uv(f).unwrap();
                let e = Matrix2::new(u[1][0] - u[0][0], u[2][0] - u[0][0], u[1][1] - u[0][1], u[2][1] - u[0][1]);
                let det = e.determinant();
                if !(det > 0.0) {
                    return Err(Error::Mesh(format!("triangle {f} has non-positive uv orientation")));
                }
                let inv = e.try_inverse().unwrap();
                // rows of inv are the gradients of the barycentric coordinates of corners 1, 2
                let g1 = [inv[(0, 0)], inv[(0, 1)]];
                let g2 = [inv[(1, 0)], inv[(1, 1)]];
                params.push(FaceParam {
                    bary: [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2],
                    area: 0.5 * det,
                    centroid: [
                        (u[0][0] + u[1][0] + u[2][0]) / 3.0,
                        (u[0][1] + u[1][1] + u[2][1]) / 3.0,
                    ],
                });
            }
            mesh.params = Some(params);
        }
        Ok(mesh)
    }

    pub fn data(&self) -> &MeshData {
        &self.data
    }

    pub fn n_vertices(&self) -> usize {
        self.data.n_vertices
    }

    pub fn n_faces(&self) -> usize {
        self.data.triangles.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.data.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge ids of each face in corner order (c -> c+1) and whether the edge is traversed
    /// in its stored direction.
    pub fn face_edges(&self, f: usize) -> &[(usize, bool); 3] {
        &self.face_edges[f]
    }

    pub fn vertex_faces(&self, v: usize) -> &[(usize, usize)] {
        &self.vertex_faces[v]
    }

    pub fn ring(&self, v: usize) -> &[(usize, Wrap)] {
        &self.ring[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn component(&self, v: usize) -> usize {
        self.components[v]
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn genus(&self) -> usize {
        self.data.genus
    }

    pub fn has_uv(&self) -> bool {
        self.data.uv.is_some()
    }

    pub fn uv_period(&self) -> Option<[f64; 2]> {
        self.data.uv_period
    }

    pub fn corner_wrap(&self, f: usize, c: usize) -> Wrap {
        self.data.corner_wrap.as_ref().map(|w| w[f][c]).unwrap_or([0, 0])
    }

    pub fn face_param(&self, f: usize) -> Option<&FaceParam> {
        self.params.as_ref().map(|p| &p[f])
    }

    pub fn uv_shift(&self, w: Wrap) -> [f64; 2] {
        match self.data.uv_period {
            Some(p) => [w[0] as f64 * p[0], w[1] as f64 * p[1]],
            None => [0.0, 0.0],
        }
    }

    pub fn uv(&self, v: usize) -> Option<[f64; 2]> {
        self.data.uv.as_ref().map(|u| u[v])
    }

    /// Unwrapped uv of the corners of a face.
    pub fn corner_uv(&self, f: usize) -> Option<[[f64; 2]; 3]> {
        let uv = self.data.uv.as_ref()?;
        let t = self.data.triangles[f];
        let mut out = [[0.0; 2]; 3];
        for c in 0..3 {
            let s = self.uv_shift(self.corner_wrap(f, c));
            out[c] = [uv[t[c]][0] + s[0], uv[t[c]][1] + s[1]];
        }
        Some(out)
    }

    /// Faces sharing at least one vertex with f, with the wrap to add to their corner wraps
    /// to express them in the chart of f.
    pub fn face_neighborhood(&self, f: usize) -> Vec<(usize, Wrap)> {
        let mut out: BTreeMap<(usize, Wrap), ()> = BTreeMap::new();
        let t = self.data.triangles[f];
        for c in 0..3 {
            let wf = self.corner_wrap(f, c);
            for &(g, cg) in &self.vertex_faces[t[c]] {
                if g == f {
                    continue;
                }
                let shift = sub_wrap(wf, self.corner_wrap(g, cg));
                out.insert((g, shift), ());
            }
        }
        out.into_keys().collect()
    }

    /// Vertices within `depth` edges of v with their wraps relative to v (v itself excluded).
    pub fn k_ring(&self, v: usize, depth: usize) -> Vec<(usize, Wrap)> {
        let mut seen: BTreeMap<(usize, Wrap), usize> = BTreeMap::new();
        seen.insert((v, [0, 0]), 0);
        let mut frontier = vec![(v, [0, 0])];
        for d in 1..=depth {
            let mut next = Vec::new();
            for &(u, w) in &frontier {
                for &(x, wx) in &self.ring[u] {
                    let key = (x, add_wrap(w, wx));
                    if !seen.contains_key(&key) {
                        seen.insert(key, d);
                        next.push(key);
                    }
                }
            }
            frontier = next;
        }
        seen.into_keys().filter(|k| *k != (v, [0, 0])).collect()
    }

    /// Quadratic least-squares stencils in uv coordinates. Vertices whose 1-ring has fewer
    /// than 5 neighbors use the 2-ring.
    pub fn vertex_fits(&self) -> Result<&[VertexFit]> {
        match self.fits.get_or_init(|| self.compute_vertex_fits()) {
            Ok(f) => Ok(f),
            Err(e) => Err(e.clone()),
        }
    }

    pub fn face_stencils(&self) -> Result<&[FaceStencil]> {
        match self.stencils.get_or_init(|| self.compute_face_stencils()) {
            Ok(f) => Ok(f),
            Err(e) => Err(e.clone()),
        }
    }

    fn compute_face_stencils(&self) -> Result<Vec<FaceStencil>> {
        let params = self.params.as_ref().ok_or(Error::MissingUv)?;
        (0..self.n_faces())
            .map(|f| {
                let c = params[f].centroid;
                let nb = self.face_neighborhood(f);
                let offsets: Vec<[f64; 2]> = nb
                    .iter()
                    .map(|&(g, w)| {
                        let s = self.uv_shift(w);
                        let cg = params[g].centroid;
                        [cg[0] + s[0] - c[0], cg[1] + s[1] - c[1]]
                    })
                    .collect();
                let mut m = Matrix2::<f64>::zeros();
                for d in &offsets {
                    m[(0, 0)] += d[0] * d[0];
                    m[(0, 1)] += d[0] * d[1];
                    m[(1, 1)] += d[1] * d[1];
                }
                m[(1, 0)] = m[(0, 1)];
                if !(m.trace() > 0.0) {
                    return Err(Error::Resolution(format!("face {f} has no neighbors")));
                }
                let mi = m.pseudo_inverse(1e-12 * m.trace()).unwrap();
                let weights = offsets
                    .iter()
                    .map(|d| {
                        [mi[(0, 0)] * d[0] + mi[(0, 1)] * d[1], mi[(1, 0)] * d[0] + mi[(1, 1)] * d[1]]
                    })
                    .collect();
                Ok(FaceStencil {
                    nbrs: nb.into_iter().map(|(g, _)| g).collect(),
                    weights,
                })
            })
            .collect()
    }

    fn compute_vertex_fits(&self) -> Result<Vec<VertexFit>> {
        let uv = self.data.uv.as_ref().ok_or(Error::MissingUv)?;
        let mut out = Vec::with_capacity(self.n_vertices());
        for v in 0..self.n_vertices() {
            let mut two_ring = self.ring[v].len() < 5;
            let mut fit = None;
            for depth in [1usize, 2, 3] {
                if depth == 1 && two_ring {
                    continue;
                }
                let nbrs = if depth == 1 { self.ring[v].clone() } else { self.k_ring(v, depth) };
                if let Some(w) = quadratic_weights(uv, v, &nbrs, |w| self.uv_shift(w)) {
                    fit = Some(VertexFit {
                        nbrs,
                        weights: w,
                        two_ring,
                    });
                    break;
                }
                two_ring = true;
            }
            out.push(fit.ok_or_else(|| Error::Resolution(format!("quadratic fit at vertex {v} is rank deficient")))?);
        }
        Ok(out)
    }
}

fn quadratic_weights<S: Fn(Wrap) -> [f64; 2]>(
    uv: &[[f64; 2]],
    v: usize,
    nbrs: &[(usize, Wrap)],
    shift: S,
) -> Option<Vec<[f64; 5]>> {
    let m = nbrs.len();
    if m < 5 {
        return None;
    }
    let mut a = DMatrix::zeros(m, 5);
    let mut scale: f64 = 0.0;
    for (k, &(u, w)) in nbrs.iter().enumerate() {
        let s = shift(w);
        let d = [uv[u][0] + s[0] - uv[v][0], uv[u][1] + s[1] - uv[v][1]];
        scale = scale.max(d[0].abs()).max(d[1].abs());
        a[(k, 0)] = d[0];
        a[(k, 1)] = d[1];
        a[(k, 2)] = 0.5 * d[0] * d[0];
        a[(k, 3)] = d[0] * d[1];
        a[(k, 4)] = 0.5 * d[1] * d[1];
    }
    if scale == 0.0 {
        return None;
    }
    // column scaling for conditioning
    let cs = [scale, scale, scale * scale, scale * scale, scale * scale];
    for k in 0..m {
        for j in 0..5 {
            a[(k, j)] /= cs[j];
        }
    }
    let ata = a.transpose() * &a;
    let eig = ata.clone().symmetric_eigen();
    let lmin = eig.eigenvalues.min();
    let lmax = eig.eigenvalues.max();
    if !(lmin > 1e-10 * lmax) {
        return None;
    }
    let pinv = ata.try_inverse()? * a.transpose();
    let mut w = vec![[0.0; 5]; m];
    for k in 0..m {
        for j in 0..5 {
            w[k][j] = pinv[(j, k)] / cs[j];
        }
    }
    Some(w)
}

/// Periodic n1 x n2 grid over [0, p1) x [0, p2) with both diagonals (i,j)-(i+1,j+1).
pub fn periodic_grid(n1: usize, n2: usize, period: [f64; 2]) -> MeshData {
    let idx = |i: usize, j: usize| (i % n1) * n2 + (j % n2);
    let mut triangles = Vec::with_capacity(2 * n1 * n2);
    let mut wraps = Vec::with_capacity(2 * n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let w = |di: usize, dj: usize| -> Wrap {
                [((i + di) / n1) as i32, ((j + dj) / n2) as i32]
            };
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            wraps.push([w(0, 0), w(1, 0), w(1, 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            wraps.push([w(0, 0), w(1, 1), w(0, 1)]);
        }
    }
    let mut uv = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            uv.push([period[0] * i as f64 / n1 as f64, period[1] * j as f64 / n2 as f64]);
        }
    }
    MeshData {
        n_vertices: n1 * n2,
        triangles,
        uv: Some(uv),
        uv_period: Some(period),
        corner_wrap: Some(wraps),
        genus: 1,
        boundary_loops: Vec::new(),
    }
}

/// (n1+1) x (n2+1) vertex grid over [x0, x0+l1] x [y0, y0+l2], same diagonal pattern.
pub fn open_grid(n1: usize, n2: usize, origin: [f64; 2], size: [f64; 2]) -> MeshData {
    let m2 = n2 + 1;
    let idx = |i: usize, j: usize| i * m2 + j;
    let mut triangles = Vec::with_capacity(2 * n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let mut uv = Vec::with_capacity((n1 + 1) * m2);
    for i in 0..=n1 {
        for j in 0..=n2 {
            uv.push([
                origin[0] + size[0] * i as f64 / n1 as f64,
                origin[1] + size[1] * j as f64 / n2 as f64,
            ]);
        }
    }
    MeshData {
        n_vertices: (n1 + 1) * m2,
        triangles,
        uv: Some(uv),
        uv_period: None,
        corner_wrap: None,
        genus: 0,
        boundary_loops: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_grid_is_a_torus() {
        let m = SurfaceMesh::new(periodic_grid(6, 5, [1.0, 2.0])).unwrap();
        assert_eq!(m.edges().len(), 3 * 30);
        assert!(m.boundary_loops().is_empty());
        assert!(m.ring(0).len() == 6);
        let fits = m.vertex_fits().unwrap();
        assert!(fits.iter().all(|f| !f.two_ring));
    }

    #[test]
    fn open_grid_is_a_disk() {
        let m = SurfaceMesh::new(open_grid(4, 3, [0.0, 0.0], [1.0, 1.0])).unwrap();
        assert_eq!(m.boundary_loops().len(), 1);
        assert_eq!(m.boundary_loops()[0].len(), 14);
        let fits = m.vertex_fits().unwrap();
        assert!(fits[0].two_ring);
    }

    #[test]
    fn wrong_genus_is_rejected() {
        let mut d = periodic_grid(4, 4, [1.0, 1.0]);
        d.genus = 0;
        assert!(matches!(SurfaceMesh::new(d), Err(Error::Mesh(_))));
    }

    #[test]
    fn flipped_triangle_is_rejected() {
        let mut d = open_grid(3, 3, [0.0, 0.0], [1.0, 1.0]);
        let t = d.triangles[4];
        d.triangles[4] = [t[0], t[2], t[1]];
        assert!(SurfaceMesh::new(d).is_err());
    }

    #[test]
    fn quadratic_fit_reproduces_quadratics() {
        let m = SurfaceMesh::new(periodic_grid(8, 8, [1.0, 1.0])).unwrap();
        let fits = m.vertex_fits().unwrap();
        let f = |u: f64, v: f64| 0.3 * u - 0.2 * v + 1.5 * u * u - 0.7 * u * v + 0.4 * v * v;
        let uv = m.data().uv.as_ref().unwrap();
        let v = 3 * 8 + 4;
        let fit = &fits[v];
        let mut c = [0.0; 5];
        for (k, &(u, w)) in fit.nbrs.iter().enumerate() {
            let s = m.uv_shift(w);
            let val = f(uv[u][0] + s[0], uv[u][1] + s[1]) - f(uv[v][0], uv[v][1]);
            for j in 0..5 {
                c[j] += fit.weights[k][j] * val;
            }
        }
        let (x, y) = (uv[v][0], uv[v][1]);
        let exact = [0.3 + 3.0 * x - 0.7 * y, -0.2 - 0.7 * x + 0.8 * y, 3.0, -0.7, 0.8];
        for j in 0..5 {
            assert!((c[j] - exact[j]).abs() < 1e-9, "{j}: {} vs {}", c[j], exact[j]);
        }
    }
}
