//! Gauge quantities around a base point, the arctan(sigma) Hamiltonian, the truncated
//! monotonicity balance, area density ratios and the theta_0 estimator.

use serde::{Deserialize, Serialize};

use crate::curvature::{fitted_partials, second_fundamental_form};
use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, Support};
use crate::immersion::DiscreteImmersion;
use crate::linalg::Point;
use crate::stiefel::GaugeFrame;
use crate::target::Target;

/// Cutoff: 1 on [0, 1], 0 on [2, inf), quintic smoothstep in between (C^2).
pub fn chi(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let x = t - 1.0;
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

pub fn chi_prime(t: f64) -> f64 {
    if t <= 1.0 || t >= 2.0 {
        0.0
    } else {
        let x = t - 1.0;
        -30.0 * x * x * (1.0 - x) * (1.0 - x)
    }
}

pub fn chi_second(t: f64) -> f64 {
    if t <= 1.0 || t >= 2.0 {
        0.0
    } else {
        let x = t - 1.0;
        -60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)
    }
}

pub const CUTOFF_DESCRIPTION: &str = "chi(t) = 1 - S(t - 1) on [1, 2], S(x) = 10x^3 - 15x^4 + 6x^5";

/// (1 + s arctan s) / sqrt(1 + s^2).
pub fn sigma_weight(s: f64) -> f64 {
    (1.0 + s * s.atan()) / s.hypot(1.0)
}

/// Gauge quantities at an ambient point, with their Euclidean gradients.
#[derive(Clone, Copy, Debug)]
pub struct PointGauge {
    pub frame: GaugeFrame,
    pub arctan_sigma: f64,
    pub grad_rho2: Point,
    pub grad_phi: Point,
    /// Zero at the base point.
    pub grad_r: Point,
    pub grad_arctan: Point,
}

pub fn point_gauge(t: Target, p0: &Point, p: &Point, phi_period: Option<f64>) -> PointGauge {
    let frame = t.gauge(p0, p, phi_period);
    let (grad_rho2, grad_phi) = t.gauge_gradients(p0, p);
    let (rho2, phi, r) = (frame.rho * frame.rho, frame.phi, frame.r_gauge);
    let (grad_r, grad_arctan) = if r > 0.0 {
        let r3 = r * r * r;
        (
            (grad_rho2 * rho2 + grad_phi * (4.0 * phi)) / (2.0 * r3),
            (grad_phi * rho2 - grad_rho2 * phi) * (2.0 / (r3 * r)),
        )
    } else {
        (Point::zeros(), Point::zeros())
    };
    PointGauge {
        frame,
        arctan_sigma: frame.arctan_sigma(),
        grad_rho2,
        grad_phi,
        grad_r,
        grad_arctan,
    }
}

/// h = [chi(r/r_out) - chi(r/eta)] arctan(sigma), supported in {eta <= r <= 2 r_out}.
#[derive(Clone, Debug, PartialEq)]
pub struct ArctanHamiltonian {
    pub target: Target,
    pub base: Point,
    pub r: f64,
    pub eta: f64,
    pub phi_period: Option<f64>,
}

impl ArctanHamiltonian {
    pub fn new(imm: &DiscreteImmersion, base: Point, r: f64, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < r && r < 1.0) {
            return Err(Error::Parameter(format!("need 0 < eta < r < 1, got eta = {eta}, r = {r}")));
        }
        Ok(ArctanHamiltonian {
            target: imm.target,
            base,
            r,
            eta,
            phi_period: imm.phi_period(),
        })
    }

    fn cut(&self, g: f64) -> (f64, f64) {
        (
            chi(g / self.r) - chi(g / self.eta),
            chi_prime(g / self.r) / self.r - chi_prime(g / self.eta) / self.eta,
        )
    }
}

impl Hamiltonian for ArctanHamiltonian {
    fn value(&self, p: &Point) -> f64 {
        let g = point_gauge(self.target, &self.base, p, self.phi_period);
        self.cut(g.frame.r_gauge).0 * g.arctan_sigma
    }

    fn gradient(&self, p: &Point) -> Point {
        let g = point_gauge(self.target, &self.base, p, self.phi_period);
        let (c, dc) = self.cut(g.frame.r_gauge);
        g.grad_r * (dc * g.arctan_sigma) + g.grad_arctan * c
    }

    fn support(&self) -> Support {
        Support::GaugeShell {
            target: self.target,
            base: self.base,
            inner: self.eta,
            outer: 2.0 * self.r,
            phi_period: self.phi_period,
        }
    }
}

/// Tangent plane data at a face centroid from the averaged vertex fits.
#[derive(Clone, Debug)]
struct FaceSample {
    point: Point,
    area: f64,
    partials: [Point; 2],
    metric_inv: nalgebra::Matrix2<f64>,
    /// Averaged d beta in the uv chart.
    dbeta: Option<[f64; 2]>,
}

impl FaceSample {
    fn pair(&self, a: &Point, b: &Point) -> f64 {
        let da = [a.dot(&self.partials[0]), a.dot(&self.partials[1])];
        let db = [b.dot(&self.partials[0]), b.dot(&self.partials[1])];
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.metric_inv[(i, j)] * da[i] * db[j];
            }
        }
        s
    }

    /// Tangential gradient of a function with ambient gradient `a`, in measured coordinates.
    fn tangential(&self, t: Target, a: &Point) -> Point {
        let da = [a.dot(&self.partials[0]), a.dot(&self.partials[1])];
        let mut v = Point::zeros();
        for i in 0..2 {
            for j in 0..2 {
                v += t.measure(&self.partials[i]) * (self.metric_inv[(i, j)] * da[j]);
            }
        }
        v
    }

    fn pair_dbeta(&self, a: &Point) -> f64 {
        let Some(b) = self.dbeta else { return 0.0 };
        let da = [a.dot(&self.partials[0]), a.dot(&self.partials[1])];
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.metric_inv[(i, j)] * da[i] * b[j];
            }
        }
        s
    }
}

fn face_samples(imm: &DiscreteImmersion, with_beta: bool) -> Result<Vec<FaceSample>> {
    let partials = fitted_partials(imm)?;
    let dbeta = if with_beta {
        Some(second_fundamental_form(imm)?.vertices.iter().map(|v| [0.5 * v.gamma[0], 0.5 * v.gamma[1]]).collect::<Vec<_>>())
    } else {
        None
    };
    let t = imm.target;
    let mesh = &imm.mesh;
    (0..mesh.n_faces())
        .map(|f| {
            let tri = mesh.triangles()[f];
            let corners = imm.corners(f);
            let point = t.retract(&((corners[0] + corners[1] + corners[2]) / 3.0))?;
            let mut d = [Point::zeros(); 2];
            for v in tri {
                d[0] += partials[v][0] / 3.0;
                d[1] += partials[v][1] / 3.0;
            }
            let m = [t.measure(&d[0]), t.measure(&d[1])];
            let g = nalgebra::Matrix2::new(m[0].dot(&m[0]), m[0].dot(&m[1]), m[0].dot(&m[1]), m[1].dot(&m[1]));
            let metric_inv = g.try_inverse().ok_or(Error::DegenerateFace { face: f, norm: 0.0 })?;
            let dbeta = dbeta.as_ref().map(|b| {
                let mut s = [0.0; 2];
                for v in tri {
                    s[0] += b[v][0] / 3.0;
                    s[1] += b[v][1] / 3.0;
                }
                s
            });
            Ok(FaceSample {
                point,
                area: imm.face_frame(f)?.area,
                partials: d,
                metric_inv,
                dbeta,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexGauge {
    pub rho: f64,
    pub phi: f64,
    pub r_gauge: f64,
    pub sigma: Option<f64>,
    pub arctan_sigma: f64,
    pub weight: f64,
    pub singular: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceGauge {
    pub r_gauge: f64,
    pub sigma: Option<f64>,
    pub arctan_sigma: f64,
    pub grad_rho_norm: f64,
    pub grad_phi_norm: f64,
    pub grad_r_norm: f64,
    pub grad_arctan_norm: f64,
    pub horizontal_r_norm2: f64,
    /// |1 - |grad rho|^2 - rho^-2 |grad phi|^2|.
    pub structure_defect: f64,
    /// ||grad_H r|^2 - 1 / sqrt(1 + sigma^2)|.
    pub horizontal_defect: f64,
    /// r |grad arctan sigma| / 2, at most 1.
    pub arctan_cap_ratio: f64,
    /// |(grad_H r - grad r) / r - J_H(grad arctan sigma) / 2|.
    pub perpendicular_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeFields {
    pub base: Point,
    pub vertices: Vec<VertexGauge>,
    /// None on faces touching a singular vertex.
    pub faces: Vec<Option<FaceGauge>>,
}

impl GaugeFields {
    /// max over faces with r in [lo, hi] of defect / r^power.
    pub fn fitted_constant(&self, lo: f64, hi: f64, power: i32, defect: impl Fn(&FaceGauge) -> f64) -> f64 {
        self.faces
            .iter()
            .flatten()
            .filter(|f| f.r_gauge >= lo && f.r_gauge <= hi)
            .map(|f| defect(f) / f.r_gauge.powi(power))
            .fold(0.0, f64::max)
    }

    pub fn max_arctan_cap_ratio(&self) -> f64 {
        self.faces.iter().flatten().map(|f| f.arctan_cap_ratio).fold(0.0, f64::max)
    }
}

const SINGULAR: f64 = 1e-12;

pub fn gauge_fields(imm: &DiscreteImmersion, base: &Point) -> Result<GaugeFields> {
    let t = imm.target;
    let period = imm.phi_period();
    let vertices: Vec<VertexGauge> = imm
        .positions
        .iter()
        .map(|p| {
            let g = t.gauge(base, p, period);
            VertexGauge {
                rho: g.rho,
                phi: g.phi,
                r_gauge: g.r_gauge,
                sigma: g.sigma,
                arctan_sigma: g.arctan_sigma(),
                weight: g.sigma.map_or(1.0, sigma_weight),
                singular: g.r_gauge < SINGULAR,
            }
        })
        .collect();
    let samples = face_samples(imm, false)?;
    let faces = samples
        .iter()
        .enumerate()
        .map(|(f, s)| {
            if imm.mesh.triangles()[f].iter().any(|&v| vertices[v].singular) {
                return None;
            }
            let g = point_gauge(t, base, &s.point, period);
            let (rho, r) = (g.frame.rho, g.frame.r_gauge);
            if r < SINGULAR || rho < SINGULAR {
                return None;
            }
            let grad_rho = g.grad_rho2 / (2.0 * rho);
            let grho2 = s.pair(&grad_rho, &grad_rho);
            let gphi2 = s.pair(&g.grad_phi, &g.grad_phi);
            let gr2 = s.pair(&g.grad_r, &g.grad_r);
            let gat2 = s.pair(&g.grad_arctan, &g.grad_arctan);
            let hr = t.measure(&t.horizontal_gradient(&s.point, &g.grad_r));
            let sigma = g.frame.sigma.unwrap_or(f64::INFINITY);
            let tang_r = s.tangential(t, &g.grad_r);
            let tang_at = s.tangential(t, &g.grad_arctan);
            let perp = (hr - tang_r) / r - t.j_measured(&s.point, &tang_at) * 0.5;
            Some(FaceGauge {
                r_gauge: r,
                sigma: g.frame.sigma,
                arctan_sigma: g.arctan_sigma,
                grad_rho_norm: grho2.sqrt(),
                grad_phi_norm: gphi2.sqrt(),
                grad_r_norm: gr2.sqrt(),
                grad_arctan_norm: gat2.sqrt(),
                horizontal_r_norm2: hr.norm_squared(),
                structure_defect: (1.0 - grho2 - gphi2 / (rho * rho)).abs(),
                horizontal_defect: (hr.norm_squared() - 1.0 / sigma.hypot(1.0)).abs(),
                arctan_cap_ratio: r * gat2.sqrt() / 2.0,
                perpendicular_defect: perp.norm(),
            })
        })
        .collect();
    Ok(GaugeFields {
        base: *base,
        vertices,
        faces,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lhs,
    Rhs,
    Bookkeeping,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceTerm {
    pub name: String,
    pub side: Side,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub r: f64,
    pub eta: f64,
    pub terms: Vec<BalanceTerm>,
    pub lhs: f64,
    pub rhs: f64,
    /// |lhs - rhs| / max(|lhs|, |rhs|); bookkeeping terms are not included.
    pub residual: f64,
    pub annulus_faces: usize,
}

impl MonotonicityReport {
    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

pub const MIN_ANNULUS_FACES: usize = 100;

pub fn monotonicity_balance(imm: &DiscreteImmersion, base: &Point, r: f64, eta: f64) -> Result<MonotonicityReport> {
    let h = ArctanHamiltonian::new(imm, *base, r, eta)?;
    let t = imm.target;
    let period = imm.phi_period();
    let samples = face_samples(imm, true)?;
    let mut acc = [0.0; 14];
    let mut annulus_faces = 0;
    for s in &samples {
        let g = point_gauge(t, base, &s.point, period);
        let rg = g.frame.r_gauge;
        if rg < SINGULAR {
            continue;
        }
        if rg > eta && rg < 2.0 * r {
            annulus_faces += 1;
        }
        let (tr, te) = (rg / r, rg / eta);
        let (c_r, c_e) = (chi(tr), chi(te));
        let (d_r, d_e) = (chi_prime(tr), chi_prime(te));
        let (s_r, s_e) = (chi_second(tr), chi_second(te));
        if c_r == 0.0 && d_r == 0.0 && c_e == 0.0 && d_e == 0.0 {
            continue;
        }
        let at = g.arctan_sigma;
        let sig = g.frame.sigma.unwrap_or(0.0);
        let tilt = if g.frame.sigma.is_some() { sig * at / sig.hypot(1.0) } else { at.abs() };
        let gr2 = s.pair(&g.grad_r, &g.grad_r);
        let hr2 = t.measure(&t.horizontal_gradient(&s.point, &g.grad_r)).norm_squared();
        let cross = s.pair(&g.grad_r, &g.grad_arctan) / rg;
        let gs2 = s.pair(&g.grad_arctan, &g.grad_arctan);
        let radial = (gr2 + tilt) / (rg * rg);
        let a = s.area;
        acc[0] += s.pair_dbeta(&h.gradient(&s.point)) * a;
        acc[1] -= tr * d_r * radial * a;
        acc[2] += 0.25 * tr * tr * s_r * at * cross * a;
        acc[3] -= 0.75 * tr * d_r * at * cross * a;
        acc[4] += 0.25 * tr * d_r * gs2 * a;
        acc[5] += 4.0 * (c_r - c_e) * (hr2 - gr2) / (rg * rg) * a;
        acc[6] -= te * d_e * radial * a;
        acc[7] += 0.25 * te * d_e * gs2 * a;
        acc[8] -= 0.75 * te * d_e * at * cross * a;
        acc[9] += 0.25 * te * te * s_e * at * cross * a;
        acc[10] += c_r * a;
        acc[11] += tr * d_r.abs() * a;
        acc[12] += c_e * a;
        acc[13] += te * d_e.abs() * a;
    }
    if annulus_faces < MIN_ANNULUS_FACES {
        return Err(Error::Resolution(format!(
            "annulus {eta} < r < {} holds {annulus_faces} faces, need {MIN_ANNULUS_FACES}",
            2.0 * r
        )));
    }
    const NAMES: [(&str, Side); 14] = [
        ("pairing_dh_dbeta", Side::Lhs),
        ("outer_radial", Side::Lhs),
        ("outer_second_derivative", Side::Lhs),
        ("outer_cross", Side::Lhs),
        ("outer_sigma_energy", Side::Lhs),
        ("perpendicular_energy", Side::Rhs),
        ("inner_radial", Side::Rhs),
        ("inner_sigma_energy", Side::Rhs),
        ("inner_cross", Side::Rhs),
        ("inner_second_derivative", Side::Rhs),
        ("outer_bounded_area", Side::Bookkeeping),
        ("outer_linear_area", Side::Bookkeeping),
        ("inner_bounded_area", Side::Bookkeeping),
        ("inner_linear_area", Side::Bookkeeping),
    ];
    let terms: Vec<BalanceTerm> = NAMES
        .iter()
        .zip(acc)
        .map(|(&(name, side), value)| BalanceTerm {
            name: name.into(),
            side,
            value,
        })
        .collect();
    let lhs: f64 = terms.iter().filter(|t| t.side == Side::Lhs).map(|t| t.value).sum();
    let rhs: f64 = terms.iter().filter(|t| t.side == Side::Rhs).map(|t| t.value).sum();
    let scale = lhs.abs().max(rhs.abs());
    Ok(MonotonicityReport {
        r,
        eta,
        terms,
        lhs,
        rhs,
        residual: if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 },
        annulus_faces,
    })
}

/// Surface integral of <dh, d beta> assembled from the gauge fields instead of the Hamiltonian.
pub fn pairing_from_gauge(imm: &DiscreteImmersion, base: &Point, r: f64, eta: f64) -> Result<f64> {
    let t = imm.target;
    let samples = face_samples(imm, true)?;
    let mut total = 0.0;
    for s in &samples {
        let g = point_gauge(t, base, &s.point, imm.phi_period());
        let rg = g.frame.r_gauge;
        let c = chi(rg / r) - chi(rg / eta);
        let dc = chi_prime(rg / r) / r - chi_prime(rg / eta) / eta;
        total += (c * s.pair_dbeta(&g.grad_arctan) + dc * g.arctan_sigma * s.pair_dbeta(&g.grad_r)) * s.area;
    }
    Ok(total)
}

/// Area fraction of the triangle where the linear interpolant of the corner values is below s.
pub fn sublevel_fraction(values: [f64; 3], s: f64) -> f64 {
    let mut v = values;
    v.sort_by(|a, b| a.total_cmp(b));
    let [a, b, c] = v;
    if s <= a {
        0.0
    } else if s >= c {
        1.0
    } else if s <= b {
        (s - a) * (s - a) / ((b - a) * (c - a))
    } else {
        1.0 - (c - s) * (c - s) / ((c - a) * (c - b))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub base: Point,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub components: Vec<usize>,
    /// Requested radii below three edge lengths.
    pub excluded: Vec<f64>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn density_curve(imm: &DiscreteImmersion, base: &Point, radii: &[f64]) -> Result<DensityCurve> {
    let t = imm.target;
    let period = imm.phi_period();
    let r: Vec<f64> = imm.positions.iter().map(|p| t.gauge(base, p, period).r_gauge).collect();
    let frames = imm.face_frames()?;
    let floor = 3.0 * imm.max_edge_length();
    let mut out = DensityCurve {
        base: *base,
        radii: Vec::new(),
        ratios: Vec::new(),
        components: Vec::new(),
        excluded: Vec::new(),
    };
    let mesh = &imm.mesh;
    for &s in radii {
        if !(s > 0.0) {
            return Err(Error::Parameter(format!("radius {s} must be positive")));
        }
        if s < floor {
            out.excluded.push(s);
            continue;
        }
        let area: f64 = (0..mesh.n_faces())
            .map(|f| frames[f].area * sublevel_fraction(mesh.triangles()[f].map(|v| r[v]), s))
            .sum();
        let mut parent: Vec<usize> = (0..mesh.n_vertices()).collect();
        for e in mesh.edges() {
            if r[e.v[0]] < s && r[e.v[1]] < s {
                let (a, b) = (find(&mut parent, e.v[0]), find(&mut parent, e.v[1]));
                parent[a.max(b)] = a.min(b);
            }
        }
        let components = (0..mesh.n_vertices()).filter(|&v| r[v] < s && find(&mut parent, v) == v).count();
        out.radii.push(s);
        out.ratios.push(area / (s * s));
        out.components.push(components);
    }
    Ok(out)
}

/// Smooth bump exp(-1 / ((t - lo)(hi - t))) on (lo, hi), normalized to unit integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub lo: f64,
    pub hi: f64,
    norm: f64,
}

impl Kernel {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Parameter(format!("kernel support ({lo}, {hi}) must lie in (0, inf)")));
        }
        let raw = |t: f64| if t > lo && t < hi { (-1.0 / ((t - lo) * (hi - t))).exp() } else { 0.0 };
        let n = 4096;
        let dx = (hi - lo) / n as f64;
        let mut sum = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * raw(lo + i as f64 * dx);
        }
        Ok(Kernel {
            lo,
            hi,
            norm: 1.0 / (sum * dx / 3.0),
        })
    }

    pub fn standard() -> [Kernel; 2] {
        [Kernel::new(0.5, 2.0).unwrap(), Kernel::new(1.0, 3.0).unwrap()]
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t > self.lo && t < self.hi {
            self.norm * (-1.0 / ((t - self.lo) * (self.hi - t))).exp()
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theta0 {
    pub eta: f64,
    pub theta0: f64,
    pub multiplicity: i64,
    pub distance_to_integer: f64,
}

/// eta^-2 * integral of (eta / r) phi(r / eta) w(sigma) over the surface, at the smallest eta with
/// the kernel support above three edge lengths.
pub fn theta0_estimate(imm: &DiscreteImmersion, base: &Point, kernel: &Kernel) -> Result<Theta0> {
    let eta = 3.0 * imm.max_edge_length() / kernel.lo;
    theta0_at(imm, base, kernel, eta)
}

pub fn theta0_at(imm: &DiscreteImmersion, base: &Point, kernel: &Kernel, eta: f64) -> Result<Theta0> {
    const M: usize = 6;
    let t = imm.target;
    let period = imm.phi_period();
    let frames = imm.face_frames()?;
    let reach = kernel.hi * eta + imm.max_edge_length();
    let mut total = 0.0;
    for (f, frame) in frames.iter().enumerate() {
        let c = imm.corners(f);
        let near = c.iter().any(|p| t.gauge(base, p, period).r_gauge < reach);
        if !near {
            continue;
        }
        let w = frame.area / (M * M) as f64;
        for i in 0..M {
            for j in 0..(M - i) {
                let mut pts = vec![[i as f64 + 1.0 / 3.0, j as f64 + 1.0 / 3.0]];
                if i + j + 1 < M {
                    pts.push([i as f64 + 2.0 / 3.0, j as f64 + 2.0 / 3.0]);
                }
                for [a, b] in pts {
                    let (a, b) = (a / M as f64, b / M as f64);
                    let p = t.retract(&(c[0] * (1.0 - a - b) + c[1] * a + c[2] * b))?;
                    let g = t.gauge(base, &p, period);
                    let r = g.r_gauge;
                    if r <= 0.0 {
                        continue;
                    }
                    let weight = g.sigma.map_or(std::f64::consts::FRAC_PI_2, sigma_weight);
                    total += w * (eta / r) * kernel.eval(r / eta) * weight;
                }
            }
        }
    }
    let theta0 = total / (eta * eta);
    let k = theta0 / (2.0 * std::f64::consts::PI);
    Ok(Theta0 {
        eta,
        theta0,
        multiplicity: k.round() as i64,
        distance_to_integer: (k - k.round()).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiMonotonicity {
    pub curve: DensityCurve,
    /// max ratio(s) / ratio(r) over 2 s < r.
    pub upper_constant: f64,
    /// max theta_0 / ratio(s).
    pub lower_constant: f64,
    /// max ratio / ratio at the largest radius.
    pub spike: f64,
}

pub fn quasi_monotonicity(imm: &DiscreteImmersion, base: &Point, radii: &[f64], theta0: f64) -> Result<QuasiMonotonicity> {
    let curve = density_curve(imm, base, radii)?;
    if curve.ratios.is_empty() {
        return Err(Error::Resolution("no resolvable radius".into()));
    }
    let mut upper = 0.0f64;
    for (i, &s) in curve.radii.iter().enumerate() {
        for (j, &r) in curve.radii.iter().enumerate() {
            if 2.0 * s < r {
                upper = upper.max(curve.ratios[i] / curve.ratios[j]);
            }
        }
    }
    let lower = curve.ratios.iter().map(|q| theta0 / q).fold(0.0, f64::max);
    let (imax, _) = curve
        .radii
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc });
    let spike = curve.ratios.iter().fold(0.0f64, |a, q| a.max(*q)) / curve.ratios[imax];
    Ok(QuasiMonotonicity {
        curve,
        upper_constant: upper,
        lower_constant: lower,
        spike,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use std::f64::consts::PI;

    #[test]
    fn cutoff_shape() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(2.5), 0.0);
        for k in 0..=100 {
            let t = 1.25 + 0.5 * k as f64 / 100.0;
            assert!(chi_prime(t) < -0.5);
        }
        for k in 1..200 {
            let t = 0.9 + 1.2 * k as f64 / 200.0;
            let h = 1e-6;
            assert!(((chi(t + h) - chi(t - h)) / (2.0 * h) - chi_prime(t)).abs() < 1e-6);
            assert!(((chi_prime(t + h) - chi_prime(t - h)) / (2.0 * h) - chi_second(t)).abs() < 1e-5);
        }
    }

    #[test]
    fn sublevel_fraction_of_a_linear_ramp() {
        assert_eq!(sublevel_fraction([0.0, 1.0, 1.0], 0.5), 0.25);
        assert_eq!(sublevel_fraction([0.0, 0.0, 1.0], 0.5), 0.75);
        assert_eq!(sublevel_fraction([1.0, 2.0, 3.0], 0.5), 0.0);
        assert_eq!(sublevel_fraction([1.0, 2.0, 3.0], 3.5), 1.0);
    }

    #[test]
    fn flat_patch_density_is_pi() {
        let imm = corpus::flat_patch(64, 1.0).unwrap();
        let base = imm.positions[imm.mesh.n_vertices() / 2];
        let c = density_curve(&imm, &base, &[0.01, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(c.excluded, vec![0.01]);
        for (q, n) in c.ratios.iter().zip(&c.components) {
            assert!((q / PI - 1.0).abs() < 0.02, "{q}");
            assert_eq!(*n, 1);
        }
    }

    #[test]
    fn arctan_hamiltonian_gradient_matches_differences() {
        let imm = corpus::stiefel_torus(16, 0.0).unwrap();
        let h = ArctanHamiltonian::new(&imm, imm.positions[0], 0.4, 0.1).unwrap();
        let p = imm.positions[17];
        let g = h.gradient(&p);
        for k in 0..8 {
            let mut e = Point::zeros();
            e[k] = 1e-6;
            let fd = (h.value(&(p + e)) - h.value(&(p - e))) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-6, "{k}: {fd} vs {}", g[k]);
        }
    }
}
