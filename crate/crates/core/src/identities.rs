//! Seeded random-sample checks of the pointwise identities of both targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{contact_field_with, Hamiltonian, Polynomial, ReebConvention};
use crate::heisenberg::{
    contact_form_h, d_alpha_h, dilate, dilate_push, horizontal_lift, HVector, HeisenbergPoint,
};
use crate::linalg::{split8, Point, Vec4, Vec8};
use crate::stiefel::{
    self, contact_form, covariant_reeb, d_alpha, grassmann_j, hopf_project, hopf_push,
    horizontal_project, jh, reeb, StiefelPoint, StiefelTangent,
};
use crate::target::Target;

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    fn below(name: &str, samples: usize, max_error: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            samples,
            max_error,
            tolerance,
            passed: max_error <= tolerance,
            note: None,
        }
    }

    fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityOptions {
    pub seed: u64,
    pub samples: usize,
    pub hamiltonians: usize,
    pub quasi_triples: usize,
    /// Runs the involution check on a copy of J_H with one sign flipped.
    pub inject_jh_bug: bool,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        IdentityOptions {
            seed: 0,
            samples: 10_000,
            hamiltonians: 100,
            quasi_triples: 100_000,
            inject_jh_bug: false,
        }
    }
}

pub fn random_stiefel<R: Rng>(rng: &mut R) -> StiefelPoint {
    loop {
        let a = Vec4::from_fn(|_, _| gaussian(rng));
        let b = Vec4::from_fn(|_, _| gaussian(rng));
        if let Ok(p) = stiefel::retract(&a, &b) {
            return p;
        }
    }
}

pub fn random_vec8<R: Rng>(rng: &mut R) -> Vec8 {
    Vec8::from_fn(|_, _| gaussian(rng))
}

pub fn random_horizontal<R: Rng>(rng: &mut R, p: &StiefelPoint) -> StiefelTangent {
    let t = stiefel::tangent_project(p, &random_vec8(rng));
    horizontal_project(p, &t).expect("tangent by construction")
}

pub fn random_heisenberg<R: Rng>(rng: &mut R, scale: f64) -> HeisenbergPoint {
    HeisenbergPoint::new(
        scale * rng.gen_range(-1.0..1.0),
        Vec4::from_fn(|_, _| scale * rng.gen_range(-1.0..1.0)),
    )
}

/// Defect (L_X alpha)(Y) of a field X at p in the direction of a horizontal Y, computed by
/// central differences of X along Y with step `step`.
pub fn lie_derivative_defect<F: Fn(&Point) -> Point>(
    target: Target,
    field: F,
    p: &Point,
    y: &Point,
    step: f64,
) -> f64 {
    let probe = |s: f64| {
        let q = p + y * s;
        target.retract(&q).unwrap_or(q)
    };
    let dx = (field(&probe(step)) - field(&probe(-step))) / (2.0 * step);
    let x = field(p);
    let dalpha_x = match target {
        Target::Stiefel => {
            let (xa, xb) = split8(&x);
            let (ya, yb) = split8(y);
            xa.dot(&yb) - xb.dot(&ya)
        }
        Target::Heisenberg => d_alpha_h(&HVector::from_vec8(&x), &HVector::from_vec8(y)) * 0.5,
    };
    dalpha_x + target.contact_form(p, &dx)
}

fn wedge_volume(alpha: &dyn Fn(&Point) -> f64, dalpha: &dyn Fn(&Point, &Point) -> f64, v: &[Point; 5]) -> f64 {
    let four = |w: [&Point; 4]| {
        2.0 * (dalpha(w[0], w[1]) * dalpha(w[2], w[3]) - dalpha(w[0], w[2]) * dalpha(w[1], w[3])
            + dalpha(w[0], w[3]) * dalpha(w[1], w[2]))
    };
    let mut s = 0.0;
    for i in 0..5 {
        let rest: Vec<&Point> = (0..5).filter(|&j| j != i).map(|j| &v[j]).collect();
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * alpha(&v[i]) * four([rest[0], rest[1], rest[2], rest[3]]);
    }
    s
}

fn stiefel_checks(opts: &IdentityOptions, rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) {
    let n = opts.samples;
    let mut e_alpha_r: f64 = 0.0;
    let mut e_inv: f64 = 0.0;
    let mut e_iso: f64 = 0.0;
    let mut e_hopf: f64 = 0.0;
    let mut e_hopf_j: f64 = 0.0;
    let mut e_dalpha: f64 = 0.0;
    let mut e_cov: f64 = 0.0;
    let mut e_cov_orth: f64 = 0.0;
    let mut e_horiz: f64 = 0.0;
    let mut e_retract: f64 = 0.0;
    let mut e_reeb_div: f64 = 0.0;
    let mut vol_min = f64::INFINITY;
    let mut vol_max = f64::NEG_INFINITY;
    let flip = opts.inject_jh_bug;
    for _ in 0..n {
        let p = random_stiefel(rng);
        let r = reeb(&p);
        e_alpha_r = e_alpha_r.max((contact_form(&p, &r).unwrap() + 2.0).abs());
        let x = random_horizontal(rng, &p);
        let y = random_horizontal(rng, &p);
        e_horiz = e_horiz.max(contact_form(&p, &x).unwrap().abs());

        let jx = if flip {
            StiefelTangent::new(p, x.w, x.v).unwrap()
        } else {
            jh(&p, &x).unwrap()
        };
        let jjx = if flip {
            StiefelTangent::new(p, jx.w, jx.v).unwrap()
        } else {
            jh(&p, &jx).unwrap()
        };
        e_inv = e_inv.max((jjx.to_vec8() + x.to_vec8()).amax() / x.norm());
        e_iso = e_iso.max((jx.norm() - x.norm()).abs() / x.norm());

        let px = hopf_push(&p, &x).unwrap();
        e_hopf = e_hopf.max((px.norm() - x.norm()).abs() / x.norm());
        let pjx = hopf_push(&p, &jh(&p, &x).unwrap()).unwrap();
        let jpx = grassmann_j(&hopf_project(&p), &px);
        e_hopf_j = e_hopf_j.max(((pjx.plus - jpx.plus).norm() + (pjx.minus - jpx.minus).norm()) / x.norm());

        // exterior derivative of the ambient form a.db - b.da by central differences
        let h = 1e-4;
        let alpha_at = |q: &Vec8, v: &Vec8| Target::Stiefel.contact_form(q, v);
        let probe = |s: f64, d: &Vec8| stiefel::retract8(&(p.to_vec8() + d * s)).unwrap().to_vec8();
        let (xv, yv) = (x.to_vec8(), y.to_vec8());
        let dx_ay = (alpha_at(&probe(h, &xv), &yv) - alpha_at(&probe(-h, &xv), &yv)) / (2.0 * h);
        let dy_ax = (alpha_at(&probe(h, &yv), &xv) - alpha_at(&probe(-h, &yv), &xv)) / (2.0 * h);
        let fd = dx_ay - dy_ax;
        e_dalpha = e_dalpha.max((fd - d_alpha(&x, &y)).abs() / (x.norm() * y.norm()));

        // nabla_Z R: tangential part of the derivative of R = (b, -a) along Z
        let dr = Target::Stiefel.reeb(&(p.to_vec8() + x.to_vec8())) - Target::Stiefel.reeb(&p.to_vec8());
        let nabla = stiefel::tangent_project(&p, &dr);
        let cov = covariant_reeb(&p, &x).unwrap();
        let mjx = jh(&p, &x).unwrap();
        e_cov = e_cov
            .max((nabla.to_vec8() + mjx.to_vec8()).amax() / x.norm())
            .max((cov.to_vec8() + mjx.to_vec8()).amax() / x.norm());
        e_cov_orth = e_cov_orth.max(x.dot(&cov).abs() / x.dot(&x));

        // orthonormal Legendrian frame e1, e2 = J-complement of span(e1)
        let e1 = x.scale(1.0 / x.norm());
        let je1 = jh(&p, &e1).unwrap();
        let yy = y.to_vec8() - e1.to_vec8() * y.dot(&e1) - je1.to_vec8() * y.dot(&je1);
        let e2 = StiefelTangent::new(p, split8(&yy).0, split8(&yy).1).unwrap();
        let e2 = e2.scale(1.0 / e2.norm());
        let je2 = jh(&p, &e2).unwrap();
        let alpha_f = |v: &Point| Target::Stiefel.contact_form(&p.to_vec8(), v);
        let dalpha_f = |u: &Point, v: &Point| {
            let (ua, ub) = split8(u);
            let (va, vb) = split8(v);
            2.0 * (ua.dot(&vb) - va.dot(&ub))
        };
        let vol = wedge_volume(
            &alpha_f,
            &dalpha_f,
            &[r.to_vec8(), e1.to_vec8(), je1.to_vec8(), e2.to_vec8(), je2.to_vec8()],
        );
        vol_min = vol_min.min(vol);
        vol_max = vol_max.max(vol);

        // div of R over the Legendrian plane span(e1, e2)
        let div = e1.dot(&covariant_reeb(&p, &e1).unwrap()) + e2.dot(&covariant_reeb(&p, &e2).unwrap());
        e_reeb_div = e_reeb_div.max(div.abs());

        let rp = stiefel::retract(p.a(), p.b()).unwrap();
        e_retract = e_retract.max((rp.to_vec8() - p.to_vec8()).amax());
    }
    out.push(CheckResult::below("stiefel_alpha_reeb", n, e_alpha_r, 1e-12));
    out.push(CheckResult::below("jh_involution", n, e_inv, 1e-12));
    out.push(CheckResult::below("jh_isometry", n, e_iso, 1e-12));
    out.push(CheckResult::below("hopf_push_isometry", n, e_hopf, 1e-10));
    out.push(CheckResult::below("hopf_push_complex", n, e_hopf_j, 1e-10));
    out.push(CheckResult::below("stiefel_d_alpha_fd", n, e_dalpha, 1e-5));
    out.push(CheckResult::below("covariant_reeb_minus_jh", n, e_cov, 1e-12));
    out.push(CheckResult::below("covariant_reeb_orthogonal", n, e_cov_orth, 1e-12));
    out.push(CheckResult::below("reeb_divergence_on_legendrian_planes", n, e_reeb_div, 1e-12));
    out.push(CheckResult::below("stiefel_horizontal_projection", n, e_horiz, 1e-12));
    out.push(CheckResult::below("retract_idempotent", n, e_retract, 1e-14));
    let same_sign = vol_min > 0.0 || vol_max < 0.0;
    out.push(CheckResult {
        name: "stiefel_contact_volume_sign".into(),
        samples: n,
        max_error: if same_sign { 0.0 } else { 1.0 },
        tolerance: 0.0,
        passed: same_sign,
        note: Some(format!("alpha^dalpha^dalpha in [{vol_min:.6e}, {vol_max:.6e}]")),
    });
}

fn heisenberg_checks(opts: &IdentityOptions, rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) {
    let n = opts.samples;
    let mut e_dil: f64 = 0.0;
    let mut e_dalpha: f64 = 0.0;
    let mut vol_min = f64::INFINITY;
    let mut vol_max = f64::NEG_INFINITY;
    let mut e_gauge: f64 = 0.0;
    for _ in 0..n {
        let q = random_heisenberg(rng, 2.0);
        let x = HVector::new(gaussian(rng), Vec4::from_fn(|_, _| gaussian(rng)));
        let r = rng.gen_range(0.2..5.0);
        let lhs = contact_form_h(&q, &x);
        let rhs = r * r * contact_form_h(&dilate(&q, r).unwrap(), &dilate_push(&x, r).unwrap());
        e_dil = e_dil.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
        let gq = crate::heisenberg::model_gauge(&q);
        e_gauge = e_gauge.max((crate::heisenberg::model_gauge(&dilate(&q, r).unwrap()) - gq / r).abs() / (1.0 + gq));

        let y = HVector::new(gaussian(rng), Vec4::from_fn(|_, _| gaussian(rng)));
        let h = 1e-4;
        let a_at = |s: f64, d: &HVector, v: &HVector| {
            contact_form_h(&HeisenbergPoint::new(q.phi + s * d.phi, q.y + d.y * s), v)
        };
        let fd = (a_at(h, &x, &y) - a_at(-h, &x, &y)) / (2.0 * h) - (a_at(h, &y, &x) - a_at(-h, &y, &x)) / (2.0 * h);
        e_dalpha = e_dalpha.max((fd - d_alpha_h(&x, &y)).abs() / (x.to_vec8().norm() * y.to_vec8().norm()));

        let m1 = Vec4::from_fn(|_, _| gaussian(rng)).normalize();
        let jm1 = crate::linalg::mul_i(&m1);
        let raw = Vec4::from_fn(|_, _| gaussian(rng));
        let m2 = (raw - m1 * raw.dot(&m1) - jm1 * raw.dot(&jm1)).normalize();
        let jm2 = crate::linalg::mul_i(&m2);
        let lift = |m: &Vec4| horizontal_lift(&q, m).to_vec8();
        let qv = q.to_vec8();
        let alpha_f = |v: &Point| Target::Heisenberg.contact_form(&qv, v);
        let dalpha_f = |u: &Point, v: &Point| d_alpha_h(&HVector::from_vec8(u), &HVector::from_vec8(v));
        let vol = wedge_volume(
            &alpha_f,
            &dalpha_f,
            &[Target::Heisenberg.reeb(&qv), lift(&m1), lift(&jm1), lift(&m2), lift(&jm2)],
        );
        vol_min = vol_min.min(vol);
        vol_max = vol_max.max(vol);
    }
    out.push(CheckResult::below("heisenberg_dilation_pullback", n, e_dil, 1e-12));
    out.push(CheckResult::below("heisenberg_gauge_homogeneity", n, e_gauge, 1e-12));
    out.push(CheckResult::below("heisenberg_d_alpha_fd", n, e_dalpha, 1e-5));
    let nonzero = vol_min > 0.0 || vol_max < 0.0;
    out.push(CheckResult {
        name: "heisenberg_contact_volume_nonzero".into(),
        samples: n,
        max_error: if nonzero { 0.0 } else { 1.0 },
        tolerance: 0.0,
        passed: nonzero,
        note: Some(format!("alpha^dalpha^dalpha in [{vol_min:.6e}, {vol_max:.6e}]")),
    });
}

fn gauge_checks(opts: &IdentityOptions, rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) {
    let n = opts.samples;
    let mut e_sym: f64 = 0.0;
    let mut e_inv: f64 = 0.0;
    for _ in 0..n {
        let p = random_stiefel(rng);
        let q = random_stiefel(rng);
        let g = stiefel::gauge(&p, &q);
        e_sym = e_sym.max((g.r_gauge - stiefel::gauge(&q, &p).r_gauge).abs());
        let r4 = g.rho.powi(4) + 4.0 * g.phi * g.phi;
        let mut d = (g.r_gauge.powi(4) - r4).abs() / r4.max(1e-300);
        if let Some(s) = g.sigma {
            d = d.max((s * g.rho * g.rho - 2.0 * g.phi).abs());
        }
        e_inv = e_inv.max(d);
    }
    out.push(CheckResult::below("gauge_symmetry", n, e_sym, 0.0));
    out.push(CheckResult::below("gauge_invariants", n, e_inv, 1e-12));

    let m = opts.quasi_triples;
    let mut c0: f64 = 0.0;
    for _ in 0..m {
        let p1 = random_stiefel(rng);
        let p = random_stiefel(rng);
        let q = random_stiefel(rng);
        let lhs = stiefel::quasi_distance(&p1, &p);
        let rhs = stiefel::quasi_distance(&p1, &q) + stiefel::quasi_distance(&p, &q);
        if rhs > 0.0 {
            c0 = c0.max(lhs / rhs);
        }
    }
    out.push(
        CheckResult {
            name: "quasi_triangle_constant".into(),
            samples: m,
            max_error: c0,
            tolerance: f64::INFINITY,
            passed: c0.is_finite(),
            note: None,
        }
        .with_note(format!("empirical C0 = {c0:.6}")),
    );
}

/// Lie-derivative contact test of c h R + s J grad_H h for random polynomials h.
pub fn contactomorphism_check(
    target: Target,
    horizontal_scale: f64,
    reeb_coefficient: f64,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let h = Polynomial::random(rng, target.dim(), 3);
        for _ in 0..5 {
            let (p, y) = match target {
                Target::Stiefel => {
                    let p = random_stiefel(rng);
                    (p.to_vec8(), random_horizontal(rng, &p).to_vec8())
                }
                Target::Heisenberg => {
                    let q = random_heisenberg(rng, 1.0);
                    let m = Vec4::from_fn(|_, _| gaussian(rng));
                    (q.to_vec8(), horizontal_lift(&q, &m).to_vec8())
                }
            };
            let field = |x: &Point| contact_field_with(target, &h as &dyn Hamiltonian, x, horizontal_scale, reeb_coefficient);
            let d = lie_derivative_defect(target, field, &p, &y, 1e-4);
            worst = worst.max(d.abs() / (target.measure(&y).norm() * h.scale()));
        }
    }
    worst
}

fn contact_checks(opts: &IdentityOptions, rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) {
    let k = opts.hamiltonians;
    for target in [Target::Heisenberg, Target::Stiefel] {
        for conv in [ReebConvention::Thm1, ReebConvention::Sec231] {
            let d = contactomorphism_check(target, conv.horizontal_scale(target), conv.reeb_coefficient(), k, rng);
            let name = format!(
                "contactomorphism_{}_{}",
                match target {
                    Target::Stiefel => "stiefel",
                    Target::Heisenberg => "heisenberg",
                },
                match conv {
                    ReebConvention::Thm1 => "thm1",
                    ReebConvention::Sec231 => "sec231",
                }
            );
            out.push(CheckResult::below(&name, k * 5, d, 1e-4));
        }
    }
    // unit horizontal coefficient with the -2 R term is not contact on V2(R4)
    let d = contactomorphism_check(Target::Stiefel, 1.0, -2.0, k.min(20), rng);
    out.push(CheckResult {
        name: "stiefel_unit_horizontal_scale_rejected".into(),
        samples: k.min(20) * 5,
        max_error: d,
        tolerance: 1e-4,
        passed: d > 1e-4,
        note: Some("negative control: this field must fail the contact test".into()),
    });
}

pub fn run_identity_suite(opts: &IdentityOptions) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    stiefel_checks(opts, &mut rng, &mut out);
    heisenberg_checks(opts, &mut rng, &mut out);
    gauge_checks(opts, &mut rng, &mut out);
    contact_checks(opts, &mut rng, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let opts = IdentityOptions {
            samples: 300,
            hamiltonians: 10,
            quasi_triples: 1000,
            ..Default::default()
        };
        let res = run_identity_suite(&opts);
        for c in &res {
            assert!(c.passed, "{c:?}");
        }
        assert!(res.len() >= 12);
    }

    #[test]
    fn injected_bug_is_named() {
        let opts = IdentityOptions {
            samples: 50,
            hamiltonians: 2,
            quasi_triples: 10,
            inject_jh_bug: true,
            ..Default::default()
        };
        let res = run_identity_suite(&opts);
        let failed: Vec<_> = res.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        assert_eq!(failed, vec!["jh_involution"]);
    }
}
