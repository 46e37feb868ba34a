use std::f64::consts::FRAC_PI_2;

use legendrian::curvature::dirichlet_energy;
use legendrian::descent::{descend, DescentOptions};
use legendrian::energy::energy;
use legendrian::flow::{perturbed_clifford, perturbed_stiefel_torus};
use legendrian::identities::{random_heisenberg, random_stiefel, random_vec8};
use legendrian::immersion::DiscreteImmersion;
use legendrian::monotonicity::{chi, density_curve, monotonicity_balance, sigma_weight};
use legendrian::{corpus, Point, Target};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_point(t: Target, rng: &mut ChaCha8Rng) -> Point {
    match t {
        Target::Stiefel => random_stiefel(rng).to_vec8(),
        Target::Heisenberg => random_heisenberg(rng, 2.0).to_vec8(),
    }
}

fn target(stiefel: bool) -> Target {
    if stiefel {
        Target::Stiefel
    } else {
        Target::Heisenberg
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn weight_stays_between_one_and_a_quarter_turn(s in -1e8f64..1e8) {
        let w = sigma_weight(s);
        prop_assert!(w >= 1.0 - 1e-15);
        prop_assert!(w <= FRAC_PI_2 + 1e-15);
        prop_assert!((w - sigma_weight(-s)).abs() < 1e-15);
    }

    #[test]
    fn cutoff_is_a_monotone_step(t in 0.0f64..3.0, dt in 0.0f64..1.0) {
        prop_assert!((0.0..=1.0).contains(&chi(t)));
        prop_assert!(chi(t + dt) <= chi(t) + 1e-15);
    }

    #[test]
    fn reeb_field_normalization(seed in any::<u64>(), stiefel in any::<bool>()) {
        let t = target(stiefel);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_point(t, &mut rng);
        prop_assert!(close(t.contact_form(&p, &t.reeb(&p)), t.reeb_alpha(), 1e-13));
        let x = t.tangent_project(&p, &random_vec8(&mut rng));
        let h = t.horizontal_project(&p, &x);
        prop_assert!(t.contact_form(&p, &h).abs() <= 1e-12 * x.norm().max(1.0));
    }

    #[test]
    fn complex_structure_squares_to_minus_one(seed in any::<u64>(), stiefel in any::<bool>()) {
        let t = target(stiefel);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_point(t, &mut rng);
        let x = t.horizontal_project(&p, &t.tangent_project(&p, &random_vec8(&mut rng)));
        let jx = t.j_horizontal(&p, &x);
        prop_assert!(t.contact_form(&p, &jx).abs() <= 1e-12 * x.norm().max(1.0));
        prop_assert!((t.j_horizontal(&p, &jx) + x).amax() <= 1e-12 * x.norm().max(1.0));
    }

    #[test]
    fn reeb_flow_preserves_the_gauge(seed in any::<u64>(), stiefel in any::<bool>(), theta in -3.0f64..3.0) {
        let t = target(stiefel);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p0, p) = (random_point(t, &mut rng), random_point(t, &mut rng));
        let g = t.gauge(&p0, &p, None);
        let h = t.gauge(&t.reeb_flow(&p0, theta), &t.reeb_flow(&p, theta), None);
        prop_assert!(close(g.rho, h.rho, 1e-12));
        prop_assert!(close(g.phi, h.phi, 1e-12));
    }
}

fn reeb_rotated(imm: &DiscreteImmersion, theta: f64) -> DiscreteImmersion {
    let t = imm.target;
    imm.with_positions(imm.positions.iter().map(|p| t.reeb_flow(p, theta)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lab_outputs_are_reeb_invariant(theta in -3.0f64..3.0, stiefel in any::<bool>(), warp in 0.0f64..0.3) {
        let imm = if stiefel {
            corpus::stiefel_torus(64, warp).unwrap()
        } else {
            corpus::clifford_lift(64, warp, false).unwrap()
        };
        let rot = reeb_rotated(&imm, theta);
        let base = imm.positions[0];
        let rbase = rot.positions[0];

        let (e, re) = (energy(&imm, 0.2).unwrap(), energy(&rot, 0.2).unwrap());
        prop_assert!(close(e.area, re.area, 1e-10));
        prop_assert!(close(e.penalty, re.penalty, 1e-10));

        let (m, rm) = (
            monotonicity_balance(&imm, &base, 0.3, 0.1).unwrap(),
            monotonicity_balance(&rot, &rbase, 0.3, 0.1).unwrap(),
        );
        for (a, b) in m.terms.iter().zip(&rm.terms) {
            prop_assert!(close(a.value, b.value, 1e-10), "{} {} {}", a.name, a.value, b.value);
        }

        let radii = [0.2, 0.4, 0.6];
        let (d, rd) = (density_curve(&imm, &base, &radii).unwrap(), density_curve(&rot, &rbase, &radii).unwrap());
        for (a, b) in d.ratios.iter().zip(&rd.ratios) {
            prop_assert!(close(*a, *b, 1e-10));
        }
    }

    #[test]
    fn area_is_below_dirichlet_energy(amplitude in 0.0f64..0.05, seed in 0u64..1000, stiefel in any::<bool>()) {
        let imm = if stiefel {
            perturbed_stiefel_torus(16, amplitude, seed).unwrap()
        } else {
            perturbed_clifford(16, amplitude, seed).unwrap()
        };
        prop_assert!(imm.area().unwrap() <= dirichlet_energy(&imm).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn descent_never_increases_energy(amplitude in 0.005f64..0.03, seed in 0u64..1000, stiefel in any::<bool>()) {
        let imm = if stiefel {
            perturbed_stiefel_torus(12, amplitude, seed).unwrap()
        } else {
            perturbed_clifford(12, amplitude, seed).unwrap()
        };
        let opts = DescentOptions { epsilon_schedule: vec![0.2], max_iters: 6, seed, ..Default::default() };
        let report = descend(&imm, &opts).unwrap();
        let mut prev = report.stages[0].initial.total;
        for step in &report.steps {
            prop_assert!(step.total <= prev);
            prev = step.total;
        }
    }
}

#[test]
fn flat_patch_density_is_pi() {
    for n in [16, 32] {
        let imm = corpus::flat_patch(n, 1.0).unwrap();
        let base = imm.positions[imm.positions.len() / 2];
        let d = density_curve(&imm, &base, &[0.2, 0.3]).unwrap();
        for r in d.ratios {
            assert!((r / std::f64::consts::PI - 1.0).abs() < 0.02, "{r}");
        }
    }
}
