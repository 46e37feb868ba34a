use legendrian::corpus::{self, Family};
use legendrian::descent::{descend as run_descent, hamiltonian_gradient_norm, DescentOptions, StageReport};
use legendrian::energy::{energy as energy_of, EnergyBreakdown};
use legendrian::heisenberg::{legendrian_lift, LagrangianSampleGrid, LiftedGrid};
use legendrian::identities::{run_identity_suite, CheckResult, IdentityOptions};
use legendrian::immersion::{DiscreteImmersion, MeshFile};
use legendrian::monotonicity::{
    density_curve, gauge_fields, monotonicity_balance, quasi_monotonicity, theta0_estimate, Kernel, Side, Theta0,
    CUTOFF_DESCRIPTION,
};
use legendrian::refinement::{clifford_row, decay, CliffordRow, Decay};
use legendrian::{Error, Point};
use serde::Serialize;

use crate::config::{GridSource, MeshSource};
use crate::output::{Context, Failure};

fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

/// The configured surface, at `resolution` when it comes from the corpus.
fn load_mesh(source: &MeshSource, resolution: Option<usize>) -> Result<(DiscreteImmersion, usize), Failure> {
    match source {
        MeshSource::Corpus(g) => {
            let mut g = g.clone();
            if let Some(n) = resolution {
                g.resolution = n;
            }
            Ok((g.generate()?, g.resolution))
        }
        MeshSource::File(path) => {
            let file: MeshFile = read_json(path)?;
            let imm = DiscreteImmersion::from_file(&file)?;
            let n = imm.mesh.n_vertices();
            Ok((imm, n))
        }
    }
}

fn ladder_meshes(ctx: &Context, source: &MeshSource) -> Vec<usize> {
    match source {
        MeshSource::Corpus(_) => ctx.config.ladder(),
        MeshSource::File(_) => vec![0],
    }
}

fn base_vertex(imm: &DiscreteImmersion, requested: Option<usize>) -> Result<usize, Failure> {
    let nv = imm.mesh.n_vertices();
    match requested {
        Some(v) if v >= nv => Err(Failure::Validation(format!("base vertex {v} out of range (mesh has {nv})"))),
        Some(v) => Ok(v),
        None => Ok(nv / (2 * imm.mesh.n_components())),
    }
}

#[derive(Serialize)]
struct IdentityReport<'a> {
    passed: bool,
    failed: Vec<&'a str>,
    checks: &'a [CheckResult],
}

pub fn verify_identities(ctx: &Context) -> Result<(), Failure> {
    let c = &ctx.config.identities;
    let opts = IdentityOptions {
        seed: ctx.config.seed,
        samples: c.samples,
        hamiltonians: c.hamiltonians,
        quasi_triples: c.quasi_triples,
        inject_jh_bug: c.inject_jh_bug,
    };
    let checks = run_identity_suite(&opts);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    ctx.write_report(
        "identities.json",
        &IdentityReport {
            passed: failed.is_empty(),
            failed: failed.clone(),
            checks: &checks,
        },
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("identity checks failed: {}", failed.join(", "))))
    }
}

#[derive(Serialize)]
struct LiftReport {
    periods: [Option<f64>; 2],
    max_loop_residual: f64,
    tol_lag: f64,
    phi_range: [f64; 2],
    lift: LiftedGrid,
    #[serde(skip_serializing_if = "Option::is_none")]
    mesh: Option<MeshFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mesh_note: Option<String>,
}

pub fn lift(ctx: &Context) -> Result<(), Failure> {
    let c = &ctx.config.lift;
    let grid = match &c.grid {
        GridSource::File(path) => read_json::<LagrangianSampleGrid>(path)?,
        GridSource::Clifford(n) => corpus::clifford_grid(*n, 0.0),
    };
    let lifted = legendrian_lift(&grid, c.base_value, c.tol_lag)?;
    let (mesh, mesh_note) = match corpus::immersion_from_lift(&lifted) {
        Ok(imm) => (Some(imm.to_file()), None),
        Err(e) => (None, Some(format!("not triangulated: {e}"))),
    };
    let lo = lifted.phi.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lifted.phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ctx.write_report(
        "lift.json",
        &LiftReport {
            periods: lifted.periods,
            max_loop_residual: lifted.max_loop_residual,
            tol_lag: lifted.tol_lag,
            phi_range: [lo, hi],
            lift: lifted,
            mesh,
            mesh_note,
        },
    )
}

#[derive(Serialize)]
struct EnergyReport {
    resolution: usize,
    energy: EnergyBreakdown,
    hamiltonian_grad_norm: Option<f64>,
    max_leg_residual: f64,
    l2_leg_residual: f64,
    legendrian_tol: f64,
    max_edge_length: f64,
}

pub fn energy(ctx: &Context) -> Result<(), Failure> {
    let source = ctx.config.mesh_or(Family::PerturbedClifford, 32, 1e-2, 1.0);
    let (imm, resolution) = load_mesh(&source, None)?;
    let eps = ctx.config.energy.epsilon;
    if !(eps >= 0.0) {
        return Err(Failure::Validation(format!("epsilon {eps} must be non-negative")));
    }
    let e = energy_of(&imm, eps)?;
    let g = match hamiltonian_gradient_norm(&imm, eps, Default::default()) {
        Ok(g) => Some(g),
        Err(Error::MissingUv) => None,
        Err(e) => return Err(e.into()),
    };
    let res = imm.legendrian_residual();
    ctx.write_report(
        "energy.json",
        &EnergyReport {
            resolution,
            energy: e,
            hamiltonian_grad_norm: g,
            max_leg_residual: res.max,
            l2_leg_residual: res.l2,
            legendrian_tol: imm.legendrian_tol,
            max_edge_length: imm.max_edge_length(),
        },
    )
}

#[derive(Serialize)]
struct FinalRow {
    area: f64,
    penalty: f64,
    total: f64,
    grad_norm: f64,
    max_leg_residual: f64,
}

#[derive(Serialize)]
struct DescentSummary<'a> {
    resolution: usize,
    options: &'a DescentOptions,
    legendrian_tol: f64,
    accepted_steps: usize,
    stages: &'a [StageReport],
    #[serde(rename = "final")]
    last: FinalRow,
    abort: &'a Option<String>,
    entropy_stop: bool,
}

pub fn descend(ctx: &Context) -> Result<(), Failure> {
    let source = ctx.config.mesh_or(Family::PerturbedClifford, 32, 1e-2, 1.0);
    let (imm, resolution) = load_mesh(&source, None)?;
    let mut opts = ctx.config.descent.clone().unwrap_or_default();
    opts.seed = ctx.config.seed;
    opts.validate()?;
    let report = run_descent(&imm, &opts)?;
    ctx.write_jsonl("trajectory.jsonl", &report.steps)?;
    ctx.write_json("final_mesh.json", &report.final_immersion.to_file())?;
    let stage = report.stages.last().expect("descent runs at least one stage");
    ctx.write_report(
        "descent.json",
        &DescentSummary {
            resolution,
            options: &opts,
            legendrian_tol: imm.legendrian_tol,
            accepted_steps: report.steps.len(),
            stages: &report.stages,
            last: FinalRow {
                area: stage.energy.area,
                penalty: stage.energy.penalty,
                total: stage.energy.total,
                grad_norm: stage.grad_norm,
                max_leg_residual: report.final_immersion.legendrian_residual().max,
            },
            abort: &report.abort,
            entropy_stop: report.entropy_stop,
        },
    )?;
    match report.abort {
        Some(reason) => Err(Failure::Abort(reason)),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct TermRow<'a> {
    resolution: usize,
    term: &'a str,
    side: Side,
    value: f64,
}

#[derive(Serialize)]
struct MonotonicityRow {
    resolution: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
    base: Option<Point>,
    residual: Option<f64>,
    lhs: Option<f64>,
    rhs: Option<f64>,
    annulus_faces: Option<usize>,
    structure_constant: Option<f64>,
    horizontal_constant: Option<f64>,
    perpendicular_constant: Option<f64>,
    arctan_cap_ratio: Option<f64>,
}

#[derive(Serialize)]
struct MonotonicitySummary<'a> {
    cutoff: &'static str,
    r: f64,
    eta: f64,
    gauge_window: [f64; 2],
    rows: &'a [MonotonicityRow],
    residual_decay: Option<Decay>,
}

fn skipped(resolution: usize, reason: String) -> MonotonicityRow {
    MonotonicityRow {
        resolution,
        skipped: Some(reason),
        base: None,
        residual: None,
        lhs: None,
        rhs: None,
        annulus_faces: None,
        structure_constant: None,
        horizontal_constant: None,
        perpendicular_constant: None,
        arctan_cap_ratio: None,
    }
}

pub fn monotonicity(ctx: &Context) -> Result<(), Failure> {
    let c = &ctx.config.monotonicity;
    let source = ctx.config.mesh_or(Family::FlatPatch, 64, 0.0, 1.6);
    let mut rows = Vec::new();
    let mut terms = Vec::new();
    let mut reports = Vec::new();
    for n in ladder_meshes(ctx, &source) {
        let (imm, resolution) = load_mesh(&source, Some(n).filter(|&n| n > 0))?;
        let base = imm.positions[base_vertex(&imm, c.base_vertex)?];
        let report = match monotonicity_balance(&imm, &base, c.r, c.eta) {
            Ok(r) => r,
            Err(e @ Error::Resolution(_)) => {
                rows.push(skipped(resolution, e.to_string()));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let gauge = gauge_fields(&imm, &base)?;
        let [lo, hi] = c.gauge_window;
        for t in &report.terms {
            terms.push((resolution, t.name.clone(), t.side, t.value));
        }
        rows.push(MonotonicityRow {
            resolution,
            skipped: None,
            base: Some(base),
            residual: Some(report.residual),
            lhs: Some(report.lhs),
            rhs: Some(report.rhs),
            annulus_faces: Some(report.annulus_faces),
            structure_constant: Some(gauge.fitted_constant(lo, hi, 2, |f| f.structure_defect)),
            horizontal_constant: Some(gauge.fitted_constant(lo, hi, 2, |f| f.horizontal_defect)),
            perpendicular_constant: Some(gauge.fitted_constant(lo, hi, 1, |f| f.perpendicular_defect)),
            arctan_cap_ratio: Some(gauge.max_arctan_cap_ratio()),
        });
        reports.push((resolution, report.residual));
    }
    let term_rows: Vec<TermRow> = terms
        .iter()
        .map(|(n, name, side, value)| TermRow {
            resolution: *n,
            term: name,
            side: *side,
            value: *value,
        })
        .collect();
    ctx.write_csv("monotonicity_terms.csv", &term_rows)?;
    let residual_decay = (reports.len() >= 2).then(|| {
        let (ns, vs): (Vec<usize>, Vec<f64>) = reports.iter().copied().unzip();
        decay(&ns, &vs, 1.0)
    });
    ctx.write_report(
        "monotonicity.json",
        &MonotonicitySummary {
            cutoff: CUTOFF_DESCRIPTION,
            r: c.r,
            eta: c.eta,
            gauge_window: c.gauge_window,
            rows: &rows,
            residual_decay,
        },
    )
}

#[derive(Serialize)]
struct DensityRow {
    resolution: usize,
    s: f64,
    ratio: f64,
    n_components: usize,
}

#[derive(Serialize)]
struct ThetaRow {
    resolution: usize,
    kernel_lo: f64,
    kernel_hi: f64,
    eta: f64,
    theta0: f64,
    multiplicity: i64,
    distance_to_integer: f64,
}

#[derive(Serialize)]
struct DensityLevel {
    resolution: usize,
    base: Point,
    excluded: Vec<f64>,
    upper_constant: Option<f64>,
    lower_constant: Option<f64>,
    spike: Option<f64>,
}

#[derive(Serialize)]
struct DensitySummary<'a> {
    cutoff: &'static str,
    levels: &'a [DensityLevel],
    /// max / min - 1 of the upper constants over the levels where it is defined.
    upper_constant_spread: Option<f64>,
}

pub fn density(ctx: &Context) -> Result<(), Failure> {
    let c = &ctx.config.density;
    let kernels = c
        .kernels
        .iter()
        .map(|[lo, hi]| Kernel::new(*lo, *hi))
        .collect::<Result<Vec<_>, _>>()?;
    if kernels.is_empty() {
        return Err(Failure::Validation("at least one kernel is required".into()));
    }
    let source = ctx.config.mesh_or(Family::CliffordLift, 64, 0.0, 1.0);
    let mut curve_rows = Vec::new();
    let mut theta_rows = Vec::new();
    let mut levels = Vec::new();
    for n in ladder_meshes(ctx, &source) {
        let (imm, resolution) = load_mesh(&source, Some(n).filter(|&n| n > 0))?;
        let base = imm.positions[base_vertex(&imm, c.base_vertex)?];
        let curve = density_curve(&imm, &base, &c.radii)?;
        for ((s, q), k) in curve.radii.iter().zip(&curve.ratios).zip(&curve.components) {
            curve_rows.push(DensityRow {
                resolution,
                s: *s,
                ratio: *q,
                n_components: *k,
            });
        }
        let thetas: Vec<Theta0> = kernels
            .iter()
            .map(|k| theta0_estimate(&imm, &base, k))
            .collect::<Result<_, _>>()?;
        for (k, t) in kernels.iter().zip(&thetas) {
            theta_rows.push(ThetaRow {
                resolution,
                kernel_lo: k.lo,
                kernel_hi: k.hi,
                eta: t.eta,
                theta0: t.theta0,
                multiplicity: t.multiplicity,
                distance_to_integer: t.distance_to_integer,
            });
        }
        let quasi = if curve.ratios.is_empty() {
            None
        } else {
            Some(quasi_monotonicity(&imm, &base, &c.radii, thetas[0].theta0)?)
        };
        levels.push(DensityLevel {
            resolution,
            base,
            excluded: curve.excluded,
            upper_constant: quasi.as_ref().map(|q| q.upper_constant).filter(|u| *u > 0.0),
            lower_constant: quasi.as_ref().map(|q| q.lower_constant),
            spike: quasi.as_ref().map(|q| q.spike),
        });
    }
    ctx.write_csv("density.csv", &curve_rows)?;
    ctx.write_csv("theta0.csv", &theta_rows)?;
    let uppers: Vec<f64> = levels.iter().filter_map(|l| l.upper_constant).collect();
    let upper_constant_spread = (uppers.len() >= 2).then(|| {
        let hi = uppers.iter().copied().fold(f64::MIN, f64::max);
        let lo = uppers.iter().copied().fold(f64::MAX, f64::min);
        hi / lo - 1.0
    });
    ctx.write_report(
        "density.json",
        &DensitySummary {
            cutoff: CUTOFF_DESCRIPTION,
            levels: &levels,
            upper_constant_spread,
        },
    )
}

#[derive(Serialize)]
struct CliffordSummary<'a> {
    warp: f64,
    rows: &'a [CliffordRow],
    laplacian_beta: Decay,
    stationarity: Decay,
    hopf: Decay,
    finest_area_error: f64,
    passed: bool,
}

pub fn clifford_demo(ctx: &Context) -> Result<(), Failure> {
    let c = &ctx.config.clifford_demo;
    let ladder = ctx.config.ladder();
    if ladder.len() < 2 {
        return Err(Failure::Validation("the refinement study needs at least two resolutions".into()));
    }
    let rows = ladder
        .iter()
        .map(|&n| clifford_row(n, c.warp, c.bump_radius, c.level))
        .collect::<Result<Vec<_>, _>>()?;
    ctx.write_csv("clifford_demo.csv", &rows)?;
    let col = |f: fn(&CliffordRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let laplacian_beta = decay(&ladder, &col(|r| r.laplacian_beta), c.min_order);
    let stationarity = decay(&ladder, &col(|r| r.stationarity), c.min_order);
    let hopf = decay(&ladder, &col(|r| r.hopf), c.min_order);
    let finest = rows
        .iter()
        .max_by_key(|r| r.resolution)
        .expect("ladder is non-empty")
        .area_error;
    let passed = laplacian_beta.passed && stationarity.passed && hopf.passed && finest.abs() <= c.area_tolerance;
    ctx.write_report(
        "clifford_demo.json",
        &CliffordSummary {
            warp: c.warp,
            rows: &rows,
            laplacian_beta,
            stationarity,
            hopf,
            finest_area_error: finest,
            passed,
        },
    )?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Numerical("Clifford refinement checks failed".into()))
    }
}
