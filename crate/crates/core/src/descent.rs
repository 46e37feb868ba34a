//! Hamiltonian descent of E_eps along a decreasing schedule of eps, with the entropy monitor.

use serde::{Deserialize, Serialize};

use crate::curvature::cotan_weights;
use crate::energy::{energy, energy_gradient, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::flow::{flow_step, NodalHamiltonian};
use crate::hamiltonian::ReebConvention;
use crate::immersion::DiscreteImmersion;
use crate::linalg::conjugate_gradient;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentOptions {
    pub epsilon_schedule: Vec<f64>,
    #[serde(default = "default_tol_scale")]
    pub tol_scale: f64,
    #[serde(default = "default_tau_init")]
    pub tau_init: f64,
    #[serde(default = "default_tau_min")]
    pub tau_min: f64,
    #[serde(default = "default_armijo")]
    pub armijo: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reeb_convention: ReebConvention,
}

fn default_tol_scale() -> f64 {
    1e-3
}
fn default_tau_init() -> f64 {
    1.0
}
fn default_tau_min() -> f64 {
    1e-10
}
fn default_armijo() -> f64 {
    1e-4
}
fn default_max_iters() -> usize {
    200
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            epsilon_schedule: vec![0.2],
            tol_scale: default_tol_scale(),
            tau_init: default_tau_init(),
            tau_min: default_tau_min(),
            armijo: default_armijo(),
            max_iters: default_max_iters(),
            seed: 0,
            reeb_convention: ReebConvention::default(),
        }
    }
}

impl DescentOptions {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon_schedule.is_empty() {
            return Err(Error::Parameter("empty epsilon schedule".into()));
        }
        if self.epsilon_schedule.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Parameter("epsilon values must be positive".into()));
        }
        if self.epsilon_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Parameter("epsilon schedule must be decreasing".into()));
        }
        if !(self.tau_init > 0.0 && self.tau_min > 0.0 && self.tau_min <= self.tau_init) {
            return Err(Error::Parameter("need 0 < tau_min <= tau_init".into()));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::Parameter("armijo constant must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn stage_tolerance(&self, eps: f64) -> f64 {
        (self.tol_scale * eps * eps).max(1e-8)
    }
}

/// One accepted step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub iter: usize,
    pub epsilon: f64,
    pub tau: f64,
    pub area: f64,
    pub penalty: f64,
    pub total: f64,
    pub grad_norm: f64,
    pub max_leg_residual: f64,
    pub entropy_indicator: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub k: usize,
    pub epsilon: f64,
    pub tolerance: f64,
    /// exp(-eps^-2): reported, never enforced.
    pub almost_critical_target: f64,
    pub iterations: usize,
    pub converged: bool,
    pub initial: EnergyBreakdown,
    pub energy: EnergyBreakdown,
    pub grad_norm: f64,
    pub entropy_indicator: f64,
}

#[derive(Clone, Debug)]
pub struct DescentReport {
    pub steps: Vec<StepRecord>,
    pub stages: Vec<StageReport>,
    pub final_immersion: DiscreteImmersion,
    /// Set when a stage aborted on a step-rejection cascade.
    pub abort: Option<String>,
    /// Set when the schedule stopped on two consecutive entropy increases.
    pub entropy_stop: bool,
}

fn masked_gradient(imm: &DiscreteImmersion, op: &NodalHamiltonian, eps: f64) -> Result<(EnergyBreakdown, Vec<f64>, f64)> {
    let fv = energy_gradient(imm, eps)?;
    let mut g = op.adjoint(imm, &fv.per_vertex);
    for (v, x) in g.iter_mut().enumerate() {
        if imm.mesh.is_boundary_vertex(v) {
            *x = 0.0;
        }
    }
    let norm = g.iter().zip(&op.mass).map(|(x, m)| x * x / m).sum::<f64>().sqrt();
    Ok((fv.energy, g, norm))
}

/// Solves (c K (M^-1 K)^2 + K M^-1 K + M) x = g with K the cotan stiffness, boundary values pinned
/// to zero.
fn sobolev_direction(imm: &DiscreteImmersion, mass: &[f64], g: &[f64], c: f64) -> Result<Vec<f64>> {
    let (w, _) = cotan_weights(imm)?;
    let mesh = &imm.mesh;
    let pinned: Vec<bool> = (0..mesh.n_vertices()).map(|v| mesh.is_boundary_vertex(v)).collect();
    let stiffness = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (e, we) in mesh.edges().iter().zip(&w) {
            let d = we * (x[e.v[1]] - x[e.v[0]]);
            y[e.v[1]] += d;
            y[e.v[0]] -= d;
        }
        y
    };
    let apply = |x: &[f64]| -> Vec<f64> {
        let x: Vec<f64> = x.iter().zip(&pinned).map(|(v, p)| if *p { 0.0 } else { *v }).collect();
        let kx: Vec<f64> = stiffness(&x).iter().zip(mass).map(|(v, m)| v / m).collect();
        let mut y = stiffness(&kx);
        if c > 0.0 {
            let kkx: Vec<f64> = y.iter().zip(mass).map(|(v, m)| v / m).collect();
            for (yi, z) in y.iter_mut().zip(stiffness(&kkx)) {
                *yi += c * z;
            }
        }
        for i in 0..y.len() {
            y[i] = if pinned[i] { 0.0 } else { y[i] + mass[i] * x[i] };
        }
        y
    };
    Ok(conjugate_gradient(apply, g, 1e-10, 10 * g.len() + 100))
}

/// Gradient norm of E_eps restricted to Hamiltonian deformations, in the lumped mass metric.
pub fn hamiltonian_gradient_norm(imm: &DiscreteImmersion, eps: f64, conv: ReebConvention) -> Result<f64> {
    let op = NodalHamiltonian::new(imm, conv)?;
    Ok(masked_gradient(imm, &op, eps)?.2)
}

pub fn descend(initial: &DiscreteImmersion, opts: &DescentOptions) -> Result<DescentReport> {
    opts.validate()?;
    let mut cur = initial.clone();
    let mut steps = Vec::new();
    let mut stages: Vec<StageReport> = Vec::new();
    let mut abort = None;
    let mut increases = 0;
    let mut entropy_stop = false;
    for (k, &eps) in opts.epsilon_schedule.iter().enumerate() {
        let tol = opts.stage_tolerance(eps);
        let initial_energy = energy(&cur, eps)?;
        let mut tau = opts.tau_init;
        let mut iterations = 0;
        let mut converged = false;
        let (mut e, mut grad_norm);
        loop {
            let op = NodalHamiltonian::new(&cur, opts.reeb_convention)?;
            let (en, g, norm) = masked_gradient(&cur, &op, eps)?;
            e = en;
            grad_norm = norm;
            if grad_norm <= tol {
                converged = true;
                break;
            }
            if iterations >= opts.max_iters {
                break;
            }
            let h: Vec<f64> = sobolev_direction(&cur, &op.mass, &g, 4.0 * eps.powi(4))?.iter().map(|x| -x).collect();
            let slope: f64 = g.iter().zip(&h).map(|(a, b)| a * b).sum();
            let mut w = op.apply(&cur, &h);
            for (v, x) in w.iter_mut().enumerate() {
                if cur.mesh.is_boundary_vertex(v) {
                    *x = nalgebra::zero();
                }
            }
            let mut accepted = None;
            while tau >= opts.tau_min {
                match flow_step(&cur, &w, tau) {
                    Ok(out) => {
                        let en = energy(&out.immersion, eps)?;
                        if en.total <= e.total + opts.armijo * tau * slope {
                            accepted = Some((out, en));
                            break;
                        }
                    }
                    Err(Error::StepRejected { .. }) => {}
                    Err(err) => return Err(err),
                }
                tau *= 0.5;
            }
            match accepted {
                None => {
                    abort = Some(format!(
                        "stage {k}: step size fell below {:.1e} at iteration {iterations} (gradient norm {grad_norm:.3e})",
                        opts.tau_min
                    ));
                    break;
                }
                Some((out, en)) => {
                    iterations += 1;
                    cur = out.immersion;
                    steps.push(StepRecord {
                        k,
                        iter: iterations,
                        epsilon: eps,
                        tau,
                        area: en.area,
                        penalty: en.penalty,
                        total: en.total,
                        grad_norm,
                        max_leg_residual: out.residual_after,
                        entropy_indicator: en.entropy_indicator,
                    });
                    tau = (tau * 2.0).min(opts.tau_init);
                }
            }
        }
        stages.push(StageReport {
            k,
            epsilon: eps,
            tolerance: tol,
            almost_critical_target: (-1.0 / (eps * eps)).exp(),
            iterations,
            converged,
            initial: initial_energy,
            energy: e,
            grad_norm,
            entropy_indicator: e.entropy_indicator,
        });
        if abort.is_some() {
            break;
        }
        if k > 0 {
            if e.entropy_indicator > stages[k - 1].entropy_indicator {
                increases += 1;
            } else {
                increases = 0;
            }
            if increases >= 2 {
                entropy_stop = true;
                break;
            }
        }
    }
    Ok(DescentReport {
        steps,
        stages,
        final_immersion: cur,
        abort,
        entropy_stop,
    })
}
