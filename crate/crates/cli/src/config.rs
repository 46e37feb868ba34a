use std::path::PathBuf;

use legendrian::corpus::{CorpusGenerator, Family};
use legendrian::descent::DescentOptions;
use legendrian::identities::IdentityOptions;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution_ladder: Option<Vec<usize>>,
    /// Input surface for energy, descend, monotonicity and density.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshSource>,
    pub identities: IdentitiesConfig,
    pub lift: LiftConfig,
    pub energy: EnergyConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descent: Option<DescentOptions>,
    pub monotonicity: MonotonicityConfig,
    pub density: DensityConfig,
    pub clifford_demo: CliffordDemoConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    Corpus(CorpusGenerator),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub samples: usize,
    pub hamiltonians: usize,
    pub quasi_triples: usize,
    pub inject_jh_bug: bool,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        let d = IdentityOptions::default();
        IdentitiesConfig {
            samples: d.samples,
            hamiltonians: d.hamiltonians,
            quasi_triples: d.quasi_triples,
            inject_jh_bug: d.inject_jh_bug,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSource {
    /// LagrangianSampleGrid JSON file.
    File(PathBuf),
    /// Periodic samples of the Clifford torus.
    Clifford(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftConfig {
    pub grid: GridSource,
    pub base_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_lag: Option<f64>,
}

impl Default for LiftConfig {
    fn default() -> Self {
        LiftConfig {
            grid: GridSource::Clifford(64),
            base_value: 0.0,
            tol_lag: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub epsilon: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig { epsilon: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonotonicityConfig {
    /// Defaults to the middle vertex of the first component.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_vertex: Option<usize>,
    pub r: f64,
    pub eta: f64,
    /// Window of gauge radii for the fitted defect constants.
    pub gauge_window: [f64; 2],
}

impl Default for MonotonicityConfig {
    fn default() -> Self {
        MonotonicityConfig {
            base_vertex: None,
            r: 0.3,
            eta: 0.05,
            gauge_window: [0.05, 0.3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_vertex: Option<usize>,
    pub radii: Vec<f64>,
    /// Supports (lo, hi) of the smoothing kernels for theta_0.
    pub kernels: Vec<[f64; 2]>,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            base_vertex: None,
            radii: (1..=20).map(|k| 0.025 * k as f64).collect(),
            kernels: vec![[0.5, 2.0], [1.0, 3.0]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliffordDemoConfig {
    /// Parameter warp of the lift used for the Lagrangian angle residual.
    pub warp: f64,
    /// Radius of the bump Hamiltonian in the stationarity test.
    pub bump_radius: f64,
    /// Level of the distance function bounding the stationarity domain.
    pub level: f64,
    pub min_order: f64,
    pub area_tolerance: f64,
}

impl Default for CliffordDemoConfig {
    fn default() -> Self {
        CliffordDemoConfig {
            warp: 0.3,
            bump_radius: 0.7,
            level: 1.3,
            min_order: 1.0,
            area_tolerance: 5e-3,
        }
    }
}

impl ExperimentConfig {
    pub fn ladder(&self) -> Vec<usize> {
        self.resolution_ladder.clone().unwrap_or_else(|| vec![16, 32, 64, 128])
    }

    pub fn mesh_or(&self, family: Family, resolution: usize, amplitude: f64, size: f64) -> MeshSource {
        self.mesh.clone().unwrap_or(MeshSource::Corpus(CorpusGenerator {
            family,
            resolution,
            amplitude,
            seed: self.seed,
            size,
        }))
    }
}
