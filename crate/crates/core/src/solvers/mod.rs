//! Rayleigh-quotient evaluation and the sweep solvers: one-site ALS and
//! two-site DMRG.

mod als;
mod dmrg;
mod rayleigh;
mod stats;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::RankProfile;
use crate::tt::TensorTrain;

pub use als::{als_local_solve, als_run, LocalSolve};
pub use dmrg::{default_rank_cap, dmrg_run};
pub use rayleigh::{
    gauge_gradient, rayleigh_gradient, rayleigh_quotient, stationarity_residual, MIN_DENOMINATOR,
};
pub use stats::{
    cluster_energies, restart_statistics, EnergyCluster, RestartStatistics, CLUSTER_TOL,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_sweeps: usize,
    /// Stop when `|dE| <= energy_tol * max(|E|, 1)` over a full sweep.
    pub energy_tol: f64,
    /// ALS also requires the stationarity residual to drop below this.
    pub residual_tol: f64,
    /// DMRG bond caps; `None` means the maximal profile.
    pub rank_cap: Option<RankProfile>,
    /// DMRG keeps singular values above `svd_trunc_tol * sigma_max`.
    pub svd_trunc_tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_sweeps: 500,
            energy_tol: 1e-10,
            residual_tol: 1e-9,
            rank_cap: None,
            svd_trunc_tol: 1e-12,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidParameters(
                "max_sweeps must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("energy_tol", self.energy_tol),
            ("residual_tol", self.residual_tol),
            ("svd_trunc_tol", self.svd_trunc_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameters(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SolverConfig {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    /// Energy after every half-sweep.
    pub energies: Vec<f64>,
    /// Energy after every local update.
    pub local_energies: Vec<f64>,
    pub train: TensorTrain<f64>,
    pub energy: f64,
    pub converged: bool,
    pub sweeps: usize,
    pub stationarity: f64,
    pub elapsed: Duration,
}

fn energy_settled(prev: f64, cur: f64, tol: f64) -> bool {
    (prev - cur).abs() <= tol * cur.abs().max(1.0)
}
