use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{als_run, SolverConfig};
use crate::error::Result;
use crate::hamiltonian::Hamiltonian;
use crate::rng::derive_seed;
use crate::tensor::{RankProfile, Shape};

/// Energies closer than this (relative to `max(|E|, 1)`) share a cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyCluster {
    pub value: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartStatistics {
    pub trials: usize,
    /// Sorted by decreasing count, ties by increasing value.
    pub clusters: Vec<EnergyCluster>,
    pub unconverged: usize,
    pub energies: Vec<f64>,
}

/// Groups sorted energies into runs whose consecutive gaps stay within the
/// tolerance. The result does not depend on input order.
pub fn cluster_energies(energies: &[f64], tol: f64) -> Vec<EnergyCluster> {
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for e in sorted {
        match groups.last_mut() {
            Some(g) if (e - g[g.len() - 1]).abs() <= tol * e.abs().max(1.0) => g.push(e),
            _ => groups.push(vec![e]),
        }
    }
    let mut clusters: Vec<EnergyCluster> = groups
        .into_iter()
        .map(|g| EnergyCluster {
            value: g.iter().sum::<f64>() / g.len() as f64,
            count: g.len(),
        })
        .collect();
    clusters.sort_by(|a, b| b.count.cmp(&a.count).then(a.value.total_cmp(&b.value)));
    clusters
}

/// Independent ALS runs with seeds split from `config.seed`, clustered by
/// final energy.
pub fn restart_statistics(
    h: &Hamiltonian,
    k: &Shape,
    r: &RankProfile,
    trials: usize,
    config: &SolverConfig,
) -> Result<RestartStatistics> {
    let runs: Vec<(f64, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cfg = config.with_seed(derive_seed(config.seed, t as u64));
            als_run(h, k, r, &cfg).map(|res| (res.energy, res.converged))
        })
        .collect::<Result<Vec<_>>>()?;
    let energies: Vec<f64> = runs.iter().map(|r| r.0).collect();
    Ok(RestartStatistics {
        trials,
        clusters: cluster_energies(&energies, CLUSTER_TOL),
        unconverged: runs.iter().filter(|r| !r.1).count(),
        energies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::max_ranks;

    #[test]
    fn clustering_is_order_independent() {
        let e = [1.0, 2.0, 1.0 + 1e-9, 3.0, 2.0 - 1e-8, 1.0];
        let mut rev = e;
        rev.reverse();
        let a = cluster_energies(&e, CLUSTER_TOL);
        assert_eq!(a, cluster_energies(&rev, CLUSTER_TOL));
        assert_eq!(a[0].count, 3);
        assert_eq!(a.iter().map(|c| c.count).sum::<usize>(), 6);
    }

    #[test]
    fn full_rank_single_cluster() {
        let k = Shape::new(vec![2, 2, 2]).unwrap();
        let h = Hamiltonian::random_symmetric(8, 3);
        let stats =
            restart_statistics(&h, &k, &max_ranks(&k), 12, &SolverConfig::default()).unwrap();
        assert_eq!(stats.clusters.len(), 1);
        assert_eq!(stats.clusters[0].count, 12);
        assert!((stats.clusters[0].value - h.eigenvalues()[0]).abs() < 1e-8);
    }

    #[test]
    fn counts_sum_to_trials() {
        let k = Shape::new(vec![2, 2, 2, 2]).unwrap();
        let r = RankProfile::new(vec![1, 2, 1]).unwrap();
        let h = Hamiltonian::random_symmetric(16, 4);
        let stats =
            restart_statistics(&h, &k, &r, 20, &SolverConfig::default().with_seed(1)).unwrap();
        assert_eq!(stats.clusters.iter().map(|c| c.count).sum::<usize>(), 20);
        let again =
            restart_statistics(&h, &k, &r, 20, &SolverConfig::default().with_seed(1)).unwrap();
        assert_eq!(stats, again);
    }
}
