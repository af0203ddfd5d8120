use serde::{Deserialize, Serialize};
use ttrr::critical::{
    base_fiber, enumerate_from, CriticalSystem, EnumerateConfig, MonodromyResult,
};
use ttrr::solvers::{restart_statistics, SolverConfig};
use ttrr::{Hamiltonian, RankProfile, Shape};

/// Cluster values within this relative distance of a local minimum match it.
pub const MATCH_TOL: f64 = 1e-5;
/// Ambient dimensions above this skip enumeration.
pub const ENUMERATION_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub value: f64,
    pub count: usize,
    /// Energy of the closest enumerated local minimum within tolerance.
    pub matched_minimum: Option<f64>,
    pub deviation: Option<f64>,
    pub is_global: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub k: Vec<usize>,
    pub r: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub eig_min: f64,
    pub eig_max: f64,
    pub clusters: Vec<ClusterRow>,
    pub unconverged: usize,
    /// Enumerated local minimum energies, ascending.
    pub local_minima: Option<Vec<f64>>,
    pub global_minimum: Option<f64>,
    pub critical_points: Option<usize>,
    pub notice: Option<String>,
}

impl StatsReport {
    pub fn all_matched(&self) -> bool {
        self.local_minima.is_some() && self.clusters.iter().all(|c| c.matched_minimum.is_some())
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "eigenvalues of H: min {:.8} max {:.8}\n{:>16} {:>8} {:>16} {:>7}\n",
            self.eig_min, self.eig_max, "value", "count", "local minimum", "global"
        );
        for c in &self.clusters {
            let m = c
                .matched_minimum
                .map_or("-".to_string(), |v| format!("{v:.8}"));
            out += &format!(
                "{:>16.8} {:>8} {:>16} {:>7}\n",
                c.value, c.count, m, c.is_global
            );
        }
        if let Some(n) = &self.notice {
            out += &format!("note: {n}\n");
        }
        out
    }
}

/// Restarted ALS statistics, matched against the enumerated local minima
/// when enumeration is feasible. A precomputed base fiber for `(k, r)` is
/// reused when given.
pub fn stats_report(
    h: &Hamiltonian,
    k: &Shape,
    r: &RankProfile,
    trials: usize,
    seed: u64,
    solver: &SolverConfig,
    base: Option<&(CriticalSystem, MonodromyResult)>,
) -> ttrr::Result<StatsReport> {
    let ev = h.eigenvalues();
    let stats = restart_statistics(h, k, r, trials, &solver.with_seed(seed))?;

    let enum_cfg = EnumerateConfig {
        seed,
        ..EnumerateConfig::default()
    };
    let mut notice = None;
    let enumeration = if let Some((sys, fiber)) = base {
        Some(enumerate_from(h, sys, fiber, &enum_cfg))
    } else if k.size() <= ENUMERATION_CAP {
        Some(
            base_fiber(k, r, &enum_cfg)
                .and_then(|(sys, fiber)| enumerate_from(h, &sys, &fiber, &enum_cfg)),
        )
    } else {
        notice = Some(format!(
            "ambient dimension {} exceeds the enumeration cap; clusters only",
            k.size()
        ));
        None
    };
    let (minima, global, count) = match enumeration {
        Some(Ok(e)) => {
            if !e.complete {
                notice = Some(format!(
                    "enumeration incomplete: {} critical points found",
                    e.count
                ));
            }
            let mut m: Vec<f64> = e.local_minima().iter().map(|s| s.energy()).collect();
            m.sort_by(f64::total_cmp);
            (Some(m), e.minimum().map(|s| s.energy()), Some(e.count))
        }
        Some(Err(err)) => {
            notice = Some(format!("enumeration failed ({err}); clusters only"));
            (None, None, None)
        }
        None => (None, None, None),
    };

    let clusters = stats
        .clusters
        .iter()
        .map(|c| {
            let best = minima.as_ref().and_then(|m| {
                m.iter()
                    .map(|&v| (v, (v - c.value).abs()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
            });
            let matched = best.filter(|&(v, d)| d <= MATCH_TOL * v.abs().max(1.0));
            ClusterRow {
                value: c.value,
                count: c.count,
                matched_minimum: matched.map(|m| m.0),
                deviation: best.map(|m| m.1),
                is_global: global
                    .is_some_and(|g| (g - c.value).abs() <= MATCH_TOL * g.abs().max(1.0)),
            }
        })
        .collect();
    Ok(StatsReport {
        k: k.dims().to_vec(),
        r: r.inner().to_vec(),
        trials,
        seed,
        eig_min: ev[0],
        eig_max: ev[ev.len() - 1],
        clusters,
        unconverged: stats.unconverged,
        local_minima: minima,
        global_minimum: global,
        critical_points: count,
        notice,
    })
}
