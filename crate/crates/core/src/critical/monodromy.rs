use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::system::{to_complex, CMatrix, CVector, CriticalSystem, C64};
use super::tracker::{track_path, PathFailure, TrackerConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::rng::{self, derive_seed};
use crate::solvers::{als_run, SolverConfig};

pub const DEDUP_TOL: f64 = 1e-6;

/// Known solutions of one system at one parameter point, stored as one
/// representative per antipodal pair `{psi, -psi}`.
#[derive(Clone, Debug)]
pub struct SolutionSet {
    reps: Vec<CVector>,
    psis: Vec<Vec<C64>>,
    lambdas: Vec<C64>,
    pub dedup_tol: f64,
}

fn hermitian_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl SolutionSet {
    pub fn new(dedup_tol: f64) -> Self {
        SolutionSet {
            reps: Vec::new(),
            psis: Vec::new(),
            lambdas: Vec::new(),
            dedup_tol,
        }
    }

    /// Index of a stored pair matching `psi` or `-psi`.
    pub fn find(&self, psi: &[C64], lambda: C64) -> Option<usize> {
        let scale = hermitian_norm(psi).max(1.0);
        (0..self.reps.len()).find(|&i| {
            if (self.lambdas[i] - lambda).norm() > 1e-4 * lambda.norm().max(1.0) {
                return false;
            }
            let q = &self.psis[i];
            let minus: f64 = q
                .iter()
                .zip(psi)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let plus: f64 = q
                .iter()
                .zip(psi)
                .map(|(a, b)| (a + b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            minus.min(plus) <= self.dedup_tol * scale
        })
    }

    /// Inserts unless a duplicate is present; returns whether it was new.
    pub fn insert(&mut self, sys: &CriticalSystem, z: CVector) -> bool {
        let psi = sys.psi(&z).into_data();
        let lambda = sys.lambda(&z);
        if self.find(&psi, lambda).is_some() {
            return false;
        }
        self.reps.push(z);
        self.psis.push(psi);
        self.lambdas.push(lambda);
        true
    }

    pub fn representatives(&self) -> &[CVector] {
        &self.reps
    }

    /// Number of stored sphere solutions, counting both members of a pair.
    pub fn len(&self) -> usize {
        2 * self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Number of antipodal pairs: the critical point count on the variety.
    pub fn pair_count(&self) -> usize {
        self.reps.len()
    }

    /// Every sphere solution: each representative followed by its antipode.
    pub fn solutions(&self, sys: &CriticalSystem) -> Vec<CVector> {
        self.reps
            .iter()
            .flat_map(|z| [z.clone(), sys.antipode(z)])
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyConfig {
    pub tracker: TrackerConfig,
    pub stall_loops: usize,
    pub max_loops: usize,
    /// Stop once this many sphere solutions are known.
    pub target: Option<usize>,
    pub budget: Option<Duration>,
    pub dedup_tol: f64,
    pub seed: u64,
}

impl Default for MonodromyConfig {
    fn default() -> Self {
        MonodromyConfig {
            tracker: TrackerConfig::default(),
            stall_loops: 20,
            max_loops: 1000,
            target: None,
            budget: None,
            dedup_tol: DEDUP_TOL,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetReached,
    Stalled,
    MaxLoops,
    BudgetExceeded,
}

#[derive(Clone, Debug)]
pub struct MonodromyResult {
    pub set: SolutionSet,
    pub h0: CMatrix,
    pub stop: StopReason,
    pub loops: usize,
    pub path_failures: usize,
    pub elapsed: Duration,
}

/// Generic complex symmetric base point for a seed.
pub fn base_point(n: usize, seed: u64) -> CMatrix {
    rng::complex_symmetric(n, &mut rng::seeded(derive_seed(seed, 0xBA5E)))
}

/// Start solutions at `h0`: ALS on seeded real matrices, polished on the
/// Lagrange system, then carried to `h0` by a gamma-trick homotopy.
pub fn find_seeds(
    sys: &CriticalSystem,
    h0: &CMatrix,
    seed: u64,
    tracker: &TrackerConfig,
) -> Result<Vec<CVector>> {
    let n = sys.ambient_dim();
    for attempt in 0..10u64 {
        let s = derive_seed(seed, 100 + attempt);
        let h = Hamiltonian::random_symmetric(n, s);
        let Ok(run) = als_run(
            &h,
            sys.shape(),
            sys.ranks(),
            &SolverConfig::default().with_seed(s),
        ) else {
            continue;
        };
        let Ok(g) = run.train.to_gauged() else {
            continue;
        };
        let norm = g.decompress().norm();
        if norm == 0.0 {
            continue;
        }
        // psi is linear in X_n: rescale the last core's parameters.
        let mut x: Vec<C64> = g.params().iter().map(|&v| C64::new(v, 0.0)).collect();
        for p in sys.layout().core_range(sys.shape().order() - 1) {
            x[p] /= norm;
        }
        let hc = to_complex(h.matrix());
        let (z, res) = sys.newton(&sys.point(&x, C64::new(run.energy, 0.0)), &hc, 20, 1e-12);
        if !(res < 1e-8) {
            continue;
        }
        let gamma = rng::unit_complex(&mut rng::seeded(derive_seed(s, 1)));
        if let Ok(t) = track_path(sys, &z, &hc, h0, gamma, tracker) {
            return Ok(vec![t.z]);
        }
    }
    Err(Error::NoSeed)
}

fn track_all(
    sys: &CriticalSystem,
    starts: &[CVector],
    from: &CMatrix,
    to: &CMatrix,
    gamma: C64,
    cfg: &TrackerConfig,
) -> Vec<std::result::Result<CVector, PathFailure>> {
    starts
        .par_iter()
        .map(|z| track_path(sys, z, from, to, gamma, cfg).map(|t| t.z))
        .collect()
}

/// Tracks the known solutions around random triangle loops based at `h0`,
/// collecting new endpoints until the target count, a stall, the loop cap
/// or the time budget stops the search.
pub fn monodromy_solve(
    sys: &CriticalSystem,
    h0: &CMatrix,
    seeds: &[CVector],
    config: &MonodromyConfig,
) -> Result<MonodromyResult> {
    let start = Instant::now();
    let mut set = SolutionSet::new(config.dedup_tol);
    for z in seeds {
        let (z, res) = sys.newton(z, h0, 8, config.tracker.polish_tol);
        if res < config.tracker.success_residual {
            set.insert(sys, z);
        }
    }
    if set.is_empty() {
        return Err(Error::NoSeed);
    }
    let n = sys.ambient_dim();
    let mut stall = 0;
    let mut loops = 0;
    let mut failures = 0;
    let stop = loop {
        if config.target.is_some_and(|t| set.len() >= t) {
            break StopReason::TargetReached;
        }
        if stall >= config.stall_loops {
            break StopReason::Stalled;
        }
        if loops >= config.max_loops {
            break StopReason::MaxLoops;
        }
        if config.budget.is_some_and(|b| start.elapsed() >= b) {
            break StopReason::BudgetExceeded;
        }
        let mut g = rng::seeded(derive_seed(config.seed, loops as u64 + 1));
        let h1 = rng::complex_symmetric(n, &mut g);
        let h2 = rng::complex_symmetric(n, &mut g);
        let gammas = [
            rng::unit_complex(&mut g),
            rng::unit_complex(&mut g),
            rng::unit_complex(&mut g),
        ];
        loops += 1;

        let before = set.pair_count();
        let mut current: Vec<CVector> = set.representatives().to_vec();
        for (leg, (a, b)) in [(h0, &h1), (&h1, &h2), (&h2, h0)].into_iter().enumerate() {
            let out = track_all(sys, &current, a, b, gammas[leg], &config.tracker);
            failures += out.iter().filter(|r| r.is_err()).count();
            current = out.into_iter().filter_map(|r| r.ok()).collect();
        }
        for z in current {
            set.insert(sys, z);
        }
        if set.pair_count() > before {
            stall = 0;
        } else {
            stall += 1;
        }
    };
    Ok(MonodromyResult {
        set,
        h0: h0.clone(),
        stop,
        loops,
        path_failures: failures,
        elapsed: start.elapsed(),
    })
}

/// Per-path outcome of a parameter homotopy between two fibers.
#[derive(Clone, Debug)]
pub struct Transfer {
    pub endpoints: Vec<std::result::Result<CVector, PathFailure>>,
    /// Distinct endpoints, one per antipodal pair.
    pub set: SolutionSet,
    /// Paths whose endpoint coincided with another path's after all retries.
    pub collisions: usize,
}

impl Transfer {
    pub fn failures(&self) -> Vec<(usize, PathFailure)> {
        self.endpoints
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().err().map(|e| (i, *e)))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.failures().is_empty() && self.collisions == 0
    }
}

/// Tracks every representative from `from` to `to`. Paths that fail or
/// land on a solution reached by another path are retracked with tighter
/// steps.
pub fn transfer_solutions(
    sys: &CriticalSystem,
    set: &SolutionSet,
    from: &CMatrix,
    to: &CMatrix,
    gamma: C64,
    tracker: &TrackerConfig,
) -> Transfer {
    let starts = set.representatives();
    let mut endpoints = track_all(sys, starts, from, to, gamma, tracker);
    let mut collisions = 0;
    for factor in [4.0, 16.0, 0.0] {
        let groups = collision_groups(sys, &endpoints, set.dedup_tol);
        let failed = endpoints
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_err())
            .map(|(i, _)| i);
        let mut retry: Vec<usize> = groups.iter().flatten().copied().chain(failed).collect();
        if retry.is_empty() {
            break;
        }
        if factor == 0.0 {
            collisions = groups.iter().map(|g| g.len() - 1).sum();
            break;
        }
        retry.sort_unstable();
        let cfg = tracker.tightened(factor);
        let again: Vec<_> = retry
            .par_iter()
            .map(|&i| track_path(sys, &starts[i], from, to, gamma, &cfg).map(|t| t.z))
            .collect();
        for (i, r) in retry.into_iter().zip(again) {
            endpoints[i] = r;
        }
    }
    let mut out = SolutionSet::new(set.dedup_tol);
    for z in endpoints.iter().flatten() {
        out.insert(sys, z.clone());
    }
    Transfer {
        endpoints,
        set: out,
        collisions,
    }
}

fn collision_groups(
    sys: &CriticalSystem,
    endpoints: &[std::result::Result<CVector, PathFailure>],
    tol: f64,
) -> Vec<Vec<usize>> {
    let mut seen = SolutionSet::new(tol);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    for (i, r) in endpoints.iter().enumerate() {
        let Ok(z) = r else { continue };
        let psi = sys.psi(z).into_data();
        match seen.find(&psi, sys.lambda(z)) {
            Some(j) => groups[owner[j]].push(i),
            None => {
                seen.insert(sys, z.clone());
                owner.push(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups.into_iter().filter(|g| g.len() > 1).collect()
}

/// Count reported by a monodromy run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RrDegreeReport {
    pub k: Vec<usize>,
    pub r: Vec<usize>,
    pub seed: u64,
    /// Critical points found (pairs of sphere solutions).
    pub count: usize,
    pub sphere_solutions: usize,
    pub stop: StopReason,
    pub loops: usize,
    pub path_failures: usize,
    /// `true` unless the stop reason leaves the count a lower bound only.
    pub complete: bool,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Monodromy count at a seeded generic parameter point.
pub fn rr_degree_count(
    sys: &CriticalSystem,
    seed: u64,
    config: &MonodromyConfig,
) -> Result<(RrDegreeReport, MonodromyResult)> {
    let h0 = base_point(sys.ambient_dim(), seed);
    let seeds = find_seeds(sys, &h0, seed, &config.tracker)?;
    let cfg = MonodromyConfig {
        seed: derive_seed(seed, 7),
        ..config.clone()
    };
    let res = monodromy_solve(sys, &h0, &seeds, &cfg)?;
    let report = RrDegreeReport {
        k: sys.shape().dims().to_vec(),
        r: sys.ranks().inner().to_vec(),
        seed,
        count: res.set.pair_count(),
        sphere_solutions: res.set.len(),
        stop: res.stop,
        loops: res.loops,
        path_failures: res.path_failures,
        complete: matches!(res.stop, StopReason::TargetReached | StopReason::Stalled),
        elapsed: res.elapsed,
    };
    Ok((report, res))
}

pub fn real_to_complex(h: &Hamiltonian) -> CMatrix {
    to_complex(h.matrix())
}
