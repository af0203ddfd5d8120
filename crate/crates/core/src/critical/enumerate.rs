use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::certify::{bw_residual_at, lagrangian_rank_residual};
use super::classify::{classify_point, ExtremumClass};
use super::closed_form::closed_form_for;
use super::monodromy::{
    rr_degree_count, transfer_solutions, MonodromyConfig, MonodromyResult, StopReason, Transfer,
};
use super::system::{to_complex, CVector, CriticalSystem, C64};
use super::tracker::PathFailure;
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::rng::{self, derive_seed};
use crate::solvers::{gauge_gradient, stationarity_residual};
use crate::tensor::{DenseTensor, RankProfile, Shape};
use crate::tt::GaugedTrain;

/// Relative size of imaginary parts below which a solution is real.
pub const REAL_TOL: f64 = 1e-8;
/// Gammas tried before an incomplete transfer is reported.
pub const TRANSFER_ATTEMPTS: u64 = 3;

/// Solutions with imaginary parts up to this size get a real-restricted
/// Newton polish before the reality decision.
pub const BORDERLINE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub lagrange: f64,
    /// `|grad_x R_H| / (|R_H| + 1)` over the gauge parameters.
    pub stationarity: f64,
    /// `None` where the profile is not a Segre configuration.
    pub lagrangian_rank: Option<f64>,
    pub bw: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<C64>,
    pub lambda: C64,
    pub psi: DenseTensor<C64>,
    pub residual: f64,
    pub is_real: bool,
    /// Set for real solutions only.
    pub class: Option<ExtremumClass>,
    pub residuals: Residuals,
}

fn complex_json(v: &[C64]) -> serde_json::Value {
    json!({
        "re": v.iter().map(|z| z.re).collect::<Vec<_>>(),
        "im": v.iter().map(|z| z.im).collect::<Vec<_>>(),
    })
}

impl Solution {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "x": complex_json(&self.x),
            "lambda": {"re": self.lambda.re, "im": self.lambda.im},
            "psi": self.psi.to_json(),
            "real": self.is_real,
            "class": self.class,
            "residuals": self.residuals,
        })
    }

    pub fn energy(&self) -> f64 {
        self.lambda.re
    }

    pub fn real_x(&self) -> Vec<f64> {
        self.x.iter().map(|z| z.re).collect()
    }

    /// Real part of `psi`.
    pub fn real_psi(&self) -> Vec<f64> {
        self.psi.data().iter().map(|z| z.re).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerateConfig {
    pub monodromy: MonodromyConfig,
    pub seed: u64,
    /// Stop monodromy at twice the closed-form count when one is known.
    pub use_closed_form: bool,
}

impl Default for EnumerateConfig {
    fn default() -> Self {
        EnumerateConfig {
            monodromy: MonodromyConfig::default(),
            seed: 0,
            use_closed_form: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    pub k: Vec<usize>,
    pub r: Vec<usize>,
    /// Every sphere solution, antipodal partners adjacent.
    pub solutions: Vec<Solution>,
    /// Critical points on the variety (antipodal pairs).
    pub count: usize,
    pub real_count: usize,
    pub monodromy_count: usize,
    pub stop: StopReason,
    pub failures: Vec<(usize, PathFailure)>,
    pub collisions: usize,
    /// `false` when the count is only a lower bound.
    pub complete: bool,
}

impl Enumeration {
    pub fn real_solutions(&self) -> impl Iterator<Item = &Solution> {
        self.solutions.iter().filter(|s| s.is_real)
    }

    /// Real solutions, one per antipodal pair.
    pub fn real_points(&self) -> impl Iterator<Item = &Solution> {
        self.solutions.iter().step_by(2).filter(|s| s.is_real)
    }

    pub fn minimum(&self) -> Option<&Solution> {
        self.real_points()
            .min_by(|a, b| a.energy().total_cmp(&b.energy()))
    }

    pub fn local_minima(&self) -> Vec<&Solution> {
        self.real_points()
            .filter(|s| s.class == Some(ExtremumClass::Min))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "k": self.k,
            "r": self.r,
            "count": self.count,
            "real_count": self.real_count,
            "monodromy_count": self.monodromy_count,
            "stop": self.stop,
            "complete": self.complete,
            "collisions": self.collisions,
            "failures": self.failures.iter().map(|(i, f)| json!({"path": i, "reason": f.to_string()})).collect::<Vec<_>>(),
            "solutions": self.solutions.iter().map(Solution::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Monodromy at the seeded generic base point for `(k, r)`.
pub fn base_fiber(
    k: &Shape,
    r: &RankProfile,
    config: &EnumerateConfig,
) -> Result<(CriticalSystem, MonodromyResult)> {
    let sys = CriticalSystem::new(k, r)?;
    let mut mono = config.monodromy.clone();
    if config.use_closed_form && mono.target.is_none() {
        if let Some(f) = closed_form_for(sys.shape(), sys.ranks())? {
            mono.target = f
                .rr_degree()
                .ok()
                .and_then(|d| usize::try_from(d).ok())
                .map(|d| 2 * d);
        }
    }
    let (_, res) = rr_degree_count(&sys, config.seed, &mono)?;
    Ok((sys, res))
}

fn max_imag(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.im.abs()))
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Reality decision with a real-restricted polish for borderline points.
fn realify(sys: &CriticalSystem, z: &CVector, h: &Hamiltonian) -> (CVector, bool) {
    let m = sys.param_count();
    let x = &z.as_slice()[..m];
    let scale = 1.0 + norm(x);
    let imag = max_imag(x);
    if imag >= BORDERLINE_TOL * scale {
        return (z.clone(), false);
    }
    let zr = z.map(|v| C64::new(v.re, 0.0));
    let (zp, res) = sys.newton(&zr, &to_complex(h.matrix()), 8, 1e-13);
    if res < 1e-8 && (&zp - z).norm() <= 10.0 * BORDERLINE_TOL * scale {
        (zp, true)
    } else {
        (z.clone(), imag < REAL_TOL * scale)
    }
}

fn build_solution(sys: &CriticalSystem, h: &Hamiltonian, z: &CVector) -> Result<Solution> {
    let (z, is_real) = realify(sys, z, h);
    let m = sys.param_count();
    let hc = to_complex(h.matrix());
    let residual = sys.residual(&z, &hc);
    let g = sys.train(&z);
    let psi = g.decompress();
    let x = z.as_slice()[..m].to_vec();
    let (stationarity, class) = if is_real {
        let xr: Vec<f64> = x.iter().map(|v| v.re).collect();
        let gr = GaugedTrain::from_params(sys.shape(), sys.ranks(), &xr)?;
        let st = stationarity_residual(h, gr.train())?;
        (
            st,
            Some(classify_point(h, sys.shape(), sys.ranks(), &xr)?.class),
        )
    } else {
        let (grad, rq) = gauge_gradient(h, &g)?;
        (norm(&grad) / (rq.norm() + 1.0), None)
    };
    let lagrangian_rank = match lagrangian_rank_residual(h, &psi, sys.ranks()) {
        Ok(v) => Some(v),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let bw = bw_residual_at(h, &g).ok();
    Ok(Solution {
        x,
        lambda: sys.lambda(&z),
        psi,
        residual,
        is_real,
        class,
        residuals: Residuals {
            lagrange: residual,
            stationarity,
            lagrangian_rank,
            bw,
        },
    })
}

fn antipodal(sys: &CriticalSystem, s: &Solution) -> Solution {
    let m = sys.param_count();
    let mut z = CVector::from_column_slice(&s.x).push(s.lambda);
    z = sys.antipode(&z);
    Solution {
        x: z.as_slice()[..m].to_vec(),
        psi: s.psi.scale(C64::new(-1.0, 0.0)),
        ..s.clone()
    }
}

/// Carries the base fiber to the real matrix `h` and certifies, classifies
/// and pairs every endpoint.
pub fn enumerate_from(
    h: &Hamiltonian,
    sys: &CriticalSystem,
    base: &MonodromyResult,
    config: &EnumerateConfig,
) -> Result<Enumeration> {
    if h.dim() != sys.ambient_dim() {
        return Err(Error::DimensionMismatch {
            op: h.dim(),
            len: sys.ambient_dim(),
        });
    }
    let target = to_complex(h.matrix());
    let mut transfer = None;
    // Near-discriminant targets can defeat one gamma; another path family
    // usually avoids the trouble spot.
    for attempt in 0..TRANSFER_ATTEMPTS {
        let gamma = rng::unit_complex(&mut rng::seeded(derive_seed(config.seed, 0x7A + attempt)));
        let t = transfer_solutions(
            sys,
            &base.set,
            &base.h0,
            &target,
            gamma,
            &config.monodromy.tracker,
        );
        let done = t.is_complete();
        let better = done
            || transfer
                .as_ref()
                .is_none_or(|best: &Transfer| t.set.pair_count() > best.set.pair_count());
        if better {
            transfer = Some(t);
        }
        if done {
            break;
        }
    }
    let transfer = transfer.expect("at least one attempt");
    let reps = transfer.set.representatives();
    let built: Vec<Solution> = reps
        .par_iter()
        .map(|z| build_solution(sys, h, z))
        .collect::<Result<_>>()?;
    let solutions: Vec<Solution> = built
        .into_iter()
        .flat_map(|s| {
            let a = antipodal(sys, &s);
            [s, a]
        })
        .collect();
    let count = transfer.set.pair_count();
    let real_count = solutions.iter().step_by(2).filter(|s| s.is_real).count();
    let failures = transfer.failures();
    let complete = matches!(base.stop, StopReason::TargetReached | StopReason::Stalled)
        && failures.is_empty()
        && transfer.collisions == 0;
    Ok(Enumeration {
        k: sys.shape().dims().to_vec(),
        r: sys.ranks().inner().to_vec(),
        solutions,
        count,
        real_count,
        monodromy_count: base.set.pair_count(),
        stop: base.stop,
        failures,
        collisions: transfer.collisions,
        complete,
    })
}

/// All critical points of `R_H` on the variety of `(k, r)` reachable in
/// the identity-block chart.
pub fn enumerate(
    h: &Hamiltonian,
    k: &Shape,
    r: &RankProfile,
    config: &EnumerateConfig,
) -> Result<Enumeration> {
    let (sys, base) = base_fiber(k, r, config)?;
    enumerate_from(h, &sys, &base, config)
}
