//! Predictor-corrector path tracking for parameter homotopies
//! `H(t) = (1 - t) a + t b`.

use serde::{Deserialize, Serialize};

use super::system::{CMatrix, CVector, CriticalSystem, Linearization, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Budget of attempted steps per path.
    pub max_steps: usize,
    pub corrector_iters: usize,
    /// Corrector stops once `|dz| <= corrector_tol * (1 + |z|)`.
    pub corrector_tol: f64,
    /// Each Newton update must shrink by at least this ratio.
    pub contraction: f64,
    /// The first corrector update must stay below this relative size.
    pub max_first_correction: f64,
    pub divergence: f64,
    pub polish_tol: f64,
    pub success_residual: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            initial_step: 0.05,
            min_step: 1e-9,
            max_step: 0.1,
            max_steps: 10_000,
            corrector_iters: 3,
            corrector_tol: 1e-11,
            contraction: 0.25,
            max_first_correction: 0.05,
            divergence: 1e10,
            polish_tol: 1e-10,
            success_residual: 1e-8,
        }
    }
}

impl TrackerConfig {
    /// Same settings with every step bound divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        TrackerConfig {
            initial_step: self.initial_step / factor,
            max_step: self.max_step / factor,
            max_first_correction: self.max_first_correction / factor,
            max_steps: self.max_steps * 2,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathFailure {
    Diverged,
    StepUnderflow,
    JacobianSingular,
    OutOfBudget,
    /// Tracking finished but the endpoint does not polish below the
    /// success residual.
    Unconverged,
}

impl std::fmt::Display for PathFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PathFailure::Diverged => "diverged",
            PathFailure::StepUnderflow => "step_underflow",
            PathFailure::JacobianSingular => "jacobian_singular",
            PathFailure::OutOfBudget => "out_of_budget",
            PathFailure::Unconverged => "unconverged",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct Tracked {
    pub z: CVector,
    pub residual: f64,
    pub steps: usize,
    pub rejected: usize,
    /// Largest `max|U_ii| / min|U_ii|` of the LU factors seen on the path.
    pub max_condition: f64,
}

/// `H(t) = a + t (b - a)`.
#[derive(Clone, Debug)]
pub struct Segment {
    pub a: CMatrix,
    pub b: CMatrix,
    delta: CMatrix,
}

impl Segment {
    pub fn new(a: CMatrix, b: CMatrix) -> Self {
        let delta = &b - &a;
        Segment { a, b, delta }
    }

    /// The gamma-trick segment from `gamma * h_start` to `h_end`.
    pub fn with_gamma(h_start: &CMatrix, h_end: &CMatrix, gamma: C64) -> Self {
        Segment::new(h_start * gamma, h_end.clone())
    }

    pub fn at(&self, t: f64) -> CMatrix {
        if t == 0.0 {
            return self.a.clone();
        }
        if t == 1.0 {
            return self.b.clone();
        }
        &self.a + &self.delta * C64::new(t, 0.0)
    }
}

fn lu_condition(jac: &CMatrix) -> (Option<nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>, f64) {
    let lu = jac.clone().lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows().min(u.ncols()))
        .map(|i| u[(i, i)].norm())
        .collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !cond.is_finite() || cond > 1e15 {
        (None, cond)
    } else {
        (Some(lu), cond)
    }
}

struct Tracker<'a> {
    sys: &'a CriticalSystem,
    seg: &'a Segment,
    cfg: &'a TrackerConfig,
    max_condition: f64,
}

impl Tracker<'_> {
    /// Davidenko velocity `dz/dt = -F_z^{-1} F_H[b - a]`.
    fn velocity(&mut self, z: &CVector, t: f64) -> Result<CVector, PathFailure> {
        let h = self.seg.at(t);
        let lin = self.sys.linearize(z, &h);
        let (lu, cond) = lu_condition(&lin.jac);
        self.max_condition = self.max_condition.max(cond);
        let lu = lu.ok_or(PathFailure::JacobianSingular)?;
        let rhs = self.sys.parameter_derivative(&lin, &self.seg.delta);
        let v = lu.solve(&rhs).ok_or(PathFailure::JacobianSingular)?;
        Ok(-v)
    }

    fn predict(&mut self, z: &CVector, t: f64, dt: f64) -> Result<CVector, PathFailure> {
        let c = |x: f64| C64::new(x, 0.0);
        let k1 = self.velocity(z, t)?;
        let k2 = self.velocity(&(z + &k1 * c(dt / 2.0)), t + dt / 2.0)?;
        let k3 = self.velocity(&(z + &k2 * c(dt / 2.0)), t + dt / 2.0)?;
        let k4 = self.velocity(&(z + &k3 * c(dt)), t + dt)?;
        Ok(z + (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(dt / 6.0))
    }

    fn newton_step(&mut self, z: &CVector, h: &CMatrix) -> Option<(CVector, Linearization)> {
        let lin = self.sys.linearize(z, h);
        let (lu, cond) = lu_condition(&lin.jac);
        self.max_condition = self.max_condition.max(cond);
        let dz = lu?.solve(&lin.f)?;
        Some((dz, lin))
    }

    fn correct(&mut self, z: &CVector, t: f64) -> Option<CVector> {
        let h = self.seg.at(t);
        let mut z = z.clone();
        let mut prev = f64::INFINITY;
        for it in 0..self.cfg.corrector_iters {
            let (dz, _) = self.newton_step(&z, &h)?;
            let size = dz.norm();
            let scale = 1.0 + z.norm();
            if !size.is_finite() {
                return None;
            }
            if it == 0 && size > self.cfg.max_first_correction * scale {
                return None;
            }
            if it > 0 && size > self.cfg.contraction * prev && size > self.cfg.corrector_tol * scale
            {
                return None;
            }
            z -= dz;
            if size <= self.cfg.corrector_tol * scale {
                return Some(z);
            }
            prev = size;
        }
        // Accept after the iteration budget if the last update was already
        // tiny relative to the point.
        (prev <= 1e3 * self.cfg.corrector_tol * (1.0 + z.norm())).then_some(z)
    }
}

/// Tracks `z0`, a solution at `seg.a`, to a solution at `seg.b`.
pub fn track_segment(
    sys: &CriticalSystem,
    z0: &CVector,
    seg: &Segment,
    cfg: &TrackerConfig,
) -> Result<Tracked, PathFailure> {
    let mut tr = Tracker {
        sys,
        seg,
        cfg,
        max_condition: 0.0,
    };
    let mut z = z0.clone();
    let mut t = 0.0;
    let mut dt = cfg.initial_step.min(cfg.max_step);
    let mut easy = 0;
    let mut steps = 0;
    let mut rejected = 0;

    while t < 1.0 {
        if steps + rejected >= cfg.max_steps {
            return Err(PathFailure::OutOfBudget);
        }
        let h = dt.min(1.0 - t);
        let attempt = tr
            .predict(&z, t, h)
            .ok()
            .and_then(|zp| tr.correct(&zp, if t + h >= 1.0 { 1.0 } else { t + h }));
        match attempt {
            Some(next) => {
                if !(next.norm() <= cfg.divergence) {
                    return Err(PathFailure::Diverged);
                }
                z = next;
                t = if t + h >= 1.0 { 1.0 } else { t + h };
                steps += 1;
                easy += 1;
                if easy >= 3 {
                    dt = (dt * 2.0).min(cfg.max_step);
                    easy = 0;
                }
            }
            None => {
                rejected += 1;
                easy = 0;
                dt /= 2.0;
                if dt < cfg.min_step {
                    // Distinguish a singular Jacobian at the current point.
                    let lin = sys.linearize(&z, &seg.at(t));
                    if lu_condition(&lin.jac).0.is_none() {
                        return Err(PathFailure::JacobianSingular);
                    }
                    return Err(PathFailure::StepUnderflow);
                }
            }
        }
    }

    let (z, residual) = sys.newton(&z, &seg.b, 8, cfg.polish_tol);
    if !(residual < cfg.success_residual) {
        return Err(PathFailure::Unconverged);
    }
    Ok(Tracked {
        z,
        residual,
        steps,
        rejected,
        max_condition: tr.max_condition,
    })
}

/// Tracks a solution at `h_start` to `h_end` along the gamma-trick segment
/// `(1 - t) gamma h_start + t h_end`. The start multiplier is rescaled by
/// `gamma` internally.
pub fn track_path(
    sys: &CriticalSystem,
    start: &CVector,
    h_start: &CMatrix,
    h_end: &CMatrix,
    gamma: C64,
    cfg: &TrackerConfig,
) -> Result<Tracked, PathFailure> {
    let seg = Segment::with_gamma(h_start, h_end, gamma);
    let mut z0 = start.clone();
    let m = sys.param_count();
    z0[m] *= gamma;
    track_segment(sys, &z0, &seg, cfg)
}
