use std::time::Instant;

use nalgebra::DMatrix;

use super::als::{embedding, random_start, smallest_local};
use super::{energy_settled, rayleigh_quotient, stationarity_residual, SolverConfig, SolverResult};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::tensor::{RankProfile, Shape};
use crate::tt::{max_ranks, validate_ranks, TensorTrain, TtCore};

enum Sweep {
    Forward,
    Backward,
}

/// Merged update of cores `i, i+1` followed by a truncated split. Forward
/// sweeps keep `U` as core `i` and move `S V^T` right; backward sweeps keep
/// `V^T` as core `i+1` and move `U S` left.
fn two_site_step(
    h: &Hamiltonian,
    train: &mut TensorTrain<f64>,
    i: usize,
    cap: usize,
    trunc_tol: f64,
    dir: Sweep,
) -> Result<()> {
    let env = train.environments();
    let p = embedding(&env, i, 2, train.shape());
    let (_, theta) = smallest_local(h, &p, i)?;
    let (rl, ki) = (train.core(i).left_rank(), train.core(i).phys_dim());
    let (kj, rr) = (train.core(i + 1).phys_dim(), train.core(i + 1).right_rank());
    let m = DMatrix::from_row_slice(rl * ki, kj * rr, theta.as_slice());
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;
    // nalgebra returns singular values in decreasing order.
    let smax = s[0];
    let keep = s
        .iter()
        .take_while(|&&x| x > trunc_tol * smax)
        .count()
        .clamp(1, cap.max(1));
    let u = u.columns(0, keep).into_owned();
    let v_t = v_t.rows(0, keep).into_owned();
    let sdiag = DMatrix::from_diagonal(&s.rows(0, keep).into_owned());
    let (a, b) = match dir {
        Sweep::Forward => (u, sdiag * v_t),
        Sweep::Backward => (u * sdiag, v_t),
    };
    let a = TtCore::from_stacked(rl, ki, &a)?;
    let b = TtCore::from_right_unfolding(kj, &b)?;
    train.set_pair(i, a, b)
}

/// Two-site sweeps from a rank-one start; bonds grow up to `rank_cap`.
pub fn dmrg_run(
    h: &Hamiltonian,
    k: &Shape,
    rank_cap: &RankProfile,
    config: &SolverConfig,
) -> Result<SolverResult> {
    config.validate()?;
    if h.dim() != k.size() {
        return Err(Error::DimensionMismatch {
            op: h.dim(),
            len: k.size(),
        });
    }
    let cap = validate_ranks(k, rank_cap)?;
    let start = Instant::now();
    let mut train = random_start(k, &RankProfile::ones(k), config.seed)?;
    let n = train.last();
    let mut energies = Vec::new();
    let mut local_energies = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    let mut prev = f64::INFINITY;

    if n == 0 {
        let upd = super::als_local_solve(h, &train, 0)?;
        train.set_core(0, upd.core)?;
        energies.push(upd.energy);
        local_energies.push(upd.energy);
        converged = true;
        sweeps = 1;
    }

    while !converged && sweeps < config.max_sweeps {
        sweeps += 1;
        for i in 0..n {
            two_site_step(
                h,
                &mut train,
                i,
                cap.bond(i + 1),
                config.svd_trunc_tol,
                Sweep::Forward,
            )?;
            local_energies.push(rayleigh_quotient(h, &train.decompress())?);
        }
        energies.push(*local_energies.last().expect("updates ran"));
        for i in (0..n).rev() {
            two_site_step(
                h,
                &mut train,
                i,
                cap.bond(i + 1),
                config.svd_trunc_tol,
                Sweep::Backward,
            )?;
            local_energies.push(rayleigh_quotient(h, &train.decompress())?);
        }
        let energy = *local_energies.last().expect("updates ran");
        energies.push(energy);
        if energy_settled(prev, energy, config.energy_tol) {
            converged = true;
        }
        prev = energy;
    }

    let stationarity = stationarity_residual(h, &train)?;
    let energy = *energies.last().expect("at least one sweep");
    Ok(SolverResult {
        energies,
        local_energies,
        train,
        energy,
        converged,
        sweeps,
        stationarity,
        elapsed: start.elapsed(),
    })
}

/// The maximal profile, used when no cap is configured.
pub fn default_rank_cap(k: &Shape, config: &SolverConfig) -> RankProfile {
    config.rank_cap.clone().unwrap_or_else(|| max_ranks(k))
}
