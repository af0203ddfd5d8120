use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{energy_settled, stationarity_residual, SolverConfig, SolverResult};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::rng;
use crate::tensor::{RankProfile, Shape};
use crate::tt::{validate_ranks, Environments, TensorTrain, TtCore};

/// Environments are accepted as orthogonal up to this Frobenius residual.
const UNITARITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LocalSolve {
    pub core: TtCore<f64>,
    pub energy: f64,
}

/// `P` with `psi = P vec(block)`, where the block spans bonds `site` and
/// `site + width` and all physical indices in between.
pub(super) fn embedding(
    env: &Environments<f64>,
    site: usize,
    width: usize,
    k: &Shape,
) -> DMatrix<f64> {
    let l = &env.left[site];
    let r = &env.right[site + width - 1];
    let (pl, rl) = (l.nrows(), l.ncols());
    let (rr, pr) = (r.nrows(), r.ncols());
    let kmid = k.span_size(site..site + width);
    let mut p = DMatrix::zeros(pl * kmid * pr, rl * kmid * rr);
    for jl in 0..pl {
        for a in 0..rl {
            let la = l[(jl, a)];
            if la == 0.0 {
                continue;
            }
            for j in 0..kmid {
                for b in 0..rr {
                    let col = (a * kmid + j) * rr + b;
                    for jr in 0..pr {
                        p[((jl * kmid + j) * pr + jr, col)] = la * r[(b, jr)];
                    }
                }
            }
        }
    }
    p
}

/// Smallest eigenpair of `P^T H P`.
pub(super) fn smallest_local(
    h: &Hamiltonian,
    p: &DMatrix<f64>,
    site: usize,
) -> Result<(f64, DVector<f64>)> {
    let gram = p.transpose() * p;
    let residual = (gram - DMatrix::identity(p.ncols(), p.ncols())).norm();
    if residual > UNITARITY_TOL {
        return Err(Error::EnvironmentNotOrthogonal { site, residual });
    }
    let heff = p.transpose() * (h.matrix() * p);
    let heff = (&heff + heff.transpose()) * 0.5;
    let eig = heff.symmetric_eigen();
    let (idx, &energy) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty local problem");
    Ok((energy, eig.eigenvectors.column(idx).into_owned()))
}

/// One-site update: the minimizer of the quotient over all choices of core
/// `site` with the other cores fixed. The train must be in mixed canonical
/// form about `site`.
pub fn als_local_solve(
    h: &Hamiltonian,
    train: &TensorTrain<f64>,
    site: usize,
) -> Result<LocalSolve> {
    if site > train.last() {
        return Err(Error::SiteOutOfRange {
            site,
            len: train.cores().len(),
        });
    }
    if h.dim() != train.shape().size() {
        return Err(Error::DimensionMismatch {
            op: h.dim(),
            len: train.shape().size(),
        });
    }
    let env = train.environments();
    let p = embedding(&env, site, 1, train.shape());
    let (energy, v) = smallest_local(h, &p, site)?;
    let old = train.core(site);
    let core = TtCore::new(
        old.left_rank(),
        old.phys_dim(),
        old.right_rank(),
        v.as_slice().to_vec(),
    )?;
    Ok(LocalSolve { core, energy })
}

/// Random train with i.i.d. standard normal cores, right-orthogonalized.
pub(super) fn random_start(k: &Shape, r: &RankProfile, seed: u64) -> Result<TensorTrain<f64>> {
    let mut g = rng::seeded(seed);
    let train = TensorTrain::random_with(k, r, || rng::normal(&mut g))?;
    train.orthogonalize(0)
}

/// Alternating one-site sweeps from a seeded random start.
pub fn als_run(
    h: &Hamiltonian,
    k: &Shape,
    r: &RankProfile,
    config: &SolverConfig,
) -> Result<SolverResult> {
    config.validate()?;
    let r = validate_ranks(k, r)?;
    if h.dim() != k.size() {
        return Err(Error::DimensionMismatch {
            op: h.dim(),
            len: k.size(),
        });
    }
    let start = Instant::now();
    let mut train = random_start(k, &r, config.seed)?;
    let n = train.last();
    let mut energies = Vec::new();
    let mut local_energies = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    let mut stationarity = f64::INFINITY;
    let mut prev = f64::INFINITY;

    while sweeps < config.max_sweeps {
        sweeps += 1;
        for site in 0..n {
            let upd = als_local_solve(h, &train, site)?;
            local_energies.push(upd.energy);
            train.set_core(site, upd.core)?;
            train.left_orthogonalize_at(site)?;
        }
        if n > 0 {
            energies.push(*local_energies.last().expect("updates ran"));
        }
        for site in (0..=n).rev() {
            let upd = als_local_solve(h, &train, site)?;
            local_energies.push(upd.energy);
            train.set_core(site, upd.core)?;
            if site > 0 {
                train.right_orthogonalize_at(site)?;
            }
        }
        let energy = *local_energies.last().expect("updates ran");
        energies.push(energy);
        stationarity = stationarity_residual(h, &train)?;
        if n == 0
            || (energy_settled(prev, energy, config.energy_tol)
                && stationarity < config.residual_tol)
        {
            converged = true;
            break;
        }
        prev = energy;
    }

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
