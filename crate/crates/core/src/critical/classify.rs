use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hamiltonian::Hamiltonian;
use crate::solvers::gauge_gradient;
use crate::tensor::{RankProfile, Shape};
use crate::tt::GaugedTrain;

/// Relative eigenvalue margin separating degenerate from definite.
pub const DEFINITENESS_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumClass {
    Min,
    Max,
    Saddle,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: ExtremumClass,
    /// Hessian eigenvalues in an orthonormal frame of the tangent space
    /// transverse to `psi`.
    pub hessian_eigenvalues: Vec<f64>,
}

/// Hessian of `R_H` over the gauge parameters at `x`, by central
/// differences of the analytic gradient, symmetrized.
pub fn rayleigh_hessian(
    h: &Hamiltonian,
    k: &Shape,
    r: &RankProfile,
    x: &[f64],
) -> Result<DMatrix<f64>> {
    let m = x.len();
    let mut hess = DMatrix::zeros(m, m);
    let grad_at = |p: &[f64]| -> Result<Vec<f64>> {
        let g = GaugedTrain::from_params(k, r, p)?;
        Ok(gauge_gradient(h, &g)?.0)
    };
    let mut probe = x.to_vec();
    for j in 0..m {
        let eps = 1e-5 * (1.0 + x[j].abs());
        probe[j] = x[j] + eps;
        let gp = grad_at(&probe)?;
        probe[j] = x[j] - eps;
        let gm = grad_at(&probe)?;
        probe[j] = x[j];
        for i in 0..m {
            hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * eps);
        }
    }
    Ok((&hess + hess.transpose()) * 0.5)
}

/// Columns spanning `range(J)` with `psi` projected out, pulled back to
/// parameter space through the pseudo-inverse of `J`. The chart Hessian in
/// these coordinates is the Hessian in an orthonormal tangent frame, so its
/// spectrum does not depend on how well scaled the chart is.
fn tangent_frame(g: &GaugedTrain<f64>) -> DMatrix<f64> {
    let jac = g.jacobian();
    let psi = DVector::from_vec(g.decompress().into_data());
    let psi = psi.normalize();
    let (rows, cols) = jac.shape();
    let svd = jac.svd(true, true);
    let u = svd.u.expect("left singular vectors");
    let vt = svd.v_t.expect("right singular vectors");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-12 * top)
        .collect();
    let basis = DMatrix::from_columns(
        &keep
            .iter()
            .map(|&i| u.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    let projected = &basis - &psi * (psi.transpose() * &basis);
    let psvd = projected.svd(true, false);
    let pu = psvd.u.expect("left singular vectors");
    let mut order: Vec<usize> = (0..psvd.singular_values.len()).collect();
    order.sort_by(|&a, &b| psvd.singular_values[b].total_cmp(&psvd.singular_values[a]));
    let dim = keep.len().saturating_sub(1);
    let frame = DMatrix::from_columns(
        &order[..dim]
            .iter()
            .map(|&i| pu.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    // pinv(J) = V S^-1 U^T on the kept singular triplets.
    let mut pinv = DMatrix::zeros(cols, rows);
    for &i in &keep {
        pinv += vt.row(i).transpose() * u.column(i).transpose() / svd.singular_values[i];
    }
    pinv * frame
}

/// Classifies a real critical point by the Hessian of the quotient over
/// the tangent directions transverse to scaling, along which `R_H` is
/// constant.
pub fn classify_point(
    h: &Hamiltonian,
    k: &Shape,
    r: &RankProfile,
    x: &[f64],
) -> Result<Classification> {
    let g = GaugedTrain::from_params(k, r, x)?;
    let hess = rayleigh_hessian(h, k, r, x)?;
    let frame = tangent_frame(&g);
    let reduced = frame.transpose() * hess * &frame;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let mut eig: Vec<f64> = reduced.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let scale = eig.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let class = if eig.is_empty() {
        // A single point: both the minimum and the maximum.
        ExtremumClass::Min
    } else if eig.iter().any(|e| e.abs() <= DEFINITENESS_MARGIN * scale) {
        ExtremumClass::Degenerate
    } else if eig[0] > 0.0 {
        ExtremumClass::Min
    } else if eig[eig.len() - 1] < 0.0 {
        ExtremumClass::Max
    } else {
        ExtremumClass::Saddle
    };
    Ok(Classification {
        class,
        hessian_eigenvalues: eig,
    })
}
