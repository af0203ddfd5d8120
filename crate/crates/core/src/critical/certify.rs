//! Stationarity certificates independent of the Lagrange system: the rank
//! drop of the augmented Jacobian of the variety's minors, and the
//! orthogonality of `Z - H` to the tangent space of the squared variety.

use nalgebra::DMatrix;

use super::system::C64;
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::tensor::{DenseTensor, RankProfile};
use crate::tt::{factorize, tt_dimension, validate_ranks, GaugedTrain};
use crate::variety::segre_classify;

/// Refuses minor systems with more rows than this.
pub const MAX_MINOR_ROWS: usize = 50_000;

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k.min(n - k)).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn hermitian(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn det(m: &DMatrix<C64>) -> C64 {
    if m.nrows() == 0 {
        C64::new(1.0, 0.0)
    } else {
        m.clone().lu().determinant()
    }
}

/// Gradient of `det(A[rows, cols])` with respect to the entries of `A`,
/// written into a flat row-major buffer of width `width`.
fn minor_gradient(a: &DMatrix<C64>, rows: &[usize], cols: &[usize], width: usize, out: &mut [C64]) {
    let s = rows.len();
    for (p, &i) in rows.iter().enumerate() {
        for (q, &j) in cols.iter().enumerate() {
            let sub = DMatrix::from_fn(s - 1, s - 1, |u, v| {
                let uu = if u < p { u } else { u + 1 };
                let vv = if v < q { v } else { v + 1 };
                a[(rows[uu], cols[vv])]
            });
            let sign = if (p + q) % 2 == 0 { 1.0 } else { -1.0 };
            out[i * width + j] = det(&sub) * sign;
        }
    }
}

/// `sigma_{c+2} / sigma_1` of the row-normalized matrix
/// `[psi^T; psi^T H; grad of the (r_i + 1)-minors of every flattening]`,
/// with `c` the codimension. Only Segre profiles are supported, where the
/// minors cut out the variety with the expected tangent spaces.
pub fn lagrangian_rank_residual(
    h: &Hamiltonian,
    psi: &DenseTensor<C64>,
    r: &RankProfile,
) -> Result<f64> {
    let k = psi.shape();
    let r = validate_ranks(k, r)?;
    let segre = segre_classify(k, &r)?;
    if !segre.is_segre {
        return Err(Error::Unsupported(format!(
            "rank profile {:?} is not a Segre configuration; its minors are not known to generate",
            r.inner()
        )));
    }
    let n_amb = k.size();
    if h.dim() != n_amb {
        return Err(Error::DimensionMismatch {
            op: h.dim(),
            len: n_amb,
        });
    }
    let c = n_amb - tt_dimension(k, &r);
    let order = k.order();
    let mut count = 2;
    for split in 0..order - 1 {
        let rows = k.span_size(0..split + 1);
        let cols = k.span_size(split + 1..order);
        let b = r.bond(split + 1);
        if b < rows.min(cols) {
            count += binomial(rows, b + 1).saturating_mul(binomial(cols, b + 1));
        }
    }
    if count > MAX_MINOR_ROWS {
        return Err(Error::Unsupported(format!(
            "{count} minor rows exceed the cap of {MAX_MINOR_ROWS}"
        )));
    }

    let data = psi.data();
    let hm = h.matrix();
    let mut rows_out: Vec<Vec<C64>> = Vec::with_capacity(count);
    rows_out.push(data.to_vec());
    rows_out.push(
        (0..n_amb)
            .map(|j| (0..n_amb).map(|i| data[i] * hm[(i, j)]).sum())
            .collect(),
    );
    for split in 0..order - 1 {
        let a = psi.unfold(split)?;
        let b = r.bond(split + 1);
        if b >= a.nrows().min(a.ncols()) {
            continue;
        }
        let rsets = combinations(a.nrows(), b + 1);
        let csets = combinations(a.ncols(), b + 1);
        for rs in &rsets {
            for cs in &csets {
                let mut g = vec![C64::new(0.0, 0.0); n_amb];
                minor_gradient(&a, rs, cs, a.ncols(), &mut g);
                rows_out.push(g);
            }
        }
    }
    let mut mat = DMatrix::<C64>::zeros(rows_out.len(), n_amb);
    for (i, row) in rows_out.iter().enumerate() {
        let nrm = hermitian(row);
        if nrm == 0.0 {
            continue;
        }
        for (j, v) in row.iter().enumerate() {
            mat[(i, j)] = v / nrm;
        }
    }
    let mut sv: Vec<f64> = mat.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    if sv.is_empty() || sv[0] == 0.0 {
        return Ok(0.0);
    }
    Ok(sv.get(c + 1).copied().unwrap_or(0.0) / sv[0])
}

/// Bombieri-Weyl certificate at a chart point: with `psi` scaled to
/// `psi^T psi = 1`, `lambda = psi^T H psi` and `Z = lambda psi psi^T`,
/// returns `max_j |<Z - H, W_j>| / (|Z - H| |W_j|)` over
/// `W_j = u_j psi^T + psi u_j^T`, `u_j` an orthonormal basis of the
/// tangent space of the cone at `psi`.
pub fn bw_residual_at(h: &Hamiltonian, g: &GaugedTrain<C64>) -> Result<f64> {
    let psi = g.decompress();
    let q = psi.dot_self();
    if q.norm() <= 1e-300 {
        return Err(Error::IsotropicOrZero(q.norm()));
    }
    let s = C64::new(1.0, 0.0) / q.sqrt();
    let psi: Vec<C64> = psi.data().iter().map(|v| v * s).collect();
    let n = psi.len();
    let hm = h.matrix();
    let hpsi: Vec<C64> = (0..n)
        .map(|i| (0..n).map(|j| psi[j] * hm[(i, j)]).sum())
        .collect();
    let lambda: C64 = psi.iter().zip(&hpsi).map(|(a, b)| a * b).sum();
    let mut zh = 0.0;
    for i in 0..n {
        for j in 0..n {
            zh += (lambda * psi[i] * psi[j] - hm[(i, j)]).norm_sqr();
        }
    }
    let zh = zh.sqrt();
    if zh == 0.0 {
        return Ok(0.0);
    }
    // Scaling the chart point rescales J's leading-core columns only, so
    // the range is unchanged by the normalization above.
    let jac = g.jacobian();
    let svd = jac.svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for (col, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma <= 1e-10 * top {
            continue;
        }
        let uj: Vec<C64> = u.column(col).iter().copied().collect();
        let pairing: C64 = uj
            .iter()
            .zip(psi.iter().zip(&hpsi))
            .map(|(a, (p, hp))| a * (lambda * p - hp))
            .sum::<C64>()
            * 2.0;
        let mut w = 0.0;
        for i in 0..n {
            for j in 0..n {
                w += (uj[i] * psi[j] + psi[i] * uj[j]).norm_sqr();
            }
        }
        worst = worst.max(pairing.norm() / (zh * w.sqrt()));
    }
    Ok(worst)
}

/// [`bw_residual_at`] for a tensor, gauged through the skeleton
/// factorization with profile `r`.
pub fn bw_stationarity_residual(
    h: &Hamiltonian,
    psi: &DenseTensor<C64>,
    r: &RankProfile,
) -> Result<f64> {
    if psi.norm() == 0.0 {
        return Err(Error::IsotropicOrZero(0.0));
    }
    let r = validate_ranks(psi.shape(), r)?;
    bw_residual_at(h, &factorize(psi, &r)?)
}
