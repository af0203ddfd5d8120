//! Tensor trains, XR skeleton factorization, decompression and the
//! identity-block gauge chart.
//!
//! A core `A_i` is stored as a row-major `[r_i, k_i, r_{i+1}]` array. Read
//! as a matrix this is the stacked `(r_i k_i) x r_{i+1}` matrix whose row
//! `a * k_i + j` is row `a` of the block `A_i^{(j)}`; it is exactly the
//! matrix produced by unfolding the running remainder during factorization.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{
    numerical_rank, row_major, DenseTensor, FlatMatrix, RankProfile, Scalar, Shape,
    DEFAULT_RANK_TOL,
};

/// Leading-row condition numbers above this leave the chart.
pub const MAX_LEADING_COND: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct TtCore<T> {
    left: usize,
    phys: usize,
    right: usize,
    data: Vec<T>,
}

impl<T: Scalar> TtCore<T> {
    pub fn new(left: usize, phys: usize, right: usize, data: Vec<T>) -> Result<Self> {
        if left == 0 || phys == 0 || right == 0 {
            return Err(Error::InvalidShape(format!(
                "core dimensions ({left},{phys},{right})"
            )));
        }
        if data.len() != left * phys * right {
            return Err(Error::SizeMismatch {
                expected: left * phys * right,
                got: data.len(),
            });
        }
        Ok(TtCore {
            left,
            phys,
            right,
            data,
        })
    }

    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        TtCore {
            left,
            phys,
            right,
            data: vec![T::zero(); left * phys * right],
        }
    }

    pub fn from_stacked(left: usize, phys: usize, m: &DMatrix<T>) -> Result<Self> {
        if m.nrows() != left * phys {
            return Err(Error::SizeMismatch {
                expected: left * phys,
                got: m.nrows(),
            });
        }
        TtCore::new(left, phys, m.ncols(), row_major(m))
    }

    pub fn from_right_unfolding(phys: usize, m: &DMatrix<T>) -> Result<Self> {
        if !m.ncols().is_multiple_of(phys) {
            return Err(Error::SizeMismatch {
                expected: phys,
                got: m.ncols(),
            });
        }
        TtCore::new(m.nrows(), phys, m.ncols() / phys, row_major(m))
    }

    pub fn left_rank(&self) -> usize {
        self.left
    }

    pub fn phys_dim(&self) -> usize {
        self.phys
    }

    pub fn right_rank(&self) -> usize {
        self.right
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, a: usize, j: usize, b: usize) -> T {
        self.data[(a * self.phys + j) * self.right + b]
    }

    /// `A^{(j)}`, an `r_i x r_{i+1}` matrix.
    pub fn block(&self, j: usize) -> DMatrix<T> {
        DMatrix::from_fn(self.left, self.right, |a, b| self.get(a, j, b))
    }

    /// `(r_i k_i) x r_{i+1}`.
    pub fn stacked(&self) -> DMatrix<T> {
        DMatrix::from_row_slice(self.left * self.phys, self.right, &self.data)
    }

    /// `r_i x (k_i r_{i+1})`.
    pub fn right_unfolding(&self) -> DMatrix<T> {
        DMatrix::from_row_slice(self.left, self.phys * self.right, &self.data)
    }

    pub fn norm(&self) -> f64 {
        self.data
            .iter()
            .map(|z| z.modulus_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// Row-major `(m x k) * (k x n)`.
pub(crate) fn matmul<T: Scalar>(a: &[T], m: usize, k: usize, b: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for l in 0..k {
            let s = a[i * k + l];
            if s == T::zero() {
                continue;
            }
            for (o, &x) in row.iter_mut().zip(&b[l * n..(l + 1) * n]) {
                *o += s * x;
            }
        }
    }
    out
}

/// Clamps a profile to the attainable ranks: left to right by
/// `r_i <= r_{i-1} k_{i-1}`, then right to left by `r_i <= r_{i+1} k_i`.
pub fn validate_ranks(k: &Shape, r: &RankProfile) -> Result<RankProfile> {
    r.check_against(k)?;
    let n = r.len();
    // Bonds r_0..=r_{n+1}.
    let mut b: Vec<usize> = (0..=n + 1).map(|i| r.bond(i)).collect();
    for i in 1..=n {
        b[i] = b[i].min(b[i - 1].saturating_mul(k.dim(i - 1)));
    }
    for i in (1..=n).rev() {
        b[i] = b[i].min(b[i + 1].saturating_mul(k.dim(i)));
    }
    RankProfile::new(b[1..=n].to_vec())
}

/// Largest profile allowed for a shape, `r_i = min(prod k_{<i}, prod k_{>=i})`.
pub fn max_ranks(k: &Shape) -> RankProfile {
    let n = k.order() - 1;
    let r = (1..=n)
        .map(|i| k.span_size(0..i).min(k.span_size(i..n + 1)))
        .collect();
    RankProfile::new(r).expect("positive bonds")
}

/// `sum_{i<n} (r_i k_i - r_{i+1}) r_{i+1} + r_n k_n`, the number of free
/// gauge parameters and the dimension of the affine manifold of tensors
/// with exactly these flattening ranks. The profile must be validated.
pub fn tt_dimension(k: &Shape, r: &RankProfile) -> usize {
    GaugeLayout::new(k, r).param_count()
}

#[derive(Clone, Debug, PartialEq)]
pub struct XrPair<T> {
    pub x: FlatMatrix<T>,
    pub r: FlatMatrix<T>,
}

/// Skeleton factorization `A = X R` with `R` the first `r` rows of `A` and
/// `X = A R^+`, whose top `r x r` block is the identity.
pub fn xr_decompose<T: Scalar>(a: &FlatMatrix<T>, r: usize) -> Result<XrPair<T>> {
    xr_step(a, r, 0)
}

fn xr_step<T: Scalar>(a: &FlatMatrix<T>, r: usize, step: usize) -> Result<XrPair<T>> {
    if r == 0 || r > a.nrows() || r > a.ncols() {
        return Err(Error::InvalidRanks(format!(
            "rank {r} for a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let lead = a.rows(0, r).into_owned();
    let svd = lead.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !(cond <= MAX_LEADING_COND) {
        return Err(Error::SingularLeadingRows {
            step,
            rank: r,
            cond,
        });
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    // R^+ = V S^{-1} U^H
    let mut s_inv_uh = u.adjoint();
    for (i, mut row) in s_inv_uh.row_iter_mut().enumerate() {
        row.scale_mut(1.0 / svd.singular_values[i]);
    }
    let pinv = v_t.adjoint() * s_inv_uh;
    let mut x = a * pinv;
    for i in 0..r {
        for j in 0..r {
            x[(i, j)] = if i == j { T::one() } else { T::zero() };
        }
    }
    Ok(XrPair { x, r: lead })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorTrain<T> {
    shape: Shape,
    ranks: RankProfile,
    cores: Vec<TtCore<T>>,
}

impl<T: Scalar> TensorTrain<T> {
    pub fn new(cores: Vec<TtCore<T>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidShape(
                "a train needs at least one core".into(),
            ));
        }
        if cores[0].left != 1 {
            return Err(Error::RankChain {
                core: 0,
                detail: format!("left rank {} instead of 1", cores[0].left),
            });
        }
        let last = cores.len() - 1;
        if cores[last].right != 1 {
            return Err(Error::RankChain {
                core: last,
                detail: format!("right rank {} instead of 1", cores[last].right),
            });
        }
        for i in 0..last {
            if cores[i].right != cores[i + 1].left {
                return Err(Error::RankChain {
                    core: i,
                    detail: format!(
                        "right rank {} does not match left rank {} of the next core",
                        cores[i].right,
                        cores[i + 1].left
                    ),
                });
            }
        }
        let shape = Shape::new(cores.iter().map(|c| c.phys).collect())?;
        let ranks = RankProfile::new(cores[..last].iter().map(|c| c.right).collect())?;
        Ok(TensorTrain {
            shape,
            ranks,
            cores,
        })
    }

    /// Cores with i.i.d. entries drawn from `sample`, in core order.
    pub fn random_with(k: &Shape, r: &RankProfile, mut sample: impl FnMut() -> T) -> Result<Self> {
        r.check_against(k)?;
        let cores = (0..k.order())
            .map(|i| {
                let (l, p, rr) = (r.bond(i), k.dim(i), r.bond(i + 1));
                TtCore::new(l, p, rr, (0..l * p * rr).map(|_| sample()).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        TensorTrain::new(cores)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn ranks(&self) -> &RankProfile {
        &self.ranks
    }

    pub fn cores(&self) -> &[TtCore<T>] {
        &self.cores
    }

    pub fn core(&self, i: usize) -> &TtCore<T> {
        &self.cores[i]
    }

    /// Index of the last core, `n`.
    pub fn last(&self) -> usize {
        self.cores.len() - 1
    }

    /// Replaces core `i`; its dimensions must match.
    pub fn set_core(&mut self, i: usize, core: TtCore<T>) -> Result<()> {
        let old = &self.cores[i];
        if (old.left, old.phys, old.right) != (core.left, core.phys, core.right) {
            return Err(Error::RankChain {
                core: i,
                detail: format!(
                    "replacement core is {}x{}x{}, expected {}x{}x{}",
                    core.left, core.phys, core.right, old.left, old.phys, old.right
                ),
            });
        }
        self.cores[i] = core;
        Ok(())
    }

    /// Replaces cores `i` and `i+1` with a pair sharing a possibly new bond.
    pub fn set_pair(&mut self, i: usize, a: TtCore<T>, b: TtCore<T>) -> Result<()> {
        let (l, r) = (&self.cores[i], &self.cores[i + 1]);
        if a.left != l.left
            || a.phys != l.phys
            || b.phys != r.phys
            || b.right != r.right
            || a.right != b.left
        {
            return Err(Error::RankChain {
                core: i,
                detail: "replacement pair does not fit the chain".into(),
            });
        }
        let mut inner: Vec<usize> = self.ranks.inner().to_vec();
        inner[i] = a.right;
        self.ranks = RankProfile::new(inner)?;
        self.cores[i] = a;
        self.cores[i + 1] = b;
        Ok(())
    }

    /// Right-to-left contraction `psi^i = X_i R_i`, re-tensorizing after
    /// each product.
    pub fn decompress(&self) -> DenseTensor<T> {
        let n = self.last();
        let mut phi = self.cores[n].data.clone();
        let mut cols = self.cores[n].phys;
        for core in self.cores[..n].iter().rev() {
            phi = matmul(&core.data, core.left * core.phys, core.right, &phi, cols);
            cols *= core.phys;
        }
        DenseTensor::new(self.shape.clone(), phi).expect("sizes agree")
    }

    /// `A_0^{(j_0)} ... A_n^{(j_n)}`.
    pub fn entry(&self, index: &[usize]) -> Result<T> {
        if index.len() != self.cores.len()
            || index.iter().zip(self.shape.dims()).any(|(&j, &k)| j >= k)
        {
            return Err(Error::IndexOutOfRange {
                index: index.to_vec(),
                shape: self.shape.dims().to_vec(),
            });
        }
        let mut row = vec![T::one()];
        for (core, &j) in self.cores.iter().zip(index) {
            let mut next = vec![T::zero(); core.right];
            for (a, &s) in row.iter().enumerate() {
                for (b, o) in next.iter_mut().enumerate() {
                    *o += s * core.get(a, j, b);
                }
            }
            row = next;
        }
        Ok(row[0])
    }

    pub fn environments(&self) -> Environments<T> {
        let n = self.last();
        let mut left = Vec::with_capacity(n + 1);
        left.push(DMatrix::from_element(1, 1, T::one()));
        for c in 0..n {
            let core = &self.cores[c];
            let prev: &DMatrix<T> = &left[c];
            let rows = prev.nrows();
            let mut next = DMatrix::zeros(rows * core.phys, core.right);
            for jl in 0..rows {
                for a in 0..core.left {
                    let s = prev[(jl, a)];
                    if s == T::zero() {
                        continue;
                    }
                    for j in 0..core.phys {
                        for b in 0..core.right {
                            next[(jl * core.phys + j, b)] += s * core.get(a, j, b);
                        }
                    }
                }
            }
            left.push(next);
        }
        let mut right = vec![DMatrix::from_element(1, 1, T::one()); n + 1];
        for c in (1..=n).rev() {
            let core = &self.cores[c];
            let prev = right[c].clone();
            let cols = prev.ncols();
            let mut next = DMatrix::zeros(core.left, core.phys * cols);
            for a in 0..core.left {
                for j in 0..core.phys {
                    for b in 0..core.right {
                        let s = core.get(a, j, b);
                        if s == T::zero() {
                            continue;
                        }
                        for jr in 0..cols {
                            next[(a, j * cols + jr)] += s * prev[(b, jr)];
                        }
                    }
                }
            }
            right[c - 1] = next;
        }
        Environments { left, right }
    }

    /// Gradient of the bilinear form `sum_l w_l psi_l` with respect to every
    /// core entry, one core-shaped array per site.
    pub fn core_gradients(&self, w: &[T]) -> Vec<TtCore<T>> {
        let env = self.environments();
        (0..self.cores.len())
            .map(|c| self.core_gradient_with(&env, c, w))
            .collect()
    }

    fn core_gradient_with(&self, env: &Environments<T>, c: usize, w: &[T]) -> TtCore<T> {
        let core = &self.cores[c];
        let l = &env.left[c];
        let r = &env.right[c];
        let (pl, pr) = (l.nrows(), r.ncols());
        let k = core.phys;
        // tmp[jl, j, b] = sum_jr w[jl, j, jr] R[b, jr]
        let mut tmp = vec![T::zero(); pl * k * core.right];
        for jl in 0..pl {
            for j in 0..k {
                let wrow = &w[(jl * k + j) * pr..(jl * k + j + 1) * pr];
                for b in 0..core.right {
                    let mut s = T::zero();
                    for (jr, &wv) in wrow.iter().enumerate() {
                        s += wv * r[(b, jr)];
                    }
                    tmp[(jl * k + j) * core.right + b] = s;
                }
            }
        }
        let mut g = TtCore::zeros(core.left, k, core.right);
        for jl in 0..pl {
            for a in 0..core.left {
                let s = l[(jl, a)];
                if s == T::zero() {
                    continue;
                }
                for jb in 0..k * core.right {
                    g.data[a * k * core.right + jb] += s * tmp[jl * k * core.right + jb];
                }
            }
        }
        g
    }

    /// QR of the stacked core `i < n`; the triangular factor moves into
    /// core `i+1`.
    pub fn left_orthogonalize_at(&mut self, i: usize) -> Result<()> {
        if i >= self.last() {
            return Err(Error::SiteOutOfRange {
                site: i,
                len: self.cores.len(),
            });
        }
        let core = &self.cores[i];
        if core.norm() == 0.0 {
            return Err(Error::ZeroCore(i));
        }
        let m = core.stacked();
        if m.nrows() < m.ncols() {
            return Err(Error::InvalidRanks(format!(
                "core {i} has more columns than rows; validate the profile first"
            )));
        }
        let (left, phys) = (core.left, core.phys);
        let qr = m.qr();
        let (q, r) = (qr.q(), qr.r());
        self.cores[i] = TtCore::from_stacked(left, phys, &q)?;
        let next = &self.cores[i + 1];
        let merged = r * next.right_unfolding();
        self.cores[i + 1] = TtCore::from_right_unfolding(next.phys, &merged)?;
        Ok(())
    }

    /// LQ of the right unfolding of core `i > 0`; the triangular factor
    /// moves into core `i-1`.
    pub fn right_orthogonalize_at(&mut self, i: usize) -> Result<()> {
        if i == 0 || i > self.last() {
            return Err(Error::SiteOutOfRange {
                site: i,
                len: self.cores.len(),
            });
        }
        let core = &self.cores[i];
        if core.norm() == 0.0 {
            return Err(Error::ZeroCore(i));
        }
        let m = core.right_unfolding();
        if m.ncols() < m.nrows() {
            return Err(Error::InvalidRanks(format!(
                "core {i} has more rows than columns; validate the profile first"
            )));
        }
        let phys = core.phys;
        let qr = m.adjoint().qr();
        let (q, r) = (qr.q(), qr.r());
        self.cores[i] = TtCore::from_right_unfolding(phys, &q.adjoint())?;
        let prev = &self.cores[i - 1];
        let merged = prev.stacked() * r.adjoint();
        self.cores[i - 1] = TtCore::from_stacked(prev.left, prev.phys, &merged)?;
        Ok(())
    }

    /// Mixed canonical form about `site`: cores left of it left-unitary,
    /// cores right of it right-unitary. The represented tensor is unchanged.
    pub fn orthogonalize(&self, site: usize) -> Result<Self> {
        if site > self.last() {
            return Err(Error::SiteOutOfRange {
                site,
                len: self.cores.len(),
            });
        }
        let mut t = self.clone();
        for i in 0..site {
            t.left_orthogonalize_at(i)?;
        }
        for i in (site + 1..=t.last()).rev() {
            t.right_orthogonalize_at(i)?;
        }
        Ok(t)
    }

    /// `|| A^H A - I ||_F` for the stacked core.
    pub fn left_unitarity_residual(&self, i: usize) -> f64 {
        let m = self.cores[i].stacked();
        let g = m.adjoint() * &m;
        (g - DMatrix::identity(m.ncols(), m.ncols())).norm()
    }

    /// `|| B B^H - I ||_F` for the right unfolding.
    pub fn right_unitarity_residual(&self, i: usize) -> f64 {
        let m = self.cores[i].right_unfolding();
        let g = &m * m.adjoint();
        (g - DMatrix::identity(m.nrows(), m.nrows())).norm()
    }

    /// Moves into the identity-block chart by absorbing the inverse of each
    /// leading block into the next core.
    pub fn to_gauged(&self) -> Result<GaugedTrain<T>> {
        let n = self.last();
        let mut cores = self.cores.clone();
        for i in 0..n {
            let x = cores[i].stacked();
            let r = x.ncols();
            if x.nrows() < r {
                return Err(Error::InvalidRanks(format!(
                    "core {i} has fewer rows than columns"
                )));
            }
            let lead = x.rows(0, r).into_owned();
            let sv = lead.clone().singular_values();
            let cond = sv.max() / sv.min();
            if !(cond <= MAX_LEADING_COND) {
                return Err(Error::SingularLeadingRows {
                    step: i,
                    rank: r,
                    cond,
                });
            }
            let inv = lead
                .clone()
                .try_inverse()
                .ok_or(Error::SingularLeadingRows {
                    step: i,
                    rank: r,
                    cond: f64::INFINITY,
                })?;
            let mut gx = x * inv;
            for a in 0..r {
                for b in 0..r {
                    gx[(a, b)] = if a == b { T::one() } else { T::zero() };
                }
            }
            cores[i] = TtCore::from_stacked(cores[i].left, cores[i].phys, &gx)?;
            let next = &cores[i + 1];
            let merged = lead * next.right_unfolding();
            cores[i + 1] = TtCore::from_right_unfolding(next.phys, &merged)?;
        }
        GaugedTrain::from_train(TensorTrain::new(cores)?)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(TrainJson {
            k: self.shape.dims().to_vec(),
            r: self.ranks.inner().to_vec(),
            cores: self
                .cores
                .iter()
                .map(|c| CoreJson {
                    re: c.data.iter().map(|z| z.re()).collect(),
                    im: c.data.iter().map(|z| z.im()).collect(),
                })
                .collect(),
        })
        .expect("train serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let raw: TrainJson = serde_json::from_value(value.clone())?;
        let k = Shape::new(raw.k)?;
        let r = RankProfile::new(raw.r)?;
        r.check_against(&k)?;
        if raw.cores.len() != k.order() {
            return Err(Error::SizeMismatch {
                expected: k.order(),
                got: raw.cores.len(),
            });
        }
        let cores = raw
            .cores
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                let im = if c.im.is_empty() {
                    vec![0.0; c.re.len()]
                } else {
                    c.im
                };
                if im.len() != c.re.len() {
                    return Err(Error::SizeMismatch {
                        expected: c.re.len(),
                        got: im.len(),
                    });
                }
                let data =
                    c.re.iter()
                        .zip(&im)
                        .map(|(&re, &im)| {
                            T::from_parts(re, im).ok_or_else(|| {
                                Error::InvalidParameters("complex entry in a real train".into())
                            })
                        })
                        .collect::<Result<Vec<T>>>()?;
                TtCore::new(r.bond(i), k.dim(i), r.bond(i + 1), data)
            })
            .collect::<Result<Vec<_>>>()?;
        TensorTrain::new(cores)
    }
}

impl TensorTrain<f64> {
    pub fn to_complex(&self) -> TensorTrain<num_complex::Complex64> {
        let cores = self
            .cores
            .iter()
            .map(|c| TtCore {
                left: c.left,
                phys: c.phys,
                right: c.right,
                data: c
                    .data
                    .iter()
                    .map(|&x| num_complex::Complex64::new(x, 0.0))
                    .collect(),
            })
            .collect();
        TensorTrain {
            shape: self.shape.clone(),
            ranks: self.ranks.clone(),
            cores,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CoreJson {
    re: Vec<f64>,
    #[serde(default)]
    im: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TrainJson {
    k: Vec<usize>,
    r: Vec<usize>,
    cores: Vec<CoreJson>,
}

/// Partial contractions of a train. `left[c]` is `(k_0...k_{c-1}) x r_c`
/// and `right[c]` is `r_{c+1} x (k_{c+1}...k_n)`, so that
/// `psi[jl, j, jr] = sum_{a,b} left[c][jl,a] A_c[a,j,b] right[c][b,jr]`.
#[derive(Clone, Debug)]
pub struct Environments<T> {
    pub left: Vec<DMatrix<T>>,
    pub right: Vec<DMatrix<T>>,
}

/// Positions of the free parameters of the identity-block chart: the rows
/// below the leading identity of each stacked core `X_0..X_{n-1}`, then
/// every entry of `X_n`, each in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeLayout {
    /// `(core, flat offset inside the core)` for every parameter.
    slots: Vec<(usize, usize)>,
    /// First parameter index of each core, plus the total at the end.
    offsets: Vec<usize>,
}

impl GaugeLayout {
    pub fn new(k: &Shape, r: &RankProfile) -> Self {
        let n = k.order() - 1;
        let mut slots = Vec::new();
        let mut offsets = Vec::with_capacity(n + 2);
        for c in 0..=n {
            offsets.push(slots.len());
            let (rl, kc, rr) = (r.bond(c), k.dim(c), r.bond(c + 1));
            let first_row = if c < n { rr } else { 0 };
            for row in first_row..rl * kc {
                for col in 0..rr {
                    slots.push((c, row * rr + col));
                }
            }
        }
        offsets.push(slots.len());
        GaugeLayout { slots, offsets }
    }

    pub fn param_count(&self) -> usize {
        self.slots.len()
    }

    pub fn slot(&self, p: usize) -> (usize, usize) {
        self.slots[p]
    }

    /// Parameter index range owned by core `c`.
    pub fn core_range(&self, c: usize) -> std::ops::Range<usize> {
        self.offsets[c]..self.offsets[c + 1]
    }

    pub fn cores(&self) -> usize {
        self.offsets.len() - 1
    }
}

/// A train in the identity-block chart: the top `r_{i+1} x r_{i+1}` block
/// of every stacked core `X_i`, `i < n`, is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugedTrain<T> {
    train: TensorTrain<T>,
}

impl<T: Scalar> GaugedTrain<T> {
    /// Checks the identity-block invariant to `1e-12`.
    pub fn from_train(train: TensorTrain<T>) -> Result<Self> {
        let n = train.last();
        for i in 0..n {
            let core = &train.cores[i];
            let r = core.right;
            if core.left * core.phys < r {
                return Err(Error::InvalidRanks(format!(
                    "core {i} cannot carry an identity block"
                )));
            }
            for a in 0..r {
                for b in 0..r {
                    let expected = if a == b { T::one() } else { T::zero() };
                    if (core.data[a * r + b] - expected).modulus() > 1e-12 {
                        return Err(Error::InvalidParameters(format!(
                            "core {i} is not in the identity-block gauge"
                        )));
                    }
                }
            }
        }
        if train.cores[n].norm() == 0.0 {
            return Err(Error::ZeroCore(n));
        }
        Ok(GaugedTrain { train })
    }

    pub fn from_params(k: &Shape, r: &RankProfile, params: &[T]) -> Result<Self> {
        r.check_against(k)?;
        let layout = GaugeLayout::new(k, r);
        if params.len() != layout.param_count() {
            return Err(Error::SizeMismatch {
                expected: layout.param_count(),
                got: params.len(),
            });
        }
        let n = k.order() - 1;
        let mut cores: Vec<TtCore<T>> = (0..=n)
            .map(|c| {
                let mut core = TtCore::zeros(r.bond(c), k.dim(c), r.bond(c + 1));
                if c < n {
                    let rr = core.right;
                    if core.left * core.phys < rr {
                        return Err(Error::InvalidRanks(format!(
                            "bond {} exceeds r_{c} k_{c}; validate the profile first",
                            rr
                        )));
                    }
                    for a in 0..rr {
                        core.data[a * rr + a] = T::one();
                    }
                }
                Ok(core)
            })
            .collect::<Result<Vec<_>>>()?;
        for (p, &v) in params.iter().enumerate() {
            let (c, off) = layout.slot(p);
            cores[c].data[off] = v;
        }
        Ok(GaugedTrain {
            train: TensorTrain::new(cores)?,
        })
    }

    pub fn layout(&self) -> GaugeLayout {
        GaugeLayout::new(self.train.shape(), self.train.ranks())
    }

    pub fn params(&self) -> Vec<T> {
        let layout = self.layout();
        (0..layout.param_count())
            .map(|p| {
                let (c, off) = layout.slot(p);
                self.train.cores[c].data[off]
            })
            .collect()
    }

    pub fn train(&self) -> &TensorTrain<T> {
        &self.train
    }

    pub fn into_train(self) -> TensorTrain<T> {
        self.train
    }

    pub fn shape(&self) -> &Shape {
        self.train.shape()
    }

    pub fn ranks(&self) -> &RankProfile {
        self.train.ranks()
    }

    pub fn core(&self, i: usize) -> &TtCore<T> {
        self.train.core(i)
    }

    pub fn decompress(&self) -> DenseTensor<T> {
        self.train.decompress()
    }

    pub fn entry(&self, index: &[usize]) -> Result<T> {
        self.train.entry(index)
    }

    /// `d psi / d x`, an `N x m` matrix over the gauge parameters.
    pub fn jacobian(&self) -> DMatrix<T> {
        let layout = self.layout();
        let env = self.train.environments();
        self.jacobian_with(&layout, &env)
    }

    pub(crate) fn jacobian_with(&self, layout: &GaugeLayout, env: &Environments<T>) -> DMatrix<T> {
        let size = self.train.shape().size();
        let mut jac = DMatrix::zeros(size, layout.param_count());
        for p in 0..layout.param_count() {
            let (c, off) = layout.slot(p);
            let core = &self.train.cores[c];
            let b = off % core.right;
            let row = off / core.right;
            let (a, j) = (row / core.phys, row % core.phys);
            let l = &env.left[c];
            let r = &env.right[c];
            let pr = r.ncols();
            for jl in 0..l.nrows() {
                let s = l[(jl, a)];
                if s == T::zero() {
                    continue;
                }
                let base = (jl * core.phys + j) * pr;
                for jr in 0..pr {
                    jac[(base + jr, p)] = s * r[(b, jr)];
                }
            }
        }
        jac
    }

    /// `J^T w` for the bilinear pairing, i.e. the gradient of `sum w_l psi_l`.
    pub fn contract_gradient(&self, w: &[T]) -> Vec<T> {
        let layout = self.layout();
        let grads = self.train.core_gradients(w);
        (0..layout.param_count())
            .map(|p| {
                let (c, off) = layout.slot(p);
                grads[c].data[off]
            })
            .collect()
    }

    /// `sum_l w_l d^2 psi_l / dx_p dx_q`. The parametrization is multilinear
    /// in the cores, so only pairs in distinct cores contribute.
    pub fn hessian_contract(&self, w: &[T]) -> DMatrix<T> {
        let layout = self.layout();
        let m = layout.param_count();
        let mut out = DMatrix::zeros(m, m);
        for p in 0..m {
            let (c, off) = layout.slot(p);
            let mut probe = self.train.clone();
            let core = &probe.cores[c];
            let mut unit = TtCore::zeros(core.left, core.phys, core.right);
            unit.data[off] = T::one();
            probe.cores[c] = unit;
            let env = probe.environments();
            for c2 in 0..layout.cores() {
                if c2 == c || layout.core_range(c2).is_empty() {
                    continue;
                }
                let g = probe.core_gradient_with(&env, c2, w);
                for q in layout.core_range(c2) {
                    out[(p, q)] = g.data[layout.slot(q).1];
                }
            }
        }
        out
    }

    /// Tangent of `t -> t * psi`: zero on the leading cores, `X_n` itself on
    /// the last one. `J v = psi`.
    pub fn scaling_direction(&self) -> Vec<T> {
        let layout = self.layout();
        let n = self.train.last();
        let mut v = vec![T::zero(); layout.param_count()];
        for p in layout.core_range(n) {
            v[p] = self.train.cores[n].data[layout.slot(p).1];
        }
        v
    }

    /// The chart point of `-psi`: negates `X_n`.
    pub fn antipode(&self) -> Self {
        let mut train = self.train.clone();
        let n = train.last();
        for z in train.cores[n].data.iter_mut() {
            *z = -*z;
        }
        GaugedTrain { train }
    }

    pub fn to_json(&self) -> serde_json::Value {
        self.train.to_json()
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        GaugedTrain::from_train(TensorTrain::from_json(value)?)
    }
}

impl GaugedTrain<f64> {
    pub fn random(k: &Shape, r: &RankProfile, rng: &mut crate::rng::Rng) -> Result<Self> {
        let m = GaugeLayout::new(k, r).param_count();
        let params: Vec<f64> = (0..m).map(|_| crate::rng::normal(rng)).collect();
        GaugedTrain::from_params(k, r, &params)
    }

    pub fn to_complex(&self) -> GaugedTrain<num_complex::Complex64> {
        GaugedTrain {
            train: self.train.to_complex(),
        }
    }
}

/// The factorization of the skeleton algorithm: for `i = 0..n`, unfold the
/// remainder to `(r_i k_i) x (k_{i+1}...k_n)`, split it as `X_i R_i` and
/// carry `R_i` forward; the last remainder is `X_n`.
pub fn factorize<T: Scalar>(t: &DenseTensor<T>, r: &RankProfile) -> Result<GaugedTrain<T>> {
    let k = t.shape();
    r.check_against(k)?;
    let n = k.order() - 1;
    let mut phi: Vec<T> = t.data().to_vec();
    let mut cores = Vec::with_capacity(n + 1);
    for i in 0..n {
        let rows = r.bond(i) * k.dim(i);
        let cols = k.span_size(i + 1..n + 1);
        let m = DMatrix::from_row_slice(rows, cols, &phi);
        let found = numerical_rank(&m, DEFAULT_RANK_TOL);
        if found != r.bond(i + 1) {
            return Err(Error::RankMismatch {
                step: i,
                expected: r.bond(i + 1),
                found,
            });
        }
        let pair = xr_step(&m, r.bond(i + 1), i)?;
        cores.push(TtCore::from_stacked(r.bond(i), k.dim(i), &pair.x)?);
        phi = row_major(&pair.r);
    }
    cores.push(TtCore::new(r.bond(n), k.dim(n), 1, phi)?);
    GaugedTrain::from_train(TensorTrain::new(cores)?)
}

/// Decompression of a train (alias of [`TensorTrain::decompress`]).
pub fn decompress<T: Scalar>(g: &GaugedTrain<T>) -> DenseTensor<T> {
    g.decompress()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::tensor::flattening_ranks;
    use proptest::prelude::*;

    fn shape(k: &[usize]) -> Shape {
        Shape::new(k.to_vec()).unwrap()
    }

    fn ranks(r: &[usize]) -> RankProfile {
        RankProfile::new(r.to_vec()).unwrap()
    }

    fn worked_tensor() -> DenseTensor<f64> {
        let data = vec![2., 3., 4., 6., 6., 9., 8., 12., -2., -3., -4., -6.];
        DenseTensor::new(shape(&[3, 2, 2]), data).unwrap()
    }

    /// Def 2.1 evaluated literally, with explicit block matrices.
    fn product_oracle(train: &TensorTrain<f64>, index: &[usize]) -> f64 {
        let mut acc = DMatrix::from_element(1, 1, 1.0);
        for (core, &j) in train.cores().iter().zip(index) {
            acc *= core.block(j);
        }
        acc[(0, 0)]
    }

    #[test]
    fn validate_ranks_examples() {
        assert_eq!(
            validate_ranks(&shape(&[2, 2, 2, 2]), &ranks(&[1, 2, 1])).unwrap(),
            ranks(&[1, 2, 1])
        );
        assert_eq!(
            validate_ranks(&shape(&[2, 2]), &ranks(&[5])).unwrap(),
            ranks(&[2])
        );
        assert_eq!(
            validate_ranks(&shape(&[2; 6]), &ranks(&[9; 5])).unwrap(),
            ranks(&[2, 4, 8, 4, 2])
        );
        assert!(validate_ranks(&shape(&[2, 2]), &ranks(&[1, 1])).is_err());
        assert_eq!(max_ranks(&shape(&[2; 6])), ranks(&[2, 4, 8, 4, 2]));
    }

    #[test]
    fn xr_worked_example() {
        let a = worked_tensor().unfold(0).unwrap();
        let pair = xr_decompose(&a, 2).unwrap();
        let expected = DMatrix::from_row_slice(3, 2, &[1., 0., 0., 1., -1., 0.]);
        assert!((&pair.x - expected).amax() < 1e-12);
        assert_eq!(pair.r, a.rows(0, 2).into_owned());
        assert!((&pair.x * &pair.r - &a).norm() < 1e-12);
    }

    #[test]
    fn xr_identity_leading_block() {
        let a = DMatrix::from_row_slice(4, 2, &[1., 0., 0., 1., 3., -2., 0.5, 7.]);
        let pair = xr_decompose(&a, 2).unwrap();
        assert_eq!(pair.r, DMatrix::identity(2, 2));
        assert!((&pair.x - &a).amax() < 1e-14);
    }

    #[test]
    fn xr_reconstructs_random_rank_three() {
        let mut g = rng::seeded(11);
        for _ in 0..20 {
            let a = rng::normal_matrix(6, 3, &mut g) * rng::normal_matrix(3, 4, &mut g);
            let pair = xr_decompose(&a, 3).unwrap();
            assert!((&pair.x * &pair.r - &a).norm() / a.norm() < 1e-10);
        }
    }

    #[test]
    fn xr_rejects_singular_leading_rows() {
        let a = DMatrix::from_row_slice(3, 2, &[1., 2., 2., 4., 0., 1.]);
        assert!(matches!(
            xr_decompose(&a, 2),
            Err(Error::SingularLeadingRows { step: 0, .. })
        ));
    }

    #[test]
    fn factorize_worked_example() {
        let t = worked_tensor();
        let g = factorize(&t, &ranks(&[2, 1])).unwrap();
        let x0 = [1., 0., 0., 1., -1., 0.];
        let x1 = [1., 2., 3., 4.];
        let x2 = [2., 3.];
        for (core, expected) in [(0, &x0[..]), (1, &x1[..]), (2, &x2[..])] {
            for (a, b) in g.core(core).data().iter().zip(expected) {
                assert!((a - b).abs() < 1e-12, "core {core}");
            }
        }
        assert!(g.decompress().max_abs_diff(&t) < 1e-12);
        assert!((g.entry(&[0, 0, 0]).unwrap() - 2.0).abs() < 1e-12);
        // The exact cores reproduce the tensor bit for bit.
        let exact = GaugedTrain::from_params(
            &shape(&[3, 2, 2]),
            &ranks(&[2, 1]),
            &[-1., 0., 2., 3., 4., 2., 3.],
        )
        .unwrap();
        assert_eq!(exact.decompress(), t);
    }

    #[test]
    fn factorize_rank_one() {
        let u = [2.0, -1.0, 0.5];
        let v = [3.0, 4.0];
        let t = DenseTensor::from_fn(shape(&[3, 2]), |ix| u[ix[0]] * v[ix[1]]);
        let g = factorize(&t, &ranks(&[1])).unwrap();
        for (i, &x) in g.core(0).data().iter().enumerate() {
            assert!((x - u[i] / u[0]).abs() < 1e-14);
        }
        for (i, &x) in g.core(1).data().iter().enumerate() {
            assert!((x - u[0] * v[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn factorize_reports_rank_mismatch() {
        let t = worked_tensor();
        assert!(matches!(
            factorize(&t, &ranks(&[1, 1])),
            Err(Error::RankMismatch {
                step: 0,
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn decompress_unit_entry() {
        let k = shape(&[2, 3, 2]);
        let r = ranks(&[2, 2]);
        let layout = GaugeLayout::new(&k, &r);
        let mut params = vec![0.0; layout.param_count()];
        // X_n = e_1^T: the first entry of the last core.
        params[layout.core_range(2).start] = 1.0;
        let g = GaugedTrain::from_params(&k, &r, &params).unwrap();
        let t = g.decompress();
        assert_eq!(t.get(&[0, 0, 0]).unwrap(), 1.0);
        assert_eq!(t.data().iter().filter(|&&x| x != 0.0).count(), 1);
    }

    #[test]
    fn decompress_matches_product_oracle() {
        let mut g = rng::seeded(5);
        let cases = [
            (vec![2, 3, 2], vec![2, 2]),
            (vec![3, 2, 2, 2], vec![2, 3, 2]),
            (vec![4, 3], vec![3]),
        ];
        for trial in 0..50 {
            let (k, r) = &cases[trial % cases.len()];
            let train =
                TensorTrain::random_with(&shape(k), &ranks(r), || rng::normal(&mut g)).unwrap();
            let t = train.decompress();
            for l in 0..t.data().len() {
                let ix = t.shape().multi_index(l);
                assert!((t.data()[l] - product_oracle(&train, &ix)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn entry_matches_decompress() {
        let mut g = rng::seeded(8);
        for _ in 0..1000 {
            let k = shape(&[2, 3, 2]);
            let train =
                TensorTrain::random_with(&k, &ranks(&[2, 2]), || rng::normal(&mut g)).unwrap();
            let l = (rng::normal(&mut g).abs() * 1e6) as usize % k.size();
            let ix = k.multi_index(l);
            assert!((train.entry(&ix).unwrap() - train.decompress().data()[l]).abs() < 1e-12);
        }
        let train = TensorTrain::random_with(&shape(&[2, 2]), &ranks(&[1]), || 1.0).unwrap();
        assert!(train.entry(&[0, 2]).is_err());
        assert!(train.entry(&[0]).is_err());
    }

    #[test]
    fn entry_on_zero_block_row() {
        let k = shape(&[2, 2]);
        let r = ranks(&[1]);
        // X_0 = (1, 0): the second block row of core 0 vanishes.
        let g = GaugedTrain::from_params(&k, &r, &[0.0, 3.0, 4.0]).unwrap();
        assert_eq!(g.entry(&[1, 0]).unwrap(), 0.0);
        assert_eq!(g.entry(&[1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn tt_dimension_examples() {
        assert_eq!(tt_dimension(&shape(&[2, 2, 2, 2]), &ranks(&[1, 2, 1])), 6);
        assert_eq!(tt_dimension(&shape(&[4, 5]), &ranks(&[1])), 3 + 5);
        assert_eq!(tt_dimension(&shape(&[2, 2, 2]), &ranks(&[1, 1])), 4);
    }

    #[test]
    fn jacobian_rank_equals_dimension() {
        let mut g = rng::seeded(3);
        for (k, r) in [
            (vec![2, 2, 2], vec![1, 1]),
            (vec![2, 2, 2, 2], vec![1, 2, 1]),
            (vec![3, 2, 2], vec![2, 1]),
        ] {
            let (k, r) = (shape(&k), ranks(&r));
            let train = GaugedTrain::random(&k, &r, &mut g).unwrap();
            let jac = train.jacobian();
            assert_eq!(numerical_rank(&jac, 1e-10), tt_dimension(&k, &r));
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut g = rng::seeded(21);
        let (k, r) = (shape(&[2, 3, 2]), ranks(&[2, 2]));
        let train = GaugedTrain::random(&k, &r, &mut g).unwrap();
        let jac = train.jacobian();
        let x = train.params();
        let h = 1e-6;
        for p in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[p] += h;
            xm[p] -= h;
            let tp = GaugedTrain::from_params(&k, &r, &xp).unwrap().decompress();
            let tm = GaugedTrain::from_params(&k, &r, &xm).unwrap().decompress();
            for l in 0..k.size() {
                let fd = (tp.data()[l] - tm.data()[l]) / (2.0 * h);
                assert!((fd - jac[(l, p)]).abs() < 1e-7);
            }
        }
        // J v = psi along the scaling direction.
        let v = DMatrix::from_column_slice(x.len(), 1, &train.scaling_direction());
        let jv = &jac * v;
        let psi = train.decompress();
        for l in 0..k.size() {
            assert!((jv[(l, 0)] - psi.data()[l]).abs() < 1e-12);
        }
    }

    #[test]
    fn contract_gradient_is_jacobian_transpose() {
        let mut g = rng::seeded(4);
        let (k, r) = (shape(&[2, 2, 2, 2]), ranks(&[1, 2, 1]));
        let train = GaugedTrain::random(&k, &r, &mut g).unwrap();
        let w: Vec<f64> = (0..k.size()).map(|_| rng::normal(&mut g)).collect();
        let jtw = train.jacobian().transpose() * DMatrix::from_column_slice(w.len(), 1, &w);
        for (a, b) in train.contract_gradient(&w).iter().zip(jtw.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hessian_contract_matches_finite_differences() {
        let mut g = rng::seeded(9);
        let (k, r) = (shape(&[2, 3, 2]), ranks(&[2, 2]));
        let train = GaugedTrain::random(&k, &r, &mut g).unwrap();
        let w: Vec<f64> = (0..k.size()).map(|_| rng::normal(&mut g)).collect();
        let hw = train.hessian_contract(&w);
        let x = train.params();
        let h = 1e-6;
        for q in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[q] += h;
            xm[q] -= h;
            let gp = GaugedTrain::from_params(&k, &r, &xp)
                .unwrap()
                .contract_gradient(&w);
            let gm = GaugedTrain::from_params(&k, &r, &xm)
                .unwrap()
                .contract_gradient(&w);
            for p in 0..x.len() {
                let fd = (gp[p] - gm[p]) / (2.0 * h);
                assert!((fd - hw[(p, q)]).abs() < 1e-6, "p={p} q={q}");
            }
        }
        assert!((&hw - hw.transpose()).amax() < 1e-12);
    }

    #[test]
    fn orthogonalize_preserves_tensor() {
        let mut g = rng::seeded(13);
        let (k, r) = (shape(&[2, 3, 2, 2]), ranks(&[2, 3, 2]));
        let train = TensorTrain::random_with(&k, &r, || rng::normal(&mut g)).unwrap();
        let t = train.decompress();
        for site in 0..=train.last() {
            let o = train.orthogonalize(site).unwrap();
            let t2 = o.decompress();
            assert!(t.max_abs_diff(&t2) / t.norm() < 1e-12);
            for i in 0..site {
                assert!(o.left_unitarity_residual(i) < 1e-12);
            }
            for i in site + 1..=o.last() {
                assert!(o.right_unitarity_residual(i) < 1e-12);
            }
        }
        let twice = train.orthogonalize(0).unwrap().orthogonalize(0).unwrap();
        assert!(twice.decompress().max_abs_diff(&t) / t.norm() < 1e-12);
    }

    #[test]
    fn orthogonalize_rejects_zero_core() {
        let k = shape(&[2, 2, 2]);
        let mut train = TensorTrain::random_with(&k, &ranks(&[2, 2]), || 1.0).unwrap();
        train.set_core(1, TtCore::zeros(2, 2, 2)).unwrap();
        assert!(matches!(train.orthogonalize(0), Err(Error::ZeroCore(1))));
    }

    #[test]
    fn to_gauged_matches_factorize() {
        let mut g = rng::seeded(17);
        let (k, r) = (shape(&[2, 2, 2, 2]), ranks(&[1, 2, 1]));
        let train = TensorTrain::random_with(&k, &r, || rng::normal(&mut g)).unwrap();
        let gauged = train.to_gauged().unwrap();
        let t = train.decompress();
        assert!(gauged.decompress().max_abs_diff(&t) < 1e-12);
        let f = factorize(&t, &r).unwrap();
        for (a, b) in f.params().iter().zip(gauged.params()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn generic_ranks_and_round_trip() {
        let mut g = rng::seeded(1);
        for (k, r) in [
            (vec![2, 2], vec![1]),
            (vec![2, 2, 2], vec![1, 2]),
            (vec![2, 2, 2, 2], vec![1, 2, 1]),
            (vec![3, 2, 2], vec![2, 1]),
        ] {
            let (k, r) = (shape(&k), ranks(&r));
            let r = validate_ranks(&k, &r).unwrap();
            for _ in 0..20 {
                let train = GaugedTrain::random(&k, &r, &mut g).unwrap();
                let t = train.decompress();
                assert_eq!(flattening_ranks(&t, DEFAULT_RANK_TOL), r.inner().to_vec());
                let back = factorize(&t, &r).unwrap();
                for (a, b) in back.params().iter().zip(train.params()) {
                    assert!((a - b).abs() < 1e-9);
                }
                assert!(back.decompress().max_abs_diff(&t) < 1e-9);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let mut g = rng::seeded(2);
        let train = GaugedTrain::random(&shape(&[2, 3]), &ranks(&[1]), &mut g).unwrap();
        let back = GaugedTrain::<f64>::from_json(&train.to_json()).unwrap();
        assert_eq!(back, train);
        let bad = serde_json::json!({"k": [2, 2], "r": [1], "cores": [{"re": [5.0, 1.0]}, {"re": [1.0, 1.0]}]});
        assert!(GaugedTrain::<f64>::from_json(&bad).is_err());
    }

    #[test]
    fn antipode_negates_tensor() {
        let mut g = rng::seeded(6);
        let train = GaugedTrain::random(&shape(&[2, 2, 2]), &ranks(&[1, 1]), &mut g).unwrap();
        let t = train.decompress();
        let a = train.antipode().decompress();
        assert!(t.scale(-1.0).max_abs_diff(&a) == 0.0);
    }

    fn profile() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        prop::collection::vec(1usize..4, 2..6).prop_flat_map(|k| {
            let n = k.len() - 1;
            (Just(k), prop::collection::vec(1usize..10, n))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn validate_ranks_idempotent_and_attainable((k, r) in profile()) {
            let (k, r) = (shape(&k), ranks(&r));
            let once = validate_ranks(&k, &r).unwrap();
            prop_assert_eq!(validate_ranks(&k, &once).unwrap(), once.clone());
            let cap = max_ranks(&k);
            for (a, b) in once.inner().iter().zip(cap.inner()) {
                prop_assert!(a <= b);
            }
        }

        #[test]
        fn decompress_ranks_bounded_by_profile((k, r) in profile(), seed in 0u64..1000) {
            let (k, r) = (shape(&k), ranks(&r));
            let r = validate_ranks(&k, &r).unwrap();
            let mut g = rng::seeded(seed);
            let train = TensorTrain::random_with(&k, &r, || rng::normal(&mut g)).unwrap();
            let found = flattening_ranks(&train.decompress(), DEFAULT_RANK_TOL);
            for (f, b) in found.iter().zip(r.inner()) {
                prop_assert!(f <= b);
            }
        }

        #[test]
        fn jacobian_rank_is_tt_dimension((k, r) in profile(), seed in 0u64..1000) {
            let (k, r) = (shape(&k), ranks(&r));
            prop_assume!(k.size() <= 256);
            let r = validate_ranks(&k, &r).unwrap();
            let mut g = rng::seeded(seed);
            let train = GaugedTrain::random(&k, &r, &mut g).unwrap();
            prop_assert_eq!(numerical_rank(&train.jacobian(), 1e-9), tt_dimension(&k, &r));
        }
    }
}
