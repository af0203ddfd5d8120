//! Dense tensors, flattenings and numerical rank.
//!
//! Entries are stored in lexicographic order with the last index varying
//! fastest. Under this convention the flat buffer of a tensor is, verbatim,
//! the row-major buffer of every one of its flattenings, so `unfold` and
//! `tensorize` are pure reshapes.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Real or complex scalar usable in tensors and trains.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    fn from_parts(re: f64, im: f64) -> Option<Self>;
    fn re(self) -> f64;
    fn im(self) -> f64;
}

impl Scalar for f64 {
    fn from_parts(re: f64, im: f64) -> Option<Self> {
        (im == 0.0).then_some(re)
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
}

impl Scalar for Complex64 {
    fn from_parts(re: f64, im: f64) -> Option<Self> {
        Some(Complex64::new(re, im))
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
}

/// Physical dimensions `k_0, ..., k_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape(Vec<usize>);

impl Shape {
    /// A single-site shape is allowed: it is the degenerate train whose only
    /// core is the whole vector.
    pub fn new(k: Vec<usize>) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::InvalidShape(
                "shape must have at least one mode".into(),
            ));
        }
        if k.contains(&0) {
            return Err(Error::InvalidShape(format!("zero dimension in {k:?}")));
        }
        k.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidShape(format!("size of {k:?} overflows")))?;
        Ok(Shape(k))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    /// Number of modes, `n + 1`.
    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// Total number of entries `k_0 * ... * k_n`.
    pub fn size(&self) -> usize {
        self.0.iter().product()
    }

    pub fn dim(&self, i: usize) -> usize {
        self.0[i]
    }

    /// Product of the dimensions in `range`.
    pub fn span_size(&self, range: std::ops::Range<usize>) -> usize {
        self.0[range].iter().product()
    }

    pub fn linear_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.0.len() || index.iter().zip(&self.0).any(|(&j, &k)| j >= k) {
            return Err(Error::IndexOutOfRange {
                index: index.to_vec(),
                shape: self.0.clone(),
            });
        }
        Ok(index
            .iter()
            .zip(&self.0)
            .fold(0usize, |acc, (&j, &k)| acc * k + j))
    }

    pub fn multi_index(&self, mut linear: usize) -> Vec<usize> {
        let mut idx = vec![0; self.0.len()];
        for (slot, &k) in idx.iter_mut().zip(&self.0).rev() {
            *slot = linear % k;
            linear /= k;
        }
        idx
    }
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Shape::new(v)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(s: Shape) -> Self {
        s.0
    }
}

/// Bond dimensions `r_1, ..., r_n`; the boundary bonds `r_0 = r_{n+1} = 1`
/// are implicit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct RankProfile(Vec<usize>);

impl RankProfile {
    pub fn new(r: Vec<usize>) -> Result<Self> {
        if r.contains(&0) {
            return Err(Error::InvalidRanks(format!("zero bond dimension in {r:?}")));
        }
        Ok(RankProfile(r))
    }

    /// All-ones profile for a shape.
    pub fn ones(shape: &Shape) -> Self {
        RankProfile(vec![1; shape.order() - 1])
    }

    pub fn check_against(&self, shape: &Shape) -> Result<()> {
        if self.0.len() + 1 != shape.order() {
            return Err(Error::InvalidRanks(format!(
                "{} bond dimensions given for a shape of order {}",
                self.0.len(),
                shape.order()
            )));
        }
        Ok(())
    }

    pub fn inner(&self) -> &[usize] {
        &self.0
    }

    /// Bond `i` in `0..=n+1`, with the boundary convention.
    pub fn bond(&self, i: usize) -> usize {
        if i == 0 || i > self.0.len() {
            1
        } else {
            self.0[i - 1]
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<usize>> for RankProfile {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        RankProfile::new(v)
    }
}

impl From<RankProfile> for Vec<usize> {
    fn from(r: RankProfile) -> Self {
        r.0
    }
}

/// Row-major-convention matrix used for flattenings.
pub type FlatMatrix<T> = DMatrix<T>;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(shape: Shape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.size() {
            return Err(Error::SizeMismatch {
                expected: shape.size(),
                got: data.len(),
            });
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        let n = shape.size();
        DenseTensor {
            shape,
            data: vec![T::zero(); n],
        }
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let data = (0..shape.size())
            .map(|l| f(&shape.multi_index(l)))
            .collect();
        DenseTensor { shape, data }
    }

    pub fn from_vector(shape: Shape, v: &DVector<T>) -> Result<Self> {
        DenseTensor::new(shape, v.iter().copied().collect())
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn to_vector(&self) -> DVector<T> {
        DVector::from_column_slice(&self.data)
    }

    pub fn get(&self, index: &[usize]) -> Result<T> {
        Ok(self.data[self.shape.linear_index(index)?])
    }

    pub fn norm(&self) -> f64 {
        self.data
            .iter()
            .map(|z| z.modulus_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Bilinear (non-conjugated) self product `psi^T psi`.
    pub fn dot_self(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &z| acc + z * z)
    }

    pub fn scale(&self, s: T) -> Self {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).modulus())
            .fold(0.0, f64::max)
    }

    /// The `(k_0...k_i) x (k_{i+1}...k_n)` flattening.
    pub fn unfold(&self, split: usize) -> Result<FlatMatrix<T>> {
        let order = self.shape.order();
        if split + 1 >= order {
            return Err(Error::SplitOutOfRange { split, order });
        }
        let rows = self.shape.span_size(0..split + 1);
        let cols = self.shape.span_size(split + 1..order);
        Ok(DMatrix::from_row_slice(rows, cols, &self.data))
    }
}

impl DenseTensor<f64> {
    pub fn to_complex(&self) -> DenseTensor<Complex64> {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }
}

impl DenseTensor<Complex64> {
    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn real_part(&self) -> DenseTensor<f64> {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.re).collect(),
        }
    }
}

/// Inverse of [`DenseTensor::unfold`] for any split.
pub fn tensorize<T: Scalar>(m: &FlatMatrix<T>, shape: &Shape) -> Result<DenseTensor<T>> {
    if m.len() != shape.size() {
        return Err(Error::SizeMismatch {
            expected: shape.size(),
            got: m.len(),
        });
    }
    Ok(DenseTensor {
        shape: shape.clone(),
        data: row_major(m),
    })
}

/// Row-major copy of a matrix buffer.
pub fn row_major<T: Scalar>(m: &DMatrix<T>) -> Vec<T> {
    m.transpose().as_slice().to_vec()
}

/// Number of singular values above `tol` times the largest one.
pub fn numerical_rank<T: Scalar>(m: &FlatMatrix<T>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let largest = sv.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * largest).count()
}

/// Numerical ranks of all flattenings `psi^0, ..., psi^{n-1}`; entries are
/// zero for the zero tensor.
pub fn flattening_ranks<T: Scalar>(t: &DenseTensor<T>, tol: f64) -> Vec<usize> {
    (0..t.shape().order() - 1)
        .map(|i| numerical_rank(&t.unfold(i).expect("split in range"), tol))
        .collect()
}

/// `true` iff every flattening rank is bounded by the profile.
pub fn on_variety<T: Scalar>(t: &DenseTensor<T>, r: &RankProfile, tol: f64) -> bool {
    flattening_ranks(t, tol)
        .iter()
        .zip(r.inner())
        .all(|(found, bound)| found <= bound)
}

/// `vec(result) = H vec(T)`.
pub fn apply_operator<T: Scalar>(h: &Hamiltonian, t: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    let n = h.dim();
    if n != t.data.len() {
        return Err(Error::DimensionMismatch {
            op: n,
            len: t.data.len(),
        });
    }
    let m = h.matrix();
    let data = (0..n)
        .map(|i| {
            (0..n).fold(T::zero(), |acc, j| {
                acc + T::from_real(m[(i, j)]) * t.data[j]
            })
        })
        .collect();
    Ok(DenseTensor {
        shape: t.shape.clone(),
        data,
    })
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    shape: Vec<usize>,
    re: Vec<f64>,
    #[serde(default)]
    im: Vec<f64>,
}

impl<T: Scalar> DenseTensor<T> {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(TensorJson {
            shape: self.shape.dims().to_vec(),
            re: self.data.iter().map(|z| z.re()).collect(),
            im: self.data.iter().map(|z| z.im()).collect(),
        })
        .expect("tensor serializes")
    }

    /// Parses `{"shape":[...], "re":[...], "im":[...]}`; a missing `im`
    /// means a real tensor.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let raw: TensorJson = serde_json::from_value(value.clone())?;
        let shape = Shape::new(raw.shape)?;
        let im = if raw.im.is_empty() {
            vec![0.0; raw.re.len()]
        } else {
            raw.im
        };
        if im.len() != raw.re.len() {
            return Err(Error::SizeMismatch {
                expected: raw.re.len(),
                got: im.len(),
            });
        }
        let data = raw
            .re
            .iter()
            .zip(&im)
            .map(|(&re, &im)| {
                T::from_parts(re, im).ok_or_else(|| {
                    Error::InvalidParameters("complex entry in a real tensor".into())
                })
            })
            .collect::<Result<Vec<T>>>()?;
        DenseTensor::new(shape, data)
    }
}
