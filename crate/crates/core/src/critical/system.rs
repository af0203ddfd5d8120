use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::Result;
use crate::tensor::{DenseTensor, RankProfile, Shape};
use crate::tt::{tt_dimension, validate_ranks, GaugeLayout, GaugedTrain};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Sphere-Lagrange stationarity equations over the identity-block chart,
/// in unknowns `z = (x, lambda)`:
///
/// `F_1 = 2 J^T (H psi - lambda psi)`, `F_2 = psi^T psi - 1`,
///
/// with bilinear (non-conjugated) products throughout, so the system is
/// polynomial in `z` and linear in `H`.
#[derive(Clone, Debug)]
pub struct CriticalSystem {
    k: Shape,
    r: RankProfile,
    layout: GaugeLayout,
}

/// Residual and Jacobian at one point.
pub struct Linearization {
    pub f: CVector,
    pub jac: CMatrix,
    pub psi: Vec<C64>,
    /// `d psi / d x`.
    pub dpsi: CMatrix,
}

impl CriticalSystem {
    pub fn new(k: &Shape, r: &RankProfile) -> Result<Self> {
        let r = validate_ranks(k, r)?;
        Ok(CriticalSystem {
            layout: GaugeLayout::new(k, &r),
            k: k.clone(),
            r,
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.k
    }

    pub fn ranks(&self) -> &RankProfile {
        &self.r
    }

    pub fn layout(&self) -> &GaugeLayout {
        &self.layout
    }

    /// Gauge parameter count `m - 1`.
    pub fn param_count(&self) -> usize {
        self.layout.param_count()
    }

    /// Unknown count `m = tt_dimension + 1`.
    pub fn nvars(&self) -> usize {
        self.param_count() + 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.k.size()
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - tt_dimension(&self.k, &self.r)
    }

    pub fn train(&self, z: &CVector) -> GaugedTrain<C64> {
        let m = self.param_count();
        GaugedTrain::from_params(&self.k, &self.r, &z.as_slice()[..m])
            .expect("parameter count matches layout")
    }

    pub fn psi(&self, z: &CVector) -> DenseTensor<C64> {
        self.train(z).decompress()
    }

    /// Point `(x, lambda)` from chart parameters and multiplier.
    pub fn point(&self, x: &[C64], lambda: C64) -> CVector {
        let mut z = CVector::zeros(self.nvars());
        z.rows_mut(0, x.len()).copy_from_slice(x);
        z[self.param_count()] = lambda;
        z
    }

    pub fn lambda(&self, z: &CVector) -> C64 {
        z[self.param_count()]
    }

    pub fn evaluate(&self, z: &CVector, h: &CMatrix) -> CVector {
        let train = self.train(z);
        let psi = CVector::from_vec(train.decompress().into_data());
        let lambda = self.lambda(z);
        let w = h * &psi - &psi * lambda;
        let g = train.contract_gradient(w.as_slice());
        let mut f = CVector::zeros(self.nvars());
        for (i, v) in g.iter().enumerate() {
            f[i] = *v * 2.0;
        }
        f[self.param_count()] = psi.dot(&psi) - C64::new(1.0, 0.0);
        f
    }

    pub fn residual(&self, z: &CVector, h: &CMatrix) -> f64 {
        self.evaluate(z, h).norm()
    }

    /// `F` together with `[[2(J^T H J - lambda J^T J + sum w d^2 psi), -2 J^T psi], [2 psi^T J, 0]]`.
    pub fn linearize(&self, z: &CVector, h: &CMatrix) -> Linearization {
        let m = self.param_count();
        let train = self.train(z);
        let env = train.train().environments();
        let jac_psi = train.jacobian_with(&self.layout, &env);
        let psi = CVector::from_vec(train.decompress().into_data());
        let lambda = self.lambda(z);
        let hpsi = h * &psi;
        let w = &hpsi - &psi * lambda;
        let jt = jac_psi.transpose();
        let two = C64::new(2.0, 0.0);

        let mut f = CVector::zeros(m + 1);
        f.rows_mut(0, m).copy_from(&(&jt * &w * two));
        f[m] = psi.dot(&psi) - C64::new(1.0, 0.0);

        let hj = h * &jac_psi;
        let block = &jt * hj - (&jt * &jac_psi) * lambda + train.hessian_contract(w.as_slice());
        let jtpsi = &jt * &psi;
        let mut jac = CMatrix::zeros(m + 1, m + 1);
        jac.view_mut((0, 0), (m, m)).copy_from(&(block * two));
        for i in 0..m {
            jac[(i, m)] = -two * jtpsi[i];
            jac[(m, i)] = two * jtpsi[i];
        }
        Linearization {
            f,
            jac,
            psi: psi.as_slice().to_vec(),
            dpsi: jac_psi,
        }
    }

    /// `dF/dH [delta]`: `(2 J^T delta psi, 0)`.
    pub fn parameter_derivative(&self, lin: &Linearization, delta: &CMatrix) -> CVector {
        let m = self.param_count();
        let psi = CVector::from_column_slice(&lin.psi);
        let v = lin.dpsi.transpose() * (delta * psi);
        let mut out = CVector::zeros(m + 1);
        for i in 0..m {
            out[i] = v[i] * 2.0;
        }
        out
    }

    /// The antipodal point: `X_n -> -X_n`, same multiplier.
    pub fn antipode(&self, z: &CVector) -> CVector {
        let mut out = z.clone();
        let n = self.k.order() - 1;
        for p in self.layout.core_range(n) {
            out[p] = -out[p];
        }
        out
    }

    /// Newton iteration at fixed `H`; returns the final point and residual.
    pub fn newton(&self, z0: &CVector, h: &CMatrix, max_iter: usize, tol: f64) -> (CVector, f64) {
        let mut z = z0.clone();
        let mut res = self.residual(&z, h);
        for _ in 0..max_iter {
            if res < tol {
                break;
            }
            let lin = self.linearize(&z, h);
            let Some(step) = lin.jac.lu().solve(&lin.f) else {
                break;
            };
            let candidate = &z - step;
            let cres = self.residual(&candidate, h);
            if !cres.is_finite() || cres > 2.0 * res + 1e-12 {
                break;
            }
            z = candidate;
            res = cres;
        }
        (z, res)
    }
}

pub fn to_complex(h: &DMatrix<f64>) -> CMatrix {
    h.map(|x| C64::new(x, 0.0))
}
