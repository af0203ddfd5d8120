use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::tensor::{apply_operator, DenseTensor, Scalar};
use crate::tt::{GaugedTrain, TensorTrain};

/// Smallest `|psi^T psi|` accepted as a denominator.
pub const MIN_DENOMINATOR: f64 = 1e-300;

fn bilinear<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `psi^T H psi / psi^T psi` (bilinear, so complex points give complex
/// values).
pub fn rayleigh_quotient<T: Scalar>(h: &Hamiltonian, t: &DenseTensor<T>) -> Result<T> {
    let denom = t.dot_self();
    if denom.modulus() <= MIN_DENOMINATOR {
        return Err(Error::IsotropicOrZero(denom.modulus()));
    }
    let hpsi = apply_operator(h, t)?;
    Ok(bilinear(t.data(), hpsi.data()) / denom)
}

/// Ambient gradient `2((psi^T psi) H psi - (psi^T H psi) psi) / (psi^T psi)^2`
/// of the quotient.
pub fn rayleigh_gradient<T: Scalar>(h: &Hamiltonian, t: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    let denom = t.dot_self();
    if denom.modulus() <= MIN_DENOMINATOR {
        return Err(Error::IsotropicOrZero(denom.modulus()));
    }
    let hpsi = apply_operator(h, t)?;
    let num = bilinear(t.data(), hpsi.data());
    let two = T::from_real(2.0);
    let data = hpsi
        .data()
        .iter()
        .zip(t.data())
        .map(|(&hp, &p)| two * (denom * hp - num * p) / (denom * denom))
        .collect();
    DenseTensor::new(t.shape().clone(), data)
}

/// Gradient of the quotient with respect to the gauge parameters,
/// `2 J^T (H psi - R psi) / psi^T psi`, together with `R`.
pub fn gauge_gradient<T: Scalar>(h: &Hamiltonian, g: &GaugedTrain<T>) -> Result<(Vec<T>, T)> {
    let psi = g.decompress();
    let denom = psi.dot_self();
    if denom.modulus() <= MIN_DENOMINATOR {
        return Err(Error::IsotropicOrZero(denom.modulus()));
    }
    let hpsi = apply_operator(h, &psi)?;
    let rq = bilinear(psi.data(), hpsi.data()) / denom;
    let scale = T::from_real(2.0) / denom;
    let w: Vec<T> = hpsi
        .data()
        .iter()
        .zip(psi.data())
        .map(|(&hp, &p)| scale * (hp - rq * p))
        .collect();
    Ok((g.contract_gradient(&w), rq))
}

/// `|grad_x R_H| / (|R_H| + 1)` over the identity-block gauge parameters.
/// Trains outside the chart fall back to the gradient over all core
/// entries, which vanishes at the same points.
pub fn stationarity_residual(h: &Hamiltonian, train: &TensorTrain<f64>) -> Result<f64> {
    let (grad, rq) = match train.to_gauged() {
        Ok(g) => gauge_gradient(h, &g)?,
        Err(Error::SingularLeadingRows { .. }) => {
            let psi = train.decompress();
            let denom = psi.dot_self();
            if denom <= MIN_DENOMINATOR {
                return Err(Error::IsotropicOrZero(denom));
            }
            let hpsi = apply_operator(h, &psi)?;
            let rq = bilinear(psi.data(), hpsi.data()) / denom;
            let w: Vec<f64> = hpsi
                .data()
                .iter()
                .zip(psi.data())
                .map(|(&hp, &p)| 2.0 * (hp - rq * p) / denom)
                .collect();
            let grads = train.core_gradients(&w);
            (grads.iter().flat_map(|c| c.data().to_vec()).collect(), rq)
        }
        Err(e) => return Err(e),
    };
    let norm = DVector::from_vec(grad).norm();
    Ok(norm / (rq.abs() + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::tensor::{RankProfile, Shape};
    use nalgebra::DMatrix;

    fn example_h() -> Hamiltonian {
        Hamiltonian::from_rows(&[
            &[100., 78., 76., 42.],
            &[78., 170., 111., 67.],
            &[76., 111., 85., 54.],
            &[42., 67., 54., 41.],
        ])
        .unwrap()
    }

    fn random_tensor(k: &[usize], g: &mut rng::Rng) -> DenseTensor<f64> {
        let shape = Shape::new(k.to_vec()).unwrap();
        let data = (0..shape.size()).map(|_| rng::normal(g)).collect();
        DenseTensor::new(shape, data).unwrap()
    }

    #[test]
    fn quotient_of_scaled_identity() {
        let mut g = rng::seeded(1);
        let h = Hamiltonian::from_matrix(DMatrix::identity(6, 6) * 3.5).unwrap();
        let t = random_tensor(&[2, 3], &mut g);
        assert!((rayleigh_quotient(&h, &t).unwrap() - 3.5).abs() < 1e-14);
    }

    #[test]
    fn quotient_at_eigenvectors() {
        let h = Hamiltonian::random_symmetric(8, 3);
        let eig = h.matrix().clone().symmetric_eigen();
        for i in 0..8 {
            let v = eig.eigenvectors.column(i).into_owned();
            let t = DenseTensor::from_vector(Shape::new(vec![2, 2, 2]).unwrap(), &v).unwrap();
            assert!((rayleigh_quotient(&h, &t).unwrap() - eig.eigenvalues[i]).abs() < 1e-12);
            let grad = rayleigh_gradient(&h, &t).unwrap();
            assert!(grad.norm() < 1e-10);
        }
    }

    #[test]
    fn quotient_at_listed_minimum() {
        let t = DenseTensor::new(
            Shape::new(vec![2, 2]).unwrap(),
            vec![-0.01170, 0.01709, -0.56495, 0.82486],
        )
        .unwrap();
        assert!((rayleigh_quotient(&example_h(), &t).unwrap() - 4.66885).abs() < 1e-3);
    }

    #[test]
    fn quotient_rejects_zero() {
        let t = DenseTensor::<f64>::zeros(Shape::new(vec![2, 2]).unwrap());
        assert!(matches!(
            rayleigh_quotient(&example_h(), &t),
            Err(Error::IsotropicOrZero(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut g = rng::seeded(7);
        for trial in 0..50 {
            let h = Hamiltonian::random_symmetric(6, 100 + trial);
            let t = random_tensor(&[2, 3], &mut g);
            let grad = rayleigh_gradient(&h, &t).unwrap();
            let eps = 1e-6;
            for l in 0..6 {
                let mut p = t.data().to_vec();
                let mut m = t.data().to_vec();
                p[l] += eps;
                m[l] -= eps;
                let rp = rayleigh_quotient(&h, &DenseTensor::new(t.shape().clone(), p).unwrap())
                    .unwrap();
                let rm = rayleigh_quotient(&h, &DenseTensor::new(t.shape().clone(), m).unwrap())
                    .unwrap();
                let fd = (rp - rm) / (2.0 * eps);
                let exact = grad.data()[l];
                assert!(
                    (fd - exact).abs() <= 1e-6 * exact.abs().max(1e-2),
                    "{fd} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn gradient_is_homogeneous_of_degree_minus_one() {
        let mut g = rng::seeded(9);
        let h = Hamiltonian::random_symmetric(8, 1);
        let t = random_tensor(&[2, 2, 2], &mut g);
        let g1 = rayleigh_gradient(&h, &t).unwrap();
        let g2 = rayleigh_gradient(&h, &t.scale(2.0)).unwrap();
        assert!(g1.scale(0.5).max_abs_diff(&g2) < 1e-12);
    }

    #[test]
    fn stationarity_at_embedded_eigenvector() {
        let h = Hamiltonian::random_symmetric(8, 4);
        let eig = h.matrix().clone().symmetric_eigen();
        let v = eig.eigenvectors.column(0).into_owned();
        let k = Shape::new(vec![2, 2, 2]).unwrap();
        let t = DenseTensor::from_vector(k.clone(), &v).unwrap();
        let r = crate::tt::max_ranks(&k);
        let g = crate::tt::factorize(&t, &r).unwrap();
        assert!(stationarity_residual(&h, g.train()).unwrap() < 1e-10);
    }

    #[test]
    fn gauge_gradient_matches_finite_differences() {
        let mut g = rng::seeded(12);
        let k = Shape::new(vec![2, 2, 2, 2]).unwrap();
        let r = RankProfile::new(vec![1, 2, 1]).unwrap();
        let h = Hamiltonian::random_symmetric(16, 6);
        let train = GaugedTrain::random(&k, &r, &mut g).unwrap();
        let (grad, _) = gauge_gradient(&h, &train).unwrap();
        let x = train.params();
        let eps = 1e-6;
        for p in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[p] += eps;
            xm[p] -= eps;
            let rp = rayleigh_quotient(
                &h,
                &GaugedTrain::from_params(&k, &r, &xp).unwrap().decompress(),
            )
            .unwrap();
            let rm = rayleigh_quotient(
                &h,
                &GaugedTrain::from_params(&k, &r, &xm).unwrap().decompress(),
            )
            .unwrap();
            let fd = (rp - rm) / (2.0 * eps);
            assert!((fd - grad[p]).abs() <= 1e-6 * grad[p].abs().max(1e-2));
        }
    }
}
