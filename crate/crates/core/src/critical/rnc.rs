//! Critical points on the rational normal curve `[a:b] -> [a^d : a^{d-1} b : ... : b^d]`
//! through a single univariate polynomial.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::system::C64;
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;

/// Binary form of degree `4d - 2`; `coeffs[s]` multiplies `a^{4d-2-s} b^s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RncPolynomial {
    pub d: usize,
    pub coeffs: Vec<BigRational>,
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| Error::InvalidParameters(format!("non-finite matrix entry {x}")))
}

/// Numerator of the derivative of `R_H` along the curve, divided by `b`.
///
/// With `f = psi^T H psi = sum f_s a^{2d-s} b^s` and `g = psi^T psi`, the
/// critical condition is `g f_a - f g_a = 0`, a form in `(a, b)` that always
/// carries a factor `b`.
pub fn rnc_critical_polynomial(h: &Hamiltonian, d: usize) -> Result<RncPolynomial> {
    if d == 0 || h.dim() != d + 1 {
        return Err(Error::InvalidParameters(format!(
            "a {0}x{0} matrix does not match a curve of degree {d}",
            h.dim()
        )));
    }
    let m = h.matrix();
    let mut f = vec![BigRational::zero(); 2 * d + 1];
    for i in 0..=d {
        for j in 0..=d {
            f[i + j] += exact(m[(i, j)])?;
        }
    }
    let g: Vec<BigRational> = (0..=2 * d)
        .map(|s| {
            if s % 2 == 0 {
                BigRational::from_integer(1.into())
            } else {
                BigRational::zero()
            }
        })
        .collect();
    let mut coeffs = vec![BigRational::zero(); 4 * d - 1];
    for (s, fs) in f.iter().enumerate() {
        for (t, gt) in g.iter().enumerate() {
            if s == t || gt.is_zero() || fs.is_zero() {
                continue;
            }
            let w = BigRational::from_integer(BigInt::from(t as i64 - s as i64));
            coeffs[s + t - 1] += gt * fs * w;
        }
    }
    if coeffs.iter().all(Zero::is_zero) {
        return Err(Error::Degenerate(
            "every point of the curve is critical (the critical polynomial vanishes)".into(),
        ));
    }
    Ok(RncPolynomial { d, coeffs })
}

impl RncPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Scaled so the first nonzero coefficient is 1.
    pub fn normalized(&self) -> Vec<BigRational> {
        let lead = self
            .coeffs
            .iter()
            .find(|c| !c.is_zero())
            .expect("nonzero polynomial")
            .clone();
        self.coeffs.iter().map(|c| c / &lead).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    /// Multiplicity of the root `b = 0`, i.e. `[1:0]`.
    pub fn infinite_multiplicity(&self) -> usize {
        self.coeffs.iter().take_while(|c| c.is_zero()).count()
    }

    /// Value at `(t, 1)`.
    pub fn eval(&self, t: C64) -> C64 {
        self.to_f64()
            .iter()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * t + c)
    }

    /// Roots in `t = a / b` of the dehomogenized polynomial, from the
    /// companion matrix and polished by Newton.
    pub fn finite_roots(&self) -> Vec<C64> {
        let c = self.to_f64();
        let c = &c[self.infinite_multiplicity()..];
        let deg = c.len() - 1;
        if deg == 0 {
            return Vec::new();
        }
        let mut comp = DMatrix::<f64>::zeros(deg, deg);
        for j in 0..deg {
            comp[(0, j)] = -c[j + 1] / c[0];
        }
        for i in 1..deg {
            comp[(i, i - 1)] = 1.0;
        }
        let eval = |t: C64| -> (C64, C64) {
            let mut p = C64::new(0.0, 0.0);
            let mut dp = C64::new(0.0, 0.0);
            for &a in c {
                dp = dp * t + p;
                p = p * t + a;
            }
            (p, dp)
        };
        comp.complex_eigenvalues()
            .iter()
            .map(|&t0| {
                let mut t = t0;
                for _ in 0..50 {
                    let (p, dp) = eval(t);
                    if dp.norm() == 0.0 {
                        break;
                    }
                    let step = p / dp;
                    t -= step;
                    if step.norm() <= 1e-15 * (1.0 + t.norm()) {
                        break;
                    }
                }
                if t.im.abs() < 1e-8 * (1.0 + t.norm()) {
                    t.im = 0.0;
                }
                t
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RncCritical {
    /// `t = a / b`; `None` for the point `[1:0]`.
    pub t: Option<f64>,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RncReport {
    pub d: usize,
    /// Distinct critical parameters, including `[1:0]` when present.
    pub count: usize,
    pub real: Vec<RncCritical>,
    pub minimum: Option<RncCritical>,
    /// Complex roots, `(re, im)`.
    pub complex_roots: Vec<(f64, f64)>,
}

/// `psi(t)^T H psi(t) / psi(t)^T psi(t)` with `psi(t) = (t^d, ..., t, 1)`.
pub fn rnc_energy(h: &Hamiltonian, t: Option<f64>) -> f64 {
    let n = h.dim();
    let psi: Vec<f64> = match t {
        Some(t) => (0..n).map(|i| t.powi((n - 1 - i) as i32)).collect(),
        None => (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
    };
    let m = h.matrix();
    let num: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| psi[i] * m[(i, j)] * psi[j])
        .sum();
    num / psi.iter().map(|x| x * x).sum::<f64>()
}

pub fn rnc_solve(h: &Hamiltonian, d: usize) -> Result<RncReport> {
    let poly = rnc_critical_polynomial(h, d)?;
    let roots = poly.finite_roots();
    let mut distinct: Vec<C64> = Vec::new();
    for t in roots {
        if !distinct
            .iter()
            .any(|&u| (u - t).norm() <= 1e-8 * (1.0 + t.norm()))
        {
            distinct.push(t);
        }
    }
    let infinite = poly.infinite_multiplicity() > 0;
    let mut real: Vec<RncCritical> = distinct
        .iter()
        .filter(|t| t.im == 0.0)
        .map(|t| RncCritical {
            t: Some(t.re),
            energy: rnc_energy(h, Some(t.re)),
        })
        .collect();
    if infinite {
        real.push(RncCritical {
            t: None,
            energy: rnc_energy(h, None),
        });
    }
    let minimum = real
        .iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
        .cloned();
    Ok(RncReport {
        d,
        count: distinct.len() + usize::from(infinite),
        complex_roots: distinct
            .iter()
            .filter(|t| t.im != 0.0)
            .map(|t| (t.re, t.im))
            .collect(),
        real,
        minimum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn example_h() -> Hamiltonian {
        Hamiltonian::from_rows(&[
            &[100., 78., 76., 42.],
            &[78., 170., 111., 67.],
            &[76., 111., 85., 54.],
            &[42., 67., 54., 41.],
        ])
        .unwrap()
    }

    #[test]
    fn twisted_cubic_coefficients() {
        let p = rnc_critical_polynomial(&example_h(), 3).unwrap();
        assert_eq!(p.degree(), 10);
        let expected: Vec<BigRational> =
            [78, 222, 381, 238, 189, -280, -381, -562, -405, -178, -54]
                .iter()
                .map(|&c| {
                    BigRational::from_integer(BigInt::from(c))
                        / BigRational::from_integer(BigInt::from(78))
                })
                .collect();
        assert_eq!(p.normalized(), expected);
        assert!(p.normalized()[0].is_one());
    }

    #[test]
    fn twisted_cubic_minimum() {
        let rep = rnc_solve(&example_h(), 3).unwrap();
        assert_eq!(rep.count, 10);
        assert_eq!(rep.real.len(), 2);
        let min = rep.minimum.unwrap();
        assert!((min.energy - 14.9845).abs() < 1e-3, "{}", min.energy);
        assert!((min.t.unwrap() - 0.52795 / -0.94040).abs() < 1e-3);
    }

    #[test]
    fn p1_counts_eigenvectors() {
        for seed in 0..20 {
            let h = Hamiltonian::random_symmetric(2, seed);
            let rep = rnc_solve(&h, 1).unwrap();
            assert_eq!(rep.count, 2);
            assert_eq!(rep.real.len(), 2);
            let mut e: Vec<f64> = rep.real.iter().map(|c| c.energy).collect();
            e.sort_by(f64::total_cmp);
            let ev = h.eigenvalues();
            assert!((e[0] - ev[0]).abs() < 1e-9 && (e[1] - ev[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn generic_counts() {
        for d in 2..=5 {
            let rep = rnc_solve(&Hamiltonian::random_symmetric(d + 1, 40 + d as u64), d).unwrap();
            assert_eq!(rep.count, 2 * (2 * d - 1));
        }
    }

    #[test]
    fn point_at_infinity() {
        let h = Hamiltonian::from_rows(&[&[1., 0., 2.], &[0., 3., 1.], &[2., 1., 5.]]).unwrap();
        let p = rnc_critical_polynomial(&h, 2).unwrap();
        assert_eq!(p.infinite_multiplicity(), 1);
        let rep = rnc_solve(&h, 2).unwrap();
        assert!(rep.real.iter().any(|c| c.t.is_none() && c.energy == 1.0));
    }

    #[test]
    fn identity_is_degenerate() {
        let h = Hamiltonian::from_matrix(DMatrix::identity(4, 4)).unwrap();
        assert!(matches!(
            rnc_critical_polynomial(&h, 3),
            Err(Error::Degenerate(_))
        ));
        assert!(rnc_critical_polynomial(&h, 2).is_err());
    }

    #[test]
    fn roots_vanish() {
        let h = Hamiltonian::random_symmetric(5, 3);
        let p = rnc_critical_polynomial(&h, 4).unwrap();
        let scale: f64 = p.to_f64().iter().map(|c| c.abs()).fold(0.0, f64::max);
        for t in p.finite_roots() {
            let mag = (1.0 + t.norm()).powi(p.degree() as i32);
            assert!(p.eval(t).norm() < 1e-9 * scale * mag);
        }
    }
}
