use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::enumerate::{base_fiber, enumerate_from, EnumerateConfig};
use super::rnc::rnc_solve;
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::rng::derive_seed;
use crate::tensor::{RankProfile, Shape};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum VarietySpec {
    Rnc { d: usize },
    P1xP1,
    Tt { k: Vec<usize>, r: Vec<usize> },
}

impl VarietySpec {
    pub fn ambient_dim(&self) -> usize {
        match self {
            VarietySpec::Rnc { d } => d + 1,
            VarietySpec::P1xP1 => 4,
            VarietySpec::Tt { k, .. } => k.iter().product(),
        }
    }

    fn profile(&self) -> Result<Option<(Shape, RankProfile)>> {
        Ok(match self {
            VarietySpec::Rnc { .. } => None,
            VarietySpec::P1xP1 => Some((Shape::new(vec![2, 2])?, RankProfile::new(vec![1])?)),
            VarietySpec::Tt { k, r } => {
                Some((Shape::new(k.clone())?, RankProfile::new(r.clone())?))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub sample: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealCountReport {
    pub spec: VarietySpec,
    pub samples: usize,
    pub seed: u64,
    /// Number of real critical points -> number of samples.
    pub histogram: BTreeMap<usize, usize>,
    /// Per-sample count, `None` for failed samples.
    pub counts: Vec<Option<usize>>,
    pub failures: Vec<SampleFailure>,
}

/// Counts real critical points for one matrix.
pub fn real_count(spec: &VarietySpec, h: &Hamiltonian, config: &EnumerateConfig) -> Result<usize> {
    match spec.profile()? {
        None => {
            let VarietySpec::Rnc { d } = spec else {
                unreachable!()
            };
            Ok(rnc_solve(h, *d)?.real.len())
        }
        Some((k, r)) => {
            let (sys, base) = base_fiber(&k, &r, config)?;
            let e = enumerate_from(h, &sys, &base, config)?;
            if !e.complete {
                return Err(Error::Degenerate(format!(
                    "incomplete enumeration: {} critical points",
                    e.count
                )));
            }
            Ok(e.real_count)
        }
    }
}

/// Histogram of real critical point counts over seeded random real
/// symmetric matrices. Failed samples are recorded, not fatal.
pub fn real_count_experiment(
    spec: &VarietySpec,
    samples: usize,
    seed: u64,
    config: &EnumerateConfig,
) -> Result<RealCountReport> {
    let n = spec.ambient_dim();
    let fiber = match spec.profile()? {
        Some((k, r)) => Some(base_fiber(&k, &r, config)?),
        None => None,
    };
    let mut counts = Vec::with_capacity(samples);
    let mut failures = Vec::new();
    for i in 0..samples {
        let s = derive_seed(seed, i as u64);
        let h = Hamiltonian::random_symmetric(n, s);
        let outcome = match (&fiber, spec) {
            (None, VarietySpec::Rnc { d }) => rnc_solve(&h, *d).map(|r| r.real.len()),
            (Some((sys, base)), _) => enumerate_from(&h, sys, base, config).and_then(|e| {
                if e.complete {
                    Ok(e.real_count)
                } else {
                    Err(Error::Degenerate(format!(
                        "{} path failures, {} collisions",
                        e.failures.len(),
                        e.collisions
                    )))
                }
            }),
            _ => unreachable!(),
        };
        match outcome {
            Ok(c) => counts.push(Some(c)),
            Err(e) => {
                counts.push(None);
                failures.push(SampleFailure {
                    sample: i,
                    seed: s,
                    reason: e.to_string(),
                });
            }
        }
    }
    let mut histogram = BTreeMap::new();
    for c in counts.iter().flatten() {
        *histogram.entry(*c).or_insert(0) += 1;
    }
    Ok(RealCountReport {
        spec: spec.clone(),
        samples,
        seed,
        histogram,
        counts,
        failures,
    })
}

/// `(h_11 - h_22)^2 + 4 h_12^2`, zero exactly on matrices with a repeated
/// eigenvalue.
pub fn p1_discriminant(h: &DMatrix<f64>) -> Result<f64> {
    if h.shape() != (2, 2) {
        return Err(Error::InvalidParameters(format!(
            "expected a 2x2 matrix, got {:?}",
            h.shape()
        )));
    }
    let d = h[(0, 0)] - h[(1, 1)];
    Ok(d * d + 4.0 * h[(0, 1)] * h[(0, 1)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discriminant_examples() {
        assert_eq!(p1_discriminant(&DMatrix::identity(2, 2)).unwrap(), 0.0);
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[1.0, 2.0]));
        assert_eq!(p1_discriminant(&h).unwrap(), 1.0);
        assert!(p1_discriminant(&DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn discriminant_is_squared_gap() {
        for i in -5..=5 {
            for j in -5..=5 {
                for l in -3..=3 {
                    let h = DMatrix::from_row_slice(
                        2,
                        2,
                        &[
                            i as f64 * 0.5,
                            l as f64 * 0.25,
                            l as f64 * 0.25,
                            j as f64 * 0.5,
                        ],
                    );
                    let ev = h.clone().symmetric_eigenvalues();
                    let gap = (ev[0] - ev[1]).powi(2);
                    let disc = p1_discriminant(&h).unwrap();
                    assert!((gap - disc).abs() < 1e-12 * (1.0 + disc));
                    assert_eq!(disc == 0.0, (ev[0] - ev[1]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn quadric_examples() {
        let cfg = EnumerateConfig::default();
        let spec = VarietySpec::Rnc { d: 2 };
        let a = Hamiltonian::from_rows(&[&[1., 3., 5.], &[3., 7., 9.], &[5., 9., 11.]]).unwrap();
        let b = Hamiltonian::from_rows(&[&[8., 1., 13.], &[1., 11., 7.], &[13., 7., 5.]]).unwrap();
        assert_eq!(real_count(&spec, &a, &cfg).unwrap(), 2);
        assert_eq!(real_count(&spec, &b, &cfg).unwrap(), 4);
    }

    #[test]
    fn small_p1xp1_histogram() {
        let rep =
            real_count_experiment(&VarietySpec::P1xP1, 10, 3, &EnumerateConfig::default()).unwrap();
        assert!(rep.failures.is_empty(), "{:?}", rep.failures);
        assert_eq!(rep.histogram.values().sum::<usize>(), 10);
        assert!(rep.histogram.keys().all(|c| [4, 6, 8].contains(c)));
    }
}
