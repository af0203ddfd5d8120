use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{RankProfile, Shape};
use crate::tt::{max_ranks, validate_ranks};

/// Varieties whose critical point count has a closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Family {
    /// `(P^1)^n`: `2^n n!`.
    BinaryRankOne { n: usize },
    /// `P^{n-1} x P^{m-1}`: `sum_i 4^{i-1} C(n,i) C(m,i)`.
    MatrixRankOne { n: usize, m: usize },
    /// Rational normal curve of degree `d`: `2(2d - 1)`.
    Rnc { d: usize },
    /// The whole space `C^N`: one critical point per eigenvector.
    FullSpace { n: usize },
}

fn overflow(what: &str) -> Error {
    Error::Overflow(what.into())
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

impl Family {
    /// Parses `binary_rank_one(3)`, `matrix_rank_one(2,3)`, `rnc(3)` or
    /// `full_space(8)`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s
            .split_once('(')
            .ok_or_else(|| Error::UnknownFamily(s.into()))?;
        let args = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::UnknownFamily(s.into()))?;
        let args: Vec<usize> = args
            .split(',')
            .map(|a| a.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::UnknownFamily(s.into()))?;
        match (name.trim(), args.as_slice()) {
            ("binary_rank_one", &[n]) => Ok(Family::BinaryRankOne { n }),
            ("matrix_rank_one", &[n, m]) => Ok(Family::MatrixRankOne { n, m }),
            ("rnc", &[d]) => Ok(Family::Rnc { d }),
            ("full_space", &[n]) => Ok(Family::FullSpace { n }),
            _ => Err(Error::UnknownFamily(s.into())),
        }
    }

    pub fn rr_degree(&self) -> Result<u128> {
        match *self {
            Family::BinaryRankOne { n } => {
                let mut acc: u128 = 1;
                for i in 1..=n {
                    acc = acc
                        .checked_mul(2 * i as u128)
                        .ok_or_else(|| overflow("binary_rank_one"))?;
                }
                Ok(acc)
            }
            Family::MatrixRankOne { n, m } => {
                let mut acc: u128 = 0;
                for i in 1..=n.min(m) {
                    let term = 4u128
                        .checked_pow(i as u32 - 1)
                        .and_then(|p| p.checked_mul(binomial(n, i)?))
                        .and_then(|p| p.checked_mul(binomial(m, i)?))
                        .ok_or_else(|| overflow("matrix_rank_one"))?;
                    acc = acc
                        .checked_add(term)
                        .ok_or_else(|| overflow("matrix_rank_one"))?;
                }
                Ok(acc)
            }
            Family::Rnc { d } => {
                if d == 0 {
                    return Err(Error::InvalidParameters("rnc needs d >= 1".into()));
                }
                (d as u128)
                    .checked_mul(4)
                    .map(|v| v - 2)
                    .ok_or_else(|| overflow("rnc"))
            }
            Family::FullSpace { n } => Ok(n as u128),
        }
    }
}

pub fn closed_form_rr_degree(family: &str) -> Result<u128> {
    Family::parse(family)?.rr_degree()
}

/// The closed-form family a TT profile belongs to, if any.
pub fn closed_form_for(k: &Shape, r: &RankProfile) -> Result<Option<Family>> {
    let r = validate_ranks(k, r)?;
    let order = k.order();
    if r == max_ranks(k) {
        return Ok(Some(Family::FullSpace { n: k.size() }));
    }
    let rank_one = r.inner().iter().all(|&b| b == 1);
    if rank_one && k.dims().iter().all(|&d| d == 2) {
        return Ok(Some(Family::BinaryRankOne { n: order }));
    }
    if rank_one && order == 2 {
        return Ok(Some(Family::MatrixRankOne {
            n: k.dim(0),
            m: k.dim(1),
        }));
    }
    Ok(None)
}
