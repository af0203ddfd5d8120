//! Segre structure of tensor-train varieties and their closed-form
//! dimensions and degrees.

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::{numerical_rank, RankProfile, Shape};
use crate::tt::{tt_dimension, validate_ranks, GaugedTrain};

/// Consecutive cores `first..=last` joined by bonds with `r > 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub first: usize,
    pub last: usize,
    /// Product of the physical dimensions in the block.
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegreStructure {
    pub k: Vec<usize>,
    /// The clamped profile the classification was run on.
    pub r: Vec<usize>,
    pub blocks: Vec<Block>,
    /// Cores not covered by any block.
    pub isolated: Vec<usize>,
    pub is_segre: bool,
    /// Projective dimensions of the Segre factors, in core order.
    pub factor_dims: Vec<usize>,
    pub dim: Option<usize>,
    #[serde(with = "opt_biguint")]
    pub degree: Option<BigUint>,
    /// First failed saturation condition, when not Segre.
    pub violation: Option<String>,
    pub note: String,
}

mod opt_biguint {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&x.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigUint>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        raw.map(|s| s.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}

const SATURATION_NOTE: &str =
    "saturation read as equality after clamping: inside each block every \
bond equals min(product of block dimensions to its left, product to its right)";

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// `(sum d_i)! / prod d_i!`.
pub fn multinomial(parts: &[usize]) -> BigUint {
    let total: usize = parts.iter().sum();
    parts
        .iter()
        .fold(factorial(total), |acc, &p| acc / factorial(p))
}

/// Detects the separated blocks of bonds with `r > 1` and checks that
/// each block spans its full tensor space, in which case the variety is
/// the Segre product of the block spaces and the isolated factors.
pub fn segre_classify(k: &Shape, r: &RankProfile) -> Result<SegreStructure> {
    let r = validate_ranks(k, r)?;
    let n = k.order() - 1;
    let mut blocks = Vec::new();
    let mut bond = 1;
    while bond <= n {
        if r.bond(bond) > 1 {
            let start = bond;
            while bond < n && r.bond(bond + 1) > 1 {
                bond += 1;
            }
            let (first, last) = (start - 1, bond);
            blocks.push(Block {
                first,
                last,
                size: k.span_size(first..last + 1),
            });
        }
        bond += 1;
    }

    let mut violation = None;
    'outer: for b in &blocks {
        for i in b.first + 1..=b.last {
            let bound = k.span_size(b.first..i).min(k.span_size(i..b.last + 1));
            if r.bond(i) < bound {
                violation = Some(format!(
                    "bond r_{i} = {} is below {bound}, the smaller of the block products on either side",
                    r.bond(i)
                ));
                break 'outer;
            }
        }
    }

    let isolated: Vec<usize> = (0..=n)
        .filter(|&c| !blocks.iter().any(|b| (b.first..=b.last).contains(&c)))
        .collect();
    let mut factors: Vec<(usize, usize)> = blocks
        .iter()
        .map(|b| (b.first, b.size - 1))
        .chain(isolated.iter().map(|&c| (c, k.dim(c) - 1)))
        .collect();
    factors.sort();
    let factor_dims: Vec<usize> = factors.into_iter().map(|f| f.1).collect();
    let is_segre = violation.is_none();
    let (dim, degree) = if is_segre {
        (
            Some(factor_dims.iter().sum()),
            Some(multinomial(&factor_dims)),
        )
    } else {
        (None, None)
    };
    Ok(SegreStructure {
        k: k.dims().to_vec(),
        r: r.inner().to_vec(),
        blocks,
        isolated,
        is_segre,
        factor_dims,
        dim,
        degree,
        violation,
        note: SATURATION_NOTE.into(),
    })
}

/// Degree formula for binary profiles with `n + 1` factors, `l` blocks of
/// two cores, `t` blocks of three cores and correction `s`:
/// `(n + 2l + 5t - s)! / ((3!)^l (7!)^t)`.
pub fn binary_segre_degree(n: usize, l: usize, t: usize, s: usize) -> Result<BigUint> {
    if 2 * l + 3 * t > n + 1 {
        return Err(Error::InvalidParameters(format!(
            "{l} two-core and {t} three-core blocks do not fit into {} cores",
            n + 1
        )));
    }
    let top = n + 2 * l + 5 * t;
    if s > top {
        return Err(Error::InvalidParameters(format!(
            "s = {s} exceeds n + 2l + 5t = {top}"
        )));
    }
    let mut denom = BigUint::one();
    for _ in 0..l {
        denom *= factorial(3);
    }
    for _ in 0..t {
        denom *= factorial(7);
    }
    let num = factorial(top - s);
    if &num % &denom != BigUint::from(0u32) {
        return Err(Error::InvalidParameters(format!(
            "({})! is not divisible by (3!)^{l} (7!)^{t}",
            top - s
        )));
    }
    Ok(num / denom)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimReport {
    pub k: Vec<usize>,
    pub r: Vec<usize>,
    pub tt_dimension: usize,
    pub jacobian_rank: usize,
    pub segre_dim: Option<usize>,
    pub agree: bool,
}

impl DimReport {
    pub fn into_result(self) -> Result<Self> {
        if self.agree {
            Ok(self)
        } else {
            Err(Error::Degenerate(format!(
                "dimension disagreement for k={:?} r={:?}: tt {} jacobian {} segre {:?}",
                self.k, self.r, self.tt_dimension, self.jacobian_rank, self.segre_dim
            )))
        }
    }
}

/// Compares the chart dimension, the numerical rank of the
/// parametrization Jacobian at a seeded random point and, for Segre
/// profiles, the Segre dimension plus one.
pub fn dim_crosscheck(k: &Shape, r: &RankProfile, seed: u64) -> Result<DimReport> {
    let r = validate_ranks(k, r)?;
    let tt = tt_dimension(k, &r);
    let mut g = rng::seeded(seed);
    let train = GaugedTrain::random(k, &r, &mut g)?;
    let jacobian_rank = numerical_rank(&train.jacobian(), 1e-9);
    let segre = segre_classify(k, &r)?;
    let segre_dim = segre.dim;
    let agree = jacobian_rank == tt && segre_dim.is_none_or(|d| d + 1 == tt);
    Ok(DimReport {
        k: k.dims().to_vec(),
        r: r.inner().to_vec(),
        tt_dimension: tt,
        jacobian_rank,
        segre_dim,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(k: &[usize]) -> Shape {
        Shape::new(k.to_vec()).unwrap()
    }

    fn ranks(r: &[usize]) -> RankProfile {
        RankProfile::new(r.to_vec()).unwrap()
    }

    #[test]
    fn p3_times_p1_squared() {
        let s = segre_classify(&shape(&[2, 2, 2, 2]), &ranks(&[1, 2, 1])).unwrap();
        assert!(s.is_segre);
        assert_eq!(s.factor_dims, vec![1, 3, 1]);
        assert_eq!(s.dim, Some(5));
        assert_eq!(s.degree, Some(BigUint::from(20u32)));
        assert_eq!(
            s.blocks,
            vec![Block {
                first: 1,
                last: 2,
                size: 4
            }]
        );
    }

    #[test]
    fn rank_one_is_full_segre() {
        let s = segre_classify(&shape(&[2, 3, 4]), &ranks(&[1, 1])).unwrap();
        assert!(s.is_segre);
        assert!(s.blocks.is_empty());
        assert_eq!(s.factor_dims, vec![1, 2, 3]);
        assert_eq!(s.degree, Some(multinomial(&[1, 2, 3])));
        assert_eq!(s.degree, Some(BigUint::from(60u32)));
    }

    #[test]
    fn smallest_non_segre() {
        let s = segre_classify(&shape(&[2; 6]), &ranks(&[1, 2, 2, 2, 1])).unwrap();
        assert!(!s.is_segre);
        assert!(s.violation.unwrap().contains("r_3"));
    }

    #[test]
    fn binary_degree_examples() {
        assert_eq!(
            binary_segre_degree(3, 1, 0, 0).unwrap(),
            BigUint::from(20u32)
        );
        for n in 1..8 {
            assert_eq!(binary_segre_degree(n, 0, 0, 0).unwrap(), factorial(n));
        }
        assert_eq!(
            binary_segre_degree(5, 0, 1, 0).unwrap(),
            BigUint::from(720u32)
        );
        assert!(binary_segre_degree(2, 2, 0, 0).is_err());
        assert!(binary_segre_degree(3, 0, 0, 9).is_err());
    }

    #[test]
    fn crosscheck_examples() {
        let r = dim_crosscheck(&shape(&[2, 2, 2, 2]), &ranks(&[1, 2, 1]), 1).unwrap();
        assert!(r.agree);
        assert_eq!(
            (r.tt_dimension, r.jacobian_rank, r.segre_dim),
            (6, 6, Some(5))
        );
        let r = dim_crosscheck(&shape(&[3, 5]), &ranks(&[1]), 2).unwrap();
        assert_eq!((r.tt_dimension, r.segre_dim), (7, Some(6)));
    }

    #[test]
    fn degree_is_exact_for_large_factors() {
        let d = multinomial(&[20, 20]);
        assert_eq!(d.to_string(), "137846528820");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn segre_dim_matches_tt_dimension(
            k in prop::collection::vec(1usize..4, 2..6),
            seed in 0u64..1000,
            raw in prop::collection::vec(1usize..9, 5),
        ) {
            let k = shape(&k);
            let r = ranks(&raw[..k.order() - 1]);
            let s = segre_classify(&k, &r).unwrap();
            let clamped = validate_ranks(&k, &r).unwrap();
            prop_assert_eq!(&s, &segre_classify(&k, &clamped).unwrap());
            if let Some(d) = s.dim {
                prop_assert_eq!(d + 1, tt_dimension(&k, &clamped));
            }
            if k.size() <= 128 {
                prop_assert!(dim_crosscheck(&k, &r, seed).unwrap().agree);
            }
        }
    }
}
