//! Symmetric data matrices: seeded random ensembles and second-quantized
//! operators built from Jordan-Wigner ladder strings.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Largest site count assembled densely by default (`2^10 = 1024`).
pub const DEFAULT_SITE_CAP: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Explicit,
    RandomSymmetric { seed: u64 },
    SecondQuantized { sites: usize, symmetrized: bool },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    matrix: DMatrix<f64>,
    provenance: Provenance,
}

impl Hamiltonian {
    /// Wraps a real matrix, rejecting anything not symmetric to `1e-12`
    /// relative.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidParameters(format!(
                "Hamiltonian must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let asym = (&matrix - matrix.transpose()).norm();
        if asym > 1e-12 * matrix.norm().max(1.0) {
            return Err(Error::InvalidParameters(format!(
                "matrix is not symmetric (residual {asym:e})"
            )));
        }
        Ok(Hamiltonian {
            matrix,
            provenance: Provenance::Explicit,
        })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        if flat.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                got: flat.len(),
            });
        }
        Hamiltonian::from_matrix(DMatrix::from_row_slice(n, n, &flat))
    }

    /// `H = (G + G^T)/2` with `G` i.i.d. standard normal from the seeded
    /// stream.
    pub fn random_symmetric(n: usize, seed: u64) -> Self {
        let mut stream = rng::seeded(seed);
        let g = rng::normal_matrix(n, n, &mut stream);
        let matrix = (&g + g.transpose()) * 0.5;
        Hamiltonian {
            matrix,
            provenance: Provenance::RandomSymmetric { seed },
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn shifted(&self, c: f64) -> Self {
        let n = self.dim();
        Hamiltonian {
            matrix: &self.matrix + DMatrix::identity(n, n) * c,
            provenance: self.provenance.clone(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Hamiltonian {
            matrix: &self.matrix * alpha,
            provenance: self.provenance.clone(),
        }
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "N": self.dim(),
            "data": crate::tensor::row_major(&self.matrix),
        })
    }

    /// Parses `{"N": n, "data": [row-major entries]}`.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(rename = "N")]
            n: usize,
            data: Vec<f64>,
        }
        let raw: Raw = serde_json::from_value(value.clone())?;
        if raw.data.len() != raw.n * raw.n {
            return Err(Error::SizeMismatch {
                expected: raw.n * raw.n,
                got: raw.data.len(),
            });
        }
        Hamiltonian::from_matrix(DMatrix::from_row_slice(raw.n, raw.n, &raw.data))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ladder {
    Create,
    Annihilate,
}

/// Dense `2^n x 2^n` ladder operator `s (x) ... (x) s (x) a (x) I (x) ... (x) I`
/// with `p` sign factors, `s = diag(1,-1)` and `a = ((0,1),(0,0))`.
pub fn ladder_operator(kind: Ladder, site: usize, n: usize) -> Result<DMatrix<f64>> {
    if site >= n {
        return Err(Error::SiteOutOfRange { site, len: n });
    }
    let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let id = DMatrix::<f64>::identity(2, 2);
    let local = match kind {
        Ladder::Annihilate => a,
        Ladder::Create => a.transpose(),
    };
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for q in 0..n {
        let factor = match q.cmp(&site) {
            std::cmp::Ordering::Less => &s,
            std::cmp::Ordering::Equal => &local,
            std::cmp::Ordering::Greater => &id,
        };
        out = out.kronecker(factor);
    }
    Ok(out)
}

/// Action of a ladder operator on a computational basis state. Site `p`
/// is bit `n-1-p` of the state index (site 0 is the slowest index).
fn apply_ladder(kind: Ladder, site: usize, n: usize, state: usize) -> Option<(usize, f64)> {
    let bit = 1usize << (n - 1 - site);
    let occupied = state & bit != 0;
    // a = |0><1| lowers the local index; a^T raises it.
    let target = match (kind, occupied) {
        (Ladder::Annihilate, true) => state & !bit,
        (Ladder::Create, false) => state | bit,
        _ => return None,
    };
    // The sign string acts on the input state, which agrees with the output
    // state on sites before `site`.
    let mask = !((1usize << (n - site)) - 1) & ((1usize << n) - 1);
    let parity = (state & mask).count_ones();
    let sign = if parity.is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((target, sign))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondQuantizedSpec {
    pub n: usize,
    /// `n x n`, row-major.
    pub t: Vec<f64>,
    /// `n^4`, index order `(i, j, k, l)` with `l` fastest.
    pub v: Vec<f64>,
}

impl SecondQuantizedSpec {
    /// Coefficients drawn i.i.d. standard normal from the seeded stream.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut stream = rng::seeded(seed);
        let t = (0..n * n).map(|_| rng::normal(&mut stream)).collect();
        let v = (0..n * n * n * n)
            .map(|_| rng::normal(&mut stream))
            .collect();
        SecondQuantizedSpec { n, t, v }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidParameters(
                "site count must be positive".into(),
            ));
        }
        if self.t.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                got: self.t.len(),
            });
        }
        if self.v.len() != n.pow(4) {
            return Err(Error::SizeMismatch {
                expected: n.pow(4),
                got: self.v.len(),
            });
        }
        if self.t.iter().chain(&self.v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameters("non-finite coefficient".into()));
        }
        Ok(())
    }
}

/// Dense assembly of `sum t_ij a_i^+ a_j + sum v_ijkl a_i^+ a_j^+ a_k a_l`,
/// followed by `H <- (H + H^T)/2`.
pub fn build_second_quantized(spec: &SecondQuantizedSpec) -> Result<Hamiltonian> {
    build_second_quantized_capped(spec, DEFAULT_SITE_CAP)
}

pub fn build_second_quantized_capped(
    spec: &SecondQuantizedSpec,
    cap: usize,
) -> Result<Hamiltonian> {
    spec.validate()?;
    let n = spec.n;
    if n > cap {
        return Err(Error::SizeCapExceeded { n, cap });
    }
    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);

    let apply_string = |ops: &[(Ladder, usize)], state: usize| -> Option<(usize, f64)> {
        // Rightmost operator acts first.
        ops.iter()
            .rev()
            .try_fold((state, 1.0), |(s, sign), &(kind, p)| {
                apply_ladder(kind, p, n, s).map(|(t, sg)| (t, sign * sg))
            })
    };

    for col in 0..dim {
        for i in 0..n {
            for j in 0..n {
                let t = spec.t[i * n + j];
                if t != 0.0 {
                    if let Some((row, sign)) =
                        apply_string(&[(Ladder::Create, i), (Ladder::Annihilate, j)], col)
                    {
                        h[(row, col)] += t * sign;
                    }
                }
                for k in 0..n {
                    for l in 0..n {
                        let v = spec.v[((i * n + j) * n + k) * n + l];
                        if v == 0.0 {
                            continue;
                        }
                        let ops = [
                            (Ladder::Create, i),
                            (Ladder::Create, j),
                            (Ladder::Annihilate, k),
                            (Ladder::Annihilate, l),
                        ];
                        if let Some((row, sign)) = apply_string(&ops, col) {
                            h[(row, col)] += v * sign;
                        }
                    }
                }
            }
        }
    }
    let matrix = (&h + h.transpose()) * 0.5;
    Ok(Hamiltonian {
        matrix,
        provenance: Provenance::SecondQuantized {
            sites: n,
            symmetrized: true,
        },
    })
}
