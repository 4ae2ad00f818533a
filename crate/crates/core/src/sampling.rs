//! Two-stage sampling of finite networks from a graphon.
//!
//! Types are `N` iid uniform draws, sorted ascending. The weighted network
//! has `P_ij = W(t_i, t_j)` off the diagonal; the 0-1 network links each
//! unordered pair independently with probability `P_ij`.
//!
//! All randomness comes from ChaCha8 streams seeded with explicit 64-bit
//! seeds. Bernoulli draws consume one uniform per pair in row-major
//! upper-triangle order `(0,1), (0,2), ..., (1,2), ...`, linking when the
//! uniform is strictly below `P_ij`.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GraphonError, Result};
use crate::grid::midpoints;
use crate::kernels::GraphonSpec;

/// Seeded generator used by every stochastic operation.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for a labelled sub-stream, e.g. `(N, trial, purpose)`.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Sorted agent types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeVector {
    types: Vec<f64>,
    seed: Option<u64>,
}

impl TypeVector {
    /// Sorts `types`; all entries must lie in `[0,1]`.
    pub fn from_values(mut types: Vec<f64>) -> Result<Self> {
        if types.is_empty() {
            return Err(GraphonError::Domain("type vector is empty".into()));
        }
        if let Some(t) = types.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(GraphonError::Domain(format!("type {t} outside [0,1]")));
        }
        types.sort_by(f64::total_cmp);
        Ok(TypeVector { types, seed: None })
    }

    /// Types placed at the midpoints of the uniform `n`-partition.
    pub fn cell_midpoints(n: usize) -> Result<Self> {
        Self::from_values(midpoints(n).collect())
    }

    pub fn types(&self) -> &[f64] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `max_i sup_{x in U_i} |t_i - x|`: how far the i-th order statistic
    /// strays from its cell `[(i-1)/N, i/N)`.
    pub fn max_cell_deviation(&self) -> f64 {
        let n = self.types.len() as f64;
        self.types
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let (lo, hi) = (i as f64 / n, (i + 1) as f64 / n);
                (t - lo).abs().max((t - hi).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// `n` iid Uniform[0,1] types, sorted.
pub fn sample_types(n: usize, seed: u64) -> Result<TypeVector> {
    if n == 0 {
        return Err(GraphonError::Domain("N must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut types: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    types.sort_by(f64::total_cmp);
    Ok(TypeVector {
        types,
        seed: Some(seed),
    })
}

/// `P_ij = W(t_i, t_j)` off the diagonal, zero on it.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNetwork {
    pub p: DMatrix<f64>,
    pub types: TypeVector,
}

/// Bernoulli realization of a weighted network.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleNetwork {
    pub a: DMatrix<f64>,
    pub types: TypeVector,
    pub seed: u64,
}

pub fn weighted_network(spec: &GraphonSpec, types: &TypeVector) -> WeightedNetwork {
    let t = types.types();
    let n = t.len();
    let mut p = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let v = spec.eval_unchecked(t[i], t[j]);
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
    WeightedNetwork {
        p,
        types: types.clone(),
    }
}

pub fn simple_network(pw: &WeightedNetwork, seed: u64) -> SimpleNetwork {
    let n = pw.p.nrows();
    let mut rng = rng_from_seed(seed);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < pw.p[(i, j)] {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    SimpleNetwork {
        a,
        types: pw.types.clone(),
        seed,
    }
}

/// JSON exchange format for networks: `{"types": [...], "matrix": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkBundle {
    #[serde(default)]
    pub types: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

impl NetworkBundle {
    pub fn new(types: &TypeVector, matrix: &DMatrix<f64>) -> Self {
        NetworkBundle {
            types: types.types().to_vec(),
            matrix: matrix.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.matrix.len();
        if n == 0 {
            return Err(GraphonError::Validation("matrix is empty".into()));
        }
        if let Some(row) = self.matrix.iter().find(|r| r.len() != n) {
            return Err(GraphonError::Validation(format!(
                "matrix row has length {}, expected {n}",
                row.len()
            )));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| self.matrix[i][j]))
    }

    /// The recorded types, which must be sorted so that row `i` keeps
    /// belonging to the `i`-th type. `None` when the bundle has no types.
    pub fn type_vector(&self) -> Result<Option<TypeVector>> {
        if self.types.is_empty() {
            return Ok(None);
        }
        if self.types.len() != self.matrix.len() {
            return Err(GraphonError::DimensionMismatch {
                expected: self.matrix.len(),
                actual: self.types.len(),
            });
        }
        if self.types.windows(2).any(|w| w[1] < w[0]) {
            return Err(GraphonError::Validation("bundle types must be sorted".into()));
        }
        TypeVector::from_values(self.types.clone()).map(Some)
    }
}

/// Upper-triangle edges `i,j,weight` with nonzero weight.
pub fn write_edge_list<W: Write>(matrix: &DMatrix<f64>, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["i", "j", "weight"])?;
    let n = matrix.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = matrix[(i, j)];
            if w != 0.0 {
                writer.serialize((i, j, w))?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}
