//! Discretized graphon operators and their spectra.
//!
//! The operator `(W f)(x) = int W(x,y) f(y) dy` is collocated at the
//! midpoints of a uniform `M`-grid with weight `1/M`. This keeps the matrix
//! symmetric and is exact for step graphons aligned with the grid.
//! Eigenfunctions are normalized to unit `L^2` norm and oriented so that
//! their integral is nonnegative.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GraphonError, Result};
use crate::grid::{midpoints, GridFunction};
use crate::kernels::{GraphonKind, GraphonSpec};
use crate::linalg::{self, Which};

/// Default residual tolerance of the eigen-solvers.
pub const EIGEN_TOL: f64 = 1e-10;
/// Default power-iteration budget.
pub const EIGEN_MAX_ITER: usize = 100_000;

/// Kernel values at grid midpoints; acts on grid functions with weight `1/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedOperator {
    kernel: DMatrix<f64>,
}

/// An eigenvalue with its unit-norm eigenfunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    pub function: GridFunction,
}

impl DiscretizedOperator {
    /// Wraps a symmetric kernel matrix sampled on a uniform grid.
    pub fn from_kernel(kernel: DMatrix<f64>) -> Result<Self> {
        let m = kernel.nrows();
        if m != kernel.ncols() || m == 0 {
            return Err(GraphonError::Validation("kernel matrix must be square".into()));
        }
        for i in 0..m {
            for j in 0..i {
                if (kernel[(i, j)] - kernel[(j, i)]).abs() > 1e-12 {
                    return Err(GraphonError::Validation(format!(
                        "kernel matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(DiscretizedOperator { kernel })
    }

    pub fn resolution(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    /// `1/M` quadrature weight.
    pub fn weight(&self) -> f64 {
        1.0 / self.resolution() as f64
    }

    /// Largest row average `max_x int W(x,y) dy`: the sup-norm of the operator.
    pub fn max_degree(&self) -> f64 {
        self.kernel
            .row_iter()
            .map(|r| r.sum() * self.weight())
            .fold(0.0, f64::max)
    }
}

/// Midpoint collocation of `spec` on an `m`-grid.
pub fn discretize(spec: &GraphonSpec, m: usize) -> Result<DiscretizedOperator> {
    if m < 2 {
        return Err(GraphonError::Domain(format!("resolution M = {m} < 2")));
    }
    let mids: Vec<f64> = midpoints(m).collect();
    let mut kernel = DMatrix::zeros(m, m);
    for j in 0..m {
        for i in 0..=j {
            let v = spec.eval_unchecked(mids[i], mids[j]);
            kernel[(i, j)] = v;
            kernel[(j, i)] = v;
        }
    }
    Ok(DiscretizedOperator { kernel })
}

/// `(W f)` on the grid: `(1/M) K f`.
pub fn apply(op: &DiscretizedOperator, f: &GridFunction) -> Result<GridFunction> {
    if f.resolution() != op.resolution() {
        return Err(GraphonError::DimensionMismatch {
            expected: op.resolution(),
            actual: f.resolution(),
        });
    }
    let v = DVector::from_column_slice(f.values());
    let out = &op.kernel * v * op.weight();
    GridFunction::new(out.iter().copied().collect())
}

/// Unit Euclidean vector to unit-`L^2` grid function, integral made nonnegative.
fn to_eigenfunction(unit: &DVector<f64>) -> GridFunction {
    let m = unit.len();
    let scale = (m as f64).sqrt();
    let sign = if unit.sum() < 0.0 { -1.0 } else { 1.0 };
    GridFunction::new(unit.iter().map(|v| v * scale * sign).collect()).unwrap()
}

/// Dominant eigenpair by power iteration from the all-ones vector.
pub fn dominant_eigenpair(op: &DiscretizedOperator, tol: f64, max_iter: usize) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(GraphonError::Domain(format!("tolerance {tol} must be positive")));
    }
    let start = DVector::from_element(op.resolution(), 1.0);
    let (value, unit) = linalg::power_iteration(&op.kernel, op.weight(), &start, tol, max_iter)
        .map_err(|e| match e {
            GraphonError::IterationLimit {
                iterations,
                residual,
                last_iterate,
                history,
            } => GraphonError::IterationLimit {
                iterations,
                residual,
                last_iterate: to_eigenfunction(&DVector::from_vec(last_iterate)).into_values(),
                history,
            },
            other => other,
        })?;
    Ok(EigenPair {
        value,
        function: to_eigenfunction(&unit),
    })
}

/// The `k` largest eigenpairs, descending, with `L^2`-orthonormal functions.
pub fn top_k_eigen(op: &DiscretizedOperator, k: usize) -> Result<Vec<EigenPair>> {
    let m = op.resolution();
    if k == 0 || k > m {
        return Err(GraphonError::Domain(format!("k = {k} must lie in [1, {m}]")));
    }
    let pairs = linalg::extreme_eigenpairs(&op.kernel, op.weight(), k, Which::Largest, EIGEN_TOL)?;
    Ok(pairs
        .into_iter()
        .map(|(value, v)| EigenPair {
            value,
            function: to_eigenfunction(&v),
        })
        .collect())
}

/// Eigenpairs of `E = Q diag(w)`, descending by eigenvalue.
///
/// Each vector holds the per-community values of the corresponding
/// piecewise-constant eigenfunction, normalized to unit `L^2` norm.
pub fn sbm_eigen_analytic(q: &[Vec<f64>], w: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
    // Validates Q and w.
    GraphonSpec::sbm(q.to_vec(), w.to_vec())?;
    let k = w.len();
    let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let sym = DMatrix::from_fn(k, k, |a, b| sqrt_w[a] * q[a][b] * sqrt_w[b]);
    let (values, vectors) = linalg::symmetric_eigen_desc(&sym);
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(c, value)| {
            let mut blocks: Vec<f64> = (0..k).map(|a| vectors[(a, c)] / sqrt_w[a]).collect();
            let integral: f64 = blocks.iter().zip(w).map(|(v, wk)| v * wk).sum();
            if integral < 0.0 {
                blocks.iter_mut().for_each(|v| *v = -*v);
            }
            (value, blocks)
        })
        .collect())
}

/// `(1/(pi^2 h^2), sqrt(2) sin(h pi x))` sampled at the midpoints of an `m`-grid.
pub fn minmax_eigen_analytic(h: usize, m: usize) -> Result<(f64, GridFunction)> {
    if h == 0 {
        return Err(GraphonError::Domain("eigen index h must be >= 1".into()));
    }
    if m == 0 {
        return Err(GraphonError::Domain("resolution must be positive".into()));
    }
    let hf = h as f64;
    let value = 1.0 / (PI * PI * hf * hf);
    Ok((value, GridFunction::from_midpoints(m, |x| SQRT_2 * (hf * PI * x).sin())))
}

/// `L^2 -> L^2` norm of the difference of two discretized operators.
pub fn operator_distance(a: &DiscretizedOperator, b: &DiscretizedOperator) -> Result<f64> {
    if a.resolution() != b.resolution() {
        return Err(GraphonError::DimensionMismatch {
            expected: a.resolution(),
            actual: b.resolution(),
        });
    }
    let diff = &a.kernel - &b.kernel;
    linalg::spectral_radius(&diff, a.weight())
}

/// Dominant eigenfunction as a function of a point, not just a grid.
#[derive(Debug, Clone)]
pub enum PointEigenfunction {
    /// Constant graphons: `psi = 1`.
    Constant,
    /// `sqrt(2) sin(pi x)` for the minmax kernel.
    MinMaxSine,
    /// Piecewise constant over SBM communities.
    Blocks { spec: GraphonSpec, values: Vec<f64> },
    /// Nystrom extension `psi(x) = (1/(lambda M)) sum_j W(x, x_j) psi_j` of a
    /// numerical eigenvector.
    Nystrom {
        spec: GraphonSpec,
        value: f64,
        grid: GridFunction,
    },
}

impl PointEigenfunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PointEigenfunction::Constant => 1.0,
            PointEigenfunction::MinMaxSine => SQRT_2 * (PI * x).sin(),
            PointEigenfunction::Blocks { spec, values } => values[spec.community_of(x).unwrap()],
            PointEigenfunction::Nystrom { spec, value, grid } => {
                if *value <= 0.0 {
                    return grid.eval(x);
                }
                let m = grid.resolution();
                let sum: f64 = midpoints(m)
                    .zip(grid.values())
                    .map(|(y, psi)| spec.eval_unchecked(x, y) * psi)
                    .sum();
                sum / (value * m as f64)
            }
        }
    }
}

/// Dominant eigenvalue and eigenfunction of `spec`, using the closed forms
/// where available and a resolution-`m` numerical solve otherwise.
pub fn dominant_eigenfunction(spec: &GraphonSpec, m: usize) -> Result<(f64, PointEigenfunction)> {
    match spec.kind() {
        GraphonKind::ErdosRenyi { p } => Ok((*p, PointEigenfunction::Constant)),
        GraphonKind::MinMax => Ok((1.0 / (PI * PI), PointEigenfunction::MinMaxSine)),
        GraphonKind::Sbm { q, w } => {
            let mut pairs = sbm_eigen_analytic(q, w)?;
            let (value, values) = pairs.swap_remove(0);
            Ok((
                value,
                PointEigenfunction::Blocks {
                    spec: spec.clone(),
                    values,
                },
            ))
        }
        GraphonKind::Grid { .. } => {
            let op = discretize(spec, m)?;
            let pair = dominant_eigenpair(&op, EIGEN_TOL, EIGEN_MAX_ITER)?;
            Ok((
                pair.value,
                PointEigenfunction::Nystrom {
                    spec: spec.clone(),
                    value: pair.value,
                    grid: pair.function,
                },
            ))
        }
    }
}

/// Top-`k` spectrum (numeric) written as `index,value` CSV rows.
pub fn write_eigenvalues_csv<W: std::io::Write>(pairs: &[EigenPair], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["index", "value"])?;
    for (h, pair) in pairs.iter().enumerate() {
        writer.serialize((h + 1, pair.value))?;
    }
    writer.flush()?;
    Ok(())
}

/// Eigenfunctions as columns: `midpoint,psi_1,...,psi_k`.
pub fn write_eigenfunctions_csv<W: std::io::Write>(pairs: &[EigenPair], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let m = pairs.first().map_or(0, |p| p.function.resolution());
    let mut header = vec!["midpoint".to_string()];
    header.extend((1..=pairs.len()).map(|h| format!("psi_{h}")));
    writer.write_record(&header)?;
    for (i, x) in midpoints(m).enumerate() {
        let mut row = vec![x.to_string()];
        row.extend(pairs.iter().map(|p| p.function.values()[i].to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
