//! Symmetric eigen-solvers and linear solves shared by the spectral,
//! equilibrium and intervention modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GraphonError, Result};

/// Matrices at or below this size are handed to the dense eigensolver.
const DENSE_CUTOFF: usize = 64;

/// Fixed seed for Lanczos start vectors, so spectra are reproducible.
const LANCZOS_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

/// Which end of a symmetric spectrum to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Largest,
    Smallest,
    LargestMagnitude,
}

/// Power iteration on `scale * a` from `start`.
///
/// Stops once the eigen-residual `||A x - theta x||` of the unit iterate
/// drops below `tol * max(1, |theta|)`. Returns the Rayleigh quotient and the
/// unit (Euclidean) iterate.
pub fn power_iteration(
    a: &DMatrix<f64>,
    scale: f64,
    start: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, DVector<f64>)> {
    let start_norm = start.norm();
    if start_norm == 0.0 {
        return Err(GraphonError::Domain("zero start vector".into()));
    }
    let mut x = start / start_norm;
    let mut history = Vec::new();
    for _ in 0..max_iter {
        let y = a * &x * scale;
        let theta = x.dot(&y);
        let residual = (&y - &x * theta).norm();
        if residual <= tol * theta.abs().max(1.0) {
            return Ok((theta, x));
        }
        history.push(residual);
        let norm = y.norm();
        if norm == 0.0 {
            // x lies in the kernel; the residual test above already passed.
            return Ok((0.0, x));
        }
        x = y / norm;
    }
    let residual = history.last().copied().unwrap_or(f64::INFINITY);
    Err(GraphonError::IterationLimit {
        iterations: max_iter,
        residual,
        last_iterate: x.iter().copied().collect(),
        history,
    })
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
pub fn symmetric_eigen_desc(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a.clone());
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn select(values: &[f64], k: usize, which: Which) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    match which {
        Which::Largest => order.sort_by(|&i, &j| values[j].total_cmp(&values[i])),
        Which::Smallest => order.sort_by(|&i, &j| values[i].total_cmp(&values[j])),
        Which::LargestMagnitude => {
            order.sort_by(|&i, &j| values[j].abs().total_cmp(&values[i].abs()))
        }
    }
    order.truncate(k);
    order
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    let norm = v.norm();
    v / norm
}

/// Orthogonalize `v` against the first `cols` columns of `q` (two passes).
fn reorthogonalize(v: &mut DVector<f64>, q: &DMatrix<f64>, cols: usize) {
    for _ in 0..2 {
        for c in 0..cols {
            let col = q.column(c);
            let h = col.dot(v);
            v.axpy(-h, &col, 1.0);
        }
    }
}

struct LanczosOutcome {
    pairs: Vec<(f64, DVector<f64>)>,
    converged: bool,
}

fn lanczos_run(
    a: &DMatrix<f64>,
    scale: f64,
    steps: usize,
    k: usize,
    which: Which,
    tol: f64,
) -> LanczosOutcome {
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut q = DMatrix::<f64>::zeros(n, steps);
    let mut alpha = vec![0.0; steps];
    let mut beta = vec![0.0; steps];
    q.set_column(0, &random_unit(n, &mut rng));
    let mut tail_beta = 0.0;
    let mut breakdown_scale = 0.0f64;

    for j in 0..steps {
        let qj = q.column(j).clone_owned();
        let mut r = a * &qj * scale;
        alpha[j] = qj.dot(&r);
        breakdown_scale = breakdown_scale.max(alpha[j].abs());
        reorthogonalize(&mut r, &q, j + 1);
        let b = r.norm();
        breakdown_scale = breakdown_scale.max(b);
        if j + 1 == steps {
            tail_beta = b;
            break;
        }
        if b <= 1e-12 * breakdown_scale.max(1e-300) {
            // Invariant subspace found: continue from a fresh direction.
            let mut v = random_unit(n, &mut rng);
            reorthogonalize(&mut v, &q, j + 1);
            let norm = v.norm();
            if norm < 1e-8 {
                // Whole space spanned; truncate.
                return finish(&q, &alpha, &beta, j + 1, 0.0, k, which, tol);
            }
            q.set_column(j + 1, &(v / norm));
            beta[j] = 0.0;
        } else {
            q.set_column(j + 1, &(r / b));
            beta[j] = b;
        }
    }
    finish(&q, &alpha, &beta, steps, tail_beta, k, which, tol)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    q: &DMatrix<f64>,
    alpha: &[f64],
    beta: &[f64],
    m: usize,
    tail_beta: f64,
    k: usize,
    which: Which,
    tol: f64,
) -> LanczosOutcome {
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let chosen = select(&values, k.min(m), which);
    let basis = q.columns(0, m);
    let mut converged = chosen.len() == k;
    let pairs = chosen
        .iter()
        .map(|&i| {
            let s = eig.eigenvectors.column(i);
            let residual = (tail_beta * s[m - 1]).abs();
            if residual > tol * values[i].abs().max(1.0) {
                converged = false;
            }
            let y = basis * s;
            let norm = y.norm();
            (values[i], y / norm)
        })
        .collect();
    LanczosOutcome { pairs, converged }
}

/// `k` extreme eigenpairs of `scale * a` (symmetric), unit Euclidean vectors.
///
/// Small matrices use a dense decomposition; larger ones use Lanczos with
/// full reorthogonalization, growing the Krylov space until every requested
/// Ritz pair has residual below `tol * max(1, |theta|)`.
pub fn extreme_eigenpairs(
    a: &DMatrix<f64>,
    scale: f64,
    k: usize,
    which: Which,
    tol: f64,
) -> Result<Vec<(f64, DVector<f64>)>> {
    let n = a.nrows();
    if k == 0 || k > n {
        return Err(GraphonError::Domain(format!(
            "requested {k} eigenpairs of a {n}x{n} matrix"
        )));
    }
    if n <= DENSE_CUTOFF {
        let (values, vectors) = symmetric_eigen_desc(&(a * scale));
        return Ok(select(&values, k, which)
            .into_iter()
            .map(|i| (values[i], vectors.column(i).clone_owned()))
            .collect());
    }
    let mut steps = (2 * k + 30).min(n);
    loop {
        let outcome = lanczos_run(a, scale, steps, k, which, tol);
        if outcome.converged || steps == n {
            if !outcome.converged {
                return Err(GraphonError::Numerical(format!(
                    "Lanczos did not resolve {k} eigenpairs with a full Krylov basis"
                )));
            }
            return Ok(outcome.pairs);
        }
        steps = (steps * 2).min(n);
    }
}

/// Spectral radius `max |lambda|` of `scale * a` for symmetric `a`.
pub fn spectral_radius(a: &DMatrix<f64>, scale: f64) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let pairs = extreme_eigenpairs(a, scale, 1, Which::LargestMagnitude, 1e-12)?;
    Ok(pairs[0].0.abs())
}

/// Solve `m x = rhs`, trying Cholesky first and falling back to LU.
pub fn solve_linear(m: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    m.lu()
        .solve(rhs)
        .ok_or_else(|| GraphonError::Numerical("singular linear system".into()))
}
