//! Targeted interventions: a planner shifts the standalone marginal returns
//! `beta` to `beta_hat` under the budget `||beta_hat - beta 1||^2 <= C` to
//! maximize average welfare `T = (1/2N) ||s||^2` in an LQ complements game.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{GraphonError, Result};
use crate::kernels::GraphonSpec;
use crate::linalg::{self, Which};
use crate::sampling::{SimpleNetwork, TypeVector};
use crate::spectral::{dominant_eigenfunction, PointEigenfunction};

const BUDGET_SLACK: f64 = 1e-9;
const BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Optimal,
    NetworkHeuristic,
    GraphonHeuristic,
    Homogeneous,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionResult {
    pub beta_hat: Vec<f64>,
    pub welfare: f64,
    /// `sum_i (beta - beta_hat_i)^2`.
    pub budget_used: f64,
    pub policy: Policy,
}

enum Factor {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

/// Factorization of `I - (alpha/N) P`, reused across welfare evaluations on
/// one network.
pub struct WelfareSolver {
    factor: Factor,
    n: usize,
    lambda_max: f64,
}

impl WelfareSolver {
    pub fn new(p: &DMatrix<f64>, alpha: f64) -> Result<Self> {
        let n = p.nrows();
        if n == 0 || p.ncols() != n {
            return Err(GraphonError::Validation(format!("network matrix is {}x{}", n, p.ncols())));
        }
        let lambda_max = linalg::spectral_radius(p, 1.0 / n as f64)?;
        let factor = alpha.abs() * lambda_max;
        if factor >= 1.0 {
            return Err(GraphonError::ContractionViolated { factor });
        }
        let system = DMatrix::identity(n, n) - p * (alpha / n as f64);
        let factor = match system.clone().cholesky() {
            Some(c) => Factor::Cholesky(c),
            None => Factor::Lu(system.lu()),
        };
        Ok(WelfareSolver { factor, n, lambda_max })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `lambda_max(P/N)`.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Equilibrium `(I - (alpha/N) P)^{-1} beta_hat`.
    pub fn equilibrium(&self, beta_hat: &[f64]) -> Result<DVector<f64>> {
        if beta_hat.len() != self.n {
            return Err(GraphonError::DimensionMismatch {
                expected: self.n,
                actual: beta_hat.len(),
            });
        }
        let rhs = DVector::from_column_slice(beta_hat);
        match &self.factor {
            Factor::Cholesky(c) => Ok(c.solve(&rhs)),
            Factor::Lu(lu) => lu
                .solve(&rhs)
                .ok_or_else(|| GraphonError::Numerical("singular equilibrium system".into())),
        }
    }

    pub fn welfare(&self, beta_hat: &[f64]) -> Result<f64> {
        let s = self.equilibrium(beta_hat)?;
        Ok(s.norm_squared() / (2.0 * self.n as f64))
    }

    fn result(&self, beta: f64, beta_hat: Vec<f64>, policy: Policy) -> Result<InterventionResult> {
        let welfare = self.welfare(&beta_hat)?;
        let budget_used = beta_hat.iter().map(|b| (b - beta) * (b - beta)).sum();
        Ok(InterventionResult {
            beta_hat,
            welfare,
            budget_used,
            policy,
        })
    }
}

/// `T = (1/2N) ||(I - (alpha/N) P)^{-1} beta_hat||^2`.
pub fn welfare(p: &DMatrix<f64>, alpha: f64, beta_hat: &[f64]) -> Result<f64> {
    WelfareSolver::new(p, alpha)?.welfare(beta_hat)
}

fn check_budget(c: f64) -> Result<()> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(GraphonError::Domain(format!("budget C = {c} must be a nonnegative number")));
    }
    Ok(())
}

fn homogeneous_vector(beta: f64, c: f64, n: usize) -> Result<Vec<f64>> {
    check_budget(c)?;
    if n == 0 {
        return Err(GraphonError::Domain("population must be nonempty".into()));
    }
    Ok(vec![beta + (c / n as f64).sqrt(); n])
}

fn network_heuristic_vector(p: &DMatrix<f64>, beta: f64, c: f64) -> Result<Vec<f64>> {
    check_budget(c)?;
    let n = p.nrows();
    let pairs = linalg::extreme_eigenpairs(p, 1.0 / n as f64, 1, Which::Largest, 1e-10)?;
    let mut v = pairs[0].1.clone();
    if v.sum() < 0.0 {
        v.neg_mut();
    }
    let v = v.normalize();
    Ok(v.iter().map(|x| beta + c.sqrt() * x).collect())
}

fn graphon_heuristic_vector(psi: &PointEigenfunction, types: &TypeVector, beta: f64, c: f64) -> Result<Vec<f64>> {
    check_budget(c)?;
    let values: Vec<f64> = types.types().iter().map(|&t| psi.eval(t)).collect();
    let mass: f64 = values.iter().map(|v| v * v).sum();
    if c == 0.0 {
        return Ok(vec![beta; values.len()]);
    }
    if !(mass > 0.0) {
        return Err(GraphonError::Numerical("dominant eigenfunction vanishes at every type".into()));
    }
    let kappa = (c / mass).sqrt();
    Ok(values.iter().map(|v| beta + kappa * v).collect())
}

/// No intervention: `beta_hat = beta 1`.
pub fn baseline(p: &DMatrix<f64>, alpha: f64, beta: f64) -> Result<InterventionResult> {
    WelfareSolver::new(p, alpha)?.result(beta, vec![beta; p.nrows()], Policy::None)
}

/// Equal split: `beta_hat_i = beta + sqrt(C/N)`.
///
/// Welfare is left at zero; use [`homogeneous_on`] to evaluate it on a
/// network.
pub fn homogeneous_policy(beta: f64, c: f64, n: usize) -> Result<InterventionResult> {
    let beta_hat = homogeneous_vector(beta, c, n)?;
    Ok(InterventionResult {
        budget_used: beta_hat.iter().map(|b| (b - beta) * (b - beta)).sum(),
        beta_hat,
        welfare: 0.0,
        policy: Policy::Homogeneous,
    })
}

/// Equal split evaluated on a network.
pub fn homogeneous_on(solver: &WelfareSolver, beta: f64, c: f64) -> Result<InterventionResult> {
    solver.result(beta, homogeneous_vector(beta, c, solver.len())?, Policy::Homogeneous)
}

/// `beta_hat = beta 1 + sqrt(C) v_1` with `v_1` the unit nonnegative
/// dominant eigenvector of `P`. Welfare is evaluated with complements
/// `alpha`.
pub fn network_heuristic(p: &DMatrix<f64>, alpha: f64, beta: f64, c: f64) -> Result<InterventionResult> {
    let solver = WelfareSolver::new(p, alpha)?;
    network_heuristic_on(&solver, p, beta, c)
}

pub fn network_heuristic_on(solver: &WelfareSolver, p: &DMatrix<f64>, beta: f64, c: f64) -> Result<InterventionResult> {
    solver.result(beta, network_heuristic_vector(p, beta, c)?, Policy::NetworkHeuristic)
}

/// `beta_hat_i = beta + kappa psi_1(t_i)` with
/// `kappa = sqrt(C / sum_j psi_1(t_j)^2)`, evaluated on the network `p`.
pub fn graphon_heuristic(
    p: &DMatrix<f64>,
    alpha: f64,
    spec: &GraphonSpec,
    types: &TypeVector,
    beta: f64,
    c: f64,
    m: usize,
) -> Result<InterventionResult> {
    let (_, psi) = dominant_eigenfunction(spec, m)?;
    graphon_heuristic_on(&WelfareSolver::new(p, alpha)?, &psi, types, beta, c)
}

pub fn graphon_heuristic_on(
    solver: &WelfareSolver,
    psi: &PointEigenfunction,
    types: &TypeVector,
    beta: f64,
    c: f64,
) -> Result<InterventionResult> {
    if types.len() != solver.len() {
        return Err(GraphonError::DimensionMismatch {
            expected: solver.len(),
            actual: types.len(),
        });
    }
    solver.result(beta, graphon_heuristic_vector(psi, types, beta, c)?, Policy::GraphonHeuristic)
}

/// KKT data of the optimal intervention in the eigenbasis of `P/N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityCertificate {
    pub multiplier: f64,
    /// `||D y - mu (y - c)||_inf`.
    pub stationarity: f64,
    /// `sum (y - c)^2 - C`.
    pub budget_residual: f64,
    pub hard_case: bool,
}

/// Exact maximizer of `T(beta_hat)` over the budget ball.
///
/// With `P/N = sum_l lambda_l u_l u_l^T`, `d_l = (1 - alpha lambda_l)^{-2}`
/// and `c_l = beta <1, u_l>`, the problem is `max sum d_l y_l^2` subject to
/// `sum (y_l - c_l)^2 <= C`. The maximizer is `y_l = mu c_l / (mu - d_l)`
/// where `mu > max d` solves `sum (d_l c_l / (mu - d_l))^2 = C`.
pub fn optimal_intervention(p: &DMatrix<f64>, alpha: f64, beta: f64, c: f64) -> Result<InterventionResult> {
    optimal_intervention_certified(p, alpha, beta, c).map(|(r, _)| r)
}

pub fn optimal_intervention_certified(
    p: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    c: f64,
) -> Result<(InterventionResult, OptimalityCertificate)> {
    check_budget(c)?;
    if !(alpha > 0.0) {
        return Err(GraphonError::Domain(format!(
            "optimal intervention needs complements, got alpha = {alpha}"
        )));
    }
    let solver = WelfareSolver::new(p, alpha)?;
    let n = p.nrows();
    if c == 0.0 {
        let r = solver.result(beta, vec![beta; n], Policy::Optimal)?;
        let cert = OptimalityCertificate {
            multiplier: f64::INFINITY,
            stationarity: 0.0,
            budget_residual: 0.0,
            hard_case: false,
        };
        return Ok((r, cert));
    }

    let (lambdas, u) = linalg::symmetric_eigen_desc(&(p / n as f64));
    let d: Vec<f64> = lambdas.iter().map(|l| (1.0 - alpha * l).powi(-2)).collect();
    let ones = DVector::from_element(n, beta);
    let coeffs: Vec<f64> = (0..n).map(|l| u.column(l).dot(&ones)).collect();
    let d_max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c_norm = coeffs.iter().map(|x| x * x).sum::<f64>().sqrt();
    let blocking: Vec<bool> = d.iter().map(|&dl| d_max - dl <= 1e-12 * d_max).collect();
    let block_mass: f64 = coeffs
        .iter()
        .zip(&blocking)
        .filter(|(_, &b)| b)
        .map(|(x, _)| x * x)
        .sum::<f64>()
        .sqrt();

    // Deviation y_l - c_l = d_l c_l / (mu - d_l), parameterized by tau = mu - d_max.
    let deviation = |tau: f64| -> Vec<f64> {
        (0..n)
            .map(|l| d[l] * coeffs[l] / (tau + d_max - d[l]))
            .collect()
    };
    let g = |tau: f64| deviation(tau).iter().map(|x| x * x).sum::<f64>();

    let mut hard_case = false;
    let (mu, mut delta) = {
        let free_at_limit: f64 = (0..n)
            .filter(|&l| !blocking[l])
            .map(|l| (d[l] * coeffs[l] / (d_max - d[l])).powi(2))
            .sum();
        if block_mass <= 1e-12 * c_norm.max(1e-300) && free_at_limit <= c {
            hard_case = true;
            let mut delta: Vec<f64> = (0..n)
                .map(|l| if blocking[l] { 0.0 } else { d[l] * coeffs[l] / (d_max - d[l]) })
                .collect();
            let first = blocking.iter().position(|&b| b).expect("d_max is attained");
            delta[first] = (c - free_at_limit).max(0.0).sqrt();
            (d_max, delta)
        } else {
            let (mut lo, mut hi) = (0.0, d_max * c_norm / c.sqrt());
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if g(mid) > c {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (d_max + hi, deviation(hi))
        }
    };
    let spent = delta.iter().map(|x| x * x).sum::<f64>();
    if spent > 0.0 {
        let fix = (c / spent).sqrt();
        delta.iter_mut().for_each(|x| *x *= fix);
    }
    let y: Vec<f64> = coeffs.iter().zip(&delta).map(|(cl, dl)| cl + dl).collect();
    let stationarity = (0..n)
        .map(|l| (d[l] * y[l] - mu * delta[l]).abs())
        .fold(0.0, f64::max);
    let budget_residual = delta.iter().map(|x| x * x).sum::<f64>() - c;
    let beta_hat = &u * DVector::from_vec(y);
    let result = solver.result(beta, beta_hat.iter().copied().collect(), Policy::Optimal)?;
    if result.budget_used > c + BUDGET_SLACK * c.max(1.0) {
        return Err(GraphonError::Numerical(format!(
            "optimal intervention overspent: {} > {c}",
            result.budget_used
        )));
    }
    Ok((
        result,
        OptimalityCertificate {
            multiplier: mu,
            stationarity,
            budget_residual,
            hard_case,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareGap {
    pub t_nh: f64,
    pub t_gh: f64,
    pub gap: f64,
}

/// Both heuristics on the same realized network; `gap = |T_nh - T_gh|`.
pub fn welfare_gap(
    ps: &SimpleNetwork,
    spec: &GraphonSpec,
    alpha: f64,
    beta: f64,
    c: f64,
    m: usize,
) -> Result<WelfareGap> {
    let solver = WelfareSolver::new(&ps.a, alpha)?;
    let (_, psi) = dominant_eigenfunction(spec, m)?;
    let nh = network_heuristic_on(&solver, &ps.a, beta, c)?;
    let gh = graphon_heuristic_on(&solver, &psi, &ps.types, beta, c)?;
    Ok(WelfareGap {
        t_nh: nh.welfare,
        t_gh: gh.welfare,
        gap: (nh.welfare - gh.welfare).abs(),
    })
}

/// `||beta_nh - beta_gh|| / sqrt(C)`.
pub fn heuristic_distance(nh: &InterventionResult, gh: &InterventionResult, c: f64) -> f64 {
    let sq: f64 = nh
        .beta_hat
        .iter()
        .zip(&gh.beta_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    sq.sqrt() / c.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{derive_seed, rng_from_seed, sample_types, simple_network, weighted_network};
    use proptest::prelude::*;
    use rand::Rng;

    fn complete(n: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, n, 1.0)
    }

    fn random_network(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        let mut p = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = rng.random();
                p[(i, j)] = v;
                p[(j, i)] = v;
            }
        }
        p
    }

    /// Dense scan of the circle `beta_hat = beta 1 + sqrt(C)(cos t, sin t)`
    /// followed by golden-section refinement around the best sample.
    fn circle_search(p: &DMatrix<f64>, alpha: f64, beta: f64, c: f64) -> f64 {
        let solver = WelfareSolver::new(p, alpha).unwrap();
        let f = |t: f64| {
            solver
                .welfare(&[beta + c.sqrt() * t.cos(), beta + c.sqrt() * t.sin()])
                .unwrap()
        };
        let samples = 20_000;
        let step = std::f64::consts::TAU / samples as f64;
        let best = (0..samples)
            .map(|k| k as f64 * step)
            .max_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap();
        let (mut a, mut b) = (best - step, best + step);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let x1 = b - phi * (b - a);
            let x2 = a + phi * (b - a);
            if f(x1) > f(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        f(0.5 * (a + b))
    }

    #[test]
    fn welfare_examples() {
        let p = complete(6);
        let t = welfare(&p, 0.5, &[1.0; 6]).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        let scaled = welfare(&p, 0.5, &[1.1; 6]).unwrap();
        assert!((scaled / t - 1.21).abs() < 1e-12);
        assert!((welfare(&DMatrix::zeros(3, 3), 0.5, &[1.5; 3]).unwrap() - 1.125).abs() < 1e-15);
        assert!(matches!(
            welfare(&p, 1.2, &[1.0; 6]),
            Err(GraphonError::ContractionViolated { .. })
        ));
    }

    #[test]
    fn homogeneous_examples() {
        let r = homogeneous_policy(1.0, 0.0, 4).unwrap();
        assert_eq!(r.beta_hat, vec![1.0; 4]);
        let r = homogeneous_policy(1.0, 0.01 * 50.0, 50).unwrap();
        assert!(r.beta_hat.iter().all(|b| (b - 1.1).abs() < 1e-15));
        assert!((r.budget_used - 0.5).abs() < 1e-12);
        assert!(homogeneous_policy(1.0, -1.0, 4).is_err());
    }

    #[test]
    fn network_heuristic_examples() {
        let p = random_network(40, 3);
        let r = network_heuristic(&p, 0.5, 1.0, 0.0).unwrap();
        assert!(r.beta_hat.iter().all(|&b| b == 1.0));
        let r = network_heuristic(&p, 0.5, 1.0, 2.0).unwrap();
        assert!((r.budget_used - 2.0).abs() < 1e-10);
        assert!(r.beta_hat.iter().all(|&b| b >= 1.0));

        let h = network_heuristic(&complete(90), 0.5, 1.0, 9.0).unwrap();
        assert!(h.beta_hat.iter().all(|b| (b - (1.0 + (0.1f64).sqrt())).abs() < 1e-9));
    }

    #[test]
    fn graphon_heuristic_examples() {
        let spec = GraphonSpec::planted_partition(0.8, 0.1, vec![0.75, 0.25]).unwrap();
        let types = sample_types(60, 11).unwrap();
        let ps = simple_network(&weighted_network(&spec, &types), 12);
        let r = graphon_heuristic(&ps.a, 0.5, &spec, &types, 1.0, 0.6, 100).unwrap();
        assert!((r.budget_used - 0.6).abs() < 1e-12);
        let mut by_block: [Option<f64>; 2] = [None, None];
        for (t, b) in types.types().iter().zip(&r.beta_hat) {
            let k = spec.community_of(*t).unwrap();
            match by_block[k] {
                Some(v) => assert_eq!(v, *b),
                None => by_block[k] = Some(*b),
            }
        }
        let zero = graphon_heuristic(&ps.a, 0.5, &spec, &types, 1.0, 0.0, 100).unwrap();
        assert!(zero.beta_hat.iter().all(|&b| b == 1.0));
    }

    #[test]
    fn optimal_trivial_cases() {
        let p = random_network(5, 1);
        let r = optimal_intervention(&p, 0.5, 1.0, 0.0).unwrap();
        assert_eq!(r.beta_hat, vec![1.0; 5]);
        assert!((r.welfare - baseline(&p, 0.5, 1.0).unwrap().welfare).abs() < 1e-15);

        let r = optimal_intervention(&DMatrix::zeros(1, 1), 0.5, 1.0, 0.49).unwrap();
        assert!((r.beta_hat[0] - 1.7).abs() < 1e-12);
        assert!(optimal_intervention(&p, -0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn optimal_on_empty_network_is_homogeneous() {
        // All d_l equal: the constant direction is optimal.
        let r = optimal_intervention(&DMatrix::zeros(4, 4), 0.5, 1.0, 1.0).unwrap();
        assert!(r.beta_hat.iter().all(|b| (b - 1.5).abs() < 1e-12));
    }

    #[test]
    fn optimal_matches_circle_search() {
        for seed in 0..10 {
            let mut rng = rng_from_seed(derive_seed(40, &[seed]));
            let w: f64 = rng.random();
            let p = DMatrix::from_row_slice(2, 2, &[0.0, w, w, 0.0]);
            let c = 0.05 + rng.random::<f64>();
            let alpha = 0.3 + 1.5 * rng.random::<f64>();
            let opt = optimal_intervention(&p, alpha, 1.0, c).unwrap();
            let brute = circle_search(&p, alpha, 1.0, c);
            assert!((opt.welfare - brute).abs() < 1e-6, "seed {seed}: {} vs {brute}", opt.welfare);
            assert!(opt.welfare >= brute - 1e-12);
        }
    }

    #[test]
    fn hard_case_uses_residual_budget() {
        // P/N has eigenvalues 0.5 (vector (1,-1)) and -0.5 (vector (1,1)), so
        // c vanishes on the top direction.
        let p = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        let (r, cert) = optimal_intervention_certified(&p, 0.5, 1.0, 4.0).unwrap();
        assert!(cert.hard_case);
        assert!((r.budget_used - 4.0).abs() < 1e-9);
        let brute = circle_search(&p, 0.5, 1.0, 4.0);
        assert!((r.welfare - brute).abs() < 1e-6);
    }

    #[test]
    fn certificate_and_dominance() {
        for seed in 0..6 {
            let n = 50;
            let spec = GraphonSpec::minmax();
            let types = sample_types(n, derive_seed(8, &[seed])).unwrap();
            let ps = simple_network(&weighted_network(&spec, &types), derive_seed(9, &[seed]));
            let c = 0.01 * n as f64;
            let alpha = 5.0;
            let solver = WelfareSolver::new(&ps.a, alpha).unwrap();
            let (opt, cert) = optimal_intervention_certified(&ps.a, alpha, 1.0, c).unwrap();
            assert!(cert.stationarity <= 1e-8);
            assert!(cert.budget_residual.abs() <= 1e-8);
            let (_, psi) = dominant_eigenfunction(&spec, 200).unwrap();
            let others = [
                homogeneous_on(&solver, 1.0, c).unwrap(),
                network_heuristic_on(&solver, &ps.a, 1.0, c).unwrap(),
                graphon_heuristic_on(&solver, &psi, &types, 1.0, c).unwrap(),
            ];
            for o in &others {
                assert!(opt.welfare >= o.welfare - 1e-9);
                assert!((o.budget_used - c).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gap_examples() {
        let spec = GraphonSpec::erdos_renyi(1.0).unwrap();
        let types = sample_types(30, 1).unwrap();
        let ps = simple_network(&weighted_network(&spec, &types), 2);
        let g = welfare_gap(&ps, &spec, 0.5, 1.0, 0.3, 100).unwrap();
        assert!(g.gap < 1e-10);
        let spec = GraphonSpec::minmax();
        let ps = simple_network(&weighted_network(&spec, &types), 2);
        let g = welfare_gap(&ps, &spec, 0.5, 1.0, 0.0, 100).unwrap();
        assert_eq!(g.gap, 0.0);
    }

    #[test]
    fn result_json() {
        let r = homogeneous_policy(1.0, 4.0, 4).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["policy"], "homogeneous");
        assert_eq!(json["beta_hat"], serde_json::json!([2.0, 2.0, 2.0, 2.0]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn budgets_are_feasible(seed in 0u64..10_000, c in 0.0..5.0f64, alpha in 0.05..1.5f64) {
            let n = 12;
            let p = random_network(n, seed);
            let solver = WelfareSolver::new(&p, alpha);
            prop_assume!(solver.is_ok());
            let solver = solver.unwrap();
            let opt = optimal_intervention(&p, alpha, 1.0, c).unwrap();
            prop_assert!(opt.budget_used <= c + 1e-9);
            let nh = network_heuristic_on(&solver, &p, 1.0, c).unwrap();
            let hom = homogeneous_on(&solver, 1.0, c).unwrap();
            prop_assert!((nh.budget_used - c).abs() <= 1e-9 * c.max(1.0));
            prop_assert!((hom.budget_used - c).abs() <= 1e-9 * c.max(1.0));
            prop_assert!(opt.welfare >= nh.welfare.max(hom.welfare) - 1e-9);
        }
    }
}
