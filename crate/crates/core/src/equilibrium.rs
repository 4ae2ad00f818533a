//! Nash equilibria of finite network games and discretized graphon games.
//!
//! Both settings reduce to the same fixed point: agent `i` best-responds to
//! the local aggregate `z_i = w * sum_j K_ij s_j`, where `(K, w)` is either a
//! network matrix with `w = 1/N` or a kernel sampled on an `M`-grid with
//! `w = 1/M`. Under the contraction condition
//! `(l_U/alpha_U) * lambda_max(w K) < 1` the best-response map is a
//! contraction and its fixed point is the unique equilibrium.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GraphonError, Result};
use crate::grid::GridFunction;
use crate::kernels::GraphonSpec;
use crate::linalg;
use crate::spectral::{discretize, DiscretizedOperator};

/// Fixed-point tolerance (sup norm).
pub const EQ_TOL: f64 = 1e-10;
/// Best-response iteration budget.
pub const EQ_MAX_ITER: usize = 1_000_000;
/// Direct solves of substitutes games are accepted down to this value.
const NONNEG_SLACK: f64 = -1e-12;
/// Width at which the one-dimensional best-response bisection stops.
const BISECTION_TOL: f64 = 1e-12;
/// Steps smaller than this are too noisy to enter the rate history.
const RATIO_FLOOR: f64 = 1e-11;

/// `U(s, z) = -s^2/2 + s (alpha z + beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LqPayoff {
    pub alpha: f64,
    pub beta: f64,
}

impl LqPayoff {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(GraphonError::Validation(format!("alpha = {alpha} is not finite")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(GraphonError::Validation(format!("beta = {beta} must be positive")));
        }
        Ok(LqPayoff { alpha, beta })
    }

    /// Strategy bound used inside the distance bounds: `beta` for
    /// substitutes, the complete-graph equilibrium `beta/(1-alpha)` for
    /// complements with `alpha < 1`, and `beta/(1 - alpha lambda_max)`
    /// otherwise.
    pub fn default_s_max(&self, lambda_max: f64) -> f64 {
        if self.alpha <= 0.0 {
            self.beta
        } else if self.alpha < 1.0 {
            self.beta / (1.0 - self.alpha)
        } else {
            self.beta / (1.0 - self.alpha * lambda_max)
        }
    }

    /// Equivalent generic payoff on `[0, s_max]`.
    pub fn to_generic(&self, s_max: f64) -> Result<GenericPayoff> {
        let LqPayoff { alpha, beta } = *self;
        GenericPayoff::new(
            Arc::new(move |s, z| -s + alpha * z + beta),
            1.0,
            alpha.abs(),
            0.0,
            s_max,
        )
    }
}

/// Best response of an LQ agent: `max(0, alpha z + beta)`, capped at `hi`.
pub fn br_lq(z: f64, payoff: &LqPayoff, hi: Option<f64>) -> f64 {
    let s = (payoff.alpha * z + payoff.beta).max(0.0);
    match hi {
        Some(h) => s.min(h),
        None => s,
    }
}

/// `dU/ds (s, z)` for scalar strategies.
pub type GradFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A payoff strongly concave in `s` (constant `alpha_u`) whose gradient is
/// `ell_u`-Lipschitz in `z`, on the strategy interval `[lo, hi]`.
#[derive(Clone)]
pub struct GenericPayoff {
    grad_s: GradFn,
    alpha_u: f64,
    ell_u: f64,
    lo: f64,
    hi: f64,
}

impl fmt::Debug for GenericPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericPayoff")
            .field("alpha_u", &self.alpha_u)
            .field("ell_u", &self.ell_u)
            .field("bounds", &(self.lo, self.hi))
            .finish_non_exhaustive()
    }
}

impl GenericPayoff {
    /// Validates the constants and spot-checks strong concavity on a small
    /// grid of `(s, z)` points. The caller remains responsible for honest
    /// constants.
    pub fn new(grad_s: GradFn, alpha_u: f64, ell_u: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(alpha_u > 0.0) {
            return Err(GraphonError::Validation(format!("alpha_U = {alpha_u} must be positive")));
        }
        if !(ell_u >= 0.0) {
            return Err(GraphonError::Validation(format!("l_U = {ell_u} must be nonnegative")));
        }
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return Err(GraphonError::Validation(format!("bad strategy bounds [{lo}, {hi}]")));
        }
        let payoff = GenericPayoff { grad_s, alpha_u, ell_u, lo, hi };
        let probes: Vec<f64> = (0..=4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect();
        for z in [0.0, 0.5, 1.0] {
            for w in probes.windows(2) {
                let drop = (payoff.grad_s)(w[0], z) - (payoff.grad_s)(w[1], z);
                if drop < alpha_u * (w[1] - w[0]) * (1.0 - 1e-9) - 1e-12 {
                    return Err(GraphonError::Validation(format!(
                        "grad_s decreases by {drop} on [{}, {}] at z = {z}, \
                         less than alpha_U times the step",
                        w[0], w[1]
                    )));
                }
            }
        }
        Ok(payoff)
    }

    pub fn alpha_u(&self) -> f64 {
        self.alpha_u
    }

    pub fn ell_u(&self) -> f64 {
        self.ell_u
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn grad(&self, s: f64, z: f64) -> f64 {
        (self.grad_s)(s, z)
    }

    /// Maximizer of `U(., z)` over `[lo, hi]` by bisection on the strictly
    /// decreasing gradient.
    pub fn best_response(&self, z: f64) -> f64 {
        let (mut a, mut b) = (self.lo, self.hi);
        if self.grad(a, z) <= 0.0 {
            return a;
        }
        if self.grad(b, z) >= 0.0 {
            return b;
        }
        while b - a > BISECTION_TOL {
            let mid = 0.5 * (a + b);
            if self.grad(mid, z) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }
}

/// Either payoff family, for pipelines that accept both.
#[derive(Debug, Clone)]
pub enum Payoff {
    Lq(LqPayoff),
    Generic(GenericPayoff),
}

impl Payoff {
    /// `l_U / alpha_U`.
    pub fn lipschitz_ratio(&self) -> f64 {
        match self {
            Payoff::Lq(p) => p.alpha.abs(),
            Payoff::Generic(g) => g.ell_u / g.alpha_u,
        }
    }

    pub fn best_response(&self, z: f64) -> f64 {
        match self {
            Payoff::Lq(p) => br_lq(z, p, None),
            Payoff::Generic(g) => g.best_response(z),
        }
    }

    /// Strategy bound for bound computations.
    pub fn s_max(&self, lambda_max: f64) -> f64 {
        match self {
            Payoff::Lq(p) => p.default_s_max(lambda_max),
            Payoff::Generic(g) => g.hi,
        }
    }
}

impl From<LqPayoff> for Payoff {
    fn from(p: LqPayoff) -> Self {
        Payoff::Lq(p)
    }
}

impl From<GenericPayoff> for Payoff {
    fn from(p: GenericPayoff) -> Self {
        Payoff::Generic(p)
    }
}

/// How an equilibrium was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    #[serde(rename = "direct-solve")]
    DirectSolve,
    #[serde(rename = "br-iteration")]
    BrIteration,
}

/// Outcome of an equilibrium computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    /// Strategies; agent `i` (or grid cell `i`) paired with cell `U_i`.
    pub profile: GridFunction,
    pub iterations: usize,
    /// `||s - BR(s)||_inf` at the returned profile.
    pub residual: f64,
    pub contraction_factor: f64,
    pub method: SolveMethod,
    /// Ratios `||s_{k+1} - s_k||_2 / ||s_k - s_{k-1}||_2` of best-response
    /// iteration; empty for direct solves.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub step_ratios: Vec<f64>,
}

impl EquilibriumReport {
    pub fn values(&self) -> &[f64] {
        self.profile.values()
    }

    /// Writes `index,midpoint,value` rows.
    pub fn write_profile_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["index", "midpoint", "value"])?;
        let m = self.profile.resolution();
        for (i, v) in self.values().iter().enumerate() {
            writer.serialize((i, (i as f64 + 0.5) / m as f64, v))?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// `z = (1/N) P s`.
pub fn local_aggregate(p: &DMatrix<f64>, s: &[f64]) -> Result<Vec<f64>> {
    if p.nrows() != p.ncols() {
        return Err(GraphonError::Validation("network matrix must be square".into()));
    }
    if s.len() != p.ncols() {
        return Err(GraphonError::DimensionMismatch {
            expected: p.ncols(),
            actual: s.len(),
        });
    }
    let n = s.len() as f64;
    let z = p * DVector::from_column_slice(s) / n;
    Ok(z.iter().copied().collect())
}

/// `(l_U/alpha_U) * lambda_max`.
pub fn contraction_factor(payoff: &Payoff, lambda_max: f64) -> Result<f64> {
    if !(lambda_max >= 0.0) {
        return Err(GraphonError::Domain(format!("lambda_max = {lambda_max} must be nonnegative")));
    }
    Ok(payoff.lipschitz_ratio() * lambda_max)
}

/// Aggregation structure shared by network and graphon games.
struct Aggregator<'a> {
    matrix: &'a DMatrix<f64>,
    weight: f64,
}

impl Aggregator<'_> {
    fn aggregate(&self, s: &DVector<f64>) -> DVector<f64> {
        self.matrix * s * self.weight
    }

    fn checked_factor(&self, payoff: &Payoff) -> Result<f64> {
        let lambda = linalg::spectral_radius(self.matrix, self.weight)?;
        let factor = contraction_factor(payoff, lambda)?;
        if factor >= 1.0 {
            return Err(GraphonError::ContractionViolated { factor });
        }
        Ok(factor)
    }

    fn br_map(&self, payoff: &Payoff, s: &DVector<f64>) -> DVector<f64> {
        self.aggregate(s).map(|z| payoff.best_response(z))
    }

    fn residual(&self, payoff: &Payoff, s: &DVector<f64>) -> f64 {
        (self.br_map(payoff, s) - s).amax()
    }

    fn iterate(
        &self,
        payoff: &Payoff,
        start: DVector<f64>,
        factor: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<EquilibriumReport> {
        let mut s = start;
        let mut ratios = Vec::new();
        let mut history = Vec::new();
        let mut previous_step: Option<f64> = None;
        for k in 1..=max_iter {
            let next = self.br_map(payoff, &s);
            let diff = &next - &s;
            let step_inf = diff.amax();
            let step_l2 = diff.norm();
            if let Some(prev) = previous_step {
                if prev > RATIO_FLOOR && step_l2 > RATIO_FLOOR {
                    ratios.push(step_l2 / prev);
                }
            }
            previous_step = Some(step_l2);
            history.push(step_inf);
            s = next;
            if step_inf <= tol {
                let residual = self.residual(payoff, &s);
                return Ok(EquilibriumReport {
                    profile: GridFunction::new(s.iter().copied().collect())?,
                    iterations: k,
                    residual,
                    contraction_factor: factor,
                    method: SolveMethod::BrIteration,
                    step_ratios: ratios,
                });
            }
        }
        Err(GraphonError::IterationLimit {
            iterations: max_iter,
            residual: history.last().copied().unwrap_or(f64::INFINITY),
            last_iterate: s.iter().copied().collect(),
            history,
        })
    }

    fn solve_lq(&self, payoff: &LqPayoff, tol: f64, max_iter: usize) -> Result<EquilibriumReport> {
        let wrapped = Payoff::Lq(*payoff);
        let factor = self.checked_factor(&wrapped)?;
        let n = self.matrix.nrows();
        let system = DMatrix::identity(n, n) - self.matrix * (payoff.alpha * self.weight);
        let rhs = DVector::from_element(n, payoff.beta);
        let direct = linalg::solve_linear(system, &rhs)?;
        let start = direct.map(|v| v.max(0.0));
        if direct.iter().all(|&v| v >= NONNEG_SLACK) {
            let residual = self.residual(&wrapped, &start);
            if residual <= tol {
                return Ok(EquilibriumReport {
                    profile: GridFunction::new(start.iter().copied().collect())?,
                    iterations: 0,
                    residual,
                    contraction_factor: factor,
                    method: SolveMethod::DirectSolve,
                    step_ratios: Vec::new(),
                });
            }
        }
        self.iterate(&wrapped, start, factor, tol, max_iter)
    }
}

fn network_aggregator(p: &DMatrix<f64>) -> Result<Aggregator<'_>> {
    if p.nrows() != p.ncols() || p.nrows() == 0 {
        return Err(GraphonError::Validation(format!(
            "network matrix is {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    Ok(Aggregator {
        matrix: p,
        weight: 1.0 / p.nrows() as f64,
    })
}

fn operator_aggregator(op: &DiscretizedOperator) -> Aggregator<'_> {
    Aggregator {
        matrix: op.kernel(),
        weight: op.weight(),
    }
}

/// LQ network game. Complements: direct solve of `(I - (alpha/N) P) s = beta 1`.
/// Substitutes: the direct solve is accepted if entrywise nonnegative,
/// otherwise projected best-response iteration.
pub fn solve_network_lq(p: &DMatrix<f64>, payoff: &LqPayoff) -> Result<EquilibriumReport> {
    solve_network_lq_with(p, payoff, EQ_TOL, EQ_MAX_ITER)
}

/// [`solve_network_lq`] with an explicit tolerance and iteration budget.
pub fn solve_network_lq_with(p: &DMatrix<f64>, payoff: &LqPayoff, tol: f64, max_iter: usize) -> Result<EquilibriumReport> {
    network_aggregator(p)?.solve_lq(payoff, tol, max_iter)
}

/// Projected best-response iteration for an LQ network game from `start`.
pub fn br_iterate_network_lq(
    p: &DMatrix<f64>,
    payoff: &LqPayoff,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumReport> {
    br_iterate_network(p, &Payoff::Lq(*payoff), start, tol, max_iter)
}

/// Best-response iteration for any payoff from `start`.
pub fn br_iterate_network(
    p: &DMatrix<f64>,
    payoff: &Payoff,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumReport> {
    let agg = network_aggregator(p)?;
    if start.len() != p.nrows() {
        return Err(GraphonError::DimensionMismatch {
            expected: p.nrows(),
            actual: start.len(),
        });
    }
    let factor = agg.checked_factor(payoff)?;
    agg.iterate(payoff, DVector::from_column_slice(start), factor, tol, max_iter)
}

/// Best-response iteration for a generic payoff, started from the
/// standalone best response.
pub fn solve_network_generic(
    p: &DMatrix<f64>,
    payoff: &GenericPayoff,
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumReport> {
    let start = vec![payoff.best_response(0.0); p.nrows()];
    br_iterate_network(p, &Payoff::Generic(payoff.clone()), &start, tol, max_iter)
}

/// Dispatches on the payoff family with default tolerances.
pub fn solve_network(p: &DMatrix<f64>, payoff: &Payoff) -> Result<EquilibriumReport> {
    match payoff {
        Payoff::Lq(lq) => solve_network_lq(p, lq),
        Payoff::Generic(g) => solve_network_generic(p, g, EQ_TOL, EQ_MAX_ITER),
    }
}

/// LQ graphon game on an already discretized operator.
pub fn solve_operator_lq(op: &DiscretizedOperator, payoff: &LqPayoff) -> Result<EquilibriumReport> {
    solve_operator_lq_with(op, payoff, EQ_TOL, EQ_MAX_ITER)
}

pub fn solve_operator_lq_with(
    op: &DiscretizedOperator,
    payoff: &LqPayoff,
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumReport> {
    operator_aggregator(op).solve_lq(payoff, tol, max_iter)
}

/// Generic graphon game on an already discretized operator.
pub fn solve_operator_generic(
    op: &DiscretizedOperator,
    payoff: &GenericPayoff,
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumReport> {
    let agg = operator_aggregator(op);
    let wrapped = Payoff::Generic(payoff.clone());
    let factor = agg.checked_factor(&wrapped)?;
    let start = DVector::from_element(op.resolution(), payoff.best_response(0.0));
    agg.iterate(&wrapped, start, factor, tol, max_iter)
}

/// Dispatches on the payoff family with default tolerances.
pub fn solve_operator(op: &DiscretizedOperator, payoff: &Payoff) -> Result<EquilibriumReport> {
    match payoff {
        Payoff::Lq(lq) => solve_operator_lq(op, lq),
        Payoff::Generic(g) => solve_operator_generic(op, g, EQ_TOL, EQ_MAX_ITER),
    }
}

/// LQ graphon game at resolution `m`: the Bonacich profile
/// `beta (I - alpha W)^{-1} 1` for complements.
pub fn solve_graphon_lq(spec: &GraphonSpec, payoff: &LqPayoff, m: usize) -> Result<EquilibriumReport> {
    solve_operator_lq(&discretize(spec, m)?, payoff)
}

pub fn solve_graphon_generic(
    spec: &GraphonSpec,
    payoff: &GenericPayoff,
    m: usize,
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumReport> {
    solve_operator_generic(&discretize(spec, m)?, payoff, tol, max_iter)
}

/// Sampling radius and the resulting equilibrium-distance bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoBound {
    pub d_n: f64,
    pub rho: f64,
    pub bound_weighted: f64,
    pub bound_simple: f64,
    /// The radicand `(L^2 - Omega^2) d_N^2 + Omega d_N` was negative and was
    /// clamped to zero.
    pub radicand_clamped: bool,
}

/// `d_N = 1/N + sqrt(8 log(N/delta)/N)`,
/// `rho = 2 sqrt((L^2 - Omega^2) d_N^2 + Omega d_N)`,
/// weighted bound `K rho`, 0-1 bound `K (rho + sqrt(4 log(2N/delta)/N))`.
pub fn bound_rho(n: usize, delta: f64, lipschitz: f64, omega: usize, k_tilde: f64) -> Result<RhoBound> {
    if n < 2 {
        return Err(GraphonError::Domain(format!("N = {n} < 2")));
    }
    if !(delta > 0.0 && delta <= (-1.0f64).exp()) {
        return Err(GraphonError::Domain(format!("delta = {delta} outside (0, 1/e]")));
    }
    let nf = n as f64;
    let om = omega as f64;
    let d_n = 1.0 / nf + (8.0 * (nf / delta).ln() / nf).sqrt();
    let radicand = (lipschitz * lipschitz - om * om) * d_n * d_n + om * d_n;
    let rho = 2.0 * radicand.max(0.0).sqrt();
    let bound_weighted = k_tilde * rho;
    let bound_simple = k_tilde * (rho + (4.0 * (2.0 * nf / delta).ln() / nf).sqrt());
    Ok(RhoBound {
        d_n,
        rho,
        bound_weighted,
        bound_simple,
        radicand_clamped: radicand < 0.0,
    })
}

/// `K = (l_U/alpha_U) s_max / (1 - (l_U/alpha_U) lambda_max)`.
pub fn comparative_statics_bound(payoff: &Payoff, lambda_max: f64, s_max: f64) -> Result<f64> {
    let factor = contraction_factor(payoff, lambda_max)?;
    if factor >= 1.0 {
        return Err(GraphonError::ContractionViolated { factor });
    }
    Ok(payoff.lipschitz_ratio() * s_max / (1.0 - factor))
}
