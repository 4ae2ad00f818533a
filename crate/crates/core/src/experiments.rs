//! Seeded Monte Carlo pipelines: network-versus-graphon equilibrium
//! distances, intervention welfare comparisons, and rate fits.
//!
//! Every trial draws from its own seed `derive_seed(seed, [N, trial, stream])`,
//! trials run in parallel and results are folded in `(N, trial)` order, so
//! output is independent of the worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{bound_rho, comparative_statics_bound, solve_network, solve_operator, Payoff, RhoBound};
use crate::error::{GraphonError, Result};
use crate::grid::{l2_distance, step_function_embed, GridFunction};
use crate::interventions::{
    heuristic_distance, homogeneous_on, network_heuristic_on, graphon_heuristic_on, optimal_intervention, WelfareSolver,
};
use crate::kernels::GraphonSpec;
use crate::linalg;
use crate::sampling::{derive_seed, sample_types, simple_network, weighted_network, TypeVector};
use crate::spectral::{discretize, dominant_eigenfunction};

pub const DEFAULT_RESOLUTION: usize = 2000;
pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_OPTIMAL_CAP: usize = 150;
/// Version of the CSV layouts written by this module.
pub const CSV_SCHEMA_VERSION: u32 = 1;

const TYPE_STREAM: u64 = 0;
const LINK_STREAM: u64 = 1;

/// How agent types are chosen in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeSampling {
    /// I.i.d. uniform, sorted.
    Random,
    /// Deterministic cell midpoints `(i + 1/2)/N`.
    Midpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceConfig {
    #[serde(rename = "Ns")]
    pub ns: Vec<usize>,
    pub trials: usize,
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
    pub types: TypeSampling,
}

impl DistanceConfig {
    pub fn new(ns: Vec<usize>, trials: usize, seed: u64) -> Self {
        DistanceConfig {
            ns,
            trials,
            delta: DEFAULT_DELTA,
            m: DEFAULT_RESOLUTION,
            seed,
            types: TypeSampling::Random,
        }
    }

    /// Random types need a reference grid at least twice as fine as the
    /// largest network; midpoint types are exact at any resolution.
    pub fn validate(&self) -> Result<()> {
        validate_ns(&self.ns)?;
        if self.trials == 0 {
            return Err(GraphonError::Validation("trials must be positive".into()));
        }
        let max_n = *self.ns.iter().max().expect("nonempty");
        if self.types == TypeSampling::Random && self.m < 2 * max_n {
            return Err(GraphonError::Validation(format!(
                "resolution M = {} must be at least 2 * max(Ns) = {}",
                self.m,
                2 * max_n
            )));
        }
        bound_rho(2, self.delta, 0.0, 0, 0.0)?;
        Ok(())
    }
}

fn validate_ns(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return Err(GraphonError::Validation("Ns must be nonempty".into()));
    }
    if let Some(&n) = ns.iter().find(|&&n| n < 2) {
        return Err(GraphonError::Validation(format!("population size {n} < 2")));
    }
    Ok(())
}

/// Seeds for the types and the links of trial `trial` at size `n`.
pub fn trial_seeds(seed: u64, n: usize, trial: usize) -> (u64, u64) {
    let path = |stream| derive_seed(seed, &[n as u64, trial as u64, stream]);
    (path(TYPE_STREAM), path(LINK_STREAM))
}

fn trial_types(sampling: TypeSampling, n: usize, seed: u64, trial: usize) -> Result<TypeVector> {
    match sampling {
        TypeSampling::Random => sample_types(n, trial_seeds(seed, n, trial).0),
        TypeSampling::Midpoints => TypeVector::cell_midpoints(n),
    }
}

fn link_seed(seed: u64, n: usize, trial: usize) -> u64 {
    trial_seeds(seed, n, trial).1
}

/// Order statistics with linear interpolation between closest ranks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p0: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

impl Percentiles {
    /// All fields are NaN for an empty sample.
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| quantile_sorted(&sorted, p);
        Percentiles {
            p0: q(0.0),
            p25: q(0.25),
            p50: q(0.5),
            p75: q(0.75),
            p95: q(0.95),
        }
    }
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Which sampled game a distance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GameKind {
    /// Weighted network `P_w`.
    #[serde(rename = "w")]
    Weighted,
    /// Bernoulli 0-1 network `P_s`.
    #[serde(rename = "s")]
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub trial: usize,
    pub kind: GameKind,
    pub distance: f64,
    pub bound: f64,
    /// Every type lies within `d_N` of every point of its cell.
    pub d_n_event: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    #[serde(rename = "N")]
    pub n: usize,
    pub trial: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    pub failures: usize,
    pub weighted: Percentiles,
    pub simple: Percentiles,
    pub bound_weighted: f64,
    pub bound_simple: f64,
    pub d_n: f64,
    pub rho: f64,
    pub radicand_clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceExperiment {
    pub config: DistanceConfig,
    pub lambda_max: f64,
    pub s_max: f64,
    pub k_tilde: f64,
    pub lipschitz: f64,
    pub omega: usize,
    pub rows: Vec<DistanceRow>,
    pub stats: Vec<DistanceStats>,
    pub failures: Vec<TrialFailure>,
}

impl DistanceExperiment {
    /// Distances of one kind at population size `n`, in trial order.
    pub fn distances(&self, n: usize, kind: GameKind) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.n == n && r.kind == kind)
            .map(|r| r.distance)
            .collect()
    }

    pub fn medians(&self, kind: GameKind) -> Vec<f64> {
        self.stats
            .iter()
            .map(|s| match kind {
                GameKind::Weighted => s.weighted.p50,
                GameKind::Simple => s.simple.p50,
            })
            .collect()
    }

    /// Weighted-game rows where the `d_N` event holds but the distance
    /// exceeds the bound by more than `slack`.
    pub fn bound_violations(&self, slack: f64) -> Vec<DistanceRow> {
        self.rows
            .iter()
            .filter(|r| r.kind == GameKind::Weighted && r.d_n_event && r.distance > r.bound + slack)
            .copied()
            .collect()
    }
}

struct DistanceTrial {
    weighted: f64,
    simple: f64,
    event: bool,
}

/// Graphon equilibrium at resolution `M` against the equilibria of sampled
/// weighted and 0-1 networks, with the high-probability bounds attached.
pub fn distance_experiment(spec: &GraphonSpec, payoff: &Payoff, config: &DistanceConfig) -> Result<DistanceExperiment> {
    config.validate()?;
    let op = discretize(spec, config.m)?;
    let lambda_max = linalg::spectral_radius(op.kernel(), op.weight())?;
    let sbar = solve_operator(&op, payoff)?.profile;
    drop(op);
    let s_max = payoff.s_max(lambda_max);
    let k_tilde = comparative_statics_bound(payoff, lambda_max, s_max)?;
    let (lipschitz, omega) = spec.lipschitz_metadata();

    let mut rows = Vec::new();
    let mut stats = Vec::new();
    let mut failures = Vec::new();
    for &n in &config.ns {
        let bound: RhoBound = bound_rho(n, config.delta, lipschitz, omega, k_tilde)?;
        let outcomes: Vec<Result<DistanceTrial>> = (0..config.trials)
            .into_par_iter()
            .map(|trial| distance_trial(spec, payoff, &sbar, config, n, trial, bound.d_n))
            .collect();
        let (mut w, mut s) = (Vec::new(), Vec::new());
        let mut failed = 0;
        for (trial, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(t) => {
                    w.push(t.weighted);
                    s.push(t.simple);
                    rows.push(DistanceRow {
                        n,
                        trial,
                        kind: GameKind::Weighted,
                        distance: t.weighted,
                        bound: bound.bound_weighted,
                        d_n_event: t.event,
                    });
                    rows.push(DistanceRow {
                        n,
                        trial,
                        kind: GameKind::Simple,
                        distance: t.simple,
                        bound: bound.bound_simple,
                        d_n_event: t.event,
                    });
                }
                Err(e) => {
                    failed += 1;
                    failures.push(TrialFailure {
                        n,
                        trial,
                        error: e.to_string(),
                    });
                }
            }
        }
        stats.push(DistanceStats {
            n,
            trials: config.trials,
            failures: failed,
            weighted: Percentiles::of(&w),
            simple: Percentiles::of(&s),
            bound_weighted: bound.bound_weighted,
            bound_simple: bound.bound_simple,
            d_n: bound.d_n,
            rho: bound.rho,
            radicand_clamped: bound.radicand_clamped,
        });
    }
    Ok(DistanceExperiment {
        config: config.clone(),
        lambda_max,
        s_max,
        k_tilde,
        lipschitz,
        omega,
        rows,
        stats,
        failures,
    })
}

fn distance_trial(
    spec: &GraphonSpec,
    payoff: &Payoff,
    sbar: &GridFunction,
    config: &DistanceConfig,
    n: usize,
    trial: usize,
    d_n: f64,
) -> Result<DistanceTrial> {
    let types = trial_types(config.types, n, config.seed, trial)?;
    let pw = weighted_network(spec, &types);
    let ps = simple_network(&pw, link_seed(config.seed, n, trial));
    let sw = solve_network(&pw.p, payoff)?;
    let ss = solve_network(&ps.a, payoff)?;
    Ok(DistanceTrial {
        weighted: l2_distance(&step_function_embed(sw.values())?, sbar),
        simple: l2_distance(&step_function_embed(ss.values())?, sbar),
        event: types.max_cell_deviation() <= d_n,
    })
}

/// Writes `N,trial,kind,distance,bound,d_N_event` rows.
pub fn write_distance_csv<W: Write>(rows: &[DistanceRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["N", "trial", "kind", "distance", "bound", "d_N_event"])?;
    for r in rows {
        let kind = match r.kind {
            GameKind::Weighted => "w",
            GameKind::Simple => "s",
        };
        writer.serialize((r.n, r.trial, kind, r.distance, r.bound, u8::from(r.d_n_event)))?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes one row per `(N, kind)` with percentiles and the bound.
pub fn write_distance_stats_csv<W: Write>(stats: &[DistanceStats], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["N", "kind", "trials", "failures", "p0", "p25", "p50", "p75", "p95", "bound"])?;
    for s in stats {
        for (kind, p, bound) in [("w", &s.weighted, s.bound_weighted), ("s", &s.simple, s.bound_simple)] {
            writer.serialize((s.n, kind, s.trials, s.failures, p.p0, p.p25, p.p50, p.p75, p.p95, bound))?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionConfig {
    #[serde(rename = "Ns")]
    pub ns: Vec<usize>,
    pub trials: usize,
    pub c_per_agent: f64,
    pub optimal_cap: usize,
    /// Resolution for numerical eigenfunctions of tabulated kernels.
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
}

impl InterventionConfig {
    pub fn new(ns: Vec<usize>, trials: usize, c_per_agent: f64, seed: u64) -> Self {
        InterventionConfig {
            ns,
            trials,
            c_per_agent,
            optimal_cap: DEFAULT_OPTIMAL_CAP,
            m: DEFAULT_RESOLUTION,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_ns(&self.ns)?;
        if self.trials == 0 {
            return Err(GraphonError::Validation("trials must be positive".into()));
        }
        if !(self.c_per_agent >= 0.0) || !self.c_per_agent.is_finite() {
            return Err(GraphonError::Validation(format!(
                "budget per agent {} must be nonnegative",
                self.c_per_agent
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub trial: usize,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "T_hom")]
    pub t_hom: f64,
    #[serde(rename = "T_nh")]
    pub t_nh: f64,
    #[serde(rename = "T_gh")]
    pub t_gh: f64,
    #[serde(rename = "T_opt")]
    pub t_opt: Option<f64>,
    pub gap: f64,
    /// `||beta_nh - beta_gh|| / sqrt(C)`.
    pub heuristic_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareStats {
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    pub failures: usize,
    pub mean_t: f64,
    pub mean_t_hom: f64,
    pub mean_t_nh: f64,
    pub mean_t_gh: f64,
    pub mean_t_opt: Option<f64>,
    pub gap: Percentiles,
    pub ratio_gh_nh: Percentiles,
    pub mean_ratio_gh_nh: f64,
    pub heuristic_distance: Percentiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionExperiment {
    pub config: InterventionConfig,
    pub alpha: f64,
    pub beta: f64,
    pub rows: Vec<WelfareRow>,
    pub stats: Vec<WelfareStats>,
    pub failures: Vec<TrialFailure>,
}

/// Welfare without intervention and under the homogeneous, network-heuristic,
/// graphon-heuristic and (for `N <= optimal_cap`) optimal policies, all on
/// the same sampled 0-1 network with budget `C = c N`.
pub fn intervention_experiment(
    spec: &GraphonSpec,
    alpha: f64,
    beta: f64,
    config: &InterventionConfig,
) -> Result<InterventionExperiment> {
    config.validate()?;
    if !(alpha > 0.0) {
        return Err(GraphonError::Validation(format!(
            "interventions need complements, got alpha = {alpha}"
        )));
    }
    if !(beta > 0.0) {
        return Err(GraphonError::Validation(format!("beta = {beta} must be positive")));
    }
    let (_, psi) = dominant_eigenfunction(spec, config.m)?;
    let mut rows = Vec::new();
    let mut stats = Vec::new();
    let mut failures = Vec::new();
    for &n in &config.ns {
        let c = config.c_per_agent * n as f64;
        let outcomes: Vec<Result<WelfareRow>> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let types = sample_types(n, trial_seeds(config.seed, n, trial).0)?;
                let ps = simple_network(&weighted_network(spec, &types), link_seed(config.seed, n, trial));
                let solver = WelfareSolver::new(&ps.a, alpha)?;
                let t = solver.welfare(&vec![beta; n])?;
                let hom = homogeneous_on(&solver, beta, c)?;
                let nh = network_heuristic_on(&solver, &ps.a, beta, c)?;
                let gh = graphon_heuristic_on(&solver, &psi, &types, beta, c)?;
                let t_opt = if n <= config.optimal_cap {
                    Some(optimal_intervention(&ps.a, alpha, beta, c)?.welfare)
                } else {
                    None
                };
                Ok(WelfareRow {
                    n,
                    trial,
                    t,
                    t_hom: hom.welfare,
                    t_nh: nh.welfare,
                    t_gh: gh.welfare,
                    t_opt,
                    gap: (nh.welfare - gh.welfare).abs(),
                    heuristic_distance: if c > 0.0 { heuristic_distance(&nh, &gh, c) } else { 0.0 },
                })
            })
            .collect();
        let mut ok = Vec::new();
        for (trial, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(row) => ok.push(row),
                Err(e) => failures.push(TrialFailure {
                    n,
                    trial,
                    error: e.to_string(),
                }),
            }
        }
        let col = |f: fn(&WelfareRow) -> f64| ok.iter().map(f).collect::<Vec<f64>>();
        let ratios = col(|r| r.t_gh / r.t_nh);
        let opts: Vec<f64> = ok.iter().filter_map(|r| r.t_opt).collect();
        stats.push(WelfareStats {
            n,
            trials: config.trials,
            failures: config.trials - ok.len(),
            mean_t: mean(&col(|r| r.t)),
            mean_t_hom: mean(&col(|r| r.t_hom)),
            mean_t_nh: mean(&col(|r| r.t_nh)),
            mean_t_gh: mean(&col(|r| r.t_gh)),
            mean_t_opt: if opts.is_empty() { None } else { Some(mean(&opts)) },
            gap: Percentiles::of(&col(|r| r.gap)),
            mean_ratio_gh_nh: mean(&ratios),
            ratio_gh_nh: Percentiles::of(&ratios),
            heuristic_distance: Percentiles::of(&col(|r| r.heuristic_distance)),
        });
        rows.extend(ok);
    }
    Ok(InterventionExperiment {
        config: config.clone(),
        alpha,
        beta,
        rows,
        stats,
        failures,
    })
}

/// Writes `N,trial,T,T_hom,T_nh,T_gh,T_opt,gap` rows; `T_opt` is empty when
/// the optimal solver was skipped.
pub fn write_welfare_csv<W: Write>(rows: &[WelfareRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["N", "trial", "T", "T_hom", "T_nh", "T_gh", "T_opt", "gap"])?;
    for r in rows {
        writer.serialize((r.n, r.trial, r.t, r.t_hom, r.t_nh, r.t_gh, r.t_opt, r.gap))?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// `sqrt(log(N/delta)/N)`.
pub fn sampling_rate(n: usize, delta: f64) -> f64 {
    let nf = n as f64;
    ((nf / delta).ln() / nf).sqrt()
}

/// Least-squares fit of `log(median)` against `log(sqrt(log(N/delta)/N))`.
/// A perfect fit, including the constant case, has `r2 = 1`.
pub fn rate_fit(ns: &[usize], medians: &[f64], delta: f64) -> Result<RateFit> {
    if ns.len() != medians.len() {
        return Err(GraphonError::DimensionMismatch {
            expected: ns.len(),
            actual: medians.len(),
        });
    }
    if ns.len() < 2 {
        return Err(GraphonError::Domain("need at least two population sizes".into()));
    }
    if let Some(m) = medians.iter().find(|&&m| !(m > 0.0)) {
        return Err(GraphonError::Domain(format!("median {m} is not positive")));
    }
    let x: Vec<f64> = ns.iter().map(|&n| sampling_rate(n, delta).ln()).collect();
    let y: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let (mx, my) = (mean(&x), mean(&y));
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(GraphonError::Domain("population sizes give identical rates".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| {
            let e = b - (intercept + slope * a);
            e * e
        })
        .sum();
    let r2 = if ss_tot <= 1e-24 * y.len() as f64 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { slope, intercept, r2 })
}

/// Scale `gamma` minimizing `sum (median - gamma * rate(N))^2`.
pub fn fit_scale(ns: &[usize], medians: &[f64], delta: f64) -> Result<f64> {
    if ns.len() != medians.len() || ns.is_empty() {
        return Err(GraphonError::DimensionMismatch {
            expected: ns.len(),
            actual: medians.len(),
        });
    }
    let rates: Vec<f64> = ns.iter().map(|&n| sampling_rate(n, delta)).collect();
    let num: f64 = rates.iter().zip(medians).map(|(r, m)| r * m).sum();
    let den: f64 = rates.iter().map(|r| r * r).sum();
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::LqPayoff;
    use crate::kernels::step_graphon_from_matrix;
    use nalgebra::DMatrix;

    fn lq(alpha: f64) -> Payoff {
        Payoff::Lq(LqPayoff::new(alpha, 1.0).unwrap())
    }

    #[test]
    fn percentiles_interpolate() {
        let p = Percentiles::of(&[4.0, 1.0, 3.0, 2.0, 5.0]);
        assert_eq!((p.p0, p.p25, p.p50, p.p75), (1.0, 2.0, 3.0, 4.0));
        assert!((p.p95 - 4.8).abs() < 1e-12);
        assert!(Percentiles::of(&[]).p50.is_nan());
        let even = Percentiles::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(even.p50, 2.5);
    }

    #[test]
    fn rate_fit_examples() {
        let ns = [50, 100, 200, 400, 800];
        let exact: Vec<f64> = ns.iter().map(|&n| 0.7 * sampling_rate(n, 0.05)).collect();
        let fit = rate_fit(&ns, &exact, 0.05).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 0.7f64.ln()).abs() < 1e-12);
        assert!((fit_scale(&ns, &exact, 0.05).unwrap() - 0.7).abs() < 1e-12);

        let flat = rate_fit(&ns, &[0.3; 5], 0.05).unwrap();
        assert!(flat.slope.abs() < 1e-12);
        assert_eq!(flat.r2, 1.0);
        assert!(rate_fit(&ns, &[0.3, 0.0, 0.1, 0.1, 0.1], 0.05).is_err());
    }

    #[test]
    fn midpoint_types_reproduce_step_graphon() {
        let n = 9;
        // Zero diagonal, as in every sampled network.
        let p = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { ((i * 7 + j * 7 + i * j) % 10) as f64 / 10.0 });
        let spec = step_graphon_from_matrix(&p).unwrap();
        let mut config = DistanceConfig::new(vec![n], 1, 3);
        config.m = n;
        config.types = TypeSampling::Midpoints;
        let exp = distance_experiment(&spec, &lq(0.8), &config).unwrap();
        assert!(exp.distances(n, GameKind::Weighted)[0] < 1e-10);
    }

    #[test]
    fn erdos_renyi_weighted_distances_vanish() {
        let spec = GraphonSpec::erdos_renyi(0.4).unwrap();
        let mut config = DistanceConfig::new(vec![100, 150], 4, 11);
        config.m = 400;
        let exp = distance_experiment(&spec, &lq(0.5), &config).unwrap();
        for n in [100, 150] {
            assert!(exp.distances(n, GameKind::Weighted).iter().all(|&d| d < 1e-2));
            assert!(exp.distances(n, GameKind::Simple).iter().all(|&d| d > 0.0));
        }
        assert!(exp.failures.is_empty());
    }

    #[test]
    fn resolution_guard() {
        let mut config = DistanceConfig::new(vec![100], 2, 1);
        config.m = 150;
        assert!(config.validate().is_err());
        config.types = TypeSampling::Midpoints;
        assert!(config.validate().is_ok());
        assert!(DistanceConfig::new(vec![], 2, 1).validate().is_err());
        let mut bad_delta = DistanceConfig::new(vec![10], 2, 1);
        bad_delta.delta = 0.5;
        assert!(bad_delta.validate().is_err());
    }

    #[test]
    fn csv_is_reproducible() {
        let spec = GraphonSpec::minmax();
        let mut config = DistanceConfig::new(vec![20, 40], 3, 7);
        config.m = 200;
        let render = || {
            let exp = distance_experiment(&spec, &lq(0.5), &config).unwrap();
            let mut out = Vec::new();
            write_distance_csv(&exp.rows, &mut out).unwrap();
            String::from_utf8(out).unwrap()
        };
        let first = render();
        assert!(first.starts_with("N,trial,kind,distance,bound,d_N_event\n20,0,w,"));
        assert_eq!(first.lines().count(), 1 + 2 * 3 * 2);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        assert_eq!(pool.install(render), first);
    }

    #[test]
    fn homogeneous_ratio_is_exact() {
        let spec = GraphonSpec::minmax();
        let mut config = InterventionConfig::new(vec![30, 60], 3, 0.01, 5);
        config.m = 100;
        let exp = intervention_experiment(&spec, 0.5, 1.0, &config).unwrap();
        for r in &exp.rows {
            assert!((r.t_hom / r.t - 1.21).abs() < 1e-9);
            let opt = r.t_opt.unwrap();
            assert!(opt >= r.t_nh.max(r.t_gh).max(r.t_hom) - 1e-9);
        }
        let mut out = Vec::new();
        write_welfare_csv(&exp.rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("N,trial,T,T_hom,T_nh,T_gh,T_opt,gap\n"));

        config.optimal_cap = 40;
        let capped = intervention_experiment(&spec, 0.5, 1.0, &config).unwrap();
        assert!(capped.rows.iter().all(|r| (r.n <= 40) == r.t_opt.is_some()));
        assert!(capped.stats[1].mean_t_opt.is_none());
        let mut out = Vec::new();
        write_welfare_csv(&capped.rows, &mut out).unwrap();
        let last = String::from_utf8(out).unwrap().lines().last().unwrap().to_string();
        assert_eq!(last.split(',').nth(6), Some(""));
    }

    #[test]
    fn interventions_reject_substitutes() {
        let config = InterventionConfig::new(vec![10], 1, 0.01, 1);
        assert!(intervention_experiment(&GraphonSpec::minmax(), -0.5, 1.0, &config).is_err());
    }
}
