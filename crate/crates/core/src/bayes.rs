//! Incomplete information: agents know only their own type and play the
//! graphon equilibrium `sbar`. The realized local aggregate
//! `zeta = (1/(N-1)) sum_{j != i} A_ij sbar(t_j)` concentrates around
//! `zbar(t_i) = int W(t_i, y) sbar(y) dy`, which bounds how much any type can
//! gain by deviating.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_operator_lq, LqPayoff};
use crate::error::{GraphonError, Result};
use crate::grid::{midpoints, GridFunction};
use crate::kernels::GraphonSpec;
use crate::linalg;
use crate::sampling::{derive_seed, rng_from_seed};
use crate::spectral::discretize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    pub epsilon_hat: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    #[serde(rename = "L_U")]
    pub l_u: f64,
    pub stderr: f64,
}

/// `zbar(x) = int W(x, y) sbar(y) dy` by midpoint quadrature on the grid of
/// `sbar`.
pub fn expected_aggregate(spec: &GraphonSpec, sbar: &GridFunction, x: f64) -> Result<f64> {
    let m = sbar.resolution();
    let mut total = 0.0;
    for (y, s) in midpoints(m).zip(sbar.values()) {
        total += spec.eval(x, y)? * s;
    }
    Ok(total / m as f64)
}

fn check_population(n: usize) -> Result<()> {
    if n < 2 {
        return Err(GraphonError::Domain(format!("N = {n} < 2")));
    }
    Ok(())
}

/// One draw of `zeta` for an agent of type `x` among `n - 1` others.
fn draw_zeta<R: Rng>(spec: &GraphonSpec, sbar: &GridFunction, x: f64, n: usize, rng: &mut R) -> f64 {
    let mut total = 0.0;
    for _ in 1..n {
        let t: f64 = rng.random();
        let p = spec.eval_unchecked(x, t);
        if rng.random::<f64>() < p {
            total += sbar.eval(t);
        }
    }
    total / (n - 1) as f64
}

/// `trials` draws of `zeta` for a fixed type `x`, each trial on its own
/// derived seed.
pub fn sample_local_aggregates(
    spec: &GraphonSpec,
    sbar: &GridFunction,
    x: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_population(n)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(GraphonError::Domain(format!("type {x} outside [0,1]")));
    }
    Ok((0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, &[n as u64, t as u64]));
            draw_zeta(spec, sbar, x, n, &mut rng)
        })
        .collect())
}

/// `trials` draws of `|zeta - zbar(t_i)|` with the agent's own type `t_i`
/// drawn uniformly.
pub fn sample_deviations(
    spec: &GraphonSpec,
    sbar: &GridFunction,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_population(n)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, &[n as u64, t as u64]));
            let x: f64 = rng.random();
            let zeta = draw_zeta(spec, sbar, x, n, &mut rng);
            Ok((zeta - expected_aggregate(spec, sbar, x)?).abs())
        })
        .collect()
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// `epsilon_hat = 2 L_U mean |zeta - zbar(t_i)|` with its standard error.
pub fn estimate_epsilon(
    spec: &GraphonSpec,
    sbar: &GridFunction,
    l_u: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<EpsilonEstimate> {
    if !(l_u >= 0.0) {
        return Err(GraphonError::Domain(format!("L_U = {l_u} must be nonnegative")));
    }
    if trials == 0 {
        return Err(GraphonError::Domain("need at least one trial".into()));
    }
    let deviations = sample_deviations(spec, sbar, n, trials, seed)?;
    let (mean, stderr) = mean_and_stderr(&deviations);
    Ok(EpsilonEstimate {
        epsilon_hat: 2.0 * l_u * mean,
        n,
        trials,
        l_u,
        stderr: 2.0 * l_u * stderr,
    })
}

/// Graphon equilibrium of an LQ game at resolution `m` together with
/// `L_U = |alpha| s_max`.
pub fn lq_equilibrium_and_lipschitz(spec: &GraphonSpec, payoff: &LqPayoff, m: usize) -> Result<(GridFunction, f64)> {
    let op = discretize(spec, m)?;
    let lambda = linalg::spectral_radius(op.kernel(), op.weight())?;
    let report = solve_operator_lq(&op, payoff)?;
    Ok((report.profile, payoff.alpha.abs() * payoff.default_s_max(lambda)))
}

/// `estimate_epsilon` for each `N` in `ns` on the LQ graphon equilibrium.
pub fn estimate_epsilon_lq(
    spec: &GraphonSpec,
    payoff: &LqPayoff,
    m: usize,
    ns: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<EpsilonEstimate>> {
    let (sbar, l_u) = lq_equilibrium_and_lipschitz(spec, payoff, m)?;
    ns.iter()
        .map(|&n| estimate_epsilon(spec, &sbar, l_u, n, trials, seed))
        .collect()
}

/// Writes `N,epsilon_hat,stderr` rows.
pub fn write_epsilon_csv<W: Write>(estimates: &[EpsilonEstimate], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["N", "epsilon_hat", "stderr"])?;
    for e in estimates {
        writer.serialize((e.n, e.epsilon_hat, e.stderr))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_aggregate_examples() {
        let er = GraphonSpec::erdos_renyi(0.3).unwrap();
        let c = GridFunction::constant(2.0, 50);
        assert!((expected_aggregate(&er, &c, 0.4).unwrap() - 0.6).abs() < 1e-14);
        let zero = GridFunction::constant(0.0, 50);
        assert_eq!(expected_aggregate(&GraphonSpec::minmax(), &zero, 0.7).unwrap(), 0.0);
        assert!(expected_aggregate(&er, &c, 1.5).is_err());
    }

    #[test]
    fn minmax_aggregate_of_constant_matches_degree() {
        // int min(x,y)(1-max(x,y)) dy = x(1-x)/2.
        let one = GridFunction::constant(1.0, 2000);
        for x in [0.1, 0.5, 0.83] {
            let z = expected_aggregate(&GraphonSpec::minmax(), &one, x).unwrap();
            assert!((z - x * (1.0 - x) / 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn epsilon_trivial_cases() {
        let zero = GridFunction::constant(0.0, 20);
        let e = estimate_epsilon(&GraphonSpec::minmax(), &zero, 3.0, 50, 100, 1).unwrap();
        assert_eq!(e.epsilon_hat, 0.0);

        let full = GraphonSpec::erdos_renyi(1.0).unwrap();
        let c = GridFunction::constant(1.7, 20);
        let e = estimate_epsilon(&full, &c, 3.0, 50, 100, 1).unwrap();
        assert!(e.epsilon_hat < 1e-12);
        assert!(estimate_epsilon(&full, &c, 3.0, 1, 100, 1).is_err());
    }

    #[test]
    fn local_aggregate_is_unbiased() {
        let spec = GraphonSpec::minmax();
        let sbar = GridFunction::from_midpoints(400, |y| 1.0 + y);
        let x = 0.35;
        let draws = sample_local_aggregates(&spec, &sbar, x, 80, 8000, 5).unwrap();
        let (mean, se) = mean_and_stderr(&draws);
        let target = expected_aggregate(&spec, &sbar, x).unwrap();
        assert!((mean - target).abs() < 3.0 * se, "{mean} vs {target} (se {se})");
    }

    #[test]
    fn deviations_shrink_and_runs_repeat() {
        let spec = GraphonSpec::minmax();
        let sbar = GridFunction::constant(1.0, 200);
        let small = estimate_epsilon(&spec, &sbar, 1.0, 30, 1500, 3).unwrap();
        let large = estimate_epsilon(&spec, &sbar, 1.0, 600, 1500, 3).unwrap();
        assert!(large.epsilon_hat < small.epsilon_hat);
        let again = estimate_epsilon(&spec, &sbar, 1.0, 30, 1500, 3).unwrap();
        assert_eq!(small, again);
    }

    #[test]
    fn csv_and_json() {
        let e = EpsilonEstimate {
            epsilon_hat: 0.5,
            n: 100,
            trials: 10,
            l_u: 2.0,
            stderr: 0.25,
        };
        let mut out = Vec::new();
        write_epsilon_csv(&[e], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "N,epsilon_hat,stderr\n100,0.5,0.25\n");
        let json = serde_json::to_value(e).unwrap();
        assert_eq!(json["N"], 100);
        assert_eq!(json["L_U"], 2.0);
    }
}
