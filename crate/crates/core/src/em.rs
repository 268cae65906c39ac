//! Monte Carlo EM for the Dirichlet precision `λ` (with `a_k = e^{λ|ζ_k|}`)
//! and the observed-information standard error of `λ̂`.

use crate::error::{Error, Result};
use crate::model::{CentralRanks, HyperParams, RankModel};
use crate::permutation::GroupTables;
use crate::samplers::{run_chains, ChainConfig, ChainInit, ChainTrace};
use crate::special::{digamma, ln_gamma, trigamma};

/// `θ` components below this are floored before taking logs.
pub const LOG_THETA_FLOOR: f64 = 1e-300;
const GRID_POINTS: usize = 50;
const GOLDEN_TOL: f64 = 1e-6;
// keeps e^{λp} and its sums finite
const EXPONENT_CAP: f64 = 650.0;

/// `|ζ_k|`, the cycle counts.
fn cycle_counts(tables: &GroupTables) -> Vec<f64> {
    tables.indices().map(|k| tables.cycles(k) as f64).collect()
}

/// `Σ_i a_i E(ln θ_i) − Σ_i ln Γ(a_i) + ln Γ(Σ_i a_i)` at `a_i = e^{λ|ζ_i|}`.
pub fn q_objective(lambda: f64, elogtheta: &[f64], tables: &GroupTables) -> Result<f64> {
    if elogtheta.len() != tables.size() {
        return Err(Error::Dimension("need one E(ln θ) per permutation".into()));
    }
    if elogtheta.iter().any(|&e| !(e <= 0.0)) {
        return Err(Error::InvalidArgument(
            "expected log-probabilities must be nonpositive".into(),
        ));
    }
    Ok(objective(lambda, elogtheta, &cycle_counts(tables)))
}

fn objective(lambda: f64, elog: &[f64], dist: &[f64]) -> f64 {
    let mut a0 = 0.0;
    let mut value = 0.0;
    for (&e, &d) in elog.iter().zip(dist) {
        let a = (lambda * d).exp();
        a0 += a;
        value += a * e - ln_gamma(a);
    }
    value + ln_gamma(a0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MStep {
    pub lambda: f64,
    /// Argmax of the pre-scan grid.
    pub grid_lambda: f64,
    pub grid_step: f64,
    /// The maximum sits at the edge of the (expanded) search interval.
    pub boundary: bool,
}

/// Maximises [`q_objective`] over `interval`, widening the upper end while
/// the grid maximum sits on it.
pub fn m_step(elogtheta: &[f64], tables: &GroupTables, interval: (f64, f64)) -> Result<MStep> {
    let (mut lo, mut hi) = interval;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "search interval [{lo}, {hi}] must satisfy 0 <= lo < hi"
        )));
    }
    if tables.items() < 2 {
        return Err(Error::DegenerateObjective);
    }
    q_objective(lo, elogtheta, tables)?;
    let dist = cycle_counts(tables);
    let cap = EXPONENT_CAP / tables.items() as f64;
    hi = hi.min(cap);
    if lo >= hi {
        lo = hi / 2.0;
    }
    let f = |l: f64| objective(l, elogtheta, &dist);
    loop {
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;
        let values: Vec<f64> = (0..GRID_POINTS).map(|i| f(lo + step * i as f64)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("M-step objective".into()));
        }
        let best = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("non-empty grid");
        if best == GRID_POINTS - 1 && hi < cap {
            let width = hi - lo;
            lo = hi - step;
            hi = (hi + 2.0 * width).min(cap);
            continue;
        }
        if best == 0 && lo > 0.0 {
            let width = hi - lo;
            hi = lo + step;
            lo = (lo - 2.0 * width).max(0.0);
            continue;
        }
        let grid_lambda = lo + step * best as f64;
        let a = (grid_lambda - step).max(lo);
        let b = (grid_lambda + step).min(hi);
        let lambda = golden_max(&f, a, b);
        let boundary = (best == 0 && lo == 0.0) || (best == GRID_POINTS - 1 && hi >= cap);
        return Ok(MStep {
            lambda,
            grid_lambda,
            grid_step: step,
            boundary,
        });
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // endpoints may beat the interior on a monotone bracket
    [a, mid, b]
        .into_iter()
        .max_by(|x, y| f(*x).total_cmp(&f(*y)))
        .expect("three candidates")
}

/// `(1/M) Σ_m ln θ̃_i^{(m)}`, with `θ` floored at [`LOG_THETA_FLOOR`].
pub fn elogtheta(traces: &[ChainTrace]) -> Result<Vec<f64>> {
    let size = traces.first().ok_or(Error::EmptyTrace)?.size;
    let mut sums = vec![0.0; size];
    let mut n = 0usize;
    for t in traces {
        for th in t.thetas() {
            for (s, &v) in sums.iter_mut().zip(th) {
                *s += v.max(LOG_THETA_FLOOR).ln();
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyTrace);
    }
    Ok(sums.into_iter().map(|s| s / n as f64).collect())
}

/// `I(λ | y) = −d²/dλ² ln c_λ(y)` from `E(ln θ_i | y)` and
/// `Var(Σ_i |ζ_i| a_i ln θ_i | y)`.
pub fn information_from_moments(lambda: f64, elog: &[f64], weighted_var: f64, tables: &GroupTables) -> Result<f64> {
    if elog.len() != tables.size() {
        return Err(Error::Dimension("need one E(ln θ) per permutation".into()));
    }
    let dist = cycle_counts(tables);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut a0 = 0.0;
    let mut own = 0.0;
    for (&e, &c) in elog.iter().zip(&dist) {
        let a = (lambda * c).exp();
        a0 += a;
        s1 += c * a;
        s2 += c * c * a;
        own += c * c * a * (e - digamma(a) - a * trigamma(a));
    }
    let second = own + trigamma(a0) * s1 * s1 + digamma(a0) * s2 + weighted_var;
    let info = -second;
    if !info.is_finite() {
        return Err(Error::NonFinite("observed information".into()));
    }
    Ok(info)
}

/// The weights `|ζ_i| e^{λ|ζ_i|}` of the variance term.
pub fn score_weights(lambda: f64, tables: &GroupTables) -> Vec<f64> {
    cycle_counts(tables).into_iter().map(|c| c * (lambda * c).exp()).collect()
}

/// `I(λ̂ | y)` with `E` and `Var` replaced by averages over a trace drawn at `λ̂`.
pub fn observed_information(lambda: f64, traces: &[ChainTrace], tables: &GroupTables) -> Result<f64> {
    let elog = elogtheta(traces)?;
    let w = score_weights(lambda, tables);
    let values: Vec<f64> = traces
        .iter()
        .flat_map(|t| t.thetas())
        .map(|th| th.iter().zip(&w).map(|(&v, &wi)| wi * v.max(LOG_THETA_FLOOR).ln()).sum())
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    information_from_moments(lambda, &elog, var, tables)
}

/// `I(λ̂ | y)^{-1/2}`.
pub fn lambda_se(lambda: f64, traces: &[ChainTrace], tables: &GroupTables) -> Result<f64> {
    let info = observed_information(lambda, traces, tables)?;
    if info <= 0.0 {
        return Err(Error::InformationNotPositive(info));
    }
    Ok(info.powf(-0.5))
}

#[derive(Clone, Debug)]
pub struct EmConfig {
    pub lambda0: f64,
    /// Per-iteration chain; its variant should be a sandwich variant.
    pub inner_chain: ChainConfig,
    /// Parallel inner chains whose averages are pooled.
    pub chains: usize,
    pub max_iters: usize,
    pub plateau_window: usize,
    pub plateau_range: f64,
    pub final_chain: ChainConfig,
    pub search_interval: (f64, f64),
}

impl EmConfig {
    pub fn new(lambda0: f64, inner_chain: ChainConfig, final_chain: ChainConfig) -> Self {
        EmConfig {
            lambda0,
            inner_chain,
            chains: 1,
            max_iters: 50,
            plateau_window: 5,
            plateau_range: 0.05,
            final_chain,
            search_interval: (0.0, 10.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.search_interval;
        if !(lo >= 0.0 && hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "search interval [{lo}, {hi}] must satisfy 0 <= lo < hi"
            )));
        }
        if self.plateau_window < 3 {
            return Err(Error::InvalidArgument("plateau window must be at least 3".into()));
        }
        if !(self.lambda0.is_finite() && self.lambda0 >= 0.0) {
            return Err(Error::InvalidArgument("lambda0 must be finite and nonnegative".into()));
        }
        if self.chains == 0 || self.max_iters == 0 {
            return Err(Error::InvalidArgument("chains and max_iters must be positive".into()));
        }
        self.inner_chain.validate()?;
        self.final_chain.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub lambda: f64,
    pub draws: u64,
}

#[derive(Clone, Debug)]
pub struct EmResult {
    pub lambda_hat: f64,
    /// `None` when the information came out nonpositive.
    pub se: Option<f64>,
    pub information: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    pub elogtheta: Vec<f64>,
    pub converged: bool,
    pub boundary: bool,
}

fn run_at(
    model: &RankModel,
    lambda: f64,
    chain: &ChainConfig,
    chains: usize,
    stream: u64,
    start: &Option<CentralRanks>,
) -> Result<Vec<ChainTrace>> {
    let hyper = HyperParams::from_lambda(lambda, &model.tables)?;
    let m = model.with_hyper(hyper)?;
    let init = match start {
        Some(pi) => ChainInit::Ranks(pi.clone()),
        None => ChainInit::Prior,
    };
    let cfg = chain.clone().stream(stream);
    run_chains(&cfg, &m, &vec![init; chains])
}

fn last_pi(traces: &[ChainTrace]) -> Option<CentralRanks> {
    traces.first().and_then(|t| t.records.last()).map(|r| r.pi.clone())
}

/// Alternates chain-based E-steps with [`m_step`] until the last
/// `plateau_window` iterates span less than `plateau_range`, then takes one
/// step with the final chain and evaluates the standard error at `λ̂`.
pub fn em_run(config: &EmConfig, model: &RankModel) -> Result<EmResult> {
    config.validate()?;
    let chains = config.chains as u64;
    let mut lambda = config.lambda0;
    let mut trajectory = vec![TrajectoryPoint {
        iteration: 0,
        lambda,
        draws: 0,
    }];
    let mut start = None;
    let mut converged = false;
    for it in 1..=config.max_iters {
        let traces = run_at(model, lambda, &config.inner_chain, config.chains, it as u64 * chains, &start)?;
        start = last_pi(&traces);
        let elog = elogtheta(&traces)?;
        lambda = m_step(&elog, &model.tables, config.search_interval)?.lambda;
        trajectory.push(TrajectoryPoint {
            iteration: it,
            lambda,
            draws: config.inner_chain.retained() * chains,
        });
        if trajectory.len() >= config.plateau_window {
            let tail = &trajectory[trajectory.len() - config.plateau_window..];
            let (mn, mx) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.lambda), b.max(p.lambda))
            });
            if mx - mn < config.plateau_range {
                converged = true;
                break;
            }
        }
    }
    let base = (config.max_iters as u64 + 1) * chains;
    let traces = run_at(model, lambda, &config.final_chain, config.chains, base, &start)?;
    let elog = elogtheta(&traces)?;
    let step = m_step(&elog, &model.tables, config.search_interval)?;
    let lambda_hat = step.lambda;
    trajectory.push(TrajectoryPoint {
        iteration: trajectory.len(),
        lambda: lambda_hat,
        draws: config.final_chain.retained() * chains,
    });
    let at_hat = run_at(model, lambda_hat, &config.final_chain, config.chains, base + chains, &last_pi(&traces))?;
    let information = observed_information(lambda_hat, &at_hat, &model.tables)?;
    let se = (information > 0.0).then(|| information.powf(-0.5));
    Ok(EmResult {
        lambda_hat,
        se,
        information,
        trajectory,
        elogtheta: elogtheta(&at_hat)?,
        converged,
        boundary: step.boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PriorPi, RankCounts, ThetaVector};
    use crate::oracle::{exact_log_theta_moments, exact_posterior_pi, log_marginal_likelihood_at, DEFAULT_STATE_CAP};
    use crate::rng::{dirichlet, stream_rng};
    use crate::samplers::{TraceRecord, Variant};
    use crate::special::{EULER_GAMMA, PI_SQUARED_OVER_SIX};
    use std::sync::Arc;

    fn tables(p: usize) -> Arc<GroupTables> {
        Arc::new(GroupTables::build(p).unwrap())
    }

    #[test]
    fn special_function_anchors() {
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-14);
        assert!((trigamma(1.0) - PI_SQUARED_OVER_SIX).abs() < 1e-14);
    }

    #[test]
    fn objective_at_zero_for_two_items() {
        let t = tables(2);
        let v = q_objective(0.0, &[-0.3, -1.7], &t).unwrap();
        assert!((v - (-0.3 - 1.7)).abs() < 1e-14);
        assert!(q_objective(0.0, &[0.1, -1.0], &t).is_err());
    }

    #[test]
    fn objective_matches_dirichlet_log_density() {
        // Q(λ) − Σ E ln θ_i is the average Dirichlet log-density of the draws
        let t = tables(3);
        let mut rng = stream_rng(8, 0);
        let draws: Vec<Vec<f64>> = (0..200).map(|_| dirichlet(&[3.0, 1.0, 2.0, 0.5, 0.7, 1.2], &mut rng)).collect();
        let elog: Vec<f64> = (0..6)
            .map(|i| draws.iter().map(|d| d[i].ln()).sum::<f64>() / draws.len() as f64)
            .collect();
        for &lambda in &[0.0, 0.3, 1.1, 2.5] {
            let a: Vec<f64> = t
                .indices()
                .map(|k| (lambda * t.cycles(k) as f64).exp())
                .collect();
            let a0: f64 = a.iter().sum();
            let avg_log_density = draws
                .iter()
                .map(|d| {
                    ln_gamma(a0) - a.iter().map(|&v| ln_gamma(v)).sum::<f64>()
                        + d.iter().zip(&a).map(|(x, ai)| (ai - 1.0) * x.ln()).sum::<f64>()
                })
                .sum::<f64>()
                / draws.len() as f64;
            let q = q_objective(lambda, &elog, &t).unwrap() - elog.iter().sum::<f64>();
            assert!((q - avg_log_density).abs() < 1e-10);
        }
    }

    fn exact_elog(lambda: f64, t: &GroupTables) -> Vec<f64> {
        let h = HyperParams::from_lambda(lambda, t).unwrap();
        h.weights().iter().map(|&a| digamma(a) - digamma(h.total())).collect()
    }

    #[test]
    fn m_step_prefers_larger_lambda_for_concentrated_identity() {
        let t = tables(2);
        // both of these are maximised on the λ = 0 edge when |ζ| counts cycles
        let literal = m_step(&[-0.01, -6.0], &t, (0.0, 10.0)).unwrap();
        let flat = m_step(&[-2.0, -2.0], &t, (0.0, 10.0)).unwrap();
        assert!(literal.boundary && flat.boundary);
        assert!(literal.lambda < 1e-5 && flat.lambda < 1e-5);
        // an attainable vector that favours θ_1 strongly
        let sharp = m_step(&[-0.0025, -6.0], &t, (0.0, 10.0)).unwrap();
        assert!(sharp.lambda > flat.lambda + 5.0, "{}", sharp.lambda);
        assert!((sharp.lambda - sharp.grid_lambda).abs() <= 2.0 * sharp.grid_step);
    }

    #[test]
    fn m_step_recovers_the_generating_lambda() {
        // exact E(ln θ) under Dirichlet(a(λ)) makes λ the maximiser
        let t = tables(3);
        for &lambda in &[0.2, 0.69, 1.7] {
            let s = m_step(&exact_elog(lambda, &t), &t, (0.0, 10.0)).unwrap();
            assert!((s.lambda - lambda).abs() < 1e-5, "{} vs {lambda}", s.lambda);
            assert!(!s.boundary);
        }
    }

    #[test]
    fn m_step_is_invariant_within_cycle_classes() {
        let t = tables(3);
        // indices of transpositions share |ζ| = 1, 3-cycles share |ζ| = 2
        let base = [-0.2, -2.0, -2.5, -3.1, -3.3, -2.2];
        let mut shuffled = base;
        let ones: Vec<usize> = t.indices().filter(|&k| t.cycles(k) == 2).map(|k| k.get() - 1).collect();
        shuffled.swap(ones[0], ones[2]);
        let a = m_step(&base, &t, (0.0, 10.0)).unwrap().lambda;
        let b = m_step(&shuffled, &t, (0.0, 10.0)).unwrap().lambda;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn m_step_expands_and_flags() {
        let t = tables(2);
        let elog = exact_elog(3.0, &t);
        let s = m_step(&elog, &t, (1.5, 2.5)).unwrap();
        assert!((s.lambda - 3.0).abs() < 1e-5, "{}", s.lambda);
        assert!(!s.boundary);
        // the objective also has a local maximum on the λ = 0 edge; a bracket
        // that excludes the interior mode finds that one and says so
        let edge = m_step(&elog, &t, (0.0, 1.0)).unwrap();
        assert!(edge.boundary && edge.lambda < 1e-5);
        assert!((m_step(&elog, &t, (0.0, 10.0)).unwrap().lambda - 3.0).abs() < 1e-5);
        let at_zero = m_step(&[-3.0, -0.05], &t, (0.0, 5.0)).unwrap();
        assert!(at_zero.boundary);
        assert!(at_zero.lambda < 1e-5);
        assert!(matches!(m_step(&[0.0], &tables(1), (0.0, 1.0)), Err(Error::DegenerateObjective)));
        assert!(m_step(&[-1.0, -1.0], &t, (2.0, 1.0)).is_err());
    }

    fn one_record_trace(theta: Vec<f64>, copies: usize) -> ChainTrace {
        let rec = TraceRecord {
            iteration: 1,
            theta,
            pi: CentralRanks::from_indices(&[1]).unwrap(),
            accepted: false,
        };
        ChainTrace {
            variant: Variant::SandwichUniform,
            size: rec.theta.len(),
            categories: 1,
            records: vec![rec; copies],
            accepted_moves: 0,
            steps: copies as u64,
        }
    }

    #[test]
    fn repeated_draw_has_no_variance_term() {
        let t = tables(2);
        let theta = vec![0.7, 0.3];
        let trace = one_record_trace(theta.clone(), 50);
        let elog: Vec<f64> = theta.iter().map(|v| v.ln()).collect();
        let direct = information_from_moments(0.4, &elog, 0.0, &t).unwrap();
        let from_trace = observed_information(0.4, std::slice::from_ref(&trace), &t).unwrap();
        assert!((direct - from_trace).abs() < 1e-12);
    }

    fn finite_difference_information(t: &Arc<GroupTables>, counts: &RankCounts, prior: &PriorPi, lambda: f64) -> f64 {
        let h = 1e-3;
        let f = |l| log_marginal_likelihood_at(t, counts, prior, l).unwrap();
        -(f(lambda + h) - 2.0 * f(lambda) + f(lambda - h)) / (h * h)
    }

    #[test]
    fn information_matches_curvature_of_marginal_likelihood() {
        let t = tables(2);
        let counts = RankCounts::new(2, vec![vec![30, 12]]).unwrap();
        let prior = PriorPi::uniform(1, 2);
        for &lambda in &[0.3, 0.69, 1.2] {
            let model = RankModel::new(t.clone(), counts.clone(), HyperParams::from_lambda(lambda, &t).unwrap(), prior.clone())
                .unwrap();
            let post = exact_posterior_pi(&model, DEFAULT_STATE_CAP).unwrap();
            let moments = exact_log_theta_moments(&model, &post, &score_weights(lambda, &t)).unwrap();
            let info = information_from_moments(lambda, &moments.mean, moments.weighted_var, &t).unwrap();
            let fd = finite_difference_information(&t, &counts, &prior, lambda);
            assert!(((info - fd) / fd).abs() < 5e-4, "λ={lambda}: {info} vs {fd}");
        }
    }

    #[test]
    fn information_matches_curvature_for_three_items() {
        let t = tables(3);
        let counts = RankCounts::new(3, vec![vec![9, 3, 2, 1, 0, 2], vec![1, 6, 0, 2, 1, 0]]).unwrap();
        let prior = PriorPi::uniform(2, 6);
        let lambda = 0.8;
        let model = RankModel::new(t.clone(), counts.clone(), HyperParams::from_lambda(lambda, &t).unwrap(), prior.clone())
            .unwrap();
        let post = exact_posterior_pi(&model, DEFAULT_STATE_CAP).unwrap();
        let moments = exact_log_theta_moments(&model, &post, &score_weights(lambda, &t)).unwrap();
        let info = information_from_moments(lambda, &moments.mean, moments.weighted_var, &t).unwrap();
        let fd = finite_difference_information(&t, &counts, &prior, lambda);
        assert!(((info - fd) / fd).abs() < 5e-4, "{info} vs {fd}");
    }

    #[test]
    fn trace_information_tracks_exact_value() {
        let t = tables(2);
        let counts = RankCounts::new(2, vec![vec![30, 12]]).unwrap();
        let lambda = 0.69;
        let model = RankModel::with_uniform_prior(t.clone(), counts, HyperParams::from_lambda(lambda, &t).unwrap()).unwrap();
        let post = exact_posterior_pi(&model, DEFAULT_STATE_CAP).unwrap();
        let moments = exact_log_theta_moments(&model, &post, &score_weights(lambda, &t)).unwrap();
        let exact = information_from_moments(lambda, &moments.mean, moments.weighted_var, &t).unwrap();
        let traces = run_chains(
            &ChainConfig::new(200_000, Variant::SandwichUniform, 5),
            &model,
            &[ChainInit::Prior],
        )
        .unwrap();
        let mc = observed_information(lambda, &traces, &t).unwrap();
        assert!(((mc - exact) / exact).abs() < 0.05, "{mc} vs {exact}");
    }

    #[test]
    fn no_data_keeps_lambda_fixed() {
        let t = tables(3);
        let lambda0 = 0.9;
        let h = HyperParams::from_lambda(lambda0, &t).unwrap();
        let model = RankModel::with_uniform_prior(t.clone(), RankCounts::zeros(3, 1).unwrap(), h.clone()).unwrap();
        let post = exact_posterior_pi(&model, DEFAULT_STATE_CAP).unwrap();
        let moments = exact_log_theta_moments(&model, &post, &vec![0.0; 6]).unwrap();
        let s = m_step(&moments.mean, &t, (0.0, 10.0)).unwrap();
        assert!((s.lambda - lambda0).abs() < 1e-5);
        // the marginal likelihood is flat: zero information
        let info = information_from_moments(lambda0, &moments.mean, exact_log_theta_moments(&model, &post, &score_weights(lambda0, &t)).unwrap().weighted_var, &t).unwrap();
        assert!(info.abs() < 1e-9, "{info}");
    }

    #[test]
    fn config_validation() {
        let c = ChainConfig::new(100, Variant::SandwichUniform, 1);
        let mut cfg = EmConfig::new(0.5, c.clone(), c);
        assert!(cfg.validate().is_ok());
        cfg.plateau_window = 2;
        assert!(cfg.validate().is_err());
        cfg.plateau_window = 5;
        cfg.search_interval = (1.0, 1.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn em_recovers_lambda_on_simulated_data() {
        let t = tables(2);
        let theta = ThetaVector::mean_of(&HyperParams::from_lambda(2f64.ln(), &t).unwrap());
        let mut rng = stream_rng(21, 0);
        let truth = CentralRanks::from_indices(&[1, 2]).unwrap();
        let counts = crate::model::simulate_data(&truth, &theta, &[500, 500], &t, &mut rng).unwrap();
        let model = RankModel::with_uniform_prior(t.clone(), counts, HyperParams::from_lambda(1.0, &t).unwrap()).unwrap();
        let cfg = EmConfig::new(
            1.5,
            ChainConfig::new(2_000, Variant::SandwichUniform, 3),
            ChainConfig::new(20_000, Variant::SandwichUniform, 3),
        );
        let res = em_run(&cfg, &model).unwrap();
        let se = res.se.unwrap();
        assert!(res.trajectory.iter().all(|p| p.lambda.is_finite()));
        assert!((res.lambda_hat - 2f64.ln()).abs() < 3.0 * se, "{} ± {se}", res.lambda_hat);
    }
}
