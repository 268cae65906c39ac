//! Convergence diagnostics: autocorrelation, the potential scale reduction
//! factor, and distances to exact answers.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::estimators::rb_joint_pmf;
use crate::model::{CentralRanks, RankModel};
use crate::oracle::ExactPosteriorPi;
use crate::permutation::PermIndex;
use crate::samplers::{run_chains, ChainConfig, ChainInit, Variant};

/// Sample autocorrelations at lags `0..=max_lag` (biased normalisation).
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag {
        return Err(Error::SeriesTooShort {
            len: n,
            batches: max_lag + 1,
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = dev.iter().map(|d| d * d).sum();
    if c0 == 0.0 || !c0.is_finite() {
        return Err(Error::ConstantSeries);
    }
    Ok((0..=max_lag)
        .map(|lag| dev[..n - lag].iter().zip(&dev[lag..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

/// Gelman–Rubin statistic `sqrt(V / W)`: `W` is the mean within-chain
/// variance and `V` the variance of the pooled draws (both with divisor `n`,
/// no degrees-of-freedom correction).
pub fn psrf<S: AsRef<[f64]>>(chains: &[S]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::InvalidArgument("PSRF needs at least two chains".into()));
    }
    let n = chains[0].as_ref().len();
    if n < 10 {
        return Err(Error::SeriesTooShort { len: n, batches: 10 });
    }
    if chains.iter().any(|c| c.as_ref().len() != n) {
        return Err(Error::Dimension("PSRF chains must have equal length".into()));
    }
    let means: Vec<f64> = chains
        .iter()
        .map(|c| c.as_ref().iter().sum::<f64>() / n as f64)
        .collect();
    let within: f64 = chains
        .iter()
        .zip(&means)
        .map(|(c, m)| c.as_ref().iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64)
        .sum::<f64>()
        / chains.len() as f64;
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    let between = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / means.len() as f64;
    let pooled = within + between;
    if within == 0.0 {
        return if pooled == 0.0 {
            Err(Error::ConstantSeries)
        } else {
            Ok(f64::INFINITY)
        };
    }
    Ok((pooled / within).sqrt())
}

/// Half the L1 distance between two pmfs on the same support.
pub fn tv_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "pmfs over {} and {} states",
            a.len(),
            b.len()
        )));
    }
    Ok((0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()).min(1.0))
}

/// Kolmogorov–Smirnov statistic of a sample against an exact CDF.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Distance {
    pub value: f64,
    /// What the sample was compared against.
    pub reference: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticReport {
    pub acf: Vec<f64>,
    pub psrf: Option<f64>,
    pub distance: Option<Distance>,
    pub trace_window: Option<Vec<f64>>,
}

impl DiagnosticReport {
    /// `key = value` lines; ACF values are listed per lag.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(p) = self.psrf {
            let _ = writeln!(out, "psrf = {p:?}");
        }
        if let Some(d) = &self.distance {
            let _ = writeln!(out, "distance = {:?}", d.value);
            let _ = writeln!(out, "distance_reference = {:?}", d.reference);
        }
        for (lag, v) in self.acf.iter().enumerate() {
            let _ = writeln!(out, "acf.{lag} = {v:?}");
        }
        if let Some(w) = &self.trace_window {
            let _ = writeln!(out, "trace_window_len = {}", w.len());
        }
        out
    }
}

/// Settings for the DA-failure reproduction: a DA chain trapped in a minor
/// mode looks healthy by autocorrelation and PSRF while its estimates are
/// wrong.
#[derive(Clone, Debug)]
pub struct DaFailureConfig {
    pub iterations: u64,
    pub seed: u64,
    pub trapped_start: CentralRanks,
    pub other_start: CentralRanks,
    pub max_lag: usize,
    /// `θ` component monitored by ACF and PSRF.
    pub component: PermIndex,
}

#[derive(Clone, Debug)]
pub struct DaFailureOutcome {
    pub tv_to_exact: f64,
    pub acf: Vec<f64>,
    /// `max |acf|` over lags `3..=max_lag`.
    pub max_acf_from_lag3: f64,
    pub psrf_one_mode: f64,
    pub psrf_both_modes: f64,
}

pub fn da_failure_experiment(
    model: &RankModel,
    exact: &ExactPosteriorPi,
    cfg: &DaFailureConfig,
) -> Result<DaFailureOutcome> {
    let chain = ChainConfig::new(cfg.iterations, Variant::Gibbs, cfg.seed);
    let trapped = ChainInit::Ranks(cfg.trapped_start.clone());
    let other = ChainInit::Ranks(cfg.other_start.clone());
    let same = run_chains(&chain, model, &vec![trapped.clone(); 4])?;
    let mixed = run_chains(
        &chain.clone().stream(4),
        model,
        &[trapped.clone(), trapped, other.clone(), other],
    )?;
    let lead = &same[0];
    let pmf = rb_joint_pmf(lead, model, lead.len())?;
    let tv_to_exact = tv_distance(&pmf, exact.probs())?;
    let series = lead.theta_series(cfg.component);
    let acf = acf(&series, cfg.max_lag)?;
    let max_acf_from_lag3 = acf.iter().skip(3).map(|v| v.abs()).fold(0.0, f64::max);
    let one: Vec<Vec<f64>> = same.iter().map(|t| t.theta_series(cfg.component)).collect();
    let both: Vec<Vec<f64>> = mixed.iter().map(|t| t.theta_series(cfg.component)).collect();
    Ok(DaFailureOutcome {
        tv_to_exact,
        acf,
        max_acf_from_lag3,
        psrf_one_mode: psrf(&one)?,
        psrf_both_modes: psrf(&both)?,
    })
}
