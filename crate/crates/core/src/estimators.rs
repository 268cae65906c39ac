//! Rao-Blackwellised estimates of central-rank probabilities with batch-means
//! standard errors.
//!
//! Every estimator averages exact conditional probabilities `P(· | θ̃, y)` over
//! the retained `θ` draws instead of counting sampled `π` values.

use crate::error::{Error, Result};
use crate::model::{CentralRanks, RankModel};
use crate::oracle::state_index;
use crate::permutation::PermIndex;
use crate::samplers::{ChainTrace, Sampler};

pub const DEFAULT_BATCHES: usize = 30;

const MAX_PMF_STATES: usize = 1 << 16;

/// Per-category subsets `A_j ⊆ S_p` as boolean masks of length `p!`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankEvent {
    masks: Vec<Vec<bool>>,
}

impl RankEvent {
    /// Every mask needs at least one `true` entry.
    pub fn new(masks: Vec<Vec<bool>>) -> Result<Self> {
        let size = masks.first().map(Vec::len).unwrap_or(0);
        if size == 0 {
            return Err(Error::InvalidArgument("event needs at least one category".into()));
        }
        for (j, m) in masks.iter().enumerate() {
            if m.len() != size {
                return Err(Error::Dimension(format!("mask {j} has the wrong length")));
            }
            if !m.iter().any(|&b| b) {
                return Err(Error::InvalidArgument(format!("mask {j} is empty")));
            }
        }
        Ok(RankEvent { masks })
    }

    /// No constraint on any category.
    pub fn all(categories: usize, size: usize) -> Self {
        RankEvent {
            masks: vec![vec![true; size]; categories],
        }
    }

    /// `{π_j = ranks_j ∀ j}`.
    pub fn singleton(ranks: &CentralRanks, size: usize) -> Self {
        let masks = ranks
            .ranks()
            .iter()
            .map(|k| {
                let mut m = vec![false; size];
                m[k.zero_based()] = true;
                m
            })
            .collect();
        RankEvent { masks }
    }

    /// `{π_j = k}` with the other categories unconstrained.
    pub fn marginal(categories: usize, size: usize, j: usize, k: PermIndex) -> Self {
        let mut ev = Self::all(categories, size);
        ev.masks[j] = vec![false; size];
        ev.masks[j][k.zero_based()] = true;
        ev
    }

    pub fn masks(&self) -> &[Vec<bool>] {
        &self.masks
    }

    fn intersect_masks(&self, other: &RankEvent) -> Vec<Vec<bool>> {
        self.masks
            .iter()
            .zip(&other.masks)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x && y).collect())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateWithSE {
    pub value: f64,
    pub se: f64,
    pub batches: usize,
}

/// Batch-means standard error of the mean of `series`.
pub fn batch_means_se(series: &[f64], batches: usize) -> Result<f64> {
    if batches < 2 || series.len() < 2 * batches {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            batches,
        });
    }
    let width = series.len() / batches;
    let means: Vec<f64> = series
        .chunks_exact(width)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / width as f64)
        .collect();
    Ok(sample_sd(&means) / (batches as f64).sqrt())
}

fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

fn check_trace(trace: &ChainTrace, model: &RankModel) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if trace.size != model.size() || trace.categories != model.categories() {
        return Err(Error::Dimension("trace does not belong to this model".into()));
    }
    Ok(())
}

fn check_event(event: &RankEvent, model: &RankModel) -> Result<()> {
    if event.masks.len() != model.categories() || event.masks[0].len() != model.size() {
        return Err(Error::Dimension("event shape does not match the model".into()));
    }
    Ok(())
}

/// `Π_j Σ_{k ∈ A_j} γ_jk(θ̃)` for every retained draw.
fn event_series(trace: &ChainTrace, model: &RankModel, masks: &[Vec<bool>]) -> Result<Vec<f64>> {
    let mut sampler = Sampler::new(model);
    let mut gamma = vec![0.0; model.size()];
    let constrained: Vec<usize> = (0..masks.len())
        .filter(|&j| !masks[j].iter().all(|&b| b))
        .collect();
    let mut out = Vec::with_capacity(trace.len());
    for rec in &trace.records {
        sampler.set_theta(&rec.theta);
        let mut prod = 1.0;
        for &j in &constrained {
            sampler.conditional_cached(j, &mut gamma)?;
            prod *= gamma
                .iter()
                .zip(&masks[j])
                .filter(|(_, &m)| m)
                .map(|(g, _)| g)
                .sum::<f64>();
        }
        out.push(prod.min(1.0));
    }
    Ok(out)
}

fn mean_with_se(series: &[f64], batches: usize) -> Result<EstimateWithSE> {
    let value = series.iter().sum::<f64>() / series.len() as f64;
    Ok(EstimateWithSE {
        value: value.clamp(0.0, 1.0),
        se: batch_means_se(series, batches)?,
        batches,
    })
}

/// `P̂(π_j = ζ_k | y)`.
pub fn rb_marginal(
    trace: &ChainTrace,
    model: &RankModel,
    j: usize,
    k: PermIndex,
    batches: usize,
) -> Result<EstimateWithSE> {
    check_trace(trace, model)?;
    model.tables.check(k)?;
    if j >= model.categories() {
        return Err(Error::Dimension(format!("category {j} out of range")));
    }
    rb_joint(trace, model, &RankEvent::marginal(model.categories(), model.size(), j, k), batches)
}

/// `P̂(π_j ∈ A_j ∀ j | y)`.
pub fn rb_joint(trace: &ChainTrace, model: &RankModel, event: &RankEvent, batches: usize) -> Result<EstimateWithSE> {
    check_trace(trace, model)?;
    check_event(event, model)?;
    let series = event_series(trace, model, &event.masks)?;
    mean_with_se(&series, batches)
}

/// `P̂(A | B, y)` as a ratio of averages; the standard error comes from the
/// spread of per-batch ratios.
pub fn rb_conditional(
    trace: &ChainTrace,
    model: &RankModel,
    a: &RankEvent,
    b: &RankEvent,
    batches: usize,
) -> Result<EstimateWithSE> {
    check_trace(trace, model)?;
    check_event(a, model)?;
    check_event(b, model)?;
    let num = event_series(trace, model, &a.intersect_masks(b))?;
    let den = event_series(trace, model, &b.masks)?;
    let den_total: f64 = den.iter().sum();
    if den_total <= 0.0 {
        return Err(Error::UndefinedConditional);
    }
    let value = (num.iter().sum::<f64>() / den_total).clamp(0.0, 1.0);
    if batches < 2 || num.len() < 2 * batches {
        return Err(Error::SeriesTooShort {
            len: num.len(),
            batches,
        });
    }
    let width = num.len() / batches;
    let ratios: Vec<f64> = num
        .chunks_exact(width)
        .zip(den.chunks_exact(width))
        .take(batches)
        .filter_map(|(n, d)| {
            let d: f64 = d.iter().sum();
            (d > 0.0).then(|| n.iter().sum::<f64>() / d)
        })
        .collect();
    let se = if ratios.len() >= 2 {
        sample_sd(&ratios) / (ratios.len() as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(EstimateWithSE {
        value,
        se,
        batches: ratios.len(),
    })
}

/// Frequency of `π_j = ζ_k` among the sampled central ranks.
pub fn naive_marginal(trace: &ChainTrace, j: usize, k: PermIndex) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let hits = trace.records.iter().filter(|r| r.pi.get(j) == k).count();
    Ok(hits as f64 / trace.len() as f64)
}

/// Rao-Blackwellised pmf over all joint states from the first `draws`
/// retained records, in the oracle's state order.
pub fn rb_joint_pmf(trace: &ChainTrace, model: &RankModel, draws: usize) -> Result<Vec<f64>> {
    check_trace(trace, model)?;
    let size = model.size();
    let g = model.categories();
    let q = crate::oracle::state_count(size, g, MAX_PMF_STATES)?;
    let used = draws.min(trace.len()).max(1);
    let mut sampler = Sampler::new(model);
    let mut gammas = vec![vec![0.0; size]; g];
    let mut pmf = vec![0.0; q];
    for rec in &trace.records[..used] {
        sampler.set_theta(&rec.theta);
        for (j, gj) in gammas.iter_mut().enumerate() {
            sampler.conditional_cached(j, gj)?;
        }
        for (s, slot) in pmf.iter_mut().enumerate() {
            let mut rest = s;
            let mut prod = 1.0;
            for j in (0..g).rev() {
                prod *= gammas[j][rest % size];
                rest /= size;
            }
            *slot += prod;
        }
    }
    pmf.iter_mut().for_each(|v| *v /= used as f64);
    Ok(pmf)
}

/// Empirical pmf of the sampled joint central ranks from the first `draws` records.
pub fn empirical_joint_pmf(trace: &ChainTrace, draws: usize) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let q = trace.size.pow(trace.categories as u32);
    let used = draws.min(trace.len()).max(1);
    let mut pmf = vec![0.0; q];
    for rec in &trace.records[..used] {
        pmf[state_index(&rec.pi, trace.size)] += 1.0;
    }
    pmf.iter_mut().for_each(|v| *v /= used as f64);
    Ok(pmf)
}
