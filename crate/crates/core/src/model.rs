//! Data, hyperparameters and the unnormalised posteriors of the rank model.
//!
//! Observed rankings in category `j` are `y = σ ∘ π_j`, with the perturbation
//! `σ` drawn i.i.d. from `θ` and `θ ~ Dirichlet(a)`. Conjugacy integrates `θ`
//! out, leaving `p(π | y) ∝ p(π) Π_k Γ(m_k(π) + a_k)`.
//!
//! Categories are 0-based in this API; permutations are [`PermIndex`] (1-based).

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::permutation::{GroupTables, PermIndex};
use crate::rng::categorical_from_probs;
use crate::special::ln_gamma;

/// Counts `n[j][i]` of ranking `ζ_{i+1}` observed in category `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankCounts {
    p: usize,
    size: usize,
    counts: Vec<Vec<u64>>,
    totals: Vec<u64>,
    grand_total: u64,
}

impl RankCounts {
    /// `counts[j]` must have length `p!`.
    pub fn new(p: usize, counts: Vec<Vec<u64>>) -> Result<Self> {
        let size = crate::permutation::factorial(p);
        if counts.is_empty() {
            return Err(Error::Dimension("at least one category is required".into()));
        }
        for (j, row) in counts.iter().enumerate() {
            if row.len() != size {
                return Err(Error::Dimension(format!(
                    "category {j} has {} counts, expected p! = {size}",
                    row.len()
                )));
            }
        }
        let totals: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let grand_total = totals.iter().sum();
        Ok(RankCounts {
            p,
            size,
            counts,
            totals,
            grand_total,
        })
    }

    pub fn zeros(p: usize, g: usize) -> Result<Self> {
        let size = crate::permutation::factorial(p);
        Self::new(p, vec![vec![0; size]; g])
    }

    pub fn items(&self) -> usize {
        self.p
    }

    pub fn categories(&self) -> usize {
        self.counts.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Count of ranking `k` in category `j`.
    pub fn count(&self, j: usize, k: PermIndex) -> u64 {
        self.counts[j][k.zero_based()]
    }

    pub fn category(&self, j: usize) -> &[u64] {
        &self.counts[j]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// `b_j`.
    pub fn category_total(&self, j: usize) -> u64 {
        self.totals[j]
    }

    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    /// `N`.
    pub fn total(&self) -> u64 {
        self.grand_total
    }

    pub(crate) fn add(&mut self, j: usize, k0: usize, by: u64) {
        self.counts[j][k0] += by;
        self.totals[j] += by;
        self.grand_total += by;
    }

    fn check_tables(&self, tables: &GroupTables) -> Result<()> {
        if tables.items() != self.p {
            return Err(Error::Dimension(format!(
                "counts are for p = {}, tables for p = {}",
                self.p,
                tables.items()
            )));
        }
        Ok(())
    }
}

/// Dirichlet hyperparameters `a_k = s · exp(λ |ζ_k|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    lambda: Option<f64>,
    scale: f64,
    a: Vec<f64>,
    a0: f64,
}

impl HyperParams {
    /// Weights from the precision `λ` with unit scale.
    pub fn from_lambda(lambda: f64, tables: &GroupTables) -> Result<Self> {
        Self::from_lambda_scaled(lambda, 1.0, tables)
    }

    /// Weights `s · exp(λ |ζ_k|)`. With `λ = ln 2`, `s = 1/2` and `p = 2` this
    /// gives `a = (2, 1)`.
    pub fn from_lambda_scaled(lambda: f64, scale: f64, tables: &GroupTables) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale must be positive, got {scale}"
            )));
        }
        let a: Vec<f64> = tables
            .indices()
            .map(|k| scale * (lambda * tables.cycles(k) as f64).exp())
            .collect();
        let a0 = a.iter().sum();
        Ok(HyperParams {
            lambda: Some(lambda),
            scale,
            a,
            a0,
        })
    }

    /// Arbitrary positive weights, not tied to a precision parameter.
    pub fn from_weights(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::InvalidArgument(
                "Dirichlet weights must be finite and positive".into(),
            ));
        }
        let a0 = a.iter().sum();
        Ok(HyperParams {
            lambda: None,
            scale: 1.0,
            a,
            a0,
        })
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn weights(&self) -> &[f64] {
        &self.a
    }

    pub fn weight(&self, k: PermIndex) -> f64 {
        self.a[k.zero_based()]
    }

    pub fn total(&self) -> f64 {
        self.a0
    }
}

/// Independent per-category priors on the central ranks.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorPi {
    probs: Vec<Vec<f64>>,
    log_probs: Vec<Vec<f64>>,
}

impl PriorPi {
    pub fn uniform(g: usize, size: usize) -> Self {
        let v = 1.0 / size as f64;
        Self::from_probs_unchecked(vec![vec![v; size]; g])
    }

    /// Each row must be a pmf over `S_p` (sum 1 within 1e-12).
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        let size = probs.first().map(Vec::len).unwrap_or(0);
        for (j, row) in probs.iter().enumerate() {
            if row.len() != size {
                return Err(Error::Dimension(format!("prior row {j} has wrong length")));
            }
            if row.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "prior row {j} has a negative or non-finite entry"
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "prior row {j} sums to {total}, not 1"
                )));
            }
        }
        Ok(Self::from_probs_unchecked(probs))
    }

    /// Point mass on `k` for every category.
    pub fn point_mass(g: usize, size: usize, k: PermIndex) -> Self {
        let mut row = vec![0.0; size];
        row[k.zero_based()] = 1.0;
        Self::from_probs_unchecked(vec![row; g])
    }

    fn from_probs_unchecked(probs: Vec<Vec<f64>>) -> Self {
        let log_probs = probs
            .iter()
            .map(|r| r.iter().map(|v| v.ln()).collect())
            .collect();
        PriorPi { probs, log_probs }
    }

    pub fn categories(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, j: usize, k: PermIndex) -> f64 {
        self.probs[j][k.zero_based()]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.probs[j]
    }

    pub(crate) fn log_row(&self, j: usize) -> &[f64] {
        &self.log_probs[j]
    }

    /// `ln p(π)`; `-inf` off the prior support.
    pub fn log_prob(&self, pi: &CentralRanks) -> f64 {
        pi.ranks()
            .iter()
            .enumerate()
            .map(|(j, k)| self.log_probs[j][k.zero_based()])
            .sum()
    }
}

/// A point on the simplex `S_{p!}`: the perturbation distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaVector(Vec<f64>);

impl ThetaVector {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() || theta.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidArgument(
                "theta entries must lie in [0, 1]".into(),
            ));
        }
        let total: f64 = theta.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "theta sums to {total}, not 1"
            )));
        }
        Ok(ThetaVector(theta))
    }

    pub fn uniform(size: usize) -> Self {
        ThetaVector(vec![1.0 / size as f64; size])
    }

    /// Dirichlet mean `a / a0`.
    pub fn mean_of(hyp: &HyperParams) -> Self {
        ThetaVector(hyp.weights().iter().map(|a| a / hyp.total()).collect())
    }

    pub(crate) fn from_normalized(theta: Vec<f64>) -> Self {
        ThetaVector(theta)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, k: PermIndex) -> f64 {
        self.0[k.zero_based()]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Central ranks `(π_1, …, π_g)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CentralRanks(Vec<PermIndex>);

impl CentralRanks {
    pub fn new(ranks: Vec<PermIndex>) -> Self {
        CentralRanks(ranks)
    }

    pub fn from_indices(ranks: &[usize]) -> Result<Self> {
        Ok(CentralRanks(
            ranks
                .iter()
                .map(|&k| PermIndex::new(k))
                .collect::<Result<_, _>>()?,
        ))
    }

    pub fn ranks(&self) -> &[PermIndex] {
        &self.0
    }

    pub fn get(&self, j: usize) -> PermIndex {
        self.0[j]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn set(&mut self, j: usize, k: PermIndex) {
        self.0[j] = k;
    }

    /// `(σ ∘ π_1, …, σ ∘ π_g)`.
    pub fn left_multiply(&self, sigma: PermIndex, tables: &GroupTables) -> CentralRanks {
        CentralRanks(
            self.0
                .iter()
                .map(|&pj| tables.compose_index(sigma, pj))
                .collect(),
        )
    }
}

/// Everything a sampler or oracle needs about one posterior.
#[derive(Clone, Debug)]
pub struct RankModel {
    pub tables: Arc<GroupTables>,
    pub counts: RankCounts,
    pub hyper: HyperParams,
    pub prior: PriorPi,
}

impl RankModel {
    pub fn new(
        tables: Arc<GroupTables>,
        counts: RankCounts,
        hyper: HyperParams,
        prior: PriorPi,
    ) -> Result<Self> {
        counts.check_tables(&tables)?;
        if hyper.weights().len() != tables.size() {
            return Err(Error::Dimension(format!(
                "{} Dirichlet weights for p! = {}",
                hyper.weights().len(),
                tables.size()
            )));
        }
        if prior.categories() != counts.categories() {
            return Err(Error::Dimension(format!(
                "prior has {} categories, data has {}",
                prior.categories(),
                counts.categories()
            )));
        }
        if prior.row(0).len() != tables.size() {
            return Err(Error::Dimension("prior rows must have length p!".into()));
        }
        Ok(RankModel {
            tables,
            counts,
            hyper,
            prior,
        })
    }

    /// Uniform priors on every `π_j`.
    pub fn with_uniform_prior(
        tables: Arc<GroupTables>,
        counts: RankCounts,
        hyper: HyperParams,
    ) -> Result<Self> {
        let prior = PriorPi::uniform(counts.categories(), tables.size());
        Self::new(tables, counts, hyper, prior)
    }

    pub fn categories(&self) -> usize {
        self.counts.categories()
    }

    pub fn size(&self) -> usize {
        self.tables.size()
    }

    /// Replaces the hyperparameters, keeping data and prior.
    pub fn with_hyper(&self, hyper: HyperParams) -> Result<Self> {
        Self::new(
            self.tables.clone(),
            self.counts.clone(),
            hyper,
            self.prior.clone(),
        )
    }

    /// `ln p(π | y, λ)` up to a π-free constant.
    pub fn log_post_pi(&self, pi: &CentralRanks) -> Result<f64> {
        log_post_pi(pi, &self.counts, &self.hyper, &self.prior, &self.tables)
    }
}

/// `m_k(π) = Σ_j Σ_i n_ij 𝕀(ζ_i ∘ π_j⁻¹ = ζ_k)`, indexed 0-based by `k - 1`.
pub fn m_counts(pi: &CentralRanks, counts: &RankCounts, tables: &GroupTables) -> Result<Vec<u64>> {
    counts.check_tables(tables)?;
    if pi.len() != counts.categories() {
        return Err(Error::Dimension(format!(
            "{} central ranks for {} categories",
            pi.len(),
            counts.categories()
        )));
    }
    let mut m = vec![0u64; tables.size()];
    m_counts_into(pi, counts, tables, &mut m);
    Ok(m)
}

pub(crate) fn m_counts_into(
    pi: &CentralRanks,
    counts: &RankCounts,
    tables: &GroupTables,
    m: &mut [u64],
) {
    m.iter_mut().for_each(|v| *v = 0);
    for (j, row) in counts.rows().iter().enumerate() {
        let inv = tables.inverse0(pi.get(j).zero_based());
        for (i, &n) in row.iter().enumerate() {
            if n > 0 {
                m[tables.compose0(i, inv)] += n;
            }
        }
    }
}

/// `Σ_k m_k(π) ln θ_k`. A zero `θ_k` with `m_k > 0` gives `-inf`.
pub fn log_likelihood(
    theta: &ThetaVector,
    pi: &CentralRanks,
    counts: &RankCounts,
    tables: &GroupTables,
) -> Result<f64> {
    if theta.len() != tables.size() {
        return Err(Error::Dimension("theta must have length p!".into()));
    }
    let m = m_counts(pi, counts, tables)?;
    Ok(m.iter()
        .zip(theta.as_slice())
        .filter(|(&mk, _)| mk > 0)
        .map(|(&mk, &t)| mk as f64 * t.ln())
        .sum())
}

/// `ln p(π) + Σ_k ln Γ(m_k(π) + a_k)`; `-inf` off the prior support.
pub fn log_post_pi(
    pi: &CentralRanks,
    counts: &RankCounts,
    hyper: &HyperParams,
    prior: &PriorPi,
    tables: &GroupTables,
) -> Result<f64> {
    let log_prior = prior.log_prob(pi);
    if log_prior == f64::NEG_INFINITY {
        return Ok(log_prior);
    }
    let m = m_counts(pi, counts, tables)?;
    Ok(log_prior + log_gamma_sum(&m, hyper.weights()))
}

pub(crate) fn log_gamma_sum(m: &[u64], a: &[f64]) -> f64 {
    m.iter()
        .zip(a)
        .map(|(&mk, &ak)| ln_gamma(mk as f64 + ak))
        .sum()
}

/// Draws a dataset `y_ij = σ_ij ∘ π_j` with `σ_ij ~ θ`, `b_j` rankings per category.
pub fn simulate_data<R: Rng + ?Sized>(
    pi_true: &CentralRanks,
    theta_true: &ThetaVector,
    per_category: &[u64],
    tables: &GroupTables,
    rng: &mut R,
) -> Result<RankCounts> {
    if pi_true.len() != per_category.len() {
        return Err(Error::Dimension(
            "need one sample size per central rank".into(),
        ));
    }
    if theta_true.len() != tables.size() {
        return Err(Error::Dimension("theta must have length p!".into()));
    }
    for &k in pi_true.ranks() {
        tables.check(k)?;
    }
    let mut counts = RankCounts::zeros(tables.items(), pi_true.len())?;
    let cdf = crate::rng::cumulative(theta_true.as_slice());
    for (j, &b) in per_category.iter().enumerate() {
        let pj = pi_true.get(j).zero_based();
        for _ in 0..b {
            let sigma = categorical_from_probs(&cdf, rng);
            counts.add(j, tables.compose0(sigma, pj), 1);
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn tables(p: usize) -> Arc<GroupTables> {
        Arc::new(GroupTables::build(p).unwrap())
    }

    fn ranks(v: &[usize]) -> CentralRanks {
        CentralRanks::from_indices(v).unwrap()
    }

    #[test]
    fn m_counts_single_category_identity() {
        let t = tables(3);
        let counts = RankCounts::new(3, vec![vec![4, 0, 2, 7, 1, 3]]).unwrap();
        let m = m_counts(&ranks(&[1]), &counts, &t).unwrap();
        assert_eq!(m, vec![4, 0, 2, 7, 1, 3]);
    }

    #[test]
    fn m_counts_hand_expanded() {
        // category 0 at ζ_1 with (3, 1); category 1 at ζ_2 with (1, 2)
        let t = tables(2);
        let counts = RankCounts::new(2, vec![vec![3, 1], vec![1, 2]]).unwrap();
        assert_eq!(m_counts(&ranks(&[1, 2]), &counts, &t).unwrap(), vec![5, 2]);
    }

    #[test]
    fn m_counts_zero_data() {
        let t = tables(3);
        let counts = RankCounts::zeros(3, 2).unwrap();
        assert_eq!(m_counts(&ranks(&[4, 6]), &counts, &t).unwrap(), vec![0; 6]);
    }

    #[test]
    fn m_counts_dimension_errors() {
        let t = tables(3);
        let counts = RankCounts::zeros(3, 2).unwrap();
        assert!(m_counts(&ranks(&[1]), &counts, &t).is_err());
        assert!(m_counts(&ranks(&[1, 1]), &counts, &tables(2)).is_err());
        assert!(RankCounts::new(3, vec![vec![1, 2]]).is_err());
    }

    #[test]
    fn m_counts_conserve_mass_exhaustively() {
        for p in 2..=3 {
            let t = tables(p);
            let size = t.size();
            for g in 1..=3 {
                let counts = RankCounts::new(
                    p,
                    (0..g)
                        .map(|j| (0..size).map(|i| ((i * 7 + j * 3) % 5) as u64).collect())
                        .collect(),
                )
                .unwrap();
                let total: u64 = counts.total();
                let states = size.pow(g as u32);
                for s in 0..states {
                    let mut rest = s;
                    let mut pis = vec![0; g];
                    for j in (0..g).rev() {
                        pis[j] = rest % size + 1;
                        rest /= size;
                    }
                    let m = m_counts(&ranks(&pis), &counts, &t).unwrap();
                    assert_eq!(m.iter().sum::<u64>(), total);
                }
            }
        }
    }

    #[test]
    fn log_likelihood_examples() {
        let t = tables(2);
        let empty = RankCounts::zeros(2, 1).unwrap();
        let theta = ThetaVector::new(vec![0.8, 0.2]).unwrap();
        assert_eq!(log_likelihood(&theta, &ranks(&[1]), &empty, &t).unwrap(), 0.0);

        let counts = RankCounts::new(2, vec![vec![3, 1], vec![1, 2]]).unwrap();
        let ll = log_likelihood(&theta, &ranks(&[1, 2]), &counts, &t).unwrap();
        assert!((ll - (5.0 * 0.8f64.ln() + 2.0 * 0.2f64.ln())).abs() < 1e-14);

        let u = ThetaVector::uniform(2);
        let ll = log_likelihood(&u, &ranks(&[2, 1]), &counts, &t).unwrap();
        assert!((ll - 7.0 * 0.5f64.ln()).abs() < 1e-14);

        let degenerate = ThetaVector::new(vec![1.0, 0.0]).unwrap();
        let ll = log_likelihood(&degenerate, &ranks(&[1, 2]), &counts, &t).unwrap();
        assert_eq!(ll, f64::NEG_INFINITY);
    }

    #[test]
    fn log_post_pi_examples() {
        let t = tables(2);
        let counts = RankCounts::new(2, vec![vec![1, 0]]).unwrap();
        let prior = PriorPi::uniform(1, 2);

        let flat = HyperParams::from_weights(vec![1.0, 1.0]).unwrap();
        let l1 = log_post_pi(&ranks(&[1]), &counts, &flat, &prior, &t).unwrap();
        let l2 = log_post_pi(&ranks(&[2]), &counts, &flat, &prior, &t).unwrap();
        assert!((l1 - l2).abs() < 1e-14);

        let tilted = HyperParams::from_weights(vec![2.0, 1.0]).unwrap();
        let l1 = log_post_pi(&ranks(&[1]), &counts, &tilted, &prior, &t).unwrap();
        let l2 = log_post_pi(&ranks(&[2]), &counts, &tilted, &prior, &t).unwrap();
        assert!(((l1 - l2).exp() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn log_post_pi_without_data_is_log_prior() {
        let t = tables(3);
        let counts = RankCounts::zeros(3, 2).unwrap();
        let hyp = HyperParams::from_lambda(0.7, &t).unwrap();
        let prior = PriorPi::new(vec![
            vec![0.5, 0.1, 0.1, 0.1, 0.1, 0.1],
            vec![0.25, 0.25, 0.2, 0.1, 0.1, 0.1],
        ])
        .unwrap();
        let a = ranks(&[1, 2]);
        let b = ranks(&[3, 6]);
        let da = log_post_pi(&a, &counts, &hyp, &prior, &t).unwrap()
            - log_post_pi(&b, &counts, &hyp, &prior, &t).unwrap();
        let dp = prior.log_prob(&a) - prior.log_prob(&b);
        assert!((da - dp).abs() < 1e-12);

        let point = PriorPi::point_mass(2, 6, PermIndex::IDENTITY);
        assert_eq!(
            log_post_pi(&b, &counts, &hyp, &point, &t).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn hyper_params_scale_and_ratios() {
        let t = tables(2);
        let h = HyperParams::from_lambda_scaled(2f64.ln(), 0.5, &t).unwrap();
        assert!((h.weights()[0] - 2.0).abs() < 1e-14);
        assert!((h.weights()[1] - 1.0).abs() < 1e-14);
        assert!((h.total() - 3.0).abs() < 1e-14);

        let t4 = tables(4);
        for &s in &[1.0, 0.01, 37.0] {
            let h = HyperParams::from_lambda_scaled(0.3, s, &t4).unwrap();
            for k in t4.indices() {
                let want = (0.3 * (t4.cycles(k) as f64 - 4.0)).exp();
                let got = h.weight(k) / h.weight(PermIndex::IDENTITY);
                assert!((got - want).abs() < 1e-14);
            }
        }
        assert!(HyperParams::from_lambda(-1.0, &t).is_err());
        assert!(HyperParams::from_weights(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn prior_and_theta_validation() {
        assert!(PriorPi::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(PriorPi::new(vec![vec![1.5, -0.5]]).is_err());
        assert!(ThetaVector::new(vec![0.3, 0.3]).is_err());
        assert!(ThetaVector::new(vec![0.3, 0.7]).is_ok());
    }

    #[test]
    fn simulate_without_perturbation() {
        let t = tables(3);
        let pi = ranks(&[4, 2]);
        let theta = ThetaVector::new(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let mut rng = stream_rng(5, 0);
        let counts = simulate_data(&pi, &theta, &[13, 7], &t, &mut rng).unwrap();
        assert_eq!(counts.count(0, pi.get(0)), 13);
        assert_eq!(counts.count(1, pi.get(1)), 7);
        assert_eq!(counts.total(), 20);
    }

    #[test]
    fn simulate_empty() {
        let t = tables(2);
        let mut rng = stream_rng(5, 0);
        let counts =
            simulate_data(&ranks(&[1, 2]), &ThetaVector::uniform(2), &[0, 0], &t, &mut rng)
                .unwrap();
        assert_eq!(counts.total(), 0);
    }

    #[test]
    fn simulate_binomial_concentration() {
        let t = tables(2);
        let theta = ThetaVector::new(vec![0.9, 0.1]).unwrap();
        for seed in 0..10 {
            let mut rng = stream_rng(seed, 0);
            let counts = simulate_data(&ranks(&[1]), &theta, &[10_000], &t, &mut rng).unwrap();
            let frac = counts.count(0, PermIndex::IDENTITY) as f64 / 10_000.0;
            assert!((frac - 0.9).abs() < 0.01, "seed {seed}: {frac}");
        }
    }

    #[test]
    fn simulate_is_deterministic() {
        let t = tables(3);
        let theta = ThetaVector::new(vec![0.5, 0.1, 0.1, 0.1, 0.1, 0.1]).unwrap();
        let run = |seed| {
            let mut rng = stream_rng(seed, 0);
            simulate_data(&ranks(&[2, 5]), &theta, &[50, 50], &t, &mut rng).unwrap()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }
}
