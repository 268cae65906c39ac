//! Gibbs (data augmentation) and sandwich samplers.
//!
//! One Gibbs iteration draws `π | θ, y` (independent categoricals per
//! category) and then `θ | π, y ~ Dirichlet(m(π) + a)`. The sandwich variants
//! insert a Metropolis–Hastings move `π → (σ ∘ π_1, …, σ ∘ π_g)` between the
//! two draws; its acceptance ratio uses differences of [`RankModel::log_post_pi`]
//! so no enumeration of `S_p^g` ever happens inside a chain.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{log_gamma_sum, m_counts_into, CentralRanks, RankModel, ThetaVector};
use crate::permutation::PermIndex;
use crate::rng::{self, invert_cdf, normalize_log_weights, ChainRng};

/// Which transition kernel a chain runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Gibbs,
    /// Uniform `σ` over `S_p`.
    SandwichUniform,
    /// `τ ≠ id` drawn with probability proportional to `a_k`.
    SandwichLocal,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Gibbs => "gibbs",
            Variant::SandwichUniform => "sandwich_uniform",
            Variant::SandwichLocal => "sandwich_local",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gibbs" | "da" => Ok(Variant::Gibbs),
            "sandwich" | "sandwich_uniform" => Ok(Variant::SandwichUniform),
            "sandwich_local" | "local" => Ok(Variant::SandwichLocal),
            other => Err(Error::InvalidArgument(format!("unknown sampler variant {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub iterations: u64,
    pub burnin: u64,
    pub thin: u64,
    pub seed: u64,
    /// Stream id of the chain's generator; parallel chains use 0, 1, 2, …
    pub stream: u64,
    pub variant: Variant,
}

impl ChainConfig {
    pub fn new(iterations: u64, variant: Variant, seed: u64) -> Self {
        ChainConfig {
            iterations,
            burnin: 0,
            thin: 1,
            seed,
            stream: 0,
            variant,
        }
    }

    pub fn burnin(mut self, burnin: u64) -> Self {
        self.burnin = burnin;
        self
    }

    pub fn thin(mut self, thin: u64) -> Self {
        self.thin = thin;
        self
    }

    pub fn stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be positive".into()));
        }
        if self.burnin >= self.iterations {
            return Err(Error::InvalidArgument(format!(
                "burnin {} must be below iterations {}",
                self.burnin, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidArgument("thin must be at least 1".into()));
        }
        Ok(())
    }

    /// `floor((M - burnin) / thin)`.
    pub fn retained(&self) -> u64 {
        (self.iterations - self.burnin) / self.thin
    }
}

/// Current `(θ, π)` plus the chain's generator.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub theta: ThetaVector,
    pub pi: CentralRanks,
    pub iteration: u64,
    pub accepted: bool,
    pub rng: ChainRng,
}

/// How a chain is started.
#[derive(Clone, Debug, Default)]
pub enum ChainInit {
    /// `π` from its prior, `θ` from `Dirichlet(a)`.
    #[default]
    Prior,
    /// Given `π`, with `θ` drawn from `p(θ | π, y)`.
    Ranks(CentralRanks),
    /// Fully specified starting point.
    State { theta: ThetaVector, pi: CentralRanks },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: u64,
    pub theta: Vec<f64>,
    pub pi: CentralRanks,
    /// Whether the sandwich move was accepted (always `false` for Gibbs).
    pub accepted: bool,
}

/// Thinned output of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainTrace {
    pub variant: Variant,
    pub size: usize,
    pub categories: usize,
    pub records: Vec<TraceRecord>,
    /// Sandwich moves accepted over all iterations, burn-in included.
    pub accepted_moves: u64,
    pub steps: u64,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn thetas(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.records.iter().map(|r| r.theta.as_slice())
    }

    /// Series of `θ_k` over retained records.
    pub fn theta_series(&self, k: PermIndex) -> Vec<f64> {
        self.records.iter().map(|r| r.theta[k.zero_based()]).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted_moves as f64 / self.steps as f64
        }
    }
}

/// Scratch space and precomputed lookups for the conditional draws of one model.
#[derive(Clone, Debug)]
pub struct Sampler<'m> {
    model: &'m RankModel,
    nonzero: Vec<Vec<(usize, f64)>>,
    log_theta: Vec<f64>,
    log_w: Vec<f64>,
    probs: Vec<f64>,
    m: Vec<u64>,
    shapes: Vec<f64>,
    local_weights: Vec<f64>,
    local_total: f64,
    local_cdf: Vec<f64>,
}

impl<'m> Sampler<'m> {
    pub fn new(model: &'m RankModel) -> Self {
        let size = model.size();
        let nonzero = model
            .counts
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &n)| n > 0)
                    .map(|(i, &n)| (i, n as f64))
                    .collect()
            })
            .collect();
        let mut local_weights = model.hyper.weights().to_vec();
        local_weights[0] = 0.0;
        Sampler {
            model,
            nonzero,
            log_theta: vec![0.0; size],
            log_w: vec![0.0; size],
            probs: vec![0.0; size],
            m: vec![0; size],
            shapes: vec![0.0; size],
            local_total: local_weights.iter().sum(),
            local_cdf: rng::cumulative(&local_weights),
            local_weights,
        }
    }

    pub fn model(&self) -> &'m RankModel {
        self.model
    }

    /// Normalised `γ_j·(θ)` written into `out` (length `p!`).
    pub fn conditional_into(&mut self, theta: &[f64], j: usize, out: &mut [f64]) -> Result<()> {
        for (lt, &t) in self.log_theta.iter_mut().zip(theta) {
            *lt = t.ln();
        }
        self.conditional_from_logs(j, out)
    }

    /// Like [`Self::conditional_into`] but reuses `ln θ` from the previous call
    /// to [`Self::set_theta`].
    fn conditional_from_logs(&mut self, j: usize, out: &mut [f64]) -> Result<()> {
        let tables = &*self.model.tables;
        let log_prior = self.model.prior.log_row(j);
        for (r, lw) in self.log_w.iter_mut().enumerate() {
            let lp = log_prior[r];
            if lp == f64::NEG_INFINITY {
                *lw = lp;
                continue;
            }
            // ζ_i = ζ_k ∘ ζ_r  ⇔  ζ_k = ζ_i ∘ ζ_r⁻¹
            let inv = tables.inverse0(r);
            let mut acc = lp;
            for &(i, n) in &self.nonzero[j] {
                acc += n * self.log_theta[tables.compose0(i, inv)];
            }
            *lw = acc;
        }
        if normalize_log_weights(&self.log_w, out) {
            Ok(())
        } else {
            Err(Error::NonFinite(format!(
                "every conditional weight of category {j} is zero"
            )))
        }
    }

    pub fn set_theta(&mut self, theta: &[f64]) {
        for (lt, &t) in self.log_theta.iter_mut().zip(theta) {
            *lt = t.ln();
        }
    }

    /// `γ_j·(θ)` for the `θ` last passed to [`Self::set_theta`].
    pub fn conditional_cached(&mut self, j: usize, out: &mut [f64]) -> Result<()> {
        self.conditional_from_logs(j, out)
    }

    /// Draws `π ~ p(π | θ, y)` in place.
    pub fn draw_pi_into<R: Rng + ?Sized>(
        &mut self,
        theta: &[f64],
        pi: &mut CentralRanks,
        rng: &mut R,
    ) -> Result<()> {
        self.set_theta(theta);
        let mut probs = std::mem::take(&mut self.probs);
        for j in 0..self.model.categories() {
            self.conditional_from_logs(j, &mut probs)?;
            let mut acc = 0.0;
            for p in probs.iter_mut() {
                acc += *p;
                *p = acc;
            }
            let u = rng.random::<f64>() * acc;
            pi.set(j, PermIndex::from_zero_based(invert_cdf(&probs, u)));
        }
        self.probs = probs;
        Ok(())
    }

    /// Draws `θ ~ Dirichlet(m(π) + a)` into `out`.
    pub fn draw_theta_into<R: Rng + ?Sized>(
        &mut self,
        pi: &CentralRanks,
        rng: &mut R,
        out: &mut [f64],
    ) {
        m_counts_into(pi, &self.model.counts, &self.model.tables, &mut self.m);
        for ((s, &mk), &ak) in self.shapes.iter_mut().zip(&self.m).zip(self.model.hyper.weights()) {
            *s = mk as f64 + ak;
        }
        rng::dirichlet_into(&self.shapes, rng, out);
    }

    /// `ln p(π | y)` up to a constant, using the scratch buffers.
    pub fn log_post(&mut self, pi: &CentralRanks) -> f64 {
        let log_prior = self.model.prior.log_prob(pi);
        if log_prior == f64::NEG_INFINITY {
            return log_prior;
        }
        m_counts_into(pi, &self.model.counts, &self.model.tables, &mut self.m);
        log_prior + log_gamma_sum(&self.m, self.model.hyper.weights())
    }

    /// `ln [p(π' | y) / p(π | y)]`.
    pub fn mh_log_ratio(&mut self, pi: &CentralRanks, proposal: &CentralRanks) -> f64 {
        let current = self.log_post(pi);
        let proposed = self.log_post(proposal);
        if proposed == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        proposed - current
    }

    /// Proposal pmf of the local move: `q(τ) ∝ a_τ` for `τ ≠ id`.
    pub fn local_proposal_prob(&self, tau: PermIndex) -> f64 {
        self.local_weights[tau.zero_based()] / self.local_total
    }

    /// Gibbs iteration: `π | θ`, then `θ | π`.
    pub fn gibbs_step(&mut self, state: &mut ChainState) -> Result<()> {
        self.draw_pi_into(state.theta.as_slice(), &mut state.pi, &mut state.rng)?;
        self.finish_with_theta(state);
        state.accepted = false;
        Ok(())
    }

    /// Sandwich iteration with `σ` uniform on `S_p`.
    pub fn sandwich_step(&mut self, state: &mut ChainState) -> Result<()> {
        self.draw_pi_into(state.theta.as_slice(), &mut state.pi, &mut state.rng)?;
        let sigma = PermIndex::from_zero_based(state.rng.random_range(0..self.model.size()));
        self.move_and_finish(state, sigma, 0.0);
        Ok(())
    }

    /// Sandwich iteration with the local proposal `τ ~ q`, `q(id) = 0`.
    pub fn sandwich_local_step(&mut self, state: &mut ChainState) -> Result<()> {
        if self.model.tables.items() < 2 {
            return Err(Error::InvalidArgument("local moves need p >= 2".into()));
        }
        self.draw_pi_into(state.theta.as_slice(), &mut state.pi, &mut state.rng)?;
        let tau = PermIndex::from_zero_based(rng::categorical_from_probs(
            &self.local_cdf,
            &mut state.rng,
        ));
        let inv = self.model.tables.inverse_index(tau);
        // q(τ⁻¹)/q(τ); |τ| = |τ⁻¹| makes this exactly zero in log space
        let correction =
            self.local_proposal_prob(inv).ln() - self.local_proposal_prob(tau).ln();
        self.move_and_finish(state, tau, correction);
        Ok(())
    }

    /// The middle sandwich move with a given group element, then the `θ` draw.
    /// Exposed so tests can force a particular proposal.
    pub fn move_and_finish(&mut self, state: &mut ChainState, sigma: PermIndex, log_q_correction: f64) {
        let proposal = state.pi.left_multiply(sigma, &self.model.tables);
        let log_ratio = self.mh_log_ratio(&state.pi, &proposal) + log_q_correction;
        let u: f64 = state.rng.random();
        // log(0) = -inf never accepts; log_ratio >= 0 always accepts
        let accepted = log_ratio >= 0.0 || u.ln() < log_ratio;
        if accepted {
            state.pi = proposal;
        }
        state.accepted = accepted;
        self.finish_with_theta(state);
    }

    fn finish_with_theta(&mut self, state: &mut ChainState) {
        let mut theta = vec![0.0; self.model.size()];
        let pi = state.pi.clone();
        self.draw_theta_into(&pi, &mut state.rng, &mut theta);
        state.theta = ThetaVector::from_normalized(theta);
        state.iteration += 1;
    }

    pub fn step(&mut self, variant: Variant, state: &mut ChainState) -> Result<()> {
        match variant {
            Variant::Gibbs => self.gibbs_step(state),
            Variant::SandwichUniform => self.sandwich_step(state),
            Variant::SandwichLocal => self.sandwich_local_step(state),
        }
    }

    /// Builds the starting state for a chain.
    pub fn initial_state(&mut self, init: &ChainInit, mut rng: ChainRng) -> Result<ChainState> {
        let g = self.model.categories();
        let size = self.model.size();
        let (theta, pi) = match init {
            ChainInit::Prior => {
                let mut pi = CentralRanks::new(vec![PermIndex::IDENTITY; g]);
                for j in 0..g {
                    let cdf = rng::cumulative(self.model.prior.row(j));
                    pi.set(j, PermIndex::from_zero_based(rng::categorical_from_probs(&cdf, &mut rng)));
                }
                let theta = rng::dirichlet(self.model.hyper.weights(), &mut rng);
                (theta, pi)
            }
            ChainInit::Ranks(pi) => {
                self.check_ranks(pi)?;
                let mut theta = vec![0.0; size];
                self.draw_theta_into(pi, &mut rng, &mut theta);
                (theta, pi.clone())
            }
            ChainInit::State { theta, pi } => {
                self.check_ranks(pi)?;
                if theta.len() != size {
                    return Err(Error::Dimension("initial theta must have length p!".into()));
                }
                (theta.as_slice().to_vec(), pi.clone())
            }
        };
        Ok(ChainState {
            theta: ThetaVector::from_normalized(theta),
            pi,
            iteration: 0,
            accepted: false,
            rng,
        })
    }

    fn check_ranks(&self, pi: &CentralRanks) -> Result<()> {
        if pi.len() != self.model.categories() {
            return Err(Error::Dimension(format!(
                "{} initial ranks for {} categories",
                pi.len(),
                self.model.categories()
            )));
        }
        for &k in pi.ranks() {
            self.model.tables.check(k)?;
        }
        Ok(())
    }
}

/// Normalised conditional pmf `γ_j·(θ)` of `π_j` given `θ` and the data.
pub fn gamma_weights(theta: &ThetaVector, j: usize, model: &RankModel) -> Result<Vec<f64>> {
    if j >= model.categories() {
        return Err(Error::Dimension(format!("category {j} out of range")));
    }
    if theta.len() != model.size() {
        return Err(Error::Dimension("theta must have length p!".into()));
    }
    let mut out = vec![0.0; model.size()];
    Sampler::new(model).conditional_into(theta.as_slice(), j, &mut out)?;
    Ok(out)
}

/// One draw of `π ~ p(π | θ, y)`.
pub fn draw_pi<R: Rng + ?Sized>(theta: &ThetaVector, model: &RankModel, rng: &mut R) -> Result<CentralRanks> {
    let mut pi = CentralRanks::new(vec![PermIndex::IDENTITY; model.categories()]);
    Sampler::new(model).draw_pi_into(theta.as_slice(), &mut pi, rng)?;
    Ok(pi)
}

/// One draw of `θ ~ Dirichlet(m(π) + a)`.
pub fn draw_theta<R: Rng + ?Sized>(pi: &CentralRanks, model: &RankModel, rng: &mut R) -> ThetaVector {
    let mut out = vec![0.0; model.size()];
    Sampler::new(model).draw_theta_into(pi, rng, &mut out);
    ThetaVector::from_normalized(out)
}

/// Runs one chain and keeps every `thin`-th state after burn-in.
pub fn run_chain(config: &ChainConfig, model: &RankModel, init: &ChainInit) -> Result<ChainTrace> {
    config.validate()?;
    let mut sampler = Sampler::new(model);
    let mut state = sampler.initial_state(init, rng::stream_rng(config.seed, config.stream))?;
    let mut records = Vec::with_capacity(config.retained() as usize);
    let mut accepted_moves = 0;
    for it in 1..=config.iterations {
        sampler.step(config.variant, &mut state)?;
        accepted_moves += state.accepted as u64;
        if it > config.burnin && (it - config.burnin) % config.thin == 0 {
            records.push(TraceRecord {
                iteration: it,
                theta: state.theta.as_slice().to_vec(),
                pi: state.pi.clone(),
                accepted: state.accepted,
            });
        }
    }
    Ok(ChainTrace {
        variant: config.variant,
        size: model.size(),
        categories: model.categories(),
        records,
        accepted_moves,
        steps: config.iterations,
    })
}

/// Runs `inits.len()` chains concurrently; chain `c` uses stream `config.stream + c`.
pub fn run_chains(config: &ChainConfig, model: &RankModel, inits: &[ChainInit]) -> Result<Vec<ChainTrace>> {
    config.validate()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = inits
            .iter()
            .enumerate()
            .map(|(c, init)| {
                let cfg = config.clone().stream(config.stream + c as u64);
                scope.spawn(move || run_chain(&cfg, model, init))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HyperParams, PriorPi, RankCounts};
    use crate::permutation::GroupTables;
    use crate::rng::stream_rng;
    use std::sync::Arc;

    fn model(p: usize, counts: Vec<Vec<u64>>, a: Vec<f64>) -> RankModel {
        let tables = Arc::new(GroupTables::build(p).unwrap());
        let counts = RankCounts::new(p, counts).unwrap();
        RankModel::with_uniform_prior(tables, counts, HyperParams::from_weights(a).unwrap()).unwrap()
    }

    fn ranks(v: &[usize]) -> CentralRanks {
        CentralRanks::from_indices(v).unwrap()
    }

    #[test]
    fn gamma_weights_without_data_is_prior() {
        let m = model(3, vec![vec![0; 6]], vec![1.0; 6]);
        let w = gamma_weights(&ThetaVector::new(vec![0.5, 0.1, 0.1, 0.1, 0.1, 0.1]).unwrap(), 0, &m).unwrap();
        for v in w {
            assert!((v - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gamma_weights_hand_normalised() {
        let m = model(2, vec![vec![3, 1]], vec![1.0, 1.0]);
        let w = gamma_weights(&ThetaVector::new(vec![0.8, 0.2]).unwrap(), 0, &m).unwrap();
        // 0.8^3 0.2 : 0.8 0.2^3
        let a = 0.8f64.powi(3) * 0.2;
        let b = 0.8 * 0.2f64.powi(3);
        assert!((w[0] - a / (a + b)).abs() < 1e-14);
        assert!((w[0] - 0.9412).abs() < 5e-5);
        assert!((w[1] - 0.0588).abs() < 5e-5);
    }

    #[test]
    fn gamma_weights_point_mass_prior() {
        let tables = Arc::new(GroupTables::build(3).unwrap());
        let counts = RankCounts::new(3, vec![vec![5, 0, 1, 0, 2, 9]]).unwrap();
        let prior = PriorPi::point_mass(1, 6, PermIndex::new(4).unwrap());
        let m = RankModel::new(tables, counts, HyperParams::from_weights(vec![1.0; 6]).unwrap(), prior).unwrap();
        let w = gamma_weights(&ThetaVector::uniform(6), 0, &m).unwrap();
        assert_eq!(w, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn gamma_weights_match_direct_product_formula() {
        // γ_jr ∝ Π_k θ_k^{Σ_i n_ij 𝕀(ζ_i = ζ_k ∘ ζ_r)} p_j(ζ_r), evaluated literally
        let m = model(3, vec![vec![5, 0, 1, 0, 2, 9], vec![1, 1, 1, 4, 0, 0]], vec![1.0; 6]);
        let theta = ThetaVector::new(vec![0.4, 0.2, 0.15, 0.1, 0.1, 0.05]).unwrap();
        let t = &m.tables;
        for j in 0..2 {
            let w = gamma_weights(&theta, j, &m).unwrap();
            let mut direct = vec![0.0; 6];
            for r in t.indices() {
                let mut prod = 1.0 / 6.0;
                for k in t.indices() {
                    let e: u64 = t
                        .indices()
                        .filter(|&i| i == t.compose_index(k, r))
                        .map(|i| m.counts.count(j, i))
                        .sum();
                    prod *= theta.get(k).powi(e as i32);
                }
                direct[r.get() - 1] = prod;
            }
            let z: f64 = direct.iter().sum();
            for (a, b) in w.iter().zip(&direct) {
                assert!((a - b / z).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn draw_pi_frequency() {
        let m = model(2, vec![vec![3, 1]], vec![1.0, 1.0]);
        let theta = ThetaVector::new(vec![0.8, 0.2]).unwrap();
        let exact = gamma_weights(&theta, 0, &m).unwrap()[0];
        let mut rng = stream_rng(3, 0);
        let mut sampler = Sampler::new(&m);
        let mut pi = ranks(&[1]);
        let n = 100_000;
        let mut hits = 0;
        for _ in 0..n {
            sampler.draw_pi_into(theta.as_slice(), &mut pi, &mut rng).unwrap();
            hits += (pi.get(0) == PermIndex::IDENTITY) as u32;
        }
        assert!((hits as f64 / n as f64 - exact).abs() < 0.003);
    }

    #[test]
    fn draw_pi_categories_are_independent() {
        let m = model(2, vec![vec![3, 1], vec![1, 2]], vec![1.0, 1.0]);
        let theta = ThetaVector::new(vec![0.7, 0.3]).unwrap();
        let g0 = gamma_weights(&theta, 0, &m).unwrap();
        let g1 = gamma_weights(&theta, 1, &m).unwrap();
        let mut rng = stream_rng(4, 0);
        let mut sampler = Sampler::new(&m);
        let mut pi = ranks(&[1, 1]);
        let n = 100_000;
        let mut joint = [0u32; 4];
        for _ in 0..n {
            sampler.draw_pi_into(theta.as_slice(), &mut pi, &mut rng).unwrap();
            joint[(pi.get(0).get() - 1) * 2 + pi.get(1).get() - 1] += 1;
        }
        let tv: f64 = (0..4)
            .map(|s| (joint[s] as f64 / n as f64 - g0[s / 2] * g1[s % 2]).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "{tv}");
    }

    #[test]
    fn draw_pi_point_mass_is_deterministic() {
        let tables = Arc::new(GroupTables::build(3).unwrap());
        let counts = RankCounts::new(3, vec![vec![5, 0, 1, 0, 2, 9]; 2]).unwrap();
        let prior = PriorPi::point_mass(2, 6, PermIndex::new(5).unwrap());
        let m = RankModel::new(tables, counts, HyperParams::from_weights(vec![1.0; 6]).unwrap(), prior).unwrap();
        let mut rng = stream_rng(1, 0);
        for _ in 0..100 {
            let pi = draw_pi(&ThetaVector::uniform(6), &m, &mut rng).unwrap();
            assert_eq!(pi, ranks(&[5, 5]));
        }
    }

    #[test]
    fn draw_theta_mean_matches_dirichlet() {
        // m(ζ_1) = (2, 0) with a = (1, 1) gives Dirichlet(3, 1)
        let m = model(2, vec![vec![2, 0]], vec![1.0, 1.0]);
        let mut rng = stream_rng(5, 0);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| draw_theta(&ranks(&[1]), &m, &mut rng).get(PermIndex::IDENTITY))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.75).abs() < 0.005, "{mean}");
    }

    #[test]
    fn forced_mode_is_a_fixed_point() {
        let tables = Arc::new(GroupTables::build(3).unwrap());
        let counts = RankCounts::new(3, vec![vec![3, 1, 0, 0, 2, 1]]).unwrap();
        let prior = PriorPi::point_mass(1, 6, PermIndex::new(2).unwrap());
        let m = RankModel::new(
            tables,
            counts,
            HyperParams::from_weights(vec![500.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap(),
            prior,
        )
        .unwrap();
        for variant in [Variant::Gibbs, Variant::SandwichUniform, Variant::SandwichLocal] {
            let trace = run_chain(&ChainConfig::new(500, variant, 2), &m, &ChainInit::Prior).unwrap();
            assert!(trace.records.iter().all(|r| r.pi == ranks(&[2])));
            assert!(trace.records.iter().all(|r| r.theta[0] > 0.9));
        }
    }

    #[test]
    fn identity_proposal_always_accepts() {
        let m = model(3, vec![vec![9, 1, 0, 3, 2, 1], vec![0, 4, 4, 1, 0, 0]], vec![2.0; 6]);
        let mut sampler = Sampler::new(&m);
        let mut state = sampler.initial_state(&ChainInit::Prior, stream_rng(8, 0)).unwrap();
        for _ in 0..50 {
            sampler.draw_pi_into(state.theta.as_slice(), &mut state.pi, &mut state.rng).unwrap();
            let before = state.pi.clone();
            sampler.move_and_finish(&mut state, PermIndex::IDENTITY, 0.0);
            assert!(state.accepted);
            assert_eq!(state.pi, before);
        }
    }

    #[test]
    fn mh_ratios_are_reciprocal() {
        let m = model(3, vec![vec![9, 1, 0, 3, 2, 1], vec![0, 4, 4, 1, 0, 0]], vec![2.0; 6]);
        let mut sampler = Sampler::new(&m);
        let t = m.tables.clone();
        let pi = ranks(&[2, 5]);
        for sigma in t.indices() {
            let fwd = pi.left_multiply(sigma, &t);
            let back = fwd.left_multiply(t.inverse_index(sigma), &t);
            assert_eq!(back, pi);
            let r1 = sampler.mh_log_ratio(&pi, &fwd);
            let r2 = sampler.mh_log_ratio(&fwd, &back);
            assert!((r1 + r2).abs() < 1e-12);
        }
    }

    #[test]
    fn local_proposal_weights_are_inverse_symmetric() {
        for p in 2..=5 {
            let tables = Arc::new(GroupTables::build(p).unwrap());
            let size = tables.size();
            let counts = RankCounts::zeros(p, 1).unwrap();
            let hyp = HyperParams::from_lambda(0.8, &tables).unwrap();
            let m = RankModel::with_uniform_prior(tables.clone(), counts, hyp).unwrap();
            let sampler = Sampler::new(&m);
            assert_eq!(sampler.local_proposal_prob(PermIndex::IDENTITY), 0.0);
            let mut total = 0.0;
            for tau in tables.indices() {
                let q = sampler.local_proposal_prob(tau);
                total += q;
                assert_eq!(q, sampler.local_proposal_prob(tables.inverse_index(tau)));
            }
            assert!((total - 1.0).abs() < 1e-12, "p={p} size={size}");
        }
    }

    #[test]
    fn local_move_for_two_items_is_the_swap() {
        let m = model(2, vec![vec![30, 10], vec![5, 25]], vec![2.0, 1.0]);
        let sampler = Sampler::new(&m);
        assert_eq!(sampler.local_proposal_prob(PermIndex::new(2).unwrap()), 1.0);
    }

    #[test]
    fn reproducible_traces() {
        let m = model(3, vec![vec![9, 1, 0, 3, 2, 1], vec![0, 4, 4, 1, 0, 0]], vec![2.0; 6]);
        for variant in [Variant::Gibbs, Variant::SandwichUniform, Variant::SandwichLocal] {
            let cfg = ChainConfig::new(300, variant, 99).burnin(50).thin(7);
            let a = run_chain(&cfg, &m, &ChainInit::Prior).unwrap();
            let b = run_chain(&cfg, &m, &ChainInit::Prior).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len() as u64, cfg.retained());
            assert_eq!(a.len(), 250 / 7);
            for r in &a.records {
                assert!((r.theta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_record_when_thin_spans_run() {
        let m = model(2, vec![vec![3, 1]], vec![1.0, 1.0]);
        let cfg = ChainConfig::new(100, Variant::Gibbs, 1).burnin(20).thin(80);
        let trace = run_chain(&cfg, &m, &ChainInit::Prior).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.records[0].iteration, 100);
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::new(0, Variant::Gibbs, 1).validate().is_err());
        assert!(ChainConfig::new(10, Variant::Gibbs, 1).burnin(10).validate().is_err());
        assert!(ChainConfig::new(10, Variant::Gibbs, 1).thin(0).validate().is_err());
        assert_eq!("sandwich".parse::<Variant>().unwrap(), Variant::SandwichUniform);
        assert!("nuts".parse::<Variant>().is_err());
    }

    #[test]
    fn parallel_chains_match_sequential_runs() {
        let m = model(2, vec![vec![30, 10], vec![5, 25]], vec![2.0, 1.0]);
        let cfg = ChainConfig::new(200, Variant::SandwichUniform, 17);
        let inits = vec![ChainInit::Prior; 4];
        let par = run_chains(&cfg, &m, &inits).unwrap();
        for (c, trace) in par.iter().enumerate() {
            let seq = run_chain(&cfg.clone().stream(c as u64), &m, &ChainInit::Prior).unwrap();
            assert_eq!(&seq, trace);
        }
        assert_ne!(par[0], par[1]);
    }

    #[test]
    fn explicit_initial_ranks() {
        let m = model(2, vec![vec![40, 10], vec![14, 36]], vec![2.0, 1.0]);
        let cfg = ChainConfig::new(1, Variant::Gibbs, 3);
        let mut sampler = Sampler::new(&m);
        let state = sampler
            .initial_state(&ChainInit::Ranks(ranks(&[2, 1])), stream_rng(cfg.seed, 0))
            .unwrap();
        assert_eq!(state.pi, ranks(&[2, 1]));
        // θ | π = (ζ_2, ζ_1) puts θ_1 near 24/100
        assert!(state.theta.get(PermIndex::IDENTITY) < 0.5);
        assert!(sampler
            .initial_state(&ChainInit::Ranks(ranks(&[2])), stream_rng(1, 0))
            .is_err());
    }
}
