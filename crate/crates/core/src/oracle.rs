//! Exact answers for small instances.
//!
//! Joint states `(π_1, …, π_g)` are listed with `π_1` varying slowest, so for
//! `p = g = 2` the order is `(ζ1,ζ1), (ζ1,ζ2), (ζ2,ζ1), (ζ2,ζ2)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, Matrix};
use crate::model::{log_gamma_sum, m_counts_into, CentralRanks, HyperParams, PriorPi, RankCounts, RankModel};
use crate::permutation::{GroupTables, PermIndex};
use crate::quadrature::{integrate_log, QuadOptions};
use crate::rng::{dirichlet_into, stream_rng};
use crate::samplers::Sampler;
use crate::special::{beta_cdf, digamma, ln_beta, ln_gamma, log_sum_exp, trigamma};

/// Default cap on `(p!)^g` for enumeration.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;
/// Default cap for building full transition matrices.
pub const DEFAULT_KERNEL_CAP: usize = 36;

/// Number of joint states, or `CapExceeded`.
pub fn state_count(size: usize, categories: usize, cap: usize) -> Result<usize> {
    let states = (size as f64).powi(categories as i32);
    if states > cap as f64 {
        return Err(Error::CapExceeded { states, cap });
    }
    Ok(size.pow(categories as u32))
}

/// Position of `pi` in the joint listing.
pub fn state_index(pi: &CentralRanks, size: usize) -> usize {
    pi.ranks()
        .iter()
        .fold(0, |acc, k| acc * size + k.zero_based())
}

/// Inverse of [`state_index`].
pub fn state_ranks(mut index: usize, categories: usize, size: usize) -> CentralRanks {
    let mut ranks = vec![PermIndex::IDENTITY; categories];
    for slot in ranks.iter_mut().rev() {
        *slot = PermIndex::from_zero_based(index % size);
        index /= size;
    }
    CentralRanks::new(ranks)
}

/// `p(π | y, λ)` over every joint state.
#[derive(Clone, Debug)]
pub struct ExactPosteriorPi {
    size: usize,
    categories: usize,
    probs: Vec<f64>,
    /// `ln Σ_π p(π) Π_k Γ(m_k(π) + a_k)`
    log_norm: f64,
}

impl ExactPosteriorPi {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn state(&self, index: usize) -> CentralRanks {
        state_ranks(index, self.categories, self.size)
    }

    pub fn states(&self) -> Vec<CentralRanks> {
        (0..self.len()).map(|i| self.state(i)).collect()
    }

    pub fn prob(&self, pi: &CentralRanks) -> f64 {
        self.probs[state_index(pi, self.size)]
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// `P(π_j = ζ_k | y)` for every `k`.
    pub fn marginal(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        let stride = self.size.pow((self.categories - 1 - j) as u32);
        for (s, &p) in self.probs.iter().enumerate() {
            out[(s / stride) % self.size] += p;
        }
        out
    }

    /// `P(π_j ∈ A_j ∀ j | y)` for per-category boolean masks.
    pub fn event_prob(&self, masks: &[Vec<bool>]) -> f64 {
        let mut total = 0.0;
        for (s, &p) in self.probs.iter().enumerate() {
            let mut rest = s;
            let mut inside = true;
            for j in (0..self.categories).rev() {
                inside &= masks[j][rest % self.size];
                rest /= self.size;
            }
            if inside {
                total += p;
            }
        }
        total
    }
}

/// Enumerates and normalises `p(π | y, λ)`.
pub fn exact_posterior_pi(model: &RankModel, cap: usize) -> Result<ExactPosteriorPi> {
    let size = model.size();
    let g = model.categories();
    let q = state_count(size, g, cap)?;
    let mut logs = Vec::with_capacity(q);
    let mut m = vec![0u64; size];
    for s in 0..q {
        let pi = state_ranks(s, g, size);
        let lp = model.prior.log_prob(&pi);
        if lp == f64::NEG_INFINITY {
            logs.push(lp);
            continue;
        }
        m_counts_into(&pi, &model.counts, &model.tables, &mut m);
        logs.push(lp + log_gamma_sum(&m, model.hyper.weights()));
    }
    let log_norm = log_sum_exp(&logs);
    if !log_norm.is_finite() {
        return Err(Error::NonFinite("posterior normaliser".into()));
    }
    let probs = logs.iter().map(|l| (l - log_norm).exp()).collect();
    Ok(ExactPosteriorPi {
        size,
        categories: g,
        probs,
        log_norm,
    })
}

/// The posterior marginal of `θ_k` as a mixture of Beta densities, one per
/// distinct value of `m_k(π)`.
#[derive(Clone, Debug)]
pub struct ThetaMarginal {
    /// `(α, β, weight)`
    components: Vec<(f64, f64, f64)>,
}

impl ThetaMarginal {
    pub fn components(&self) -> &[(f64, f64, f64)] {
        &self.components
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let (lx, l1x) = (x.ln(), (1.0 - x).ln());
        self.components
            .iter()
            .map(|&(a, b, w)| w * ((a - 1.0) * lx + (b - 1.0) * l1x - ln_beta(a, b)).exp())
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|&(a, b, w)| w * beta_cdf(x, a, b))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }
}

pub fn theta_marginal(model: &RankModel, posterior: &ExactPosteriorPi, k: PermIndex) -> Result<ThetaMarginal> {
    model.tables.check(k)?;
    let k0 = k.zero_based();
    let n = model.counts.total() as f64;
    let a0 = model.hyper.total();
    let ak = model.hyper.weights()[k0];
    let mut by_m: std::collections::BTreeMap<u64, f64> = Default::default();
    let mut m = vec![0u64; model.size()];
    for (s, &p) in posterior.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        m_counts_into(&posterior.state(s), &model.counts, &model.tables, &mut m);
        *by_m.entry(m[k0]).or_default() += p;
    }
    let components = by_m
        .into_iter()
        .map(|(mk, w)| {
            let alpha = mk as f64 + ak;
            (alpha, n + a0 - alpha, w)
        })
        .collect();
    Ok(ThetaMarginal { components })
}

/// `p(θ_k | y, λ)` on a grid of points in `(0, 1)`.
pub fn exact_theta_marginal_density(
    model: &RankModel,
    k: PermIndex,
    grid: &[f64],
    cap: usize,
) -> Result<Vec<f64>> {
    let post = exact_posterior_pi(model, cap)?;
    let marginal = theta_marginal(model, &post, k)?;
    Ok(grid.iter().map(|&x| marginal.density(x)).collect())
}

/// Mixture moments of `ln θ` under `p(θ | y, λ)`.
#[derive(Clone, Debug)]
pub struct LogThetaMoments {
    /// `E(ln θ_k | y)`
    pub mean: Vec<f64>,
    /// `Var(Σ_k w_k ln θ_k | y)`
    pub weighted_var: f64,
}

pub fn exact_log_theta_moments(
    model: &RankModel,
    posterior: &ExactPosteriorPi,
    weights: &[f64],
) -> Result<LogThetaMoments> {
    let size = model.size();
    if weights.len() != size {
        return Err(Error::Dimension("need one weight per permutation".into()));
    }
    let a = model.hyper.weights();
    let a0 = model.hyper.total() + model.counts.total() as f64;
    let (dg0, tg0) = (digamma(a0), trigamma(a0));
    let wsum: f64 = weights.iter().sum();
    let mut mean = vec![0.0; size];
    let mut first = 0.0;
    let mut second = 0.0;
    let mut m = vec![0u64; size];
    for (s, &p) in posterior.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        m_counts_into(&posterior.state(s), &model.counts, &model.tables, &mut m);
        let mut e = 0.0;
        let mut v = -wsum * wsum * tg0;
        for k in 0..size {
            let alpha = m[k] as f64 + a[k];
            let el = digamma(alpha) - dg0;
            mean[k] += p * el;
            e += weights[k] * el;
            v += weights[k] * weights[k] * trigamma(alpha);
        }
        first += p * e;
        second += p * (v + e * e);
    }
    Ok(LogThetaMoments {
        mean,
        weighted_var: second - first * first,
    })
}

/// A row-stochastic matrix over the joint state listing.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    size: usize,
    categories: usize,
    matrix: Matrix,
}

impl TransitionMatrix {
    pub fn new(size: usize, categories: usize, matrix: Matrix) -> Result<Self> {
        if size.pow(categories as u32) != matrix.dim() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for {size}^{categories} states",
                matrix.dim(),
                matrix.dim()
            )));
        }
        Ok(TransitionMatrix {
            size,
            categories,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn state(&self, index: usize) -> CentralRanks {
        state_ranks(index, self.categories, self.size)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    /// Largest `|Σ_j K_ij − 1|`.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.dim())
            .map(|i| (self.matrix.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `self · other` (apply `self` first).
    pub fn then(&self, other: &TransitionMatrix) -> Result<TransitionMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension("kernels over different state lists".into()));
        }
        TransitionMatrix::new(self.size, self.categories, self.matrix.mul(&other.matrix))
    }

    /// `max_j |(μᵀ K)_j − μ_j|`.
    pub fn invariance_error(&self, mu: &[f64]) -> f64 {
        self.matrix
            .left_apply(mu)
            .iter()
            .zip(mu)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `max |μ_i K_ij − μ_j K_ji|`.
    pub fn reversibility_error(&self, mu: &[f64]) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((mu[i] * self.get(i, j) - mu[j] * self.get(j, i)).abs());
            }
        }
        worst
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        initial_panels: 32,
        max_panels: 20_000,
    }
}

/// The DA kernel on `(π_1, π_2)` for `p = g = 2` from the closed-form
/// integrals: entry `(s, t)` integrates
/// `prefactor(s) · r(x) · x^{m(s)+m(t)+a_1−1} (1−x)^{m'(s)+m'(t)+a_2−1}`
/// where `m(s)` counts identity perturbations in state `s` and `m' = N − m`.
pub fn build_k_pi(counts: &RankCounts, hyper: &HyperParams) -> Result<TransitionMatrix> {
    if counts.items() != 2 || counts.categories() != 2 {
        return Err(Error::InvalidArgument(
            "the closed-form kernel needs p = 2 and g = 2".into(),
        ));
    }
    if hyper.weights().len() != 2 {
        return Err(Error::Dimension("need two Dirichlet weights".into()));
    }
    let (n11, n21) = (counts.category(0)[0] as f64, counts.category(0)[1] as f64);
    let (n12, n22) = (counts.category(1)[0] as f64, counts.category(1)[1] as f64);
    let n1 = n11 + n12;
    let n2 = n21 + n22;
    let nd = n11 + n22;
    let nod = n12 + n21;
    let n = n1 + n2;
    let (a1, a2) = (hyper.weights()[0], hyper.weights()[1]);
    // identity-perturbation counts of (ζ1,ζ1), (ζ1,ζ2), (ζ2,ζ1), (ζ2,ζ2)
    let m1 = [n1, nd, nod, n2];
    let log_prefactor: Vec<f64> = m1.iter().map(|&m| -ln_beta(m + a1, n - m + a2)).collect();
    let log_r = |lx: f64, l1x: f64| {
        -log_sum_exp(&[
            n1 * lx + n2 * l1x,
            n2 * lx + n1 * l1x,
            nd * lx + nod * l1x,
            nod * lx + nd * l1x,
        ])
    };
    let mut k = Matrix::zeros(4);
    for s in 0..4 {
        for t in 0..4 {
            let e1 = m1[s] + m1[t];
            let e2 = 2.0 * n - e1;
            let lp = log_prefactor[s];
            let res = integrate_log(
                |x: f64| {
                    let (lx, l1x) = (x.ln(), (1.0 - x).ln());
                    lp + log_r(lx, l1x) + (e1 + a1 - 1.0) * lx + (e2 + a2 - 1.0) * l1x
                },
                0.0,
                1.0,
                quad_opts(),
            )?;
            k[(s, t)] = res.value;
        }
    }
    TransitionMatrix::new(2, 2, k)
}

/// Options for [`build_k_pi_general`].
#[derive(Clone, Copy, Debug)]
pub struct KernelOptions {
    pub cap: usize,
    /// Conditional `θ` draws per row when no exact route exists (`p ≥ 3`).
    pub mc_draws: usize,
    pub seed: u64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            cap: DEFAULT_KERNEL_CAP,
            mc_draws: 1_000_000,
            seed: 0,
        }
    }
}

/// `K(π_a → π_b) = ∫ p(π_b | θ, y) p(θ | π_a, y) dθ` for any `g` and prior.
///
/// For `p = 2` the integral is one-dimensional and done by quadrature; for
/// larger `p` it is a Monte Carlo average over `θ ~ p(θ | π_a, y)`.
pub fn build_k_pi_general(model: &RankModel, opts: KernelOptions) -> Result<TransitionMatrix> {
    let size = model.size();
    let g = model.categories();
    let q = state_count(size, g, opts.cap)?;
    let matrix = if size == 2 {
        k_pi_by_quadrature(model, q)?
    } else {
        k_pi_by_monte_carlo(model, q, opts)?
    };
    TransitionMatrix::new(size, g, matrix)
}

fn k_pi_by_quadrature(model: &RankModel, q: usize) -> Result<Matrix> {
    let g = model.categories();
    let a = model.hyper.weights();
    let n = model.counts.total() as f64;
    let mut m1 = Vec::with_capacity(q);
    let mut log_prior = Vec::with_capacity(q);
    let mut m = vec![0u64; 2];
    for s in 0..q {
        let pi = state_ranks(s, g, 2);
        m_counts_into(&pi, &model.counts, &model.tables, &mut m);
        m1.push(m[0] as f64);
        log_prior.push(model.prior.log_prob(&pi));
    }
    let mut k = Matrix::zeros(q);
    for s in 0..q {
        let (alpha, beta) = (m1[s] + a[0], n - m1[s] + a[1]);
        let lb = ln_beta(alpha, beta);
        for t in 0..q {
            if log_prior[t] == f64::NEG_INFINITY {
                continue;
            }
            let res = integrate_log(
                |x: f64| {
                    let (lx, l1x) = (x.ln(), (1.0 - x).ln());
                    let log_denominator = log_sum_exp_by(q, |c| log_prior[c] + m1[c] * lx + (n - m1[c]) * l1x);
                    (alpha - 1.0) * lx + (beta - 1.0) * l1x - lb + log_prior[t] + m1[t] * lx
                        + (n - m1[t]) * l1x
                        - log_denominator
                },
                0.0,
                1.0,
                quad_opts(),
            )?;
            k[(s, t)] = res.value;
        }
    }
    Ok(k)
}

fn log_sum_exp_by(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    let max = (0..n).map(&f).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + (0..n).map(|c| (f(c) - max).exp()).sum::<f64>().ln()
}

fn k_pi_by_monte_carlo(model: &RankModel, q: usize, opts: KernelOptions) -> Result<Matrix> {
    let size = model.size();
    let g = model.categories();
    let rows: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..q)
            .map(|s| {
                scope.spawn(move || -> Result<Vec<f64>> {
                    let mut sampler = Sampler::new(model);
                    let mut rng = stream_rng(opts.seed, s as u64);
                    let pi = state_ranks(s, g, size);
                    let mut m = vec![0u64; size];
                    m_counts_into(&pi, &model.counts, &model.tables, &mut m);
                    let shapes: Vec<f64> = m
                        .iter()
                        .zip(model.hyper.weights())
                        .map(|(&mk, &ak)| mk as f64 + ak)
                        .collect();
                    let mut theta = vec![0.0; size];
                    let mut gammas = vec![vec![0.0; size]; g];
                    let mut row = vec![0.0; q];
                    for _ in 0..opts.mc_draws {
                        dirichlet_into(&shapes, &mut rng, &mut theta);
                        sampler.set_theta(&theta);
                        for (j, gj) in gammas.iter_mut().enumerate() {
                            sampler.conditional_cached(j, gj)?;
                        }
                        for (t, slot) in row.iter_mut().enumerate() {
                            let mut rest = t;
                            let mut prod = 1.0;
                            for j in (0..g).rev() {
                                prod *= gammas[j][rest % size];
                                rest /= size;
                            }
                            *slot += prod;
                        }
                    }
                    let scale = 1.0 / opts.mc_draws as f64;
                    row.iter_mut().for_each(|v| *v *= scale);
                    Ok(row)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("kernel row thread panicked"))
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows)
}

/// Metropolis kernel of the inserted move: propose `σ ∘ π` with `σ`
/// uniform on `S_p`, accept with `min(1, p(σ∘π | y) / p(π | y))`.
pub fn build_r(posterior: &ExactPosteriorPi, tables: &GroupTables) -> Result<TransitionMatrix> {
    let weights = vec![1.0 / tables.size() as f64; tables.size()];
    build_mh_kernel(posterior, tables, &weights)
}

/// The same kernel with the local proposal `q(τ) ∝ a_τ`, `q(identity) = 0`.
pub fn build_r_local(
    posterior: &ExactPosteriorPi,
    tables: &GroupTables,
    hyper: &HyperParams,
) -> Result<TransitionMatrix> {
    let mut weights = hyper.weights().to_vec();
    weights[0] = 0.0;
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("local proposal has no mass".into()));
    }
    weights.iter_mut().for_each(|w| *w /= total);
    build_mh_kernel(posterior, tables, &weights)
}

fn build_mh_kernel(posterior: &ExactPosteriorPi, tables: &GroupTables, q: &[f64]) -> Result<TransitionMatrix> {
    let size = posterior.size();
    let g = posterior.categories();
    if tables.size() != size {
        return Err(Error::Dimension("tables do not match the posterior".into()));
    }
    let n = state_count(size, g, DEFAULT_STATE_CAP)?;
    if n > 1 << 14 {
        return Err(Error::CapExceeded {
            states: n as f64,
            cap: 1 << 14,
        });
    }
    let probs = posterior.probs();
    let mut r = Matrix::zeros(n);
    for s in 0..n {
        let pi = posterior.state(s);
        for (k0, &w) in q.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let t = state_index(&pi.left_multiply(PermIndex::from_zero_based(k0), tables), size);
            let ratio = q[tables.inverse0(k0)] * probs[t] / (w * probs[s]);
            let acc = if probs[s] == 0.0 { 1.0 } else { ratio.min(1.0) };
            r[(s, t)] += w * acc;
            r[(s, s)] += w * (1.0 - acc);
        }
    }
    TransitionMatrix::new(size, g, r)
}

fn symmetrized(k: &TransitionMatrix, stationary: &[f64]) -> Result<Matrix> {
    if stationary.len() != k.dim() {
        return Err(Error::Dimension("stationary vector length".into()));
    }
    if stationary.iter().any(|&p| p <= 0.0) {
        return Err(Error::InvalidArgument(
            "stationary distribution must be strictly positive".into(),
        ));
    }
    let asym = k.reversibility_error(stationary);
    if asym > 1e-8 {
        return Err(Error::NotReversible(asym));
    }
    // for a reversible kernel sqrt(μ_i/μ_j) K_ij = sqrt(K_ij K_ji); the
    // product form avoids dividing by tiny stationary masses
    let n = k.dim();
    let mut s = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = if i == j {
                k.get(i, i)
            } else {
                (k.get(i, j) * k.get(j, i)).sqrt()
            };
        }
    }
    Ok(s)
}

fn descending(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Eigenvalues of a reversible kernel, largest first. The symmetrised form
/// `D^{1/2} K D^{-1/2}` is diagonalised by cyclic Jacobi rotations.
pub fn spectrum(k: &TransitionMatrix, stationary: &[f64]) -> Result<Vec<f64>> {
    let s = symmetrized(k, stationary)?;
    Ok(descending(jacobi_eigen(&s, 1e-12)?.values))
}

#[derive(Clone, Debug)]
pub struct SpectrumComparison {
    /// Spectrum of the DA kernel.
    pub rho: Vec<f64>,
    /// Spectrum of the sandwich kernel `R · K`.
    pub rho_tilde: Vec<f64>,
}

impl SpectrumComparison {
    /// `max_i (ρ̃_i − ρ_i)`; nonpositive when dominance holds.
    pub fn max_excess(&self) -> f64 {
        self.rho_tilde
            .iter()
            .zip(&self.rho)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_dominance(&self, tol: f64) -> Result<()> {
        let excess = self.max_excess();
        if excess > tol {
            Err(Error::DominanceViolation(excess))
        } else {
            Ok(())
        }
    }
}

/// Spectra of `K` and of `R · K`. Both kernels must be reversible with
/// respect to `stationary`; the eigenvalues of `R · K` are those of the
/// symmetric matrix `S_K^{1/2} S_R S_K^{1/2}`.
pub fn sandwich_spectrum_compare(
    k: &TransitionMatrix,
    r: &TransitionMatrix,
    stationary: &[f64],
) -> Result<SpectrumComparison> {
    let sk = symmetrized(k, stationary)?;
    let sr = symmetrized(r, stationary)?;
    let eig = jacobi_eigen(&sk, 1e-13)?;
    let n = sk.dim();
    let mut root = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            root[(i, j)] = (0..n)
                .map(|c| eig.vectors[(i, c)] * eig.values[c].max(0.0).sqrt() * eig.vectors[(j, c)])
                .sum();
        }
    }
    let m = root.mul(&sr).mul(&root);
    let rho_tilde = descending(jacobi_eigen(&m, 1e-12)?.values);
    Ok(SpectrumComparison {
        rho: descending(eig.values),
        rho_tilde,
    })
}

/// `ln c_λ(y)`: the marginal likelihood of the ordered rankings.
pub fn log_marginal_likelihood(model: &RankModel, cap: usize) -> Result<f64> {
    let post = exact_posterior_pi(model, cap)?;
    let a = model.hyper.weights();
    let a0 = model.hyper.total();
    let n = model.counts.total() as f64;
    Ok(post.log_norm() - ln_gamma(n + a0) + ln_gamma(a0) - a.iter().map(|&v| ln_gamma(v)).sum::<f64>())
}

/// [`log_marginal_likelihood`] at `a_k = exp(λ |ζ_k|)`.
pub fn log_marginal_likelihood_at(
    tables: &Arc<GroupTables>,
    counts: &RankCounts,
    prior: &PriorPi,
    lambda: f64,
) -> Result<f64> {
    let hyper = HyperParams::from_lambda(lambda, tables)?;
    let model = RankModel::new(tables.clone(), counts.clone(), hyper, prior.clone())?;
    log_marginal_likelihood(&model, DEFAULT_STATE_CAP)
}

/// The same quantity for `p = 2` by quadrature over `θ_1` and enumeration
/// over `π`, independent of the Gamma-function identity.
pub fn log_marginal_likelihood_quadrature(model: &RankModel, cap: usize) -> Result<f64> {
    if model.size() != 2 {
        return Err(Error::InvalidArgument("quadrature route needs p = 2".into()));
    }
    let g = model.categories();
    let q = state_count(2, g, cap)?;
    let (a1, a2) = (model.hyper.weights()[0], model.hyper.weights()[1]);
    let n = model.counts.total() as f64;
    let mut m = vec![0u64; 2];
    let mut logs = Vec::with_capacity(q);
    for s in 0..q {
        let pi = state_ranks(s, g, 2);
        let lp = model.prior.log_prob(&pi);
        if lp == f64::NEG_INFINITY {
            continue;
        }
        m_counts_into(&pi, &model.counts, &model.tables, &mut m);
        let m1 = m[0] as f64;
        let res = integrate_log(
            |x: f64| {
                let (lx, l1x) = (x.ln(), (1.0 - x).ln());
                (m1 + a1 - 1.0) * lx + (n - m1 + a2 - 1.0) * l1x - ln_beta(a1, a2)
            },
            0.0,
            1.0,
            quad_opts(),
        )?;
        logs.push(lp + res.value.ln());
    }
    Ok(log_sum_exp(&logs))
}
