//! Random number plumbing.
//!
//! Every chain owns a `ChaCha8Rng` keyed by the user seed and a stream id
//! (the chain number), so parallel chains reproduce regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

pub type ChainRng = ChaCha8Rng;

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Running sums of a pmf; the last entry is the total mass.
pub fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// CDF inversion: smallest index whose cumulative mass exceeds `u · total`.
pub fn categorical_from_probs<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let total = *cdf.last().expect("non-empty cdf");
    let u = rng.random::<f64>() * total;
    invert_cdf(cdf, u)
}

pub(crate) fn invert_cdf(cdf: &[f64], u: f64) -> usize {
    // first index with cdf > u; falls back to the last positive-mass index
    let i = cdf.partition_point(|&c| c <= u);
    if i < cdf.len() {
        i
    } else {
        let total = cdf[cdf.len() - 1];
        cdf.iter().position(|&c| c >= total).unwrap_or(cdf.len() - 1)
    }
}

/// Normalises log-weights into `out` after max-subtraction.
/// Returns `false` if every weight is `-inf`.
pub fn normalize_log_weights(log_w: &[f64], out: &mut [f64]) -> bool {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return false;
    }
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(log_w) {
        *o = (l - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
    true
}

/// Dirichlet draw as normalised independent Gamma(shape, 1) variates.
///
/// Shapes below 1 use the boost `G(a) = G(a + 1) · U^{1/a}` inside `rand_distr`.
pub fn dirichlet_into<R: Rng + ?Sized>(shapes: &[f64], rng: &mut R, out: &mut [f64]) {
    loop {
        let mut total = 0.0;
        for (o, &s) in out.iter_mut().zip(shapes) {
            let g = Gamma::new(s, 1.0).expect("positive Dirichlet shape");
            *o = g.sample(rng);
            total += *o;
        }
        if total > 0.0 && total.is_finite() {
            out.iter_mut().for_each(|o| *o /= total);
            return;
        }
        // every variate underflowed (all shapes tiny); redraw
    }
}

pub fn dirichlet<R: Rng + ?Sized>(shapes: &[f64], rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; shapes.len()];
    dirichlet_into(shapes, rng, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(1, 0).random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let mut r0 = stream_rng(1, 0);
        let mut r1 = stream_rng(1, 1);
        assert_ne!(r0.random::<u64>(), r1.random::<u64>());
    }

    #[test]
    fn invert_cdf_ties_go_to_lowest_index() {
        let cdf = cumulative(&[0.5, 0.0, 0.5]);
        assert_eq!(invert_cdf(&cdf, 0.0), 0);
        assert_eq!(invert_cdf(&cdf, 0.4999), 0);
        assert_eq!(invert_cdf(&cdf, 0.5), 2);
        assert_eq!(invert_cdf(&cdf, 1.0), 2);
        let point = cumulative(&[0.0, 1.0, 0.0]);
        assert_eq!(invert_cdf(&point, 0.0), 1);
        assert_eq!(invert_cdf(&point, 1.0), 1);
    }

    #[test]
    fn normalize_handles_extreme_logs() {
        let mut out = [0.0; 3];
        assert!(normalize_log_weights(&[-1e3, -1e3 + 2f64.ln(), f64::NEG_INFINITY], &mut out));
        assert!((out[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((out[1] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(out[2], 0.0);
        assert!(!normalize_log_weights(&[f64::NEG_INFINITY; 3], &mut out));
    }

    #[test]
    fn dirichlet_mean_three_one() {
        let mut rng = stream_rng(11, 0);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| dirichlet(&[3.0, 1.0], &mut rng)[0]).sum::<f64>() / n as f64;
        assert!((mean - 0.75).abs() < 0.005, "{mean}");
    }

    #[test]
    fn dirichlet_concentrates_with_dominant_shape() {
        let mut rng = stream_rng(12, 0);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| dirichlet(&[1000.0, 1.0], &mut rng)[0] > 0.99)
            .count();
        assert!(hits as f64 / n as f64 >= 0.95, "{hits}");
    }

    #[test]
    fn dirichlet_symmetric_large_shapes() {
        let mut rng = stream_rng(13, 0);
        let n = 20_000;
        let mut sums = [0.0; 6];
        for _ in 0..n {
            let d = dirichlet(&[500.0; 6], &mut rng);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (s, v) in sums.iter_mut().zip(d) {
                *s += v;
            }
        }
        for s in sums {
            assert!((s / n as f64 - 1.0 / 6.0).abs() < 1e-3);
        }
    }

    #[test]
    fn dirichlet_small_shapes_are_valid() {
        let mut rng = stream_rng(14, 0);
        let n = 50_000;
        let mut mean = 0.0;
        for _ in 0..n {
            let d = dirichlet(&[0.01, 0.03], &mut rng);
            assert!(d.iter().all(|v| v.is_finite() && *v >= 0.0));
            mean += d[0];
        }
        assert!((mean / n as f64 - 0.25).abs() < 0.01);
    }
}
