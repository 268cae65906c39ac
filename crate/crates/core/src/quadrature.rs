//! Adaptive 15-point Gauss–Kronrod quadrature for nonnegative integrands
//! given in log space.
//!
//! Integrands like `x^90 (1-x)^46 / r(x)` over/underflow long before their
//! integral does, so the caller supplies `ln f(x)`. Each panel subtracts its
//! own maximum before exponentiating and scales back afterwards.
//!
//! Endpoint singularities are not handled; integrands must stay bounded.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            initial_panels: 16,
            max_panels: 4000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(log_f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut logs = [0.0; 15];
    for (i, &x) in XGK.iter().enumerate() {
        if i == 7 {
            logs[14] = log_f(center);
        } else {
            logs[2 * i] = log_f(center - half * x);
            logs[2 * i + 1] = log_f(center + half * x);
        }
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Panel {
            lo,
            hi,
            value: 0.0,
            error: 0.0,
        };
    }
    let vals: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let mut kronrod = WGK[7] * vals[14];
    let mut gauss = WG[3] * vals[14];
    for i in 0..7 {
        let pair = vals[2 * i] + vals[2 * i + 1];
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    let scale = max.exp() * half;
    Panel {
        lo,
        hi,
        value: kronrod * scale,
        error: ((kronrod - gauss) * scale).abs(),
    }
}

/// `∫_lo^hi exp(log_f(x)) dx`.
pub fn integrate_log<F: Fn(f64) -> f64>(
    log_f: F,
    lo: f64,
    hi: f64,
    opts: QuadOptions,
) -> Result<QuadResult> {
    let n0 = opts.initial_panels.max(1);
    let width = (hi - lo) / n0 as f64;
    let mut heap = BinaryHeap::with_capacity(opts.max_panels + 2);
    for i in 0..n0 {
        let a = lo + width * i as f64;
        let b = if i + 1 == n0 { hi } else { a + width };
        heap.push(gauss_kronrod(&log_f, a, b));
    }
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::NonFinite("quadrature sum".into()));
        }
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(QuadResult {
                value,
                error,
                panels: heap.len(),
            });
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::Quadrature { tol: target, err: error });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            return Err(Error::Quadrature { tol: target, err: error });
        }
        heap.push(gauss_kronrod(&log_f, worst.lo, mid));
        heap.push(gauss_kronrod(&log_f, mid, worst.hi));
    }
}

/// `∫_lo^hi f(x) dx` for a nonnegative `f`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate_log(|x| f(x).ln(), lo, hi, opts)
}
