//! Adaptive Gauss-Kronrod quadrature and a few fixed Gauss-Legendre rules.
//!
//! The integrands of this crate have integrable peaks of width `sqrt(eps)`
//! at the wells of the potential. [`integrate_near_wells`] splits the
//! interval at the wells and maps the pieces adjacent to a well through
//! `s = w ± h sinh(u)`, which flattens the peak before the adaptive rule
//! sees it.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

// 15-point Kronrod abscissae (non-negative half) and weights; the odd
// entries are the 7-point Gauss abscissae.
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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss-Legendre rule on [0, 1]: (abscissa, weight) pairs.
pub const GAUSS3_UNIT: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

pub const GAUSS4_UNIT: [(f64, f64); 4] = [
    (0.069_431_844_202_973_71, 0.173_927_422_568_726_93),
    (0.330_009_478_207_571_87, 0.326_072_577_431_273_07),
    (0.669_990_521_792_428_1, 0.326_072_577_431_273_07),
    (0.930_568_155_797_026_3, 0.173_927_422_568_726_93),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7-K15 quadrature: the segment with the largest error
/// estimate is bisected until the summed estimate meets the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        };
    }
    let (value, error) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut evaluations = 15;

    while total_err > opts.abs_tol.max(opts.rel_tol * total.abs()) && heap.len() < opts.max_intervals
    {
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        evaluations += 30;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to drop accumulated cancellation from the running totals.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    QuadResult {
        value,
        error,
        evaluations,
    }
}

/// A well of the integrand: location and the width `h` of its peak.
#[derive(Debug, Clone, Copy)]
pub struct Peak {
    pub at: f64,
    pub width: f64,
}

/// Integrate `f` over `[lo, hi]` where `f` has sharp but integrable peaks.
///
/// Pieces of length up to `reach` on either side of each peak are mapped
/// through `s = at ± width·sinh(u)`; everything else goes straight to
/// [`integrate`].
pub fn integrate_near_wells<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    peaks: &[Peak],
    reach: f64,
    opts: QuadOptions,
) -> QuadResult {
    if lo == hi {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        };
    }
    let (lo, hi, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };

    // Breakpoints: interval ends, peaks, and peak ± reach, clipped.
    let mut cuts = vec![lo, hi];
    for p in peaks {
        for x in [p.at - reach, p.at, p.at + reach] {
            if x > lo && x < hi {
                cuts.push(x);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut total = QuadResult {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in cuts.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        // A piece is mapped if one of its ends sits on a peak (or the peak
        // lies just outside, within reach).
        let left = peaks
            .iter()
            .filter(|p| p.width > 0.0 && p.at <= x0 && x0 - p.at < reach)
            .min_by(|p, q| (x0 - p.at).total_cmp(&(x0 - q.at)));
        let right = peaks
            .iter()
            .filter(|p| p.width > 0.0 && p.at >= x1 && p.at - x1 < reach)
            .min_by(|p, q| (p.at - x1).total_cmp(&(q.at - x1)));
        let piece = match (left, right) {
            (Some(p), _) => {
                let (h, c) = (p.width, p.at);
                let u0 = ((x0 - c) / h).asinh();
                let u1 = ((x1 - c) / h).asinh();
                integrate(|u| f(c + h * u.sinh()) * h * u.cosh(), u0, u1, opts)
            }
            (None, Some(p)) => {
                let (h, c) = (p.width, p.at);
                let u0 = ((c - x1) / h).asinh();
                let u1 = ((c - x0) / h).asinh();
                integrate(|u| f(c - h * u.sinh()) * h * u.cosh(), u0, u1, opts)
            }
            (None, None) => integrate(&f, x0, x1, opts),
        };
        total.value += piece.value;
        total.error += piece.error;
        total.evaluations += piece.evaluations;
    }
    total.value *= sign;
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, QuadOptions::default());
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, QuadOptions::with_abs_tol(1e-10));
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn sharp_peak_with_sinh_map() {
        // ∫_{-1}^{1} 1/sqrt(e + x²) dx = 2 asinh(1/sqrt(e))
        let e: f64 = 1e-12;
        let exact = 2.0 * (1.0 / e.sqrt()).asinh();
        let r = integrate_near_wells(
            |x| 1.0 / (e + x * x).sqrt(),
            -1.0,
            1.0,
            &[Peak {
                at: 0.0,
                width: e.sqrt(),
            }],
            0.5,
            QuadOptions::default(),
        );
        assert!((r.value - exact).abs() < 1e-10 * exact, "{} vs {}", r.value, exact);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let f = |x: f64| x.exp();
        let fwd = integrate_near_wells(f, 0.0, 1.0, &[], 0.1, QuadOptions::default());
        let bwd = integrate_near_wells(f, 1.0, 0.0, &[], 0.1, QuadOptions::default());
        assert!((fwd.value + bwd.value).abs() < 1e-14);
    }

    #[test]
    fn gauss_rules_integrate_polynomials() {
        let g3: f64 = GAUSS3_UNIT.iter().map(|(x, w)| w * x.powi(5)).sum();
        assert!((g3 - 1.0 / 6.0).abs() < 1e-15);
        let g4: f64 = GAUSS4_UNIT.iter().map(|(x, w)| w * x.powi(7)).sum();
        assert!((g4 - 1.0 / 8.0).abs() < 1e-15);
    }
}
