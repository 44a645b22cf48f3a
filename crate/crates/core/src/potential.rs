//! Double-well potentials, their standing hypotheses, and the derived
//! constants (σ, δ_η) that the rest of the crate consumes.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A polynomial piece `Σ c_k s^k` valid on `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyPiece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// User supplied potential with hand-written derivatives.
pub struct CustomPotential {
    pub w: Box<ScalarFn>,
    pub dw: Box<ScalarFn>,
    pub d2w: Box<ScalarFn>,
}

#[derive(Clone)]
pub enum PotentialKind {
    /// `(s-a)²(s-b)²`
    Quartic,
    /// Ascending coefficients.
    Polynomial(Vec<f64>),
    /// Pieces sorted by `lo`; the first and last pieces extend to ±∞.
    Piecewise(Vec<PolyPiece>),
    Custom(Arc<CustomPotential>),
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quartic => write!(f, "Quartic"),
            Self::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Self::Piecewise(p) => write!(f, "Piecewise({} pieces)", p.len()),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

fn poly_eval(c: &[f64], s: f64, order: usize) -> f64 {
    // Horner on the `order`-th derivative.
    let mut acc = 0.0;
    for k in (order..c.len()).rev() {
        let mut factor = 1.0;
        for j in 0..order {
            factor *= (k - j) as f64;
        }
        acc = acc * s + c[k] * factor;
    }
    acc
}

/// The double-well potential `W` with wells `a < b`, saddle `c`, and the
/// reference levels `α₋`, `β₋`.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    /// Overall multiplicative factor applied to `W` and its derivatives.
    pub scale: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Declared Hölder exponent of `W''`; metadata only.
    pub holder_exponent: f64,
    pub alpha_minus: f64,
    pub beta_minus: f64,
    /// Number of samples on `[a-1, b+1]` used by the hypothesis checks.
    pub sample_resolution: usize,
}

fn default_levels(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let lo = c.min(mid);
    let hi = c.max(mid);
    (a + 0.5 * (lo - a), b - 0.5 * (b - hi))
}

impl PotentialSpec {
    /// `W(s) = (1 - s²)²`, wells ±1, saddle 0, `α₋ = -1/2`, `β₋ = 1/2`.
    pub fn quartic() -> Self {
        Self::asym_quartic(-1.0, 1.0)
    }

    /// `W(s) = (s-a)²(s-b)²` with saddle at the midpoint.
    pub fn asym_quartic(a: f64, b: f64) -> Self {
        let c = 0.5 * (a + b);
        let (am, bm) = default_levels(a, b, c);
        Self {
            kind: PotentialKind::Quartic,
            scale: 1.0,
            a,
            b,
            c,
            holder_exponent: 0.5,
            alpha_minus: am,
            beta_minus: bm,
            sample_resolution: 10_000,
        }
    }

    pub fn polynomial(coeffs: Vec<f64>, a: f64, b: f64, c: f64) -> Self {
        Self::with_kind(PotentialKind::Polynomial(coeffs), a, b, c)
    }

    pub fn piecewise(mut pieces: Vec<PolyPiece>, a: f64, b: f64, c: f64) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Config("piecewise potential needs at least one piece".into()));
        }
        pieces.sort_by(|p, q| p.lo.total_cmp(&q.lo));
        Ok(Self::with_kind(PotentialKind::Piecewise(pieces), a, b, c))
    }

    pub fn custom(custom: CustomPotential, a: f64, b: f64, c: f64) -> Self {
        Self::with_kind(PotentialKind::Custom(Arc::new(custom)), a, b, c)
    }

    fn with_kind(kind: PotentialKind, a: f64, b: f64, c: f64) -> Self {
        let (am, bm) = default_levels(a, b, c);
        Self {
            kind,
            scale: 1.0,
            a,
            b,
            c,
            holder_exponent: 0.5,
            alpha_minus: am,
            beta_minus: bm,
            sample_resolution: 10_000,
        }
    }

    /// The same potential multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale *= factor;
        out
    }

    pub fn with_levels(mut self, alpha_minus: f64, beta_minus: f64) -> Self {
        self.alpha_minus = alpha_minus;
        self.beta_minus = beta_minus;
        self
    }

    fn eval(&self, s: f64, order: usize) -> f64 {
        let raw = match &self.kind {
            PotentialKind::Quartic => {
                let (p, q) = (s - self.a, s - self.b);
                match order {
                    0 => p * p * q * q,
                    1 => 2.0 * p * q * (p + q),
                    _ => 2.0 * (p * p + 4.0 * p * q + q * q),
                }
            }
            PotentialKind::Polynomial(c) => poly_eval(c, s, order),
            PotentialKind::Piecewise(pieces) => {
                let idx = pieces
                    .iter()
                    .rposition(|p| s >= p.lo)
                    .unwrap_or(0);
                poly_eval(&pieces[idx].coeffs, s, order)
            }
            PotentialKind::Custom(fns) => match order {
                0 => (fns.w)(s),
                1 => (fns.dw)(s),
                _ => (fns.d2w)(s),
            },
        };
        self.scale * raw
    }

    #[inline]
    pub fn w(&self, s: f64) -> f64 {
        self.eval(s, 0)
    }

    #[inline]
    pub fn dw(&self, s: f64) -> f64 {
        self.eval(s, 1)
    }

    #[inline]
    pub fn d2w(&self, s: f64) -> f64 {
        self.eval(s, 2)
    }

    /// `W(s)`, or an evaluation error naming the abscissa.
    pub fn try_w(&self, s: f64) -> Result<f64> {
        let v = self.w(s);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation {
                what: "W",
                abscissa: s,
                value: v,
            })
        }
    }

    /// `√W` with negative round-off clipped.
    #[inline]
    pub fn sqrt_w(&self, s: f64) -> f64 {
        self.w(s).max(0.0).sqrt()
    }

    /// `1/(√2 √W''(a))`, the coefficient of `|log ε|` near the well `a`.
    pub fn log_constant_a(&self) -> f64 {
        1.0 / (2.0f64.sqrt() * self.d2w(self.a).sqrt())
    }

    pub fn log_constant_b(&self) -> f64 {
        1.0 / (2.0f64.sqrt() * self.d2w(self.b).sqrt())
    }

    /// Largest `|W'|` on `[a, b]` over the sample grid.
    pub fn dw_scale(&self) -> f64 {
        let n = self.sample_resolution.max(16);
        (0..=n)
            .map(|i| self.a + (self.b - self.a) * i as f64 / n as f64)
            .map(|s| self.dw(s).abs())
            .fold(0.0, f64::max)
    }

    fn sample_grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.a - 1.0, self.b + 1.0);
        let n = self.sample_resolution.max(16);
        let mut g: Vec<f64> = (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect();
        g.extend([self.a, self.b, self.c]);
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }
}

/// Outcome of one hypothesis check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    /// A violating sample point when the check failed.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn ensure(&self) -> Result<()> {
        match self.checks.iter().find(|c| !c.passed) {
            None => Ok(()),
            Some(c) => Err(Error::Hypothesis(format!(
                "{} failed ({}){}",
                c.name,
                c.detail,
                c.witness.map(|w| format!(" at s = {w}")).unwrap_or_default()
            ))),
        }
    }
}

fn check(name: &'static str, witness: Option<f64>, detail: impl Into<String>) -> HypothesisCheck {
    HypothesisCheck {
        name,
        passed: witness.is_none(),
        witness,
        detail: detail.into(),
    }
}

/// Check the standing hypotheses on a dense sample grid of `[a-1, b+1]`.
pub fn validate_hypotheses(spec: &PotentialSpec) -> Result<HypothesisReport> {
    let (a, b, c) = (spec.a, spec.b, spec.c);
    let grid = spec.sample_grid();
    let mut values = Vec::with_capacity(grid.len());
    for &s in &grid {
        values.push(spec.try_w(s)?);
    }
    let w_max = values.iter().cloned().fold(0.0, f64::max).max(1.0);
    let zero_tol = 1e-12 * w_max;
    let mut checks = Vec::new();

    // W(a) = W(b) = 0 and W > 0 elsewhere.
    let mut bad = None;
    for (&s, &w) in grid.iter().zip(&values) {
        let is_well = s == a || s == b;
        if (is_well && w.abs() > zero_tol) || (!is_well && w <= 0.0) || w < -zero_tol {
            bad = Some(s);
            break;
        }
    }
    checks.push(check(
        "W_Smooth",
        bad,
        "W vanishes exactly at a and b and is positive elsewhere",
    ));

    let wa = spec.d2w(a);
    let wb = spec.d2w(b);
    let bad = if !(wa > 0.0) {
        Some(a)
    } else if !(wb > 0.0) {
        Some(b)
    } else {
        None
    };
    checks.push(check(
        "WPrime_At_Wells",
        bad,
        format!("W''(a) = {wa}, W''(b) = {wb}"),
    ));

    let far = a.abs() + b.abs() + 10.0;
    let (dl, dr) = (spec.dw(-far), spec.dw(far));
    let inner = spec.dw_scale();
    let bad = if !(dl < 0.0 && dl.abs() > inner) {
        Some(-far)
    } else if !(dr > 0.0 && dr > inner) {
        Some(far)
    } else {
        None
    };
    checks.push(check(
        "WGurtin_Assumption",
        bad,
        format!("W'(-R) = {dl}, W'(R) = {dr}, R = {far}"),
    ));

    // Sign pattern -, +, -, + of W' separated by a, c, b.
    let mut bad = None;
    for &s in &grid {
        if s == a || s == b || s == c {
            continue;
        }
        let d = spec.dw(s);
        let want_positive = (s > a && s < c) || s > b;
        if (want_positive && !(d > 0.0)) || (!want_positive && !(d < 0.0)) {
            bad = Some(s);
            break;
        }
    }
    if bad.is_none() && !(spec.d2w(c) < 0.0) {
        bad = Some(c);
    }
    if bad.is_none() && !(a < c && c < b) {
        bad = Some(c);
    }
    checks.push(check(
        "W_Prime_Three_Zeroes",
        bad,
        "W' has exactly the zeros a < c < b and W''(c) < 0",
    ));

    let mid = 0.5 * (a + b);
    let (am, bm) = (spec.alpha_minus, spec.beta_minus);
    let ordered = a < am && am < c.min(mid) && c.max(mid) < bm && bm < b;
    checks.push(check(
        "Alpha_Beta_Minus",
        if ordered { None } else { Some(am) },
        format!("a < α₋ = {am} < min(c,(a+b)/2) ≤ max(c,(a+b)/2) < β₋ = {bm} < b"),
    ));

    Ok(HypothesisReport { checks })
}

fn quadratic_comparison_holds(spec: &PotentialSpec, sigma: f64) -> bool {
    let n = spec.sample_resolution.max(16);
    let s2 = sigma * sigma;
    let near_b = (0..=n).map(|i| spec.alpha_minus + (spec.b + 1.0 - spec.alpha_minus) * i as f64 / n as f64);
    for s in near_b {
        let d2 = (spec.b - s) * (spec.b - s);
        let w = spec.w(s);
        if s2 * d2 > w || w * s2 > d2 {
            return false;
        }
    }
    let near_a = (0..=n).map(|i| spec.a - 1.0 + (spec.beta_minus - spec.a + 1.0) * i as f64 / n as f64);
    for s in near_a {
        let d2 = (s - spec.a) * (s - spec.a);
        let w = spec.w(s);
        if s2 * d2 > w || w * s2 > d2 {
            return false;
        }
    }
    true
}

/// Largest σ (to dyadic resolution) with
/// `σ²(b-s)² ≤ W(s) ≤ σ⁻²(b-s)²` on `[α₋, b+1]` and the mirrored bound on
/// `[a-1, β₋]`, both checked on the sample grid.
pub fn sigma_bound(spec: &PotentialSpec) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while quadratic_comparison_holds(spec, hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Hypothesis("σ unbounded; W is not quadratic at the wells".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if quadratic_comparison_holds(spec, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 1e-6 {
        return Err(Error::Hypothesis(format!(
            "no σ > 1e-6 satisfies the quadratic comparison near the wells (best {lo:e})"
        )));
    }
    Ok(lo)
}

/// Largest grid δ such that
/// `½W''(a)(1-η)(s-a)² ≤ W(s) ≤ ½W''(a)(1+η)(s-a)²` for all sampled
/// `s ∈ [a, a+δ]`, capped at `α₋ - a`.
pub fn taylor_delta(spec: &PotentialSpec, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 0.25) {
        return Err(Error::Domain(format!("η = {eta} outside (0, 1/4)")));
    }
    let half = 0.5 * spec.d2w(spec.a);
    let cap = spec.alpha_minus - spec.a;
    let n = spec.sample_resolution.max(16);
    let step = cap / n as f64;
    let mut delta = 0.0;
    for k in 1..=n {
        let x = step * k as f64;
        let w = spec.try_w(spec.a + x)?;
        let q = half * x * x;
        if (1.0 - eta) * q <= w && w <= (1.0 + eta) * q {
            delta = x;
        } else {
            break;
        }
    }
    Ok(delta.min(cap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_sigma(spec: &PotentialSpec) -> f64 {
        // Oracle: ratio extremes on a fine independent grid.
        let n = 200_000;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..=n {
            let s = spec.alpha_minus + (spec.b + 1.0 - spec.alpha_minus) * i as f64 / n as f64;
            if (s - spec.b).abs() < 1e-9 {
                continue;
            }
            let r = spec.w(s) / (spec.b - s).powi(2);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        lo.sqrt().min(1.0 / hi.sqrt())
    }

    #[test]
    fn quartic_passes_all() {
        let r = validate_hypotheses(&PotentialSpec::quartic()).unwrap();
        assert!(r.all_passed(), "{r:?}");
        r.ensure().unwrap();
    }

    #[test]
    fn asym_quartic_zero_one() {
        let spec = PotentialSpec::asym_quartic(0.0, 1.0);
        assert_eq!(spec.c, 0.5);
        assert!(spec.dw(0.5).abs() < 1e-15);
        assert!(validate_hypotheses(&spec).unwrap().all_passed());
    }

    #[test]
    fn single_well_fails_smoothness() {
        let spec = PotentialSpec::polynomial(vec![0.0, 0.0, 1.0], -1.0, 1.0, 0.0);
        let r = validate_hypotheses(&spec).unwrap();
        let c = r.get("W_Smooth").unwrap();
        assert!(!c.passed);
        assert_eq!(c.witness, Some(-1.0));
        assert!(r.ensure().is_err());
    }

    #[test]
    fn non_finite_value_names_abscissa() {
        let spec = PotentialSpec::custom(
            CustomPotential {
                w: Box::new(|s| if s > 1.5 { f64::NAN } else { (1.0 - s * s).powi(2) }),
                dw: Box::new(|s| -4.0 * s * (1.0 - s * s)),
                d2w: Box::new(|s| 12.0 * s * s - 4.0),
            },
            -1.0,
            1.0,
            0.0,
        );
        match validate_hypotheses(&spec) {
            Err(Error::Evaluation { abscissa, .. }) => assert!(abscissa > 1.5),
            other => panic!("expected evaluation error, got {other:?}"),
        }
    }

    #[test]
    fn sigma_quartic_matches_oracle() {
        let spec = PotentialSpec::quartic();
        let s = sigma_bound(&spec).unwrap();
        // (1+s)² ranges over [1/4, 9] on [-1/2, 2]: σ = min(1/2, 1/3).
        assert!((s - 1.0 / 3.0).abs() < 1e-9, "{s}");
        assert!((s - closed_form_sigma(&spec)).abs() < 1e-6);
        assert!(quadratic_comparison_holds(&spec, s));
    }

    #[test]
    fn sigma_symmetric_potential_sides_agree() {
        // For the even quartic the a-side and b-side bounds are mirror images.
        let spec = PotentialSpec::quartic();
        let n = 10_000;
        let ratio_b: Vec<f64> = (0..n)
            .map(|i| -0.5 + 2.5 * i as f64 / n as f64)
            .map(|s| spec.w(s) / (1.0 - s).powi(2))
            .collect();
        let ratio_a: Vec<f64> = (0..n)
            .map(|i| 0.5 - 2.5 * i as f64 / n as f64)
            .map(|s| spec.w(s) / (s + 1.0).powi(2))
            .collect();
        for (x, y) in ratio_a.iter().zip(&ratio_b) {
            // 0/0 at the well itself
            if x.is_nan() && y.is_nan() {
                continue;
            }
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_of_scaled_potential() {
        // With both inequalities binding, 4W moves the lower constant up
        // and the upper one down: σ(4W) = min(1, 1/6) = 1/6.
        let s4 = sigma_bound(&PotentialSpec::quartic().scaled(4.0)).unwrap();
        assert!((s4 - 1.0 / 6.0).abs() < 1e-9, "{s4}");
    }

    #[test]
    fn taylor_delta_quartic() {
        let spec = PotentialSpec::quartic();
        let d = taylor_delta(&spec, 0.1).unwrap();
        // W/(4(s+1)²) = (1 - x/2)² ≥ 0.9  ⇔  x ≤ 2(1 - √0.9)
        let exact = 2.0 * (1.0 - 0.9f64.sqrt());
        let step = 0.5 / spec.sample_resolution as f64;
        assert!(d <= exact && exact - d <= step, "{d} vs {exact}");
    }

    #[test]
    fn taylor_delta_monotone_in_eta() {
        let spec = PotentialSpec::quartic();
        let etas = [0.01, 0.05, 0.1, 0.2, 0.24];
        let ds: Vec<f64> = etas.iter().map(|&e| taylor_delta(&spec, e).unwrap()).collect();
        assert!(ds.windows(2).all(|w| w[0] <= w[1]), "{ds:?}");
        assert!(ds[0] > 0.0 && ds[0] < 0.02);
        assert!(taylor_delta(&spec, 0.3).is_err());
    }

    #[test]
    fn piecewise_matches_polynomial() {
        // (1-s²)² = 1 - 2s² + s⁴ as two identical pieces.
        let c = vec![1.0, 0.0, -2.0, 0.0, 1.0];
        let pieces = vec![
            PolyPiece { lo: f64::NEG_INFINITY, hi: 0.0, coeffs: c.clone() },
            PolyPiece { lo: 0.0, hi: f64::INFINITY, coeffs: c.clone() },
        ];
        let p = PotentialSpec::piecewise(pieces, -1.0, 1.0, 0.0).unwrap();
        let q = PotentialSpec::quartic();
        for s in [-2.0, -0.7, 0.0, 0.3, 1.4] {
            assert!((p.w(s) - q.w(s)).abs() < 1e-13);
            assert!((p.dw(s) - q.dw(s)).abs() < 1e-12);
            assert!((p.d2w(s) - q.d2w(s)).abs() < 1e-12);
        }
        assert!(validate_hypotheses(&p).unwrap().all_passed());
    }

    #[test]
    fn positivity_away_from_wells() {
        let spec = PotentialSpec::quartic();
        let (a, b, c) = (spec.a, spec.b, spec.c);
        let lo = a + 0.01 * (b - a);
        let hi = b - 0.01 * (b - a);
        let min = (0..=1000)
            .map(|i| lo + (hi - lo) * i as f64 / 1000.0)
            .filter(|s| (s - c).abs() > 0.05)
            .map(|s| spec.w(s))
            .fold(f64::INFINITY, f64::min);
        assert!(min > 0.0);
    }
}
