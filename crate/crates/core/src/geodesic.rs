//! The geodesic distance induced by `2√W`, the transition cost `C_W`, and
//! the two singular integrals near the wells.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_asymptote, FitModel, FitResult};
use crate::potential::PotentialSpec;
use crate::quadrature::{integrate_near_wells, Peak, QuadOptions};

/// `d_W(r, s)` is finite only when one endpoint is a well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GeodesicDistance {
    Finite(f64),
    Infinite,
}

impl GeodesicDistance {
    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Self::Infinite)
    }
}

#[derive(Debug)]
pub struct GeodesicTable {
    pub spec: PotentialSpec,
    pub quad_tol: f64,
    cw: OnceLock<f64>,
}

impl Clone for GeodesicTable {
    fn clone(&self) -> Self {
        let out = Self::with_tolerance(self.spec.clone(), self.quad_tol);
        if let Some(v) = self.cw.get() {
            let _ = out.cw.set(*v);
        }
        out
    }
}

impl GeodesicTable {
    pub fn new(spec: PotentialSpec) -> Self {
        Self::with_tolerance(spec, 1e-12)
    }

    pub fn with_tolerance(spec: PotentialSpec, quad_tol: f64) -> Self {
        Self {
            spec,
            quad_tol,
            cw: OnceLock::new(),
        }
    }

    fn opts(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: self.quad_tol,
            rel_tol: self.quad_tol,
            max_intervals: 20_000,
        }
    }

    fn well_peaks(&self, width: f64) -> [Peak; 2] {
        [
            Peak { at: self.spec.a, width },
            Peak { at: self.spec.b, width },
        ]
    }

    fn reach(&self) -> f64 {
        0.25 * (self.spec.b - self.spec.a)
    }

    /// `2 ∫_r^s √W`, signed.
    pub fn action(&self, r: f64, s: f64) -> f64 {
        if r == s {
            return 0.0;
        }
        // Zero-width peaks only split the interval at the kinks of √W.
        let q = integrate_near_wells(
            |x| self.spec.sqrt_w(x),
            r,
            s,
            &self.well_peaks(0.0),
            self.reach(),
            self.opts(),
        );
        2.0 * q.value
    }

    pub fn dw(&self, r: f64, s: f64) -> GeodesicDistance {
        let wells = [self.spec.a, self.spec.b];
        if wells.contains(&r) || wells.contains(&s) {
            GeodesicDistance::Finite(self.action(r, s).abs())
        } else {
            GeodesicDistance::Infinite
        }
    }

    /// `C_W = d_W(a, b)`, computed once.
    pub fn cw(&self) -> f64 {
        *self.cw.get_or_init(|| self.action(self.spec.a, self.spec.b))
    }

    fn check_bounds(&self, lo: f64, hi: f64) -> Result<()> {
        let (a, b) = (self.spec.a, self.spec.b);
        if !(a <= lo && lo <= hi && hi <= b) {
            return Err(Error::Domain(format!(
                "bounds [{lo}, {hi}] not ordered inside [{a}, {b}]"
            )));
        }
        Ok(())
    }

    /// `∫_lo^hi (ε + W)^{-1/2}`.
    pub fn log_integral(&self, eps: f64, lo: f64, hi: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("ε = {eps} must be positive")));
        }
        self.check_bounds(lo, hi)?;
        if lo == hi {
            return Ok(0.0);
        }
        let q = integrate_near_wells(
            |s| 1.0 / (eps + self.spec.w(s)).sqrt(),
            lo,
            hi,
            &self.well_peaks(eps.sqrt()),
            self.reach(),
            self.opts(),
        );
        Ok(q.value)
    }

    /// Fit `I(ε) ≈ A|log ε| + B` over a decreasing ladder.
    pub fn log_asymptote_fit(&self, lo: f64, hi: f64, ladder: &[f64]) -> Result<FitResult> {
        if ladder.len() < 3 || ladder.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Fit(
                "ladder needs at least 3 strictly decreasing values".into(),
            ));
        }
        let pts = ladder
            .iter()
            .map(|&e| self.log_integral(e, lo, hi).map(|i| (e, i)))
            .collect::<Result<Vec<_>>>()?;
        fit_asymptote(&pts, FitModel::AffineLog)
    }

    /// `∫_lo^hi [2/(√(δ+W) + √W) − 1/√(δ+W)]`, bounded uniformly in δ.
    pub fn difference_integral(&self, delta: f64, lo: f64, hi: f64) -> Result<f64> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("δ = {delta} outside (0, 1)")));
        }
        self.check_bounds(lo, hi)?;
        if lo == hi {
            return Ok(0.0);
        }
        let q = integrate_near_wells(
            |s| difference_integrand(delta, self.spec.w(s)),
            lo,
            hi,
            &self.well_peaks(delta.sqrt()),
            self.reach(),
            self.opts(),
        );
        Ok(q.value)
    }
}

/// `2/(x+y) − 1/x` with `x = √(δ+W)`, `y = √W`, rewritten as
/// `δ / (x (x+y)²)` to avoid cancellation.
pub fn difference_integrand(delta: f64, w: f64) -> f64 {
    let w = w.max(0.0);
    let x = (delta + w).sqrt();
    let y = w.sqrt();
    delta / (x * (x + y) * (x + y))
}
