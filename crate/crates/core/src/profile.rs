//! Recovery boundary-layer profiles and the heteroclinic layer shape.
//!
//! The recovery profile solves `ε v' = √(δ + W(v))` from the boundary value
//! up to a target level, then stays constant. Equivalently it is the
//! inverse of `Ψ(r) = ε ∫_α^r (δ + W)^{-1/2}`; both routes are available
//! and agree to quadrature accuracy.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, hermite, OdeOptions};
use crate::potential::{sigma_bound, PotentialSpec};
use crate::quadrature::{integrate_near_wells, Peak, QuadOptions, GAUSS4_UNIT};

/// The regularization `δ` under the square root of the layer ODE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularizer {
    /// `δ = ε`
    Eps,
    /// `δ = ε^p`, `p ∈ (1, 2]`
    Power(f64),
}

impl Regularizer {
    pub fn value(self, eps: f64) -> f64 {
        match self {
            Self::Eps => eps,
            Self::Power(p) => eps.powf(p),
        }
    }
}

/// Exponent `k` of the threshold `β - ε^k` that defines the layer time of
/// a computed (not constructed) profile.
pub const THRESHOLD_POWER: i32 = 2;

/// A monotone layer profile sampled on an increasing grid.
///
/// When `dv` is present the profile is the cubic Hermite interpolant of
/// `(t, v, dv)`; otherwise it is piecewise linear.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileGrid {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Option<Vec<f64>>,
    pub epsilon: f64,
    pub alpha_eps: f64,
    pub beta_eps: f64,
    /// First time the profile reaches `beta_eps`.
    pub t_eps: f64,
    /// First time the profile reaches the saddle, when it does.
    pub l_eps: Option<f64>,
    pub extension_value: f64,
    /// Right end of the domain.
    pub horizon: f64,
}

impl ProfileGrid {
    /// Piecewise-linear profile from nodal values. `t_eps` is the first
    /// time the profile reaches `β - ε^k`, `k = THRESHOLD_POWER`.
    pub fn from_nodes(t: Vec<f64>, v: Vec<f64>, epsilon: f64, saddle: f64) -> Result<Self> {
        if t.len() < 2 || t.len() != v.len() {
            return Err(Error::Domain("profile needs at least two matching nodes".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("profile grid must be strictly increasing".into()));
        }
        let alpha = v[0];
        let beta = *v.last().unwrap();
        let horizon = *t.last().unwrap();
        let mut out = Self {
            t,
            v,
            dv: None,
            epsilon,
            alpha_eps: alpha,
            beta_eps: beta,
            t_eps: horizon,
            l_eps: None,
            extension_value: beta,
            horizon,
        };
        let threshold = beta - epsilon.powi(THRESHOLD_POWER);
        let level = if threshold > alpha { threshold } else { beta };
        out.t_eps = out.hitting_time(level).unwrap_or(horizon);
        out.l_eps = out.hitting_time(saddle);
        Ok(out)
    }

    fn segment(&self, t: f64) -> usize {
        let i = self.t.partition_point(|&x| x <= t);
        i.clamp(1, self.t.len() - 1) - 1
    }

    pub fn value_at(&self, t: f64) -> f64 {
        if self.dv.is_some() && t >= self.t_eps && self.t_eps > 0.0 {
            return self.extension_value;
        }
        let i = self.segment(t);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        match &self.dv {
            Some(d) => hermite(t0, &[self.v[i]], &[d[i]], t1, &[self.v[i + 1]], &[d[i + 1]], t)[0],
            None => {
                let s = (t - t0) / (t1 - t0);
                self.v[i] + s * (self.v[i + 1] - self.v[i])
            }
        }
    }

    pub fn slope_at(&self, t: f64) -> f64 {
        if self.dv.is_some() && t > self.t_eps && self.t_eps > 0.0 {
            return 0.0;
        }
        let i = self.segment(t);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let dv0 = self.v[i + 1] - self.v[i];
        match &self.dv {
            Some(d) => {
                let s = (t - t0) / h;
                let (d0, d1) = (d[i] * h, d[i + 1] * h);
                let dh00 = 6.0 * s * s - 6.0 * s;
                let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
                let dh11 = 3.0 * s * s - 2.0 * s;
                (dh00 * (-dv0) + dh10 * d0 + dh11 * d1) / h
            }
            None => dv0 / h,
        }
    }

    /// Is the profile non-decreasing node to node?
    pub fn is_monotone(&self) -> bool {
        self.v.windows(2).all(|w| w[1] >= w[0])
    }

    /// First crossing time of `level`, linearly interpolated between nodes.
    pub fn hitting_time(&self, level: f64) -> Option<f64> {
        let lo = self.v[0].min(self.alpha_eps);
        let hi = self.v.iter().cloned().fold(f64::MIN, f64::max);
        if !(level >= lo && level <= hi) {
            return None;
        }
        let i = self.v.iter().position(|&x| x >= level)?;
        if i == 0 {
            return Some(self.t[0]);
        }
        let (v0, v1) = (self.v[i - 1], self.v[i]);
        let s = if v1 > v0 { (level - v0) / (v1 - v0) } else { 1.0 };
        Some(self.t[i - 1] + s * (self.t[i] - self.t[i - 1]))
    }

    /// Two-column `t,v` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "v"])?;
        for (t, v) in self.t.iter().zip(&self.v) {
            w.write_record([format!("{t:.17e}"), format!("{v:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Hitting times for several levels; `None` where a level is out of range.
pub fn hitting_times(profile: &ProfileGrid, levels: &[f64]) -> Vec<Option<f64>> {
    levels.iter().map(|&l| profile.hitting_time(l)).collect()
}

fn psi_peaks(spec: &PotentialSpec, delta: f64) -> [Peak; 2] {
    let w = delta.sqrt();
    [Peak { at: spec.a, width: w }, Peak { at: spec.b, width: w }]
}

/// `ε ∫_α^r (δ + W)^{-1/2}`.
pub fn psi_regularized(spec: &PotentialSpec, eps: f64, delta: f64, alpha: f64, r: f64) -> Result<f64> {
    if !(eps > 0.0 && delta > 0.0) {
        return Err(Error::Domain(format!("ε = {eps}, δ = {delta} must be positive")));
    }
    if r < alpha {
        return Err(Error::Domain(format!("r = {r} below the start level {alpha}")));
    }
    if r == alpha {
        return Ok(0.0);
    }
    let q = integrate_near_wells(
        |s| 1.0 / (delta + spec.w(s)).sqrt(),
        alpha,
        r,
        &psi_peaks(spec, delta),
        0.25 * (spec.b - spec.a),
        QuadOptions::default(),
    );
    Ok(eps * q.value)
}

/// `Ψ_ε(r)` with the default regularization `δ = ε`.
pub fn psi_epsilon(spec: &PotentialSpec, eps: f64, alpha: f64, r: f64) -> Result<f64> {
    psi_regularized(spec, eps, eps, alpha, r)
}

/// Solve `Ψ(r) = t` for `r ∈ [α, β]` by bisection.
pub fn inverse_psi(spec: &PotentialSpec, eps: f64, delta: f64, alpha: f64, beta: f64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(alpha);
    }
    if t >= psi_regularized(spec, eps, delta, alpha, beta)? {
        return Ok(beta);
    }
    let (mut lo, mut hi) = (alpha, beta);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi_regularized(spec, eps, delta, alpha, mid)? < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fast-variable step cap: nodes per unit of `t/ε` in the layer.
pub const NODES_PER_FAST_UNIT: f64 = 64.0;

/// The recovery profile from `α` to `β` on `[0, horizon]`.
pub fn recovery_profile(
    spec: &PotentialSpec,
    eps: f64,
    alpha: f64,
    beta: f64,
    horizon: f64,
    reg: Regularizer,
) -> Result<ProfileGrid> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε = {eps} must be positive")));
    }
    if !(spec.a <= alpha && alpha <= beta && beta <= spec.b) {
        return Err(Error::Domain(format!(
            "need a ≤ α ≤ β ≤ b, got α = {alpha}, β = {beta}"
        )));
    }
    let delta = reg.value(eps);
    let base = ProfileGrid {
        t: vec![0.0, horizon],
        v: vec![alpha, beta],
        dv: Some(vec![0.0, 0.0]),
        epsilon: eps,
        alpha_eps: alpha,
        beta_eps: beta,
        t_eps: 0.0,
        l_eps: None,
        extension_value: beta,
        horizon,
    };
    if alpha == beta {
        // Constant: P1 keeps it exact where Hermite weights would round.
        let mut p = base;
        p.v = vec![alpha, alpha];
        p.dv = None;
        p.l_eps = (alpha == spec.c).then_some(0.0);
        return Ok(p);
    }
    let t_needed = psi_regularized(spec, eps, delta, alpha, beta)?;
    if !(horizon > t_needed) {
        return Err(Error::Config(format!(
            "horizon {horizon} does not exceed the layer time {t_needed}"
        )));
    }

    let rhs = |_: f64, y: &[f64; 1]| [(delta + spec.w(y[0]).max(0.0)).sqrt() / eps];
    let opts = OdeOptions {
        rtol: 1e-12,
        atol: 1e-14,
        h_init: eps / NODES_PER_FAST_UNIT,
        h_max: eps / NODES_PER_FAST_UNIT,
        max_steps: 10_000_000,
    };
    let traj = ode::integrate(rhs, 0.0, [alpha], horizon, Some(|y: &[f64; 1]| y[0] - beta), opts)?;
    if !traj.event_hit {
        return Err(Error::Solver {
            message: format!("profile did not reach β = {beta} before t = {horizon}"),
            history: traj.y.iter().rev().take(5).map(|y| y[0]).collect(),
        });
    }
    let mut t = traj.t;
    let mut v: Vec<f64> = traj.y.iter().map(|y| y[0]).collect();
    let mut dv: Vec<f64> = traj.dy.iter().map(|d| d[0]).collect();
    // Pin the event node to β so the constant extension is exact.
    let n = v.len();
    v[n - 1] = beta;
    let t_eps = t[n - 1];
    let l_eps = if spec.c >= alpha && spec.c <= beta {
        locate_level(&t, &v, &dv, spec.c)
    } else {
        None
    };
    // Constant extension. The node at t_eps keeps its left slope;
    // value_at and slope_at treat everything past it as flat.
    t.push(horizon);
    v.push(beta);
    dv.push(0.0);
    Ok(ProfileGrid {
        t,
        v,
        dv: Some(dv),
        t_eps,
        l_eps,
        ..base
    })
}

fn locate_level(t: &[f64], v: &[f64], dv: &[f64], level: f64) -> Option<f64> {
    let i = v.iter().position(|&x| x >= level)?;
    if i == 0 {
        return Some(t[0]);
    }
    let (mut lo, mut hi) = (t[i - 1], t[i]);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let y = hermite(t[i - 1], &[v[i - 1]], &[dv[i - 1]], t[i], &[v[i]], &[dv[i]], mid)[0];
        if y >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Maximum of `|ε v' − √(δ + W(v))|` over interior construction nodes,
/// relative to the largest slope.
pub fn ode_residual(spec: &PotentialSpec, profile: &ProfileGrid, reg: Regularizer) -> f64 {
    let Some(dv) = &profile.dv else { return f64::NAN };
    let eps = profile.epsilon;
    let delta = reg.value(eps);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 1..profile.t.len() {
        if profile.t[i] >= profile.t_eps {
            break;
        }
        let r = (eps * dv[i] - (delta + spec.w(profile.v[i])).sqrt()).abs();
        worst = worst.max(r);
        scale = scale.max(eps * dv[i]);
    }
    if scale > 0.0 { worst / scale } else { 0.0 }
}

/// The heteroclinic `z' = √W(z)`, `z(0) = α`, on `[0, s_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heteroclinic {
    pub s: Vec<f64>,
    pub z: Vec<f64>,
    pub dz: Vec<f64>,
    pub alpha: f64,
    /// Started at a well: the profile is constant.
    pub degenerate: bool,
}

impl Heteroclinic {
    pub fn value_at(&self, s: f64) -> f64 {
        let i = self.s.partition_point(|&x| x <= s).clamp(1, self.s.len() - 1) - 1;
        hermite(
            self.s[i],
            &[self.z[i]],
            &[self.dz[i]],
            self.s[i + 1],
            &[self.z[i + 1]],
            &[self.dz[i + 1]],
            s,
        )[0]
    }
}

pub fn heteroclinic(spec: &PotentialSpec, alpha: f64, s_max: f64) -> Result<Heteroclinic> {
    if !(s_max > 0.0) {
        return Err(Error::Domain(format!("s_max = {s_max} must be positive")));
    }
    if alpha <= spec.a || alpha >= spec.b {
        return Ok(Heteroclinic {
            s: vec![0.0, s_max],
            z: vec![alpha, alpha],
            dz: vec![0.0, 0.0],
            alpha,
            degenerate: true,
        });
    }
    let opts = OdeOptions {
        rtol: 1e-12,
        atol: 1e-15,
        h_init: 1e-3,
        h_max: 1.0 / 32.0,
        max_steps: 1_000_000,
    };
    let traj = ode::integrate(
        |_, y: &[f64; 1]| [spec.sqrt_w(y[0])],
        0.0,
        [alpha],
        s_max,
        None::<fn(&[f64; 1]) -> f64>,
        opts,
    )?;
    Ok(Heteroclinic {
        s: traj.t,
        z: traj.y.iter().map(|y| y[0].min(spec.b)).collect(),
        dz: traj.dy.iter().map(|d| d[0]).collect(),
        alpha,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerMoment {
    /// `∫_0^{s_max} 2√W(z) z' s ds`
    pub value: f64,
    /// Upper bound on the neglected tail beyond `s_max`.
    pub tail_bound: f64,
}

/// First moment of the layer energy density along the heteroclinic.
pub fn layer_moment(spec: &PotentialSpec, alpha: f64, s_max: f64) -> Result<LayerMoment> {
    let h = heteroclinic(spec, alpha, s_max)?;
    if h.degenerate {
        return Ok(LayerMoment { value: 0.0, tail_bound: 0.0 });
    }
    let density = |s: f64| {
        let z = h.value_at(s);
        2.0 * spec.w(z) * s
    };
    let mut value = 0.0;
    for w in h.s.windows(2) {
        let len = w[1] - w[0];
        value += len * GAUSS4_UNIT.iter().map(|(x, wt)| wt * density(w[0] + x * len)).sum::<f64>();
    }
    // b - z decays at least like e^{-σ s} past s_max, and W ≤ σ⁻²(b-z)².
    let sigma = sigma_bound(spec)?;
    let gap = spec.b - *h.z.last().unwrap();
    let tail_bound = 2.0 / (sigma * sigma) * gap * gap * (s_max / (2.0 * sigma) + 1.0 / (4.0 * sigma * sigma));
    Ok(LayerMoment { value, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic() -> PotentialSpec {
        PotentialSpec::quartic()
    }

    #[test]
    fn psi_basics() {
        let spec = quartic();
        assert_eq!(psi_epsilon(&spec, 1e-3, -0.5, -0.5).unwrap(), 0.0);
        assert!(psi_epsilon(&spec, 1e-3, 0.0, -0.1).is_err());
        let a = psi_epsilon(&spec, 1e-3, -1.0, -0.2).unwrap();
        let b = psi_epsilon(&spec, 1e-3, -1.0, 0.2).unwrap();
        assert!(b > a && a > 0.0);
    }

    #[test]
    fn psi_matches_log_integral() {
        let spec = quartic();
        let eps = 1e-3;
        let table = crate::geodesic::GeodesicTable::new(spec.clone());
        let l = psi_epsilon(&spec, eps, -1.0, 0.0).unwrap();
        let i = table.log_integral(eps, -1.0, 0.0).unwrap();
        assert!((l - eps * i).abs() < 1e-13);
    }

    #[test]
    fn recovery_profile_construction() {
        let spec = quartic();
        let eps = 2f64.powi(-8);
        let (alpha, beta) = (-1.0 + eps * eps, 1.0 - eps * eps);
        let p = recovery_profile(&spec, eps, alpha, beta, 1.0, Regularizer::Eps).unwrap();
        assert_eq!(p.v[0], alpha);
        assert_eq!(*p.v.last().unwrap(), beta);
        assert!(p.is_monotone());
        assert!(p.v.iter().all(|&x| x >= spec.a && x <= spec.b));
        assert!(ode_residual(&spec, &p, Regularizer::Eps) < 1e-6);
        // node density in the layer
        let in_layer = p.t.windows(2).filter(|w| w[1] <= p.t_eps);
        assert!(in_layer.into_iter().all(|w| w[1] - w[0] <= eps / 32.0 + 1e-18));
        let psi_beta = psi_epsilon(&spec, eps, alpha, beta).unwrap();
        assert!((p.t_eps - psi_beta).abs() < 1e-8 * p.t_eps);
        let psi_c = psi_epsilon(&spec, eps, alpha, 0.0).unwrap();
        assert!((p.l_eps.unwrap() - psi_c).abs() < 1e-8 * p.t_eps);
        assert_eq!(p.value_at(0.9), beta);
    }

    #[test]
    fn inverse_consistency() {
        let spec = quartic();
        let eps = 2f64.powi(-10);
        let (alpha, beta) = (-1.0 + eps * eps, 1.0 - eps * eps);
        let p = recovery_profile(&spec, eps, alpha, beta, 1.0, Regularizer::Eps).unwrap();
        for i in (1..p.t.len() - 2).step_by(7) {
            let psi = psi_epsilon(&spec, eps, alpha, p.v[i]).unwrap();
            assert!((psi - p.t[i]).abs() <= 1e-8 * p.t_eps, "node {i}");
        }
        // the bisection inverse lands on the ODE values
        for &tt in &[0.1 * p.t_eps, 0.5 * p.t_eps, 0.93 * p.t_eps] {
            let r = inverse_psi(&spec, eps, eps, alpha, beta, tt).unwrap();
            assert!((r - p.value_at(tt)).abs() < 1e-8, "{r} vs {}", p.value_at(tt));
        }
    }

    #[test]
    fn short_horizon_is_config_error() {
        let spec = quartic();
        let r = recovery_profile(&spec, 0.01, -0.99, 0.99, 0.01, Regularizer::Eps);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn flat_profile() {
        let spec = quartic();
        let p = recovery_profile(&spec, 0.01, 0.3, 0.3, 1.0, Regularizer::Eps).unwrap();
        assert_eq!(p.t_eps, 0.0);
        assert!(p.v.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn layer_time_scales_like_eps_log() {
        // T_ε/ε ≈ (1/4 + 1/4)|log ε| + K; the slope is the two-well constant.
        // Frozen values of ∫ (ε+W)^{-1/2} over [a+ε², b-ε²] from an
        // independent quadrature.
        let oracle = [(6, 4.085635515287656), (10, 5.5287879475861), (14, 6.927504452289158)];
        let spec = quartic();
        let mut pts = Vec::new();
        for k in 6..=14 {
            let e = 2f64.powi(-k);
            let p = recovery_profile(&spec, e, -1.0 + e * e, 1.0 - e * e, 1.0, Regularizer::Eps).unwrap();
            if let Some((_, want)) = oracle.iter().find(|(j, _)| *j == k) {
                assert!((p.t_eps / e - want).abs() < 1e-8 * want, "k = {k}");
            }
            pts.push((e, p.t_eps / e));
        }
        let ratios: Vec<f64> = pts.iter().map(|(e, t)| t / e.ln().abs()).collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
        let fit = crate::fit::fit_asymptote(&pts[2..], crate::fit::FitModel::AffineLog).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 0.01, "{:?}", fit.coefficients);
    }

    #[test]
    fn exponential_approach_to_b() {
        let spec = quartic();
        let sigma = sigma_bound(&spec).unwrap();
        let eps = 2f64.powi(-9);
        let p = recovery_profile(&spec, eps, -1.0 + eps * eps, 1.0 - eps * eps, 1.0, Regularizer::Eps).unwrap();
        let l = p.l_eps.unwrap();
        for (t, v) in p.t.iter().zip(&p.v) {
            if *t >= l && *t <= p.t_eps {
                let bound = (spec.b - spec.c) * (-sigma * (t - l) / eps).exp();
                assert!(spec.b - v <= bound * (1.0 + 1e-9), "t = {t}");
            }
        }
    }

    #[test]
    fn tanh_heteroclinic() {
        let h = heteroclinic(&quartic(), 0.0, 5.0).unwrap();
        assert_eq!(h.z[0], 0.0);
        assert!((h.value_at(1.0) - 1f64.tanh()).abs() < 1e-6);
        assert!(h.z.windows(2).all(|w| w[1] >= w[0]));
        let sigma = 1.0 / 3.0;
        for (s, z) in h.s.iter().zip(&h.z) {
            assert!(1.0 - z <= (-sigma * s).exp() + 1e-12);
        }
    }

    #[test]
    fn degenerate_heteroclinic() {
        let h = heteroclinic(&quartic(), -1.0, 3.0).unwrap();
        assert!(h.degenerate);
        assert!(h.z.iter().all(|&z| z == -1.0));
    }

    fn moment_oracle() -> f64 {
        // ∫_0^∞ 2 s sech⁴ s ds by composite Simpson on [0, 40].
        let n = 400_000;
        let h = 40.0 / n as f64;
        let f = |s: f64| 2.0 * s / s.cosh().powi(4);
        let mut acc = f(0.0) + f(40.0);
        for i in 1..n {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn layer_moment_tanh() {
        let closed = 4.0 / 3.0 * 2f64.ln() - 1.0 / 3.0;
        assert!((moment_oracle() - closed).abs() < 1e-10);
        let m = layer_moment(&quartic(), 0.0, 40.0).unwrap();
        assert!((m.value - closed).abs() < 1e-4, "{}", m.value);
        assert!(m.tail_bound >= 0.0 && m.tail_bound < 1e-10);
    }

    #[test]
    fn layer_moment_partial_sums_grow() {
        let spec = quartic();
        let vals: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&s| layer_moment(&spec, 0.0, s).unwrap().value)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
        let near_b = layer_moment(&spec, 0.999, 20.0).unwrap().value;
        assert!(near_b < 1e-3);
    }

    #[test]
    fn hitting_times_on_recovery() {
        let spec = quartic();
        let eps = 2f64.powi(-8);
        let p = recovery_profile(&spec, eps, -1.0 + eps * eps, 1.0 - eps * eps, 1.0, Regularizer::Eps).unwrap();
        let h = hitting_times(&p, &[p.alpha_eps, 0.0, 0.5, 2.0]);
        assert_eq!(h[0], Some(0.0));
        assert!((h[1].unwrap() - p.l_eps.unwrap()).abs() < 1e-3 * eps);
        assert!(h[2].unwrap() > h[1].unwrap());
        assert_eq!(h[3], None);
    }

    #[test]
    fn csv_roundtrip() {
        let p = ProfileGrid::from_nodes(vec![0.0, 0.5, 1.0], vec![-1.0, 0.0, 1.0], 0.1, 0.0).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,v"));
        assert_eq!(text.lines().count(), 4);
        assert_eq!(p.l_eps, Some(0.5));
    }
}
