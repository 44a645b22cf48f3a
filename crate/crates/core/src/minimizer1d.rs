//! The weighted one-dimensional functional
//! `G_ε(v) = ∫_0^T (W(v) + ε² v'²) ω dt` with Dirichlet data: its discrete
//! minimizer, the rescaled energies, and the qualitative checks on
//! minimizers (monotonicity window, derivative bounds, hitting times).
//!
//! Discretization is P1 on a graded mesh with 3-point Gauss quadrature per
//! element, which integrates the quartic potential against a linear weight
//! exactly. The Newton system is tridiagonal.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::GeodesicTable;
use crate::linalg::solve_spd_tridiagonal;
use crate::potential::{taylor_delta, PotentialSpec};
use crate::profile::{recovery_profile, ProfileGrid, Regularizer, THRESHOLD_POWER};
use crate::quadrature::{GAUSS3_UNIT, GAUSS4_UNIT};

type WeightPair = dyn Fn(f64) -> (f64, f64) + Send + Sync;

#[derive(Clone)]
enum WeightKind {
    Linear { at_zero: f64, slope: f64 },
    Custom(Arc<WeightPair>),
}

/// Fiber weight `ω` on `[0, T]` with its derivative and sampled metadata.
#[derive(Clone)]
pub struct WeightFn {
    kind: WeightKind,
    pub horizon: f64,
    /// Smallest `ω₀ ≥ 0` with `ω(t) ≥ ω(0) - ω₀` on the sample grid.
    pub omega0_gap: f64,
    pub strictly_increasing: bool,
    /// Sampled `sup|ω'| + Lip(ω')`.
    pub holder_norm: f64,
}

impl std::fmt::Debug for WeightFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            WeightKind::Linear { at_zero, slope } => {
                write!(f, "WeightFn({at_zero} + {slope} t on [0, {}])", self.horizon)
            }
            WeightKind::Custom(_) => write!(f, "WeightFn(custom on [0, {}])", self.horizon),
        }
    }
}

const WEIGHT_SAMPLES: usize = 4096;

impl WeightFn {
    /// `ω(t) = at_zero + slope·t`.
    pub fn linear(at_zero: f64, slope: f64, horizon: f64) -> Result<Self> {
        Self::build(WeightKind::Linear { at_zero, slope }, horizon)
    }

    /// `f(t) = (ω(t), ω'(t))`.
    pub fn custom<F>(f: F, horizon: f64) -> Result<Self>
    where
        F: Fn(f64) -> (f64, f64) + Send + Sync + 'static,
    {
        Self::build(WeightKind::Custom(Arc::new(f)), horizon)
    }

    fn build(kind: WeightKind, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Domain(format!("horizon {horizon} must be positive")));
        }
        let mut w = Self {
            kind,
            horizon,
            omega0_gap: 0.0,
            strictly_increasing: false,
            holder_norm: 0.0,
        };
        let n = WEIGHT_SAMPLES;
        let samples: Vec<(f64, f64, f64)> = (0..=n)
            .map(|i| {
                let t = horizon * i as f64 / n as f64;
                let (v, d) = w.pair(t);
                (t, v, d)
            })
            .collect();
        if let Some(&(t, v, _)) = samples.iter().find(|(_, v, _)| !(*v > 0.0)) {
            return Err(Error::Domain(format!("weight ω({t}) = {v} is not positive")));
        }
        let w0 = samples[0].1;
        let min_after = samples[1..].iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        w.omega0_gap = (w0 - min_after).max(0.0);
        w.strictly_increasing = samples.iter().all(|s| s.2 > 0.0);
        let sup = samples.iter().map(|s| s.2.abs()).fold(0.0, f64::max);
        let lip = samples
            .windows(2)
            .map(|p| (p[1].2 - p[0].2).abs() / (p[1].0 - p[0].0))
            .fold(0.0, f64::max);
        w.holder_norm = sup + lip;
        Ok(w)
    }

    #[inline]
    pub fn pair(&self, t: f64) -> (f64, f64) {
        match &self.kind {
            WeightKind::Linear { at_zero, slope } => (at_zero + slope * t, *slope),
            WeightKind::Custom(f) => f(t),
        }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.pair(t).0
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        self.pair(t).1
    }

    pub fn at_zero(&self) -> f64 {
        self.value(0.0)
    }

    pub fn slope_at_zero(&self) -> f64 {
        self.derivative(0.0)
    }
}

/// Boundary values and the limit of the left value, which fixes the
/// first-order subtraction `d_W(α, b) ω(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirichletData {
    pub alpha_eps: f64,
    pub beta_eps: f64,
    pub alpha_limit: f64,
}

impl DirichletData {
    /// `α_ε = a + A₀ ε^γ`, `β_ε = b - B₀ ε^γ`, limit `a`.
    pub fn touching_well(spec: &PotentialSpec, eps: f64, a0: f64, b0: f64, gamma: f64) -> Self {
        let e = eps.powf(gamma);
        Self {
            alpha_eps: spec.a + a0 * e,
            beta_eps: spec.b - b0 * e,
            alpha_limit: spec.a,
        }
    }

    /// `α_ε = α` fixed inside the wells, `β_ε = b - B₀ ε^γ`.
    pub fn interior(spec: &PotentialSpec, eps: f64, alpha: f64, b0: f64, gamma: f64) -> Self {
        Self {
            alpha_eps: alpha,
            beta_eps: spec.b - b0 * eps.powf(gamma),
            alpha_limit: alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    /// Second order at scale `ε`.
    Eps,
    /// Second order at scale `ε|log ε|`.
    EpsLog,
}

impl ScalingMode {
    pub fn denominator(self, eps: f64) -> f64 {
        match self {
            Self::Eps => eps,
            Self::EpsLog => eps * eps.ln().abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub epsilon: f64,
    pub mode: ScalingMode,
    pub g_eps: f64,
    pub g1: f64,
    /// `d_W(α, b) ω(0)`
    pub first_order_min: f64,
    pub g2_eps_scale: f64,
    pub g2_log_scale: f64,
    /// Layer time where the split below is cut.
    pub t_split: f64,
    /// Layer energy minus its limit, weighted by `ω(0)`.
    pub a_term: f64,
    /// First moment of the layer energy, weighted by `ω'(0)`.
    pub b_term: f64,
    /// Taylor remainder of `ω` against the layer energy.
    pub c_term: f64,
    /// Energy past the layer.
    pub d_term: f64,
}

impl EnergyReport {
    pub fn g2(&self) -> f64 {
        match self.mode {
            ScalingMode::Eps => self.g2_eps_scale,
            ScalingMode::EpsLog => self.g2_log_scale,
        }
    }

    pub fn decomposition_sum(&self) -> f64 {
        self.a_term + self.b_term + self.c_term + self.d_term
    }
}

#[derive(Default)]
struct EnergyParts {
    total: f64,
    layer: f64,
    layer_moment: f64,
    layer_remainder: f64,
    tail: f64,
}

fn accumulate(parts: &mut EnergyParts, t: f64, wq: f64, density: f64, weight: &WeightFn, split: f64) {
    // density = W/ε + ε v'²; parts hold ∫ density·(…)
    let (w0, d0) = weight.pair(0.0);
    let om = weight.value(t);
    parts.total += wq * density * om;
    if t <= split {
        parts.layer += wq * density;
        parts.layer_moment += wq * density * t;
        parts.layer_remainder += wq * density * (om - w0 - d0 * t);
    } else {
        parts.tail += wq * density * om;
    }
}

fn profile_parts(spec: &PotentialSpec, weight: &WeightFn, profile: &ProfileGrid, split: f64) -> EnergyParts {
    let eps = profile.epsilon;
    let mut parts = EnergyParts::default();
    for i in 0..profile.t.len() - 1 {
        let (t0, t1) = (profile.t[i], profile.t[i + 1]);
        let pieces: &[(f64, f64)] = if split > t0 && split < t1 {
            &[(t0, split), (split, t1)]
        } else {
            &[(t0, t1)]
        };
        for &(x0, x1) in pieces {
            let h = x1 - x0;
            match &profile.dv {
                None => {
                    // P1: slope constant on the element.
                    let slope = (profile.v[i + 1] - profile.v[i]) / (t1 - t0);
                    for &(x, w) in &GAUSS3_UNIT {
                        let t = x0 + x * h;
                        let v = profile.v[i] + slope * (t - t0);
                        let dens = spec.w(v) / eps + eps * slope * slope;
                        accumulate(&mut parts, t, w * h, dens, weight, split);
                    }
                }
                Some(_) => {
                    for &(x, w) in &GAUSS4_UNIT {
                        let t = x0 + x * h;
                        let v = profile.value_at(t);
                        let dv = profile.slope_at(t);
                        let dens = spec.w(v) / eps + eps * dv * dv;
                        accumulate(&mut parts, t, w * h, dens, weight, split);
                    }
                }
            }
        }
    }
    parts
}

/// `G_ε` of a profile: Hermite profiles by 4-point Gauss per segment, P1
/// profiles by the minimizer's own element rule.
pub fn g_energy(spec: &PotentialSpec, weight: &WeightFn, profile: &ProfileGrid) -> f64 {
    profile.epsilon * profile_parts(spec, weight, profile, f64::NEG_INFINITY).total
}

/// All energy scales of `profile` plus the split at the profile's layer
/// time.
pub fn energy_report(
    spec: &PotentialSpec,
    table: &GeodesicTable,
    weight: &WeightFn,
    data: &DirichletData,
    profile: &ProfileGrid,
    mode: ScalingMode,
) -> Result<EnergyReport> {
    let tol = 1e-12 * (spec.b - spec.a);
    let first = profile.v[0];
    let last = *profile.v.last().unwrap();
    if (first - data.alpha_eps).abs() > tol || (last - data.beta_eps).abs() > tol {
        return Err(Error::Admissibility(format!(
            "profile runs {first} → {last}, data asks {} → {}",
            data.alpha_eps, data.beta_eps
        )));
    }
    if (profile.horizon - weight.horizon).abs() > 1e-12 * weight.horizon {
        return Err(Error::Admissibility(format!(
            "profile horizon {} differs from weight horizon {}",
            profile.horizon, weight.horizon
        )));
    }
    let eps = profile.epsilon;
    let split = profile.t_eps;
    let parts = profile_parts(spec, weight, profile, split);
    let dwab = table
        .dw(data.alpha_limit, spec.b)
        .finite()
        .ok_or_else(|| Error::Domain("d_W(α, b) is infinite".into()))?;
    let (w0, d0) = weight.pair(0.0);
    let sub = dwab * w0;
    let g1 = parts.total;
    let den = mode.denominator(eps);
    Ok(EnergyReport {
        epsilon: eps,
        mode,
        g_eps: eps * g1,
        g1,
        first_order_min: sub,
        g2_eps_scale: (g1 - sub) / eps,
        g2_log_scale: (g1 - sub) / (eps * eps.ln().abs()),
        t_split: split,
        a_term: (parts.layer - dwab) * w0 / den,
        b_term: parts.layer_moment * d0 / den,
        c_term: parts.layer_remainder / den,
        d_term: parts.tail / den,
    })
}

/// Graded mesh: uniform spacing `ε/nodes_per_eps` over `[0, layer_end]`,
/// then geometric growth up to `max_step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshOptions {
    pub nodes_per_eps: usize,
    pub growth: f64,
    /// Uniform region extends this many `ε` past the recovery layer time.
    pub layer_margin: f64,
    /// Largest step as a fraction of the horizon.
    pub max_step_fraction: f64,
    /// Largest step in units of `ε`. Above about `1.2ε` the element
    /// Hessian loses its M-matrix sign pattern and discrete minimizers
    /// overshoot the wells.
    pub max_step_eps: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self {
            nodes_per_eps: 512,
            growth: 1.05,
            layer_margin: 20.0,
            max_step_fraction: 1.0 / 64.0,
            max_step_eps: 0.5,
        }
    }
}

pub fn graded_mesh(eps: f64, horizon: f64, layer_time: f64, opts: MeshOptions) -> Vec<f64> {
    let h0 = eps / opts.nodes_per_eps as f64;
    let uniform_end = (layer_time + opts.layer_margin * eps).min(horizon);
    let n_uniform = (uniform_end / h0).ceil() as usize;
    let mut t: Vec<f64> = (0..=n_uniform).map(|i| (i as f64 * h0).min(horizon)).collect();
    t.dedup();
    let h_max = (opts.max_step_fraction * horizon).min(opts.max_step_eps * eps);
    let mut h = h0;
    while *t.last().unwrap() < horizon {
        h = (h * opts.growth).min(h_max);
        let next = t.last().unwrap() + h;
        // Avoid a sliver at the end.
        if next > horizon - 0.5 * h {
            t.push(horizon);
        } else {
            t.push(next);
        }
    }
    t
}

/// Split every element in two.
pub fn refine_mesh(t: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * t.len());
    for w in t.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(*t.last().unwrap());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub max_newton: usize,
    pub max_flow: usize,
    /// Residual target relative to `max |W'|` on `[a, b]`.
    pub rel_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_newton: 200,
            max_flow: 20_000,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Minimizer1DResult {
    pub profile: ProfileGrid,
    /// Largest `|∂G/∂v_i| / ∫φ_i` over interior nodes.
    pub el_residual_max: f64,
    pub el_tolerance: f64,
    pub newton_iterations: usize,
    pub used_fallback: bool,
    /// Every interior node strictly inside `(a, b)`.
    pub interior: bool,
    /// Interior nodes sitting exactly on a well. Past the layer the deficit
    /// `b - v` decays like `e^{-c t/ε}` and drops below one ulp of `b`; the
    /// Euler-Lagrange residual still holds there, so such nodes are not
    /// held by the clamp.
    pub nodes_on_wells: usize,
    pub energies: EnergyReport,
}

struct Discrete<'a> {
    spec: &'a PotentialSpec,
    eps: f64,
    t: &'a [f64],
    /// Mean of ω per element, and ω at the Gauss points.
    omega_bar: Vec<f64>,
    omega_q: Vec<[f64; 3]>,
}

impl<'a> Discrete<'a> {
    fn new(spec: &'a PotentialSpec, weight: &WeightFn, eps: f64, t: &'a [f64]) -> Self {
        let mut omega_bar = Vec::with_capacity(t.len() - 1);
        let mut omega_q = Vec::with_capacity(t.len() - 1);
        for w in t.windows(2) {
            let h = w[1] - w[0];
            let mut q = [0.0; 3];
            let mut bar = 0.0;
            for (k, &(x, wt)) in GAUSS3_UNIT.iter().enumerate() {
                q[k] = weight.value(w[0] + x * h);
                bar += wt * q[k];
            }
            omega_bar.push(bar);
            omega_q.push(q);
        }
        Self {
            spec,
            eps,
            t,
            omega_bar,
            omega_q,
        }
    }

    fn energy(&self, v: &[f64]) -> f64 {
        let e2 = self.eps * self.eps;
        let mut total = 0.0;
        for i in 0..self.t.len() - 1 {
            let h = self.t[i + 1] - self.t[i];
            let dv = v[i + 1] - v[i];
            let mut pot = 0.0;
            for (k, &(x, wt)) in GAUSS3_UNIT.iter().enumerate() {
                pot += wt * self.spec.w(v[i] + x * dv) * self.omega_q[i][k];
            }
            total += e2 * dv * dv / h * self.omega_bar[i] + h * pot;
        }
        total
    }

    /// Gradient and tridiagonal Hessian over all nodes.
    fn derivatives(&self, v: &[f64], with_hessian: bool) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = v.len();
        let e2 = self.eps * self.eps;
        let mut g = vec![0.0; n];
        let (mut diag, mut off) = if with_hessian {
            (vec![0.0; n], vec![0.0; n - 1])
        } else {
            (Vec::new(), Vec::new())
        };
        for i in 0..n - 1 {
            let h = self.t[i + 1] - self.t[i];
            let dv = v[i + 1] - v[i];
            let k = 2.0 * e2 * self.omega_bar[i] / h;
            g[i] -= k * dv;
            g[i + 1] += k * dv;
            let (mut h00, mut h01, mut h11) = (k, -k, k);
            for (q, &(x, wt)) in GAUSS3_UNIT.iter().enumerate() {
                let vq = v[i] + x * dv;
                let om = self.omega_q[i][q] * wt * h;
                let d1 = self.spec.dw(vq) * om;
                g[i] += d1 * (1.0 - x);
                g[i + 1] += d1 * x;
                if with_hessian {
                    let d2 = self.spec.d2w(vq) * om;
                    h00 += d2 * (1.0 - x) * (1.0 - x);
                    h01 += d2 * x * (1.0 - x);
                    h11 += d2 * x * x;
                }
            }
            if with_hessian {
                diag[i] += h00;
                diag[i + 1] += h11;
                off[i] += h01;
            }
        }
        (g, diag, off)
    }

    fn lumped_mass(&self) -> Vec<f64> {
        let n = self.t.len();
        let mut m = vec![0.0; n];
        for i in 0..n - 1 {
            let h = self.t[i + 1] - self.t[i];
            m[i] += 0.5 * h;
            m[i + 1] += 0.5 * h;
        }
        m
    }

    fn residual(&self, g: &[f64], mass: &[f64]) -> f64 {
        (1..g.len() - 1)
            .map(|i| (g[i] / mass[i]).abs())
            .fold(0.0, f64::max)
    }
}

fn clamp_into(v: &mut [f64], lo: f64, hi: f64) {
    for x in v.iter_mut() {
        *x = x.clamp(lo, hi);
    }
}

/// Minimize `G_ε` on the given mesh from the initial nodal values `v`.
pub fn minimize_on_mesh(
    spec: &PotentialSpec,
    table: &GeodesicTable,
    weight: &WeightFn,
    eps: f64,
    data: &DirichletData,
    t: &[f64],
    mut v: Vec<f64>,
    opts: SolverOptions,
) -> Result<Minimizer1DResult> {
    let n = t.len();
    if n < 3 || v.len() != n {
        return Err(Error::Domain("mesh needs at least 3 nodes matching the initial guess".into()));
    }
    let (a, b) = (spec.a, spec.b);
    let disc = Discrete::new(spec, weight, eps, t);
    let mass = disc.lumped_mass();
    v[0] = data.alpha_eps;
    v[n - 1] = data.beta_eps;
    clamp_into(&mut v, a, b);
    let tol = opts.rel_tol * spec.dw_scale();
    let curvature_scale = {
        let m = 64;
        (0..=m)
            .map(|i| spec.d2w(a + (b - a) * i as f64 / m as f64).abs())
            .fold(0.0, f64::max)
    };
    let w_max = (0..=64)
        .map(|i| weight.value(weight.horizon * i as f64 / 64.0))
        .fold(0.0, f64::max);

    let mut history = Vec::new();
    let mut energy = disc.energy(&v);
    let mut iterations = 0;
    let mut used_fallback = false;
    let mut converged = false;

    for round in 0..2 {
        // Newton with shift on indefiniteness and Armijo backtracking.
        for _ in 0..opts.max_newton {
            let (g, diag, off) = disc.derivatives(&v, true);
            let res = disc.residual(&g, &mass);
            history.push(res);
            if res <= tol {
                converged = true;
                break;
            }
            iterations += 1;
            let m = n - 2;
            let rhs: Vec<f64> = (1..n - 1).map(|i| -g[i]).collect();
            let mut shift = 0.0;
            let step = loop {
                let d: Vec<f64> = (1..n - 1).map(|i| diag[i] + shift * mass[i]).collect();
                if let Some(x) = solve_spd_tridiagonal(&d, &off[1..n - 2], &rhs) {
                    break x;
                }
                shift = if shift == 0.0 { 1e-3 * curvature_scale * w_max } else { 10.0 * shift };
                if shift > 1e12 {
                    return Err(Error::Solver {
                        message: "Newton shift exploded".into(),
                        history,
                    });
                }
            };
            let slope: f64 = (0..m).map(|j| step[j] * g[j + 1]).sum();
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let mut trial = v.clone();
                for j in 0..m {
                    trial[j + 1] += lambda * step[j];
                }
                clamp_into(&mut trial[1..n - 1], a, b);
                let e_new = disc.energy(&trial);
                let decrease_ok = e_new <= energy + 1e-4 * lambda * slope;
                // Near the minimum the energy difference drowns in round-off;
                // fall back to residual decrease for the full step.
                let roundoff = (e_new - energy).abs() <= 1e-13 * energy.abs().max(1e-300);
                let res_ok = roundoff && {
                    let (gt, _, _) = disc.derivatives(&trial, false);
                    disc.residual(&gt, &mass) < res
                };
                if decrease_ok || res_ok {
                    v = trial;
                    energy = e_new;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if converged || round == 1 {
            break;
        }
        // Semi-implicit gradient flow: implicit in the gradient term,
        // explicit and stabilized in the potential.
        used_fallback = true;
        let stab = curvature_scale * w_max;
        let (_, stiff_diag, stiff_off) = {
            let zero_w = Discrete {
                spec,
                eps,
                t,
                omega_bar: disc.omega_bar.clone(),
                omega_q: disc.omega_q.clone(),
            };
            stiffness(&zero_w)
        };
        for _ in 0..opts.max_flow {
            let (g, _, _) = disc.derivatives(&v, false);
            let res = disc.residual(&g, &mass);
            if res <= 1e3 * tol {
                break;
            }
            let d: Vec<f64> = (1..n - 1).map(|i| stiff_diag[i] + stab * mass[i]).collect();
            let rhs: Vec<f64> = (1..n - 1).map(|i| -g[i]).collect();
            let Some(step) = solve_spd_tridiagonal(&d, &stiff_off[1..n - 2], &rhs) else {
                break;
            };
            for j in 0..n - 2 {
                v[j + 1] += step[j];
            }
            clamp_into(&mut v[1..n - 1], a, b);
        }
        energy = disc.energy(&v);
    }

    if !converged {
        let tail = history.iter().rev().take(10).rev().cloned().collect();
        return Err(Error::Solver {
            message: format!("discrete Euler-Lagrange residual above {tol:e}"),
            history: tail,
        });
    }
    let (g, _, _) = disc.derivatives(&v, false);
    let el_residual_max = disc.residual(&g, &mass);
    let interior = v[1..n - 1].iter().all(|&x| x > a && x < b);
    let nodes_on_wells = v[1..n - 1].iter().filter(|&&x| x == a || x == b).count();
    let profile = ProfileGrid::from_nodes(t.to_vec(), v, eps, spec.c)?;
    let mode = if data.alpha_limit == spec.a {
        ScalingMode::EpsLog
    } else {
        ScalingMode::Eps
    };
    let energies = energy_report(spec, table, weight, data, &profile, mode)?;
    Ok(Minimizer1DResult {
        profile,
        el_residual_max,
        el_tolerance: tol,
        newton_iterations: iterations,
        used_fallback,
        interior,
        nodes_on_wells,
        energies,
    })
}

fn stiffness(disc: &Discrete<'_>) -> ((), Vec<f64>, Vec<f64>) {
    let n = disc.t.len();
    let e2 = disc.eps * disc.eps;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for i in 0..n - 1 {
        let k = 2.0 * e2 * disc.omega_bar[i] / (disc.t[i + 1] - disc.t[i]);
        diag[i] += k;
        diag[i + 1] += k;
        off[i] -= k;
    }
    ((), diag, off)
}

/// Minimize `G_ε` on a graded mesh, starting from the recovery profile.
pub fn minimize_g(
    spec: &PotentialSpec,
    table: &GeodesicTable,
    weight: &WeightFn,
    eps: f64,
    data: &DirichletData,
    mesh: MeshOptions,
) -> Result<Minimizer1DResult> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε = {eps} must be positive")));
    }
    let (a, b) = (spec.a, spec.b);
    if !(a <= data.alpha_eps && data.alpha_eps <= b && a <= data.beta_eps && data.beta_eps <= b) {
        return Err(Error::Domain("boundary data outside [a, b]".into()));
    }
    let (lo, hi) = (data.alpha_eps.min(data.beta_eps), data.alpha_eps.max(data.beta_eps));
    let init = recovery_profile(spec, eps, lo, hi, weight.horizon, Regularizer::Eps)?;
    let t = graded_mesh(eps, weight.horizon, init.t_eps, mesh);
    let mut v: Vec<f64> = t.iter().map(|&x| init.value_at(x)).collect();
    if data.alpha_eps > data.beta_eps {
        v.reverse();
        let tt: Vec<f64> = t.iter().map(|&x| weight.horizon - x).rev().collect();
        v = tt.iter().map(|&x| init.value_at(weight.horizon - x)).collect();
    }
    minimize_on_mesh(spec, table, weight, eps, data, &t, v, SolverOptions::default())
}

/// P1 interpolant of `profile` on the mesh `t`.
pub fn interpolate_onto(profile: &ProfileGrid, t: &[f64]) -> Result<ProfileGrid> {
    let v: Vec<f64> = t.iter().map(|&x| profile.value_at(x)).collect();
    ProfileGrid::from_nodes(t.to_vec(), v, profile.epsilon, f64::NAN).map(|mut p| {
        p.l_eps = profile.l_eps;
        p
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub tau0: f64,
    /// `v' > 0` wherever `v ≤ b - τ₀√ε`.
    pub monotone: bool,
    /// Element midpoints violating the near-`a` derivative bounds.
    pub near_a_violations: Vec<f64>,
    pub near_b_violations: Vec<f64>,
    pub non_increasing_at: Vec<f64>,
}

impl MonotonicityReport {
    pub fn all_hold(&self) -> bool {
        self.monotone && self.near_a_violations.is_empty() && self.near_b_violations.is_empty()
    }
}

/// Check monotonicity and the two-sided derivative bounds on their windows,
/// at element midpoints of a P1 profile (at nodes of a Hermite one).
pub fn check_monotonicity(profile: &ProfileGrid, spec: &PotentialSpec, sigma: f64, tau0: f64) -> MonotonicityReport {
    let eps = profile.epsilon;
    let root = eps.sqrt();
    let (a, b) = (spec.a, spec.b);
    let s2 = sigma * sigma;
    let mut report = MonotonicityReport {
        tau0,
        monotone: true,
        near_a_violations: Vec::new(),
        near_b_violations: Vec::new(),
        non_increasing_at: Vec::new(),
    };
    let samples: Vec<(f64, f64, f64)> = match &profile.dv {
        None => profile
            .t
            .windows(2)
            .zip(profile.v.windows(2))
            .map(|(t, v)| (0.5 * (t[0] + t[1]), 0.5 * (v[0] + v[1]), (v[1] - v[0]) / (t[1] - t[0])))
            .collect(),
        Some(d) => profile
            .t
            .iter()
            .zip(&profile.v)
            .zip(d)
            .filter(|((t, _), _)| **t < profile.t_eps)
            .map(|((t, v), d)| (*t, *v, *d))
            .collect(),
    };
    for (t, v, dv) in samples {
        let e2d2 = eps * eps * dv * dv;
        if v <= b - tau0 * root && !(dv > 0.0) {
            report.monotone = false;
            report.non_increasing_at.push(t);
        }
        if v >= a + tau0 * root && v <= spec.beta_minus {
            let q = (v - a) * (v - a);
            if !(0.5 * s2 * q <= e2d2 && e2d2 <= 1.5 / s2 * q) {
                report.near_a_violations.push(t);
            }
        }
        if v >= spec.alpha_minus && v <= b - tau0 * root {
            let q = (b - v) * (b - v);
            if !(0.5 * s2 * q <= e2d2 && e2d2 <= 1.5 / s2 * q) {
                report.near_b_violations.push(t);
            }
        }
    }
    report
}

/// Smallest `τ₀ ∈ {1, 2, 4, 8}/σ` for which every window assertion holds.
pub fn calibrate_tau0(profile: &ProfileGrid, spec: &PotentialSpec, sigma: f64) -> Option<f64> {
    [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|m| m / sigma)
        .find(|&tau| check_monotonicity(profile, spec, sigma, tau).all_hold())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingReport {
    pub epsilon: f64,
    /// First time `v = β_ε - ε^k`.
    pub t_eps: f64,
    pub t_eps_ratio: f64,
    /// First time `v = a + δ_η`.
    pub s_eps_eta: f64,
    /// `S √2 √W''(a) / ((1-η) ε|log ε|)`
    pub s_ratio: f64,
    /// `S √2 √W''(a) / (ε|log ε|)`
    pub s_ratio_raw: f64,
    /// `min √ε |v'|` over `α_ε ≤ v ≤ a + τ₀√ε`.
    pub layer_slope_min: f64,
}

pub fn check_hitting_bounds(
    profile: &ProfileGrid,
    spec: &PotentialSpec,
    eta: f64,
    k: i32,
    tau0: f64,
) -> Result<HittingReport> {
    let eps = profile.epsilon;
    let el = eps * eps.ln().abs();
    let level_t = profile.beta_eps - eps.powi(k);
    let t_eps = profile
        .hitting_time(level_t)
        .ok_or_else(|| Error::Domain(format!("profile never reaches {level_t}")))?;
    let delta = taylor_delta(spec, eta)?;
    let s = profile
        .hitting_time(spec.a + delta)
        .ok_or_else(|| Error::Domain("profile never reaches a + δ_η".into()))?;
    let c = 2f64.sqrt() * spec.d2w(spec.a).sqrt();
    let top = spec.a + tau0 * eps.sqrt();
    let mut slope_min = f64::INFINITY;
    for i in 0..profile.t.len() - 1 {
        let (v0, v1) = (profile.v[i], profile.v[i + 1]);
        if v0 > top {
            break;
        }
        let slope = match &profile.dv {
            Some(d) => d[i],
            None => (v1 - v0) / (profile.t[i + 1] - profile.t[i]),
        };
        slope_min = slope_min.min(eps.sqrt() * slope.abs());
    }
    Ok(HittingReport {
        epsilon: eps,
        t_eps,
        t_eps_ratio: t_eps / el,
        s_eps_eta: s,
        s_ratio: s * c / ((1.0 - eta) * el),
        s_ratio_raw: s * c / el,
        layer_slope_min: slope_min,
    })
}

/// Default threshold exponent for [`check_hitting_bounds`].
pub const DEFAULT_THRESHOLD_POWER: i32 = THRESHOLD_POWER;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitCandidate {
    ConstantA,
    ConstantB,
    /// Jump between the wells at `at`; `rising` means a on the left.
    Jump { at: f64, rising: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitMinimizer {
    pub candidate: LimitCandidate,
    pub value: f64,
}

/// Minimize the first-order limit over constants and single jumps.
pub fn g1_limit_minimizer(
    table: &GeodesicTable,
    weight: &WeightFn,
    alpha: f64,
    beta: f64,
) -> Result<LimitMinimizer> {
    let (a, b) = (table.spec.a, table.spec.b);
    let d = |r: f64, s: f64| -> Result<f64> {
        table
            .dw(r, s)
            .finite()
            .ok_or_else(|| Error::Domain(format!("d_W({r}, {s}) infinite")))
    };
    let (w0, wt) = (weight.value(0.0), weight.value(weight.horizon));
    let cw = table.cw();
    let mut best = LimitMinimizer {
        candidate: LimitCandidate::ConstantB,
        value: d(b, alpha)? * w0 + d(b, beta)? * wt,
    };
    let mut consider = |candidate, value: f64| {
        if value < best.value {
            best = LimitMinimizer { candidate, value };
        }
    };
    consider(LimitCandidate::ConstantA, d(a, alpha)? * w0 + d(a, beta)? * wt);
    let rise = d(a, alpha)? * w0 + d(b, beta)? * wt;
    let fall = d(b, alpha)? * w0 + d(a, beta)? * wt;
    let m = 1000;
    for i in 1..m {
        let at = weight.horizon * i as f64 / m as f64;
        let jump = cw * weight.value(at);
        consider(LimitCandidate::Jump { at, rising: true }, jump + rise);
        consider(LimitCandidate::Jump { at, rising: false }, jump + fall);
    }
    Ok(best)
}

/// Compact JSON record of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizerRecord {
    pub epsilon: f64,
    pub energies: EnergyReport,
    pub el_residual_max: f64,
    pub interior: bool,
    pub used_fallback: bool,
    pub t_eps_ratio: f64,
}

impl Minimizer1DResult {
    pub fn record(&self) -> MinimizerRecord {
        let eps = self.profile.epsilon;
        MinimizerRecord {
            epsilon: eps,
            energies: self.energies.clone(),
            el_residual_max: self.el_residual_max,
            interior: self.interior,
            used_fallback: self.used_fallback,
            t_eps_ratio: self.profile.t_eps / (eps * eps.ln().abs()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.record())?)
    }
}
