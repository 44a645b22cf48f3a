//! Planar fields on a domain bounded by a [`BoundaryGeometry`]: Dirichlet
//! data with an exact plateau at the well `a`, the fiberwise recovery field
//! in tubular coordinates, its energy split into normal and tangential
//! parts, and a Cartesian gradient-flow minimizer.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::GeodesicTable;
use crate::geometry::BoundaryGeometry;
use crate::linalg::least_squares;
use crate::minimizer1d::{g_energy, WeightFn};
use crate::potential::PotentialSpec;
use crate::profile::{psi_regularized, recovery_profile, ProfileGrid, Regularizer};
use crate::quadrature::GAUSS4_UNIT;

pub const DEFAULT_FIBERS: usize = 1024;

/// Quintic smoothstep `10x³ − 15x⁴ + 6x⁵`, C² with flat ends.
fn smoothstep(x: f64) -> (f64, f64) {
    let x = x.clamp(0.0, 1.0);
    let s = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    let ds = 30.0 * x * x * (1.0 - x) * (1.0 - x);
    (s, ds)
}

/// `64 x³(1−x)³` on `[0, 1]`: a C² bump vanishing to third order at both
/// ends, so it never touches the plateau edge.
fn bump(x: f64) -> (f64, f64) {
    if !(0.0..=1.0).contains(&x) {
        return (0.0, 0.0);
    }
    let (p, q) = (x * (1.0 - x), 1.0 - 2.0 * x);
    (64.0 * p * p * p, 192.0 * p * p * q)
}

/// A closed arc `[start, start + length]` of arclength, taken modulo the
/// boundary length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct PlateauArc {
    pub start: f64,
    pub length: f64,
}

/// Dirichlet data `g` with `{g = a}` a union of arcs, `g = b` away from
/// them, and the perturbed family `g_ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryData {
    pub a: f64,
    pub b: f64,
    pub boundary_length: f64,
    pub plateau: Vec<PlateauArc>,
    pub transition_width: f64,
    pub gamma: f64,
    pub a0: f64,
    /// Arclength distance from the plateau to the nearest sample with
    /// `κ ≥ 0` (the full half-length when there is none).
    pub margin: f64,
}

impl BoundaryData {
    /// Distance from `y` to the plateau and its derivative in `y`
    /// (`None` when the plateau is empty).
    fn plateau_distance(&self, y: f64) -> Option<(f64, f64)> {
        let len = self.boundary_length;
        self.plateau
            .iter()
            .map(|arc| {
                let rel = (y - arc.start).rem_euclid(len);
                if rel <= arc.length {
                    (0.0, 0.0)
                } else {
                    let after = rel - arc.length;
                    let before = len - rel;
                    if after <= before {
                        (after, 1.0)
                    } else {
                        (before, -1.0)
                    }
                }
            })
            .min_by(|p, q| p.0.total_cmp(&q.0))
    }

    pub fn plateau_length(&self) -> f64 {
        self.plateau.iter().map(|a| a.length).sum()
    }

    pub fn on_plateau(&self, y: f64) -> bool {
        matches!(self.plateau_distance(y), Some((d, _)) if d == 0.0)
    }

    /// `g(y)` and `g'(y)`.
    pub fn g_pair(&self, y: f64) -> (f64, f64) {
        match self.plateau_distance(y) {
            None => (self.b, 0.0),
            Some((d, sign)) => {
                let (s, ds) = smoothstep(d / self.transition_width);
                let gap = self.b - self.a;
                (self.a + gap * s, gap * ds * sign / self.transition_width)
            }
        }
    }

    pub fn g(&self, y: f64) -> f64 {
        self.g_pair(y).0
    }

    /// `g_ε = clamp(g + A₀ ε^γ bump, [a, b])` and its derivative.
    pub fn g_eps_pair(&self, y: f64, eps: f64) -> (f64, f64) {
        let (g, dg) = self.g_pair(y);
        let (p, dp) = match self.plateau_distance(y) {
            Some((d, sign)) if self.a0 != 0.0 => {
                let (p, dp) = bump(d / self.transition_width);
                (p, dp * sign / self.transition_width)
            }
            _ => (0.0, 0.0),
        };
        let amp = self.a0 * eps.powf(self.gamma);
        let raw = g + amp * p;
        if raw <= self.a {
            (self.a, 0.0)
        } else if raw >= self.b {
            (self.b, 0.0)
        } else {
            (raw, dg + amp * dp)
        }
    }

    pub fn g_eps(&self, y: f64, eps: f64) -> f64 {
        self.g_eps_pair(y, eps).0
    }

    /// Arclength breakpoints of the piecewise definition, sorted in `[0, L]`.
    fn breakpoints(&self) -> Vec<f64> {
        let len = self.boundary_length;
        let mut out = vec![0.0, len];
        for arc in &self.plateau {
            let w = self.transition_width;
            for p in [arc.start - w, arc.start, arc.start + arc.length, arc.start + arc.length + w] {
                out.push(p.rem_euclid(len));
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|p, q| (*p - *q).abs() < 1e-15 * len);
        out
    }

    /// `∫_{∂Ω} f(y) dH¹` for integrands smooth between the breakpoints.
    pub fn boundary_integral<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let bp = self.breakpoints();
        let sub = 64;
        let mut total = 0.0;
        for w in bp.windows(2) {
            let h = (w[1] - w[0]) / sub as f64;
            for k in 0..sub {
                let x0 = w[0] + h * k as f64;
                total += GAUSS4_UNIT.iter().map(|&(x, wq)| wq * f(x0 + x * h)).sum::<f64>() * h;
            }
        }
        total
    }

    /// `∫ |∇_τ g_ε|² dH¹`.
    pub fn tangential_energy(&self, eps: f64) -> f64 {
        self.boundary_integral(|y| self.g_eps_pair(y, eps).1.powi(2))
    }
}

/// Validate the plateau against the curvature sign and build the data.
pub fn make_boundary_data(
    geom: &BoundaryGeometry,
    spec: &PotentialSpec,
    plateau: &[PlateauArc],
    transition_width: f64,
    gamma: f64,
    a0: f64,
) -> Result<BoundaryData> {
    let len = geom.length;
    if !(gamma > 1.0) {
        return Err(Error::Config(format!("γ = {gamma} must exceed 1")));
    }
    if !(transition_width > 0.0) {
        return Err(Error::Config(format!("transition width {transition_width} must be positive")));
    }
    if !a0.is_finite() {
        return Err(Error::Config("A₀ must be finite".into()));
    }
    let mut arcs: Vec<PlateauArc> = plateau
        .iter()
        .map(|a| PlateauArc { start: a.start.rem_euclid(len), length: a.length })
        .collect();
    if arcs.iter().any(|a| !(a.length > 0.0)) {
        return Err(Error::Config("plateau arcs need positive length".into()));
    }
    arcs.sort_by(|p, q| p.start.total_cmp(&q.start));
    let reserved: f64 = arcs.iter().map(|a| a.length + 2.0 * transition_width).sum();
    if reserved >= len {
        return Err(Error::Config("plateau arcs and transitions cover the whole boundary".into()));
    }
    for (i, arc) in arcs.iter().enumerate() {
        let next = &arcs[(i + 1) % arcs.len()];
        let gap = (next.start - (arc.start + arc.length)).rem_euclid(len);
        if arcs.len() > 1 && gap < 2.0 * transition_width {
            return Err(Error::Config("plateau transitions overlap".into()));
        }
    }
    let mut data = BoundaryData {
        a: spec.a,
        b: spec.b,
        boundary_length: len,
        plateau: arcs,
        transition_width,
        gamma,
        a0,
        margin: 0.5 * len,
    };
    if data.plateau.is_empty() {
        return Ok(data);
    }
    // Curvature along each arc, sampled at the boundary spacing.
    let ds = geom.sample_spacing();
    for arc in &data.plateau {
        let n = (arc.length / ds).ceil() as usize + 1;
        for k in 0..=n {
            let y = arc.start + arc.length * k as f64 / n as f64;
            let kappa = geom.curvature(y);
            if !(kappa < 0.0) {
                return Err(Error::Config(format!(
                    "plateau reaches y = {:.6} where κ = {kappa:.6} ≥ 0; b cannot be the minimizer there",
                    y.rem_euclid(len)
                )));
            }
        }
    }
    let margin = geom
        .samples()
        .iter()
        .filter(|s| s.curvature >= 0.0)
        .filter_map(|s| data.plateau_distance(s.arclength).map(|p| p.0))
        .fold(0.5 * len, f64::min);
    if !(margin > 0.0) {
        return Err(Error::Config("plateau has no margin to {κ ≥ 0}".into()));
    }
    data.margin = margin;
    Ok(data)
}

/// A competitor with `u = a` on the region cut off by a chord.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChordCompetitor {
    /// The `a` region is bounded by the boundary arc from `from` to `to`
    /// (counterclockwise) and the chord.
    pub from: f64,
    pub to: f64,
    pub chord: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct U0Report {
    /// `∫ d_W(b, g) dH¹`
    pub f1_b: f64,
    /// `∫ d_W(a, g) dH¹`
    pub f1_a: f64,
    pub best_chord: Option<ChordCompetitor>,
    pub chords_tested: usize,
    /// Best competitor value minus `f1_b`; positive when `b` wins.
    pub margin: f64,
    pub passed: bool,
}

pub const CHORD_GRID: usize = 256;

/// Compare the first-order energy of the constant `b` against the constant
/// `a` and every single-chord competitor with endpoints on a boundary grid.
pub fn evaluate_u0_b(geom: &BoundaryGeometry, data: &BoundaryData, table: &GeodesicTable, grid: usize) -> U0Report {
    let n = geom.samples().len();
    let ds = geom.length / n as f64;
    let cw = table.cw();
    // Midpoint samples of d_W(a, g); d_W(b, g) = C_W − d_W(a, g) for g in [a, b].
    let da: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| table.action(data.a, data.g((i as f64 + 0.5) * ds)).abs())
        .collect();
    let mut prefix_a = vec![0.0; n + 1];
    for i in 0..n {
        prefix_a[i + 1] = prefix_a[i] + da[i] * ds;
    }
    let f1_a = prefix_a[n];
    let f1_b = cw * geom.length - f1_a;
    let step = (n / grid.max(3)).max(1);
    let idx: Vec<usize> = (0..n).step_by(step).collect();
    let pos = |i: usize| geom.samples()[i].position;
    // Chords of a convex domain stay inside.
    let convex = geom.samples().iter().all(|s| s.curvature <= 0.0);
    let inside = |p: [f64; 2], q: [f64; 2]| {
        convex
            || (1..32).all(|k| {
            let s = k as f64 / 32.0;
            geom.contains([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])])
        })
    };
    let mut best: Option<ChordCompetitor> = None;
    let mut tested = 0;
    for (ii, &i) in idx.iter().enumerate() {
        for &j in &idx[ii + 1..] {
            let (p, q) = (pos(i), pos(j));
            if !inside(p, q) {
                continue;
            }
            let chord = (p[0] - q[0]).hypot(p[1] - q[1]);
            // Arc i → j carries a, the rest b; and the complementary choice.
            let arc_a = prefix_a[j] - prefix_a[i];
            let arc_len = (j - i) as f64 * ds;
            let inner = cw * chord + arc_a + (f1_b - (cw * arc_len - arc_a));
            let outer = cw * chord + (f1_a - arc_a) + (cw * arc_len - arc_a);
            for (value, from, to) in [(inner, i, j), (outer, j, i)] {
                tested += 1;
                if best.is_none_or(|b| value < b.value) {
                    best = Some(ChordCompetitor {
                        from: geom.samples()[from].arclength,
                        to: geom.samples()[to].arclength,
                        chord,
                        value,
                    });
                }
            }
        }
    }
    let best_other = best.map_or(f1_a, |c| c.value.min(f1_a));
    let margin = best_other - f1_b;
    U0Report {
        f1_b,
        f1_a,
        best_chord: best,
        chords_tested: tested,
        margin,
        passed: margin > 0.0,
    }
}

/// [`evaluate_u0_b`] that rejects the configuration unless `b` is strictly
/// best.
pub fn check_u0_b(geom: &BoundaryGeometry, data: &BoundaryData, table: &GeodesicTable) -> Result<U0Report> {
    let r = evaluate_u0_b(geom, data, table, CHORD_GRID);
    if r.passed {
        Ok(r)
    } else {
        Err(Error::Config(format!(
            "constant b is not the strict first-order minimizer: F(b) = {:.6}, best competitor {:.6} (margin {:.3e})",
            r.f1_b,
            r.f1_b + r.margin,
            r.margin
        )))
    }
}

/// One normal fiber of the recovery field.
#[derive(Debug, Clone)]
pub struct Fiber {
    pub y: f64,
    pub g: f64,
    pub dg: f64,
    pub kappa: f64,
    pub profile: ProfileGrid,
}

#[derive(Debug, Clone)]
pub struct FiberField {
    pub epsilon: f64,
    pub delta: f64,
    pub regularizer: Regularizer,
    pub b: f64,
    pub boundary_length: f64,
    pub fibers: Vec<Fiber>,
}

/// Node classification of the Cartesian grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Interior,
    /// Outside `Ω` next to an interior node; carries Dirichlet data.
    Ghost,
    Off,
}

#[derive(Debug, Clone)]
pub struct GridField {
    pub epsilon: f64,
    pub h: f64,
    pub origin: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub kind: Vec<NodeKind>,
    pub values: Vec<f64>,
    /// Signed distance to the boundary, positive inside.
    pub distance: Vec<f64>,
}

impl GridField {
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + self.h * i as f64, self.origin[1] + self.h * j as f64]
    }
}

#[derive(Debug, Clone)]
pub enum Field2D {
    Fiber(FiberField),
    Grid(GridField),
}

impl Field2D {
    pub fn epsilon(&self) -> f64 {
        match self {
            Self::Fiber(f) => f.epsilon,
            Self::Grid(g) => g.epsilon,
        }
    }

    /// CSV point cloud with header `x,y,u`.
    pub fn write_point_cloud<W: Write>(&self, geom: &BoundaryGeometry, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "u"])?;
        match self {
            Self::Fiber(f) => {
                for fib in &f.fibers {
                    let s = geom.sample_at(fib.y);
                    for (t, v) in fib.profile.t.iter().zip(&fib.profile.v) {
                        let x = [s.position[0] + t * s.normal[0], s.position[1] + t * s.normal[1]];
                        w.serialize((x[0], x[1], *v))?;
                    }
                }
            }
            Self::Grid(g) => {
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        let k = j * g.nx + i;
                        if g.kind[k] == NodeKind::Interior {
                            let x = g.node(i, j);
                            w.serialize((x[0], x[1], g.values[k]))?;
                        }
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Fiber count and the regularization `δ` inside `Ψ_ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberOptions {
    pub fibers: usize,
    pub regularizer: Regularizer,
}

impl Default for FiberOptions {
    fn default() -> Self {
        Self { fibers: DEFAULT_FIBERS, regularizer: Regularizer::Eps }
    }
}

/// Recovery field: on each normal fiber the inverse of `Ψ_ε` from `g_ε(y)`
/// to `b`, then constant `b`.
pub fn recovery_field(
    geom: &BoundaryGeometry,
    data: &BoundaryData,
    spec: &PotentialSpec,
    eps: f64,
    delta: f64,
    opts: FiberOptions,
) -> Result<FiberField> {
    if !(delta > 0.0 && delta <= geom.delta_max) {
        return Err(Error::Domain(format!("δ = {delta} outside (0, {}]", geom.delta_max)));
    }
    if opts.fibers < 8 {
        return Err(Error::Config(format!("need at least 8 fibers, got {}", opts.fibers)));
    }
    let n = opts.fibers;
    let fibers = (0..n)
        .into_par_iter()
        .map(|i| {
            let y = geom.length * i as f64 / n as f64;
            let (g, dg) = data.g_eps_pair(y, eps);
            let profile = recovery_profile(spec, eps, g, spec.b, delta, opts.regularizer)?;
            Ok(Fiber { y, g, dg, kappa: geom.curvature(y), profile })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FiberField {
        epsilon: eps,
        delta,
        regularizer: opts.regularizer,
        b: spec.b,
        boundary_length: geom.length,
        fibers,
    })
}

impl FiberField {
    fn spacing(&self) -> f64 {
        self.boundary_length / self.fibers.len() as f64
    }

    /// Field value at tubular coordinates `(y, t)`, linear across fibers;
    /// `b` past the tube depth.
    pub fn value_at(&self, y: f64, t: f64) -> f64 {
        if t >= self.delta {
            return self.b;
        }
        let n = self.fibers.len();
        let s = y.rem_euclid(self.boundary_length) / self.spacing();
        let i = (s.floor() as usize).min(n - 1);
        let w = s - i as f64;
        let t = t.max(0.0);
        let (v0, v1) = (self.fibers[i].profile.value_at(t), self.fibers[(i + 1) % n].profile.value_at(t));
        v0 + w * (v1 - v0)
    }

    /// `sup_y T_ε(y) / (ε|log ε|)`.
    pub fn layer_time_ratio(&self) -> f64 {
        let eps = self.epsilon;
        self.fibers.iter().map(|f| f.profile.t_eps).fold(0.0, f64::max) / (eps * eps.ln().abs())
    }

    /// `∫_Ω |u − b|`.
    pub fn l1_distance_to_b(&self) -> f64 {
        let h = self.spacing();
        self.fibers
            .iter()
            .map(|f| {
                let p = &f.profile;
                let mut acc = 0.0;
                for i in 0..p.t.len() - 1 {
                    let (t0, t1) = (p.t[i], p.t[i + 1]);
                    for &(x, w) in &GAUSS4_UNIT {
                        let t = t0 + x * (t1 - t0);
                        acc += w * (t1 - t0) * (self.b - p.value_at(t)).abs() * (1.0 + t * f.kappa);
                    }
                }
                acc * h
            })
            .sum()
    }

    /// `∂_y v` at `(y, t)` for fiber `f`: differentiating `Ψ(v) = t` in the
    /// starting value gives `g'·√(δ+W(v))/√(δ+W(g))`.
    fn tangential_derivative(&self, spec: &PotentialSpec, f: &Fiber, v: f64) -> f64 {
        if f.dg == 0.0 {
            return 0.0;
        }
        let d = self.regularizer.value(self.epsilon);
        f.dg * ((d + spec.w(v).max(0.0)) / (d + spec.w(f.g).max(0.0))).sqrt()
    }
}

/// `F_ε` of a fiber field split into the normal part and the tangential
/// part `ε²∫∫ |∂_y v|²/ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldEnergy {
    pub epsilon: f64,
    pub total: f64,
    pub normal: f64,
    pub tangential: f64,
}

pub fn energy_f(field: &Field2D, spec: &PotentialSpec) -> Result<FieldEnergy> {
    let f = match field {
        Field2D::Fiber(f) => f,
        Field2D::Grid(_) => {
            return Err(Error::Unsupported("energy_f needs a fiber field; grid fields report their own energy".into()))
        }
    };
    let eps = f.epsilon;
    let h = f.spacing();
    let parts = f
        .fibers
        .par_iter()
        .map(|fib| {
            let weight = WeightFn::linear(1.0, fib.kappa, f.delta)?;
            let normal = g_energy(spec, &weight, &fib.profile);
            let p = &fib.profile;
            let mut tang = 0.0;
            if fib.dg != 0.0 {
                for i in 0..p.t.len() - 1 {
                    let (t0, t1) = (p.t[i], p.t[i + 1].min(p.t_eps));
                    if t1 <= t0 {
                        break;
                    }
                    for &(x, w) in &GAUSS4_UNIT {
                        let t = t0 + x * (t1 - t0);
                        let dy = f.tangential_derivative(spec, fib, p.value_at(t));
                        tang += w * (t1 - t0) * dy * dy / (1.0 + t * fib.kappa);
                    }
                }
            }
            Ok((normal, eps * eps * tang))
        })
        .collect::<Result<Vec<_>>>()?;
    let normal = h * parts.iter().map(|p| p.0).sum::<f64>();
    let tangential = h * parts.iter().map(|p| p.1).sum::<f64>();
    Ok(FieldEnergy { epsilon: eps, total: normal + tangential, normal, tangential })
}

/// `∫ d_W(b, g) dH¹` on the fiber nodes of `field`, so the subtraction
/// shares the fiber quadrature.
pub fn first_order_cost(field: &FiberField, data: &BoundaryData, table: &GeodesicTable) -> f64 {
    let h = field.spacing();
    h * field
        .fibers
        .par_iter()
        .map(|f| table.action(data.g(f.y), data.b).abs())
        .collect::<Vec<_>>()
        .iter()
        .sum::<f64>()
}

/// `(F_ε/ε − ∫ d_W(b, g)) / (ε|log ε|)`.
pub fn second_order_f2(energy: &FieldEnergy, first_order: f64) -> f64 {
    let eps = energy.epsilon;
    (energy.total / eps - first_order) / (eps * eps.ln().abs())
}

/// `C_W/(√2 √W''(a)) ∫_{g = a} κ dH¹`.
pub fn predicted_f2(geom: &BoundaryGeometry, data: &BoundaryData, table: &GeodesicTable) -> f64 {
    let coef = table.cw() * table.spec.log_constant_a();
    let integral: f64 = data
        .plateau
        .iter()
        .map(|arc| {
            let sub = 256;
            let h = arc.length / sub as f64;
            (0..sub)
                .map(|k| {
                    let y0 = arc.start + h * k as f64;
                    GAUSS4_UNIT.iter().map(|&(x, w)| w * geom.curvature(y0 + x * h)).sum::<f64>() * h
                })
                .sum::<f64>()
        })
        .sum();
    coef * integral
}

/// The continuum recovery field `v(y, t) = P(t + τ(y))`, where `P` is the
/// profile started at `a` and `P(τ(y)) = g_ε(y)`. Every fiber is a time shift
/// of `P`, so this evaluates the field at any `y` without interpolating
/// between fibers.
struct ShiftedProfile<'a> {
    master: ProfileGrid,
    data: &'a BoundaryData,
    spec: &'a PotentialSpec,
    eps: f64,
    delta_reg: f64,
}

impl<'a> ShiftedProfile<'a> {
    fn new(data: &'a BoundaryData, spec: &'a PotentialSpec, eps: f64, reg: Regularizer) -> Result<Self> {
        let delta_reg = reg.value(eps);
        let full = psi_regularized(spec, eps, delta_reg, spec.a, data.b)?;
        let master = recovery_profile(spec, eps, spec.a, data.b, full * 1.01 + eps, reg)?;
        Ok(Self { master, data, spec, eps, delta_reg })
    }

    fn shift(&self, g: f64) -> f64 {
        let p = &self.master;
        let mut tau = p.hitting_time(g).unwrap_or(p.t_eps);
        for _ in 0..4 {
            let s = p.slope_at(tau);
            if s <= 0.0 {
                break;
            }
            tau -= (p.value_at(tau) - g) / s;
        }
        tau.clamp(0.0, p.t_eps)
    }

    /// `(v, ∂_t v, ∂_y v)` at tubular coordinates `(y, t)`.
    fn eval(&self, y: f64, t: f64) -> (f64, f64, f64) {
        let (g, dg) = self.data.g_eps_pair(y, self.eps);
        let tau = t + self.shift(g);
        if tau >= self.master.t_eps {
            return (self.data.b, 0.0, 0.0);
        }
        let (v, vt) = (self.master.value_at(tau), self.master.slope_at(tau));
        // ∂_y τ = g'/P'(τ(y)) = g' ε/√(δ + W(g)).
        let vy = vt * dg * self.eps / (self.delta_reg + self.spec.w(g).max(0.0)).sqrt();
        (v, vt, vy)
    }
}

/// `F_ε` of the continuum field behind a fiber field, by midpoint quadrature
/// on a Cartesian grid of spacing `h` pulled back through the tubular inverse.
/// The field is evaluated at the exact `y` of each grid point, so the kink
/// where a fiber reaches `b` is not smeared across neighbouring fibers.
pub fn cartesian_energy(
    field: &FiberField,
    data: &BoundaryData,
    spec: &PotentialSpec,
    geom: &BoundaryGeometry,
    h: f64,
) -> Result<f64> {
    let eps = field.epsilon;
    let exact = ShiftedProfile::new(data, spec, eps, field.regularizer)?;
    let [lo, hi] = geom.bounding_box();
    let nx = ((hi[0] - lo[0]) / h).ceil() as usize;
    let ny = ((hi[1] - lo[1]) / h).ceil() as usize;
    let rows: Vec<f64> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let mut acc = 0.0;
            for i in 0..nx {
                let x = [lo[0] + (i as f64 + 0.5) * h, lo[1] + (j as f64 + 0.5) * h];
                let Some(p) = geom.invert_tubular(x) else { continue };
                if p.t > field.delta {
                    continue;
                }
                let (v, vt, vy) = exact.eval(p.y, p.t);
                let om = 1.0 + p.t * geom.curvature(p.y);
                acc += spec.w(v) + eps * eps * (vt * vt + vy * vy / (om * om));
            }
            acc * h * h
        })
        .collect();
    Ok(rows.iter().sum())
}

/// Options of the Cartesian minimizer, a linearly implicit gradient flow
/// `(1/τ + ∇²F) Δu = −∇F` whose step `τ` grows while the energy falls, so
/// it turns into Newton's method near a minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridOptions {
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Converged when the nodal gradient `∂F/∂u_i / h²` is below
    /// `grad_tol·max|W'|` everywhere.
    pub grad_tol: f64,
    /// Start from the recovery field instead of the constant `b`.
    pub warm_start: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { initial_step: 0.25, max_step: 1e12, max_steps: 5000, grad_tol: 1e-12, warm_start: true }
    }
}

#[derive(Debug, Clone)]
pub struct GridSolution {
    pub field: GridField,
    pub energy: f64,
    pub steps: usize,
    /// Largest nodal gradient at exit.
    pub gradient_max: f64,
}

/// Interior-node graph in compressed rows.
struct GridOperator {
    interior: Vec<usize>,
    start: Vec<usize>,
    links: Vec<usize>,
    degree: Vec<f64>,
    /// Sum of the ghost values next to each interior node.
    ghost_sum: Vec<f64>,
}

impl GridOperator {
    /// `out = diag ⊙ x − coupling · (adjacent x)`.
    fn apply(&self, diag: &[f64], coupling: f64, x: &[f64], out: &mut [f64]) {
        for (s, o) in out.iter_mut().enumerate() {
            let near: f64 = self.links[self.start[s]..self.start[s + 1]].iter().map(|&t| x[t]).sum();
            *o = diag[s] * x[s] - coupling * near;
        }
    }

    /// `∂F/∂u / h²` at every interior node.
    fn gradient(&self, spec: &PotentialSpec, coupling: f64, x: &[f64], out: &mut [f64]) {
        for (s, o) in out.iter_mut().enumerate() {
            let near: f64 = self.links[self.start[s]..self.start[s + 1]].iter().map(|&t| x[t]).sum();
            *o = spec.dw(x[s]) + coupling * (self.degree[s] * x[s] - near - self.ghost_sum[s]);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

enum CgExit {
    Converged,
    NegativeCurvature,
}

/// Jacobi-preconditioned conjugate gradients from `x = 0`.
fn cg(op: &GridOperator, diag: &[f64], coupling: f64, rhs: &[f64], rtol: f64, x: &mut [f64]) -> Result<CgExit> {
    let n = rhs.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let target = rtol * dot(rhs, rhs).sqrt();
    let mut ap = vec![0.0; n];
    for _ in 0..20 * n.max(100) {
        if dot(&r, &r).sqrt() <= target {
            return Ok(CgExit::Converged);
        }
        op.apply(diag, coupling, &p, &mut ap);
        let curv = dot(&p, &ap);
        if !(curv > 0.0) {
            return Ok(CgExit::NegativeCurvature);
        }
        let alpha = rz / curv;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver { message: "conjugate gradients did not converge".into(), history: vec![] })
}

/// `h² Σ W(u) + ε² Σ_edges (Δu)²` over edges touching an interior node.
fn grid_energy(spec: &PotentialSpec, f: &GridField, eps: f64) -> f64 {
    let mut bulk = 0.0;
    let mut grad = 0.0;
    for j in 0..f.ny {
        for i in 0..f.nx {
            let k = j * f.nx + i;
            let here = f.kind[k];
            if here == NodeKind::Interior {
                bulk += spec.w(f.values[k]);
            }
            for (di, dj) in [(1, 0), (0, 1)] {
                let (ii, jj) = (i + di, j + dj);
                if ii >= f.nx || jj >= f.ny {
                    continue;
                }
                let m = jj * f.nx + ii;
                let there = f.kind[m];
                if (here == NodeKind::Interior || there == NodeKind::Interior)
                    && here != NodeKind::Off
                    && there != NodeKind::Off
                {
                    let d = f.values[k] - f.values[m];
                    grad += d * d;
                }
            }
        }
    }
    f.h * f.h * bulk + eps * eps * grad
}

/// Minimizes the five-point discretization of `F_ε` on a Cartesian grid
/// masked to `Ω`. Ghost nodes outside `Ω` carry `g_ε` at their boundary
/// projection. Each step solves `(1/τ + ∇²F) Δu = −∇F` by conjugate
/// gradients and truncates to `[a, b]`; a step that raises `F` or meets
/// negative curvature is retried with a smaller `τ`.
pub fn minimize_f_grid(
    geom: &BoundaryGeometry,
    data: &BoundaryData,
    spec: &PotentialSpec,
    eps: f64,
    grid_h: f64,
    opts: GridOptions,
) -> Result<GridSolution> {
    if !(grid_h > 0.0 && grid_h <= eps / 4.0) {
        return Err(Error::Config(format!("grid spacing {grid_h} must lie in (0, ε/4]")));
    }
    let [lo, hi] = geom.bounding_box();
    let origin = [lo[0] - 2.0 * grid_h, lo[1] - 2.0 * grid_h];
    let nx = ((hi[0] - origin[0]) / grid_h).ceil() as usize + 3;
    let ny = ((hi[1] - origin[1]) / grid_h).ceil() as usize + 3;
    let position = |k: usize| [origin[0] + grid_h * (k % nx) as f64, origin[1] + grid_h * (k / nx) as f64];
    let distance: Vec<f64> = (0..nx * ny).into_par_iter().map(|k| geom.signed_distance(position(k))).collect();
    let neighbours = |k: usize| {
        let (i, j) = (k % nx, k / nx);
        let mut out = Vec::with_capacity(4);
        if i > 0 {
            out.push(k - 1);
        }
        if i + 1 < nx {
            out.push(k + 1);
        }
        if j > 0 {
            out.push(k - nx);
        }
        if j + 1 < ny {
            out.push(k + nx);
        }
        out
    };
    let mut kind: Vec<NodeKind> =
        distance.iter().map(|&d| if d > 0.0 { NodeKind::Interior } else { NodeKind::Off }).collect();
    for k in 0..nx * ny {
        if kind[k] == NodeKind::Off && neighbours(k).iter().any(|&m| distance[m] > 0.0) {
            kind[k] = NodeKind::Ghost;
        }
    }
    let mut values = vec![spec.b; nx * ny];
    let ghosts: Vec<usize> = (0..nx * ny).filter(|&k| kind[k] == NodeKind::Ghost).collect();
    let ghost_vals: Vec<f64> =
        ghosts.par_iter().map(|&k| data.g_eps(geom.nearest_arclength(position(k)), eps)).collect();
    for (&k, &v) in ghosts.iter().zip(&ghost_vals) {
        values[k] = v;
    }
    let interior: Vec<usize> = (0..nx * ny).filter(|&k| kind[k] == NodeKind::Interior).collect();
    if opts.warm_start {
        let exact = ShiftedProfile::new(data, spec, eps, Regularizer::Eps)?;
        let reach = geom.max_tubular_delta();
        let start: Vec<f64> = interior
            .par_iter()
            .map(|&k| match geom.invert_tubular(position(k)) {
                Some(p) if p.t <= reach => exact.eval(p.y, p.t).0,
                _ => spec.b,
            })
            .collect();
        for (&k, &v) in interior.iter().zip(&start) {
            values[k] = v.clamp(spec.a, spec.b);
        }
    }
    let mut slot = vec![usize::MAX; nx * ny];
    for (s, &k) in interior.iter().enumerate() {
        slot[k] = s;
    }
    let mut start = vec![0];
    let mut links = Vec::with_capacity(4 * interior.len());
    let mut degree = Vec::with_capacity(interior.len());
    let mut ghost_sum = Vec::with_capacity(interior.len());
    for &k in &interior {
        let nb = neighbours(k);
        links.extend(nb.iter().filter(|&&m| kind[m] == NodeKind::Interior).map(|&m| slot[m]));
        start.push(links.len());
        ghost_sum.push(nb.iter().filter(|&&m| kind[m] == NodeKind::Ghost).map(|&m| values[m]).sum());
        degree.push(nb.iter().filter(|&&m| kind[m] != NodeKind::Off).count() as f64);
    }
    let op = GridOperator { interior, start, links, degree, ghost_sum };
    let n = op.interior.len();
    let mut field = GridField { epsilon: eps, h: grid_h, origin, nx, ny, kind, values, distance };
    let coupling = 2.0 * eps * eps / (grid_h * grid_h);
    let grad_target = opts.grad_tol * spec.dw_scale();
    let mut x: Vec<f64> = op.interior.iter().map(|&k| field.values[k]).collect();
    let store = |field: &mut GridField, x: &[f64]| {
        for (s, &k) in op.interior.iter().enumerate() {
            field.values[k] = x[s];
        }
    };
    let mut energy = grid_energy(spec, &field, eps);
    let mut g = vec![0.0; n];
    let mut step = vec![0.0; n];
    let mut tau = opts.initial_step;
    let mut history = Vec::new();
    for steps in 0..opts.max_steps {
        op.gradient(spec, coupling, &x, &mut g);
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        history.push(gmax);
        if gmax <= grad_target {
            return Ok(GridSolution { field, energy, steps, gradient_max: gmax });
        }
        let diag: Vec<f64> =
            x.iter().zip(&op.degree).map(|(&u, d)| 1.0 / tau + spec.d2w(u) + coupling * d).collect();
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let solved = diag.iter().all(|&d| d > 0.0)
            && matches!(cg(&op, &diag, coupling, &neg, 1e-6, &mut step)?, CgExit::Converged);
        if solved {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(u, d)| (u + d).clamp(spec.a, spec.b)).collect();
            store(&mut field, &trial);
            let e = grid_energy(spec, &field, eps);
            // Near the minimizer the decrease is below the rounding of F.
            if e <= energy + 1e-14 * energy.abs() {
                x = trial;
                energy = e;
                tau = (2.0 * tau).min(opts.max_step);
                continue;
            }
            store(&mut field, &x);
        }
        tau *= 0.25;
        if tau < 1e-8 {
            break;
        }
    }
    Err(Error::Solver {
        message: format!("grid minimizer did not reach gradient {grad_target:e} in {} steps", opts.max_steps),
        history: history.iter().rev().take(5).copied().collect(),
    })
}

/// Deficit `b − u` away from the boundary and its exponential rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub deltas: Vec<f64>,
    /// `sup (b − u)` over `{dist ≥ 2δ}`, per `δ`.
    pub sup_deficit: Vec<f64>,
    /// Slope and intercept of `log sup_deficit` against `δ/ε`, when every
    /// deficit is positive.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Largest absolute residual of the affine fit in log space.
    pub fit_residual: Option<f64>,
    pub min_deficit: f64,
    pub max_deficit: f64,
}

impl DecayReport {
    pub fn decaying(&self) -> bool {
        self.slope.is_some_and(|s| s < 0.0)
    }
}

pub fn check_decay(field: &GridField, b: f64, deltas: &[f64]) -> Result<DecayReport> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Config("decay check needs positive δ values".into()));
    }
    let interior = || (0..field.values.len()).filter(|&k| field.kind[k] == NodeKind::Interior);
    let sup: Vec<f64> = deltas
        .iter()
        .map(|&d| {
            interior()
                .filter(|&k| field.distance[k] >= 2.0 * d)
                .map(|k| b - field.values[k])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    if sup.iter().any(|s| !s.is_finite()) {
        return Err(Error::Domain("some δ leaves no interior node at distance 2δ".into()));
    }
    let min_deficit = interior().map(|k| b - field.values[k]).fold(f64::INFINITY, f64::min);
    let max_deficit = interior().map(|k| b - field.values[k]).fold(f64::NEG_INFINITY, f64::max);
    let (mut slope, mut intercept, mut fit_residual) = (None, None, None);
    if deltas.len() >= 2 && sup.iter().all(|&s| s > 0.0) {
        let rows: Vec<Vec<f64>> = deltas.iter().map(|d| vec![d / field.epsilon, 1.0]).collect();
        let y: Vec<f64> = sup.iter().map(|s| s.ln()).collect();
        if let Some(c) = least_squares(&rows, &y, None) {
            slope = Some(c[0]);
            intercept = Some(c[1]);
            fit_residual = Some(
                rows.iter().zip(&y).map(|(r, y)| (r[0] * c[0] + c[1] - y).abs()).fold(0.0, f64::max),
            );
        }
    }
    Ok(DecayReport {
        deltas: deltas.to_vec(),
        sup_deficit: sup,
        slope,
        intercept,
        fit_residual,
        min_deficit,
        max_deficit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Regularizer;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn circle() -> BoundaryGeometry {
        BoundaryGeometry::circle(1.0).unwrap()
    }

    fn quarter_plateau(geom: &BoundaryGeometry, width: f64) -> BoundaryData {
        let spec = PotentialSpec::quartic();
        let arc = PlateauArc { start: -FRAC_PI_4 / 2.0, length: FRAC_PI_4 };
        make_boundary_data(geom, &spec, &[arc], width, 2.0, 0.0).unwrap()
    }

    /// Data equal to `a` on the whole boundary, built directly because the
    /// constructor rightly refuses it.
    fn all_a(geom: &BoundaryGeometry) -> BoundaryData {
        BoundaryData {
            a: -1.0,
            b: 1.0,
            boundary_length: geom.length,
            plateau: vec![PlateauArc { start: 0.0, length: geom.length }],
            transition_width: 0.1,
            gamma: 2.0,
            a0: 0.0,
            margin: 0.0,
        }
    }

    #[test]
    fn data_shape() {
        let g = circle();
        let d = quarter_plateau(&g, 0.1);
        assert_eq!(d.g(0.0), -1.0);
        assert_eq!(d.g(PI), 1.0);
        assert!(d.on_plateau(0.3) && !d.on_plateau(0.5));
        let y = FRAC_PI_4 / 2.0 + 0.04;
        let h = 1e-6;
        let fd = (d.g(y + h) - d.g(y - h)) / (2.0 * h);
        assert!((fd - d.g_pair(y).1).abs() < 1e-6);
        let y = -FRAC_PI_4 / 2.0 - 0.06;
        let fd = (d.g(y + h) - d.g(y - h)) / (2.0 * h);
        assert!((fd - d.g_pair(y).1).abs() < 1e-6);
        for i in 0..1000 {
            let v = d.g(g.length * i as f64 / 1000.0);
            assert!((-1.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn pointwise_values_match_fibers() {
        let g = circle();
        let spec = PotentialSpec::quartic();
        let d = quarter_plateau(&g, 0.1);
        let f = recovery_field(&g, &d, &spec, 2f64.powi(-5), 0.25, FiberOptions { fibers: 64, ..Default::default() })
            .unwrap();
        let fib = &f.fibers[5];
        assert_eq!(f.value_at(fib.y, 0.01), fib.profile.value_at(0.01));
        assert_eq!(f.value_at(fib.y + g.length, 0.0), fib.g);
        assert_eq!(f.value_at(1.0, 0.3), spec.b);
        let mid = f.value_at(0.5 * (f.fibers[7].y + f.fibers[8].y), 0.02);
        let (lo, hi) = (f.fibers[7].profile.value_at(0.02), f.fibers[8].profile.value_at(0.02));
        assert!((mid - 0.5 * (lo + hi)).abs() < 1e-12);
    }

    #[test]
    fn perturbed_data_stays_close() {
        let g = circle();
        let spec = PotentialSpec::quartic();
        let arc = PlateauArc { start: 1.0, length: 0.5 };
        let d = make_boundary_data(&g, &spec, &[arc], 0.2, 1.5, 3.0).unwrap();
        for eps in [1e-1, 1e-2, 1e-3] {
            for i in 0..2000 {
                let y = g.length * i as f64 / 2000.0;
                let (ge, gy) = (d.g_eps(y, eps), d.g(y));
                assert!((-1.0..=1.0).contains(&ge));
                assert!((ge - gy).abs() <= 3.0 * eps.powf(1.5) + 1e-15);
                if d.on_plateau(y) {
                    assert_eq!(ge, -1.0);
                }
            }
        }
        let e: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&x| x * d.tangential_energy(x)).collect();
        assert!(e[0] > e[1] && e[1] > e[2]);
    }

    #[test]
    fn tangential_energy_closed_form() {
        // ∫ S'(x)² dx = 900 B(5, 5) = 10/7 on each of the two transitions.
        let g = circle();
        let d = quarter_plateau(&g, 0.1);
        let want = 2.0 * 4.0 * (10.0 / 7.0) / 0.1;
        assert!((d.tangential_energy(1e-3) - want).abs() < 1e-9 * want);
    }

    #[test]
    fn plateau_validation() {
        let spec = PotentialSpec::quartic();
        let g = circle();
        let arc = |s, l| PlateauArc { start: s, length: l };
        assert!(make_boundary_data(&g, &spec, &[arc(0.0, 1.0)], 0.1, 1.0, 0.0).is_err());
        assert!(make_boundary_data(&g, &spec, &[arc(0.0, 0.0)], 0.1, 2.0, 0.0).is_err());
        assert!(make_boundary_data(&g, &spec, &[arc(0.0, 6.0)], 0.2, 2.0, 0.0).is_err());
        assert!(make_boundary_data(&g, &spec, &[arc(0.0, 1.0), arc(1.1, 1.0)], 0.1, 2.0, 0.0).is_err());
        let empty = make_boundary_data(&g, &spec, &[], 0.1, 2.0, 0.0).unwrap();
        assert_eq!(empty.plateau_length(), 0.0);
        assert_eq!(empty.g(1.0), 1.0);

        let star = BoundaryGeometry::star(0.2, 3).unwrap();
        // Concave near θ = π/3: arclength of the foot point below it.
        let p = star.invert_tubular([0.7 * (PI / 3.0).cos(), 0.7 * (PI / 3.0).sin()]).unwrap();
        let bad = make_boundary_data(&star, &spec, &[arc(p.y - 0.05, 0.1)], 0.05, 2.0, 0.0);
        assert!(matches!(bad, Err(Error::Config(_))));
        let good = make_boundary_data(&star, &spec, &[arc(-0.05, 0.1)], 0.05, 2.0, 0.0).unwrap();
        assert!(good.margin > 0.0 && good.margin < star.length / 2.0);
    }

    #[test]
    fn predicted_coefficient() {
        let spec = PotentialSpec::quartic();
        let table = GeodesicTable::new(spec.clone());
        let g = circle();
        let d = quarter_plateau(&g, 0.1);
        assert!((predicted_f2(&g, &d, &table) + PI / 6.0).abs() < 1e-10);
        let empty = make_boundary_data(&g, &spec, &[], 0.1, 2.0, 0.0).unwrap();
        assert_eq!(predicted_f2(&g, &empty, &table), 0.0);
        let arcs = [PlateauArc { start: 0.0, length: 0.3 }, PlateauArc { start: 3.0, length: 0.5 }];
        let two = make_boundary_data(&g, &spec, &arcs, 0.1, 2.0, 0.0).unwrap();
        let want = (8.0 / 3.0) * 0.25 * -(0.3 + 0.5);
        assert!((predicted_f2(&g, &two, &table) - want).abs() < 1e-10);
        let ell = BoundaryGeometry::ellipse(2.0, 1.0).unwrap();
        let one = make_boundary_data(&ell, &spec, &arcs[..1], 0.1, 2.0, 0.0).unwrap();
        let direct = (0..3000)
            .map(|k| ell.curvature(0.3 * (k as f64 + 0.5) / 3000.0) * 0.3 / 3000.0)
            .sum::<f64>()
            * (8.0 / 3.0)
            * 0.25;
        assert!((predicted_f2(&ell, &one, &table) - direct).abs() < 1e-7);
    }

    #[test]
    fn first_order_competitors() {
        let spec = PotentialSpec::quartic();
        let table = GeodesicTable::new(spec.clone());
        let g = circle();
        let cw = 8.0 / 3.0;

        let empty = make_boundary_data(&g, &spec, &[], 0.1, 2.0, 0.0).unwrap();
        let r = check_u0_b(&g, &empty, &table).unwrap();
        assert!(r.f1_b.abs() < 1e-12 && r.passed);

        let r = evaluate_u0_b(&g, &all_a(&g), &table, CHORD_GRID);
        assert!(r.f1_a.abs() < 1e-9 && !r.passed);
        assert!(check_u0_b(&g, &all_a(&g), &table).is_err());

        // Plateau π/4 with transitions of 0.2: b beats the constant a, but a
        // cap cut off by the chord across the plateau beats b because the
        // chord is shorter than the arc it spans.
        let d = quarter_plateau(&g, 0.2);
        let r = evaluate_u0_b(&g, &d, &table, CHORD_GRID);
        assert!((r.f1_a + r.f1_b - cw * g.length).abs() < 1e-9);
        assert!(r.f1_b < r.f1_a);
        assert!(r.f1_b > cw * FRAC_PI_4 && r.f1_b < cw * (FRAC_PI_4 + 0.4));
        let best = r.best_chord.unwrap();
        assert!(best.value < r.f1_b && !r.passed && r.margin < 0.0);
    }

    #[test]
    fn recovery_field_trace_and_range() {
        let spec = PotentialSpec::quartic();
        let g = circle();
        let d = quarter_plateau(&g, 0.1);
        let eps = 2f64.powi(-6);
        let opts = FiberOptions { fibers: 128, ..Default::default() };
        assert!(matches!(recovery_field(&g, &d, &spec, eps, 0.6, opts), Err(Error::Domain(_))));
        let f = recovery_field(&g, &d, &spec, eps, 0.25, opts).unwrap();
        for fib in &f.fibers {
            assert_eq!(fib.profile.value_at(0.0), d.g_eps(fib.y, eps));
            assert!(fib.profile.v.iter().all(|v| (-1.0..=1.0).contains(v)));
            assert_eq!(fib.profile.value_at(0.25), 1.0);
        }
        assert!(f.layer_time_ratio() > 0.0 && f.layer_time_ratio() < 2.0);
        let l1 = f.l1_distance_to_b();
        assert!(l1 > 0.0 && l1 < eps * eps.ln().abs() * g.length);
    }

    #[test]
    fn constant_b_has_zero_energy() {
        let spec = PotentialSpec::quartic();
        let table = GeodesicTable::new(spec.clone());
        let g = circle();
        let d = make_boundary_data(&g, &spec, &[], 0.1, 2.0, 0.0).unwrap();
        let f = recovery_field(&g, &d, &spec, 0.01, 0.25, FiberOptions { fibers: 64, ..Default::default() }).unwrap();
        let e = energy_f(&Field2D::Fiber(f.clone()), &spec).unwrap();
        assert_eq!(e.total, 0.0);
        assert_eq!(second_order_f2(&e, first_order_cost(&f, &d, &table)), 0.0);
    }

    #[test]
    fn symmetric_data_reduces_to_one_fiber() {
        let spec = PotentialSpec::quartic();
        let g = circle();
        let d = all_a(&g);
        let eps = 2f64.powi(-6);
        let f = recovery_field(&g, &d, &spec, eps, 0.25, FiberOptions { fibers: 64, ..Default::default() }).unwrap();
        let e = energy_f(&Field2D::Fiber(f), &spec).unwrap();
        let p = recovery_profile(&spec, eps, -1.0, 1.0, 0.25, Regularizer::Eps).unwrap();
        let one = g_energy(&spec, &WeightFn::linear(1.0, -1.0, 0.25).unwrap(), &p);
        assert_eq!(e.tangential, 0.0);
        assert!((e.total - g.length * one).abs() < 1e-12 * e.total);
    }

    #[test]
    fn grid_with_constant_b_data() {
        let spec = PotentialSpec::quartic();
        let g = circle();
        let d = make_boundary_data(&g, &spec, &[], 0.1, 2.0, 0.0).unwrap();
        let eps = 0.25;
        assert!(minimize_f_grid(&g, &d, &spec, eps, eps / 2.0, GridOptions::default()).is_err());
        let sol = minimize_f_grid(&g, &d, &spec, eps, eps / 4.0, GridOptions::default()).unwrap();
        assert_eq!(sol.energy, 0.0);
        assert!(sol.field.values.iter().all(|&v| v == 1.0));
        let r = check_decay(&sol.field, 1.0, &[0.05, 0.1]).unwrap();
        assert_eq!(r.max_deficit, 0.0);
        assert!(r.slope.is_none() && !r.decaying());
        let field = Field2D::Grid(sol.field);
        assert!(matches!(energy_f(&field, &spec), Err(Error::Unsupported(_))));
    }

    #[test]
    fn point_cloud_csv() {
        let spec = PotentialSpec::quartic();
        let g = circle();
        let d = quarter_plateau(&g, 0.1);
        let f = recovery_field(&g, &d, &spec, 0.05, 0.25, FiberOptions { fibers: 16, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        Field2D::Fiber(f).write_point_cloud(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,u\n"));
        assert!(text.lines().count() > 16);
    }
}
