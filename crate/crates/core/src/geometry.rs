//! Closed planar boundaries: arclength tables, signed curvature, the tubular
//! map `Φ(y, t) = γ(y) + t ν(y)` with inward normal `ν`, its Jacobian weight
//! and its inverse.
//!
//! Curvature follows the Jacobian convention `κ = ∂_t det J_Φ(y, 0)`, so a
//! disk of radius `R` has `κ = −1/R` and `det J_Φ = 1 + tκ`.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_spd_cyclic;

pub const DEFAULT_SAMPLES: usize = 2048;

type Vec2 = [f64; 2];

fn sub(p: Vec2, q: Vec2) -> Vec2 {
    [p[0] - q[0], p[1] - q[1]]
}

fn dot(p: Vec2, q: Vec2) -> f64 {
    p[0] * q[0] + p[1] * q[1]
}

fn cross(p: Vec2, q: Vec2) -> f64 {
    p[0] * q[1] - p[1] * q[0]
}

fn dist2(p: Vec2, q: Vec2) -> f64 {
    let d = sub(p, q);
    dot(d, d)
}

fn norm(p: Vec2) -> f64 {
    p[0].hypot(p[1])
}

/// Periodic C² cubic spline through a closed point list, uniform knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSpline {
    points: Vec<Vec2>,
    second: Vec<Vec2>,
}

impl PeriodicSpline {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        let n = points.len();
        if n < 4 {
            return Err(Error::Config(format!("spline needs at least 4 points, got {n}")));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("spline points must be finite".into()));
        }
        let mut second = vec![[0.0; 2]; n];
        for k in 0..2 {
            let rhs: Vec<f64> = (0..n)
                .map(|i| 6.0 * (points[(i + 1) % n][k] - 2.0 * points[i][k] + points[(i + n - 1) % n][k]))
                .collect();
            let m = solve_spd_cyclic(&vec![4.0; n], &vec![1.0; n - 1], 1.0, &rhs)
                .ok_or_else(|| Error::Config("degenerate spline system".into()))?;
            for i in 0..n {
                second[i][k] = m[i];
            }
        }
        Ok(Self { points, second })
    }

    pub fn period(&self) -> f64 {
        self.points.len() as f64
    }

    fn eval(&self, u: f64) -> (Vec2, Vec2, Vec2) {
        let n = self.points.len();
        let u = u.rem_euclid(n as f64);
        let i = (u.floor() as usize).min(n - 1);
        let x = u - i as f64;
        let j = (i + 1) % n;
        let (p0, p1, m0, m1) = (self.points[i], self.points[j], self.second[i], self.second[j]);
        let mut p = [0.0; 2];
        let mut d1 = [0.0; 2];
        let mut d2 = [0.0; 2];
        for k in 0..2 {
            let a = p0[k];
            let b = p1[k] - p0[k] - (2.0 * m0[k] + m1[k]) / 6.0;
            let c = m0[k] / 2.0;
            let d = (m1[k] - m0[k]) / 6.0;
            p[k] = a + x * (b + x * (c + x * d));
            d1[k] = b + x * (2.0 * c + 3.0 * x * d);
            d2[k] = 2.0 * c + 6.0 * x * d;
        }
        (p, d1, d2)
    }
}

/// Supported boundary shapes, each with a native periodic parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveShape {
    Circle { radius: f64 },
    Ellipse { semi_x: f64, semi_y: f64 },
    /// Polar curve `r(θ) = 1 + amplitude·cos(lobes·θ)`.
    Star { amplitude: f64, lobes: u32 },
    Spline(PeriodicSpline),
}

impl CurveShape {
    fn period(&self) -> f64 {
        match self {
            Self::Spline(s) => s.period(),
            _ => std::f64::consts::TAU,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Circle { radius } => *radius > 0.0,
            Self::Ellipse { semi_x, semi_y } => *semi_x > 0.0 && *semi_y > 0.0,
            Self::Star { amplitude, lobes } => amplitude.abs() < 1.0 && *lobes >= 1,
            Self::Spline(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid curve parameters {self:?}")))
        }
    }

    /// Position and first two derivatives in the native parameter.
    fn eval(&self, th: f64) -> (Vec2, Vec2, Vec2) {
        let (s, c) = th.sin_cos();
        match *self {
            Self::Circle { radius: r } => ([r * c, r * s], [-r * s, r * c], [-r * c, -r * s]),
            Self::Ellipse { semi_x: a, semi_y: b } => ([a * c, b * s], [-a * s, b * c], [-a * c, -b * s]),
            Self::Star { amplitude, lobes } => {
                let k = lobes as f64;
                let (sk, ck) = (k * th).sin_cos();
                let r = 1.0 + amplitude * ck;
                let r1 = -amplitude * k * sk;
                let r2 = -amplitude * k * k * ck;
                (
                    [r * c, r * s],
                    [r1 * c - r * s, r1 * s + r * c],
                    [r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s],
                )
            }
            Self::Spline(ref sp) => sp.eval(th),
        }
    }
}

/// One arclength sample of the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundarySample {
    pub arclength: f64,
    pub position: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
}

/// Location in tubular coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubularPoint {
    pub y: f64,
    pub t: f64,
}

const FINE_PER_SAMPLE: usize = 4;
const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Uniform bucket grid over the sample positions for nearest-point queries.
#[derive(Debug, Clone)]
struct Buckets {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(points: &[Vec2], cell: f64) -> Self {
        let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let nx = (((hi[0] - lo[0]) / cell).floor() as usize) + 1;
        let ny = (((hi[1] - lo[1]) / cell).floor() as usize) + 1;
        let mut cells = vec![Vec::new(); nx * ny];
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = (((p[0] - lo[0]) / cell) as usize, ((p[1] - lo[1]) / cell) as usize);
            cells[cy.min(ny - 1) * nx + cx.min(nx - 1)].push(i);
        }
        Self { origin: lo, cell, nx, ny, cells }
    }

    /// Nearest sample index and its distance, or `None` when no sample lies
    /// within `max_radius`. Long ring searches fall back to a linear scan.
    fn nearest(&self, points: &[Vec2], x: Vec2, max_radius: f64) -> Option<(usize, f64)> {
        let fx = ((x[0] - self.origin[0]) / self.cell).floor();
        let fy = ((x[1] - self.origin[1]) / self.cell).floor();
        let clampi = |f: f64, n: usize| f.max(0.0).min((n - 1) as f64) as i64;
        let (cx, cy) = (clampi(fx, self.nx), clampi(fy, self.ny));
        let (mut best, mut best_d) = (0, f64::INFINITY);
        for ring in 0..=RING_LIMIT {
            for j in (cy - ring)..=(cy + ring) {
                if j < 0 || j >= self.ny as i64 {
                    continue;
                }
                let edge = (j - cy).abs() == ring;
                let mut i = cx - ring;
                while i <= cx + ring {
                    if i >= 0 && i < self.nx as i64 {
                        for &k in &self.cells[j as usize * self.nx + i as usize] {
                            let d = dist2(points[k], x);
                            if d < best_d {
                                best = k;
                                best_d = d;
                            }
                        }
                    }
                    i += if edge || ring == 0 { 1 } else { 2 * ring };
                }
            }
            // Unsearched cells lie at least `ring` cells from the projection
            // of x onto the grid box, hence at least that far from x.
            let reach = ring as f64 * self.cell;
            if best_d <= reach * reach {
                return Some((best, best_d.sqrt()));
            }
            if reach > max_radius {
                return None;
            }
        }
        let (k, d) = points
            .iter()
            .enumerate()
            .map(|(k, p)| (k, dist2(*p, x)))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        let d = d.sqrt();
        (d <= max_radius).then_some((k, d))
    }
}

const RING_LIMIT: i64 = 48;

/// A closed C² planar boundary sampled uniformly in arclength.
#[derive(Debug, Clone)]
pub struct BoundaryGeometry {
    pub shape: CurveShape,
    pub length: f64,
    pub delta_max: f64,
    /// Whether the native parameter runs clockwise and had to be reversed
    /// to put the interior on the left.
    pub reversed: bool,
    samples: Vec<BoundarySample>,
    sample_params: Vec<f64>,
    positions: Vec<Vec2>,
    fine_params: Vec<f64>,
    fine_arclength: Vec<f64>,
    buckets: Buckets,
}

impl BoundaryGeometry {
    pub fn new(shape: CurveShape, samples: usize) -> Result<Self> {
        shape.validate()?;
        if samples < 16 {
            return Err(Error::Config(format!("need at least 16 samples, got {samples}")));
        }
        let period = shape.period();
        let probe = 4096;
        let area2: f64 = (0..probe)
            .map(|i| {
                let (p, d1, _) = shape.eval(period * i as f64 / probe as f64);
                cross(p, d1)
            })
            .sum();
        let reversed = area2 < 0.0;
        let mut geom = Self {
            shape,
            length: 0.0,
            delta_max: 0.0,
            reversed,
            samples: Vec::new(),
            sample_params: Vec::new(),
            positions: Vec::new(),
            fine_params: Vec::new(),
            fine_arclength: Vec::new(),
            buckets: Buckets::new(&[[0.0, 0.0]], 1.0),
        };
        let nf = FINE_PER_SAMPLE * samples;
        let h = period / nf as f64;
        geom.fine_params = (0..=nf).map(|i| h * i as f64).collect();
        geom.fine_arclength = Vec::with_capacity(nf + 1);
        let mut acc = 0.0;
        geom.fine_arclength.push(0.0);
        for i in 0..nf {
            acc += geom.speed_integral(geom.fine_params[i], geom.fine_params[i + 1]);
            geom.fine_arclength.push(acc);
        }
        geom.length = acc;
        let ds = acc / samples as f64;
        geom.sample_params = (0..samples).map(|j| geom.param_at(ds * j as f64)).collect();
        geom.samples = geom
            .sample_params
            .iter()
            .enumerate()
            .map(|(j, &th)| geom.sample_from_param(th, ds * j as f64))
            .collect();
        let max_k = geom.samples.iter().map(|s| s.curvature.abs()).fold(0.0, f64::max);
        let positions: Vec<Vec2> = geom.samples.iter().map(|s| s.position).collect();
        let feature = geom.feature_size(max_k);
        geom.delta_max = if max_k > 0.0 { (0.5 / max_k).min(feature) } else { feature };
        if !(geom.delta_max.is_finite() && geom.delta_max > 0.0) {
            return Err(Error::Config("could not bound the tubular radius".into()));
        }
        geom.buckets = Buckets::new(&positions, (geom.delta_max / 8.0).max(4.0 * ds));
        geom.positions = positions;
        Ok(geom)
    }

    pub fn circle(radius: f64) -> Result<Self> {
        Self::new(CurveShape::Circle { radius }, DEFAULT_SAMPLES)
    }

    pub fn ellipse(semi_x: f64, semi_y: f64) -> Result<Self> {
        Self::new(CurveShape::Ellipse { semi_x, semi_y }, DEFAULT_SAMPLES)
    }

    pub fn star(amplitude: f64, lobes: u32) -> Result<Self> {
        Self::new(CurveShape::Star { amplitude, lobes }, DEFAULT_SAMPLES)
    }

    pub fn from_points(points: Vec<Vec2>) -> Result<Self> {
        Self::new(CurveShape::Spline(PeriodicSpline::new(points)?), DEFAULT_SAMPLES)
    }

    /// Read a closed point list from CSV with header `x,y`.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            x: f64,
            y: f64,
        }
        let mut rdr = csv::Reader::from_reader(input);
        let pts = rdr
            .deserialize::<Row>()
            .map(|r| r.map(|r| [r.x, r.y]))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_points(pts)
    }

    pub fn samples(&self) -> &[BoundarySample] {
        &self.samples
    }

    pub fn sample_spacing(&self) -> f64 {
        self.length / self.samples.len() as f64
    }

    fn eval_oriented(&self, th: f64) -> (Vec2, Vec2, Vec2) {
        if self.reversed {
            let (p, d1, d2) = self.shape.eval(self.shape.period() - th);
            (p, [-d1[0], -d1[1]], d2)
        } else {
            self.shape.eval(th)
        }
    }

    fn speed_integral(&self, lo: f64, hi: f64) -> f64 {
        let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        GL5.iter().map(|&(x, w)| w * norm(self.eval_oriented(m + r * x).1)).sum::<f64>() * r
    }

    /// Native parameter at arclength `y` (taken modulo the length).
    fn param_at(&self, y: f64) -> f64 {
        let y = y.rem_euclid(self.length);
        let k = self.fine_arclength.partition_point(|&s| s <= y).clamp(1, self.fine_params.len() - 1) - 1;
        let (t0, t1) = (self.fine_params[k], self.fine_params[k + 1]);
        let (s0, s1) = (self.fine_arclength[k], self.fine_arclength[k + 1]);
        let mut th = t0 + (t1 - t0) * (y - s0) / (s1 - s0);
        for _ in 0..4 {
            let f = s0 + self.speed_integral(t0, th) - y;
            th -= f / norm(self.eval_oriented(th).1);
        }
        th
    }

    fn arclength_of_param(&self, th: f64) -> f64 {
        let period = self.shape.period();
        let th = th.rem_euclid(period);
        let k = ((th / period * (self.fine_params.len() - 1) as f64) as usize).min(self.fine_params.len() - 2);
        self.fine_arclength[k] + self.speed_integral(self.fine_params[k], th)
    }

    fn sample_from_param(&self, th: f64, arclength: f64) -> BoundarySample {
        let (p, d1, d2) = self.eval_oriented(th);
        let sp = norm(d1);
        let tangent = [d1[0] / sp, d1[1] / sp];
        BoundarySample {
            arclength,
            position: p,
            tangent,
            normal: [-tangent[1], tangent[0]],
            curvature: -cross(d1, d2) / (sp * sp * sp),
        }
    }

    /// Position, unit tangent, inward normal and curvature at arclength `y`.
    pub fn sample_at(&self, y: f64) -> BoundarySample {
        self.sample_from_param(self.param_at(y), y.rem_euclid(self.length))
    }

    pub fn curvature(&self, y: f64) -> f64 {
        self.sample_at(y).curvature
    }

    pub fn max_curvature(&self) -> f64 {
        self.samples.iter().map(|s| s.curvature.abs()).fold(0.0, f64::max)
    }

    /// `Φ(y, t) = γ(y) + t ν(y)`.
    pub fn phi(&self, y: f64, t: f64) -> Vec2 {
        let s = self.sample_at(y);
        [s.position[0] + t * s.normal[0], s.position[1] + t * s.normal[1]]
    }

    /// `ω(y, t) = det J_Φ(y, t) = 1 + tκ(y)` on `0 ≤ t ≤ delta_max`.
    pub fn tubular_weight(&self, y: f64, t: f64) -> Result<f64> {
        if !(0.0..=self.delta_limit()).contains(&t) {
            return Err(Error::Domain(format!(
                "t = {t} outside [0, {}]",
                self.delta_max
            )));
        }
        Ok(1.0 + t * self.curvature(y))
    }

    /// `det J_Φ` by central differences of `Φ`, independent of the closed form.
    pub fn jacobian_det_fd(&self, y: f64, t: f64, h: f64) -> f64 {
        let py = sub(self.phi(y + h, t), self.phi(y - h, t));
        let pt = sub(self.phi(y, t + h), self.phi(y, t - h));
        cross(py, pt) / (4.0 * h * h)
    }

    fn feature_size(&self, max_k: f64) -> f64 {
        // Half the smallest distance between samples far apart along the
        // curve bounds how far normals can travel before crossing.
        let stride = (self.samples.len() / 512).max(1);
        let pts: Vec<(f64, Vec2)> = self.samples.iter().step_by(stride).map(|s| (s.arclength, s.position)).collect();
        let sep = if max_k > 0.0 { std::f64::consts::PI / max_k } else { 0.0 };
        let mut best = f64::INFINITY;
        for (i, &(si, pi)) in pts.iter().enumerate() {
            for &(sj, pj) in &pts[i + 1..] {
                let along = (sj - si).min(self.length - (sj - si));
                if along > sep {
                    best = best.min(0.5 * norm(sub(pi, pj)));
                }
            }
        }
        best
    }

    /// `delta_max` plus rounding slack from the sampled curvature.
    fn delta_limit(&self) -> f64 {
        self.delta_max * (1.0 + 1e-12)
    }

    /// `min(0.5/max|κ|, feature size)`.
    pub fn max_tubular_delta(&self) -> f64 {
        self.delta_max
    }

    /// Nearest boundary point by sample search plus safeguarded Newton.
    /// Returns the arclength, the foot point and the inward normal.
    fn project(&self, x: Vec2) -> (f64, Vec2, Vec2) {
        self.project_within(x, f64::INFINITY).expect("unbounded search always finds a sample")
    }

    fn project_within(&self, x: Vec2, radius: f64) -> Option<(f64, Vec2, Vec2)> {
        let (k, _) = self.buckets.nearest(&self.positions, x, radius)?;
        let period = self.shape.period();
        let dth = period / self.samples.len() as f64;
        let t0 = self.sample_params[k];
        // Stationarity of the distance: (x − γ)·γ' = 0.
        let f = |th: f64| {
            let (p, d1, _) = self.eval_oriented(th.rem_euclid(period));
            dot(sub(x, p), d1)
        };
        let (mut lo, mut hi) = (t0 - dth, t0 + dth);
        let flo = f(lo);
        let mut th = t0;
        if flo * f(hi) <= 0.0 {
            let lo_positive = flo > 0.0;
            for _ in 0..100 {
                let (p, d1, d2) = self.eval_oriented(th.rem_euclid(period));
                let g = dot(sub(x, p), d1);
                let dg = dot(sub(x, p), d2) - dot(d1, d1);
                let mut next = th - g / dg;
                if !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                if (f(next) > 0.0) == lo_positive {
                    lo = next;
                } else {
                    hi = next;
                }
                let step = (next - th).abs();
                th = next;
                if step <= 4.0 * f64::EPSILON * period {
                    break;
                }
            }
        }
        let th = th.rem_euclid(period);
        let s = self.sample_from_param(th, 0.0);
        Some((self.arclength_of_param(th), s.position, s.normal))
    }

    /// Arclength of the nearest boundary point.
    pub fn nearest_arclength(&self, x: Vec2) -> f64 {
        self.project(x).0
    }

    /// Signed distance, positive inside.
    pub fn signed_distance(&self, x: Vec2) -> f64 {
        let (_, p, n) = self.project(x);
        let d = norm(sub(x, p));
        if dot(sub(x, p), n) >= 0.0 {
            d
        } else {
            -d
        }
    }

    pub fn contains(&self, x: Vec2) -> bool {
        self.signed_distance(x) > 0.0
    }

    /// Tubular coordinates of `x`, or `None` outside `Ω` or farther than
    /// `delta_max` from the boundary.
    pub fn invert_tubular(&self, x: Vec2) -> Option<TubularPoint> {
        let (y, p, n) = self.project_within(x, self.delta_limit() + self.sample_spacing())?;
        let t = dot(sub(x, p), n);
        // Points on the curve may land a rounding error outside.
        if !(t >= -1e-12 * self.length && t <= self.delta_limit()) {
            return None;
        }
        let t = t.max(0.0);
        let back = [p[0] + t * n[0], p[1] + t * n[1]];
        (norm(sub(back, x)) <= 1e-10 * self.length).then_some(TubularPoint { y, t })
    }

    /// Axis-aligned bounding box of the samples, `[min, max]`.
    pub fn bounding_box(&self) -> [Vec2; 2] {
        let mut lo = [f64::MAX; 2];
        let mut hi = [f64::MIN; 2];
        for s in &self.samples {
            for k in 0..2 {
                lo[k] = lo[k].min(s.position[k]);
                hi[k] = hi[k].max(s.position[k]);
            }
        }
        [lo, hi]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn circle_curvature_and_length() {
        let g = BoundaryGeometry::circle(1.0).unwrap();
        assert!((g.length - TAU).abs() < 1e-12);
        assert!(!g.reversed);
        for s in g.samples() {
            assert!((s.curvature + 1.0).abs() < 1e-12);
        }
        assert!((g.curvature(1.234) + 1.0).abs() < 1e-12);
        let g2 = BoundaryGeometry::circle(2.0).unwrap();
        assert!((g2.curvature(0.3) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn tubular_delta_examples() {
        let close = |g: BoundaryGeometry, want: f64| assert!((g.max_tubular_delta() - want).abs() < 1e-9);
        close(BoundaryGeometry::circle(1.0).unwrap(), 0.5);
        close(BoundaryGeometry::circle(2.0).unwrap(), 1.0);
        close(BoundaryGeometry::ellipse(2.0, 1.0).unwrap(), 0.25);
    }

    #[test]
    fn ellipse_flat_point() {
        let g = BoundaryGeometry::ellipse(2.0, 1.0).unwrap();
        let p = g.invert_tubular([0.0, 0.9]).unwrap();
        assert!((p.t - 0.1).abs() < 1e-12);
        assert!((g.curvature(p.y) + 0.25).abs() < 1e-10);
        let q = g.invert_tubular([1.9, 0.0]).unwrap();
        assert!((g.curvature(q.y) + 2.0).abs() < 1e-10);
    }

    #[test]
    fn weight_is_one_plus_t_kappa() {
        let g = BoundaryGeometry::circle(1.0).unwrap();
        assert_eq!(g.tubular_weight(0.7, 0.0).unwrap(), 1.0);
        assert!((g.tubular_weight(0.7, 0.25).unwrap() - 0.75).abs() < 1e-14);
        assert!(matches!(g.tubular_weight(0.7, 0.6), Err(Error::Domain(_))));
        assert!(matches!(g.tubular_weight(0.7, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn jacobian_by_differences() {
        let g = BoundaryGeometry::star(0.2, 3).unwrap();
        let h = 1e-4;
        for i in 0..32 {
            let y = g.length * i as f64 / 32.0;
            assert!((g.jacobian_det_fd(y, 0.0, h) - 1.0).abs() < 1e-6);
            let dt = (g.jacobian_det_fd(y, h, h) - g.jacobian_det_fd(y, -h, h)) / (2.0 * h);
            assert!((dt - g.curvature(y)).abs() < 1e-6, "{dt} vs {}", g.curvature(y));
            let w = (g.tubular_weight(y, h).unwrap() - 1.0) / h;
            assert!((w - g.curvature(y)).abs() < 1e-12);
        }
    }

    #[test]
    fn inversion_examples() {
        let g = BoundaryGeometry::circle(1.0).unwrap();
        let p = g.invert_tubular([0.5, 0.0]).unwrap();
        assert!(p.y.min(g.length - p.y) < 1e-12 && (p.t - 0.5).abs() < 1e-12);
        assert!(g.invert_tubular([0.0, 0.0]).is_none());
        assert!(g.invert_tubular([1.5, 0.0]).is_none());
        assert!(g.contains([0.0, 0.0]) && !g.contains([1.5, 0.2]));
        assert!((g.signed_distance([0.0, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inversion_round_trip_on_star() {
        let g = BoundaryGeometry::star(0.2, 3).unwrap();
        for i in 0..97 {
            let y = g.length * (i as f64 + 0.37) / 97.0;
            for frac in [0.0, 0.3, 0.9] {
                let t = frac * g.delta_max;
                let p = g.invert_tubular(g.phi(y, t)).unwrap();
                let dy = (p.y - y).abs();
                assert!(dy.min(g.length - dy) < 1e-9 && (p.t - t).abs() < 1e-10, "y={y} t={t} -> {p:?}");
            }
        }
    }

    #[test]
    fn star_has_concave_parts() {
        let g = BoundaryGeometry::star(0.2, 3).unwrap();
        let p = g.invert_tubular([0.7 * (PI / 3.0).cos(), 0.7 * (PI / 3.0).sin()]).unwrap();
        assert!(g.curvature(p.y) > 0.0);
        assert!(g.samples().iter().any(|s| s.curvature < 0.0));
    }

    #[test]
    fn sample_count_invariance() {
        let a = BoundaryGeometry::new(CurveShape::Star { amplitude: 0.2, lobes: 3 }, 2048).unwrap();
        let b = BoundaryGeometry::new(CurveShape::Star { amplitude: 0.2, lobes: 3 }, 4096).unwrap();
        assert!((a.length - b.length).abs() < 1e-12);
        for i in 0..50 {
            let y = a.length * i as f64 / 50.0;
            assert!((a.curvature(y) - b.curvature(y)).abs() < 1e-6);
        }
    }

    #[test]
    fn spline_through_circle_points() {
        let pts: Vec<Vec2> = (0..64).map(|i| {
            let th = TAU * i as f64 / 64.0;
            [th.cos(), th.sin()]
        }).collect();
        let g = BoundaryGeometry::from_points(pts.clone()).unwrap();
        assert!((g.length - TAU).abs() < 1e-4);
        assert!(g.samples().iter().all(|s| (s.curvature + 1.0).abs() < 1e-3));
        let rev: Vec<Vec2> = pts.into_iter().rev().collect();
        let r = BoundaryGeometry::from_points(rev).unwrap();
        assert!(r.reversed);
        assert!(r.samples().iter().all(|s| (s.curvature + 1.0).abs() < 1e-3));
    }

    #[test]
    fn spline_from_csv() {
        let mut text = String::from("x,y\n");
        for i in 0..32 {
            let th = TAU * i as f64 / 32.0;
            text.push_str(&format!("{},{}\n", 2.0 * th.cos(), th.sin()));
        }
        let g = BoundaryGeometry::from_csv(text.as_bytes()).unwrap();
        assert!(g.contains([0.0, 0.0]));
        assert!(BoundaryGeometry::from_csv("x,y\n0,0\n1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn bad_shapes_rejected() {
        assert!(BoundaryGeometry::circle(0.0).is_err());
        assert!(BoundaryGeometry::star(1.2, 3).is_err());
        assert!(BoundaryGeometry::new(CurveShape::Circle { radius: 1.0 }, 8).is_err());
    }
}
