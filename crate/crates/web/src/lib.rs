//! Browser bindings: layer profiles, the recovery field on the unit disk,
//! and ladder experiments with their fitted coefficients.

use phasefield_core::field2d::{make_boundary_data, recovery_field, FiberOptions, PlateauArc};
use phasefield_core::geodesic::GeodesicTable;
use phasefield_core::geometry::BoundaryGeometry;
use phasefield_core::harness::{run_experiment, ExperimentConfig, ExperimentId};
use phasefield_core::minimizer1d::{minimize_g, DirichletData, MeshOptions, WeightFn};
use phasefield_core::potential::PotentialSpec;
use phasefield_core::profile::{recovery_profile, Regularizer};
use phasefield_core::Result;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
use wasm_bindgen::prelude::*;

/// Half-width of the square raster around the unit disk.
pub const RASTER_EXTENT: f64 = 1.05;

/// Plotted window in units of `ε|log ε|`; layer times stay below 1.5.
const WINDOW: f64 = 3.0;

fn to_js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// Layer profile from `a + ε²` to `b - ε²` on `[0, 1]` with weight
/// `1 + slope·t`, as interleaved `t, v` pairs inside the layer window.
/// `minimizer` selects the discrete minimizer over the recovery profile.
pub fn layer_profile_points(eps: f64, slope: f64, minimizer: bool) -> Result<Vec<f64>> {
    let spec = PotentialSpec::quartic();
    let data = DirichletData::touching_well(&spec, eps, 1.0, 1.0, 2.0);
    let profile = if minimizer {
        let table = GeodesicTable::new(spec.clone());
        let weight = WeightFn::linear(1.0, slope, 1.0)?;
        minimize_g(&spec, &table, &weight, eps, &data, MeshOptions::default())?.profile
    } else {
        recovery_profile(&spec, eps, data.alpha_eps, data.beta_eps, 1.0, Regularizer::Eps)?
    };
    let window = WINDOW * eps * eps.ln().abs();
    let keep = profile.t.partition_point(|&t| t <= window);
    let stride = (keep / 1500).max(1);
    Ok((0..keep).step_by(stride).flat_map(|i| [profile.t[i], profile.v[i]]).collect())
}

/// Recovery field on the unit disk with an `a`-plateau of length `π/4`,
/// sampled at the centres of an `n × n` raster over
/// `[-RASTER_EXTENT, RASTER_EXTENT]²`, row-major from the top. Points
/// outside the disk are NaN.
pub fn disk_field_raster(eps: f64, n: usize) -> Result<Vec<f64>> {
    let spec = PotentialSpec::quartic();
    let geom = BoundaryGeometry::circle(1.0)?;
    let arc = PlateauArc { start: -FRAC_PI_8, length: FRAC_PI_4 };
    let data = make_boundary_data(&geom, &spec, &[arc], 0.1, 2.0, 0.0)?;
    let field = recovery_field(&geom, &data, &spec, eps, 0.25, FiberOptions { fibers: 512, ..Default::default() })?;
    let cell = 2.0 * RASTER_EXTENT / n as f64;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = [-RASTER_EXTENT + (i as f64 + 0.5) * cell, RASTER_EXTENT - (j as f64 + 0.5) * cell];
            let v = if !geom.contains(x) {
                f64::NAN
            } else {
                geom.invert_tubular(x).map_or(spec.b, |p| field.value_at(p.y, p.t))
            };
            out.push(v);
        }
    }
    Ok(out)
}

/// Runs a default experiment and returns its JSON summary. The grid
/// experiment is excluded as too slow for a page.
pub fn experiment_summary(id: &str) -> Result<String> {
    let id: ExperimentId = id.parse()?;
    if id == ExperimentId::E7 {
        return Err(phasefield_core::Error::Unsupported("run e7 from the command line".into()));
    }
    run_experiment(&ExperimentConfig { parallelism: 1, ..ExperimentConfig::new(id) })?.summary_json()
}

#[wasm_bindgen(js_name = layerProfile)]
pub fn layer_profile(eps: f64, slope: f64, minimizer: bool) -> std::result::Result<Vec<f64>, JsError> {
    to_js(layer_profile_points(eps, slope, minimizer))
}

#[wasm_bindgen(js_name = diskField)]
pub fn disk_field(eps: f64, n: usize) -> std::result::Result<Vec<f64>, JsError> {
    to_js(disk_field_raster(eps, n))
}

#[wasm_bindgen(js_name = runExperiment)]
pub fn run_experiment_js(id: &str) -> std::result::Result<String, JsError> {
    to_js(experiment_summary(id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_are_monotone_and_inside_the_wells() {
        for minimizer in [false, true] {
            let pts = layer_profile_points(2f64.powi(-6), 1.0, minimizer).unwrap();
            assert!(pts.len() > 20);
            let v: Vec<f64> = pts.chunks(2).map(|p| p[1]).collect();
            assert!(v.windows(2).all(|w| w[1] >= w[0] - 1e-12));
            assert!(v.iter().all(|x| (-1.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn raster_covers_the_disk() {
        let n = 64;
        let r = disk_field_raster(2f64.powi(-4), n).unwrap();
        assert_eq!(r.len(), n * n);
        assert!(r[0].is_nan());
        let centre = r[n / 2 * n + n / 2];
        assert!((centre - 1.0).abs() < 1e-9);
        let inside: Vec<f64> = r.iter().copied().filter(|v| !v.is_nan()).collect();
        assert!(inside.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(inside.iter().any(|&v| v < -0.5));
    }

    #[test]
    fn summaries_are_json() {
        let s = experiment_summary("e1").unwrap();
        assert!(s.contains("\"experiment\": \"e1\""));
        assert!(experiment_summary("e7").is_err());
        assert!(experiment_summary("x").is_err());
    }
}
