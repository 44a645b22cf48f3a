//! Structural invariants that hold exactly or to a fixed tolerance,
//! independent of any asymptotic regime.

use crate::error::Result;
use crate::field2d::{cartesian_energy, energy_f, make_boundary_data, recovery_field, Field2D, FiberOptions};
use crate::geodesic::GeodesicTable;
use crate::geometry::BoundaryGeometry;
use crate::harness::{run_experiment, Check, ExperimentConfig, ExperimentId};
use crate::minimizer1d::{energy_report, DirichletData, ScalingMode, WeightFn};
use crate::potential::PotentialSpec;
use crate::profile::{inverse_psi, psi_regularized, recovery_profile, Regularizer};

/// Tubular-coordinate energy of a fiber field against midpoint quadrature
/// of the same field on a Cartesian grid of spacing `ε/8`.
pub fn change_of_variables() -> Result<Check> {
    let spec = PotentialSpec::quartic();
    let eps = 2f64.powi(-4);
    let cases = [
        (BoundaryGeometry::circle(1.0)?, -std::f64::consts::FRAC_PI_8, std::f64::consts::FRAC_PI_4),
        (BoundaryGeometry::ellipse(1.3, 0.8)?, 0.5, 0.6),
    ];
    let mut worst: f64 = 0.0;
    for (geom, start, length) in cases {
        let arc = crate::field2d::PlateauArc { start, length };
        let data = make_boundary_data(&geom, &spec, &[arc], 0.1, 2.0, 0.0)?;
        let depth = 0.25f64.min(geom.delta_max);
        let field = recovery_field(&geom, &data, &spec, eps, depth, FiberOptions::default())?;
        let cartesian = cartesian_energy(&field, &data, &spec, &geom, eps / 8.0)?;
        let tubular = energy_f(&Field2D::Fiber(field), &spec)?.total;
        worst = worst.max((cartesian - tubular).abs() / tubular);
    }
    let bound = 5e-3;
    Ok(Check {
        name: "change_of_variables".into(),
        pass: worst <= bound,
        value: worst,
        bound,
        detail: "relative gap, circle and ellipse, ε = 2^-4".into(),
    })
}

/// `Ψ⁻¹(Ψ(r)) = r` by bisection, and the ODE profile at time `Ψ(r)`
/// reproduces `r`.
pub fn psi_inverse() -> Result<Check> {
    let spec = PotentialSpec::quartic();
    let mut worst: f64 = 0.0;
    for k in [4, 8, 12] {
        let eps = 2f64.powi(-k);
        let (alpha, beta) = (spec.a + eps * eps, spec.b - eps * eps);
        let full = psi_regularized(&spec, eps, eps, alpha, beta)?;
        let profile = recovery_profile(&spec, eps, alpha, beta, 2.0 * full, Regularizer::Eps)?;
        for i in 1..40 {
            let r = alpha + (beta - alpha) * i as f64 / 40.0;
            let t = psi_regularized(&spec, eps, eps, alpha, r)?;
            worst = worst.max((inverse_psi(&spec, eps, eps, alpha, beta, t)? - r).abs());
            worst = worst.max((profile.value_at(t) - r).abs());
        }
    }
    let bound = 1e-8;
    Ok(Check {
        name: "psi_inverse".into(),
        pass: worst <= bound,
        value: worst,
        bound,
        detail: "largest level error, ε = 2^-4, 2^-8, 2^-12".into(),
    })
}

/// `det DΦ(y, 0) = 1` and `∂_t det DΦ = κ` by finite differences on curved
/// and non-convex boundaries.
pub fn tubular_jacobian() -> Result<Check> {
    let shapes = [BoundaryGeometry::ellipse(1.5, 0.7)?, BoundaryGeometry::star(0.2, 5)?];
    let mut worst: f64 = 0.0;
    for geom in &shapes {
        let dt = 1e-3 * geom.max_tubular_delta();
        for i in 0..64 {
            let y = geom.length * (i as f64 + 0.25) / 64.0;
            let at_boundary = geom.jacobian_det_fd(y, 0.0, 1e-5);
            let slope = (geom.jacobian_det_fd(y, dt, 1e-5) - at_boundary) / dt;
            worst = worst.max((at_boundary - 1.0).abs()).max((slope - geom.curvature(y)).abs());
        }
    }
    let bound = 1e-6;
    Ok(Check {
        name: "tubular_jacobian".into(),
        pass: worst <= bound,
        value: worst,
        bound,
        detail: "ellipse and five-lobed star, 64 boundary points each".into(),
    })
}

/// The rescaled energies reproduce the raw one through their defining
/// affine maps, to a few ulps.
pub fn energy_report_affine() -> Result<Check> {
    let spec = PotentialSpec::quartic();
    let table = GeodesicTable::new(spec.clone());
    let w = WeightFn::linear(1.0, 1.0, 1.0)?;
    let mut worst: f64 = 0.0;
    for k in [6, 9, 12] {
        let eps = 2f64.powi(-k);
        let cases = [
            (DirichletData::touching_well(&spec, eps, 1.0, 1.0, 2.0), Regularizer::Eps),
            (DirichletData::interior(&spec, eps, spec.c, 1.0, 2.0), Regularizer::Power(2.0)),
        ];
        for (data, reg) in cases {
            let p = recovery_profile(&spec, eps, data.alpha_eps, data.beta_eps, 1.0, reg)?;
            for mode in [ScalingMode::Eps, ScalingMode::EpsLog] {
                let r = energy_report(&spec, &table, &w, &data, &p, mode)?;
                let ulp = f64::EPSILON * r.g1.abs();
                let log_form = r.g2_log_scale * eps * eps.ln().abs() + r.first_order_min;
                let eps_form = r.g2_eps_scale * eps + r.first_order_min;
                worst = worst.max((log_form - r.g1).abs() / ulp).max((eps_form - r.g1).abs() / ulp);
            }
        }
    }
    let bound = 4.0;
    Ok(Check {
        name: "energy_report_affine".into(),
        pass: worst <= bound,
        value: worst,
        bound,
        detail: "largest mismatch in ulps of G1".into(),
    })
}

/// Two runs of the same config give byte-identical tables and summaries,
/// and serial and parallel sweeps agree.
pub fn determinism() -> Result<Check> {
    let mut mismatches = 0usize;
    for id in [ExperimentId::E1, ExperimentId::E3, ExperimentId::E6] {
        let serial = ExperimentConfig { parallelism: 1, ..ExperimentConfig::new(id) };
        let parallel = ExperimentConfig { parallelism: 0, ..ExperimentConfig::new(id) };
        let a = run_experiment(&serial)?;
        let b = run_experiment(&serial)?;
        let c = run_experiment(&parallel)?;
        if a.summary_json()? != b.summary_json()? {
            mismatches += 1;
        }
        for ((x, y), z) in a.series.iter().zip(&b.series).zip(&c.series) {
            if x.to_csv()? != y.to_csv()? || x.to_csv()? != z.to_csv()? {
                mismatches += 1;
            }
        }
    }
    Ok(Check {
        name: "determinism".into(),
        pass: mismatches == 0,
        value: mismatches as f64,
        bound: 0.0,
        detail: "differing summaries or tables over reruns and thread counts, E1, E3, E6".into(),
    })
}

/// Every structural check, in a fixed order.
pub fn all() -> Result<Vec<Check>> {
    Ok(vec![change_of_variables()?, psi_inverse()?, tubular_jacobian()?, energy_report_affine()?, determinism()?])
}
