use phasefield_core::fit::{fit_asymptote, FitModel};
use phasefield_core::geodesic::GeodesicTable;
use phasefield_core::geometry::BoundaryGeometry;
use phasefield_core::minimizer1d::{energy_report, DirichletData, ScalingMode, WeightFn};
use phasefield_core::potential::PotentialSpec;
use phasefield_core::profile::{inverse_psi, psi_regularized, recovery_profile, Regularizer};
use proptest::prelude::*;
use std::sync::OnceLock;

fn star() -> &'static BoundaryGeometry {
    static GEOM: OnceLock<BoundaryGeometry> = OnceLock::new();
    GEOM.get_or_init(|| BoundaryGeometry::star(0.2, 5).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_psi_round_trip(k in 3i32..=12, frac in 0.01f64..0.99) {
        let spec = PotentialSpec::quartic();
        let eps = 2f64.powi(-k);
        let (alpha, beta) = (spec.a + eps * eps, spec.b - eps * eps);
        let r = alpha + frac * (beta - alpha);
        let t = psi_regularized(&spec, eps, eps, alpha, r).unwrap();
        let back = inverse_psi(&spec, eps, eps, alpha, beta, t).unwrap();
        prop_assert!((back - r).abs() <= 1e-8, "r {r} back {back}");
    }

    #[test]
    fn recovery_profile_is_monotone(k in 3i32..=12, start in 0.0f64..0.9) {
        let spec = PotentialSpec::quartic();
        let eps = 2f64.powi(-k);
        let alpha = spec.a + start * (spec.b - spec.a);
        let p = recovery_profile(&spec, eps, alpha, spec.b - eps * eps, 1.0, Regularizer::Eps).unwrap();
        prop_assert!(p.is_monotone());
    }

    #[test]
    fn tubular_weight_positive_inside_the_tube(y in 0.0f64..1.0, s in 0.0f64..1.0) {
        let geom = star();
        let w = geom.tubular_weight(y * geom.length, s * geom.delta_max).unwrap();
        prop_assert!(w > 0.0);
    }

    #[test]
    fn tubular_inverse_round_trip(y in 0.0f64..1.0, s in 0.0f64..0.95) {
        let geom = star();
        let (y, t) = (y * geom.length, s * geom.delta_max);
        let p = geom.invert_tubular(geom.phi(y, t)).unwrap();
        let dy = (p.y - y).rem_euclid(geom.length);
        prop_assert!(dy.min(geom.length - dy) <= 1e-8 && (p.t - t).abs() <= 1e-8, "{y} {t} -> {p:?}");
    }

    #[test]
    fn jacobian_matches_curvature(y in 0.0f64..1.0) {
        let geom = star();
        let y = y * geom.length;
        let dt = 1e-3 * geom.delta_max;
        let at_boundary = geom.jacobian_det_fd(y, 0.0, 1e-5);
        let slope = (geom.jacobian_det_fd(y, dt, 1e-5) - at_boundary) / dt;
        prop_assert!((at_boundary - 1.0).abs() <= 1e-6);
        prop_assert!((slope - geom.curvature(y)).abs() <= 1e-6);
    }

    #[test]
    fn fit_recovers_inverse_log_model(c in -2.0f64..2.0, c1 in -2.0f64..2.0) {
        let pts: Vec<(f64, f64)> = (6..=14)
            .map(|k| {
                let e = 2f64.powi(-k);
                (e, c + c1 / e.ln().abs())
            })
            .collect();
        let fit = fit_asymptote(&pts, FitModel::AffineInvLog).unwrap();
        prop_assert!((fit.limit() - c).abs() <= 1e-9 && (fit.coefficients[1] - c1).abs() <= 1e-9);
    }

    #[test]
    fn fit_recovers_log_slope(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let pts: Vec<(f64, f64)> = (4..=12)
            .map(|k| {
                let e = 2f64.powi(-k);
                (e, a * e.ln().abs() + b)
            })
            .collect();
        let fit = fit_asymptote(&pts, FitModel::AffineLog).unwrap();
        prop_assert!((fit.coefficients[0] - a).abs() <= 1e-9 && (fit.coefficients[1] - b).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_report_affine_identity(k in 5i32..=12, slope in 0.0f64..2.0) {
        let spec = PotentialSpec::quartic();
        let table = GeodesicTable::new(spec.clone());
        let w = WeightFn::linear(1.0, slope, 1.0).unwrap();
        let eps = 2f64.powi(-k);
        let data = DirichletData::touching_well(&spec, eps, 1.0, 1.0, 2.0);
        let p = recovery_profile(&spec, eps, data.alpha_eps, data.beta_eps, 1.0, Regularizer::Eps).unwrap();
        for mode in [ScalingMode::Eps, ScalingMode::EpsLog] {
            let r = energy_report(&spec, &table, &w, &data, &p, mode).unwrap();
            let ulps = 4.0 * f64::EPSILON * r.g1.abs();
            prop_assert!((r.g2_log_scale * eps * eps.ln().abs() + r.first_order_min - r.g1).abs() <= ulps);
            prop_assert!((r.g2_eps_scale * eps + r.first_order_min - r.g1).abs() <= ulps);
        }
    }
}
