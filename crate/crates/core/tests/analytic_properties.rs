use approx::assert_relative_eq;
use proptest::prelude::*;

use pblowup::asymptotics::{gamma_exponent, neck_integral, predict, BlowUpExponent};
use pblowup::geometry::{BoundaryDatum, GapMode, Particle, ParticlePair};
use pblowup::quadrature::integrate;
use pblowup::radial::{fit_two_point, tangent_secant_ratio};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn facing_arcs_are_mirror_images(r in 0.1f64..10.0, d in 1e-6f64..1.0, s in -0.99f64..0.99) {
        let pair = ParticlePair::new(r, d * r).unwrap();
        let x = s * r;
        let lo = pair.facing_arc_height(Particle::Lower, x).unwrap();
        let hi = pair.facing_arc_height(Particle::Upper, x).unwrap();
        prop_assert!((lo + hi).abs() <= 1e-12 * r);
        let gap = pair.gap_width(x, GapMode::Exact).unwrap();
        prop_assert!((gap - (hi - lo)).abs() <= 1e-12 * r);
        prop_assert!(gap >= pair.gap_width(x, GapMode::Quadratic).unwrap() - 1e-15 * r);
    }

    #[test]
    fn arc_points_lie_on_their_circles(r in 0.1f64..10.0, d in 1e-4f64..1.0, s in -0.95f64..0.95) {
        let pair = ParticlePair::new(r, d * r).unwrap();
        for which in Particle::BOTH {
            let x = s * r;
            let y = pair.facing_arc_height(which, x).unwrap();
            prop_assert!(pair.signed_distance(which, [x, y]).abs() <= 1e-12 * r);
        }
    }

    #[test]
    fn scaling_preserves_relative_geometry(r in 0.1f64..10.0, d in 1e-4f64..1.0, k in 0.1f64..10.0) {
        let pair = ParticlePair::new(r, d * r).unwrap();
        let big = pair.scaled(k).unwrap();
        assert_relative_eq!(big.center(Particle::Upper)[1], k * pair.center(Particle::Upper)[1], max_relative = 1e-14);
        assert_relative_eq!(big.gap_width(0.5 * k * r, GapMode::Exact).unwrap(),
            k * pair.gap_width(0.5 * r, GapMode::Exact).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn negated_datum_is_odd(xx in -2.0f64..2.0, xy in -2.0f64..2.0, yy in -2.0f64..2.0, linear in -2.0f64..2.0,
                            x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let u = BoundaryDatum::Quadratic { xx, xy, yy, linear };
        prop_assert_eq!(u.negated().eval([x, y]), -u.eval([x, y]));
    }

    #[test]
    fn two_point_profiles_interpolate_and_solve(p in 2.0f64..6.0, r1 in 0.05f64..1.0, span in 0.1f64..3.0,
                                                v1 in -5.0f64..5.0, dv in 0.1f64..5.0, dim in 2u32..=3) {
        let r2 = r1 + span;
        let prof = fit_two_point(r1, v1, r2, v1 + dv, p, dim).unwrap();
        assert_relative_eq!(prof.eval(r1).unwrap(), v1, epsilon = 1e-9 * (1.0 + v1.abs()));
        assert_relative_eq!(prof.eval(r2).unwrap(), v1 + dv, epsilon = 1e-9 * (1.0 + v1.abs() + dv));
        let mid = 0.5 * (r1 + r2);
        let scale = prof.gradient(mid).unwrap().abs().powf(p - 1.0) / mid;
        prop_assert!(prof.plaplace_residual(mid).unwrap().abs() <= 1e-9 * scale.max(1.0));
        // The profile increases monotonically between the two radii.
        prop_assert!(prof.gradient(mid).unwrap() > 0.0);
    }

    #[test]
    fn concave_profiles_have_tangent_above_secant(beta in -3.0f64..1.0, r1 in 0.01f64..1.0, span in 0.01f64..2.0) {
        prop_assert!(tangent_secant_ratio(beta, r1, r1 + span) >= 1.0 - 1e-12);
    }

    #[test]
    fn quadrature_is_exact_on_cubics(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, hi in 0.1f64..4.0) {
        let f = |x: f64| a * x * x * x + b * x + c;
        let exact = a * hi.powi(4) / 4.0 + b * hi * hi / 2.0 + c * hi;
        let r = integrate(f, &[0.0, hi], 1e-13, 4).unwrap();
        prop_assert!((r.value - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn neck_integral_decreases_in_delta(p in 2.0f64..6.0, d1 in 1e-6f64..1e-2, f in 1.1f64..10.0) {
        let a = neck_integral(d1, 0.5, 1.0, p, 2).unwrap();
        let b = neck_integral(d1 * f, 0.5, 1.0, p, 2).unwrap();
        prop_assert!(a > b);
    }

    #[test]
    fn prediction_obeys_its_own_law(p in 2.0f64..5.0, r0 in 0.1f64..10.0, delta in 1e-5f64..1e-1) {
        let pred = predict(p, 2, 1.0, r0, delta).unwrap();
        let BlowUpExponent::Power(gamma) = pred.gamma else { unreachable!() };
        let lhs = pred.gap.powf(p - 1.0) * delta.powf(-gamma);
        assert_relative_eq!(lhs, r0 / pred.c_o, max_relative = 1e-10);
        assert_relative_eq!(pred.grad_max, pred.gap / delta, max_relative = 1e-12);
        let other = pred.at(delta / 3.0);
        assert_relative_eq!(other.gap / pred.gap, (1.0f64 / 3.0).powf(pred.gap_exponent.unwrap()), max_relative = 1e-10);
    }
}

#[test]
fn exponent_boundary_cases() {
    assert_eq!(gamma_exponent(2.0f64, 3).unwrap(), BlowUpExponent::Log);
    assert_eq!(
        gamma_exponent(2.0f64, 2).unwrap(),
        BlowUpExponent::Power(0.5)
    );
    assert!(gamma_exponent(2.5f64, 3).is_err());
    let single = gamma_exponent(3.0f32, 2).unwrap();
    assert_eq!(single, BlowUpExponent::Power(1.5f32));
}

#[test]
fn zero_flux_constant_is_degenerate() {
    let pred = predict(3.0, 2, 1.0, 0.0, 0.01).unwrap();
    assert!(pred.degenerate);
    assert_eq!(pred.gap, 0.0);
    assert!(predict(3.0, 2, 1.0, -1.0, 0.01).is_err());
}
