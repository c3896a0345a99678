use hop_core::model::{
    self, chain_coefficients, friction_head_loss, friction_slope, gap_temperature_map,
    inverse_temperature_to_station, total_cost,
};
use hop_core::{FluidProps, ModelError, Scenario, ViscosityModel};
use hop_testkit::instances::{crude, random_instance, RandomShape};
use hop_testkit::physics;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> Scenario {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed), RandomShape::default())
}

fn central_difference(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t + h) - f(t - h)) / (2.0 * h)
}

#[test]
fn viscosity_slope_matches_finite_differences() {
    let fluid = crude();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let t = rng.gen_range(5.0..80.0);
        let analytic = fluid.viscosity_slope(t).unwrap();
        let numeric = central_difference(|u| fluid.kinematic_viscosity(u).unwrap(), t, 1e-3);
        let rel = (analytic - numeric).abs() / analytic.abs();
        assert!(rel < 1e-6, "t={t} analytic={analytic} numeric={numeric} rel={rel}");
    }
}

#[test]
fn friction_slope_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    for seed in 0.. {
        let scen = instance(seed);
        for (j, segs) in scen.gaps.iter().enumerate() {
            for (k, seg) in segs.iter().enumerate() {
                for _ in 0..25 {
                    let t = rng.gen_range(5.0..80.0);
                    let analytic = scen.friction_slope(j, k, t).unwrap();
                    let numeric = central_difference(
                        |u| friction_head_loss(u, seg, &scen.fluid, &scen.friction).unwrap(),
                        t,
                        1e-3,
                    );
                    let rel = (analytic - numeric).abs() / analytic.abs();
                    assert!(rel < 1e-6, "t={t} analytic={analytic} numeric={numeric}");
                    checked += 1;
                }
            }
        }
        if checked >= 1000 {
            break;
        }
    }
}

#[test]
fn friction_agrees_with_independent_formula() {
    for seed in 0..20 {
        let scen = instance(seed);
        for (j, segs) in scen.gaps.iter().enumerate() {
            for (k, seg) in segs.iter().enumerate() {
                for t in [10.0, 25.0, 40.0, 65.0] {
                    let ours = scen.friction(j, k, t).unwrap();
                    let theirs = physics::segment_friction(&scen, seg, t);
                    assert!((ours - theirs).abs() <= 1e-12 * theirs.abs());
                }
            }
        }
    }
}

#[test]
fn viscosity_rejects_non_positive_temperatures() {
    let fluid = crude();
    assert_eq!(fluid.kinematic_viscosity(0.0), Err(ModelError::Domain(0.0)));
    assert!(fluid.viscosity_slope(-3.0).is_err());
    assert!(fluid.kinematic_viscosity(f64::NAN).is_err());
}

#[test]
fn constant_viscosity_gives_flat_friction() {
    let mut scen = instance(3);
    scen.fluid = FluidProps {
        viscosity: ViscosityModel::constant(20.0),
        ..scen.fluid
    };
    let a = scen.friction(0, 0, 10.0).unwrap();
    let b = scen.friction(0, 0, 60.0).unwrap();
    assert_eq!(a, b);
    assert_eq!(scen.friction_slope(0, 0, 30.0).unwrap(), 0.0);
}

#[test]
fn crude_fit_viscosity_at_forty_degrees() {
    // 8.166e6 e^-13.208 + 77.04 e^-1.1528 in mPa·s.
    let mu = ViscosityModel::CRUDE_FIT.dynamic(40.0);
    let expected = 8.166e6 * (-0.3302f64 * 40.0).exp() + 77.04 * (-0.02882f64 * 40.0).exp();
    assert!((mu - expected).abs() < 1e-12 * expected);
    assert!((mu - 39.32).abs() < 0.05, "mu = {mu}");
}

#[test]
fn chain_coefficients_reproduce_forward_averages() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..40 {
        let scen = instance(seed);
        for j in 0..scen.gaps.len() {
            let n = scen.gaps[j].len();
            let anchor = rng.gen_range(0..n);
            let count = n - anchor;
            let coeffs = chain_coefficients(&scen, j, anchor, count).unwrap();
            let u = rng.gen_range(20.0..70.0);
            let mut t = u;
            for (c, seg) in coeffs.iter().zip(&scen.gaps[j][anchor..]) {
                let next = physics::segment_exit_temperature(&scen, seg, t);
                let ave = t / 3.0 + 2.0 * next / 3.0;
                assert!((c.average_at(u) - ave).abs() < 1e-9, "gap {j} anchor {anchor}");
                t = next;
            }
        }
    }
}

#[test]
fn chain_coefficients_reject_out_of_range_requests() {
    let scen = instance(1);
    let n = scen.gaps[0].len();
    assert!(matches!(
        chain_coefficients(&scen, 0, n, 1),
        Err(ModelError::Index { .. })
    ));
    assert!(chain_coefficients(&scen, 0, 0, n).is_ok());
}

#[test]
fn inverse_propagation_undoes_the_gap_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..40 {
        let scen = instance(seed);
        for j in 0..scen.gaps.len() {
            let n = scen.gaps[j].len();
            for point in 0..=n {
                let t_out = rng.gen_range(25.0..70.0);
                let there = gap_temperature_map(&scen, j, point).apply(t_out);
                let back = inverse_temperature_to_station(&scen, j, point, there);
                assert!((back - t_out).abs() < 1e-9);
            }
            let exit: f64 = rng.gen_range(20.0..50.0);
            let ours = inverse_temperature_to_station(&scen, j, n, exit);
            let theirs = physics::outlet_for_exit_temperature(&scen, j, exit);
            assert!((ours - theirs).abs() < 1e-9);
        }
    }
}

#[test]
fn gap_map_matches_segment_by_segment_simulation() {
    for seed in 0..20 {
        let scen = instance(seed);
        for j in 0..scen.gaps.len() {
            let prof = physics::gap_profile(&scen, j, 47.5);
            for (r, t) in prof.temps.iter().enumerate() {
                let ours = gap_temperature_map(&scen, j, r).apply(47.5);
                assert!((ours - t).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn cost_rates_agree_with_independent_prices() {
    for seed in 0..20 {
        let scen = instance(seed);
        for j in 0..scen.n_pump_stations() {
            let r = scen.cost_rates(j);
            let p = physics::station_prices(&scen, j);
            assert!((r.per_csp - p.csp).abs() <= 1e-9 * p.csp);
            assert!((r.per_ssp_metre - p.ssp_metre).abs() <= 1e-9 * p.ssp_metre);
            assert!((r.per_degree - p.degree).abs() <= 1e-9 * p.degree);
        }
    }
}

#[test]
fn total_cost_rejects_wrong_lengths() {
    let scen = instance(2);
    let n = scen.n_pump_stations();
    let err = total_cost(&vec![0.0; n + 1], &vec![0.0; n], &vec![0.0; n], &scen).unwrap_err();
    assert!(matches!(err, ModelError::Dimension { what: "x", .. }));
}

#[test]
fn unit_conversions_round_trip() {
    assert!((model::m3h_to_m3s(3600.0) - 1.0).abs() < 1e-15);
    assert!((model::m3s_to_m3h(model::m3h_to_m3s(2212.0)) - 2212.0).abs() < 1e-9);
}

proptest! {
    #[test]
    fn friction_is_decreasing_and_convex(seed in 0u64..200, a in 5.0f64..75.0, w in 0.01f64..20.0) {
        let scen = instance(seed);
        let seg = &scen.gaps[0][0];
        let f = |t: f64| friction_head_loss(t, seg, &scen.fluid, &scen.friction).unwrap();
        let b = a + w;
        prop_assert!(f(a) > f(b));
        prop_assert!(f(0.5 * (a + b)) <= 0.5 * (f(a) + f(b)) + 1e-12);
        prop_assert!(friction_slope(a, seg, &scen.fluid, &scen.friction).unwrap() < 0.0);
    }

    #[test]
    fn cost_is_affine_in_the_decisions(
        seed in 0u64..100,
        s1 in prop::collection::vec((0.0f64..3.0, 0.0f64..200.0, 0.0f64..10.0), 3),
        s2 in prop::collection::vec((0.0f64..3.0, 0.0f64..200.0, 0.0f64..10.0), 3),
        lambda in 0.0f64..1.0,
    ) {
        let scen = instance(seed);
        let n = scen.n_pump_stations();
        let split = |s: &[(f64, f64, f64)]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            (s[..n].iter().map(|v| v.0).collect(), s[..n].iter().map(|v| v.1).collect(), s[..n].iter().map(|v| v.2).collect())
        };
        let (x1, h1, t1) = split(&s1);
        let (x2, h2, t2) = split(&s2);
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| lambda * p + (1.0 - lambda) * q).collect::<Vec<_>>();
        let c1 = total_cost(&x1, &h1, &t1, &scen).unwrap().total();
        let c2 = total_cost(&x2, &h2, &t2, &scen).unwrap().total();
        let cm = total_cost(&mix(&x1, &x2), &mix(&h1, &h2), &mix(&t1, &t2), &scen).unwrap().total();
        prop_assert!((cm - (lambda * c1 + (1.0 - lambda) * c2)).abs() <= 1e-9 * (c1 + c2).max(1.0));
    }

    #[test]
    fn decay_keeps_temperatures_between_start_and_ambient(seed in 0u64..100, t in 1.0f64..90.0) {
        let scen = instance(seed);
        let seg = &scen.gaps[0][0];
        let next = model::axial_outlet_temperature(t, seg, &scen.fluid);
        let amb = seg.ambient();
        prop_assert!((next - amb) * (t - amb) >= 0.0);
        prop_assert!((next - amb).abs() <= (t - amb).abs());
        let d = model::thermal_decay(seg, &scen.fluid);
        prop_assert!(d.factor > 0.0 && d.factor <= 1.0);
    }
}
