use std::f64::consts::PI;

use proptest::prelude::*;

use bilattice::conditions::{solve_phase, ConditionError};
use bilattice::config::RunConfig;
use bilattice::dynamics::{
    full_to_transformed, integrate_averaged, integrate_full, integrate_transformed, transformed_to_full,
};
use bilattice::effective::{analytic_amplitudes, analytic_amplitudes_with, effective_rate, rates_for_site};
use bilattice::export::fmt_float;
use bilattice::specfun::{bessel_j, bessel_j_family};
use bilattice::{
    BesselOrder, ChainRates, DriveParams, GapArguments, IntegratorConfig, LatticeGeometry, Parity, Picture, WaveState,
};

fn order() -> impl Strategy<Value = BesselOrder> {
    (0u32..6).prop_map(BesselOrder::new)
}

fn drive() -> impl Strategy<Value = (f64, f64, BesselOrder, f64)> {
    (-1.0..1.0f64, -1.0..1.0f64, order(), -PI..PI)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bessel_reflection(m in 0u32..20, x in 0.0..40.0f64) {
        let m = BesselOrder::new(m);
        let sign = if m.is_even() { 1.0 } else { -1.0 };
        let a = bessel_j(m, -x).unwrap();
        let b = bessel_j(m, x).unwrap();
        prop_assert!((a - sign * b).abs() < 1e-14);
    }

    #[test]
    fn bessel_recurrence(m in 1u32..15, x in 0.1..40.0f64) {
        let fam = bessel_j_family(BesselOrder::new(m + 1), x).unwrap();
        let m = m as usize;
        let lhs = fam[m - 1] + fam[m + 1];
        let rhs = 2.0 * m as f64 / x * fam[m];
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn bessel_normalization(x in -50.0..50.0f64) {
        let k = (x.abs() + 40.0).ceil() as u32;
        let fam = bessel_j_family(BesselOrder::new(k), x).unwrap();
        let sum = fam[0] * fam[0] + 2.0 * fam[1..].iter().map(|v| v * v).sum::<f64>();
        prop_assert!((sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rate_parity_in_delta((j0, dj, m, phi) in drive(), delta in -8.0..8.0f64) {
        let f = effective_rate(j0, dj, m, phi, delta);
        let g = effective_rate(j0, dj, m, phi, -delta);
        let want = if m.is_even() { f } else { f.conj() };
        prop_assert!((g - want).norm() < 1e-14);
        if m.is_even() {
            prop_assert_eq!(f.im, 0.0);
        }
    }

    #[test]
    fn rate_symmetry_in_phase((j0, dj, m, phi) in drive(), delta in -8.0..8.0f64) {
        let f = effective_rate(j0, dj, m, phi, delta);
        let g = effective_rate(j0, dj, m, -phi, delta);
        let h = effective_rate(j0, dj, m, phi + 2.0 * PI, delta);
        let want = if m.is_even() { f } else { f.conj() };
        prop_assert!((g - want).norm() < 1e-14);
        prop_assert!((h - f).norm() < 1e-12);
    }

    #[test]
    fn averaged_chain_is_hermitian((j0, dj, m, phi) in drive(), da in 0.0..8.0f64, db in 0.0..8.0f64) {
        let d = DriveParams::new(j0, dj, 1.0, 1.0, m, phi).unwrap();
        let chain = ChainRates::from_drive(&d, &GapArguments { delta_a: da, delta_b: db });
        prop_assert!(chain.hermiticity_defect() < 1e-15);
        prop_assert_eq!(chain.even, rates_for_site(&d, &GapArguments { delta_a: da, delta_b: db }, Parity::Even));
    }

    #[test]
    fn solved_phase_zeroes_the_rate(j0 in 0.1..1.0f64, dj in 0.1..1.5f64, m in (1u32..3).prop_map(|k| 2 * k), delta in 0.5..7.0f64) {
        let m = BesselOrder::new(m);
        match solve_phase(j0, dj, m, delta, (0.0, PI)) {
            Ok(phi) => {
                prop_assert!((0.0..=PI).contains(&phi));
                prop_assert!(effective_rate(j0, dj, m, phi, delta).norm() < 1e-10);
            }
            Err(ConditionError::NoPhase { ratio }) => prop_assert!(ratio.abs() > 1.0),
            Err(ConditionError::SingularRatio { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_form_conserves_norm((j0, dj, m, phi) in drive(), da in 0.0..6.0f64, db in 0.0..6.0f64, t in 0.0..100.0f64) {
        let d = DriveParams::new(0.5 * j0, 0.5 * dj, 1.0, 1.0, m, phi).unwrap();
        let chain = ChainRates::from_drive(&d, &GapArguments { delta_a: da, delta_b: db });
        let g = LatticeGeometry::symmetric(1.0, 1.0, 140).unwrap();
        let amps = analytic_amplitudes(&chain, 1, t, &g).unwrap();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-9, "norm {norm}");
    }

    #[test]
    fn quadrature_has_converged((j0, dj, m, phi) in drive(), da in 0.0..6.0f64, db in 0.0..6.0f64, t in 0.0..20.0f64) {
        let d = DriveParams::new(j0, dj, 1.0, 1.0, m, phi).unwrap();
        let chain = ChainRates::from_drive(&d, &GapArguments { delta_a: da, delta_b: db });
        let g = LatticeGeometry::symmetric(1.0, 1.0, 60).unwrap();
        let coarse = analytic_amplitudes_with(&chain, 0, t, &g, 1024, 1e-6).unwrap();
        let fine = analytic_amplitudes_with(&chain, 0, t, &g, 4096, 1e-6).unwrap();
        for (a, b) in coarse.iter().zip(&fine) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn averaged_norm_drift((j0, dj, m, phi) in drive(), da in 0.0..6.0f64, db in 0.0..6.0f64, start in -3i64..3) {
        let d = DriveParams::new(j0, dj, 1.0, 1.0, m, phi).unwrap();
        let chain = ChainRates::from_drive(&d, &GapArguments { delta_a: da, delta_b: db });
        let g = LatticeGeometry::symmetric(1.0, 1.0, 60).unwrap();
        let s = WaveState::localized(&g, start, Picture::Averaged).unwrap();
        let traj = integrate_averaged(&chain, &s, 15.0, &IntegratorConfig::default()).unwrap();
        prop_assert!(traj.max_norm_drift() < 1e-10);
    }

    #[test]
    fn gauge_consistency(j0 in 0.2..1.0f64, dj in 0.0..1.0f64, m in order(), phi in -PI..PI, e0 in 0.0..10.0f64, omega in 3.0..10.0f64, a in 0.5..2.0f64, b in 0.5..2.0f64) {
        let g = LatticeGeometry::symmetric(a, b, 16).unwrap();
        let d = DriveParams::new(j0, dj, e0, omega, m, phi).unwrap();
        let cfg = IntegratorConfig { samples: 11, ..Default::default() };
        let full = integrate_full(&g, &d, &WaveState::localized(&g, 0, Picture::Full).unwrap(), 3.0, &cfg).unwrap();
        let tr = integrate_transformed(&g, &d, &WaveState::localized(&g, 0, Picture::Transformed).unwrap(), 3.0, &cfg).unwrap();
        for (x, y) in full.states.iter().zip(&tr.states) {
            for (p, q) in x.amps.iter().zip(&transformed_to_full(&g, &d, y).amps) {
                prop_assert!((p.norm_sqr() - q.norm_sqr()).abs() < 1e-9);
                prop_assert!((p - q).norm() < 1e-8);
            }
            let back = full_to_transformed(&g, &d, x);
            prop_assert!(back.amps.iter().zip(&y.amps).all(|(p, q)| (p - q).norm() < 1e-8));
        }
    }

    #[test]
    fn time_reversal(j0 in 0.2..1.0f64, dj in 0.0..1.0f64, m in order(), phi in -PI..PI, e0 in 0.0..10.0f64, t in 0.5..4.0f64) {
        let g = LatticeGeometry::symmetric(1.0, 1.3, 16).unwrap();
        let d = DriveParams::new(j0, dj, e0, 5.0, m, phi).unwrap();
        let cfg = IntegratorConfig { samples: 2, ..Default::default() };
        let s = WaveState::localized(&g, 1, Picture::Full).unwrap();
        let there = integrate_full(&g, &d, &s, t, &cfg).unwrap().last().clone();
        let back = integrate_full(&g, &d, &there, 0.0, &cfg).unwrap().last().clone();
        prop_assert_eq!(back.t, 0.0);
        for (p, q) in back.amps.iter().zip(&s.amps) {
            prop_assert!((p - q).norm() < 1e-7);
        }
    }
}

proptest! {
    #[test]
    fn floats_survive_export(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        prop_assert_eq!(fmt_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn config_echo_round_trips(j0 in -5.0..5.0f64, omega in 0.1..100.0f64, phi in -PI..PI, half in 1i64..500, steps in 2usize..5000, m in 0u32..8) {
        let mut c = RunConfig::from_toml_str("[drive]\nj0 = 1.0\nomega = 1.0\n").unwrap();
        c.drive.j0 = j0;
        c.drive.omega = omega;
        c.drive.phi = phi;
        c.drive.m = m;
        c.geometry.half_width = half;
        c.scan.steps = steps;
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        prop_assert_eq!(back, c);
    }
}
