use std::sync::Arc;

use nlsgeom_core::noether::{charge_drift, drift_report, generic_charge, ChargeKind, DriftScale};
use nlsgeom_core::propagator::{evolve, exact_soliton, StepConfig};
use nlsgeom_core::samples::random_smooth_field;
use nlsgeom_core::{Field, Grid, NlsError, NonlinearityPower};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> Arc<Grid> {
    Grid::new(512, 60.0).unwrap()
}

fn power_for(kind: ChargeKind) -> NonlinearityPower {
    match kind.spec().requires_p {
        Some(p) => NonlinearityPower::new(p).unwrap(),
        None => NonlinearityPower::CUBIC,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generic_charge_is_a_fixed_multiple_of_closed_form(seed in any::<u64>(), t in -2.0f64..2.0) {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_smooth_field(&g, &mut rng, 5);
        for kind in ChargeKind::ALL {
            let p = power_for(kind);
            let generic = generic_charge(kind, &u, t, p).unwrap();
            let closed = kind.closed_form(&u, t, p);
            let scale: f64 = kind.terms(&u, t, p).iter().map(|x| x.abs()).sum::<f64>().max(1e-12);
            prop_assert!(
                (generic - kind.spec().generic_factor * closed).abs() < 1e-8 * scale,
                "{}: generic {generic} closed {closed}", kind.name()
            );
        }
    }
}

#[test]
fn names_round_trip() {
    for kind in ChargeKind::ALL {
        assert_eq!(ChargeKind::from_name(kind.name()), Some(kind));
    }
    assert_eq!(ChargeKind::from_name("angular"), None);
}

#[test]
fn time_dependent_charges_use_term_normalization() {
    for kind in ChargeKind::ALL {
        let spec = kind.spec();
        let expect = if spec.time_dependent {
            DriftScale::TermMagnitude
        } else {
            DriftScale::InitialValue
        };
        assert_eq!(spec.scale, expect, "{}", kind.name());
    }
}

#[test]
fn quintic_only_charges_are_rejected_for_cubic_runs() {
    let g = grid();
    let u0 = Field::from_real_fn(&g, |x| 1.0 / x.cosh());
    let traj = evolve(
        &u0,
        NonlinearityPower::CUBIC,
        &StepConfig::new(1e-2, 0.1, 1).unwrap(),
    )
    .unwrap();
    for kind in [ChargeKind::Virial, ChargeKind::Pseudoconformal] {
        match drift_report(&traj, &[kind.spec()]) {
            Err(NlsError::IncompatibleCharge { required, actual, .. }) => {
                assert_eq!((required, actual), (5.0, 3.0));
            }
            other => panic!("expected incompatibility, got {other:?}"),
        }
    }
    assert!(drift_report(&traj, &[ChargeKind::Mass.spec(), ChargeKind::Galilean.spec()]).is_ok());
}

#[test]
fn boosted_soliton_charges_match_exact_values() {
    let g = grid();
    let (eta, v) = (1.2, 0.5);
    let u0 = exact_soliton(eta, v, 0.0, 0.0, 0.0, &g).unwrap();
    let traj = evolve(
        &u0,
        NonlinearityPower::CUBIC,
        &StepConfig::new(1e-3, 2.0, 100).unwrap(),
    )
    .unwrap();
    let mass = charge_drift(&traj, &ChargeKind::Mass.spec());
    let momentum = charge_drift(&traj, &ChargeKind::Momentum.spec());
    let energy = charge_drift(&traj, &ChargeKind::Energy.spec());
    assert!((mass.t0_value - 2.0 * eta).abs() < 1e-10);
    assert!((momentum.t0_value - 2.0 * eta * v).abs() < 1e-10);
    // ¼∫|u_x|² − ¼∫|u|⁴ = η v²/2 + η³/6 − η³/3
    let h = 0.5 * eta * v * v - eta.powi(3) / 6.0;
    assert!((energy.t0_value - h).abs() < 1e-8, "{} vs {h}", energy.t0_value);
    for row in [&mass, &momentum, &energy] {
        assert!(
            row.max_rel_drift < 1e-8,
            "{}: {:e}",
            row.charge,
            row.max_rel_drift
        );
    }
}
