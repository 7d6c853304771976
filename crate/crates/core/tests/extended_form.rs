use std::sync::Arc;

use nlsgeom_core::hamiltonian::{dh, hamiltonian_vf, omega_ext};
use nlsgeom_core::samples::random_smooth_field;
use nlsgeom_core::{omega, ExtTangent, Field, Grid, NonlinearityPower, Result};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> Arc<Grid> {
    Grid::new(256, 40.0).unwrap()
}

fn tangent(rng: &mut ChaCha8Rng) -> ExtTangent {
    ExtTangent {
        v: random_smooth_field(&grid(), rng, 6),
        t: rng.gen_range(-1.0..1.0),
    }
}

/// The printed variant with `T₂` in both `dH` terms.
fn literal_variant(u: &Field, p: NonlinearityPower, a: &ExtTangent, b: &ExtTangent) -> Result<f64> {
    Ok(omega(&a.v, &b.v)? - dh(u, p, &a.v)? * b.t + dh(u, p, &b.v)? * b.t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extended_form_is_antisymmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_smooth_field(&grid(), &mut rng, 6);
        let (a, b) = (tangent(&mut rng), tangent(&mut rng));
        let p = NonlinearityPower::CUBIC;
        let ab = omega_ext(&u, p, &a, &b).unwrap();
        let ba = omega_ext(&u, p, &b, &a).unwrap();
        prop_assert!((ab + ba).abs() <= 1e-12 * (1.0 + ab.abs()));
    }
}

#[test]
fn only_the_antisymmetric_form_has_the_flow_in_its_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let p = NonlinearityPower::CUBIC;
    let u = Field::from_real_fn(&grid(), |x| 1.2 / (0.8 * x).cosh());
    let xi = ExtTangent {
        v: hamiltonian_vf(&u, p),
        t: 1.0,
    };
    let (mut good, mut literal): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let x = tangent(&mut rng);
        let scale = xi.norm() * x.norm();
        good = good.max(omega_ext(&u, p, &xi, &x).unwrap().abs() / scale);
        literal = literal.max(literal_variant(&u, p, &xi, &x).unwrap().abs() / scale);
    }
    assert!(good < 1e-12, "{good:e}");
    assert!(literal > 1e-2, "{literal:e}");
}
