//! Randomized invariants over models drawn by proptest.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qar_fcs::analytic::{sb_current, sb_noise};
use qar_fcs::fcs::{adjugate, cgf_many, charpoly, cooling_value_of, current_of, heat_current, noise, CgfOptions};
use qar_fcs::io::{model_to_json, parse_model};
use qar_fcs::liouvillian::{build_counting_family, build_generator};
use qar_fcs::model::{preset, spin_boson, PresetId};
use qar_fcs::oracle::{conservation_residual, direct_current, random_model, RandomModelConfig};

fn model_from_seed(seed: u64) -> qar_fcs::model::QarModel {
    random_model(&mut ChaCha8Rng::seed_from_u64(seed), &RandomModelConfig::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sign_of_numerator_is_sign_of_current(seed in any::<u64>()) {
        let m = model_from_seed(seed);
        for nu in 0..m.baths().len() {
            let fam = build_counting_family(&m, nu).unwrap();
            let v = cooling_value_of(&fam).unwrap();
            let j = current_of(&fam).unwrap();
            prop_assert!(v == 0.0 && j == 0.0 || v.signum() == j.signum());
        }
    }

    #[test]
    fn currents_balance(seed in any::<u64>()) {
        let m = model_from_seed(seed);
        let r = conservation_residual(&m).unwrap();
        let floor = 1e-12 * build_generator(&m).scale() * m.system().spread();
        prop_assert!(r.pipeline <= 1e-12 * r.max_current + floor);
        prop_assert!(r.direct <= 1e-12 * r.max_current + floor);
    }

    #[test]
    fn direct_route_agrees(seed in any::<u64>()) {
        let m = model_from_seed(seed);
        let floor = 1e-12 * build_generator(&m).scale() * m.system().spread();
        for nu in 0..m.baths().len() {
            let a = heat_current(&m, nu).unwrap();
            let b = direct_current(&m, nu).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()) + floor);
        }
    }

    #[test]
    fn adjugate_identity(seed in any::<u64>()) {
        let l0 = build_generator(&model_from_seed(seed));
        let m = l0.as_matrix();
        let adj = adjugate(m);
        // L adj(L) = det(L) I = 0 for a rate matrix
        let n = m.nrows() as i32;
        prop_assert!((m * &adj).amax() <= 1e-12 * l0.scale().powi(n));
        let cp = charpoly(m);
        prop_assert!(cp.det().abs() <= 1e-12 * l0.scale().powi(n));
    }

    #[test]
    fn cgf_is_convex_and_pinned(seed in any::<u64>()) {
        let m = model_from_seed(seed);
        let fam = build_counting_family(&m, m.cold_index()).unwrap();
        let h = 0.1 / fam.energy_scale();
        let pts: Vec<f64> = (-4..=4).map(|k| k as f64 * h).collect();
        let g = cgf_many(&fam, &pts, &CgfOptions::default()).unwrap();
        prop_assert_eq!(g[4], 0.0);
        let scale = fam.base().scale();
        for w in g.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-13 * scale);
        }
    }

    #[test]
    fn spin_boson_closed_forms(
        w0 in 0.2f64..2.0, bc in 0.1f64..2.0, bh in 0.1f64..2.0,
        gc in 1e-4f64..1e-2, gh in 1e-4f64..1e-2,
    ) {
        let m = spin_boson(w0, gc, gh, bc, bh, 10.0).unwrap();
        let damp = w0 * (-w0 / 10.0).exp();
        let j = sb_current(w0, gc * damp, gh * damp, bc, bh).unwrap();
        let s = sb_noise(w0, gc * damp, gh * damp, bc, bh).unwrap();
        let floor = 1e-14 * (gc + gh) * damp * w0;
        prop_assert!((heat_current(&m, 0).unwrap() - j).abs() <= 1e-10 * j.abs() + floor);
        prop_assert!((noise(&m, 0).unwrap() - s).abs() <= 1e-10 * s);
        prop_assert!(s > 0.0);
    }

    #[test]
    fn preset_files_round_trip(x in 0.01f64..0.99, bh in 0.11f64..0.99, k in 0usize..4) {
        let m = preset(PresetId::ALL[k], x, bh).unwrap();
        prop_assert_eq!(parse_model(&model_to_json(&m)).unwrap(), m);
    }
}
