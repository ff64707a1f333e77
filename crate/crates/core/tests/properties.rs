//! Cross-module invariants under random inputs.

use proptest::prelude::*;
use qcert::certifiers::{certify, required_copies, CertParams, CertifierId};
use qcert::classical::ConstantsMode;
use qcert::haar::sample_haar_unitary;
use qcert::linalg::{hs_norm, trace};
use qcert::mic::{mic_apply, mic_matrix};
use qcert::states::{born_distribution, haar_projector_povm, CopyOracle, DensityMatrix, Povm};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dim_and_k() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![Just((2, 2)), Just((4, 2)), Just((4, 4)), Just((8, 2)), Just((8, 4)), Just((8, 8))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn born_law_is_a_distribution(seed in any::<u64>(), (d, k) in dim_and_k()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = DensityMatrix::random(d, &mut rng).unwrap();
        let povm = Povm::random(d, k, &mut rng).unwrap();
        let p = born_distribution(&rho, &povm).unwrap().probs;
        prop_assert_eq!(p.len(), k);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn haar_projector_channel_maps_states_to_states(seed in any::<u64>(), (d, k) in dim_and_k()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = sample_haar_unitary(d, &mut rng);
        let povm = haar_projector_povm(&u, k).unwrap();
        let c = mic_matrix(&povm).unwrap();
        let rho = DensityMatrix::random(d, &mut rng).unwrap();
        let out = mic_apply(&c, rho.matrix()).unwrap();
        prop_assert!((trace(&out).re - 1.0).abs() < 1e-10);
        prop_assert!(DensityMatrix::new(out.clone()).is_ok());
        // Contraction in HS norm: ‖H‖_∞ ≤ 1.
        prop_assert!(hs_norm(&out) <= hs_norm(rho.matrix()) + 1e-10);
    }

    #[test]
    fn certifiers_stay_within_budget(seed in any::<u64>(), which in 0usize..6) {
        let id = CertifierId::ALL[which];
        if id == CertifierId::RandomizedKBoosted {
            return Ok(());
        }
        let d = 4;
        let k = if id == CertifierId::FixedMubK { 2 } else { 4 };
        let params = CertParams::new(1.0, k, ConstantsMode::Calibrated);
        let need = required_copies(id, d, &params).unwrap();
        let budget = need + seed % 97;
        let mut oracle = CopyOracle::new(DensityMatrix::plus(d).unwrap(), budget, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let rho0 = DensityMatrix::mixed(d).unwrap();
        let r = certify(id, &mut oracle, &rho0, &params, &mut rng).unwrap();
        prop_assert!(r.copies <= budget);
        prop_assert_eq!(r.copies, oracle.consumed());
    }
}
