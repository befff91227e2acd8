use amendable::channel::{
    self, attenuation, compose, phi1, phi2, squeeze_channel, GaussianChannel,
};
use amendable::experiment::{output_state, prepare_resources, ExperimentConfig, Variant};
use amendable::sampling::{random_cov, random_symplectic};
use amendable::witness::nu_squared_closed_form;
use amendable::{CovMatrix, SymplecticTransform};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn nu2(cfg: &ExperimentConfig) -> f64 {
    nu_squared_closed_form(&output_state(cfg).unwrap())
        .unwrap()
        .nu_squared
}

#[test]
fn probe_witness_depends_only_on_squeeze_magnitude() {
    let probe = prepare_resources(1.3, 1.0).unwrap().probe;
    let w = nu_squared_closed_form(&probe).unwrap().nu_squared;
    assert!((w - 0.068_132_948_258_503_15).abs() < 1e-12, "{w}");
    let flipped = prepare_resources(-1.3, 1.0).unwrap().probe;
    let w2 = nu_squared_closed_form(&flipped).unwrap().nu_squared;
    assert!((w - w2).abs() < 1e-14);
}

#[test]
fn ancilla_is_squeezed_vacuum_when_lossless() {
    for r in [0.3, 1.3, -0.8] {
        let res = prepare_resources(r, 1.0).unwrap();
        let expected = CovMatrix::squeezed_vacuum(r).unwrap();
        assert!(res.ancilla.max_abs_diff(&expected) < 1e-12);
    }
}

#[test]
fn source_loss_commutes_with_balanced_split() {
    // Equal loss on both arms before B(1/2) equals the same loss after it.
    let bs = SymplecticTransform::beam_splitter(0.5).unwrap();
    for (r, t0) in [(1.3, 0.75), (0.6, 0.3), (-1.0, 0.9)] {
        let loss = attenuation(t0).unwrap();
        let before = loss
            .apply_to_mode(
                &loss.apply_to_mode(&CovMatrix::tmsv(r).unwrap(), 0).unwrap(),
                1,
            )
            .unwrap()
            .transform(&bs)
            .unwrap();
        let split = CovMatrix::tmsv(r).unwrap().transform(&bs).unwrap();
        let after = loss
            .apply_to_mode(&loss.apply_to_mode(&split, 0).unwrap(), 1)
            .unwrap();
        assert!(before.max_abs_diff(&after) < 1e-12);
    }
}

#[test]
fn ancilla_mixing_circuit_is_conjugated_attenuation() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let v = random_cov(&mut rng, 1);
        for (eta, s) in [(0.2, 1.3), (0.7, -0.5), (0.95, 2.0)] {
            let circuit = channel::ancilla_squeezer_step(eta, &v, s).unwrap();
            let half = channel::effective_squeeze(s);
            let algebraic = compose(
                &squeeze_channel(half).unwrap(),
                &compose(&attenuation(eta).unwrap(), &squeeze_channel(-half).unwrap()).unwrap(),
            )
            .unwrap()
            .apply(&v)
            .unwrap();
            assert!(circuit.max_abs_diff(&algebraic) < 1e-12);
        }
    }
}

#[test]
fn dilation_recovers_attenuation_channel() {
    for eta in [0.0, 0.3, 0.5, 1.0] {
        let bs = SymplecticTransform::beam_splitter(eta).unwrap();
        let built = GaussianChannel::from_dilation(&bs, &CovMatrix::vacuum()).unwrap();
        assert!(built.max_abs_diff(&attenuation(eta).unwrap()) < 1e-12);
    }
}

#[test]
fn phi2_is_a_single_attenuation() {
    for eta in [0.1, 0.45, 0.9] {
        let twice = phi2(eta).unwrap();
        assert!(twice.max_abs_diff(&attenuation(eta * eta).unwrap()) < 1e-14);
    }
}

#[test]
fn phi1_at_unit_transmissivity_is_squeezing() {
    let p = phi1(1.0, 0.4).unwrap();
    assert!(p.max_abs_diff(&squeeze_channel(0.4).unwrap()) < 1e-14);
}

#[test]
fn detection_loss_degrades_entanglement_monotonically() {
    let base = ExperimentConfig::from_r_prime(0.65, 0.5, Variant::Phi2);
    let mut last = f64::NEG_INFINITY;
    for tm in [1.0, 0.95, 0.9, 0.8, 0.6, 0.4] {
        let w = nu2(&base.with_losses(1.0, tm));
        assert!(w > last, "tm = {tm}: {w} <= {last}");
        last = w;
    }
}

#[test]
fn source_loss_degrades_probe_entanglement_monotonically() {
    let mut last = f64::NEG_INFINITY;
    for t0 in [1.0, 0.9, 0.75, 0.5, 0.25] {
        let probe = prepare_resources(1.3, t0).unwrap().probe;
        let w = nu_squared_closed_form(&probe).unwrap().nu_squared;
        assert!(w > last);
        last = w;
    }
}

proptest! {
    #[test]
    fn every_stage_stays_physical(
        r in -2.0f64..2.0,
        eta in 0.0f64..=1.0,
        t0 in 0.0f64..=1.0,
        tm in 0.0f64..=1.0,
        phi1_variant in any::<bool>(),
    ) {
        let variant = if phi1_variant { Variant::Phi1 } else { Variant::Phi2 };
        let res = prepare_resources(r, t0).unwrap();
        prop_assert!(res.ancilla.is_physical());
        prop_assert!(res.probe.is_physical());
        let cfg = ExperimentConfig::ideal(r, eta, variant).with_losses(t0, tm);
        let out = output_state(&cfg).unwrap();
        prop_assert!(out.is_physical());
        let w = nu_squared_closed_form(&out).unwrap().nu_squared;
        prop_assert!(w > 0.0 && w.is_finite());
    }

    #[test]
    fn sign_of_squeeze_does_not_change_witness(r in 0.05f64..2.0, eta in 0.0f64..=1.0) {
        let a = nu2(&ExperimentConfig::ideal(r, eta, Variant::Phi1));
        let b = nu2(&ExperimentConfig::ideal(-r, eta, Variant::Phi1));
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn symplectic_spectrum_is_invariant(seed in any::<u64>(), modes in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_cov(&mut rng, modes);
        let s = random_symplectic(&mut rng, modes);
        let moved = v.transform(&s).unwrap();
        let a = v.symplectic_spectrum().unwrap();
        let b = moved.symplectic_spectrum().unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8 * x.max(1.0), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn composed_channels_act_sequentially(seed in any::<u64>(), eta in 0.0f64..=1.0, r in -1.5f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_cov(&mut rng, 1);
        let loss = attenuation(eta).unwrap();
        let sq = squeeze_channel(r).unwrap();
        let stepwise = loss.apply(&sq.apply(&loss.apply(&v).unwrap()).unwrap()).unwrap();
        let at_once = phi1(eta, r).unwrap().apply(&v).unwrap();
        prop_assert!(stepwise.max_abs_diff(&at_once) < 1e-10);
    }
}
