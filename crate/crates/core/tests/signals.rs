mod common;

use common::*;
use proptest::prelude::*;
use qswitch_core::plant::{
    generate_adt_signal, verify_adt, DwellBound, ModeId, SignalGenerator, Switch, SwitchingSignal,
};

fn generator(seed: u64, n0: f64, tau_a: f64, grid: Option<f64>) -> SignalGenerator {
    SignalGenerator {
        bound: DwellBound::new(n0, tau_a).unwrap(),
        horizon: 200.0,
        seed,
        initial_mode: None,
        grid,
    }
}

#[test]
fn generated_signals_pass_adt_over_seed_sweep() {
    let modes = [ModeId(1), ModeId(2), ModeId(3)];
    for seed in 0..100 {
        for (n0, tau_a, grid) in [(1.0, 2.5, None), (2.0, 0.7, Some(1e-3)), (3.0, 5.0, Some(0.01))] {
            let spec = generator(seed, n0, tau_a, grid);
            let sig = generate_adt_signal(&modes, &spec).unwrap();
            verify_adt(&sig, &spec.bound, spec.horizon)
                .unwrap_or_else(|v| panic!("seed {seed}: {v:?}"));
            if let Some(h) = grid {
                assert_eq!(sig.snapped_to_grid(h).unwrap(), sig);
            }
        }
    }
}

#[test]
fn generator_is_deterministic() {
    let spec = generator(42, 1.0, 2.0, Some(1e-3));
    let a = generate_adt_signal(&[P1, P2], &spec).unwrap();
    let b = generate_adt_signal(&[P1, P2], &spec).unwrap();
    assert_eq!(a, b);
    assert!(!a.switches().is_empty());
}

#[test]
fn example_signal_dwell_limits() {
    let sig = example_signal();
    assert!(verify_adt(&sig, &DwellBound::new(1.0, 3.5).unwrap(), 40.0).is_ok());
    assert!(verify_adt(&sig, &DwellBound::new(1.0, 3.6).unwrap(), 40.0).is_err());
    assert!(verify_adt(&sig, &DwellBound::new(2.0, 16.5).unwrap(), 40.0).is_ok());
    assert!(verify_adt(&sig, &DwellBound::new(2.0, 7.0).unwrap(), 40.0).is_ok());
    assert!(verify_adt(&sig, &DwellBound::new(2.0, 17.0).unwrap(), 40.0).is_err());
}

fn signal_strategy() -> impl Strategy<Value = SwitchingSignal> {
    prop::collection::vec(0.01f64..3.0, 0..20).prop_map(|gaps| {
        let mut t = 0.0;
        let mut mode = 1;
        let switches = gaps
            .into_iter()
            .map(|g| {
                t += g;
                mode = 3 - mode;
                Switch { time: t, mode: ModeId(mode) }
            })
            .collect();
        SwitchingSignal::new(ModeId(1), switches).unwrap()
    })
}

proptest! {
    #[test]
    fn switch_count_is_additive(sig in signal_strategy(), a in 0.0f64..60.0, b in 0.0f64..60.0, c in 0.0f64..60.0) {
        let mut pts = [a, b, c];
        pts.sort_by(f64::total_cmp);
        let [s, r, t] = pts;
        prop_assume!(s < r && r < t);
        let whole = sig.count_switches(s, t).unwrap();
        let parts = sig.count_switches(s, r).unwrap() + sig.count_switches(r, t).unwrap();
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn mode_is_right_continuous(sig in signal_strategy()) {
        for sw in sig.switches() {
            prop_assert_eq!(sig.mode_at(sw.time), sw.mode);
        }
    }
}
