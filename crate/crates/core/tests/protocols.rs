use std::f64::consts::PI;

use atom_membrane::metrics::fock_negativity_rwa;
use atom_membrane::protocols::{run_scenario, Scenario, ScenarioConfig};
use proptest::prelude::*;

fn run(scenario: Scenario, f: f64) -> atom_membrane::protocols::ScenarioResult {
    run_scenario(&ScenarioConfig::new(scenario, f)).unwrap()
}

#[test]
fn coherent_swap_at_low_noise() {
    let res = run(Scenario::SwapCoherent, 0.01);
    assert!((res.summary["F_at_ts"] - 1.0 / (1.0 + 0.01 * PI)).abs() < 0.02);
    assert_eq!(res.summary["fidelity_at_ts"], res.summary["F_at_ts"]);
    assert!((res.t_swap - PI / (2.0 * 0.034)).abs() < 1e-12);
}

#[test]
fn squeezed_and_fock_examples() {
    let s = run(Scenario::SwapSqueezed, 0.05).summary["s_at_ts"];
    assert!((s - ((-2.0f64).exp() + 0.1 * PI)).abs() < 0.03, "s = {s}");
    let nw = run(Scenario::SwapFock, 0.05).summary["N_w_at_ts"];
    assert!((nw + 0.397).abs() < 0.03, "N_w = {nw}");
}

#[test]
fn noiseless_swaps_reach_their_endpoints() {
    assert!(run(Scenario::SwapCoherent, 0.0).summary["F_at_ts"] >= 0.995);
    let s = run(Scenario::SwapSqueezed, 0.0).summary["s_at_ts"];
    assert!((s - (-2.0f64).exp()).abs() < 0.01, "s = {s}");
    assert!(run(Scenario::SwapFock, 0.0).summary["N_w_at_ts"] < -0.99);
}

#[test]
fn second_swap_is_degraded() {
    for f in [0.01, 0.05, 0.1] {
        let res = run(Scenario::SwapCoherent, f);
        assert!(res.summary["F_final"] < res.summary["F_at_ts"], "f = {f}");
        // The atom gets its state back at 2t_s, with more noise.
        let n_at = res.series("n_at").unwrap();
        assert!(n_at.last().unwrap() > &n_at[0]);
    }
}

#[test]
fn rwa_overlay_tracks_numerics() {
    let res = run(Scenario::SwapFock, 0.05);
    let (num, rwa) = (res.series("N_w").unwrap(), res.overlays[0].values.as_slice());
    let gap = num.iter().zip(rwa).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 0.05, "gap = {gap}");
    let g = 0.034;
    let t = res.times[res.times.len() / 3];
    let idx = res.times.len() / 3;
    assert!((rwa[idx] - fock_negativity_rwa(t, g, 0.05 * g, 0.05 * g, 0.05 * g).unwrap()).abs() < 1e-12);
}

#[test]
fn noiseless_entanglement_grows() {
    let res = run(Scenario::Entangle, 0.0);
    let e = res.series("E_N").unwrap();
    // Average over windows longer than the modulation period to remove the ripple.
    let window = 50;
    let means: Vec<f64> = e.chunks(window).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    assert!(means.windows(2).all(|w| w[1] >= w[0]), "{means:?}");
    assert!(res.summary["E_N_final"] > 1.5);
}

#[test]
fn weak_noise_entanglement_window() {
    let res = run(Scenario::Entangle, 0.01);
    let e = res.series("E_N").unwrap();
    let g = res.g;
    for (t, v) in res.times.iter().zip(e) {
        if g * t >= 1.0 {
            assert!(*v > 0.0, "E_N = {v} at Gt = {}", g * t);
        }
    }
    assert!(res.summary["n_at_max"] < 10.0);
}

#[test]
fn csv_columns_are_fixed() {
    let res = run(Scenario::SwapSqueezed, 0.05);
    let mut buf = Vec::new();
    res.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,Gt,S_dB,n_at,n_m,s,s_rwa");
    assert_eq!(text.lines().count(), res.times.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn swaps_stay_physical(f in 0.0f64..0.2, n0 in 0.0f64..3.0, s0 in 0.1f64..1.0, which in 0usize..3) {
        let scenario = [Scenario::SwapCoherent, Scenario::SwapSqueezed, Scenario::SwapFock][which];
        let mut cfg = ScenarioConfig::new(scenario, f);
        cfg.membrane_n0 = n0;
        cfg.s0 = s0;
        cfg.samples_per_unit = 50;
        let res = run_scenario(&cfg).unwrap();
        prop_assert!(res.summary["min_symplectic_eigenvalue"] >= 0.5 - 1e-7);
        prop_assert!(res.series("n_m").unwrap().iter().all(|&n| n >= -1e-12));
    }
}
