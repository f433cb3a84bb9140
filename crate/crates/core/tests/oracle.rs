use std::f64::consts::PI;
use std::sync::Arc;

use atom_membrane::dynamics::propagate_const;
use atom_membrane::gaussian::{make_state, ModePrep, StateSpec};
use atom_membrane::metrics::transfer_fidelity;
use atom_membrane::oracle::{compare_swap, propagate_density, DensityMatrix, ModeState, Superoperator, Truncation};
use atom_membrane::protocols::{scenario_model, scenario_rates, Scenario, ScenarioConfig};

#[test]
fn coherent_swap_moments_match_gaussian_engine() {
    let cmp = compare_swap(
        &ScenarioConfig::new(Scenario::SwapCoherent, 0.05),
        Truncation::TotalExcitation(25),
        0.1,
    )
    .unwrap();
    assert!(cmp.moment_error < 1e-6, "moment error {}", cmp.moment_error);
    assert!(cmp.wigner_error < 1e-3);
    assert!(cmp.edge_population < 1e-6);
}

#[test]
fn truncation_converges() {
    let mut cfg = ScenarioConfig::new(Scenario::SwapCoherent, 0.05);
    cfg.beta.re = 0.5;
    let rates = scenario_rates(&cfg).unwrap();
    let model = scenario_model(&cfg, &rates).unwrap();
    let run = |levels: usize| {
        let sup = Superoperator::from_model(&model, Truncation::TotalExcitation(levels)).unwrap();
        let rho0 = DensityMatrix::product(sup.basis.clone(), ModeState::Fock(0), ModeState::Coherent { re: 0.5, im: 0.0 }).unwrap();
        let rho = propagate_density(&rho0, &sup, 10.0, 0.1).unwrap();
        let (d, cov) = rho.moments();
        (d, cov, rho.membrane_wigner_origin())
    };
    let (d1, c1, w1) = run(15);
    let (d2, c2, w2) = run(30);
    assert!((&d1 - &d2).amax() < 1e-7);
    assert!((&c1 - &c2).amax() < 1e-7);
    assert!((w1 - w2).abs() < 1e-7);
}

#[test]
fn transfer_fidelity_equals_overlap_without_displacement() {
    // Atom in vacuum, warm membrane: the fidelity reduces to the vacuum overlap of ρ_m.
    let mut cfg = ScenarioConfig::new(Scenario::SwapCoherent, 0.05);
    cfg.beta.re = 0.0;
    cfg.membrane_n0 = 0.3;
    let rates = scenario_rates(&cfg).unwrap();
    let model = scenario_model(&cfg, &rates).unwrap();
    let t = PI / (2.0 * cfg.g_over_omega);

    let state0 = make_state(
        &[
            StateSpec::new(0, ModePrep::Thermal { n_bar: 0.3 }),
            StateSpec::new(1, ModePrep::Coherent { re: 0.0, im: 0.0 }),
        ],
        2,
    )
    .unwrap();
    let state = propagate_const(&state0, &model.generator().unwrap(), t).unwrap();
    let fidelity = transfer_fidelity(&state.mode_cov(0), &state0.mode_cov(1)).unwrap();

    let sup = Superoperator::from_model(&model, Truncation::TotalExcitation(25)).unwrap();
    let rho0 = DensityMatrix::product(Arc::clone(&sup.basis), ModeState::Thermal { n_bar: 0.3 }, ModeState::Fock(0)).unwrap();
    let rho = propagate_density(&rho0, &sup, t, 0.2).unwrap();
    let overlap = rho.membrane_overlap(ModeState::Coherent { re: 0.0, im: 0.0 }).unwrap();
    assert!((fidelity - overlap).abs() < 1e-4, "{fidelity} vs {overlap}");
    assert!((rho.trace().re - 1.0).abs() < 1e-10);
    assert!(rho.min_eigenvalue() > -1e-8);
}

#[test]
fn unsupported_scenarios_rejected() {
    let cfg = ScenarioConfig::new(Scenario::SwapSqueezed, 0.05);
    assert!(compare_swap(&cfg, Truncation::TotalExcitation(10), 0.1).is_err());
}
