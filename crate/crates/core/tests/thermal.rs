use std::f64::consts::PI;

use atom_membrane::thermal::{lumped_temperature_rise, steady_state_heat_map, HeatConfig};
use proptest::prelude::*;

fn small() -> HeatConfig {
    HeatConfig {
        grid_cells: 64,
        ..Default::default()
    }
}

#[test]
fn log_profile_between_radii() {
    let cfg = HeatConfig::default();
    let map = steady_state_heat_map(&cfg).unwrap();
    let sheet = cfg.k_th * cfg.thickness;
    for (r1, r2) in [(50e-6f64, 200e-6f64), (30e-6, 100e-6), (100e-6, 250e-6)] {
        let expected = map.absorbed_power / (2.0 * PI * sheet) * (r2 / r1).ln();
        for (x, y) in [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8)] {
            let got = map.interpolate(r1 * x, r1 * y) - map.interpolate(r2 * x, r2 * y);
            assert!((got / expected - 1.0).abs() < 0.02, "r = ({r1}, {r2}): {got} vs {expected}");
        }
    }
}

#[test]
fn maximum_principle_and_symmetry() {
    let map = steady_state_heat_map(&HeatConfig::default()).unwrap();
    let n = map.nodes.len();
    assert_eq!(map.at(n / 2, n / 2), map.t_peak);
    assert!(map.temperature.iter().all(|&t| t >= 2.0));
    for k in 0..n {
        assert_eq!(map.at(k, 0), 2.0);
        assert_eq!(map.at(n - 1, k), 2.0);
    }
    let (i, j) = (n / 2 + 7, n / 2 - 3);
    let a = map.at(i, j);
    assert!((a - map.at(j, i)).abs() < 1e-9 * a);
    assert!((a - map.at(n - 1 - i, j)).abs() < 1e-9 * a);
}

#[test]
fn absorbed_power_from_lumped_estimate() {
    let cfg = HeatConfig::default();
    let map = steady_state_heat_map(&cfg).unwrap();
    let dt = lumped_temperature_rise(cfg.power, cfg.finesse, cfg.kb_kappa_th).unwrap();
    assert_eq!(map.delta_t_lumped, dt);
    assert!((map.absorbed_power - dt * cfg.kb_kappa_th).abs() < 1e-20);
    assert!(map.residual < 1e-10);
}

#[test]
fn csv_lists_every_node() {
    let map = steady_state_heat_map(&small()).unwrap();
    let mut buf = Vec::new();
    map.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,T"));
    assert_eq!(text.lines().count(), 65 * 65 + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn rise_is_linear_in_power(scale in 0.1f64..10.0) {
        let base = small();
        let scaled = HeatConfig { power: base.power * scale, ..base.clone() };
        let (a, b) = (steady_state_heat_map(&base).unwrap(), steady_state_heat_map(&scaled).unwrap());
        let ratio = (b.t_peak - base.t0) / (a.t_peak - base.t0);
        prop_assert!((ratio / scale - 1.0).abs() < 1e-8);
    }
}
