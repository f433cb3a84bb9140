use atom_membrane_py::atom_membrane_py;
use pyo3::ffi::c_str;
use pyo3::prelude::*;

#[test]
fn module_round_trip() {
    pyo3::append_to_inittab!(atom_membrane_py);
    Python::attach(|py| {
        py.run(
            c_str!(
                r#"
import math
import atom_membrane_py as am

res = am.run_scenario('{"scenario": "swap_coherent", "f": 0.1}')
assert abs(res.summary["F_at_ts"] - 1 / (1 + 0.1 * math.pi)) < 0.02
assert "n_at" in res.series_names()
assert abs(am.lumped_temperature_rise(850e-6, 2e5, 10e-9) - 2.6704) < 1e-3
assert am.GaussianState.vacuum(1).symplectic_eigenvalues() == [0.5]
try:
    am.run_scenario({"scenario": "swap_coherent", "f": -1.0})
    raise AssertionError("negative f accepted")
except ValueError as e:
    assert "f" in str(e)
"#
            ),
            None,
            None,
        )
        .unwrap();
    });
}
