use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &std::ffi::CStr) {
    Python::initialize();
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(nmkerr_py::nmkerr_py)(py);
        let globals = PyDict::new(py);
        globals.set_item("nk", module).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.print(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn steady_state_and_stability() {
    run(c"
s = nk.System.fw(1e-4, 1e-2, 1.01, 1e-10)
flux = s.pump_for_n(0.99, 2e8)
roots = s.steady_roots(0.99, flux)
assert len(roots) == 1 and abs(roots[0]['n'] / 2e8 - 1) < 1e-9, roots
assert roots[0]['stability'] == 'stable'
t = s.simulate_two_mode(0.99, flux, 3e5, 1.0)
assert abs(t.alpha[-1] / roots[0]['alpha'] - 1) < 1e-4
r = s.classify(1.0, 5e7)
assert r['class'] == 'mi' and r['mi_gain'] > 0 and len(r['eigenvalues']) == 4
");
}

#[test]
fn errors_map_to_python_exceptions() {
    run(c"
s = nk.System.fw(1e-4, 1e-2, 1.01, 1e-10)
for call, exc in [(lambda: s.noise(1.0, 5e7), RuntimeError),
                  (lambda: s.noise(1.0, 1e6, method='bogus'), ValueError),
                  (lambda: nk.System.fano(1e-4, 0.5, 'sideways', 30.0, 0.0), ValueError),
                  (lambda: nk.System.from_json('{}'), ValueError)]:
    try:
        call()
    except exc:
        pass
    else:
        raise AssertionError('no error')
");
}

#[test]
fn trajectory_round_trip() {
    run(c"
m = nk.System.markov(1e-3, 0.0)
t = m.simulate_split_step(1.0005, 1.0, 2e4, 0.5)
assert len(t) == len(t.n) == len(t.alpha) == len(t.times)
assert abs(t.n[-1] / (2e-3 / (1e-6 + 0.0005**2)) - 1) < 1e-4
assert abs(abs(t.alpha[-1])**2 - t.n[-1]) < 1e-9 * t.n[-1]

s = nk.System.fw(1e-4, 1e-2, 1.01, 1e-10)
t = s.simulate_two_mode(0.99, s.pump_for_n(0.99, 2e8), 3e5, 1.0)
d = nk.diagnose_pulsing(t)
assert not d['is_pulsing'] and abs(d['mean_n'] / 2e8 - 1) < 1e-3, d
");
}
