"""Smoke test for the nmkerr_py extension.

Build first:
    cargo build --release -p nmkerr-py --features extension-module
then run:
    python3 python/smoke_test.py
"""

import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    names = ["libnmkerr_py.so", "libnmkerr_py.dylib", "nmkerr_py.dll"]
    for profile in ["release", "debug"]:
        for name in names:
            lib = ROOT / "target" / profile / name
            if lib.exists():
                spec = importlib.util.spec_from_file_location("nmkerr_py", lib)
                mod = importlib.util.module_from_spec(spec)
                spec.loader.exec_module(mod)
                return mod
    sys.exit("extension not built; run cargo build --release -p nmkerr-py --features extension-module")


def main():
    nk = load()
    s = nk.System.fw(1e-4, 1e-2, 1.01, 1e-10)

    k = s.loss(1.01)
    assert abs(k) < 1e-15, k
    assert abs(s.loss(1.0).real - 0.5e-4) < 1e-12

    flux = s.pump_for_n(0.99, 2e8)
    roots = s.steady_roots(0.99, flux)
    assert len(roots) == 1 and abs(roots[0]["n"] / 2e8 - 1) < 1e-9, roots
    assert roots[0]["stability"] == "stable"

    assert s.classify(1.0, 5e7)["class"] == "mi"
    assert s.classify(1.0, 1e9)["class"] == "stable"

    exact = s.noise(1.013, 2e8)
    adiabatic = s.noise(1.013, 2e8, method="adiabatic")
    assert 0 < exact["var_x"] < 1, exact
    assert abs(exact["var_x"] / adiabatic["var_x"] - 1) < 0.01, (exact, adiabatic)
    try:
        s.noise(1.0, 5e7)
        raise AssertionError("noise at an MI point should fail")
    except RuntimeError:
        pass

    t = s.simulate_two_mode(0.99, flux, 3e5, 1.0)
    assert abs(t.n[-1] / 2e8 - 1) < 1e-4
    d = nk.diagnose_pulsing(t, 0.5)
    assert not d["is_pulsing"], d

    m = nk.System.markov(1e-3, 0.0)
    t = m.simulate_split_step(1.0005, 1.0, 2e4, 0.5)
    expect = 2e-3 / (1e-6 + 0.0005**2)
    assert abs(t.n[-1] / expect - 1) < 1e-4

    f = nk.System.from_json(
        '{"model": "fano", "units": "absolute", "omega_a": 1.03e15, "kappa": 1.03e11,'
        ' "beta": 1.03e11, "r_d": 0.7, "sigma": "odd", "length": 5e-6}'
    )
    assert math.isfinite(f.loss(1.0).real) and f.loss(1.0).real >= 0
    try:
        nk.System.from_json('{"model": "fw"}')
        raise AssertionError("incomplete model should fail")
    except ValueError:
        pass

    print(f"nmkerr_py {nk.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
