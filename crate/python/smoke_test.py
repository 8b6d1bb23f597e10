"""Smoke test of the gpvqg_py extension.

Build and install it first:

    pip install maturin
    maturin develop -m crates/py/Cargo.toml --release

then run `python python/smoke_test.py`.
"""

import json
import tempfile

import numpy as np

import gpvqg_py as g


def field(state, name):
    shape, values = state.arrays()[name]
    return np.asarray(values).reshape(shape)


def main():
    data = json.dumps({"kind": "random_seeded", "seed": 1, "bandwidth": 3, "amplitude": 0.1})
    s = g.State.initial(16, 16, 16, 0.1, data)
    print(s)

    # GPV -> primitive -> GPV is the identity on valid states
    back = s.to("primitive").to("gpv")
    err = np.abs(field(back, "phi") - field(s, "phi")).max()
    assert err < 1e-9 * np.abs(field(s, "phi")).max(), err

    d0 = s.diagnostics()
    s.step(s.stable_dt(), 10)
    d1 = s.diagnostics()
    drift = abs(d1["l2_energy"] / d0["l2_energy"] - 1)
    print(f"t = {s.t:.4f}, L2 energy drift {drift:.2e}, E_frak {d0['E_frak']:.4e} -> {d1['E_frak']:.4e}")
    assert drift < 1e-6

    with tempfile.TemporaryDirectory() as d:
        s.save(f"{d}/s.snap")
        header = json.loads(g.inspect(f"{d}/s.snap"))
        assert header["kind"] == "gpv" and header["t"] == s.t
        r = g.State.load(f"{d}/s.snap")
        assert np.array_equal(field(r, "psi_x"), field(s, "psi_x"))

        cfg = {
            "grid": {"nx": 12, "ny": 12, "nz": 12, "h": 1.0},
            "eps": 0.1,
            "t_end": 0.1,
            "initial_data": {"kind": "single_mode", "k": [1, 1], "m": 1, "amplitude": 0.1},
            "outputs": {"out_dir": f"{d}/linear"},
        }
        report = json.loads(g.linear_check(json.dumps(cfg)))
        print(f"linear check: Φ drift {report['phi_drift']:.2e}, Ψ₊ drift {report['psi_plus_drift']:.2e}")
        assert report["phi_drift"] < 1e-12 and report["psi_plus_drift"] < 1e-12

    print("ok")


if __name__ == "__main__":
    main()
