"""Smoke test for the `kramers` extension module.

Build and install first:

    pip install maturin
    maturin develop --release -m crates/py/Cargo.toml

then run `python python/smoke_test.py`.
"""

import json
import math

import kramers


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    basis = kramers.Basis(1.0, 8)
    assert basis.modes == 8
    assert close(basis.eigenvalues()[0], math.pi**2, 1e-12)

    # transform round trip
    coeffs = [0.5, -0.25, 0.0, 0.1, 0.0, 0.0, 0.02, 0.0]
    back = basis.from_physical(basis.to_physical(coeffs))
    assert max(abs(a - b) for a, b in zip(coeffs, back)) < 1e-12
    assert close(basis.sobolev_norm(coeffs, 0.0), math.sqrt(sum(c * c for c in coeffs)), 1e-12)

    q = kramers.default_spectrum(8)
    assert close(q[1], 2.0**-4, 1e-15)

    noise = kramers.NoisePath(q, 1.0, 1024, 7)
    again = kramers.NoisePath(q, 1.0, 1024, 7)
    assert noise.terminal() == again.terminal()
    coarse = noise.coarsen(4)
    assert coarse.steps == 256
    assert close(coarse.value(0, 256), noise.value(0, 1024), 0.0)

    u0 = [0.5, 0.25] + [0.0] * 6
    heat = kramers.simulate("heat", basis, noise, 0.01, 0.0, u0, stride=64)
    full = kramers.simulate("full", basis, noise, 0.01, 0.0, u0, stride=64)
    assert len(heat["t"]) == len(full["t"]) == 17
    err = kramers.sup_l2_error(full["u"], heat["u"])
    assert 0.0 < err < 1.0, err

    split = kramers.simulate("split", basis, noise, 0.01, 0.5, u0, stride=1)
    assert split["reconstruction_defect"] < 1e-2

    try:
        kramers.simulate("heat", basis, noise, 0.01, 1.0, u0)
    except ValueError as e:
        assert "deferred" in str(e)
    else:
        raise AssertionError("alpha = 1 accepted")

    fit = kramers.rate_fit([(0.1, 0.3), (0.01, 0.03), (0.001, 0.003)])
    assert close(fit["slope"], 1.0, 1e-12)

    checks = kramers.oracle_suite()
    assert checks and all(c[3] for c in checks)

    config = """
kind = "full_vs_heat"
[basis]
modes = 4
[model]
alpha = 0.0
nu = [0.1, 0.01, 0.001]
[time]
steps = 256
samples = 4
[ensemble]
replicas = 2
seed = 3
"""
    summary = json.loads(kramers.run_experiment(config))
    assert summary["kind"] == "full_vs_heat"
    assert any(r["experiment"] == "full_vs_heat" for r in summary["rates"])

    print(f"kramers {kramers.__version__}: smoke test passed ({len(checks)} oracle checks, sup error {err:.4f})")


if __name__ == "__main__":
    main()
