"""Smoke test for the pyadalab extension module.

Build and install first:
    pip install maturin && maturin develop -m crates/python/Cargo.toml
or
    maturin build -m crates/python/Cargo.toml && pip install target/wheels/pyadalab-*.whl
"""

import math

import pyadalab as ada

CONFIG = {
    "distribution": {"kind": "uniform_box", "dim": 2},
    "n": 300,
    "t": 50,
    "analyst": {
        "generator": "random_linear",
        "d": 3,
        "d_q": 2,
        "lambda": 0.5,
        "l": 1.0,
        "space": {"kind": "grid", "resolution": 0.001},
    },
    "mechanism": {"kind": "rounded_empirical", "eps": 0.1},
    "seeds": [0, 1],
    "sweep": {"t": [10, 50]},
}


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    # accountant
    alpha, beta = ada.gaussian_dp(0.1, 100, 1, 1e-5)
    assert close(alpha, math.sqrt(2 * math.log(1.25e5)) / 10), alpha
    alpha, beta = ada.strong_compose(4, 0.1, 0.001, 0.01)
    assert close(alpha, math.sqrt(8 * math.log(100)) * 0.1 + 0.08) and close(beta, 0.014)
    assert ada.history_dp(0.1, 0.001, 4, 0.01) == (alpha, beta)
    assert ada.depth_progressive(0.5, 1.0, 1.0, 0.01)[1] == 9
    assert ada.depth_conservative_a({"kind": "exponential", "eta0": 1.0, "rate": 0.5}, 0.01, 1.0)[1] == 7
    assert ada.depth_conservative_b(0.5, 10.0, 0.01)[1] == 11
    assert ada.depth_continuous(0.5, 10.0, 4, 1.0, 0.1)[1] == 8
    assert ada.plan_samples(0.1, 0.05, 9, 1, 100) == 644
    assert close(ada.sigma_for(0.1, 0.1, 1, 1), 0.1 / math.sqrt(2 * math.log(200)))

    # analysts and mechanisms
    spec = {
        "family": "linear",
        "a": {"rows": 1, "cols": 1, "data": [0.5]},
        "b": {"rows": 1, "cols": 1, "data": [1.0]},
        "queries": {"kind": "constant", "components": [{"kind": "clamped_affine", "coord": 0, "offset": 0.0, "slope": 1.0}]},
        "space": {"kind": "continuous"},
    }
    an = ada.Analyst(spec)
    h = [0.0]
    for _ in range(3):
        h = an.transition(1, h, [0.5])
    assert close(h[0], 0.875), h
    assert an.verify(200, 0)["passed"]

    mech = ada.Mechanism({"kind": "clamped_gaussian", "sigma": 0.05}, seed=3)
    answer, noise = mech.answer([0.5, 0.99], 100)
    assert len(noise) == 2 and all(0.0 <= a <= 1.0 for a in answer)

    # harness
    transcript, result = ada.run_session(CONFIG, 1)
    assert result["t"] == 50 and len(result["per_round_error"]) == 50
    assert ada.config_hash(CONFIG) == result["config_hash"]
    rows = ada.scaling_sweep(CONFIG)
    assert len(rows) == 4 and {r["t"] for r in rows} == {10, 50}

    gen = ada.Analyst.from_config(CONFIG, 0)
    report = gen.identity_check({"kind": "rounded_empirical", "eps": 0.1}, CONFIG["distribution"], 300, 60, [0, 1])
    print(f"identity at k={report['k']}: holds={report['holds']}, mismatch rate {report['mismatch_rate']:.3f}")

    assert ada.counterexample_demo()["exact"]
    assert ada.interleaving_demo(0.9, 6, 10)["exact"]
    assert not ada.interleaving_demo(0.9, 6, 10, grid_places=3)["exact"]
    attack = ada.overfit_attack(400, 200, 0)
    assert attack["final_error"] > 0.05

    try:
        ada.depth_progressive(1.5, 1.0, 1.0, 0.01)
    except ada.AdalabError:
        pass
    else:
        raise AssertionError("invalid lambda accepted")

    print("pyadalab smoke test passed")


if __name__ == "__main__":
    main()
