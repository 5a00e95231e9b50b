"""Smoke test for the Python bindings.

Build and install first:

    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/collision_lab-*.whl
    python python/smoke_test.py
"""

import json
import math
from fractions import Fraction as F

import collision_lab as cl


def main():
    c = cl.Configuration([2, 2])
    assert (c.n, c.m, c.sizes) == (4, 2, [2, 2])
    assert c.admits_collision(2) and not c.admits_collision(3)

    # P(T > 2) and E(T) for the two-pair configuration, r = 2.
    for mode, tail, mean in [("K1", F(2, 3), F(8, 3)), ("K2", F(3, 4), F(11, 3)), ("R", F(1, 2), F(5, 2))]:
        assert cl.survival(c, 2, mode, 2) == tail, mode
        e = cl.expectation(c, 2, mode)
        assert e["exact"] == mean and math.isclose(e["value"], float(mean)), e
    assert cl.survival_table(c, 2, "K1", 4) == [1, 1, F(2, 3), 0, 0]
    assert 1 - cl.prob_true_collision_first(c, 2) == F(1, 2)

    birthday = cl.expectation(cl.Configuration.classical(365), 3, "R")
    assert abs(birthday["value"] - 88.73891) < 5e-5, birthday
    assert abs(cl.classical_series(365, 3, 3) - 88.72504) < 5e-5

    b = cl.bounds(c, 2, "R")
    assert b["lower"] <= 2.5 <= b["upper_matched"], b

    sim = cl.simulate(c, 2, "R", trials=20_000, seed=7)
    assert sim == cl.simulate(c, 2, "R", trials=20_000, seed=7)
    assert abs(sim["mean"] - 2.5) < 4 * sim["stderr"], sim

    two_stage = cl.simulate(cl.MultinomialModel(4, ["1/2", "1/2"]), 2, "K2", trials=5_000, seed=1)
    assert two_stage["trials"] + two_stage["no_collision"] == 5_000

    mean, var = cl.mapping_moments(4, 2, 2)
    assert (mean, var) == (F(3), F(3, 2)), (mean, var)
    assert cl.measures(c)["t_chi2"] == "0"

    report = json.loads(cl.run_request('{"command": "expect", "config": {"sizes": [2, 2]}, "modes": ["K2"]}'))
    assert report["result"]["expectations"][0]["value"]["exact"] == "11/3", report

    for bad in (lambda: cl.Configuration([]), lambda: cl.survival(c, 1, "R", 2), lambda: cl.survival(c, 2, "X", 2)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
