"""Smoke test for the island_evo extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import json
import math

import island_evo as ie


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    fork = ie.FitnessSpec.fork(6, 2)
    assert fork.n == 6
    assert fork.evaluate(fork.optimum) == fork.optimum_value
    valley, value = fork.valley
    assert fork.evaluate(valley) == value == fork.optimum_value - 1
    try:
        fork.evaluate("0101")
    except ValueError:
        pass
    else:
        raise AssertionError("short string accepted")

    # closed form against the exact chain
    lo = ie.FitnessSpec.leading_ones(5)
    assert close(ie.exact_lo_runtime(5), ie.expected_hitting_time(lo))

    p = ie.hitting_probability(ie.FitnessSpec.fork(8, 2))
    assert close(p, 0.5), p

    spec = ie.FitnessSpec.from_json('{"variant": "onemax", "n": 10}')
    rec = ie.island_run(spec, 4, "ring", tau=5, seed=7)
    assert rec["satisfied"] and not rec["trapped"]
    assert rec["evaluations"] == 4 * rec["rounds"]
    assert rec == ie.island_run(spec, 4, "ring", tau=5, seed=7)

    run = ie.ea_run(spec, seed=1)
    assert run["hit"] and run["final"] == spec.optimum

    summary = ie.monte_carlo_runtime(spec, 2, "complete", 200, 3, tau=4)
    assert summary["completed"] == 200

    config = json.dumps([{
        "name": "lo", "algorithm": "single_ea", "spec": {"variant": "leadingones"},
        "n_grid": [8, 16, 32], "replicates": 200, "master_seed": 5,
    }])
    csv = ie.simulate(config)
    assert csv.splitlines()[0].startswith("schema_version,scenario,algorithm")
    assert csv == ie.simulate(config)
    slope, se, r2 = ie.fit_exponent(csv, "lo")
    assert 1.7 < slope < 2.3, slope

    lower, exact, upper = ie.geometric_min_bounds(100.0, 4)
    assert lower <= exact <= upper
    assert math.isfinite(ie.choose_sum_div(20))

    report = json.loads(ie.verify(only=[8, 9]))
    assert report["all_pass"], report
    print("smoke test passed:", [c["id"] for c in report["criteria"]])


if __name__ == "__main__":
    main()
