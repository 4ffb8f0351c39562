"""Smoke test for the stormaccess_py extension module.

Build and install first, e.g. ``maturin develop -m crates/py/Cargo.toml --release``.
"""

import math
import sys
import tempfile
from pathlib import Path

import stormaccess_py as sa


def close(a, b, tol=1e-12):
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)


def main():
    assert len(sa.fragility_checksum()) == 64
    assert close(sa.uplift_probability(17.5, 2.0, -2.0), 0.2740)
    assert sa.uplift_probability(17.5, 2.0, 0.0) == 0.0
    assert sa.uplift_probability(2.0, 20.0, -5.0) == 1.0
    try:
        sa.uplift_probability(40.0, 1.0, 0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("mass outside the table must raise")

    assert close(sa.relative_surge_elevation(5.0, 5.6), -0.6, 1e-9)
    assert close(sa.max_wave_height(1.0), 1.8)
    assert sa.bridge_inundation_closed(-0.6) and not sa.bridge_inundation_closed(-0.59)
    assert sa.road_inundation_closed(0.6) and not sa.road_inundation_closed(0.59)

    # Two demands, two supplies: A = 1000 * [10/300, 10/300 + 20/500].
    scores = sa.two_step_fca([[10.0, None], [20.0, 30.0]], [10.0, 20.0], [100.0, 200.0])
    assert close(scores[0], 1000 * 10 / 300, 1e-9)
    assert close(scores[1], 1000 * (10 / 300 + 20 / 200), 1e-9)
    assert sa.quartile_classify([0.0, 0.0, 5.0, 10.0]) == ["Q1", "Q1", "Q3", "Q4"]
    assert close(sa.weighted_average([10.0, 20.0], [1.0, 3.0]), 17.5)

    with tempfile.TemporaryDirectory() as tmp:
        scenarios = sa.generate_fixture(tmp, small=True, samples=100)
        assert set(scenarios) == {"storm-1-like", "storm-2-like"}
        runs = {}
        for storm, path in scenarios.items():
            scenario = sa.Scenario.load(str(path))
            result = scenario.run(workers=2)
            runs[storm] = result
            summary = result.summary()
            print(storm, scenario, summary)
            assert set(summary) == {"short", "long"}
            assert len(result.mean("short")) == len(scenario.demand_ids)
            assert "overall_population" in result.groups("long")
            written = result.write(str(Path(tmp) / ("out-" + storm)))
            assert len(written) == 4
        weak = runs["storm-1-like"].summary()["short"]["no_access_fraction"]
        strong = runs["storm-2-like"].summary()["short"]["no_access_fraction"]
        assert strong >= weak

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
