import math

import numpy as np
import pytest

from stepdown.core import SampleSchedule
from stepdown.trial import RngStream, ScenarioParams, compute_statistic, generate_paths

SCHED = SampleSchedule((26, 29, 35))


def test_scenario_truth_flags():
    assert ScenarioParams(0.0, 0.0, 0.5).truth == (True, True, True)
    assert ScenarioParams(0.0, 0.5, 0.75).truth == (True, False, False)
    assert ScenarioParams(0.5, 0.5, 0.75).truth == (False, False, False)
    assert ScenarioParams(-0.2, 0.0, 0.4).truth == (True, True, True)


def test_scenario_validation():
    with pytest.raises(ValueError, match="probability"):
        ScenarioParams(0.0, 0.0, 1.2)
    with pytest.raises(ValueError, match="correlation"):
        ScenarioParams(0.0, 0.0, 0.5, rho12=1.5)


def test_scenario_label():
    assert ScenarioParams(0.0, 0.0, 0.5).label() == "(0,0,.5)"
    assert ScenarioParams(0.4, 0.4, 0.75).label() == "(.4,.4,.75)"
    assert ScenarioParams(0.0, 0.5, 0.75, rho12=0.75).label() == "(0,.5,.75,.75)"


def test_gaussian_statistic():
    assert compute_statistic(0, 5.0, 25) == pytest.approx(1.0)
    assert compute_statistic(1, -3.0, 9) == pytest.approx(-1.0)


def test_binary_statistic():
    # 20 successes out of 26 sits 7 above the null center 13, scaled by
    # sqrt(26/4).
    t = compute_statistic(2, 20.0, 26)
    assert t == pytest.approx((20.0 - 13.0) / math.sqrt(6.5))
    assert t == pytest.approx(2.745626, abs=1e-6)


def test_binary_statistic_continuity_correction():
    plain = compute_statistic(2, 20.0, 26)
    corrected = compute_statistic(2, 20.0, 26, continuity_correction=True)
    assert corrected == pytest.approx((20.0 - 13.0 - 0.5) / math.sqrt(6.5))
    assert corrected < plain


def test_statistic_validation():
    with pytest.raises(ValueError, match="sample size"):
        compute_statistic(0, 1.0, 0)
    with pytest.raises(ValueError, match="endpoint"):
        compute_statistic(3, 1.0, 10)


def test_rng_stream_validation():
    with pytest.raises(ValueError):
        RngStream(-1, 0)
    with pytest.raises(ValueError):
        RngStream(1, -1)


def test_generate_paths_deterministic():
    params = ScenarioParams(0.0, 0.5, 0.75)
    a = generate_paths(params, SCHED, RngStream(1, 42))
    b = generate_paths(params, SCHED, RngStream(1, 42))
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.sums, b.sums)
    c = generate_paths(params, SCHED, RngStream(1, 43))
    assert not np.array_equal(a.values, c.values)
    d = generate_paths(params, SCHED, RngStream(2, 42))
    assert not np.array_equal(a.values, d.values)


def test_generate_paths_consistent_with_compute_statistic():
    params = ScenarioParams(0.3, -0.2, 0.6)
    paths = generate_paths(params, SCHED, RngStream(9, 5))
    for e in range(3):
        for j, n in enumerate(SCHED):
            expect = compute_statistic(e, paths.sums[e, j], n)
            assert paths.values[e, j] == pytest.approx(expect)


def test_generate_paths_degenerate_probability():
    paths = generate_paths(ScenarioParams(0.0, 0.0, 1.0), SCHED, RngStream(3, 0))
    assert np.array_equal(paths.sums[2], np.array([26.0, 29.0, 35.0]))
    none = generate_paths(ScenarioParams(0.0, 0.0, 0.0), SCHED, RngStream(3, 0))
    assert np.array_equal(none.sums[2], np.zeros(3))


def test_generate_paths_moments():
    # Check the simulated location, scale, and correlation against the
    # declared parameters at the final analysis.
    params = ScenarioParams(0.5, 0.2, 0.7, rho12=0.75)
    reps = 4000
    t1 = np.empty(reps)
    t2 = np.empty(reps)
    s3 = np.empty(reps)
    for r in range(reps):
        paths = generate_paths(params, SCHED, RngStream(123, r))
        t1[r], t2[r] = paths.values[0, -1], paths.values[1, -1]
        s3[r] = paths.sums[2, -1]
    n = 35
    # S_n / sqrt(n) has mean mu * sqrt(n) and unit variance.
    assert t1.mean() == pytest.approx(0.5 * math.sqrt(n), abs=4.0 / math.sqrt(reps))
    assert t2.mean() == pytest.approx(0.2 * math.sqrt(n), abs=4.0 / math.sqrt(reps))
    assert t1.std() == pytest.approx(1.0, abs=0.05)
    assert t2.std() == pytest.approx(1.0, abs=0.05)
    r12 = np.corrcoef(t1, t2)[0, 1]
    assert r12 == pytest.approx(0.75, abs=0.03)
    assert s3.mean() == pytest.approx(0.7 * n, abs=4.0 * math.sqrt(n * 0.21 / reps))


def test_zero_correlation_leaves_second_endpoint_independent():
    params = ScenarioParams(0.0, 0.0, 0.5, rho12=0.0)
    t1 = np.empty(2000)
    t2 = np.empty(2000)
    for r in range(2000):
        paths = generate_paths(params, SCHED, RngStream(77, r))
        t1[r], t2[r] = paths.values[0, -1], paths.values[1, -1]
    assert abs(np.corrcoef(t1, t2)[0, 1]) < 0.06


def test_correlation_does_not_change_first_endpoint():
    # The correlation factor feeds the shared draw into the second
    # endpoint only, so the first endpoint's path is identical under any
    # correlation with the same stream.
    flat = generate_paths(ScenarioParams(0.0, 0.5, 0.75, rho12=0.0), SCHED, RngStream(5, 9))
    tilted = generate_paths(
        ScenarioParams(0.0, 0.5, 0.75, rho12=0.75), SCHED, RngStream(5, 9)
    )
    assert np.array_equal(flat.values[0], tilted.values[0])
    assert not np.array_equal(flat.values[1], tilted.values[1])
    assert np.array_equal(flat.values[2], tilted.values[2])
