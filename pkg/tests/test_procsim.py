import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import linalg

from localgc.errors import DimensionError, DomainError, EmptyFile, ParseError, RaggedRows
from localgc.procsim import (
    TimeSeriesPanel,
    TvVarSpec,
    causal_profile,
    constant_spec,
    load_csv,
    model_spec,
    ramp_a12_v1,
    ramp_a12_v2,
    replicate_rng,
    save_csv,
    simulate_tvvar,
)


def test_ramp_v1_branches():
    assert ramp_a12_v1(0.2) == 0.0
    assert ramp_a12_v1(0.8) == 0.5
    assert ramp_a12_v1(0.5) == pytest.approx((math.pi * 0.5 - 1) / 2, abs=1e-12)
    assert ramp_a12_v1(0.5) == pytest.approx(0.285398, abs=1e-6)


def test_ramp_v2_branches():
    assert ramp_a12_v2(0.5) == 0.0
    assert ramp_a12_v2(5 / (2 * math.pi)) == pytest.approx(0.0, abs=1e-15)
    assert ramp_a12_v2(1.0) == pytest.approx(0.320796, abs=1e-6)


@pytest.mark.parametrize("ramp", [ramp_a12_v1, ramp_a12_v2])
def test_ramps_reject_outside_unit_interval(ramp):
    for bad in (-0.01, 1.01, float("nan")):
        with pytest.raises(DomainError):
            ramp(bad)


@pytest.mark.parametrize("ramp", [ramp_a12_v1, ramp_a12_v2])
def test_ramps_are_continuous(ramp):
    u = np.linspace(0.0, 1.0, 1_000_001)
    assert np.max(np.abs(np.diff(ramp(u)))) < 1e-5  # slope pi/2 times spacing 1e-6
    # no jumps at the breakpoints beyond the linear increment
    steps = np.abs(np.diff(ramp(u)))
    assert np.max(steps - (math.pi / 2) * 1e-6) < 1e-9


def test_white_noise_covariance():
    spec = constant_spec(np.zeros((2, 2)), seed=11)
    x = simulate_tvvar(spec, 10_000).values
    np.testing.assert_allclose(np.cov(x.T, bias=True), np.eye(2), atol=0.05)


def test_ar1_variance():
    spec = constant_spec(np.diag([0.5, 0.5]), seed=5)
    x = simulate_tvvar(spec, 20_000).values
    np.testing.assert_allclose(x.var(axis=0), [4 / 3, 4 / 3], atol=0.05)


def test_constant_var_matches_lyapunov_gamma0():
    a = np.array([[0.5, 0.3], [-0.2, 0.4]])
    cov = np.array([[1.0, 0.3], [0.3, 0.8]])
    gamma0 = linalg.solve_discrete_lyapunov(a, cov)
    for seed in (1, 2, 3):
        x = simulate_tvvar(constant_spec(a, cov, seed=seed), 20_000).values
        np.testing.assert_allclose(x.T @ x / x.shape[0], gamma0, atol=0.05)


def test_first_observation_is_first_innovation():
    spec = constant_spec(np.diag([0.9, 0.9]), seed=3)
    x = simulate_tvvar(spec, 5).values
    eps = replicate_rng(3, 0, 0).standard_normal((5, 2))
    np.testing.assert_array_equal(x[0], eps[0])
    np.testing.assert_allclose(x[1], 0.9 * eps[0] + eps[1], rtol=0, atol=1e-15)


def test_simulation_is_deterministic_and_streams_differ():
    spec = model_spec("i", seed=7)
    a = simulate_tvvar(spec, 200)
    b = simulate_tvvar(spec, 200)
    assert a.values.tobytes() == b.values.tobytes()
    c = simulate_tvvar(spec, 200, replicate=1)
    assert not np.array_equal(a.values, c.values)


def test_replicate_streams_do_not_depend_on_draw_order():
    first = [replicate_rng(9, r).standard_normal(4) for r in range(5)]
    second = [replicate_rng(9, r).standard_normal(4) for r in reversed(range(5))][::-1]
    for x, y in zip(first, second):
        assert x.tobytes() == y.tobytes()


def test_simulate_rejects_short_length():
    with pytest.raises(DomainError, match="T must be"):
        simulate_tvvar(model_spec("i"), 1)


def test_unstable_spec_rejected():
    with pytest.raises(DomainError):
        TvVarSpec(lambda u: np.array([[1.2, 0.0], [0.0, 0.1]]), np.eye(2))
    with pytest.raises(DomainError):
        TvVarSpec(lambda u: np.zeros((2, 2)), np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_model_specs_follow_their_profiles():
    for name in ("i", "ii", "power", "null"):
        spec = model_spec(name)
        prof = causal_profile(name)
        for u in (0.0, 0.3, 0.5, 0.9, 1.0):
            assert spec.coeff_at(u)[0, 1] == pytest.approx(prof(u))
            assert spec.coeff_at(u)[1, 0] == 0.0
    assert spec.coeff_at(0.5)[0, 0] == 0.5
    assert model_spec("ii").coeff_at(0.5)[0, 0] == 0.7


def test_burn_in_changes_start_but_not_stream_length():
    spec = constant_spec(np.diag([0.5, 0.5]), seed=4, burn_in=50)
    x = simulate_tvvar(spec, 10)
    assert x.values.shape == (10, 2)


def test_panel_rejects_nonfinite_and_checks_estimability():
    with pytest.raises(DomainError):
        TimeSeriesPanel(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(DimensionError):
        TimeSeriesPanel(np.zeros((3, 2)), labels=("a",))
    p = TimeSeriesPanel(np.zeros((3, 2)))
    with pytest.raises(DomainError):
        p.check_estimable()


# --- CSV -------------------------------------------------------------------


def _write(tmp_path, text, name="in.csv"):
    path = tmp_path / name
    path.write_bytes(text.encode())
    return path


def test_load_csv_with_header(tmp_path):
    panel = load_csv(_write(tmp_path, "a,b\n1,2\n3,4\n5,6"))
    assert panel.length == 3 and panel.dim == 2
    assert panel.labels == ("a", "b")
    np.testing.assert_array_equal(panel.values, [[1, 2], [3, 4], [5, 6]])


def test_load_csv_crlf_and_no_header(tmp_path):
    panel = load_csv(_write(tmp_path, "1,2\r\n3,4\r\n"))
    assert panel.labels is None
    np.testing.assert_array_equal(panel.values, [[1, 2], [3, 4]])


def test_load_csv_errors(tmp_path):
    with pytest.raises(RaggedRows):
        load_csv(_write(tmp_path, "1,2\n3"))
    with pytest.raises(ParseError) as err:
        load_csv(_write(tmp_path, "1,x"))
    assert (err.value.row, err.value.col) == (1, 2)
    with pytest.raises(ParseError):
        load_csv(_write(tmp_path, "1,2\n3,nan\n"))
    with pytest.raises(EmptyFile):
        load_csv(_write(tmp_path, ""))
    with pytest.raises(EmptyFile):
        load_csv(_write(tmp_path, "a,b\n"))


@given(arrays(np.float64, st.tuples(st.integers(1, 30), st.integers(1, 4)),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_csv_round_trip_is_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "p.csv"
    panel = TimeSeriesPanel(values)
    save_csv(panel, path)
    back = load_csv(path)
    assert back.values.tobytes() == panel.values.tobytes()
    assert back.labels == tuple(panel.column_labels())
