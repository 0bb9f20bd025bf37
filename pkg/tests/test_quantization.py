import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from circsense.constructions import legendre_partial_circulant
from circsense.quantization import (
    QUANTIZATION_CSV_HEADER,
    assemble_one_stage,
    default_levels,
    difference_power,
    sigma_delta_quantize,
    stable_range,
    svd_preprocess,
)


def test_difference_matrix_examples():
    assert difference_power(3, 1).dense().tolist() == [[1, 0, 0], [-1, 1, 0], [0, -1, 1]]
    D = difference_power(4, 1).dense()
    assert np.array_equal(difference_power(4, 2).dense(), D @ D)
    assert np.array_equal(difference_power(5, 3).dense(), D_power(5, 3))
    assert np.array_equal(difference_power(4, 0).dense(), np.eye(4))


def D_power(m, r):
    D = np.eye(m) - np.eye(m, k=-1)
    return np.linalg.matrix_power(D, r)


@pytest.mark.parametrize("r", [0, 1, 2, 3])
def test_apply_and_inverse(r):
    rng = np.random.default_rng(r)
    x = rng.standard_normal(30)
    Dr = difference_power(30, r)
    assert np.allclose(Dr.apply(x), D_power(30, r) @ x)
    assert np.allclose(Dr.apply_inverse(Dr.apply(x)), x)
    assert np.allclose(Dr.apply_inverse(x), np.linalg.solve(D_power(30, r), x))


def test_difference_power_validation():
    with pytest.raises(ValueError):
        difference_power(0, 1)
    with pytest.raises(ValueError):
        difference_power(3, -1)


@pytest.mark.parametrize("m,r", [(1, 2), (5, 1), (40, 2), (25, 3)])
def test_svd_preprocess(m, r):
    f = svd_preprocess(m, r)
    assert np.allclose(f.U @ np.diag(f.sigma) @ f.Vt, D_power(m, r))
    assert np.all(np.diff(f.sigma) >= 0)
    assert np.allclose(f.U.T @ f.U, np.eye(m))
    idx = np.argmax(np.abs(f.U), axis=0)
    assert np.all(f.U[idx, np.arange(m)] > 0)
    assert svd_preprocess(m, r) is f
    if m == 1:
        assert f.U.tolist() == [[1.0]]


def test_zero_input():
    run = sigma_delta_quantize(np.zeros(6), 1, 0.1)
    assert np.all(np.isin(np.round(run.q, 12), [0.05, -0.05]))
    assert run.q[0] == pytest.approx(0.05)
    assert run.u_inf <= 0.05 + 1e-15


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=1, max_size=80),
    st.integers(1, 3),
    st.sampled_from([0.01, 0.05, 0.3]),
)
def test_noise_shaping_identity(y, r, delta):
    y = np.array(y)
    run = sigma_delta_quantize(y, r, delta)
    assert np.max(np.abs(y - run.q - difference_power(len(y), r).apply(run.u))) <= 1e-12
    assert run.stable
    assert run.u_inf <= delta / 2 * (1 + 1e-12)
    assert np.abs(y).max() <= stable_range(r, delta, run.levels)


def test_first_order_stability():
    rng = np.random.default_rng(0)
    for _ in range(200):
        y = rng.uniform(-1, 1, 64)
        run = sigma_delta_quantize(y, 1, 0.05)
        assert run.stable and run.u_inf <= 0.025 * (1 + 1e-12)


def test_overload_is_reported():
    run = sigma_delta_quantize(np.full(20, 1.0), 2, 0.1, levels=3)
    assert not run.stable
    assert run.state_constant == pytest.approx(run.u_inf / 0.1)
    assert run.state_constant > 0.5


def test_default_levels_margin():
    L = default_levels(1.0, 2, 0.05)
    assert stable_range(2, 0.05, L) >= 1.2
    assert stable_range(2, 0.05, L - 1) < 1.2


def test_quantize_validation():
    with pytest.raises(ValueError):
        sigma_delta_quantize(np.zeros(3), 4, 0.1)
    with pytest.raises(ValueError):
        sigma_delta_quantize(np.zeros(3), 1, 0.0)
    with pytest.raises(ValueError):
        sigma_delta_quantize(np.zeros((2, 2)), 1, 0.1)


def test_csv_row():
    run = sigma_delta_quantize(np.array([0.3, -0.2]), 1, 0.1, levels=5)
    fields = run.csv_row().split(",")
    assert len(fields) == len(QUANTIZATION_CSV_HEADER.split(","))
    assert fields[:4] == ["1", "0.1", "5", "2"] and fields[-1] == "1"


@pytest.mark.parametrize("r", [1, 2, 3])
def test_assemble_one_stage_feasible(r):
    M = legendre_partial_circulant(101)
    rng = np.random.default_rng(r)
    x = np.zeros(101)
    x[rng.choice(101, 3, replace=False)] = rng.standard_normal(3)
    prob = assemble_one_stage(M, x, r, 0.05)
    y = prob.A_eff.matvec(x)
    assert np.max(np.abs(y - prob.q - difference_power(M.m, r).apply(prob.run.u))) <= 1e-12
    assert np.linalg.norm(difference_power(M.m, r).apply_inverse(y - prob.q)) <= prob.radius
    assert prob.radius == pytest.approx(0.5 * 0.05 * math.sqrt(M.m))
    assert np.allclose(prob.frame.U @ (M.to_dense() @ x), y)


def test_assemble_noise():
    M = legendre_partial_circulant(53)
    x = np.zeros(53)
    x[3] = 1
    with pytest.raises(ValueError):
        assemble_one_stage(M, x, 1, 0.05, epsilon=0.01)
    prob = assemble_one_stage(M, x, 1, 0.05, epsilon=0.01, rng=np.random.default_rng(0))
    assert np.max(np.abs(prob.noise)) <= 0.01
    assert prob.noise_radius == pytest.approx(0.01 * math.sqrt(M.m))
