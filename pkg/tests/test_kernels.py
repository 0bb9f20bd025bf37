import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from circsense import kernels
from circsense.numtheory import legendre_table
from circsense.quantization import difference_power


def brute_gram_max(s, m):
    p = len(s)
    S = np.array([[s[(j - i) % p] for j in range(p)] for i in range(m)], dtype=np.int64)
    G = np.abs(S.T @ S)
    best = (-1, 0, 0)
    for a in range(p):
        for b in range(a + 1, p):
            if G[a, b] > best[0]:
                best = (int(G[a, b]), a, b)
    return best


def brute_char_sums(chi):
    p = len(chi)
    top_c = top_i = 0
    for a in range(p):
        for b in range(a + 1, p):
            vals = [int(chi[(x - a) * (x - b) % p]) for x in range(p)]
            top_c = max(top_c, abs(sum(vals)))
            top_i = max(top_i, max(abs(v) for v in np.cumsum(vals)))
    return top_c, top_i


def test_backend_selected():
    assert kernels.BACKEND in ("compiled", "python")
    assert "python" in kernels.backends()


@pytest.mark.parametrize("p", [5, 7, 23, 31])
def test_gram_max_brute_force(kernels, p):
    s = np.ascontiguousarray(legendre_table(p)).copy()
    s[0] = 1
    for m in (1, 2, p // 2, p):
        assert tuple(kernels.circulant_gram_max(s, m)) == brute_gram_max(s, m)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([-1, 1]), min_size=2, max_size=40), st.data())
def test_gram_max_random_sequences(s, data):
    m = data.draw(st.integers(1, len(s)))
    arr = np.array(s, dtype=np.int8)
    results = {name: tuple(mod.circulant_gram_max(arr, m)) for name, mod in kernels.backends().items()}
    assert set(results.values()) == {brute_gram_max(arr, m)}


def test_gram_max_backends_agree_large():
    impls = kernels.backends()
    for p in (199, 401):
        s = np.ascontiguousarray(legendre_table(p)).copy()
        s[0] = 1
        outs = {tuple(mod.circulant_gram_max(s, 50)) for mod in impls.values()}
        assert len(outs) == 1


@pytest.mark.parametrize("p", [5, 7, 13, 29])
def test_char_sums_brute_force(kernels, p):
    top_c, top_i, a, b, n = kernels.quadratic_char_sums(np.ascontiguousarray(legendre_table(p)))
    assert (top_c, top_i) == brute_char_sums(legendre_table(p))


@pytest.mark.parametrize("r", [0, 1, 2, 3])
def test_sigma_delta_identity(kernels, r):
    rng = np.random.default_rng(r)
    y = rng.uniform(-1, 1, 500)
    q, u, overloaded = kernels.sigma_delta_greedy(y, r, 0.05, 200)
    assert not overloaded
    assert np.max(np.abs(y - q - difference_power(500, r).apply(u))) <= 1e-12
    assert np.max(np.abs(u)) <= 0.025 * (1 + 1e-12)
    # alphabet is the midrise grid
    steps = q / 0.05 - 0.5
    assert np.max(np.abs(steps - np.round(steps))) < 1e-9


def test_sigma_delta_backends_agree():
    impls = kernels.backends()
    rng = np.random.default_rng(5)
    for r in (1, 2, 3):
        y = rng.uniform(-2, 2, 300)
        for levels in (2, 50):
            outs = [mod.sigma_delta_greedy(y, r, 0.1, levels) for mod in impls.values()]
            for q, u, ov in outs[1:]:
                assert np.array_equal(q, outs[0][0]) and np.array_equal(u, outs[0][1]) and ov == outs[0][2]


def test_sigma_delta_overload_reported(kernels):
    q, u, overloaded = kernels.sigma_delta_greedy(np.full(10, 5.0), 1, 0.1, 2)
    assert overloaded
    assert np.max(np.abs(q)) <= 0.15 + 1e-12


def test_sigma_delta_zero_input_tie(kernels):
    q, u, _ = kernels.sigma_delta_greedy(np.zeros(4), 1, 0.2, 3)
    assert q[0] == pytest.approx(0.1)
    assert np.max(np.abs(u)) <= 0.1 + 1e-15
