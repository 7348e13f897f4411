import numpy as np
import pytest
import scipy.fft
from hypothesis import given, settings
from hypothesis import strategies as st

from dctlm import codec
from dctlm.codec import (CoefficientVector, coeff_budget, compress, compress_array, dct_basis,
                         decompress, decompress_array, make_plan, pack, pack_array,
                         plan_for_rate)
from dctlm.numerics import Parameter, Rng, precision
from gradcheck import check_params
from oracles import hand_count

SIZES = (1, 2, 3, 8, 64, 80, 154, 400, 478)


# -- basis ------------------------------------------------------------------------

def test_basis_small_cases():
    assert dct_basis(1).tolist() == [[1.0]]
    r = 1 / np.sqrt(2)
    np.testing.assert_allclose(dct_basis(2), [[r, r], [r, -r]], atol=1e-15)
    d8 = dct_basis(8)
    assert np.abs(d8 @ d8.T - np.eye(8)).max() < 1e-12


@pytest.mark.parametrize("n", SIZES)
def test_basis_matches_scipy_orthonormal_dct(n):
    # column i of D is the transform of the i-th unit vector
    ref = scipy.fft.dct(np.eye(n), type=2, norm="ortho", axis=0)
    assert np.abs(dct_basis(n) - ref).max() < 1e-12
    assert np.abs(dct_basis(n) @ dct_basis(n).T - np.eye(n)).max() < 1e-10


def test_basis_is_cached_and_read_only():
    assert dct_basis(16) is dct_basis(16)
    with pytest.raises(ValueError):
        dct_basis(16)[0, 0] = 1.0
    with pytest.raises(ValueError):
        dct_basis(0)
    assert dct_basis(4, np.float32).dtype == np.float32


# -- budget -------------------------------------------------------------------------

def test_budget_reference_values():
    assert coeff_budget(478, 478, 0.99) == 2278 == 67 * 68 // 2
    assert coeff_budget(154, 154, 0.90) == 2346 == 68 * 69 // 2
    assert coeff_budget(478, 478, 0.99, mode="exact") == 2284
    assert coeff_budget(154, 154, 0.90, mode="exact") == 2371


@pytest.mark.parametrize("n,m", [(1, 1), (3, 5), (1840, 400), (465, 465)])
def test_budget_rate_zero_and_one(n, m):
    assert coeff_budget(n, m, 0.0) == n * m
    assert coeff_budget(n, m, 1.0) == 0


@given(st.integers(1, 60), st.integers(1, 60),
       st.sampled_from([0.0, 0.5, 0.7, 0.8, 0.9, 0.99, 0.999]))
@settings(max_examples=200, deadline=None)
def test_budget_agrees_with_hand_oracle(n, m, rate):
    assert coeff_budget(n, m, rate) == hand_count.budget(n, m, rate)


@given(st.integers(1, 40), st.integers(1, 40), st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=200, deadline=None)
def test_budget_monotone_in_rate(n, m, r1, r2):
    lo, hi = sorted((r1, r2))
    for mode in codec.BUDGET_MODES:
        assert coeff_budget(n, m, hi, mode) <= coeff_budget(n, m, lo, mode)
    assert coeff_budget(n, m, lo) <= coeff_budget(n, m, lo, "exact")


def test_budget_errors():
    with pytest.raises(ValueError):
        coeff_budget(3, 3, 1.5)
    with pytest.raises(ValueError):
        coeff_budget(3, 3, 0.5, mode="round")


# -- packing ----------------------------------------------------------------------------

def test_pack_low_corner_3x3():
    a, b, d = 1.0, 2.0, 3.0
    out = pack_array(np.array([a, b, d]), make_plan(3, 3, 3, "low"))
    expected = np.zeros((3, 3))
    expected[0, 0], expected[0, 1], expected[1, 0] = a, b, d
    np.testing.assert_array_equal(out, expected)


def test_pack_positions():
    assert make_plan(2, 4, 3, "low").positions == [(0, 0), (0, 1), (1, 0)]
    assert make_plan(3, 3, 3, "high").positions == [(2, 2), (1, 2), (2, 1)]
    assert make_plan(3, 3, 3).corner == "high"


def _complete_budgets(n, m):
    sizes = codec.diagonal_sizes(n, m)
    return [sum(sizes[:k]) for k in range(len(sizes) + 1)]


@given(st.integers(1, 12), st.integers(1, 12), st.data())
@settings(max_examples=100, deadline=None)
def test_plan_invariants(n, m, data):
    c = data.draw(st.integers(0, n * m))
    for corner in codec.CORNERS:
        plan = make_plan(n, m, c, corner)
        assert len(set(plan.positions)) == c
        dist = plan.rows + plan.cols if corner == "low" else (n - 1 - plan.rows) + (m - 1 - plan.cols)
        assert np.all(np.diff(dist) >= 0)
        same_diag = np.diff(dist) == 0
        assert np.all(np.diff(plan.rows)[same_diag] > 0)
    c = data.draw(st.sampled_from(_complete_budgets(n, m)))
    lo, hi = make_plan(n, m, c, "low"), make_plan(n, m, c, "high")
    assert set(hi.positions) == {(n - 1 - i, m - 1 - j) for i, j in lo.positions}


def test_plan_errors():
    with pytest.raises(ValueError):
        make_plan(2, 2, 5)
    with pytest.raises(ValueError):
        make_plan(2, 2, 1, "middle")
    with pytest.raises(ValueError):
        make_plan(0, 2, 0)


# -- decompress / compress ----------------------------------------------------------------

def test_decompress_zero_and_hand_value():
    plan = make_plan(4, 3, 5, "low")
    assert not decompress_array(np.zeros(5), plan).any()
    w = decompress_array(np.array([1.0]), make_plan(2, 2, 1, "low"))
    np.testing.assert_allclose(w, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)


@pytest.mark.parametrize("n,m", [(1, 1), (3, 8), (8, 3), (64, 80), (154, 154)])
def test_full_plan_round_trip(n, m):
    rng = Rng(n * 1000 + m)
    w = rng.uniform(-1, 1, (n, m))
    plan = make_plan(n, m, n * m, "high")
    g = compress(w, plan)
    assert np.abs(decompress_array(g, plan) - w).max() < 1e-10
    # coefficients agree with an independent 2-D DCT
    ref = scipy.fft.dctn(w, type=2, norm="ortho")
    assert np.abs(g - ref[plan.rows, plan.cols]).max() < 1e-10


def test_compress_zero_and_shape_error():
    plan = make_plan(3, 4, 6)
    assert not compress(np.zeros((3, 4)), plan).any()
    with pytest.raises(ValueError, match="does not match"):
        compress(np.zeros((4, 3)), plan)


@given(st.integers(1, 20), st.integers(1, 20), st.floats(0, 1), st.sampled_from(codec.CORNERS),
       st.integers(0, 2 ** 32))
@settings(max_examples=100, deadline=None)
def test_parseval_and_projection(n, m, rate, corner, seed):
    plan = plan_for_rate(n, m, rate, corner)
    g = Rng(seed).uniform(-1, 1, (plan.c,))
    w = decompress_array(g, plan)
    assert abs(np.linalg.norm(w) - np.linalg.norm(g)) < 1e-10
    assert np.abs(compress_array(w, plan) - g).max(initial=0.0) < 1e-10


@given(st.integers(1, 12), st.integers(1, 12), st.sampled_from(codec.CORNERS), st.data())
@settings(max_examples=60, deadline=None)
def test_spatial_flip_is_a_sign_pattern(n, m, corner, data):
    plan = make_plan(n, m, data.draw(st.integers(0, n * m)), corner)
    g = Rng(n + m + plan.c).uniform(-1, 1, (plan.c,))
    signs = (-1.0) ** (plan.rows + plan.cols)
    w = decompress_array(g, plan)
    assert np.abs(w[::-1, ::-1] - decompress_array(g * signs, plan)).max(initial=0.0) < 1e-10


def test_low_corner_is_smooth_high_corner_is_oscillating():
    g = np.ones(10)
    lo = decompress_array(g, make_plan(16, 16, 10, "low"))
    hi = decompress_array(g, make_plan(16, 16, 10, "high"))
    tv = lambda w: np.abs(np.diff(w, axis=0)).sum() + np.abs(np.diff(w, axis=1)).sum()  # noqa
    assert tv(lo) < tv(hi)


def test_batched_decompress():
    plan = make_plan(5, 4, 7)
    gs = Rng(1).uniform(-1, 1, (3, 7))
    batched = decompress_array(gs, plan)
    for k in range(3):
        np.testing.assert_allclose(batched[k], decompress_array(gs[k], plan), atol=1e-15)


def test_float32_decompress():
    plan = make_plan(8, 8, 20)
    g = Rng(2).uniform(-1, 1, (20,))
    w32 = decompress_array(g.astype(np.float32), plan)
    assert w32.dtype == np.float32
    assert np.abs(w32 - decompress_array(g, plan)).max() < 1e-6


# -- gradients ---------------------------------------------------------------------------------

@pytest.mark.parametrize("corner", codec.CORNERS)
@pytest.mark.parametrize("n,m,c", [(3, 4, 5), (8, 8, 20), (5, 2, 10)])
def test_decompress_gradient(corner, n, m, c):
    plan = make_plan(n, m, c, corner)
    rng = Rng(c)
    g = CoefficientVector(rng.uniform(-1, 1, (c,)), plan, "g")
    target = rng.uniform(-1, 1, (n, m))
    from dctlm import numerics as nx

    def loss():
        w = decompress(g, plan)
        return nx.sum_(nx.mul(nx.tanh(w), target))
    assert max(check_params(loss, [g]).values()) < 1e-6


@pytest.mark.parametrize("corner", codec.CORNERS)
def test_dct_feedforward_layer_gradient(corner):
    from dctlm import numerics as nx

    rng = Rng(11)
    plan = plan_for_rate(6, 5, 0.5, corner)
    g = CoefficientVector(rng.uniform(-1, 1, (plan.c,)), plan, "g")
    b = Parameter(rng.uniform(-1, 1, (6,)), "b")
    x = rng.uniform(-1, 1, (4, 5))

    def loss():
        w = decompress(g, plan)
        h = nx.tanh(nx.add_bias(nx.matmul(x, nx.transpose(w)), b))
        return nx.sum_(nx.mul(h, h))
    errors = check_params(loss, [g, b])
    assert max(errors.values()) < 1e-5, errors


def test_pack_gradient_is_gather():
    from dctlm import numerics as nx

    plan = make_plan(3, 3, 4, "low")
    g = Parameter(np.arange(4.0), "g")
    w = Rng(3).uniform(-1, 1, (3, 3))
    assert max(check_params(lambda: nx.sum_(nx.mul(pack(g, plan), w)), [g]).values()) < 1e-8


# -- coefficient vectors -------------------------------------------------------------------------

def test_coefficient_vector_round_trip_and_meta():
    plan = make_plan(6, 6, 36)
    w = Rng(4).uniform(-1, 1, (6, 6))
    cv = CoefficientVector.from_dense(w, plan, "x")
    assert np.abs(cv.dense() - w).max() < 1e-10
    assert cv.meta == {"n": 6, "m": 6, "c": 36, "corner": "high", "order": codec.ORDER_TAG}
    with pytest.raises(ValueError):
        CoefficientVector(np.zeros(3), plan)
    with precision("float32"):
        assert CoefficientVector(np.zeros(36), plan).value.dtype == np.float32


def test_selftest_passes():
    results = codec.selftest(sizes=(1, 2, 3, 8, 64))
    assert all(ok for _, ok, _ in results), results
