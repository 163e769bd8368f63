import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from presence_od import FlowMatrix
from presence_od.gravity import GravityParams, compare_flows, gravity_fit, gravity_vs_lp_report
from presence_od.transitions import NonConvergence


def random_instance(rng, n):
    e1 = rng.integers(0, 100, n).astype(float)
    e1[rng.integers(0, n)] += 1
    e2 = rng.multinomial(int(e1.sum()), rng.dirichlet(np.ones(n))).astype(float)
    c = rng.random((n, n)) * 10
    np.fill_diagonal(c, 0.0)
    return e1, e2, c


def test_uniform_cost_is_rank_one():
    fit = gravity_fit([3, 1], [2, 2], np.ones((2, 2)))
    np.testing.assert_allclose(fit.flow, [[1.5, 1.5], [0.5, 0.5]], atol=1e-12)
    assert fit.iterations == 1


def test_single_zone():
    fit = gravity_fit([7], [7], [[0.0]])
    np.testing.assert_allclose(fit.flow, [[7.0]])


def test_forced_flow():
    fit = gravity_fit([1, 0], [0, 1], [[0.0, 4.0], [2.0, 0.0]])
    np.testing.assert_allclose(fit.flow, [[0, 1], [0, 0]], atol=1e-12)


def test_zero_total():
    fit = gravity_fit([0, 0], [0, 0], np.ones((2, 2)))
    assert fit.flow.tolist() == [[0, 0], [0, 0]]


def test_input_errors():
    with pytest.raises(ValueError):
        gravity_fit([1, 2], [1, 1], np.ones((2, 2)))
    with pytest.raises(ValueError):
        gravity_fit([1, 1], [1, 1], np.ones((3, 3)))
    with pytest.raises(ValueError):
        GravityParams(alpha=0)


def test_non_convergence():
    rng = np.random.default_rng(0)
    e1, e2, c = random_instance(rng, 20)
    with pytest.raises(NonConvergence):
        gravity_fit(e1, e2, c, GravityParams(max_iter=2, tol=1e-14))


@given(st.integers(1, 100), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_converged_marginals(n, seed):
    e1, e2, c = random_instance(np.random.default_rng(seed), n)
    fit = gravity_fit(e1, e2, c)
    assert np.max(np.abs(fit.flow.sum(axis=1) - e1)) < 1e-9
    assert np.max(np.abs(fit.flow.sum(axis=0) - e2)) < 1e-9
    # residual never increases between sweeps
    r = fit.residuals
    assert all(b <= a * (1 + 1e-9) + 1e-12 for a, b in zip(r, r[1:]))
    np.testing.assert_allclose(
        fit.flow,
        (fit.a * e1)[:, None] * np.maximum(c, 0.1) ** -1.0 * (fit.b * e2)[None, :],
        rtol=1e-12,
    )


@given(st.integers(2, 30), st.integers(0, 2**32 - 1), st.floats(0.5, 20.0))
@settings(max_examples=30, deadline=None)
def test_cost_scaling_invariance(n, seed, scale):
    rng = np.random.default_rng(seed)
    e1, e2, _ = random_instance(rng, n)
    # keep every effective cost above the floor so scaling is not clipped
    c = 1.0 + rng.random((n, n)) * 9
    f1 = gravity_fit(e1, e2, c).flow
    f2 = gravity_fit(e1, e2, c * scale).flow
    np.testing.assert_allclose(f1, f2, atol=1e-7)


def test_alpha_changes_flow():
    c = np.array([[0, 1, 5], [1, 0, 2], [5, 2, 0]], dtype=float)
    e = [10, 20, 30]
    f1 = gravity_fit(e, e, c, GravityParams(alpha=1.0)).flow
    f2 = gravity_fit(e, e, c, GravityParams(alpha=2.0, max_iter=5000)).flow
    assert np.trace(f2) > np.trace(f1)


def test_report_examples():
    lp = FlowMatrix.from_dense([[2, 1], [0, 1]])
    grav = np.array([[1.5, 1.5], [0.5, 0.5]])
    rep = gravity_vs_lp_report(grav, lp)
    assert rep.l1 == 2.0
    np.testing.assert_allclose(rep.row_residual, [0, 0], atol=1e-15)
    np.testing.assert_allclose(rep.col_residual, [0, 0], atol=1e-15)

    same = compare_flows(grav, grav)
    assert same.l1 == 0 and same.cosine == pytest.approx(1.0, abs=1e-15) and same.cosine_defined

    zero = compare_flows(grav, np.zeros((2, 2)))
    assert zero.l1 == grav.sum() and zero.cosine == 0.0 and not zero.cosine_defined

    with pytest.raises(ValueError):
        compare_flows(grav, np.zeros((3, 3)))
