import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from conftest import random_lp
from gabplp.errors import GabpNotConvergedError, InfeasibleProblemError, InputError, UnboundedProblemError
from gabplp.io import build_toy_problem
from gabplp.model import StandardLp, make_problem, to_standard_form
from gabplp.oracle import dense_solve, is_positive_definite, vertex_enumerate
from gabplp.primaldual import (PdIterate, PrimalDualConfig, assemble_symmetric_kkt, kkt_residuals, normal_matrix,
                               pd_direction, pd_solve, unsymmetric_kkt)

ONE = StandardLp([[1.0]], [1.0], [1.0])
CENTRAL = PdIterate([1.0], [0.0], [1.0])


def random_iterate(lp, r):
    return PdIterate(r.uniform(0.2, 3.0, lp.n), r.normal(size=lp.p), r.uniform(0.2, 3.0, lp.n))


def test_iterate_positivity():
    with pytest.raises(InputError):
        PdIterate([1.0], [0.0], [0.0])
    with pytest.raises(InputError):
        PdIterate([-1.0], [0.0], [1.0])


def test_residual_examples():
    r_p, r_d, r_c = kkt_residuals(ONE, CENTRAL, 1.0)
    assert_array_equal(np.concatenate([r_p, r_d, r_c]), [0, 0, 0])
    r_p, r_d, r_c = kkt_residuals(ONE, CENTRAL, 0.5)
    assert_array_equal(r_c, [-0.5])
    assert_array_equal(r_p, [0]) and assert_array_equal(r_d, [0])


def test_residuals_random(rng):
    lp = to_standard_form(random_lp(1))
    it = random_iterate(lp, rng)
    r_p, r_d, r_c = kkt_residuals(lp, it, 0.3)
    for k in range(lp.p):
        assert r_p[k] == pytest.approx(lp.b[k] - sum(lp.A[k, j] * it.x[j] for j in range(lp.n)))
    for j in range(lp.n):
        assert r_d[j] == pytest.approx(lp.c[j] - sum(lp.A[k, j] * it.y[k] for k in range(lp.p)) - it.z[j])
        assert r_c[j] == pytest.approx(0.3 - it.x[j] * it.z[j])


def test_symmetric_kkt_central():
    K, rhs = assemble_symmetric_kkt(ONE, CENTRAL, 1.0)
    assert_array_equal(K.to_dense(), [[0, 1, 1], [1, 0, 0], [1, 0, 1]])
    assert_array_equal(rhs, [0, 0, 0])
    d = pd_direction(ONE, CENTRAL, 1.0, "dense-oracle")
    assert_array_equal(np.concatenate([d.dx, d.dy, d.dz]), [0, 0, 0])


def test_symmetric_kkt_third_block():
    _, rhs = assemble_symmetric_kkt(ONE, PdIterate([2.0], [0.0], [4.0]), 1.0)
    assert rhs[2] == pytest.approx(-1.75)


@pytest.mark.parametrize("seed", range(20))
def test_symmetric_kkt_is_symmetric(seed):
    r = np.random.default_rng(seed)
    lp = to_standard_form(random_lp(seed, max_n=8, max_p=5))
    it = random_iterate(lp, r)
    K, rhs = assemble_symmetric_kkt(lp, it, float(r.uniform(0.01, 1)))
    Kd = K.to_dense()
    assert_array_equal(Kd, Kd.T)
    # row-scaling the unsymmetric system by Z^-1 in its last block gives the symmetric one
    U, urhs = unsymmetric_kkt(lp, it, 0.5)
    S = np.ones(len(urhs))
    S[lp.n + lp.p:] = 1.0 / it.z
    assert_allclose(S[:, None] * U, assemble_symmetric_kkt(lp, it, 0.5)[0].to_dense(), atol=1e-15)


def test_one_variable_direction_against_dense_system():
    it = PdIterate([2.0], [0.0], [1.0])
    K, rhs = unsymmetric_kkt(ONE, it, 1.0)
    ref = dense_solve(K, rhs)
    for mode in ("explicit-gabp", "full-gabp", "dense-oracle"):
        d = pd_direction(ONE, it, 1.0, mode)
        assert_allclose(np.concatenate([d.dx, d.dy, d.dz]), ref, atol=1e-6)
    d = pd_direction(ONE, it, 1.0, "dense-oracle")
    assert_allclose(np.concatenate([d.dx, d.dy, d.dz]), ref, rtol=1e-14, atol=1e-14)


@given(st.integers(0, 2**32 - 1))
def test_direction_solves_block_system(seed):
    r = np.random.default_rng(seed)
    lp = to_standard_form(random_lp(int(r.integers(0, 1000)), max_n=10, max_p=6))
    it = random_iterate(lp, r)
    mu = float(r.uniform(0.01, 1.0))
    K, rhs = unsymmetric_kkt(lp, it, mu)
    d = pd_direction(lp, it, mu, "dense-oracle")
    sol = np.concatenate([d.dx, d.dy, d.dz])
    assert np.max(np.abs(K @ sol - rhs)) <= 1e-8 * (1 + np.max(np.abs(rhs)))
    assert is_positive_definite(normal_matrix(lp, it))


@pytest.mark.parametrize("seed", range(10))
def test_modes_agree_when_gabp_converges(seed):
    r = np.random.default_rng(seed)
    lp = to_standard_form(random_lp(seed, max_n=10, max_p=6))
    it = random_iterate(lp, r)
    ref = pd_direction(lp, it, 0.1, "dense-oracle")
    ref_v = np.concatenate([ref.dx, ref.dy, ref.dz])
    for mode in ("explicit-gabp", "full-gabp"):
        try:
            d = pd_direction(lp, it, 0.1, mode)
        except GabpNotConvergedError:
            continue
        got = np.concatenate([d.dx, d.dy, d.dz])
        assert np.max(np.abs(got - ref_v)) <= 1e-6 * np.max(np.abs(ref_v))


def test_bad_mode():
    with pytest.raises(InputError):
        pd_direction(ONE, CENTRAL, 1.0, "lu")
    with pytest.raises(InputError):
        PrimalDualConfig(linsolve="lu")


@pytest.mark.parametrize("mode", ["explicit-gabp", "full-gabp", "dense-oracle"])
def test_toy(mode):
    std = to_standard_form(build_toy_problem())
    res = pd_solve(std, cfg=PrimalDualConfig(linsolve=mode))
    assert std.original_objective(res.x) == pytest.approx(1.25, abs=1e-4)
    assert float(res.x @ res.z) / std.n <= 1e-8


def test_one_variable():
    res = pd_solve(ONE)
    assert res.x[0] == pytest.approx(1.0, abs=1e-8)
    assert 0 < res.z[0] <= 1e-7
    assert res.objective == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("seed", range(6))
def test_duality_and_optimum(seed):
    prob = random_lp(seed)
    std = to_standard_form(prob)
    res = pd_solve(std)
    primal, dual = float(std.c @ res.x), float(std.b @ res.y)
    assert primal - dual <= 1e-6 * (1 + abs(primal))
    assert std.original_objective(res.x) == pytest.approx(vertex_enumerate(prob).objective, abs=1e-5)


@pytest.mark.parametrize("seed", range(6))
def test_positivity_and_gap_monotone(seed):
    res = pd_solve(to_standard_form(random_lp(seed)))
    gaps = [it.gap for it in res.iterates]
    assert all(np.all(it.x > 0) and np.all(it.z > 0) for it in res.iterates)
    assert all(b <= a * (1 + 1e-12) for a, b in zip(gaps, gaps[1:]))
    assert len(res.iterates) == len(res.trace)


def test_free_variable():
    prob = make_problem([1.0, 0.0], [([1.0, 1.0], "<=", 2.0), ([0.0, 1.0], "<=", 1.0)],
                        sense="max", nonneg=[False, True])
    std = to_standard_form(prob)
    res = pd_solve(std)
    assert std.original_objective(res.x) == pytest.approx(2.0, abs=1e-6)
    assert res.x.shape == (std.n,) and res.y.shape == (std.p,)


def test_infeasible():
    with pytest.raises(InfeasibleProblemError):
        pd_solve(to_standard_form(make_problem([1.0], [([1.0], "<=", -1.0)])))


def test_unbounded():
    std = to_standard_form(make_problem([1.0, 1.0], [([1.0, -1.0], "<=", 1.0)], sense="max"))
    with pytest.raises(UnboundedProblemError):
        pd_solve(std)
