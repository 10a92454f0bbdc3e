import numpy as np
import pytest

from ncsparse.bench import (LEMMA_BORDER, example_commuting_triangle, lemma_gram_matrix,
                            lemma_gram_polynomial)
from ncsparse.ncpoly import NCPolynomial, evaluate, parse, sigma, star
from ncsparse.relax import (RelaxKind, UnboundedBelow, build_eig, build_trace, eig_key,
                            gram_objective, solve_relaxation, trace_key)
from ncsparse.sdpsolver import SolverStatus
from ncsparse.sparsity import assemble_pattern

from conftest import random_symmetric_poly, random_tuple


def _single(f, S=()):
    n = max([f.nvars] + [g.nvars for g in S])
    return assemble_pattern(f, S, [list(range(1, n + 1))])


# -- structure -------------------------------------------------------------

def test_keys():
    assert eig_key((2, 1, 3)) == (2, 1, 3)
    assert eig_key((3, 1, 2)) == (2, 1, 3)
    assert trace_key((2, 1, 1)) == (1, 1, 2)


def test_block_sizes_follow_sigma():
    prob = example_commuting_triangle()
    R = build_eig(prob.objective, prob.constraints, 2, _single(prob.objective, prob.constraints))
    assert R.block_sizes[0] == sigma(3, 2)
    assert all(s == sigma(3, 1) for s in R.block_sizes[1:])
    pat = assemble_pattern(parse("x1^2 + x2^2", 2), [], [[1], [2]])
    R = build_eig(parse("x1^2 + x2^2", 2), [], 3, pat)
    assert R.block_sizes == [4, 4]


def test_blocks_are_symmetric_and_share_variables():
    prob = example_commuting_triangle()
    pat = assemble_pattern(prob.objective, prob.constraints, prob.cliques)
    R = build_eig(prob.objective, prob.constraints, 1, pat)
    y = np.random.default_rng(0).standard_normal(R.m_sdp)
    for blk in R.sdp.blocks:
        S = blk.slack(y)
        assert np.array_equal(S, S.T)
    # X2^2 appears in clique {1,2} and {2,3} with the same variable
    assert R.index[(2, 2)] is not None
    M1 = R.moment_matrix(y, R.blocks[0].basis)
    M2 = R.moment_matrix(y, R.blocks[1].basis)
    assert M1[2, 2] == M2[1, 1] == R.moment(y, (2, 2))


def test_unit_moment_is_pinned():
    R = build_eig(parse("x1^2", 1), [parse("1 - x1^2", 1)], 1)
    assert () not in R.index
    assert R.moment(np.zeros(R.m_sdp), ()) == 1.0


def test_localizing_entries():
    # g = x1 - 1/3 at (u, v) = (x1, x1) gives L(x1^3) - L(x1^2)/3
    g = parse("x1 - 1/3".replace("1/3", repr(1 / 3)), 1)
    R = build_eig(parse("x1^2", 1), [g], 2)
    loc = R.sdp.blocks[1]
    basis = R.blocks[1].basis
    a = basis.index((1,))
    y = np.zeros(R.m_sdp)
    y[R.index[(1, 1, 1)]] = 1.0
    assert loc.slack(y)[a, a] == pytest.approx(1.0)
    y[:] = 0
    y[R.index[(1, 1)]] = 1.0
    assert loc.slack(y)[a, a] == pytest.approx(-1 / 3)
    assert loc.slack(np.zeros(R.m_sdp))[0, 0] == pytest.approx(-1 / 3)


def test_order_too_small():
    with pytest.raises(ValueError, match="below the minimum"):
        build_eig(parse("x1^4", 1), order=1)


def test_non_symmetric_objective_rejected():
    with pytest.raises(ValueError, match="symmetric"):
        build_eig(parse("x1*x2", 2))


def test_localize_all_adds_blocks():
    f = parse("x1*x2 + x2*x1 + x2*x3 + x3*x2", 3)
    S = [parse("1 - x2^2", 3)]
    pat = assemble_pattern(f, S, [[1, 2], [2, 3]])
    assert len(build_eig(f, S, 1, pat).blocks) == 3
    assert len(build_eig(f, S, 1, pat, localize="all").blocks) == 4


@pytest.mark.parametrize("seed", range(20))
def test_single_clique_matches_dense_exactly(seed):
    rng = np.random.default_rng(seed)
    n = 2 + seed % 2
    f = random_symmetric_poly(rng, n, 4, density=0.3)
    S = [NCPolynomial({(): 1.0, **{(j, j): -1.0 for j in range(1, n + 1)}}, n)]
    for kind in ("eig", "trace"):
        build = build_eig if kind == "eig" else build_trace
        a = build(f, S, 2)
        b = build(f, S, 2, _single(f, S))
        assert a.sdp.same_as(b.sdp)
        assert a.keys == b.keys


def test_unconstrained_single_clique_matches_dense_without_newton():
    f = parse("x1^2*x2^2 + x2^2*x1^2 + x1^2 + 3", 2)
    a = build_eig(f, (), 2, newton=False)
    b = build_eig(f, (), 2, _single(f))
    assert a.sdp.same_as(b.sdp)
    assert build_eig(f, (), 2).newton


def test_gram_objective_examples():
    assert np.array_equal(gram_objective(parse("x1^2", 1), [(), (1,)]),
                          np.array([[0.0, 0.0], [0.0, 1.0]]))
    assert np.array_equal(gram_objective(NCPolynomial.constant(1.0, 1), [()]),
                          np.array([[1.0]]))
    f = lemma_gram_polynomial().objective
    G = gram_objective(f, [star(w) for w in LEMMA_BORDER])
    assert np.array_equal(G, lemma_gram_matrix(0.0))
    with pytest.raises(ValueError):
        gram_objective(parse("x1^4", 1), [(), (1,)])


# -- values ----------------------------------------------------------------

def test_hermitian_square_dense():
    res = solve_relaxation(build_eig(parse("x1^2", 1), order=1))
    assert res.bound == pytest.approx(0.0, abs=1e-6)


def test_commuting_triangle():
    prob = example_commuting_triangle()
    pat = assemble_pattern(prob.objective, prob.constraints, prob.cliques)
    sparse = solve_relaxation(build_eig(prob.objective, prob.constraints, 1, pat))
    dense = solve_relaxation(build_eig(prob.objective, prob.constraints, 1))
    assert sparse.bound == pytest.approx(-3.0, abs=1e-6)
    assert dense.bound == pytest.approx(0.0, abs=1e-6)
    assert sparse.moment_value == pytest.approx(sparse.bound, abs=1e-6)


def test_trace_of_commutator_is_zero():
    R = build_trace(parse("x1*x2 - x2*x1", 2))
    assert R.const == 0.0 and R.m_sdp == 0
    assert solve_relaxation(R).bound == pytest.approx(0.0, abs=1e-8)


def test_odd_cyclic_degree_is_unbounded():
    with pytest.raises(UnboundedBelow):
        build_trace(parse("x1^3 + x1*x2*x2", 2))
    # a constrained odd problem is fine
    build_trace(parse("x1^3", 1), [parse("1 - x1^2", 1)])


def test_commutator_square_trace():
    f = parse("(x1*x2 - x2*x1)^2 + 1", 2)
    # unconstrained, tr f = 1 - tr(c* c) is unbounded below
    assert solve_relaxation(build_trace(f, order=2)).status == SolverStatus.DUAL_INFEASIBLE
    ball = [parse("1 - x1^2 - x2^2", 2)]
    res = solve_relaxation(build_trace(f, ball, order=2))
    assert res.status == SolverStatus.OPTIMAL
    assert res.bound < 1
    # X1 = Z/sqrt2, X2 = X/sqrt2 is on the ball and gives tr f = 0
    A = [np.diag([1.0, -1.0]) / np.sqrt(2), np.array([[0.0, 1.0], [1.0, 0.0]]) / np.sqrt(2)]
    assert np.trace(evaluate(f, A)) / 2 == pytest.approx(0.0, abs=1e-12)
    assert res.bound <= 1e-6
    rng = np.random.default_rng(1)
    for _ in range(200):
        B = random_tuple(rng, 2, 2)
        s = np.linalg.eigvalsh(B[0] @ B[0] + B[1] @ B[1])[-1]
        B = [b / np.sqrt(max(s, 1.0)) for b in B]
        assert res.bound <= np.trace(evaluate(f, B)) / 2 + 1e-6


def test_moment_value_matches_bound():
    f = parse("x1^2*x2^2 + x2^2*x1^2 - x1*x2 - x2*x1", 2)
    S = [parse("1 - x1^2", 2), parse("1 - x2^2", 2)]
    res = solve_relaxation(build_eig(f, S, 2))
    assert res.status == SolverStatus.OPTIMAL
    assert res.moment_value == pytest.approx(res.bound, abs=1e-6)
    assert res.relaxation.value(res.y) == pytest.approx(res.moment_value, abs=1e-12)


def test_kind_recorded():
    assert build_trace(parse("x1^2", 1)).kind == RelaxKind.TRACE
    assert build_eig(parse("x1^2", 1)).kind == RelaxKind.EIG
