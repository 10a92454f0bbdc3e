import numpy as np
import pytest

from ncsparse.ncpoly import NCPolynomial, words_up_to
from ncsparse.sdpsolver import BlockSDP, SDPBlock


def random_poly(rng, n, deg, density=0.5, scale=3):
    """Random polynomial with integer coefficients in ``[-scale, scale]``."""
    terms = {}
    for w in words_up_to(range(1, n + 1), deg):
        if rng.random() < density:
            terms[w] = int(rng.integers(-scale, scale + 1))
    return NCPolynomial(terms, n)


def random_symmetric_poly(rng, n, deg, density=0.5, scale=3):
    h = random_poly(rng, n, deg, density, scale)
    return h + h.star()


def random_tuple(rng, n, r):
    mats = []
    for _ in range(n):
        A = rng.standard_normal((r, r))
        mats.append((A + A.T) / 2)
    return mats


def random_feasible_sdp(rng, m=4, sizes=(3, 2, 1), diagonal_last=True):
    """Strictly feasible SDP with a bounded feasible set.

    ``F0`` is positive definite so ``y = 0`` is interior, and a
    strictly feasible dual certificate keeps the optimum finite.
    """
    blocks = []
    X = []
    for k, s in enumerate(sizes):
        diag = diagonal_last and k == len(sizes) - 1
        ents = []
        for i in range(m):
            for a in range(s):
                for b in range(a, s):
                    if diag and a != b:
                        continue
                    if rng.random() < 0.6:
                        ents.append((i, a, b, float(rng.integers(-4, 5))))
        B = rng.standard_normal((s, s))
        F0 = B @ B.T + s * np.eye(s)
        if diag:
            F0 = np.diag(np.diag(F0))
        blk = SDPBlock.from_entries(s, F0, ents, diagonal=diag)
        blocks.append(blk)
        C = rng.standard_normal((s, s))
        Xk = C @ C.T + np.eye(s)
        X.append(np.diag(np.diag(Xk)) if diag else Xk)
    # c_i = -<F_i, X> makes X dual feasible, so the primal is bounded
    c = np.array([-sum(np.sum(b.matrix(i) * Xk) for b, Xk in zip(blocks, X))
                  for i in range(m)])
    return BlockSDP(c, blocks)


def cvxopt_solve(p: BlockSDP):
    """Optimal value of ``p`` from cvxopt, used as an independent oracle."""
    pytest.importorskip("cvxopt")
    from cvxopt import matrix, solvers
    solvers.options["show_progress"] = False
    solvers.options["abstol"] = 1e-9
    solvers.options["reltol"] = 1e-9
    solvers.options["feastol"] = 1e-9
    Gs, hs = [], []
    for b in p.blocks:
        s = b.size
        # cvxopt wants G x + S = h with S psd: S = F0 + sum y F_i, so G = -F_i
        G = np.zeros((s * s, p.m))
        for i in range(p.m):
            G[:, i] = -b.matrix(i).flatten(order="F")
        Gs.append(matrix(G))
        hs.append(matrix(np.ascontiguousarray(b.F0)))
    sol = solvers.sdp(matrix(-p.c), Gs=Gs, hs=hs)
    assert sol["status"] == "optimal", sol["status"]
    return -sol["primal objective"], np.array(sol["x"]).ravel()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_ball_instance(seed):
    """Random symmetric quartic on overlapping cliques with unit balls.

    Returns ``(f, cliques, balls)``; every monomial of ``f`` lives in one
    clique so the sparse relaxation applies.
    """
    from ncsparse.ncpoly import NCPolynomial

    rng = np.random.default_rng(seed)
    n = 3 if seed % 2 == 0 else 4
    cliques = [[1, 2], [2, 3]] if n == 3 else [[1, 2, 3], [2, 3, 4]]
    f = NCPolynomial({}, n)
    for c in cliques:
        terms = {}
        for w in words_up_to(c, 4):
            if rng.random() < 0.3:
                terms[w] = float(rng.integers(-5, 6))
        h = NCPolynomial(terms, n)
        f = f + h + h.star()
    balls = [NCPolynomial({(): 1.0, **{(j, j): -1.0 for j in c}}, n) for c in cliques]
    return f, cliques, balls


def sampled_upper_bound(f, cliques, n, rng, samples=200):
    """``min lambda_min f(A)`` over random tuples inside the clique balls."""
    from ncsparse.ncpoly import evaluate

    best = np.inf
    for t in range(samples):
        r = 1 + t % 4
        A = random_tuple(rng, n, r)
        # shrink so that sum_{j in I_k} A_j^2 <= I for every clique
        worst = max(np.linalg.eigvalsh(sum(A[j - 1] @ A[j - 1] for j in c))[-1]
                    for c in cliques)
        if worst > 1:
            A = [a / np.sqrt(worst) for a in A]
        A = [a * rng.uniform(0.2, 1.0) for a in A]
        best = min(best, np.linalg.eigvalsh(evaluate(f, A))[0])
    return best


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
