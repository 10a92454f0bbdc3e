"""
Benchmark polynomials, constraint families and reference problems.

Squares of a symmetric expression ``h`` are expanded as ``h* h`` and fourth
powers as ``(h^2)* (h^2)``, so every generated objective is symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ncpoly import NCPolynomial, parse, words_up_to

__all__ = [
    "chained_singular",
    "chained_singular_windows",
    "generalized_rosenbrock",
    "polydisc",
    "polyball",
    "constraint_family",
    "random_cubic",
    "Problem",
    "example_commuting_triangle",
    "lemma_gram_polynomial",
    "lemma_gram_matrix",
    "random_cubic_example",
    "chained_singular_cliques",
    "random_cubic_cliques",
    "family_problem",
    "RunReport",
    "build_relaxation",
    "run_problem",
    "reference_values",
    "reproduce_tables",
]


def _x(i: int, n: int) -> NCPolynomial:
    return NCPolynomial.variable(i, n)


def _sq(h: NCPolynomial) -> NCPolynomial:
    return h.star() * h


def chained_singular_windows(n: int) -> list[int]:
    """Start indices ``i`` of the windows ``{i, .., i+3}``: ``1, 3, 5, .., n-3``."""
    if n < 4 or n % 4:
        raise ValueError("chained singular needs n divisible by 4")
    return list(range(1, n - 2, 2))


def chained_singular(n: int) -> NCPolynomial:
    """Chained singular function in ``n`` variables (``n`` divisible by 4)."""
    f = NCPolynomial({}, n)
    for i in chained_singular_windows(n):
        a, b, c, d = (_x(i + k, n) for k in range(4))
        f = (f + _sq(a + 10 * b) + 5 * _sq(c - d)
             + _sq(_sq(b - 2 * c)) + 10 * _sq(_sq(a - d)))
    return f


def generalized_rosenbrock(n: int) -> NCPolynomial:
    """``1 + sum_{i<n} 100 (X_{i+1} - X_i^2)^2 + (1 - X_{i+1})^2``."""
    if n < 2:
        raise ValueError("generalized Rosenbrock needs n >= 2")
    f = NCPolynomial.constant(1.0, n)
    for i in range(1, n):
        a, b = _x(i, n), _x(i + 1, n)
        f = f + 100 * _sq(b - a * a) + _sq(1 - b)
    return f


def polydisc(n: int) -> list[NCPolynomial]:
    """``1 - X_i^2`` and ``X_i - 1/3`` for every variable."""
    out = [1 - _x(i, n) * _x(i, n) for i in range(1, n + 1)]
    out += [_x(i, n) - 1.0 / 3.0 for i in range(1, n + 1)]
    return out


def polyball(n: int) -> list[NCPolynomial]:
    """``1 - X_k^2 - X_{k+1}^2 - X_{k+2}^2`` for ``k = 1 .. n-2``."""
    out = []
    for k in range(1, n - 1):
        g = NCPolynomial.constant(1.0, n)
        for j in (k, k + 1, k + 2):
            g = g - _x(j, n) * _x(j, n)
        out.append(g)
    return out


def constraint_family(name: str, n: int) -> list[NCPolynomial]:
    name = name.lower()
    if name in ("none", ""):
        return []
    if name == "polydisc":
        return polydisc(n)
    if name == "polyball":
        return polyball(n)
    raise ValueError(f"unknown constraint family {name!r}")


def random_cubic(n: int, seed: int, low: int = -7, high: int = 7) -> NCPolynomial:
    """Sum over cliques ``{k, k+1, k+2}`` of random cubics ``h``, returned as ``h + h*``.

    Every word of degree at most 3 in a clique gets an integer coefficient
    drawn uniformly from ``[low, high]``.
    """
    if n < 3:
        raise ValueError("random cubic needs n >= 3")
    rng = np.random.default_rng(seed)
    acc: dict[tuple[int, ...], float] = {}
    for k in range(1, n - 1):
        for w in words_up_to((k, k + 1, k + 2), 3):
            acc[w] = acc.get(w, 0.0) + float(rng.integers(low, high + 1))
    h = NCPolynomial(acc, n)
    return h + h.star()


# ---------------------------------------------------------------------------
# reference problems


@dataclass
class Problem:
    name: str
    nvars: int
    objective: NCPolynomial
    constraints: list[NCPolynomial] = field(default_factory=list)
    cliques: list[list[int]] | None = None


def example_commuting_triangle() -> Problem:
    """``(X1+X2+X3)^2`` on the polydisc with the cliques of a triangle.

    The three cliques ``{1,2}, {2,3}, {1,3}`` violate the running
    intersection property; the sparse relaxation gives -3 while the true
    minimum is 0.
    """
    n = 3
    s = _x(1, n) + _x(2, n) + _x(3, n)
    S = [1 - _x(i, n) * _x(i, n) for i in range(1, n + 1)]
    return Problem("triangle", n, _sq(s), S, [[1, 2], [2, 3], [1, 3]])


LEMMA_BORDER = ((1,), (1, 2), (2,), (3,), (3, 2))


def lemma_gram_matrix(alpha: float = 0.5) -> np.ndarray:
    a = alpha
    return np.array([
        [1, -1, -1, 0, a],
        [-1, 2, 0, -a, 0],
        [-1, 0, 3, -1, 9],
        [0, -a, -1, 6, -27],
        [a, 0, 9, -27, 142],
    ], dtype=float)


def lemma_gram_polynomial() -> Problem:
    """A sum of hermitian squares in 3 variables with no sparse certificate.

    ``f = v G v*`` for the row vector ``v`` of ``LEMMA_BORDER``.  ``G`` is
    positive semidefinite for ``alpha`` roughly in ``[0.2706, 1.1075]`` and
    ``f`` does not depend on ``alpha``.
    """
    n = 3
    f = parse("x1^2 - x1*x2 - x2*x1 + 3*x2^2 - 2*x1*x2*x1 + 2*x1*x2^2*x1 - x2*x3 - x3*x2"
              " + 6*x3^2 + 9*x2^2*x3 + 9*x3*x2^2 - 54*x3*x2*x3 + 142*x3*x2^2*x3", n)
    return Problem("lemma", n, f, [], [[1, 2], [2, 3]])


# objective of the random cubic instance with two ball constraints, as printed
_RC_F1 = ("4 - x1 + 3*x2 - 3*x3 - 3*x1^2 - 7*x1*x2 + 6*x1*x3 - x2*x1 - 5*x3*x1 + 5*x3*x2"
          " - 5*x1^3 - 3*x1^2*x3 + 4*x1*x2*x1 - 6*x1*x2*x3 + 7*x1*x3*x1 + 2*x1*x3*x2"
          " - x1*x3^2 - x2*x1^2 + 3*x2*x1*x2 - x2*x1*x3 - 2*x2^3 - 5*x2^2*x3 - 4*x2*x3^2"
          " - 5*x3*x1^2 + 7*x3*x1*x2 + 6*x3*x2*x1 - 4*x3*x2*x2 - x3^2*x1 - 2*x3^2*x2"
          " + 7*x3^3")
_RC_F2 = ("-1 + 6*x2 + 5*x3 + 3*x4 - 5*x2^2 + 2*x2*x3 + 4*x2*x4 - 4*x3*x2 + x3^2 - x3*x4"
          " + x4*x2 - x4*x3 + 2*x4^2 - 7*x2^3 + 4*x2*x3^2 + 5*x2*x3*x4 - 7*x2*x4*x3"
          " - 7*x2*x4^2 + x3*x2^2 + 6*x3*x2*x3 - 6*x3*x2*x4 - 3*x3^2*x2 - 7*x3^2*x4"
          " + 6*x3*x4*x2 - 3*x3*x4*x3 - 7*x3*x4^2 + 3*x4*x2^2 - 7*x4*x2*x3 - x4*x2*x4"
          " - 5*x4*x3^2 + 7*x4*x3*x4 + 6*x4^2*x2 - 4*x4^3")

RANDOM_CUBIC_TEXT = (_RC_F1, _RC_F2)

#: extracted minimizer printed for the random cubic example (4x4, rounded)
RANDOM_CUBIC_MINIMIZER = (
    [[0.0059, 0.0481, 0.1638, 0.4570], [0.0481, -0.2583, 0.5629, -0.2624],
     [0.1638, 0.5629, 0.3265, -0.3734], [0.4570, -0.2624, -0.3734, -0.2337]],
    [[-0.3502, 0.0080, 0.1411, 0.0865], [0.0080, -0.4053, 0.2404, -0.1649],
     [0.1411, 0.2404, -0.0959, 0.3652], [0.0865, -0.1649, 0.3652, 0.4117]],
    [[-0.7669, -0.0074, -0.1313, -0.0805], [-0.0074, -0.4715, -0.2238, 0.1535],
     [-0.1313, -0.2238, 0.0848, -0.3400], [-0.0805, 0.1535, -0.3400, -0.2126]],
    [[0.3302, -0.1839, 0.1811, -0.0404], [-0.1839, -0.1069, 0.5114, -0.0570],
     [0.1811, 0.5114, 0.1311, -0.3664], [-0.0404, -0.0570, -0.3664, 0.4440]],
)
RANDOM_CUBIC_VECTOR = (0.1546, -0.2507, 0.8840, -0.3631)


def random_cubic_example(symmetrize: bool = True) -> Problem:
    """Random cubic in 4 variables on two overlapping balls.

    The printed objective ``h`` is not symmetric.  The reference values
    (bounds near -27.5 and the printed ``f(A)``) belong to ``h + h*``, which is
    what ``symmetrize=True`` returns.
    """
    n = 4
    f = parse(_RC_F1, n) + parse(_RC_F2, n)
    if symmetrize:
        f = f + f.star()
    S = [parse("1 - x1^2 - x2^2 - x3^2", n), parse("1 - x2^2 - x3^2 - x4^2", n)]
    return Problem("random_cubic", n, f, S, [[1, 2, 3], [2, 3, 4]])


def chained_singular_cliques(n: int) -> list[list[int]]:
    """Window cliques ``{i, .., i+3}`` of the chained singular function."""
    return [list(range(i, i + 4)) for i in chained_singular_windows(n)]


def random_cubic_cliques(n: int) -> list[list[int]]:
    return [[k, k + 1, k + 2] for k in range(1, n - 1)]


FAMILIES = ("chained-singular", "generalized-rosenbrock", "random-cubic")


def family_problem(family: str, n: int, constraints: str = "none",
                   seed: int | None = None) -> Problem:
    """Benchmark instance by family name.

    The clique list is the natural one of the family; detection from the
    sparsity graph is still available through ``cliques=None`` downstream.
    """
    family = family.lower()
    S = constraint_family(constraints, n)
    if family == "chained-singular":
        return Problem(f"f_cs(n={n})", n, chained_singular(n), S, chained_singular_cliques(n))
    if family == "generalized-rosenbrock":
        return Problem(f"f_gR(n={n})", n, generalized_rosenbrock(n), S, None)
    if family == "random-cubic":
        if seed is None:
            raise ValueError("random-cubic needs an explicit seed")
        return Problem(f"random_cubic(n={n}, seed={seed})", n, random_cubic(n, seed), S,
                       random_cubic_cliques(n))
    raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


# ---------------------------------------------------------------------------
# running instances


@dataclass
class RunReport:
    """Outcome of one relaxation run, serializable with :meth:`to_dict`."""

    name: str
    kind: str
    mode: str
    order: int
    status: str
    bound: float | None
    moment_value: float | None
    m_sdp: int
    n_sdp: int
    block_sizes: list[int]
    cliques: list[list[int]]
    seconds: float
    accuracy: float | None = None
    extraction: dict | None = None
    verification: dict | None = None
    message: str = ""

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def build_relaxation(problem: Problem, order: int | None = None, sparse: bool = True,
                     kind: str = "eig", ball: float | None = None,
                     detect: bool = False, localize: str = "assigned"):
    """Relaxation object for ``problem`` without solving it."""
    from .relax import build_eig, build_trace
    from .sparsity import add_ball_constraints, assemble_pattern

    f, S = problem.objective, list(problem.constraints)
    pattern = None
    if sparse:
        cliques = None if detect else problem.cliques
        pattern = assemble_pattern(f, S, cliques)
        if ball is not None:
            S, pattern = add_ball_constraints(pattern, S, ball)
    elif ball is not None:
        n = problem.nvars
        S = S + [NCPolynomial({(): float(ball), **{(j, j): -1.0 for j in range(1, n + 1)}}, n)]
    if kind == "eig":
        return build_eig(f, S, order, pattern, localize=localize)
    return build_trace(f, S, order, pattern, localize=localize)


def run_problem(problem: Problem, order: int | None = None, sparse: bool = True,
                kind: str = "eig", ball: float | None = None, extract: bool = False,
                detect: bool = False, localize: str = "assigned", options=None,
                rank_tol: float = 1e-6) -> RunReport:
    """Build, solve and optionally extract; never raises on solver trouble."""
    import time

    from .gns import ExtractionUnavailable, NumericalFailure, sparse_gns, verify_extraction
    from .relax import solve_relaxation

    t0 = time.perf_counter()
    R = build_relaxation(problem, order, sparse, kind, ball, detect, localize)
    res = solve_relaxation(R, options)
    sol = res.solution
    acc = max(sol.pinf, sol.dinf, sol.relgap)
    rep = RunReport(problem.name, kind, "sparse" if sparse else "dense", R.order,
                    sol.status.value, res.bound, res.moment_value, R.m_sdp, R.n_sdp,
                    R.block_sizes, R.pattern.cliques, 0.0, acc)
    if extract:
        try:
            ex = sparse_gns(res, rel_tol=rank_tol)
            rep.extraction = ex.to_dict()
            rep.verification = verify_extraction(
                problem.objective, R.constraints, ex, res.bound).to_dict()
        except (ExtractionUnavailable, NumericalFailure) as exc:
            rep.extraction = {"available": False, "reason": str(exc),
                              "error": type(exc).__name__}
    rep.seconds = time.perf_counter() - t0
    return rep


def reference_values() -> dict:
    """Published values bundled with the package."""
    import json
    from importlib import resources

    return json.loads(resources.files("ncsparse").joinpath("data/reference_values.json")
                      .read_text())


def reproduce_tables(max_n: int = 12, tables: tuple[str, ...] = ("table1", "table2"),
                     options=None, rel_tol: float = 1e-3, abs_tol: float = 1e-5,
                     progress=None) -> list[dict]:
    """Run the stored benchmark rows with ``n <= max_n`` and diff the bounds.

    A row passes when ``|bound - expected| <= abs_tol + rel_tol * |expected|``.
    Sizes are reported next to the printed ones but not compared.
    """
    ref = reference_values()
    rows = []
    for table in tables:
        for entry in ref[table]:
            if entry["n"] > max_n:
                continue
            cons = entry.get("constraints", "none")
            prob = family_problem(entry["family"], entry["n"], cons)
            rep = run_problem(prob, order=2, sparse=entry["mode"] == "sparse",
                              localize="all" if cons != "none" else "assigned",
                              options=options)
            exp = entry["value"]
            ok = (rep.bound is not None
                  and abs(rep.bound - exp) <= abs_tol + rel_tol * abs(exp))
            row = {"table": table, "family": entry["family"], "n": entry["n"],
                   "mode": entry["mode"], "constraints": cons, "expected": exp,
                   "bound": rep.bound, "status": rep.status, "pass": bool(ok),
                   "m_sdp": rep.m_sdp, "n_sdp": rep.n_sdp,
                   "m_sdp_printed": entry.get("m_sdp"), "n_sdp_printed": entry.get("n_sdp"),
                   "seconds": rep.seconds}
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows
