"""
Dense and sparse moment relaxations for eigenvalue and trace minimization.

A relaxation of order ``s`` replaces a polynomial optimization problem by an
SDP in moment variables ``L(w)``.  Moments are identified by a key:

* eigenvalue problems use ``min(w, w*)``, since ``L`` is symmetric;
* trace problems use the cyclic canonical form of ``w``.

The unit moment is fixed to 1 by substitution, so it never becomes a
variable.  With a sparsity pattern every clique gets its own moment matrix
over the words in its variables, and localizing matrices are built in the
clique a constraint is assigned to.  Moment variables are shared between
cliques, which is what ties the clique blocks together.

The SOHS bound is read from the dual of the SDP and the moment value from
the primal; both are returned by :func:`solve_relaxation`.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .ncpoly import (NCPolynomial, Word, cyclic_canonical, cyclic_project, glex_key,
                     newton_chip, star, words_up_to)
from .sdpsolver import BlockSDP, SDPBlock, SDPSolution, SolverOptions, solve
from .sparsity import SparsityPattern, assemble_pattern

__all__ = [
    "RelaxKind",
    "UnboundedBelow",
    "LMIBlockInfo",
    "MomentRelaxation",
    "RelaxationResult",
    "eig_key",
    "trace_key",
    "build_eig",
    "build_trace",
    "gram_objective",
    "solve_relaxation",
]


class RelaxKind(str, enum.Enum):
    EIG = "eig"
    TRACE = "trace"


class UnboundedBelow(ValueError):
    """The trace of the objective is unbounded below on the given domain."""


def eig_key(w: Word) -> Word:
    """Representative of ``{w, w*}`` in graded-lex order."""
    s = star(w)
    return min(w, s)


def trace_key(w: Word) -> Word:
    return cyclic_canonical(w)


@dataclass
class LMIBlockInfo:
    """Provenance of one SDP block."""

    label: str
    clique: int
    basis: list[Word]
    constraint: int | None = None


@dataclass
class MomentRelaxation:
    """A moment relaxation and the SDP that represents it.

    The SDP maximizes ``-(q @ y)``; the relaxation value is
    ``const + q @ y`` at the optimum.
    """

    kind: RelaxKind
    order: int
    objective: NCPolynomial
    constraints: list[NCPolynomial]
    pattern: SparsityPattern
    dense: bool
    keys: list[Word]
    index: dict[Word, int]
    q: np.ndarray
    const: float
    blocks: list[LMIBlockInfo]
    sdp: BlockSDP
    newton: bool = False

    @property
    def m_sdp(self) -> int:
        """Number of moment variables."""
        return len(self.keys)

    @property
    def n_sdp(self) -> int:
        """Sum of squared block sizes."""
        return int(sum(len(b.basis) ** 2 for b in self.blocks))

    @property
    def block_sizes(self) -> list[int]:
        return [len(b.basis) for b in self.blocks]

    def key(self, w: Word) -> Word:
        return eig_key(w) if self.kind == RelaxKind.EIG else trace_key(w)

    def moment(self, y: np.ndarray, w: Word) -> float:
        """``L(w)`` for a solution vector ``y``.

        Words whose key is not a variable of the relaxation raise ``KeyError``.
        """
        k = self.key(tuple(w))
        if k == ():
            return 1.0
        return float(y[self.index[k]])

    def moment_matrix(self, y: np.ndarray, basis: Sequence[Word]) -> np.ndarray:
        n = len(basis)
        M = np.empty((n, n))
        for a in range(n):
            sa = star(basis[a])
            for b in range(a, n):
                M[a, b] = M[b, a] = self.moment(y, sa + basis[b])
        return M

    def value(self, y: np.ndarray) -> float:
        return float(self.const + self.q @ y)


@dataclass
class RelaxationResult:
    relaxation: MomentRelaxation
    solution: SDPSolution
    #: SOHS bound from the dual certificate
    bound: float
    #: value of the moment problem at the primal iterate
    moment_value: float

    @property
    def status(self):
        return self.solution.status

    @property
    def y(self) -> np.ndarray:
        return self.solution.y


# ---------------------------------------------------------------------------


class _Table:
    def __init__(self, keyfun):
        self.keyfun = keyfun
        self.index: dict[Word, int] = {}

    def var(self, w: Word) -> int:
        """Variable id of ``w``, ``-1`` for the unit word."""
        k = self.keyfun(w)
        if k == ():
            return -1
        got = self.index.get(k)
        if got is None:
            got = len(self.index)
            self.index[k] = got
        return got


def _check_symmetric(g: NCPolynomial, what: str) -> None:
    if not g.is_symmetric(tol=1e-12 * max(1.0, max((abs(c) for _, c in g.items()),
                                                    default=0.0))):
        raise ValueError(f"{what} must be symmetric")


def _min_order(f: NCPolynomial, constraints: Sequence[NCPolynomial]) -> int:
    degs = [0 if f.is_zero else f.degree] + [0 if g.is_zero else g.degree
                                             for g in constraints]
    return max(math.ceil(d / 2) for d in degs)


def _localizer_order(g: NCPolynomial) -> int:
    return 0 if g.is_zero else math.ceil(g.degree / 2)


def _build(kind: RelaxKind, f: NCPolynomial, constraints: Sequence[NCPolynomial], order: int,
           pattern: SparsityPattern | None, newton: bool | None, localize: str
           ) -> MomentRelaxation:
    constraints = list(constraints)
    n = max([f.nvars] + [g.nvars for g in constraints])
    if kind == RelaxKind.EIG:
        _check_symmetric(f, "objective")
    for j, g in enumerate(constraints):
        _check_symmetric(g, f"constraint {j + 1}")
    dense = pattern is None
    if dense:
        pattern = assemble_pattern(f, constraints, cliques=[list(range(1, n + 1))])
    if order < _min_order(f, constraints):
        raise ValueError(f"relaxation order {order} is below the minimum "
                         f"{_min_order(f, constraints)}")
    if newton is None:
        newton = (dense and kind == RelaxKind.EIG and not constraints
                  and not f.is_zero and f.degree % 2 == 0)
    if newton and not (dense and not constraints):
        raise ValueError("the Newton chip basis applies to unconstrained dense problems only")

    table = _Table(eig_key if kind == RelaxKind.EIG else trace_key)
    raw_blocks: list[tuple[LMIBlockInfo, NCPolynomial]] = []
    one = NCPolynomial.constant(1.0, n)
    for k, clique in enumerate(pattern.cliques):
        if newton:
            basis = sorted({()} | set(newton_chip(f)), key=glex_key)
        else:
            basis = words_up_to(clique, order)
        raw_blocks.append((LMIBlockInfo(f"M{k + 1}", k, basis), one))
    for j, g in enumerate(constraints):
        if localize == "assigned":
            homes = [pattern.assignment[j]]
        elif localize == "all":
            sup = set(g.support())
            homes = [k for k, c in enumerate(pattern.cliques) if sup <= set(c)]
        else:
            raise ValueError(f"unknown localize mode {localize!r}")
        dj = _localizer_order(g)
        for k in homes:
            basis = words_up_to(pattern.cliques[k], order - dj)
            raw_blocks.append((LMIBlockInfo(f"L{j + 1}.{k + 1}", k, basis, j), g))

    block_entries = []
    for info, g in raw_blocks:
        B = info.basis
        F0 = np.zeros((len(B), len(B)))
        ents = []
        gterms = list(g.items())
        for a in range(len(B)):
            sa = star(B[a])
            for b in range(a, len(B)):
                for w, cw in gterms:
                    v = table.var(sa + w + B[b])
                    if v < 0:
                        F0[a, b] += cw
                        if a != b:
                            F0[b, a] += cw
                    else:
                        ents.append((v, a, b, cw))
        block_entries.append((info, F0, ents))

    obj = cyclic_project(f) if kind == RelaxKind.TRACE else f
    const = obj.coefficient(())
    qpairs = []
    for w, cw in obj.items():
        if w == ():
            continue
        qpairs.append((table.var(w), cw))

    # renumber variables in graded-lex order of their keys
    keys = sorted(table.index, key=glex_key)
    perm = {table.index[k]: i for i, k in enumerate(keys)}
    index = {k: i for i, k in enumerate(keys)}
    m = len(keys)
    q = np.zeros(m)
    for v, cw in qpairs:
        q[perm[v]] += cw
    blocks = []
    infos = []
    for info, F0, ents in block_entries:
        ents = [(perm[v], a, b, x) for v, a, b, x in ents]
        blocks.append(SDPBlock.from_entries(len(info.basis), F0, ents, label=info.label))
        infos.append(info)
    sdp = BlockSDP(-q, blocks)
    return MomentRelaxation(kind, order, f, constraints, pattern, dense, keys, index, q,
                            const, infos, sdp, newton)


def build_eig(f: NCPolynomial, constraints: Sequence[NCPolynomial] = (), order: int | None = None,
              pattern: SparsityPattern | None = None, newton: bool | None = None,
              localize: str = "assigned") -> MomentRelaxation:
    """Moment relaxation for the smallest eigenvalue of ``f`` on ``D_S``.

    Parameters
    ----------
    f : NCPolynomial
        Symmetric objective.
    constraints : sequence of NCPolynomial
        Symmetric ``g_j`` describing ``D_S = {A : g_j(A) >= 0}``.
    order : int, optional
        Relaxation order ``s``.  Defaults to the smallest admissible one.
    pattern : SparsityPattern, optional
        Clique structure.  ``None`` builds the dense relaxation.
    newton : bool, optional
        Use the Newton chip basis.  By default this happens exactly for
        dense problems without constraints.
    localize : {"assigned", "all"}
        Put each localizing matrix only in the clique the constraint is
        assigned to, or in every clique that contains its support.
    """
    s = order if order is not None else _min_order(f, constraints)
    return _build(RelaxKind.EIG, f, constraints, s, pattern, newton, localize)


def build_trace(f: NCPolynomial, constraints: Sequence[NCPolynomial] = (),
                order: int | None = None, pattern: SparsityPattern | None = None,
                localize: str = "assigned") -> MomentRelaxation:
    """Moment relaxation for the smallest normalized trace of ``f`` on ``D_S``.

    Raises
    ------
    UnboundedBelow
        If there are no constraints and the cyclic degree of ``f`` is odd.
    """
    fc = cyclic_project(f)
    if not constraints and not fc.is_zero and fc.degree % 2 == 1:
        raise UnboundedBelow(f"cyclic degree {fc.degree} is odd")
    need = _min_order(fc, constraints)
    s = order if order is not None else need
    return _build(RelaxKind.TRACE, fc, constraints, s, pattern, False, localize)


def gram_objective(f: NCPolynomial, basis: Sequence[Word]) -> np.ndarray:
    """Symmetric ``G`` with ``f = sum_ab G_ab * b_a^* b_b`` over ``basis``.

    Each word is split as evenly as possible.  Raises ``ValueError`` when a
    monomial of ``f`` cannot be written as ``u* v`` with ``u, v`` in the basis.
    """
    pos = {tuple(w): i for i, w in enumerate(basis)}
    G = np.zeros((len(basis), len(basis)))
    for w, c in f.items():
        best = None
        for k in range(len(w) + 1):
            u, v = star(w[:k]), w[k:]
            if u in pos and v in pos:
                score = abs(len(u) - len(v))
                if best is None or score < best[0]:
                    best = (score, pos[u], pos[v])
        if best is None:
            raise ValueError(f"monomial {w} is not representable in the basis")
        _, a, b = best
        G[a, b] += c / 2
        G[b, a] += c / 2
    return G


def solve_relaxation(R: MomentRelaxation, options: SolverOptions | None = None,
                     **kw) -> RelaxationResult:
    """Solve the SDP of ``R`` and return bound and moment value."""
    sol = solve(R.sdp, options, **kw)
    bound = R.const - sol.dobj
    value = R.const - sol.pobj
    return RelaxationResult(R, sol, bound, value)
