"""
Correlative sparsity: variable graphs, chordal cliques and term assignment.

The correlative sparsity graph has one vertex per variable and an edge
between two variables whenever they occur together in a monomial of the
objective or in the support of a constraint.  Its chordal extension is
computed by greedy minimum-degree elimination, and the maximal cliques are
listed along a clique tree so that the running intersection property holds.

Cliques are 1-based sorted lists of variable indices, matching the word
convention in :mod:`ncsparse.ncpoly`.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import networkx as nx

from .ncpoly import NCPolynomial, Word

__all__ = [
    "PatternError",
    "UncoveredConstraint",
    "UncoveredMonomial",
    "RipCheck",
    "SparsityPattern",
    "csp_graph",
    "chordal_cliques",
    "check_rip",
    "assemble_pattern",
    "add_ball_constraints",
]


class PatternError(ValueError):
    """Base class for invalid sparsity patterns."""


class UncoveredConstraint(PatternError):
    def __init__(self, index: int):
        super().__init__(f"constraint {index} is not contained in any clique")
        self.index = index


class UncoveredMonomial(PatternError):
    def __init__(self, word: Word):
        super().__init__(f"monomial {word} is not contained in any clique")
        self.word = word


class RipCheck(NamedTuple):
    ok: bool
    #: 1-based index of the first clique violating the property, or None
    violating: int | None


@dataclass
class SparsityPattern:
    """Cliques plus the split of objective and constraints over them.

    Attributes
    ----------
    cliques : list of list of int
        Sorted 1-based variable sets ``I_1..I_p``.
    parts : list of NCPolynomial
        ``parts[k]`` is the share ``f_k`` of the objective; ``sum(parts) == f``.
    assignment : dict
        Constraint index (0-based) to clique index (0-based).
    rip : bool
        Whether the clique order satisfies the running intersection property.
    """

    cliques: list[list[int]]
    parts: list[NCPolynomial]
    assignment: dict[int, int]
    rip: bool = True
    overlaps: list[list[int]] = field(default_factory=list)

    @property
    def p(self) -> int:
        return len(self.cliques)

    def to_json(self) -> str:
        """Serialize with 1-based clique and constraint numbers."""
        doc = {
            "cliques": [list(c) for c in self.cliques],
            "assignment": {str(j + 1): k + 1 for j, k in sorted(self.assignment.items())},
        }
        return json.dumps(doc)

    @staticmethod
    def cliques_from_json(text: str) -> tuple[list[list[int]], dict[int, int]]:
        doc = json.loads(text)
        cliques = [sorted(int(i) for i in c) for c in doc["cliques"]]
        assignment = {int(j) - 1: int(k) - 1 for j, k in doc.get("assignment", {}).items()}
        return cliques, assignment


def csp_graph(f: NCPolynomial, constraints: Sequence[NCPolynomial] = (),
              nvars: int | None = None) -> nx.Graph:
    """Correlative sparsity graph on vertices ``1..n``."""
    n = nvars or max([f.nvars] + [g.nvars for g in constraints])
    G = nx.Graph()
    G.add_nodes_from(range(1, n + 1))
    groups = [set(w) for w in f.words()] + [set(g.support()) for g in constraints]
    for grp in groups:
        items = sorted(grp)
        for a in range(len(items)):
            for b in range(a + 1, len(items)):
                G.add_edge(items[a], items[b])
    return G


def _min_degree_fill(G: nx.Graph) -> nx.Graph:
    """Chordal extension by greedy minimum-degree elimination.

    Ties go to the smallest vertex index.
    """
    H = G.copy()
    work = {v: set(G.neighbors(v)) for v in G.nodes}
    while work:
        v = min(work, key=lambda u: (len(work[u]), u))
        nb = sorted(work.pop(v))
        for a in range(len(nb)):
            for b in range(a + 1, len(nb)):
                if nb[b] not in work[nb[a]]:
                    work[nb[a]].add(nb[b])
                    work[nb[b]].add(nb[a])
                    H.add_edge(nb[a], nb[b])
        for u in nb:
            work[u].discard(v)
    return H


def _clique_tree_order(cliques: list[list[int]]) -> list[list[int]]:
    """Order cliques by a breadth-first walk of a maximum-weight clique tree."""
    if len(cliques) <= 1:
        return cliques
    cliques = sorted(cliques)
    T = nx.Graph()
    T.add_nodes_from(range(len(cliques)))
    for a in range(len(cliques)):
        for b in range(a + 1, len(cliques)):
            w = len(set(cliques[a]) & set(cliques[b]))
            T.add_edge(a, b, weight=w)
    tree = nx.maximum_spanning_tree(T, weight="weight", algorithm="prim")
    order: list[int] = []
    seen = set()
    # components of a disconnected graph are joined by zero-weight edges,
    # so a single walk from the first clique reaches every node
    queue = [0]
    seen.add(0)
    while queue:
        a = queue.pop(0)
        order.append(a)
        for b in sorted(tree.neighbors(a)):
            if b not in seen:
                seen.add(b)
                queue.append(b)
    return [cliques[a] for a in order]


def chordal_cliques(G: nx.Graph) -> list[list[int]]:
    """Maximal cliques of a chordal extension of ``G`` in RIP order.

    A graph that is already chordal is not modified, so its maximal cliques
    are returned unchanged apart from ordering.
    """
    H = G if nx.is_chordal(G) else _min_degree_fill(G)
    cliques = [sorted(c) for c in nx.chordal_graph_cliques(H)]
    return _clique_tree_order(cliques)


def check_rip(cliques: Sequence[Sequence[int]]) -> RipCheck:
    """Check ``I_{k+1} ∩ (I_1 ∪ ... ∪ I_k) ⊆ I_t`` for some ``t <= k``."""
    seen: set[int] = set()
    for k, c in enumerate(cliques):
        c = set(c)
        if k > 0:
            inter = c & seen
            if not any(inter <= set(prev) for prev in cliques[:k]):
                return RipCheck(False, k + 1)
        seen |= c
    return RipCheck(True, None)


def _first_fit(vars_: set[int], cliques: Sequence[Sequence[int]]) -> int | None:
    for k, c in enumerate(cliques):
        if vars_ <= set(c):
            return k
    return None


def assemble_pattern(f: NCPolynomial, constraints: Sequence[NCPolynomial] = (),
                     cliques: Sequence[Sequence[int]] | None = None,
                     assignment: dict[int, int] | None = None) -> SparsityPattern:
    """Split ``f`` and the constraints over cliques.

    Parameters
    ----------
    f : NCPolynomial
    constraints : sequence of NCPolynomial
    cliques : sequence of sequences of int, optional
        Given cliques.  If omitted they are detected from the correlative
        sparsity graph.
    assignment : dict, optional
        Explicit constraint-to-clique map (0-based), checked for coverage.

    Raises
    ------
    UncoveredMonomial, UncoveredConstraint
        If some term or constraint does not fit in any clique.
    """
    n = max([f.nvars] + [g.nvars for g in constraints])
    if cliques is None:
        cliques = chordal_cliques(csp_graph(f, constraints, n))
    cliques = [sorted(int(i) for i in c) for c in cliques]

    buckets: list[dict[Word, float]] = [{} for _ in cliques]
    for w, c in f.items():
        k = _first_fit(set(w), cliques)
        if k is None:
            raise UncoveredMonomial(w)
        buckets[k][w] = c
    parts = [NCPolynomial(b, n) for b in buckets]

    assign: dict[int, int] = {}
    for j, g in enumerate(constraints):
        if assignment is not None and j in assignment:
            k = assignment[j]
            if not set(g.support()) <= set(cliques[k]):
                raise UncoveredConstraint(j + 1)
        else:
            k = _first_fit(set(g.support()), cliques)
            if k is None:
                raise UncoveredConstraint(j + 1)
        assign[j] = k

    rip = check_rip(cliques).ok
    overlaps = []
    for k in range(1, len(cliques)):
        prev = set().union(*map(set, cliques[:k]))
        overlaps.append(sorted(set(cliques[k]) & prev))
    return SparsityPattern(cliques, parts, assign, rip, overlaps)


def add_ball_constraints(pattern: SparsityPattern, constraints: Sequence[NCPolynomial],
                         radius2: float) -> tuple[list[NCPolynomial], SparsityPattern]:
    """Append ``N - sum_{j in I_k} X_j^2`` for every clique.

    Returns the extended constraint list and a pattern whose assignment sends
    each new constraint to its own clique.
    """
    n = max([g.nvars for g in constraints] + [max(max(c) for c in pattern.cliques)]
            + [p.nvars for p in pattern.parts])
    out = list(constraints)
    assign = dict(pattern.assignment)
    for k, c in enumerate(pattern.cliques):
        ball = NCPolynomial({(): float(radius2), **{(j, j): -1.0 for j in c}}, n)
        assign[len(out)] = k
        out.append(ball)
    return out, SparsityPattern(pattern.cliques, pattern.parts, assign, pattern.rip,
                                pattern.overlaps)
