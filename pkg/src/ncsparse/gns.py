"""
Minimizer extraction from flat moment matrices.

Dense case
    A positive semidefinite Hankel matrix ``M_t(L)`` that is flat over
    ``M_{t-delta}(L)`` factors as ``W^T W`` with ``W`` of full row rank
    ``r``.  Column ``u`` of ``W`` represents the word ``u``; left
    multiplication by ``X_i`` maps column ``u`` to column ``X_i u`` and
    defines symmetric ``r x r`` matrices ``A_i``.  The column of the unit
    word is the vector ``v`` with ``L(w) = <w(A) v, v>``.

Sparse case
    Each clique and each overlap gets its own dense GNS representation.  The
    overlap operators split every clique space as ``R^m (x) H_overlap``
    after an orthogonal change of basis, found by block diagonalization and
    intertwiner solves.  Two aligned cliques are glued on a tensor space,
    with a Householder reflection matching the two state vectors.  More
    than two cliques are glued one at a time along the clique order, which
    must satisfy the running intersection property.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .ncpoly import NCPolynomial, Word, evaluate, words_up_to
from .relax import MomentRelaxation, RelaxationResult

__all__ = [
    "ExtractionUnavailable",
    "NumericalFailure",
    "FlatnessReport",
    "GNSRepresentation",
    "ExtractedSolution",
    "VerificationReport",
    "numerical_rank",
    "flatness_check",
    "dense_gns",
    "irreducibility_check",
    "block_diagonalize",
    "intertwiner",
    "sparse_gns",
    "extract",
    "verify_extraction",
    "reconstruction_error",
]

DEFAULT_RANK_TOL = 1e-6


class ExtractionUnavailable(RuntimeError):
    """The moment data do not satisfy the hypotheses of the extraction."""


class NumericalFailure(RuntimeError):
    """A numerical step of the extraction did not meet its tolerance."""


@dataclass
class FlatnessReport:
    flat: bool
    rank_high: int
    rank_low: int
    eigenvalues: np.ndarray
    tol: float


@dataclass
class GNSRepresentation:
    """``r x r`` symmetric matrices for ``variables`` and a unit vector."""

    variables: list[int]
    mats: dict[int, np.ndarray]
    v: np.ndarray

    @property
    def r(self) -> int:
        return int(self.v.shape[0])

    def state(self, w: Word) -> float:
        x = self.v
        for i in reversed(w):
            x = self.mats[i] @ x
        return float(self.v @ x)


@dataclass
class ExtractedSolution:
    """Matrix tuple ``A_1..A_n`` and unit vector ``v`` on ``R^r``."""

    mats: list[np.ndarray]
    v: np.ndarray
    clique_ranks: list[int]
    overlap_ranks: list[int]
    flatness: list[FlatnessReport] = field(default_factory=list)
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def r(self) -> int:
        return int(self.v.shape[0])

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "matrices": [A.tolist() for A in self.mats],
            "vector": self.v.tolist(),
            "clique_ranks": self.clique_ranks,
            "overlap_ranks": self.overlap_ranks,
            "residuals": self.residuals,
        }


@dataclass
class VerificationReport:
    value: float
    lambda_min: float
    bound: float | None
    gap: float | None
    constraint_min_eigs: list[float]
    feasible: bool

    def to_dict(self) -> dict:
        return dict(value=self.value, lambda_min=self.lambda_min, bound=self.bound,
                    gap=self.gap, constraint_min_eigs=self.constraint_min_eigs,
                    feasible=self.feasible)


# ---------------------------------------------------------------------------
# dense pieces


def numerical_rank(M: np.ndarray, rel_tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of eigenvalues above ``rel_tol * largest`` of a PSD matrix."""
    if M.size == 0:
        return 0
    lam = np.linalg.eigvalsh((M + M.T) / 2)
    top = lam[-1]
    if top <= 0:
        return 0
    return int(np.sum(lam > rel_tol * top))


def flatness_check(M: np.ndarray, low: int, rel_tol: float = DEFAULT_RANK_TOL) -> FlatnessReport:
    """Compare the rank of ``M`` with that of its leading ``low x low`` block.

    Both ranks use the same absolute threshold ``rel_tol * lambda_max(M)``.
    """
    lam = np.linalg.eigvalsh((M + M.T) / 2)
    thr = rel_tol * max(lam[-1], 0.0)
    lam_low = np.linalg.eigvalsh((M[:low, :low] + M[:low, :low].T) / 2)
    rh = int(np.sum(lam > thr))
    rl = int(np.sum(lam_low > thr))
    return FlatnessReport(rh == rl and rh > 0, rh, rl, lam[::-1], thr)


def dense_gns(M: np.ndarray, basis: Sequence[Word], variables: Sequence[int],
              rank: int | None = None, rel_tol: float = DEFAULT_RANK_TOL) -> GNSRepresentation:
    """GNS construction from a flat Hankel matrix.

    Parameters
    ----------
    M : (N, N) array
        Hankel matrix ``M[a, b] = L(basis[a]* basis[b])``.
    basis : sequence of words
        Graded-lex basis containing all words in ``variables`` up to some
        length ``t``, starting with the unit word.
    variables : sequence of int
    rank : int, optional
        Rank to use; defaults to the numerical rank of ``M``.
    """
    basis = [tuple(w) for w in basis]
    pos = {w: k for k, w in enumerate(basis)}
    if () not in pos:
        raise ValueError("basis must contain the unit word")
    lam, V = np.linalg.eigh((M + M.T) / 2)
    r = rank if rank is not None else numerical_rank(M, rel_tol)
    if r == 0:
        raise ExtractionUnavailable("moment matrix is zero")
    lam, V = lam[::-1][:r], V[:, ::-1][:, :r]
    W = (V * np.sqrt(np.maximum(lam, 0.0))).T
    t = max(len(w) for w in basis)
    src = [w for w in basis if len(w) <= t - 1]
    Wsrc = W[:, [pos[w] for w in src]]
    pinv = np.linalg.pinv(Wsrc, rcond=1e-10)
    mats = {}
    for i in variables:
        tgt = W[:, [pos[(i,) + w] for w in src]]
        A = tgt @ pinv
        mats[i] = (A + A.T) / 2
    v = W[:, pos[()]].copy()
    return GNSRepresentation(list(variables), mats, v)


def irreducibility_check(mats: Sequence[np.ndarray], tol: float = 1e-8) -> tuple[bool, int]:
    """Whether the unital algebra generated by ``mats`` is all of ``M_r``.

    Words are added length by length until the span stops growing, so the
    answer does not rely on an a priori length bound.

    Returns
    -------
    (bool, int)
        The verdict and the dimension of the generated algebra.
    """
    mats = [np.asarray(A, dtype=float) for A in mats]
    r = mats[0].shape[0] if mats else 1
    if r == 1:
        return True, 1
    scale = max(1.0, max(np.abs(A).max() for A in mats))
    basis = np.zeros((0, r * r))
    frontier = [np.eye(r)]

    def add(B):
        nonlocal basis
        vec = B.ravel()
        if basis.shape[0]:
            vec = vec - basis.T @ (basis @ vec)
            vec = vec - basis.T @ (basis @ vec)
        nrm = np.linalg.norm(vec)
        if nrm > tol * max(1.0, np.linalg.norm(B)):
            basis = np.vstack([basis, vec / nrm])
            return True
        return False

    add(frontier[0])
    for _ in range(r * r):
        nxt = []
        for B in frontier:
            for A in mats:
                C = B @ (A / scale)
                if add(C):
                    nxt.append(C / max(1.0, np.abs(C).max()))
        if not nxt or basis.shape[0] == r * r:
            break
        frontier = nxt
    dim = basis.shape[0]
    return dim == r * r, dim


def _commutant(mats: Sequence[np.ndarray], tol: float) -> np.ndarray:
    """Orthonormal basis (as rows of vec'd matrices) of ``{Y : A Y = Y A}``."""
    r = mats[0].shape[0]
    I = np.eye(r)
    K = np.vstack([np.kron(I, A) - np.kron(A.T, I) for A in mats])
    _, s, Vt = np.linalg.svd(K)
    scale = max(1.0, s[0] if s.size else 1.0)
    s_full = np.concatenate([s, np.zeros(Vt.shape[0] - s.size)])
    return Vt[s_full <= tol * scale]


def block_diagonalize(mats: Sequence[np.ndarray], seed: int = 0, tol: float = 1e-7,
                      retries: int = 3) -> tuple[np.ndarray, list[int]]:
    """Orthogonal ``Q`` such that every ``Q^T A Q`` is block diagonal.

    The blocks are eigenspaces of a random symmetric element of the
    commutant.  They are ordered by size, then by the trace of the first
    matrix on the block.

    Returns
    -------
    Q : (r, r) array
    sizes : list of int
        Block sizes along the diagonal.

    Raises
    ------
    NumericalFailure
        If no attempt gives a clean block structure.
    """
    mats = [np.asarray(A, dtype=float) for A in mats]
    r = mats[0].shape[0]
    C = _commutant(mats, tol)
    rng = np.random.default_rng(seed)
    for _ in range(retries):
        coef = rng.standard_normal(C.shape[0])
        Y = (coef @ C).reshape(r, r, order="F")
        Y = (Y + Y.T) / 2
        lam, V = np.linalg.eigh(Y)
        spread = max(1e-300, lam[-1] - lam[0])
        groups = [[0]]
        for k in range(1, r):
            if lam[k] - lam[k - 1] <= 1e-6 * max(spread, 1.0):
                groups[-1].append(k)
            else:
                groups.append([k])
        cols = [V[:, g] for g in groups]
        ok = True
        for A in mats:
            for a, Qa in enumerate(cols):
                for b, Qb in enumerate(cols):
                    if a != b and np.abs(Qa.T @ A @ Qb).max(initial=0.0) > 1e-6 * max(
                            1.0, np.abs(A).max()):
                        ok = False
        if not ok:
            continue
        order = sorted(range(len(cols)),
                       key=lambda g: (cols[g].shape[1],
                                      round(float(np.trace(cols[g].T @ mats[0] @ cols[g])), 8)))
        Q = np.hstack([cols[g] for g in order])
        return Q, [cols[g].shape[1] for g in order]
    raise NumericalFailure("block diagonalization did not separate the blocks")


def _equivalence_residual(src: Sequence[np.ndarray], dst: Sequence[np.ndarray]) -> float:
    """Distance of tuples from orthogonal equivalence, via their mixed spectra."""
    rng = np.random.default_rng(7)
    res = 0.0
    for _ in range(2):
        t = rng.standard_normal(len(src))
        a = np.linalg.eigvalsh(sum(ti * S for ti, S in zip(t, src)))
        b = np.linalg.eigvalsh(sum(ti * D for ti, D in zip(t, dst)))
        scale = max(1.0, np.abs(a).max(), np.abs(b).max())
        res = max(res, float(np.abs(a - b).max()) / scale)
    return res


def intertwiner(src: Sequence[np.ndarray], dst: Sequence[np.ndarray],
                tol: float = 1e-6) -> np.ndarray:
    """Orthogonal ``P`` with ``src_i P = P dst_i`` for all ``i``.

    ``src`` and ``dst`` must be irreducible and unitarily equivalent; the
    intertwiner is then unique up to sign, fixed by making the largest
    entry of the first column positive.
    """
    r = src[0].shape[0]
    I = np.eye(r)
    K = np.vstack([np.kron(I, S) - np.kron(D.T, I) for S, D in zip(src, dst)])
    _, s, Vt = np.linalg.svd(K)
    scale = max(1.0, s[0])
    if s[-1] > tol * scale:
        raise NumericalFailure(f"no intertwiner found (residual {s[-1] / scale:.1e})")
    if r > 1 and s[-2] <= tol * scale:
        raise NumericalFailure("intertwiner is not unique; representation is reducible")
    P = Vt[-1].reshape(r, r, order="F")
    c = np.sqrt(np.trace(P.T @ P) / r)
    P = P / c
    # polish to the nearest orthogonal matrix
    U, _, Vh = np.linalg.svd(P)
    P = U @ Vh
    j = np.argmax(np.abs(P[:, 0]))
    if P[j, 0] < 0:
        P = -P
    return P


def _householder(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Orthogonal ``U`` with ``U a = b`` for unit vectors ``a`` and ``b``."""
    d = a - b
    nd = np.linalg.norm(d)
    if nd < 1e-14:
        return np.eye(a.size)
    u = d / nd
    return np.eye(a.size) - 2.0 * np.outer(u, u)


# ---------------------------------------------------------------------------
# sparse assembly


def _align(ops: dict[int, np.ndarray], vec: np.ndarray, ov: GNSRepresentation,
           tol: float, seed: int) -> tuple[np.ndarray, int, np.ndarray, float]:
    """Basis change exposing ``ops`` on the overlap as ``I_m (x) A^O``.

    Returns ``Q``, the multiplicity ``m``, the weight vector ``lambda`` with
    ``Q^T vec = lambda (x) v^O`` and the alignment residual.
    """
    O = ov.variables
    rO = ov.r
    dim = vec.size
    if dim % rO:
        raise NumericalFailure(f"space of dimension {dim} is not a multiple of {rO}")
    T = [ops[i] for i in O]
    Qbd, sizes = block_diagonalize(T, seed=seed)
    if any(s != rO for s in sizes):
        raise ExtractionUnavailable(
            f"overlap operators split into blocks {sizes}, expected copies of size {rO}")
    m = len(sizes)
    blocks = [Qbd[:, k * rO:(k + 1) * rO] for k in range(m)]
    chis = [[Qb.T @ A @ Qb for A in T] for Qb in blocks]
    target = [ov.mats[i] for i in O]
    for ell, chi in enumerate(chis):
        if _equivalence_residual(chi, target) > 1e-3:
            # flatness alone does not force this; the overlap relations fail here
            raise ExtractionUnavailable(
                f"block {ell + 1} of the overlap operators is not equivalent to the "
                f"overlap representation")
    P = intertwiner(chis[0], target)
    cols = []
    for ell in range(m):
        Pl = np.eye(rO) if ell == 0 else intertwiner(chis[ell], chis[0])
        cols.append(blocks[ell] @ Pl @ P)
    Q = np.hstack(cols)
    res = 0.0
    for i in O:
        D = Q.T @ ops[i] @ Q - np.kron(np.eye(m), ov.mats[i])
        res = max(res, float(np.abs(D).max()))
    Xi = (Q.T @ vec).reshape(m, rO)
    lam = Xi @ ov.v / (ov.v @ ov.v)
    res = max(res, float(np.abs(Xi - np.outer(lam, ov.v)).max()))
    nl = np.linalg.norm(lam)
    if nl < 1e-12:
        raise NumericalFailure("state vector has no component along the overlap")
    return Q, m, lam / nl, res


def _glue(left: GNSRepresentation, right: GNSRepresentation, ov: GNSRepresentation | None,
          multiplicity: str, tol: float, seed: int) -> tuple[GNSRepresentation, float]:
    if ov is None:
        dl, dr = left.r, right.r
        mats = {i: np.kron(np.eye(dr), A) for i, A in left.mats.items()}
        for i, B in right.mats.items():
            mats[i] = np.kron(B, np.eye(dl))
        v = np.kron(right.v, left.v)
        return GNSRepresentation(sorted(mats), mats, v), 0.0

    QL, mL, lamL, resL = _align(left.mats, left.v, ov, tol, seed)
    QR, mR, lamR, resR = _align(right.mats, right.v, ov, tol, seed)
    rO = ov.r
    if multiplicity == "minimal":
        aR, aL = mR, mL
    elif multiplicity == "full":
        aR, aL = right.r, left.r
    else:
        raise ValueError(f"unknown multiplicity mode {multiplicity!r}")
    N = aR * mL
    e_R = np.zeros(aR)
    e_R[0] = 1.0
    e_L = np.zeros(aL)
    e_L[0] = 1.0
    U = _householder(np.kron(e_R, lamL), np.kron(e_L, lamR))
    UI = np.kron(U, np.eye(rO))
    mats = {}
    for i, A in left.mats.items():
        mats[i] = np.kron(np.eye(aR), QL.T @ A @ QL)
    for i, B in right.mats.items():
        if i in mats:
            continue
        Bt = QR.T @ B @ QR
        mats[i] = UI.T @ np.kron(np.eye(aL), Bt) @ UI
    vL = QL.T @ left.v
    v = np.kron(e_R, vL)
    assert v.size == N * rO
    return GNSRepresentation(sorted(mats), mats, v), max(resL, resR)


def _delta(R: MomentRelaxation) -> int:
    ds = [math.ceil(g.degree / 2) for g in R.constraints if not g.is_zero]
    return max([1] + ds)


def sparse_gns(res: RelaxationResult, rel_tol: float = DEFAULT_RANK_TOL,
               multiplicity: str = "minimal", seed: int = 0) -> ExtractedSolution:
    """Extract a matrix minimizer from a solved (sparse or dense) relaxation.

    Parameters
    ----------
    res : RelaxationResult
    rel_tol : float
        Relative eigenvalue threshold for numerical ranks.
    multiplicity : {"minimal", "full"}
        ``"minimal"`` glues on a space of dimension ``r1 * r2 / r12``;
        ``"full"`` ampliates each side by the full dimension of the other
        and yields ``r1 * r2``.
    seed : int
        Seed for the random commutant elements.

    Raises
    ------
    ExtractionUnavailable
        Flatness or irreducibility fails, or the pattern lacks the running
        intersection property.
    NumericalFailure
        An alignment step misses its tolerance.
    """
    R = res.relaxation
    y = res.y
    if R.newton:
        raise ExtractionUnavailable("extraction needs a full word basis, not a Newton chip")
    if not R.pattern.rip:
        raise ExtractionUnavailable("clique order violates the running intersection property")
    s = R.order
    delta = _delta(R)
    if s - delta < 0:
        raise ExtractionUnavailable("relaxation order too small for a flatness test")
    reports: list[FlatnessReport] = []

    def local_gns(vars_: Sequence[int], what: str) -> GNSRepresentation:
        basis = words_up_to(vars_, s)
        M = R.moment_matrix(y, basis)
        low = len(words_up_to(vars_, s - delta))
        rep = flatness_check(M, low, rel_tol)
        reports.append(rep)
        if not rep.flat:
            raise ExtractionUnavailable(
                f"{what} is not flat: rank {rep.rank_high} vs {rep.rank_low}")
        return dense_gns(M, basis, vars_, rank=rep.rank_high)

    cliques = R.pattern.cliques
    reps = [local_gns(c, f"clique {k + 1}") for k, c in enumerate(cliques)]
    ranks = [g.r for g in reps]
    cur = reps[0]
    covered = set(cliques[0])
    ov_ranks = []
    worst = 0.0
    for k in range(1, len(cliques)):
        O = sorted(set(cliques[k]) & covered)
        if O:
            ov = local_gns(O, f"overlap {k}")
            ok, dim = irreducibility_check([ov.mats[i] for i in O])
            if not ok:
                raise ExtractionUnavailable(
                    f"overlap {k} representation is reducible (algebra dimension {dim} "
                    f"of {ov.r ** 2})")
            ov_ranks.append(ov.r)
        else:
            ov = None
            ov_ranks.append(0)
        cur, r_align = _glue(cur, reps[k], ov, multiplicity, 1e-6, seed)
        worst = max(worst, r_align)
        covered |= set(cliques[k])
    n = max(R.objective.nvars, max(max(c) for c in cliques))
    mats = [cur.mats.get(i, np.zeros((cur.r, cur.r))) for i in range(1, n + 1)]
    # |v|^2 = L(1) = 1 holds only up to the discarded eigenvalues
    v = cur.v / np.linalg.norm(cur.v)
    out = ExtractedSolution(mats, v, ranks, ov_ranks, reports,
                            {"alignment": worst})
    out.residuals["reconstruction"] = reconstruction_error(R, y, out)
    return out


extract = sparse_gns


def reconstruction_error(R: MomentRelaxation, y: np.ndarray, sol: ExtractedSolution,
                         max_len: int | None = None) -> float:
    """Largest ``|L(w) - <w(A) v, v>|`` over the clique words of the relaxation."""
    d = 2 * R.order if max_len is None else max_len
    rep = GNSRepresentation(list(range(1, len(sol.mats) + 1)),
                            {i + 1: A for i, A in enumerate(sol.mats)}, sol.v)
    err = 0.0
    seen = set()
    for c in R.pattern.cliques:
        for w in words_up_to(c, d):
            k = R.key(w)
            if k in seen or (k != () and k not in R.index):
                continue
            seen.add(k)
            err = max(err, abs(R.moment(y, w) - rep.state(w)))
    return err


def verify_extraction(f: NCPolynomial, constraints: Sequence[NCPolynomial],
                      sol: ExtractedSolution, bound: float | None = None,
                      feas_tol: float = 1e-6) -> VerificationReport:
    """Evaluate objective and constraints at an extracted tuple."""
    fs = f if f.is_symmetric(1e-12) else f.symmetrized()
    F = evaluate(fs, sol.mats, sym_tol=1e-6)
    F = (F + F.T) / 2
    value = float(sol.v @ F @ sol.v)
    lam = float(np.linalg.eigvalsh(F)[0])
    cmins = []
    for g in constraints:
        G = evaluate(g, sol.mats, sym_tol=1e-6)
        cmins.append(float(np.linalg.eigvalsh((G + G.T) / 2)[0]))
    feasible = all(c >= -feas_tol for c in cmins)
    gap = None if bound is None else value - bound
    return VerificationReport(value, lam, bound, gap, cmins, feasible)
