"""
Block-diagonal SDP data and a primal-dual interior-point solver.

Problems are stored in the linear matrix inequality form

    maximize    c @ y
    subject to  S(y) = F0 + sum_i y_i F_i  is positive semidefinite,

with block-diagonal symmetric ``F_i``.  The dual problem is

    minimize    <F0, X>
    subject to  <F_i, X> = -c_i,  X positive semidefinite,

so that ``c @ y <= <F0, X>`` for any feasible pair.  In a moment relaxation
``y`` holds the moments and ``X`` the Gram matrices of the certificate.

The solver follows the infeasible-start HKM search direction with a
Mehrotra predictor-corrector step and a dense Cholesky factorization of the
Schur complement.  It is meant for the moderate sizes that appear in the
benchmarks here; larger problems can be exported in SDPA format with
:mod:`ncsparse.sdpa` and handed to an external solver.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

log = logging.getLogger(__name__)

__all__ = ["SDPBlock", "BlockSDP", "SolverOptions", "SolverStatus", "SDPSolution",
           "solve", "DEFAULT_SCHUR_LIMIT"]

#: Schur complement sizes above this are not attempted by the command line tool.
DEFAULT_SCHUR_LIMIT = 5000


@dataclass
class SDPBlock:
    """One diagonal block of the LMI.

    ``F0`` is stored dense.  The coefficient matrices are stored as upper
    triangle triplets: ``F_var[row, col] = F_var[col, row] = val`` with
    ``row <= col``.
    """

    size: int
    F0: np.ndarray
    var: np.ndarray
    row: np.ndarray
    col: np.ndarray
    val: np.ndarray
    diagonal: bool = False
    label: str = ""

    @classmethod
    def from_entries(cls, size: int, F0, entries, diagonal: bool = False,
                     label: str = "") -> "SDPBlock":
        """Build from an iterable of ``(var, row, col, val)``; duplicates are summed."""
        acc: dict[tuple[int, int, int], float] = {}
        for v, r, c, x in entries:
            if r > c:
                r, c = c, r
            key = (int(v), int(r), int(c))
            acc[key] = acc.get(key, 0.0) + float(x)
        keys = sorted(k for k, x in acc.items() if x != 0.0)
        arr = np.array(keys, dtype=np.int64).reshape(-1, 3)
        vals = np.array([acc[k] for k in keys], dtype=float)
        F0 = np.zeros((size, size)) if F0 is None else np.array(F0, dtype=float)
        return cls(size, F0, arr[:, 0], arr[:, 1], arr[:, 2], vals, diagonal, label)

    def matrix(self, i: int) -> np.ndarray:
        """Dense ``F_i`` restricted to this block."""
        M = np.zeros((self.size, self.size))
        sel = self.var == i
        M[self.row[sel], self.col[sel]] = self.val[sel]
        M[self.col[sel], self.row[sel]] = self.val[sel]
        return M

    def slack(self, y: np.ndarray) -> np.ndarray:
        S = self.F0.copy()
        contrib = self.val * y[self.var]
        np.add.at(S, (self.row, self.col), contrib)
        off = self.row != self.col
        np.add.at(S, (self.col[off], self.row[off]), contrib[off])
        return S


@dataclass
class BlockSDP:
    """``maximize c @ y`` subject to ``F0 + sum y_i F_i >= 0`` blockwise."""

    c: np.ndarray
    blocks: list[SDPBlock]

    @property
    def m(self) -> int:
        return int(self.c.shape[0])

    @property
    def block_sizes(self) -> list[int]:
        return [b.size for b in self.blocks]

    def slack(self, y) -> list[np.ndarray]:
        y = np.asarray(y, dtype=float)
        return [b.slack(y) for b in self.blocks]

    def same_as(self, other: "BlockSDP") -> bool:
        """Exact structural and numerical equality."""
        if self.m != other.m or not np.array_equal(self.c, other.c):
            return False
        if len(self.blocks) != len(other.blocks):
            return False
        for a, b in zip(self.blocks, other.blocks):
            if a.size != b.size or a.diagonal != b.diagonal:
                return False
            if not np.array_equal(a.F0, b.F0):
                return False
            for name in ("var", "row", "col", "val"):
                if not np.array_equal(getattr(a, name), getattr(b, name)):
                    return False
        return True


class SolverStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    SLOW_PROGRESS = "SlowProgress"
    ITER_LIMIT = "IterLimit"


@dataclass
class SolverOptions:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iter: int = 200
    verbose: bool = False


@dataclass
class SDPSolution:
    """Result of :func:`solve`.

    ``status`` refers to the LMI problem in ``y``: ``PrimalInfeasible`` means
    no ``y`` makes ``S(y)`` semidefinite, ``DualInfeasible`` means no ``X``
    exists, which for a feasible LMI problem signals unboundedness.
    """

    status: SolverStatus
    y: np.ndarray
    X: list[np.ndarray]
    S: list[np.ndarray]
    pobj: float
    dobj: float
    iterations: int = 0
    pinf: float = np.inf
    dinf: float = np.inf
    relgap: float = np.inf
    history: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == SolverStatus.OPTIMAL


# ---------------------------------------------------------------------------


class _BlockOps:
    """Full (both triangles) entry lists of one block for fast products."""

    def __init__(self, blk: SDPBlock, m: int):
        off = blk.row != blk.col
        self.a = np.concatenate([blk.row, blk.col[off]])
        self.b = np.concatenate([blk.col, blk.row[off]])
        self.v = np.concatenate([blk.var, blk.var[off]])
        self.x = np.concatenate([blk.val, blk.val[off]])
        self.vars = np.unique(self.v)
        local = np.searchsorted(self.vars, self.v)
        self.P = sp.csr_matrix((self.x, (np.arange(self.a.size), local)),
                               shape=(self.a.size, self.vars.size))
        self.PT = self.P.T.tocsr()
        self.n = blk.size
        self.F0 = blk.F0
        self.m = m
        self.norms = np.sqrt(np.asarray(self.PT.multiply(self.PT).sum(axis=1)).ravel())

    def apply(self, R: np.ndarray) -> np.ndarray:
        """``<F_i, R>`` for the block variables."""
        return self.PT @ R[self.a, self.b]

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        np.add.at(out, (self.a, self.b), self.P @ y[self.vars])
        return out

    def schur(self, X: np.ndarray, Sinv: np.ndarray) -> np.ndarray:
        """``M_ij = tr(F_i X F_j S^{-1})`` on the block variables."""
        nnz = self.a.size
        k = self.vars.size
        out = np.zeros((k, k))
        chunk = max(1, 2_000_000 // max(nnz, 1))
        for s in range(0, nnz, chunk):
            e = slice(s, min(s + chunk, nnz))
            # W[e, e'] = X[b_e, a_e'] * Sinv[a_e, b_e']
            W = X[self.b[e]][:, self.a] * Sinv[self.a[e]][:, self.b]
            out += self.P[e].T @ np.asarray(self.PT @ W.T).T
        return out


def _initial_point(ops: list[_BlockOps], c: np.ndarray):
    X, S = [], []
    for op in ops:
        n = op.n
        if op.vars.size:
            ratio = np.max((1.0 + np.abs(c[op.vars])) / (1.0 + op.norms))
            nmax = np.max(op.norms)
        else:
            ratio, nmax = 0.0, 0.0
        xi = max(10.0, np.sqrt(n), n * ratio)
        eta = max(10.0, np.sqrt(n), nmax, np.linalg.norm(op.F0))
        X.append(xi * np.eye(n))
        S.append(eta * np.eye(n))
    return X, S


def _max_step(M: np.ndarray, D: np.ndarray) -> float:
    """Largest ``alpha`` with ``M + alpha D`` semidefinite (``M`` definite)."""
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return 0.0
    Li = sla.solve_triangular(L, np.eye(M.shape[0]), lower=True)
    T = Li @ D @ Li.T
    lam = np.linalg.eigvalsh((T + T.T) / 2)[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _inner(A: list[np.ndarray], B: list[np.ndarray]) -> float:
    return float(sum(np.vdot(a, b) for a, b in zip(A, B)))


def solve(p: BlockSDP, options: SolverOptions | None = None, **kw) -> SDPSolution:
    """Solve ``p`` with a primal-dual interior-point method.

    Parameters
    ----------
    p : BlockSDP
    options : SolverOptions, optional
        ``feas_tol``, ``gap_tol`` and ``max_iter`` may also be passed as
        keywords.

    Returns
    -------
    SDPSolution
        Always returned, also when the run did not reach optimality; check
        ``status``.
    """
    opts = options or SolverOptions()
    for k, v in kw.items():
        setattr(opts, k, v)
    m = p.m
    c = np.asarray(p.c, dtype=float)
    ops = [_BlockOps(b, m) for b in p.blocks]
    ntot = sum(op.n for op in ops)
    F0 = [op.F0 for op in ops]
    normc = 1.0 + np.linalg.norm(c)
    normF0 = 1.0 + np.sqrt(sum(np.vdot(f, f) for f in F0))

    def Fop(R):
        out = np.zeros(m)
        for op, Rb in zip(ops, R):
            np.add.at(out, op.vars, op.apply(Rb))
        return out

    def Fadj(y):
        return [op.adjoint(y) for op in ops]

    X, S = _initial_point(ops, c)
    y = np.zeros(m)
    history: list[dict] = []
    status = SolverStatus.ITER_LIMIT
    best = None
    stall = 0
    it = 0
    last_gain = 0

    def package(st, it_):
        pobj = float(c @ y)
        dobj = _inner(F0, X)
        return SDPSolution(st, y.copy(), [x.copy() for x in X], [s.copy() for s in S],
                           pobj, dobj, it_, pinf, dinf, relgap, history)

    for it in range(opts.max_iter + 1):
        Ay = Fadj(y)
        rd = [f + a - s for f, a, s in zip(F0, Ay, S)]
        rp = -c - Fop(X)
        pobj = float(c @ y)
        dobj = _inner(F0, X)
        mu = _inner(X, S) / ntot
        pinf = np.linalg.norm(rp) / normc
        dinf = np.sqrt(sum(np.vdot(r, r) for r in rd)) / normF0
        relgap = abs(dobj - pobj) / (1.0 + abs(pobj) + abs(dobj))
        history.append(dict(it=it, pobj=pobj, dobj=dobj, pinf=pinf, dinf=dinf,
                            gap=relgap, mu=mu))
        if opts.verbose:
            log.info("it %3d  pobj %+.8e  dobj %+.8e  pinf %.1e  dinf %.1e  gap %.1e",
                     it, pobj, dobj, pinf, dinf, relgap)
        merit = max(pinf, dinf, relgap)
        if best is None or merit < best[0]:
            if best is None or merit < 0.5 * best[0]:
                last_gain = it
            best = (merit, package(SolverStatus.SLOW_PROGRESS, it))
        if it - last_gain > 20:
            status = SolverStatus.SLOW_PROGRESS
            break
        if pinf <= opts.feas_tol and dinf <= opts.feas_tol and relgap <= opts.gap_tol:
            status = SolverStatus.OPTIMAL
            break
        cert = _infeasibility(p, ops, c, y, X, dinf, pinf, Fop)
        if cert is not None:
            status = cert
            break
        if it == opts.max_iter:
            status = SolverStatus.ITER_LIMIT
            break

        Sinv = []
        for s in S:
            try:
                cf = sla.cho_factor(s, lower=True)
                Sinv.append(sla.cho_solve(cf, np.eye(s.shape[0])))
            except np.linalg.LinAlgError:
                Sinv.append(np.linalg.pinv(s))
        Sinv = [(a + a.T) / 2 for a in Sinv]
        M = np.zeros((m, m))
        for op, Xb, Si in zip(ops, X, Sinv):
            if op.vars.size:
                M[np.ix_(op.vars, op.vars)] += op.schur(Xb, Si)
        M = (M + M.T) / 2
        fac = _factor(M)
        if fac is None:
            status = SolverStatus.SLOW_PROGRESS
            break

        XrdSi = [Xb @ r @ Si for Xb, r, Si in zip(X, rd, Sinv)]

        def direction(Rc):
            rhs = Fop([R @ Si for R, Si in zip(Rc, Sinv)]) - Fop(XrdSi) - rp
            dy = fac(rhs)
            for _ in range(2):
                res = rhs - M @ dy
                if np.linalg.norm(res) <= 1e-14 * (1.0 + np.linalg.norm(rhs)):
                    break
                dy = dy + fac(res)
            dS = [r + a for r, a in zip(rd, Fadj(dy))]
            dX = [(R - Xb @ d) @ Si for R, Xb, d, Si in zip(Rc, X, dS, Sinv)]
            dX = [(d + d.T) / 2 for d in dX]
            return dy, dX, dS

        # predictor
        Rc = [-Xb @ s for Xb, s in zip(X, S)]
        dy, dX, dS = direction(Rc)
        ap = min([1.0] + [_max_step(Xb, d) for Xb, d in zip(X, dX)])
        ad = min([1.0] + [_max_step(s, d) for s, d in zip(S, dS)])
        mu_aff = _inner([Xb + ap * d for Xb, d in zip(X, dX)],
                        [s + ad * d for s, d in zip(S, dS)]) / ntot
        sig = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        # corrector
        Rc = [sig * mu * np.eye(Xb.shape[0]) - Xb @ s - dxa @ dsa
              for Xb, s, dxa, dsa in zip(X, S, dX, dS)]
        dy, dX, dS = direction(Rc)
        ap = min([np.inf] + [_max_step(Xb, d) for Xb, d in zip(X, dX)])
        ad = min([np.inf] + [_max_step(s, d) for s, d in zip(S, dS)])
        gamma = 0.9 + 0.09 * min(1.0, ap, ad)
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)
        history[-1].update(ap=ap, ad=ad, sigma=sig)
        X = [Xb + ap * d for Xb, d in zip(X, dX)]
        X = [(Xb + Xb.T) / 2 for Xb in X]
        y = y + ad * dy
        S = [s + ad * d for s, d in zip(S, dS)]
        S = [(s + s.T) / 2 for s in S]
        if max(ap, ad) < 1e-8:
            stall += 1
            if stall >= 3:
                status = SolverStatus.SLOW_PROGRESS
                break
        else:
            stall = 0

    if status == SolverStatus.OPTIMAL or status in (SolverStatus.PRIMAL_INFEASIBLE,
                                                     SolverStatus.DUAL_INFEASIBLE):
        return package(status, it)
    out = best[1]
    out.status = status
    out.iterations = it
    out.history = history
    return out


def _factor(M: np.ndarray):
    """Cholesky-based solver for the Schur system with light regularization."""
    scale = max(1.0, float(np.max(np.abs(np.diag(M))))) if M.size else 1.0
    for reg in (0.0, 1e-14, 1e-12, 1e-10):
        try:
            cf = sla.cho_factor(M + reg * scale * np.eye(M.shape[0]), lower=True,
                                check_finite=False)
            return lambda r, cf=cf: sla.cho_solve(cf, r, check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            continue
    try:
        lu = sla.lu_factor(M, check_finite=False)
    except (np.linalg.LinAlgError, ValueError):
        return None
    return lambda r: sla.lu_solve(lu, r, check_finite=False)


def _infeasibility(p, ops, c, y, X, dinf, pinf, Fop):
    """Check the iterates for an infeasibility certificate."""
    ny = np.linalg.norm(y)
    if ny > 1e8 and dinf < 1e-6:
        d = y / ny
        if c @ d > 0:
            lam = min(np.linalg.eigvalsh(op.adjoint(d))[0] if op.n else 0 for op in ops)
            if lam >= -1e-7:
                return SolverStatus.DUAL_INFEASIBLE
    trX = sum(np.trace(x) for x in X)
    if trX > 1e8 and pinf < 1e-6 * trX:
        Xn = [x / trX for x in X]
        if _inner([op.F0 for op in ops], Xn) < -1e-8 and np.linalg.norm(Fop(Xn)) < 1e-7:
            return SolverStatus.PRIMAL_INFEASIBLE
    return None
