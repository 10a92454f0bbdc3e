"""
Reading and writing the SDPA sparse format (``.dat-s``) and SDPA result files.

SDPA poses its primal problem as

    minimize  sum_i c_i x_i   subject to   sum_i F_i x_i - F_0 >= 0.

A :class:`~ncsparse.sdpsolver.BlockSDP` maximizes ``c @ y`` subject to
``F0 + sum y_i F_i >= 0``.  The translation negates the objective and the
constant matrix, so ``x = y`` and SDPA's ``xMat`` is the slack ``S(y)``,
while SDPA's ``yMat`` is the dual matrix ``X``.

Numbers are written with ``repr`` so a write/read round trip is exact.
"""

from __future__ import annotations

import io
import os
import re
from collections import defaultdict

import numpy as np

from .sdpsolver import BlockSDP, SDPBlock, SDPSolution, SolverStatus

__all__ = ["write_sdpa", "read_sdpa", "dumps_sdpa", "loads_sdpa",
           "write_sdpa_result", "import_sdpa_result"]


def _num(x: float) -> str:
    return repr(float(x))


def dumps_sdpa(p: BlockSDP) -> str:
    out = io.StringIO()
    out.write(f"{p.m}\n{len(p.blocks)}\n")
    out.write(" ".join(str(-b.size if b.diagonal else b.size) for b in p.blocks) + "\n")
    out.write(" ".join(_num(-x) for x in p.c) + "\n")
    for k, b in enumerate(p.blocks, start=1):
        iu, ju = np.triu_indices(b.size)
        for i, j in zip(iu, ju):
            v = b.F0[i, j]
            if v != 0.0:
                out.write(f"0 {k} {i + 1} {j + 1} {_num(-v)}\n")
    entries = []
    for k, b in enumerate(p.blocks, start=1):
        for v, r, c, x in zip(b.var, b.row, b.col, b.val):
            entries.append((int(v) + 1, k, int(r) + 1, int(c) + 1, x))
    entries.sort(key=lambda e: e[:4])
    for v, k, r, c, x in entries:
        out.write(f"{v} {k} {r} {c} {_num(x)}\n")
    return out.getvalue()


def write_sdpa(p: BlockSDP, path: str | os.PathLike) -> None:
    """Write ``p`` as an SDPA sparse file."""
    with open(path, "w") as fh:
        fh.write(dumps_sdpa(p))


def _clean(line: str) -> str:
    return re.sub(r"[,{}()]", " ", line).strip()


def loads_sdpa(text: str) -> BlockSDP:
    lines = []
    for raw in text.splitlines():
        s = raw.strip()
        if not s or s[0] in "\"*":
            continue
        lines.append(_clean(s))
    if len(lines) < 4:
        raise ValueError("SDPA file is truncated")
    m = int(lines[0].split()[0])
    nb = int(lines[1].split()[0])
    sizes = [int(float(t)) for t in lines[2].split()[:nb]]
    cvals = lines[3].split()
    pos = 4
    while len(cvals) < m and pos < len(lines):
        cvals += lines[pos].split()
        pos += 1
    c = -np.array([float(t) for t in cvals[:m]])
    F0 = [np.zeros((abs(s), abs(s))) for s in sizes]
    ent: dict[int, list] = defaultdict(list)
    for s in lines[pos:]:
        tok = s.split()
        if len(tok) < 5:
            continue
        mat, blk, i, j = (int(t) for t in tok[:4])
        val = float(tok[4])
        i, j = min(i, j) - 1, max(i, j) - 1
        if sizes[blk - 1] < 0 and i != j:
            raise ValueError("off-diagonal entry in a diagonal block")
        if mat == 0:
            F0[blk - 1][i, j] = -val
            F0[blk - 1][j, i] = -val
        else:
            if not 1 <= mat <= m:
                raise ValueError(f"matrix number {mat} out of range")
            ent[blk - 1].append((mat - 1, i, j, val))
    blocks = [SDPBlock.from_entries(abs(s), F0[k], ent[k], diagonal=s < 0)
              for k, s in enumerate(sizes)]
    return BlockSDP(c, blocks)


def read_sdpa(path: str | os.PathLike) -> BlockSDP:
    """Read an SDPA sparse file into a :class:`BlockSDP`."""
    with open(path) as fh:
        return loads_sdpa(fh.read())


# ---------------------------------------------------------------------------
# result files

def _fmt_mats(mats: list[np.ndarray]) -> str:
    parts = []
    for M in mats:
        rows = ["{" + ",".join(_num(x) for x in r) + "}" for r in M]
        parts.append("{" + ",\n".join(rows) + "}")
    return "{\n" + "\n".join(parts) + "\n}"


_PHASE = {
    SolverStatus.OPTIMAL: "pdOPT",
    SolverStatus.PRIMAL_INFEASIBLE: "dUNBD",
    SolverStatus.DUAL_INFEASIBLE: "pUNBD",
    SolverStatus.SLOW_PROGRESS: "noINFO",
    SolverStatus.ITER_LIMIT: "noINFO",
}


def write_sdpa_result(sol: SDPSolution, path: str | os.PathLike) -> None:
    """Write a solution in the layout of SDPA's output file."""
    with open(path, "w") as fh:
        fh.write(f"phase.value  = {_PHASE[sol.status]}\n")
        fh.write(f"objValPrimal = {_num(-sol.pobj)}\n")
        fh.write(f"objValDual   = {_num(-sol.dobj)}\n")
        fh.write("xVec = \n{" + ",".join(_num(x) for x in sol.y) + "}\n")
        fh.write("xMat = \n" + _fmt_mats(sol.S) + "\n")
        fh.write("yMat = \n" + _fmt_mats(sol.X) + "\n")


def _braced(text: str, start: int) -> tuple[str, int]:
    i = text.index("{", start)
    depth = 0
    for j in range(i, len(text)):
        if text[j] == "{":
            depth += 1
        elif text[j] == "}":
            depth -= 1
            if depth == 0:
                return text[i:j + 1], j + 1
    raise ValueError("unbalanced braces in SDPA result")


def _parse_mats(body: str) -> list[np.ndarray]:
    inner = body.strip()[1:-1]
    mats = []
    pos = 0
    while True:
        try:
            blk, pos = _braced(inner, pos)
        except ValueError:
            break
        rows = re.findall(r"\{([^{}]*)\}", blk[1:-1])
        if rows:
            mats.append(np.array([[float(t) for t in re.split(r"[,\s]+", r.strip()) if t]
                                  for r in rows]))
        else:
            # diagonal blocks are printed as a flat list
            vals = [float(t) for t in re.split(r"[,\s{}]+", blk) if t]
            mats.append(np.diag(vals))
    return mats


def import_sdpa_result(path: str | os.PathLike) -> SDPSolution:
    """Parse an SDPA result file back into an :class:`SDPSolution`."""
    with open(path) as fh:
        text = fh.read()
    phase = re.search(r"phase\.value\s*=\s*(\w+)", text)
    phase = phase.group(1) if phase else "noINFO"
    status = {
        "pdOPT": SolverStatus.OPTIMAL,
        "pUNBD": SolverStatus.DUAL_INFEASIBLE,
        "dINF": SolverStatus.DUAL_INFEASIBLE,
        "dUNBD": SolverStatus.PRIMAL_INFEASIBLE,
        "pINF": SolverStatus.PRIMAL_INFEASIBLE,
        "pdINF": SolverStatus.PRIMAL_INFEASIBLE,
    }.get(phase, SolverStatus.SLOW_PROGRESS)
    pv = re.search(r"objValPrimal\s*=\s*(\S+)", text)
    dv = re.search(r"objValDual\s*=\s*(\S+)", text)
    xs = text.index("xVec")
    xvec, _ = _braced(text, xs)
    y = np.array([float(t) for t in re.split(r"[,\s{}]+", xvec) if t])
    S = _parse_mats(_braced(text, text.index("xMat"))[0])
    X = _parse_mats(_braced(text, text.index("yMat"))[0])
    return SDPSolution(status, y, X, S,
                       -float(pv.group(1)) if pv else np.nan,
                       -float(dv.group(1)) if dv else np.nan)
