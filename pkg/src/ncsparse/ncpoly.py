"""
Noncommutative polynomials in symmetric letters.

A word is a tuple of 1-based variable indices, so ``(1, 2, 2)`` stands for
``X1*X2*X2``.  The empty tuple is the unit word.  The involution ``star``
reverses a word and fixes every letter, which makes ``X_i`` symmetric.

Words are ordered graded-lexicographically: first by length, then
lexicographically on indices.  Every basis, moment table and Gram matrix in
this package uses that order.

The module also provides the cyclic canonical form used for trace
problems, the Newton chip basis reduction and matrix evaluation.
"""

from __future__ import annotations

import enum
import math
import re
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from itertools import product

import numpy as np

Word = tuple[int, ...]

__all__ = [
    "Word",
    "NEG_INF",
    "NCPolynomial",
    "ParseError",
    "star",
    "glex_key",
    "sigma",
    "words_up_to",
    "parse",
    "cyclic_canonical",
    "cyclic_project",
    "cyclic_degree",
    "newton_chip",
    "evaluate",
]


class _Degree(enum.Enum):
    NEG_INF = "-inf"

    def __repr__(self) -> str:
        return "NEG_INF"


#: Degree of the zero polynomial.
NEG_INF = _Degree.NEG_INF


def star(w: Word) -> Word:
    """Involution on words: reverse the letters."""
    return tuple(reversed(w))


def glex_key(w: Word) -> tuple[int, Word]:
    """Sort key implementing the graded-lex order."""
    return (len(w), w)


def sigma(n: int, d: int) -> int:
    """Number of words of length at most ``d`` in ``n`` letters."""
    if n == 1:
        return d + 1
    return (n ** (d + 1) - 1) // (n - 1)


def words_up_to(variables: Iterable[int], d: int, mindeg: int = 0) -> list[Word]:
    """All words in ``variables`` with ``mindeg <= length <= d``, graded-lex sorted."""
    letters = sorted(set(variables))
    out: list[Word] = []
    for k in range(max(mindeg, 0), d + 1):
        out.extend(product(letters, repeat=k))
    return out


class NCPolynomial:
    """Real polynomial in noncommuting symmetric variables ``X1..Xn``.

    Parameters
    ----------
    terms : mapping Word -> float, optional
        Coefficients.  Repeated words are not possible in a mapping; use
        :meth:`from_terms` to merge an iterable of pairs.
    nvars : int, optional
        Number of variables.  Defaults to the largest index present.
    drop_tol : float
        Coefficients with ``abs(c) <= drop_tol`` are dropped.  The default
        drops only exact zeros.

    Notes
    -----
    Instances are immutable and hashable; arithmetic returns new objects.
    """

    __slots__ = ("_terms", "_nvars", "_hash")

    def __init__(self, terms: Mapping[Word, float] | None = None,
                 nvars: int | None = None, drop_tol: float = 0.0):
        clean: dict[Word, float] = {}
        for w, c in (terms or {}).items():
            w = tuple(int(i) for i in w)
            if any(i < 1 for i in w):
                raise ValueError(f"variable indices are 1-based, got {w}")
            c = float(c)
            if abs(c) > drop_tol:
                clean[w] = c
        top = max((max(w) for w in clean if w), default=0)
        if nvars is None:
            nvars = top
        elif top > nvars:
            raise ValueError(f"word uses X{top} but nvars={nvars}")
        self._terms = dict(sorted(clean.items(), key=lambda kv: glex_key(kv[0])))
        self._nvars = int(nvars)
        self._hash = None

    # construction helpers
    @classmethod
    def from_terms(cls, pairs: Iterable[tuple[Word, float]], nvars: int | None = None,
                   drop_tol: float = 0.0) -> "NCPolynomial":
        acc: dict[Word, float] = {}
        for w, c in pairs:
            w = tuple(w)
            acc[w] = acc.get(w, 0.0) + float(c)
        return cls(acc, nvars, drop_tol)

    @classmethod
    def variable(cls, i: int, nvars: int | None = None) -> "NCPolynomial":
        return cls({(i,): 1.0}, nvars)

    @classmethod
    def constant(cls, c: float, nvars: int = 0) -> "NCPolynomial":
        return cls({(): c}, nvars)

    # basic accessors
    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def terms(self) -> dict[Word, float]:
        """Copy of the coefficient map, graded-lex ordered."""
        return dict(self._terms)

    def items(self) -> Iterator[tuple[Word, float]]:
        return iter(self._terms.items())

    def words(self) -> list[Word]:
        return list(self._terms)

    def coefficient(self, w: Word) -> float:
        return self._terms.get(tuple(w), 0.0)

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self):
        """Largest word length, or :data:`NEG_INF` for the zero polynomial."""
        if not self._terms:
            return NEG_INF
        return max(len(w) for w in self._terms)

    @property
    def mindeg(self):
        if not self._terms:
            return NEG_INF
        return min(len(w) for w in self._terms)

    def support(self) -> frozenset[int]:
        """Variables that occur in some monomial."""
        return frozenset(i for w in self._terms for i in w)

    # involution
    def star(self) -> "NCPolynomial":
        return NCPolynomial({star(w): c for w, c in self._terms.items()}, self._nvars)

    def is_symmetric(self, tol: float = 0.0) -> bool:
        for w, c in self._terms.items():
            if abs(c - self._terms.get(star(w), 0.0)) > tol:
                return False
        return True

    def symmetrized(self) -> "NCPolynomial":
        """``(f + f*)/2``."""
        return (self + self.star()) * 0.5

    def chop(self, tol: float) -> "NCPolynomial":
        return NCPolynomial(self._terms, self._nvars, drop_tol=tol)

    def with_nvars(self, nvars: int) -> "NCPolynomial":
        return NCPolynomial(self._terms, nvars)

    # arithmetic
    def _coerce(self, other) -> "NCPolynomial":
        if isinstance(other, NCPolynomial):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return NCPolynomial({(): float(other)}, self._nvars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self._terms)
        for w, c in other._terms.items():
            acc[w] = acc.get(w, 0.0) + c
        return NCPolynomial(acc, max(self._nvars, other._nvars))

    __radd__ = __add__

    def __neg__(self):
        return NCPolynomial({w: -c for w, c in self._terms.items()}, self._nvars)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return NCPolynomial({w: c * float(other) for w, c in self._terms.items()},
                                self._nvars)
        if not isinstance(other, NCPolynomial):
            return NotImplemented
        acc: dict[Word, float] = {}
        for u, a in self._terms.items():
            for v, b in other._terms.items():
                w = u + v
                acc[w] = acc.get(w, 0.0) + a * b
        return NCPolynomial(acc, max(self._nvars, other._nvars))

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self * other
        return NotImplemented

    def __pow__(self, m: int):
        if not isinstance(m, (int, np.integer)) or m < 0:
            raise ValueError("exponent must be a non-negative integer")
        out = NCPolynomial({(): 1.0}, self._nvars)
        for _ in range(int(m)):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float)):
            other = NCPolynomial({(): float(other)})
        if not isinstance(other, NCPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    def almost_equal(self, other: "NCPolynomial", tol: float = 1e-9) -> bool:
        diff = self - other
        return all(abs(c) <= tol for _, c in diff.items())

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for w, c in self._terms.items():
            mono = _format_word(w)
            mag = abs(c)
            if mono and mag == 1.0:
                body = mono
            else:
                num = repr(float(mag))
                if num.endswith(".0"):
                    num = num[:-2]
                body = f"{num}*{mono}" if mono else num
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self) -> str:
        return f"NCPolynomial({str(self)!r}, nvars={self._nvars})"

    def __call__(self, *mats):
        return evaluate(self, mats)


def _format_word(w: Word) -> str:
    out = []
    i = 0
    while i < len(w):
        j = i
        while j < len(w) and w[j] == w[i]:
            j += 1
        run = j - i
        out.append(f"x{w[i]}" + (f"^{run}" if run > 1 else ""))
        i = j
    return "*".join(out)


# ---------------------------------------------------------------------------
# parsing

class ParseError(ValueError):
    """Polynomial text could not be parsed.

    Attributes
    ----------
    offset : int
        Byte offset of the offending token in the UTF-8 encoded input.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset
        self.reason = message


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>[xX]\d+)
  | (?P<op>[-+*^()])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"syntax error: unexpected {text[pos]!r}",
                             len(text[:pos].encode()))
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), len(text[:pos].encode())))
        pos = m.end()
    toks.append(_Tok("end", "", len(text.encode())))
    return toks


class _Parser:
    def __init__(self, text: str, nvars: int | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.nvars = nvars

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.offset)

    def expr(self) -> NCPolynomial:
        out = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def _starts_primary(self) -> bool:
        t = self.peek()
        return t.kind in ("num", "var") or (t.kind == "op" and t.text == "(")

    def term(self) -> NCPolynomial:
        out, had_pow = self.unary()
        while True:
            t = self.peek()
            if t.kind == "op" and t.text == "*":
                self.take()
                rhs, had_pow = self.unary()
            elif had_pow and self._starts_primary():
                # ``x1^2x2`` is accepted: a factor may follow an exponent directly
                rhs, had_pow = self.unary()
            else:
                return out
            out = out * rhs

    def unary(self) -> tuple[NCPolynomial, bool]:
        t = self.peek()
        if t.kind == "op" and t.text in "+-":
            self.take()
            inner, had_pow = self.unary()
            return (inner if t.text == "+" else -inner), had_pow
        return self.power()

    def power(self) -> tuple[NCPolynomial, bool]:
        base = self.primary()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            t = self.take()
            if t.kind != "num" or not t.text.isdigit():
                self.fail("syntax error: exponent must be a non-negative integer", t)
            return base ** int(t.text), True
        return base, False

    def primary(self) -> NCPolynomial:
        t = self.take()
        if t.kind == "num":
            return NCPolynomial({(): float(t.text)})
        if t.kind == "var":
            k = int(t.text[1:])
            if k < 1 or (self.nvars is not None and k > self.nvars):
                raise ParseError(f"variable index out of range: {t.text}", t.offset)
            return NCPolynomial.variable(k)
        if t.kind == "op" and t.text == "(":
            inner = self.expr()
            close = self.take()
            if not (close.kind == "op" and close.text == ")"):
                self.fail("syntax error: expected ')'", close)
            return inner
        if t.kind == "end":
            self.fail("syntax error: unexpected end of input", t)
        self.fail(f"syntax error: unexpected {t.text!r}", t)


def parse(text: str, nvars: int | None = None) -> NCPolynomial:
    """Parse a polynomial such as ``"2*x1*x2 - x2^2 + 0.5"``.

    Variables are ``x<k>`` (case-insensitive, 1-based).  Multiplication must
    be written with ``*`` except directly after an exponent.  ``^m`` is the
    m-fold product.

    Raises
    ------
    ParseError
        On a syntax error or an index outside ``1..nvars``.
    """
    p = _Parser(text, nvars)
    out = p.expr()
    if p.peek().kind != "end":
        p.fail(f"syntax error: unexpected {p.peek().text!r}")
    if nvars is None:
        return out
    return out.with_nvars(nvars)


# ---------------------------------------------------------------------------
# cyclic equivalence

def cyclic_canonical(w: Word) -> Word:
    """Lex-smallest word among all rotations of ``w`` and of ``star(w)``."""
    w = tuple(w)
    if len(w) < 2:
        return w
    r = star(w)
    cands = [w[k:] + w[:k] for k in range(len(w))]
    cands += [r[k:] + r[:k] for k in range(len(r))]
    return min(cands)


def cyclic_project(f: NCPolynomial) -> NCPolynomial:
    """Replace every word by its cyclic canonical form and merge."""
    return NCPolynomial.from_terms(((cyclic_canonical(w), c) for w, c in f.items()),
                                   f.nvars)


def cyclic_degree(f: NCPolynomial):
    """Degree after cyclic projection; :data:`NEG_INF` if everything cancels."""
    return cyclic_project(f).degree


# ---------------------------------------------------------------------------
# Newton chip

def newton_chip(f: NCPolynomial) -> list[Word]:
    """Words that can occur in any hermitian-square decomposition of ``f``.

    For every monomial of the form ``w* w`` in ``f`` the right chips of
    ``w`` (its suffixes) with length between ``ceil(mindeg/2)`` and
    ``floor(deg/2)`` are collected.  The result is sorted graded-lex.

    Raises
    ------
    ValueError
        If ``f`` is not symmetric or has odd degree.
    """
    if f.is_zero:
        return []
    scale = max(abs(c) for _, c in f.items())
    if f.degree % 2 or not f.is_symmetric(1e-12 * scale):
        raise ValueError("the Newton chip basis needs a symmetric polynomial of even degree")
    lo = math.ceil(f.mindeg / 2)
    hi = f.degree // 2
    out: set[Word] = set()
    for u in f.words():
        if len(u) % 2:
            continue
        h = len(u) // 2
        w = u[h:]
        if u[:h] != star(w):
            continue
        for k in range(lo, min(hi, len(w)) + 1):
            out.add(w[len(w) - k:])
    return sorted(out, key=glex_key)


# ---------------------------------------------------------------------------
# evaluation

def _as_tuple(mats: Sequence[np.ndarray], nvars: int, sym_tol: float) -> list[np.ndarray]:
    mats = [np.asarray(A, dtype=float) for A in mats]
    if len(mats) < nvars:
        raise ValueError(f"need {nvars} matrices, got {len(mats)}")
    r = mats[0].shape[0] if mats else 1
    for k, A in enumerate(mats):
        if A.shape != (r, r):
            raise ValueError("all matrices must be square of the same size")
        if not np.allclose(A, A.T, atol=sym_tol * max(1.0, np.abs(A).max(initial=0.0))):
            raise ValueError(f"matrix for X{k + 1} is not symmetric")
    return mats


def evaluate(f: NCPolynomial, mats: Sequence[np.ndarray], sym_tol: float = 1e-9) -> np.ndarray:
    """Evaluate ``f`` at a tuple of symmetric matrices.

    Parameters
    ----------
    f : NCPolynomial
    mats : sequence of (r, r) arrays
        ``mats[i-1]`` is substituted for ``X_i``.
    sym_tol : float
        Relative tolerance of the symmetry check on the inputs.

    Returns
    -------
    numpy.ndarray
        ``f(A)``; symmetric whenever ``f`` is.
    """
    mats = _as_tuple(mats, f.nvars, sym_tol)
    r = mats[0].shape[0] if mats else 1
    cache: dict[Word, np.ndarray] = {(): np.eye(r)}

    def prod_of(w: Word) -> np.ndarray:
        got = cache.get(w)
        if got is None:
            got = prod_of(w[:-1]) @ mats[w[-1] - 1]
            cache[w] = got
        return got

    out = np.zeros((r, r))
    for w, c in f.items():
        out += c * prod_of(w)
    return out
