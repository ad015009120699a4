"""Sparse multivariate polynomials over double-precision coefficients.

Polynomials are immutable maps from exponent tuples to nonzero coefficients.
Range enclosures over boxes use Bernstein coefficients after an affine map of
the box onto the unit cube, with an a-posteriori floating-point error bound
added on both sides so the returned interval always contains the true range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels

MAX_EXPONENT = 255
BERNSTEIN_MAX_DEGREE = 40
BERNSTEIN_MAX_TENSOR = 250_000
_U = 2.0**-53


class PolyError(ValueError):
    """Arity mismatch or other misuse of the polynomial API."""


class PolyParseError(PolyError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


def _graded_lex_key(exps: tuple[int, ...]):
    return (sum(exps), tuple(-e for e in exps))


class Polynomial:
    """Immutable sparse polynomial in ``arity`` variables."""

    __slots__ = ("arity", "_terms", "_cache")

    def __init__(self, arity: int, terms: Mapping[tuple[int, ...], float] | None = None):
        if arity < 0:
            raise PolyError("arity must be non-negative")
        clean: dict[tuple[int, ...], float] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != arity:
                raise PolyError(f"monomial {exps} does not match arity {arity}")
            if any(e < 0 for e in exps):
                raise PolyError(f"negative exponent in {exps}")
            c = float(c)
            if c != 0.0:
                clean[exps] = clean.get(exps, 0.0) + c
                if clean[exps] == 0.0:
                    del clean[exps]
        self.arity = arity
        self._terms = {k: clean[k] for k in sorted(clean, key=_graded_lex_key)}
        self._cache: dict = {}

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, arity: int) -> "Polynomial":
        return cls(arity)

    @classmethod
    def constant(cls, arity: int, value: float) -> "Polynomial":
        return cls(arity, {(0,) * arity: value})

    @classmethod
    def variable(cls, arity: int, index: int) -> "Polynomial":
        exps = [0] * arity
        exps[index] = 1
        return cls(arity, {tuple(exps): 1.0})

    # -- inspection ---------------------------------------------------------
    @property
    def terms(self) -> dict[tuple[int, ...], float]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def var_degrees(self) -> tuple[int, ...]:
        degs = [0] * self.arity
        for exps in self._terms:
            for j, e in enumerate(exps):
                if e > degs[j]:
                    degs[j] = e
        return tuple(degs)

    def constant_term(self) -> float:
        return self._terms.get((0,) * self.arity, 0.0)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Exponent matrix (terms x arity) and coefficient vector."""
        got = self._cache.get("arrays")
        if got is None:
            if self._terms:
                exps = np.array(list(self._terms), dtype=np.int64).reshape(len(self._terms), self.arity)
            else:
                exps = np.zeros((0, self.arity), dtype=np.int64)
            coeffs = np.array(list(self._terms.values()), dtype=np.float64)
            got = (exps, coeffs)
            self._cache["arrays"] = got
        return got

    # -- ring operations ------------------------------------------------------
    def _check(self, other: "Polynomial") -> None:
        if self.arity != other.arity:
            raise PolyError(f"arity mismatch: {self.arity} vs {other.arity}")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Polynomial.constant(self.arity, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0.0) + c
        return Polynomial(self.arity, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.arity, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            s = float(other)
            return Polynomial(self.arity, {k: s * c for k, c in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return multiply(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self * (1.0 / float(other))
        return NotImplemented

    def __pow__(self, e: int):
        if not isinstance(e, (int, np.integer)) or e < 0:
            raise PolyError("only non-negative integer powers are supported")
        result = Polynomial.constant(self.arity, 1.0)
        base = self
        e = int(e)
        while e:
            if e & 1:
                result = multiply(result, base)
            e >>= 1
            if e:
                base = multiply(base, base)
        return result

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.arity == other.arity and self._terms == other._terms

    def __hash__(self):
        return hash((self.arity, tuple(self._terms.items())))

    def __call__(self, point: Sequence[float]) -> float:
        return evaluate(self, point)

    def __repr__(self):
        names = [f"x{i + 1}" for i in range(self.arity)]
        return f"Polynomial({self.to_string(names)!r})"

    def max_abs_diff(self, other: "Polynomial") -> float:
        self._check(other)
        keys = set(self._terms) | set(other._terms)
        return max((abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) for k in keys), default=0.0)

    def pruned(self, tol: float) -> "Polynomial":
        return Polynomial(self.arity, {k: c for k, c in self._terms.items() if abs(c) > tol})

    def to_string(self, names: Sequence[str]) -> str:
        """Canonical text form: graded-lex order, 17 significant digits."""
        if len(names) != self.arity:
            raise PolyError("name list does not match arity")
        if not self._terms:
            return "0"
        parts = []
        for i, (exps, c) in enumerate(self._terms.items()):
            factors = [format(abs(c), ".17g")]
            for name, e in zip(names, exps):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            body = "*".join(factors)
            if i == 0:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append((" - " if c < 0 else " + ") + body)
        return "".join(parts)


# ---------------------------------------------------------------------------
# core operations


def multiply(a: Polynomial, b: Polynomial) -> Polynomial:
    if a.arity != b.arity:
        raise PolyError(f"arity mismatch: {a.arity} vs {b.arity}")
    out: dict[tuple[int, ...], float] = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            k = tuple(x + y for x, y in zip(ea, eb))
            out[k] = out.get(k, 0.0) + ca * cb
    return Polynomial(a.arity, out)


def compose(v: Polynomial, subst: Sequence[Polynomial]) -> Polynomial:
    """Substitute ``subst[i]`` for variable ``i`` of ``v``."""
    if len(subst) != v.arity:
        raise PolyError(f"need {v.arity} substitutions, got {len(subst)}")
    if not subst:
        return v
    arity = subst[0].arity
    for s in subst:
        if s.arity != arity:
            raise PolyError("substitutions must share one arity")
    degs = v.var_degrees()
    powers: list[list[Polynomial]] = []
    for j, s in enumerate(subst):
        pw = [Polynomial.constant(arity, 1.0)]
        for _ in range(degs[j]):
            pw.append(multiply(pw[-1], s))
        powers.append(pw)
    acc: dict[tuple[int, ...], float] = {}
    for exps, c in v.items():
        term = Polynomial.constant(arity, c)
        for j, e in enumerate(exps):
            if e:
                term = multiply(term, powers[j][e])
        for k, tc in term.items():
            acc[k] = acc.get(k, 0.0) + tc
    return Polynomial(arity, acc)


def evaluate(p: Polynomial, point: Sequence[float]) -> float:
    if len(point) != p.arity:
        raise PolyError(f"point has {len(point)} coordinates, polynomial arity is {p.arity}")
    xs = [float(x) for x in point]
    if not all(math.isfinite(x) for x in xs):
        raise PolyError("non-finite coordinate")
    acc = 0.0
    for exps, c in p.items():
        m = c
        for x, e in zip(xs, exps):
            for _ in range(e):
                m = m * x
        acc = acc + m
    return acc


def evaluate_many(p: Polynomial, points: np.ndarray) -> np.ndarray:
    """Evaluate at each row of ``points`` (shape ``(N, arity)``)."""
    pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, p.arity)
    exps, coeffs = p.arrays()
    if coeffs.size == 0:
        return np.zeros(pts.shape[0])
    return kernels.eval_terms(exps, coeffs, pts)


def evaluation_error(p: Polynomial, point: Sequence[float]) -> float:
    """Bound on the rounding error of :func:`evaluate` at ``point``."""
    mag = 0.0
    for exps, c in p.items():
        m = abs(c)
        for x, e in zip(point, exps):
            m *= abs(float(x)) ** e
        mag += m
    n = p.degree + len(p) + 2
    return 2.0 * n * _U * mag + 1e-300


def substitute_tail(p: Polynomial, values: Sequence[float], keep: int) -> Polynomial:
    """Fix the trailing ``arity - keep`` variables of ``p`` to ``values``."""
    if keep + len(values) != p.arity:
        raise PolyError("value count does not match the trailing variables")
    out: dict[tuple[int, ...], float] = {}
    for exps, c in p.items():
        m = c
        for x, e in zip(values, exps[keep:]):
            for _ in range(e):
                m *= float(x)
        k = exps[:keep]
        out[k] = out.get(k, 0.0) + m
    return Polynomial(keep, out)


def variables(arity: int) -> list[Polynomial]:
    return [Polynomial.variable(arity, i) for i in range(arity)]


def monomial_basis(arity: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent vectors of total degree <= ``degree`` in graded-lex order."""
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], left: int, remaining: int):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for e in range(left + 1):
            rec(prefix + [e], left - e, remaining - 1)

    rec([], degree, arity)
    return sorted(out, key=_graded_lex_key)


# ---------------------------------------------------------------------------
# parsing


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.text = text
        self.names = {n: i for i, n in enumerate(names)}
        self.arity = len(names)
        self.pos = 0

    def error(self, msg: str, at: int | None = None):
        raise PolyParseError(msg, self.pos if at is None else at)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, s: str) -> bool:
        self.skip()
        if self.text.startswith(s, self.pos):
            self.pos += len(s)
            return True
        return False

    def parse(self) -> Polynomial:
        self.skip()
        if self.pos == len(self.text):
            self.error("empty expression")
        p = self.expr()
        self.skip()
        if self.pos != len(self.text):
            self.error(f"unexpected character {self.text[self.pos]!r}")
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while True:
            if self.take("+"):
                p = p + self.term()
            elif self.take("-"):
                p = p - self.term()
            else:
                return p

    def term(self) -> Polynomial:
        p = self.unary()
        while True:
            if self.peek() == "*" and not self.text.startswith("**", self.pos):
                self.pos += 1
                p = p * self.unary()
            elif self.peek() == "/":
                at = self.pos
                self.pos += 1
                d = self.unary()
                if d.degree > 0 or len(d) > 1:
                    self.error("division only by a constant", at)
                c = d.constant_term()
                if c == 0.0:
                    self.error("division by zero", at)
                p = p * (1.0 / c)
            else:
                return p

    def unary(self) -> Polynomial:
        if self.take("-"):
            return -self.unary()
        if self.take("+"):
            return self.unary()
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.take("^") or self.take("**"):
            self.skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                self.error("expected a non-negative integer exponent")
            e = int(self.text[start:self.pos])
            if e > MAX_EXPONENT:
                self.error(f"exponent {e} exceeds {MAX_EXPONENT}", start)
            return base ** e
        return base

    def atom(self) -> Polynomial:
        self.skip()
        start = self.pos
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            p = self.expr()
            if not self.take(")"):
                self.error("expected ')'")
            return p
        if ch.isdigit() or ch == ".":
            j = self.pos
            t = self.text
            while j < len(t) and (t[j].isdigit() or t[j] == "."):
                j += 1
            if j < len(t) and t[j] in "eE":
                k = j + 1
                if k < len(t) and t[k] in "+-":
                    k += 1
                if k < len(t) and t[k].isdigit():
                    while k < len(t) and t[k].isdigit():
                        k += 1
                    j = k
            try:
                value = float(t[start:j])
            except ValueError:
                self.error(f"malformed number {t[start:j]!r}", start)
            self.pos = j
            return Polynomial.constant(self.arity, value)
        if ch.isalpha() or ch == "_":
            j = self.pos
            while j < len(self.text) and (self.text[j].isalnum() or self.text[j] == "_"):
                j += 1
            name = self.text[start:j]
            if name not in self.names:
                self.error(f"unknown variable {name!r}", start)
            self.pos = j
            return Polynomial.variable(self.arity, self.names[name])
        if ch == "":
            self.error("unexpected end of input")
        self.error(f"unexpected character {ch!r}")


def parse_poly(text: str, variables: Sequence[str]) -> Polynomial:
    """Parse ``text`` as a polynomial over the ordered variable names."""
    if len(set(variables)) != len(variables):
        raise PolyError("duplicate variable names")
    return _Parser(text, list(variables)).parse()


# ---------------------------------------------------------------------------
# boxes and range enclosures


@dataclass(frozen=True, order=True)
class Box:
    """Axis-aligned closed box; degenerate dimensions are allowed."""

    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        for lo, hi in b:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise PolyError("box bounds must be finite")
            if lo > hi:
                raise PolyError(f"interval [{lo}, {hi}] has lo > hi")
        object.__setattr__(self, "bounds", b)

    @classmethod
    def of(cls, *intervals: Sequence[float]) -> "Box":
        return cls(tuple(tuple(iv) for iv in intervals))

    @property
    def arity(self) -> int:
        return len(self.bounds)

    @property
    def lo(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def hi(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    def widths(self) -> list[float]:
        return [hi - lo for lo, hi in self.bounds]

    def center(self) -> tuple[float, ...]:
        return tuple(0.5 * (lo + hi) for lo, hi in self.bounds)

    def contains_point(self, x: Sequence[float]) -> bool:
        return all(lo <= xi <= hi for (lo, hi), xi in zip(self.bounds, x))

    def contains_box(self, other: "Box") -> bool:
        return all(a <= c and d <= b for (a, b), (c, d) in zip(self.bounds, other.bounds))

    def split(self) -> tuple["Box", "Box"]:
        """Bisect the widest dimension (lowest index on ties)."""
        w = self.widths()
        d = max(range(len(w)), key=lambda i: (w[i], -i))
        lo, hi = self.bounds[d]
        mid = 0.5 * (lo + hi)
        left = list(self.bounds)
        right = list(self.bounds)
        left[d] = (lo, mid)
        right[d] = (mid, hi)
        return Box(tuple(left)), Box(tuple(right))

    def corners(self) -> list[tuple[float, ...]]:
        pts = [()]
        for lo, hi in self.bounds:
            pts = [p + (v,) for p in pts for v in ((lo,) if lo == hi else (lo, hi))]
        return pts

    def to_list(self) -> list[list[float]]:
        return [[lo, hi] for lo, hi in self.bounds]


@dataclass(frozen=True)
class RangeEnclosure:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise PolyError("enclosure with lo > hi")

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


def _round_down(q: Fraction) -> float:
    f = float(q)
    if Fraction(f) > q:
        f = math.nextafter(f, -math.inf)
    return f


def _round_up(q: Fraction) -> float:
    f = float(q)
    if Fraction(f) < q:
        f = math.nextafter(f, math.inf)
    return f


def _affine_range(p: Polynomial, box: Box) -> RangeEnclosure:
    lo = hi = Fraction(p.constant_term())
    for exps, c in p.items():
        if sum(exps) == 0:
            continue
        j = exps.index(1)
        a, b = box.bounds[j]
        ca, cb = Fraction(c) * Fraction(a), Fraction(c) * Fraction(b)
        lo += min(ca, cb)
        hi += max(ca, cb)
    return RangeEnclosure(_round_down(lo), _round_up(hi))


@lru_cache(maxsize=128)
def _bernstein_matrix(d: int) -> np.ndarray:
    m = np.zeros((d + 1, d + 1))
    for J in range(d + 1):
        for j in range(J + 1):
            m[J, j] = math.comb(J, j) / math.comb(d, j)
    return m


def _shift_matrix(d: int, lo: float, w: float) -> np.ndarray:
    s = np.zeros((d + 1, d + 1))
    for i in range(d + 1):
        for j in range(i + 1):
            s[j, i] = math.comb(i, j) * (lo ** (i - j)) * (w ** j)
    return s


def _dense(p: Polynomial) -> tuple[np.ndarray, np.ndarray]:
    got = p._cache.get("dense")
    if got is None:
        degs = p.var_degrees()
        a = np.zeros(tuple(d + 1 for d in degs))
        for exps, c in p.items():
            a[exps] += c
        got = (a, np.abs(a))
        p._cache["dense"] = got
    return got


def _contract(tensor: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    out = tensor
    for ax, m in enumerate(mats):
        out = np.moveaxis(np.tensordot(m, out, axes=([1], [ax])), 0, ax)
    return out


def bernstein_coefficients(p: Polynomial, box: Box) -> tuple[np.ndarray, float]:
    """Bernstein coefficients of ``p`` on ``box`` and their rounding-error bound."""
    degs = p.var_degrees()
    a, a_abs = _dense(p)
    mats, mats_abs = [], []
    for d, (lo, hi) in zip(degs, box.bounds):
        w = hi - lo
        bm = _bernstein_matrix(d)
        mats.append(bm @ _shift_matrix(d, lo, w))
        mats_abs.append(bm @ _shift_matrix(d, abs(lo), w))
    b = _contract(a, mats)
    mag = _contract(a_abs, mats_abs)
    n = 4 * sum(d + 1 for d in degs) + 8
    err = 1.01 * n * _U * float(mag.max(initial=0.0)) + 1e-300
    return b, err


def _interval_pow(lo: float, hi: float, e: int) -> tuple[float, float]:
    if e == 0:
        return 1.0, 1.0
    a, b = lo**e, hi**e
    if e % 2 == 0:
        top = max(a, b)
        bottom = 0.0 if lo <= 0.0 <= hi else min(a, b)
        return bottom, top
    return a, b


def interval_range(p: Polynomial, box: Box) -> RangeEnclosure:
    lo_sum = hi_sum = mag = 0.0
    for exps, c in p.items():
        tlo, thi = c, c
        tmag = abs(c)
        for (blo, bhi), e in zip(box.bounds, exps):
            if e == 0:
                continue
            plo, phi = _interval_pow(blo, bhi, e)
            cands = (tlo * plo, tlo * phi, thi * plo, thi * phi)
            tlo, thi = min(cands), max(cands)
            tmag *= max(abs(blo), abs(bhi)) ** e
        lo_sum += tlo
        hi_sum += thi
        mag += tmag
    err = 2.0 * (p.degree + len(p) + 4) * _U * mag + 1e-300
    return RangeEnclosure(lo_sum - err, hi_sum + err)


def enclose_range(p: Polynomial, box: Box) -> RangeEnclosure:
    """Interval containing ``{p(x) : x in box}``."""
    if box.arity != p.arity:
        raise PolyError(f"box arity {box.arity} does not match polynomial arity {p.arity}")
    if p.is_zero():
        return RangeEnclosure(0.0, 0.0)
    if p.degree <= 1:
        return _affine_range(p, box)
    degs = p.var_degrees()
    size = math.prod(d + 1 for d in degs)
    if p.degree > BERNSTEIN_MAX_DEGREE or size > BERNSTEIN_MAX_TENSOR:
        return interval_range(p, box)
    b, err = bernstein_coefficients(p, box)
    return RangeEnclosure(float(b.min()) - err, float(b.max()) + err)


def enclose_many(polys: Iterable[Polynomial], box: Box) -> list[RangeEnclosure]:
    return [enclose_range(p, box) for p in polys]
