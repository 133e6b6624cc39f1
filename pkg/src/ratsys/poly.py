"""Sparse multivariate polynomials with exact rational coefficients.

A :class:`Polynomial` is an immutable map from exponent tuples to nonzero
:class:`fractions.Fraction` coefficients. All arithmetic is exact. Monomial
orders are expressed as key functions so that ``max(terms, key=order.key)``
yields the leading monomial.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union

Exponent = tuple[int, ...]
Coefficient = Union[int, Fraction]

# exponents model machine words; larger ones are an error, never wrapped
MAX_EXPONENT = 2**63 - 1


class PolynomialError(ValueError):
    """Raised on malformed polynomial operations (arity mismatch, bad index)."""


@dataclass(frozen=True)
class MonomialOrder:
    """A monomial order.

    ``kind`` is one of ``"grlex"``, ``"lex"`` or ``"block"``. For block orders
    ``blocks`` holds the sizes of the leading variable blocks; variables not
    covered form a final block. Blocks are compared left to right, each with
    graded reverse lexicographic order, which makes every leading block an
    elimination block.
    """

    kind: str = "grlex"
    blocks: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("grlex", "lex", "block"):
            raise PolynomialError(f"unknown monomial order {self.kind!r}")
        if self.kind == "block" and (not self.blocks or min(self.blocks) < 1):
            raise PolynomialError("block order needs positive block sizes")

    @property
    def key(self) -> Callable[[Exponent], tuple]:
        if self.kind == "grlex":
            return _grlex_key
        if self.kind == "lex":
            return _lex_key
        return _block_key(self.blocks)

    def __str__(self) -> str:
        if self.kind == "block":
            return "block(" + ",".join(map(str, self.blocks)) + ")"
        return self.kind


def _grlex_key(e: Exponent) -> tuple:
    return (sum(e), e)


def _lex_key(e: Exponent) -> tuple:
    return e


def _grevlex_part(e: Sequence[int]) -> tuple:
    return (sum(e), tuple(-a for a in reversed(e)))


def _block_key(blocks: tuple[int, ...]) -> Callable[[Exponent], tuple]:
    cuts = []
    start = 0
    for size in blocks:
        cuts.append((start, start + size))
        start += size

    def key(e: Exponent) -> tuple:
        parts = [_grevlex_part(e[a:b]) for a, b in cuts]
        parts.append(_grevlex_part(e[start:]))
        return tuple(parts)

    return key


GRLEX = MonomialOrder("grlex")
LEX = MonomialOrder("lex")


def block_order(*sizes: int) -> MonomialOrder:
    return MonomialOrder("block", tuple(sizes))


def _as_fraction(c: Coefficient) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"coefficients must be exact rationals, got {type(c).__name__}")


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` variables over the rationals."""

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponent, Coefficient] | None = None):
        if nvars < 0:
            raise PolynomialError("nvars must be nonnegative")
        clean: dict[Exponent, Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(a) for a in exp)
            if len(exp) != nvars:
                raise PolynomialError(f"exponent {exp} does not have length {nvars}")
            if any(a < 0 for a in exp):
                raise PolynomialError(f"negative exponent in {exp}")
            if any(a > MAX_EXPONENT for a in exp):
                raise OverflowError(f"exponent {exp} exceeds machine word")
            c = _as_fraction(c)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
                if not clean[exp]:
                    del clean[exp]
        self.nvars = nvars
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: dict[Exponent, Fraction]) -> "Polynomial":
        # trusted constructor: caller guarantees no zero coefficients
        p = object.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        p._hash = None
        return p

    # ---- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls._raw(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c: Coefficient) -> "Polynomial":
        c = _as_fraction(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Polynomial":
        if not 0 <= index < nvars:
            raise PolynomialError(f"variable index {index} out of range for {nvars} variables")
        e = [0] * nvars
        e[index] = 1
        return cls._raw(nvars, {tuple(e): Fraction(1)})

    @classmethod
    def monomial(cls, exp: Exponent, c: Coefficient = 1) -> "Polynomial":
        return cls(len(exp), {exp: c})

    # ---- basic queries ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and not any(next(iter(self.terms))))

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def coefficient(self, exp: Exponent) -> Fraction:
        return self.terms.get(tuple(exp), Fraction(0))

    def total_degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self.terms), default=-1)

    def variables(self) -> set[int]:
        """Indices of variables that occur with a positive exponent."""
        out: set[int] = set()
        for e in self.terms:
            out.update(i for i, a in enumerate(e) if a)
        return out

    def leading_term(self, order: MonomialOrder = GRLEX) -> tuple[Exponent, Fraction]:
        if not self.terms:
            raise PolynomialError("zero polynomial has no leading term")
        e = max(self.terms, key=order.key)
        return e, self.terms[e]

    def leading_coefficient(self, order: MonomialOrder = GRLEX) -> Fraction:
        return self.leading_term(order)[1]

    def sorted_terms(self, order: MonomialOrder = GRLEX) -> list[tuple[Exponent, Fraction]]:
        """Terms in decreasing order."""
        k = order.key
        return sorted(self.terms.items(), key=lambda t: k(t[0]), reverse=True)

    def __iter__(self) -> Iterator[tuple[Exponent, Fraction]]:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)

    # ---- arithmetic ---------------------------------------------------------

    def _check(self, other: "Polynomial") -> None:
        if self.nvars != other.nvars:
            raise PolynomialError(f"mismatched nvars: {self.nvars} vs {other.nvars}")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(self.nvars, other)
        return NotImplemented

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if len(other.terms) > len(self.terms):
            small, big = self.terms, other.terms
        else:
            small, big = other.terms, self.terms
        out = dict(big)
        for e, c in small.items():
            v = out.get(e)
            if v is None:
                out[e] = c
            else:
                v += c
                if v:
                    out[e] = v
                else:
                    del out[e]
        return Polynomial._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def scale(self, c: Coefficient) -> "Polynomial":
        c = _as_fraction(c)
        if not c:
            return Polynomial.zero(self.nvars)
        if c == 1:
            return self
        return Polynomial._raw(self.nvars, {e: a * c for e, a in self.terms.items()})

    def mul_term(self, exp: Exponent, c: Fraction) -> "Polynomial":
        """Multiply by the single term ``c * x^exp``."""
        if not c:
            return Polynomial.zero(self.nvars)
        return Polynomial._raw(
            self.nvars,
            {tuple(a + b for a, b in zip(e, exp)): a_c * c for e, a_c in self.terms.items()},
        )

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check(other)
        if not self.terms or not other.terms:
            return Polynomial.zero(self.nvars)
        if len(self.terms) < len(other.terms):
            a, b = self.terms, other.terms
        else:
            a, b = other.terms, self.terms
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in a.items():
            for e2, c2 in b.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                v = out.get(e)
                out[e] = c1 * c2 if v is None else v + c1 * c2
        out = {e: c for e, c in out.items() if c}
        if out and max(max(e, default=0) for e in out) > MAX_EXPONENT:
            raise OverflowError("exponent exceeds machine word")
        return Polynomial._raw(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise PolynomialError("exponent must be a nonnegative integer")
        if k and self.terms and max(max(e, default=0) for e in self.terms) * k > MAX_EXPONENT:
            raise OverflowError("exponent exceeds machine word")
        result = Polynomial.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.nvars, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"Polynomial({self.format()})"

    # ---- calculus and evaluation -------------------------------------------

    def differentiate(self, index: int) -> "Polynomial":
        if not 0 <= index < self.nvars:
            raise PolynomialError(f"variable index {index} out of range for {self.nvars} variables")
        out: dict[Exponent, Fraction] = {}
        for e, c in self.terms.items():
            k = e[index]
            if k:
                d = list(e)
                d[index] = k - 1
                out[tuple(d)] = c * k
        return Polynomial._raw(self.nvars, out)

    def evaluate(self, point: Sequence) -> Fraction:
        """Exact value at ``point`` (rationals in, rational out)."""
        if len(point) != self.nvars:
            raise PolynomialError(f"point has {len(point)} coordinates, expected {self.nvars}")
        total = Fraction(0)
        for e, c in self.terms.items():
            v = c
            for x, k in zip(point, e):
                if k:
                    v *= x**k
            total += v
        return total

    def evaluate_float(self, point: Sequence[float]) -> float:
        total = 0.0
        for e, c in self.terms.items():
            v = float(c)
            for x, k in zip(point, e):
                if k:
                    v *= x**k
            total += v
        return total

    # ---- structural helpers -------------------------------------------------

    def embed(self, nvars: int, positions: Sequence[int]) -> "Polynomial":
        """Move variable ``i`` to index ``positions[i]`` of an ``nvars``-ring."""
        if len(positions) != self.nvars:
            raise PolynomialError("positions must cover every variable")
        out: dict[Exponent, Fraction] = {}
        for e, c in self.terms.items():
            new = [0] * nvars
            for i, k in enumerate(e):
                if k:
                    new[positions[i]] = k
            out[tuple(new)] = c
        return Polynomial._raw(nvars, out)

    def restrict(self, keep: Sequence[int]) -> "Polynomial":
        """Drop to the ring on variables ``keep`` (which must cover the support)."""
        keep = list(keep)
        dropped = self.variables() - set(keep)
        if dropped:
            raise PolynomialError(f"polynomial involves dropped variables {sorted(dropped)}")
        return Polynomial._raw(
            len(keep), {tuple(e[i] for i in keep): c for e, c in self.terms.items()}
        )

    def coefficients_in(self, index: int) -> dict[int, "Polynomial"]:
        """View as a polynomial in variable ``index``: degree -> coefficient."""
        out: dict[int, dict[Exponent, Fraction]] = {}
        for e, c in self.terms.items():
            k = e[index]
            rest = e[:index] + (0,) + e[index + 1 :]
            out.setdefault(k, {})[rest] = c
        return {k: Polynomial._raw(self.nvars, t) for k, t in out.items()}

    def monic(self, order: MonomialOrder = GRLEX) -> "Polynomial":
        if not self.terms:
            return self
        return self.scale(1 / self.leading_coefficient(order))

    def format(self, names: Sequence[str] | None = None) -> str:
        """Render in the expression grammar, terms in decreasing graded-lex order."""
        if names is None:
            names = [f"x{i + 1}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        pieces = []
        for e, c in self.sorted_terms(GRLEX):
            mono = "*".join(
                names[i] if k == 1 else f"{names[i]}^{k}" for i, k in enumerate(e) if k
            )
            mag = abs(c)
            if not mono:
                body = _format_rational(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{_format_rational(mag)}*{mono}"
            pieces.append(("-" if c < 0 else "+", body))
        sign, body = pieces[0]
        text = ("-" if sign == "-" else "") + body
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text


def _format_rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_rational(c: Fraction) -> str:
    """Render a rational as ``"p/q"`` (or ``"p"`` when integral)."""
    return _format_rational(Fraction(c))


# ---- division and gcd -------------------------------------------------------


def divides(a: Exponent, b: Exponent) -> bool:
    """True iff monomial ``a`` divides monomial ``b``."""
    return all(x <= y for x, y in zip(a, b))


def divmod_poly(p: Polynomial, d: Polynomial, order: MonomialOrder = GRLEX) -> tuple[Polynomial, Polynomial]:
    """Multivariate division by a single divisor: ``p = q*d + r``."""
    p._check(d)
    if d.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    key = order.key
    lm, lc = d.leading_term(order)
    rest = {e: c for e, c in d.terms.items() if e != lm}
    f = dict(p.terms)
    q: dict[Exponent, Fraction] = {}
    r: dict[Exponent, Fraction] = {}
    while f:
        m = max(f, key=key)
        c = f.pop(m)
        if divides(lm, m):
            shift = tuple(a - b for a, b in zip(m, lm))
            t = c / lc
            q[shift] = q.get(shift, Fraction(0)) + t
            for e, a in rest.items():
                e2 = tuple(x + y for x, y in zip(e, shift))
                v = f.get(e2, Fraction(0)) - t * a
                if v:
                    f[e2] = v
                else:
                    f.pop(e2, None)
        else:
            r[m] = c
    return (
        Polynomial._raw(p.nvars, {e: c for e, c in q.items() if c}),
        Polynomial._raw(p.nvars, r),
    )


def exact_div(p: Polynomial, d: Polynomial) -> Polynomial:
    """Quotient ``p / d``; raises :class:`PolynomialError` if ``d`` does not divide ``p``."""
    if d.is_constant():
        if d.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        return p.scale(1 / d.constant_term())
    q, r = divmod_poly(p, d)
    if r:
        raise PolynomialError("inexact polynomial division")
    return q


def _main_variable(p: Polynomial, q: Polynomial) -> int | None:
    vs = p.variables() | q.variables()
    return max(vs) if vs else None


def _content(p: Polynomial, v: int) -> Polynomial:
    """Gcd of the coefficients of ``p`` viewed as a polynomial in ``v``."""
    coeffs = sorted(p.coefficients_in(v).values(), key=len)
    g = coeffs[0]
    for c in coeffs[1:]:
        if g.is_constant():
            break
        g = _gcd(g, c)
    if g.is_constant():
        return Polynomial.constant(p.nvars, 1)
    return g.monic()


def _primitive(p: Polynomial, v: int) -> Polynomial:
    return exact_div(p, _content(p, v)).monic()


def _prem(a: Polynomial, b: Polynomial, v: int) -> Polynomial:
    db = b.degree_in(v)
    lcb = b.coefficients_in(v)[db]
    r = a
    while r and r.degree_in(v) >= db:
        dr = r.degree_in(v)
        lcr = r.coefficients_in(v)[dr]
        shift = [0] * r.nvars
        shift[v] = dr - db
        r = lcb * r - lcr * b.mul_term(tuple(shift), Fraction(1))
    return r


def _gcd(p: Polynomial, q: Polynomial) -> Polynomial:
    # both nonzero; result determined up to a rational unit
    if p.is_constant() or q.is_constant():
        return Polynomial.constant(p.nvars, 1)
    v = _main_variable(p, q)
    if p.degree_in(v) <= 0:
        return _gcd(p, _content(q, v))
    if q.degree_in(v) <= 0:
        return _gcd(_content(p, v), q)
    cp, cq = _content(p, v), _content(q, v)
    c = _gcd(cp, cq)
    a, b = exact_div(p, cp), exact_div(q, cq)
    if a.degree_in(v) < b.degree_in(v):
        a, b = b, a
    while b:
        if b.degree_in(v) == 0:
            a = Polynomial.constant(p.nvars, 1)
            break
        r = _prem(a, b, v)
        a, b = b, (_primitive(r, v) if r else r)
    return (_primitive(a, v) * c).monic() if not a.is_constant() else c.monic()


def gcd(p: Polynomial, q: Polynomial) -> Polynomial:
    """Greatest common divisor, monic under graded-lex; ``gcd(p, 0)`` is ``p`` made monic.

    Primitive polynomial remainder sequence, recursing on the highest-index
    variable present.
    """
    p._check(q)
    if p.is_zero():
        return q.monic()
    if q.is_zero():
        return p.monic()
    return _gcd(p, q).monic()


def lcm_exp(a: Exponent, b: Exponent) -> Exponent:
    return tuple(max(x, y) for x, y in zip(a, b))


def variables(nvars: int) -> list[Polynomial]:
    """The coordinate polynomials ``x_1, ..., x_n``."""
    return [Polynomial.variable(nvars, i) for i in range(nvars)]


def product(polys: Iterable[Polynomial], nvars: int) -> Polynomial:
    out = Polynomial.constant(nvars, 1)
    for p in polys:
        out = out * p
    return out
