"""Rational functions in canonical (coprime, normalized-denominator) form."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence, Union

from .poly import GRLEX, Coefficient, Polynomial, PolynomialError, exact_div, gcd


class RationalFunctionError(ValueError):
    pass


def _normalizer(den: Polynomial) -> Fraction:
    c = den.constant_term()
    if c:
        return c
    return den.leading_coefficient(GRLEX)


class RationalFunction:
    """A quotient ``numerator / denominator`` kept in canonical form.

    Numerator and denominator are coprime. If the denominator has a nonzero
    constant term that term is 1, otherwise its graded-lex leading
    coefficient is 1. The zero function is ``0/1``.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Polynomial, den: Polynomial | None = None):
        if den is None:
            den = Polynomial.constant(num.nvars, 1)
        num._check(den)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if num.is_zero():
            num, den = num, Polynomial.constant(num.nvars, 1)
        elif not den.is_constant():
            g = gcd(num, den)
            if not g.is_constant():
                num, den = exact_div(num, g), exact_div(den, g)
        s = _normalizer(den)
        if s != 1:
            num, den = num.scale(1 / s), den.scale(1 / s)
        self.num = num
        self.den = den
        self._hash = None

    @classmethod
    def _raw(cls, num: Polynomial, den: Polynomial) -> "RationalFunction":
        r = object.__new__(cls)
        r.num, r.den, r._hash = num, den, None
        return r

    @classmethod
    def constant(cls, nvars: int, c: Coefficient) -> "RationalFunction":
        return cls._raw(Polynomial.constant(nvars, c), Polynomial.constant(nvars, 1))

    @classmethod
    def variable(cls, nvars: int, index: int) -> "RationalFunction":
        return cls._raw(Polynomial.variable(nvars, index), Polynomial.constant(nvars, 1))

    @classmethod
    def from_poly(cls, p: Polynomial) -> "RationalFunction":
        return cls._raw(p, Polynomial.constant(p.nvars, 1))

    @property
    def nvars(self) -> int:
        return self.num.nvars

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def variables(self) -> set[int]:
        return self.num.variables() | self.den.variables()

    # ---- field arithmetic ---------------------------------------------------

    def _coerce(self, other) -> "RationalFunction":
        if isinstance(other, RationalFunction):
            if other.nvars != self.nvars:
                raise PolynomialError(f"mismatched nvars: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, Polynomial):
            return RationalFunction.from_poly(other)
        if isinstance(other, (int, Fraction)):
            return RationalFunction.constant(self.nvars, other)
        return NotImplemented

    def __add__(self, other) -> "RationalFunction":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "RationalFunction":
        return RationalFunction._raw(-self.num, self.den)

    def __sub__(self, other) -> "RationalFunction":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "RationalFunction":
        return (-self) + other

    def __mul__(self, other) -> "RationalFunction":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_constant():
            return RationalFunction._raw(self.num.scale(other.num.constant_term()), self.den)
        if self.is_constant():
            return RationalFunction._raw(other.num.scale(self.num.constant_term()), other.den)
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RationalFunction":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other) -> "RationalFunction":
        return self._coerce(other) / self

    def __pow__(self, k: int) -> "RationalFunction":
        if not isinstance(k, int):
            raise TypeError("integer exponent required")
        if k < 0:
            if self.is_zero():
                raise ZeroDivisionError("negative power of zero")
            return RationalFunction(self.den**-k, self.num**-k)
        return RationalFunction(self.num**k, self.den**k)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Polynomial)):
            other = self._coerce(other)
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __repr__(self) -> str:
        return f"RationalFunction({self.format()})"

    # ---- calculus -----------------------------------------------------------

    def differentiate(self, index: int) -> "RationalFunction":
        dn = self.num.differentiate(index)
        if self.den.is_constant():
            return RationalFunction._raw(dn, self.den)
        dd = self.den.differentiate(index)
        return RationalFunction(dn * self.den - self.num * dd, self.den * self.den)

    def evaluate(self, point: Sequence) -> Fraction:
        d = self.den.evaluate(point)
        if not d:
            raise ZeroDivisionError("denominator vanishes at the evaluation point")
        return self.num.evaluate(point) / d

    def format(self, names: Sequence[str] | None = None) -> str:
        """Render in the expression grammar (parseable back by :mod:`ratsys.exprio`)."""
        num = self.num.format(names)
        if self.den == 1:
            return num
        den = self.den.format(names)
        if len(self.num) > 1:
            num = f"({num})"
        if len(self.den) == 1:
            ((e, c),) = self.den.terms.items()
            if c == 1 and sum(1 for k in e if k) == 1:
                return f"{num}/{den}"  # a lone variable power needs no parentheses
        return f"{num}/({den})"


Scalar = Union[RationalFunction, Polynomial, int, Fraction]


def canonicalize(num: Polynomial, den: Polynomial) -> RationalFunction:
    return RationalFunction(num, den)


def is_canonical(num: Polynomial, den: Polynomial) -> bool:
    """True iff ``num/den`` already satisfies the canonical-form rules."""
    if den.is_zero():
        return False
    if num.is_zero():
        return den == 1
    if not gcd(num, den).is_constant():
        return False
    return _normalizer(den) == 1


VectorField = tuple[RationalFunction, ...]


def lie_derivative(r: RationalFunction, field: Sequence[RationalFunction]) -> RationalFunction:
    """``sum_i field[i] * dr/dx_i``, canonicalized.

    Computed as ``(den * L(num) - num * L(den)) / den^2`` with ``L`` applied to
    polynomials, so only a single cancellation is needed at the end.
    """
    if len(field) != r.nvars:
        raise RationalFunctionError(
            f"vector field has {len(field)} components, function has {r.nvars} variables"
        )
    n = r.nvars
    if r.is_constant():
        return RationalFunction.constant(n, 0)

    def along(p: Polynomial) -> RationalFunction:
        acc = RationalFunction.constant(n, 0)
        for i, fi in enumerate(field):
            dp = p.differentiate(i)
            if dp and not fi.is_zero():
                acc = acc + fi * RationalFunction.from_poly(dp)
        return acc

    ln = along(r.num)
    if r.den.is_constant():
        return ln * RationalFunction.constant(n, 1 / r.den.constant_term())
    ld = along(r.den)
    den = RationalFunction.from_poly(r.den)
    num = RationalFunction.from_poly(r.num)
    return (ln * den - num * ld) / (den * den)


def _poly_compose(p: Polynomial, nums: Sequence[Polynomial], dens: Sequence[Polynomial], caps: Sequence[int], m: int) -> Polynomial:
    # p(nums/dens) * prod(dens^caps), with caps >= degree of p in each variable
    num_pows: list[dict[int, Polynomial]] = [{} for _ in nums]
    den_pows: list[dict[int, Polynomial]] = [{} for _ in nums]

    def power(cache: dict[int, Polynomial], base: Polynomial, k: int) -> Polynomial:
        if k not in cache:
            cache[k] = base**k
        return cache[k]

    total = Polynomial.zero(m)
    for e, c in p.terms.items():
        term = Polynomial.constant(m, c)
        for i, k in enumerate(e):
            if k:
                term = term * power(num_pows[i], nums[i], k)
            if caps[i] - k and not dens[i].is_constant():
                term = term * power(den_pows[i], dens[i], caps[i] - k)
            elif caps[i] - k:
                term = term.scale(dens[i].constant_term() ** (caps[i] - k))
        total = total + term
    return total


def substitute(r: RationalFunction, images: Sequence[RationalFunction]) -> RationalFunction:
    """Compose ``r`` with the rational map ``images`` (one image per variable of ``r``).

    Denominators of the images are cleared jointly for numerator and
    denominator before the final cancellation; an identically zero result
    denominator raises :class:`ZeroDivisionError`.
    """
    if len(images) != r.nvars:
        raise RationalFunctionError(f"expected {r.nvars} images, got {len(images)}")
    if not images:
        raise RationalFunctionError("cannot substitute into a function of zero variables")
    m = images[0].nvars
    if any(im.nvars != m for im in images):
        raise PolynomialError("images must share nvars")
    nums = [im.num for im in images]
    dens = [im.den for im in images]
    caps = [max(r.num.degree_in(i), r.den.degree_in(i), 0) for i in range(r.nvars)]
    top = _poly_compose(r.num, nums, dens, caps, m)
    bottom = _poly_compose(r.den, nums, dens, caps, m)
    if bottom.is_zero():
        raise ZeroDivisionError("composition denominator vanishes identically")
    return RationalFunction(top, bottom)


def compose_map(outer: Sequence[RationalFunction], inner: Sequence[RationalFunction]) -> list[RationalFunction]:
    return [substitute(f, inner) for f in outer]


def coordinates(nvars: int) -> list[RationalFunction]:
    return [RationalFunction.variable(nvars, i) for i in range(nvars)]
