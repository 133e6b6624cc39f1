"""Varieties, rational control systems, validation and point sampling."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .groebner import GRLEX, Budget, GroebnerBasis, Ideal, ideal_dimension, normal_form, vanishes_on_variety
from .poly import Polynomial
from .ratfunc import RationalFunction, VectorField, substitute


class VarietyError(ValueError):
    pass


class UnsupportedVariety(VarietyError):
    """The variety has no sampling strategy (not affine space, coordinate subspace or parametrized)."""


@dataclass(frozen=True)
class Parametrization:
    """A rational map from parameter space onto a dense subset of a variety."""

    parameters: tuple[str, ...]
    images: tuple[RationalFunction, ...]

    @property
    def nparams(self) -> int:
        return len(self.parameters)


class Variety:
    """The real zero set of finitely many polynomials in ``nvars`` variables.

    Irreducibility is trusted, not checked. The defining ideal must be proper.
    """

    def __init__(
        self,
        nvars: int,
        defining: Iterable[Polynomial] | Ideal = (),
        parametrization: Parametrization | None = None,
        budget: Budget | None = None,
    ):
        if nvars < 1:
            raise VarietyError("a variety needs at least one ambient coordinate")
        ideal = defining if isinstance(defining, Ideal) else Ideal(nvars, defining)
        if ideal.nvars != nvars:
            raise VarietyError(f"defining ideal has {ideal.nvars} variables, expected {nvars}")
        if ideal.generators and ideal.is_unit(budget):
            raise VarietyError("defining polynomials have no common zero (1 is in the ideal)")
        if parametrization is not None:
            if len(parametrization.images) != nvars:
                raise VarietyError("parametrization must give one image per coordinate")
        self.nvars = nvars
        self.ideal = ideal
        self.parametrization = parametrization
        self._budget = budget

    @property
    def defining(self) -> tuple[Polynomial, ...]:
        return self.ideal.generators

    @cached_property
    def dim(self) -> int:
        return ideal_dimension(self.ideal, self._budget)

    @cached_property
    def basis(self) -> GroebnerBasis | None:
        if self.ideal.is_zero():
            return None
        return self.ideal.groebner(GRLEX, self._budget)

    @cached_property
    def fixed_coordinates(self) -> dict[int, Fraction] | None:
        """Coordinate values pinned by generators of the form ``c*x_i + d``; None if not of that shape."""
        fixed: dict[int, Fraction] = {}
        for g in self.ideal.generators:
            if g.total_degree() != 1 or len(g.variables()) != 1:
                return None
            (i,) = g.variables()
            e = [0] * self.nvars
            e[i] = 1
            value = -g.constant_term() / g.coefficient(tuple(e))
            if fixed.get(i, value) != value:
                return None
            fixed[i] = value
        return fixed

    @property
    def kind(self) -> str:
        if self.ideal.is_zero():
            return "affine-space"
        if self.fixed_coordinates is not None:
            return "coordinate-subspace"
        if self.parametrization is not None:
            return "parametrized"
        return "general"

    @property
    def sampleable(self) -> bool:
        return self.kind != "general"

    def contains(self, point: Sequence) -> bool:
        return all(p.evaluate(point) == 0 for p in self.defining)

    def reduce(self, p: Polynomial) -> Polynomial:
        """Normal form of ``p`` modulo the defining ideal (graded-lex)."""
        return p if self.basis is None else normal_form(p, self.basis)

    def reduce_function(self, r: RationalFunction) -> RationalFunction:
        if self.basis is None:
            return r
        return RationalFunction(self.reduce(r.num), self.reduce(r.den))

    def equal_functions(self, r: RationalFunction, s: RationalFunction) -> bool:
        """Equality in the function field: ``r.num*s.den - s.num*r.den`` lies in the ideal."""
        diff = r.num * s.den - s.num * r.den
        return diff.is_zero() or self.reduce(diff).is_zero()

    def vanishes(self, p: Polynomial) -> bool:
        return vanishes_on_variety(p, self.ideal, self._budget)

    def __repr__(self) -> str:
        return f"Variety(nvars={self.nvars}, defining={[g.format() for g in self.defining]})"


@dataclass(frozen=True)
class Assumptions:
    algebraically_controllable: bool = False
    no_algebraic_gap: bool = False


@dataclass(frozen=True)
class RationalSystem:
    """A single-input single-output rational system affine in the input.

    ``dx/dt = f0(x) + f1(x) u``, ``y = h(x)``, ``x(0) = x0`` on the variety ``X``.
    """

    variables: tuple[str, ...]
    X: Variety
    f0: VectorField
    f1: VectorField
    h: RationalFunction
    x0: tuple[Fraction, ...]
    input_values: tuple[Fraction, ...] = (Fraction(0), Fraction(1))
    assumptions: Assumptions = field(default_factory=Assumptions)
    name: str | None = None

    @property
    def n(self) -> int:
        return len(self.variables)

    def functions(self) -> list[tuple[str, RationalFunction]]:
        """All system functions labelled ``f0[i]``, ``f1[i]`` and ``h``."""
        out = [(f"f0[{i}]", f) for i, f in enumerate(self.f0)]
        out += [(f"f1[{i}]", f) for i, f in enumerate(self.f1)]
        out.append(("h", self.h))
        return out

    def with_assumptions(self, **flags: bool) -> "RationalSystem":
        merged = {
            "algebraically_controllable": self.assumptions.algebraically_controllable,
            "no_algebraic_gap": self.assumptions.no_algebraic_gap,
            **flags,
        }
        return replace(self, assumptions=Assumptions(**merged))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}


def validate_system(s: RationalSystem) -> list[Violation]:
    """Every violated system invariant; an empty list means the system is valid."""
    out: list[Violation] = []
    n = s.n
    if n < 1:
        return [Violation("arity", "system needs at least one state variable")]
    for label, seq in (("f0", s.f0), ("f1", s.f1), ("x0", s.x0)):
        if len(seq) != n:
            out.append(Violation("arity", f"{label} has {len(seq)} entries, expected {n}"))
    if s.X.nvars != n:
        out.append(Violation("arity", f"variety lives in {s.X.nvars} variables, expected {n}"))
    for label, f in s.functions():
        if f.nvars != n:
            out.append(Violation("arity", f"{label} is a function of {f.nvars} variables, expected {n}"))
    if out:
        return out

    values = set(s.input_values)
    if 0 not in values:
        out.append(Violation("inputs", "input_values must contain 0"))
    if len(values) < 2:
        out.append(Violation("inputs", "input_values must contain at least two distinct values"))

    if not s.X.contains(s.x0):
        bad = [g.format(s.variables) for g in s.X.defining if g.evaluate(s.x0) != 0]
        out.append(Violation("x0-off-variety", f"x0 does not satisfy {', '.join(bad)}"))
    for label, f in s.functions():
        if f.den.is_constant():
            continue
        if s.X.vanishes(f.den):
            out.append(
                Violation("denominator-vanishes", f"denominator of {label} vanishes identically on X")
            )
        elif f.den.evaluate(s.x0) == 0:
            out.append(Violation("denominator-at-x0", f"denominator of {label} vanishes at x0"))
    return out


@dataclass(frozen=True)
class SamplePoint:
    coordinates: tuple[Fraction, ...]
    on_variety: bool
    parameters: tuple[Fraction, ...] | None = None


def _random_rational(rng: random.Random, bound: int) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def sample_point(X: Variety, seed: int | random.Random, bound: int = 1000, max_tries: int = 100) -> SamplePoint:
    """A random exact rational point of ``X``, deterministic for a given seed.

    Numerators and denominators are bounded by ``bound`` in magnitude (for
    parametrized varieties the bound applies to the parameter values).
    """
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    kind = X.kind
    if kind == "affine-space":
        return SamplePoint(tuple(_random_rational(rng, bound) for _ in range(X.nvars)), True)
    if kind == "coordinate-subspace":
        fixed = X.fixed_coordinates or {}
        pt = tuple(
            fixed[i] if i in fixed else _random_rational(rng, bound) for i in range(X.nvars)
        )
        return SamplePoint(pt, X.contains(pt))
    if kind == "parametrized":
        par = X.parametrization
        for _ in range(max_tries):
            t = tuple(_random_rational(rng, bound) for _ in range(par.nparams))
            try:
                pt = tuple(im.evaluate(t) for im in par.images)
            except ZeroDivisionError:
                continue
            if not X.contains(pt):
                raise VarietyError("parametrization produced a point off the variety")
            return SamplePoint(pt, True, t)
        raise VarietyError("parametrization denominators vanished at every sampled parameter")
    raise UnsupportedVariety(
        "cannot sample this variety: supply a parametrization or use an exact method"
    )


def alpha_fields(s: RationalSystem) -> list[VectorField]:
    """The vector fields ``f0 + alpha*f1`` for every probe input value ``alpha``."""
    return [
        tuple(a + b * RationalFunction.constant(s.n, alpha) for a, b in zip(s.f0, s.f1))
        for alpha in s.input_values
    ]


def compose_with_parametrization(gens: Sequence[RationalFunction], par: Parametrization) -> list[RationalFunction]:
    return [substitute(g, list(par.images)) for g in gens]
