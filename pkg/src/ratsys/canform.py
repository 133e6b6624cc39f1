"""Observable canonical form: structural check, construction, uniqueness.

A system on ``X`` (ambient dimension ``n``) is in observable canonical form
when ``dx_i/dt = x_{i+1} + f_i(x) u`` for ``i < n``,
``dx_n/dt = f_{n,0}(x) + f_{n,1}(x) u``, ``y = x_1``, every function is in
canonical representation, ``f_{n,1}`` does not vanish identically on ``X``,
and algebraic controllability is asserted.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from .groebner import GRLEX, Budget, Ideal, normal_form
from .obsfield import (
    NotObservable,
    distinct_denominators,
    generates_function_field,
    image_closure,
    observability_index,
    rationally_observable,
)
from .poly import Polynomial, block_order, product
from .ratfunc import RationalFunction, coordinates, is_canonical, lie_derivative, substitute
from .sysmodel import Assumptions, RationalSystem, Variety, validate_system


class CanonicalFormError(RuntimeError):
    pass


class MissingAssumption(CanonicalFormError):
    pass


class InverseExtractionError(CanonicalFormError):
    def __init__(self, message: str, basis: Sequence[str] = ()):
        super().__init__(message)
        self.basis = list(basis)


class ExceptionLocusError(CanonicalFormError):
    """The initial state lies where the map or its inverse is undefined."""


class PreconditionError(CanonicalFormError):
    pass


# ---- structural check -----------------------------------------------------------


@dataclass
class OcfReport:
    is_ocf: bool
    violations: list[dict]
    controllability_assumed: bool
    input_field_nonvanishing: bool

    def to_dict(self) -> dict:
        return {
            "is_ocf": self.is_ocf,
            "violations": self.violations,
            "controllability_assumed": self.controllability_assumed,
            "input_field_nonvanishing": self.input_field_nonvanishing,
        }


def is_ocf(s: RationalSystem) -> OcfReport:
    n = s.n
    names = s.variables
    violations: list[dict] = []
    for i in range(n - 1):
        want = RationalFunction.variable(n, i + 1)
        if s.f0[i] != want:
            violations.append(
                {
                    "code": "drift-chain",
                    "index": i + 1,
                    "message": f"drift component {i + 1} is {s.f0[i].format(names)}, expected {names[i + 1]}",
                }
            )
    if s.h != RationalFunction.variable(n, 0):
        violations.append(
            {"code": "output", "message": f"output is {s.h.format(names)}, expected {names[0]}"}
        )
    for label, f in s.functions():
        if not is_canonical(f.num, f.den):
            violations.append({"code": "non-canonical", "function": label, "message": f"{label} is not in canonical form"})
    fn1 = s.f1[n - 1]
    nonvanishing = not s.X.vanishes(fn1.num)
    if not nonvanishing:
        violations.append(
            {
                "code": "input-field-vanishes",
                "index": n,
                "message": f"input field component {n} vanishes identically on X",
            }
        )
    controllable = s.assumptions.algebraically_controllable
    return OcfReport(
        is_ocf=not violations and controllable,
        violations=violations,
        controllability_assumed=controllable,
        input_field_nonvanishing=nonvanishing,
    )


# ---- birational maps -----------------------------------------------------------


def _locus(polys: Sequence[Polynomial], nvars: int) -> Ideal:
    """Principal ideal of the product of the non-constant ``polys`` (unit ideal if none)."""
    factors = [p for p in polys if not p.is_constant()]
    return Ideal(nvars, [product(factors, nvars)])


def _on_locus(ideal: Ideal, point: Sequence[Fraction]) -> bool:
    return all(g.evaluate(point) == 0 for g in ideal.generators)


@dataclass
class BirationalMap:
    """A birational map ``source -> target`` with its rational inverse.

    ``forward`` holds one function of the source coordinates per target
    coordinate; ``inverse`` one function of the target coordinates per source
    coordinate. The identities ``inverse(forward(x)) = x`` and
    ``forward(inverse(z)) = z`` hold off the zero sets of the exception ideals.
    """

    source: Variety
    target: Variety
    forward: tuple[RationalFunction, ...]
    inverse: tuple[RationalFunction, ...]
    exception_source: Ideal
    exception_target: Ideal
    source_names: tuple[str, ...]
    target_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.forward) != self.target.nvars or len(self.inverse) != self.source.nvars:
            raise CanonicalFormError("map component counts do not match the varieties")
        self.verify()

    @classmethod
    def identity(cls, X: Variety, names: Sequence[str]) -> "BirationalMap":
        coords = tuple(coordinates(X.nvars))
        return cls(X, X, coords, coords, Ideal(X.nvars, [Polynomial.constant(X.nvars, 1)]),
                   Ideal(X.nvars, [Polynomial.constant(X.nvars, 1)]), tuple(names), tuple(names))

    def is_identity(self) -> bool:
        n = self.source.nvars
        return self.target.nvars == n and list(self.forward) == coordinates(n) and list(self.inverse) == coordinates(n)

    def verify(self) -> None:
        """Check both round-trip identities in the function fields; raise on failure."""
        for i, f in enumerate(self.inverse):
            back = substitute(f, list(self.forward))
            if not self.source.equal_functions(back, RationalFunction.variable(self.source.nvars, i)):
                raise CanonicalFormError(f"inverse(forward(x)) differs from x in coordinate {i + 1}")
        for j, g in enumerate(self.forward):
            back = substitute(g, list(self.inverse))
            if not self.target.equal_functions(back, RationalFunction.variable(self.target.nvars, j)):
                raise CanonicalFormError(f"forward(inverse(z)) differs from z in coordinate {j + 1}")

    def __call__(self, point: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return tuple(f.evaluate(point) for f in self.forward)

    def apply_inverse(self, point: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return tuple(f.evaluate(point) for f in self.inverse)

    def inverted(self) -> "BirationalMap":
        return BirationalMap(self.target, self.source, self.inverse, self.forward,
                             self.exception_target, self.exception_source,
                             self.target_names, self.source_names)

    def then(self, other: "BirationalMap") -> "BirationalMap":
        """Composition: first ``self``, then ``other``."""
        if other.source.nvars != self.target.nvars:
            raise CanonicalFormError("maps do not compose")
        fwd = tuple(other.target.reduce_function(substitute(g, list(self.forward))) for g in other.forward)
        inv = tuple(self.source.reduce_function(substitute(f, list(other.inverse))) for f in self.inverse)
        src = _locus([f.den for f in fwd] + list(self.exception_source.generators), self.source.nvars)
        tgt = _locus([f.den for f in inv] + list(other.exception_target.generators), other.target.nvars)
        return BirationalMap(self.source, other.target, fwd, inv, src, tgt,
                             self.source_names, other.target_names)

    def to_dict(self) -> dict:
        s, t = self.source_names, self.target_names
        return {
            "source_variables": list(s),
            "target_variables": list(t),
            "source_variety": [g.format(s) for g in self.source.defining],
            "target_variety": [g.format(t) for g in self.target.defining],
            "forward": [f.format(s) for f in self.forward],
            "inverse": [f.format(t) for f in self.inverse],
            "exception_source": [g.format(s) for g in self.exception_source.generators],
            "exception_target": [g.format(t) for g in self.exception_target.generators],
        }


def _extract_inverse(
    forward: Sequence[RationalFunction], source: Variety, target: Variety, budget: Budget | None
) -> list[RationalFunction]:
    """Solve the graph ideal for each source coordinate as a rational function of the target ones.

    For source variable ``x_i`` a basis is computed for an order that
    eliminates the other source variables first and then ``x_i`` ahead of the
    target variables; an element ``A(z) x_i - B(z)`` with ``A`` nonzero on the
    target gives ``x_i = B/A``.
    """
    n, m = source.nvars, len(forward)
    dens = distinct_denominators(forward)
    extra = len(dens)
    size = extra + n + m
    inverse = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        # positions: y block + others + [x_i] + targets
        xpos = [0] * n
        for k, j in enumerate(others):
            xpos[j] = extra + k
        xpos[i] = extra + n - 1
        xi = extra + n - 1
        polys = [p.embed(size, xpos) for p in source.defining]
        for k, f in enumerate(forward):
            t = Polynomial.variable(size, extra + n + k)
            polys.append(f.den.embed(size, xpos) * t - f.num.embed(size, xpos))
        for j, q in enumerate(dens):
            polys.append(Polynomial.constant(size, 1) - Polynomial.variable(size, j) * q.embed(size, xpos))
        lead = extra + n - 1
        blocks = (lead, 1) if lead else (1,)
        gb = Ideal(size, polys).groebner(block_order(*blocks), budget)
        allowed = {xi} | set(range(extra + n, size))
        tpos = list(range(extra + n, size))
        found = None
        key = gb.order.key
        for g in sorted(gb.elements, key=lambda g: key(g.leading_term(gb.order)[0])):
            if not g.variables() <= allowed or g.degree_in(xi) != 1:
                continue
            parts = g.coefficients_in(xi)
            a = parts[1].restrict(tpos)
            b = -parts[0].restrict(tpos) if 0 in parts else Polynomial.zero(m)
            if target.reduce(a).is_zero():
                continue
            found = RationalFunction(target.reduce(b), target.reduce(a))
            break
        if found is None:
            raise InverseExtractionError(
                f"no basis element linear in source coordinate {i + 1}",
                [g.format() for g in gb.elements],
            )
        inverse.append(found)
    return inverse


def birational_map_from_forward(
    source: Variety,
    forward: Sequence[RationalFunction],
    source_names: Sequence[str],
    target_names: Sequence[str] | None = None,
    budget: Budget | None = None,
) -> BirationalMap:
    """Build the target variety (closure of the image) and the rational inverse of ``forward``."""
    m = len(forward)
    if target_names is None:
        target_names = tuple(f"z{i + 1}" for i in range(m))
    target = Variety(m, image_closure(forward, source, budget))
    inverse = _extract_inverse(forward, source, target, budget)
    back_dens = [substitute(RationalFunction(a.den), list(forward)).num for a in inverse]
    src = _locus([f.den for f in forward] + back_dens, source.nvars)
    tgt = _locus([f.den for f in inverse], m)
    return BirationalMap(source, target, tuple(forward), tuple(inverse), src, tgt,
                         tuple(source_names), tuple(target_names))


# ---- transforming systems ------------------------------------------------------


def _transport(r: RationalFunction, b: BirationalMap) -> RationalFunction:
    out = substitute(r, list(b.inverse))
    return b.target.reduce_function(out)


def apply_map(s: RationalSystem, b: BirationalMap, name: str | None = None) -> RationalSystem:
    """Change coordinates of ``s`` by ``b``: ``z = b(x)``."""
    if b.source.nvars != s.n or not b.source.ideal.same_as(s.X.ideal):
        raise CanonicalFormError("map source does not match the system state space")
    if _on_locus(b.exception_source, s.x0):
        raise ExceptionLocusError("initial state lies on the exception locus of the map")
    try:
        f0 = tuple(_transport(lie_derivative(bj, s.f0), b) for bj in b.forward)
        f1 = tuple(_transport(lie_derivative(bj, s.f1), b) for bj in b.forward)
        h = _transport(s.h, b)
    except ZeroDivisionError:
        raise CanonicalFormError("a composed denominator vanishes identically on the target") from None
    try:
        x0 = b(s.x0)
    except ZeroDivisionError:
        raise ExceptionLocusError("map is undefined at the initial state") from None
    return RationalSystem(
        variables=b.target_names,
        X=b.target,
        f0=f0,
        f1=f1,
        h=h,
        x0=x0,
        input_values=s.input_values,
        assumptions=s.assumptions,
        name=name if name is not None else s.name,
    )


@dataclass
class OcfResult:
    system: RationalSystem
    map: BirationalMap
    n_o: int
    chain_length: int
    notes: list[str] = field(default_factory=list)

    def __iter__(self):
        # unpacks as (system, map)
        yield self.system
        yield self.map

    def to_dict(self) -> dict:
        from .exprio import system_to_dict

        return {
            "system": system_to_dict(self.system),
            "map": self.map.to_dict(),
            "n_o": self.n_o,
            "chain_length": self.chain_length,
            "notes": self.notes,
        }


def to_ocf(s: RationalSystem, k_max: int = 8, budget: Budget | None = None) -> OcfResult:
    """Transform a minimal system into observable canonical form.

    New coordinates are ``b_1 = h`` and ``b_{i+1} = L_f0 b_i``; the chain
    length is the observability index (extended only if those functions do
    not yet generate the function field). The target variety is the closure
    of the image of ``X`` and the inverse is read off the graph ideal.
    """
    problems = validate_system(s)
    if problems:
        raise CanonicalFormError("invalid system: " + "; ".join(v.message for v in problems))
    missing = [
        flag
        for flag in ("algebraically_controllable", "no_algebraic_gap")
        if not getattr(s.assumptions, flag)
    ]
    if missing:
        raise MissingAssumption(
            "the transformation requires a minimal system whose function field has no algebraic "
            "gap over the observation field; assert: " + ", ".join(missing)
        )
    report = rationally_observable(s, k_max=k_max, budget=budget)
    if not report.rationally_observable:
        raise NotObservable("system is not rationally observable")
    n_o = observability_index(s, k_max, budget)
    notes: list[str] = []
    chain = [s.h]
    while len(chain) < n_o:
        chain.append(lie_derivative(chain[-1], s.f0))
    while not generates_function_field(chain, s.X, budget):
        if len(chain) >= n_o + k_max:
            raise CanonicalFormError("drift derivatives of the output do not generate the function field")
        chain.append(lie_derivative(chain[-1], s.f0))
    if len(chain) > n_o:
        notes.append(f"chain extended from {n_o} to {len(chain)} drift derivatives to generate the field")
    m = len(chain)
    coords = coordinates(s.n)
    if m == s.n and chain == coords and s.X.ideal.is_zero():
        b = BirationalMap.identity(s.X, s.variables)
    else:
        names = tuple(f"xb{i + 1}" for i in range(m))
        if m == s.n and chain == coords:
            names = s.variables
        b = birational_map_from_forward(s.X, chain, s.variables, names, budget)
    if _on_locus(b.exception_source, s.x0):
        raise ExceptionLocusError("initial state lies on the exception locus of the map")

    target = b.target
    z = coordinates(m)
    f0: list[RationalFunction] = []
    f1: list[RationalFunction] = []
    for i, bi in enumerate(chain):
        drift = _transport(lie_derivative(bi, s.f0), b)
        if i < m - 1:
            if not target.equal_functions(drift, z[i + 1]):
                raise CanonicalFormError(f"drift of coordinate {i + 1} is not the next coordinate")
            drift = z[i + 1]
        f0.append(drift)
        f1.append(_transport(lie_derivative(bi, s.f1), b))
    h_new = z[0]
    if not s.X.equal_functions(substitute(h_new, list(b.forward)), s.h):
        raise CanonicalFormError("new output composed with the map differs from the original output")
    x0 = b(s.x0)
    if any(f.den.evaluate(x0) == 0 for f in f0 + f1):
        raise ExceptionLocusError("transformed system is undefined at the new initial state")
    fn1 = f1[-1]
    extra = [f.den for f in f0 + f1] + ([fn1.num] if not fn1.is_zero() else [])
    b.exception_target = _locus(list(b.exception_target.generators) + extra, m)
    system = RationalSystem(
        variables=b.target_names,
        X=target,
        f0=tuple(f0),
        f1=tuple(f1),
        h=h_new,
        x0=x0,
        input_values=s.input_values,
        assumptions=s.assumptions,
        name=s.name,
    )
    return OcfResult(system, b, n_o, m, notes)


def ocf_identical(s1: RationalSystem, s2: RationalSystem) -> bool:
    """True iff two systems in observable canonical form coincide."""
    for label, s in (("first", s1), ("second", s2)):
        if not is_ocf(s).is_ocf:
            raise PreconditionError(f"{label} system is not in observable canonical form")
    if s1.n != s2.n:
        raise PreconditionError("systems have different ambient dimensions")
    g1 = s1.X.ideal.groebner(GRLEX).elements if s1.X.defining else ()
    g2 = s2.X.ideal.groebner(GRLEX).elements if s2.X.defining else ()
    if g1 != g2:
        return False
    if tuple(s1.x0) != tuple(s2.x0):
        return False
    pairs = list(zip(s1.f0, s2.f0)) + list(zip(s1.f1, s2.f1)) + [(s1.h, s2.h)]
    return all(a == b or s1.X.equal_functions(a, b) for a, b in pairs)
