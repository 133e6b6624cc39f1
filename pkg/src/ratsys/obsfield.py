"""Observation fields of rational systems.

The observation field is generated by the output ``h`` and its iterated Lie
derivatives. Because the fields ``f_alpha = f0 + alpha*f1`` are affine in
``alpha`` and the probe set contains 0 and another value, the derivatives
along ``f0`` and ``f1`` generate the same field, so the chain below uses
words in ``L_f0`` and ``L_f1`` only.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .groebner import Budget, BudgetExceeded, Ideal, grevlex, ideal_dimension, saturate
from .poly import Polynomial, block_order
from .ratfunc import RationalFunction, lie_derivative, substitute
from .sysmodel import (
    RationalSystem,
    UnsupportedVariety,
    Variety,
    compose_with_parametrization,
    sample_point,
)

CAVEAT_IRREDUCIBLE = "irreducibility of the state variety is assumed, not verified"
CAVEAT_COUNTING = (
    "generator counts use distinct non-constant functions among L_f0/L_f1 words, "
    "not the full alpha-parametrized family"
)


class ObservabilityError(RuntimeError):
    pass


class NotObservable(ObservabilityError):
    pass


class TrdegError(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorChain:
    """Levels of iterated Lie derivatives of the output, deduplicated across the chain.

    Level 0 is ``[h]``; level ``k+1`` holds ``L_f0 g`` then ``L_f1 g`` for each
    ``g`` of level ``k``, skipping anything already present anywhere earlier.
    """

    levels: tuple[tuple[RationalFunction, ...], ...]
    names: tuple[str, ...] = ()

    def through(self, k: int) -> list[RationalFunction]:
        """Every chain element of levels ``0..k``."""
        return [g for level in self.levels[: k + 1] for g in level]

    def generators(self, k: int) -> list[RationalFunction]:
        """Non-constant chain elements of levels ``0..k``; this is ``G_k`` for counting."""
        return [g for g in self.through(k) if not g.is_constant()]

    def to_dict(self) -> dict:
        return {"levels": [[g.format(self.names or None) for g in lvl] for lvl in self.levels]}


def _next_level(prev: Sequence[RationalFunction], f0, f1, seen: set) -> list[RationalFunction]:
    out = []
    for g in prev:
        for vf in (f0, f1):
            d = lie_derivative(g, vf)
            if d not in seen:
                seen.add(d)
                out.append(d)
    return out


def generator_chain(s: RationalSystem, k_max: int) -> GeneratorChain:
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    levels = [[s.h]]
    seen = {s.h}
    for _ in range(k_max):
        levels.append(_next_level(levels[-1], s.f0, s.f1, seen))
    return GeneratorChain(tuple(tuple(lvl) for lvl in levels), s.variables)


class _ChainGrower:
    """Grows a generator chain one level at a time."""

    def __init__(self, s: RationalSystem):
        self.s = s
        self.levels: list[list[RationalFunction]] = [[s.h]]
        self.seen = {s.h}

    def grow(self) -> None:
        self.levels.append(_next_level(self.levels[-1], self.s.f0, self.s.f1, self.seen))

    @property
    def chain(self) -> GeneratorChain:
        return GeneratorChain(tuple(tuple(l) for l in self.levels), self.s.variables)


# ---- transcendence degree ---------------------------------------------------


def _rank(rows: list[list[Fraction]]) -> int:
    """Exact rank by Gaussian elimination over the rationals."""
    m = [list(r) for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        pivot = next((r for r in range(rank, len(m)) if m[r][c]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for r in range(rank + 1, len(m)):
            if m[r][c]:
                factor = m[r][c] / m[rank][c]
                m[r] = [a - factor * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def trdeg_jacobian(
    gens: Sequence[RationalFunction],
    X: Variety,
    trials: int = 3,
    seed: int = 0,
    bound: int = 1000,
    retries: int = 50,
) -> int:
    """Transcendence degree by the Jacobian criterion at random rational points.

    The rank of the Jacobian along the tangent directions of ``X`` is taken
    exactly at each sample point; the maximum over ``trials`` points is
    returned. Special points can only lower the rank, never raise it.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    gens = [g for g in gens if not g.is_constant()]
    if not gens:
        return 0
    kind = X.kind
    if kind == "general":
        raise UnsupportedVariety("Jacobian method needs a sampleable variety")
    if kind == "parametrized":
        funcs = compose_with_parametrization(gens, X.parametrization)
        columns = list(range(X.parametrization.nparams))
    elif kind == "coordinate-subspace":
        funcs = gens
        fixed = X.fixed_coordinates or {}
        columns = [i for i in range(X.nvars) if i not in fixed]
    else:
        funcs = gens
        columns = list(range(X.nvars))
    if not columns:
        return 0
    partials = [[f.differentiate(j) for j in columns] for f in funcs]
    dens = [f.den for f in funcs]
    rng = random.Random(seed)
    best = 0
    for _ in range(trials):
        for _attempt in range(retries):
            pt = sample_point(X, rng, bound)
            at = pt.parameters if kind == "parametrized" else pt.coordinates
            if any(d.evaluate(at) == 0 for d in dens):
                continue
            rows = [[p.evaluate(at) for p in row] for row in partials]
            break
        else:
            raise TrdegError("every sampled point hit a denominator zero; retry budget exhausted")
        best = max(best, _rank(rows))
        if best == min(len(funcs), len(columns)):
            break
    return best


def distinct_denominators(gens: Sequence[RationalFunction]) -> list[Polynomial]:
    out: list[Polynomial] = []
    for g in gens:
        if not g.den.is_constant() and g.den not in out:
            out.append(g.den)
    return out


def _graph_ideal(gens: Sequence[RationalFunction], X: Variety) -> tuple[Ideal, int, int]:
    """Ideal of the closure of the graph of ``gens`` in variables ``(y, x, t)``.

    Returns the ideal, the number of leading variables to eliminate (the
    ``y`` block and ``x``) and the ring size. There is one ``y`` per distinct
    non-constant denominator.
    """
    n, m = X.nvars, len(gens)
    dens = distinct_denominators(gens)
    extra = len(dens)
    size = extra + n + m
    xpos = [extra + i for i in range(n)]
    polys = [p.embed(size, xpos) for p in X.defining]
    for k, g in enumerate(gens):
        t = Polynomial.variable(size, extra + n + k)
        polys.append(g.den.embed(size, xpos) * t - g.num.embed(size, xpos))
    one = Polynomial.constant(size, 1)
    for j, q in enumerate(dens):
        polys.append(one - Polynomial.variable(size, j) * q.embed(size, xpos))
    return Ideal(size, polys), extra + n, size


def image_closure(gens: Sequence[RationalFunction], X: Variety, budget: Budget | None = None) -> Ideal:
    """Ideal (in ``len(gens)`` variables) of the Zariski closure of the image of ``X`` under ``gens``."""
    ideal, nelim, size = _graph_ideal(gens, X)
    gb = ideal.groebner(block_order(nelim), budget)
    keep = list(range(nelim, size))
    out = [g.restrict(keep) for g in gb.elements if g.variables() <= set(keep)]
    return Ideal(len(gens), out)


def trdeg_exact(gens: Sequence[RationalFunction], X: Variety, budget: Budget | None = None) -> int:
    """Transcendence degree as the dimension of the closure of the image of ``X`` under ``gens``."""
    gens = [g for g in gens if not g.is_constant()]
    if not gens:
        return 0
    return ideal_dimension(image_closure(gens, X, budget), budget)


# ---- subfield membership ------------------------------------------------------


class SubfieldOracle:
    """Decides membership in the subfield of the function field of ``X`` generated by ``gens``.

    Uses two copies ``x``, ``x'`` of the coordinates: ``f`` lies in the subfield
    iff the numerator of ``f(x) - f(x')`` is in the ideal generated by the
    cross-multiplied generator differences, localized at the generator
    denominators and at every nonzero polynomial in ``x'`` alone.
    """

    def __init__(self, gens: Sequence[RationalFunction], X: Variety, budget: Budget | None = None):
        self.X = X
        self.budget = budget
        self.gens = [g for g in gens if not g.is_constant()]
        n = X.nvars
        self.n = n
        size = 2 * n
        self._xs = list(range(n))
        self._xps = list(range(n, 2 * n))
        polys = [p.embed(size, self._xs) for p in X.defining]
        polys += [p.embed(size, self._xps) for p in X.defining]
        dens = []
        for g in self.gens:
            nx, dx = g.num.embed(size, self._xs), g.den.embed(size, self._xs)
            nxp, dxp = g.num.embed(size, self._xps), g.den.embed(size, self._xps)
            polys.append(nx * dxp - nxp * dx)
            if not g.den.is_constant():
                dens += [dx, dxp]
        ideal = Ideal(size, polys)
        if dens:
            ideal = saturate(ideal, dens, budget)
        # localize at polynomials in x' alone: saturate by the leading coefficients
        # (in x') of a basis for an order eliminating x first
        gb = ideal.groebner(block_order(n), budget)
        lcs = []
        for g in gb.elements:
            if not g.variables() & set(self._xs):
                continue
            lm, _ = g.leading_term(gb.order)
            xpart = lm[:n]
            lc = Polynomial(size, {e: c for e, c in g.terms.items() if e[:n] == xpart})
            lc = _strip_x(lc, n)
            if not lc.is_constant() and lc not in lcs:
                lcs.append(lc)
        if lcs:
            ideal = saturate(ideal, lcs, budget)
        self.ideal = ideal
        self._basis = ideal.groebner(grevlex(size), budget) if ideal.generators else None

    def contains(self, f: RationalFunction) -> bool:
        if f.is_constant() or f in self.gens:
            return True
        size = 2 * self.n
        nx, dx = f.num.embed(size, self._xs), f.den.embed(size, self._xs)
        nxp, dxp = f.num.embed(size, self._xps), f.den.embed(size, self._xps)
        diff = nx * dxp - nxp * dx
        if diff.is_zero():
            return True
        if self._basis is None:
            return False
        return self._basis.contains(diff)


def _strip_x(lc: Polynomial, n: int) -> Polynomial:
    # remove the x-part of each exponent, keeping the x' part in place
    out = {}
    for e, c in lc.terms.items():
        out[(0,) * n + e[n:]] = c
    return Polynomial(lc.nvars, out)


def field_membership(
    f: RationalFunction, gens: Sequence[RationalFunction], X: Variety, budget: Budget | None = None
) -> bool:
    """True iff ``f`` lies in the subfield generated by ``gens``."""
    if f.is_constant() or f in gens:
        return True
    return SubfieldOracle(gens, X, budget).contains(f)


def generates_function_field(gens: Sequence[RationalFunction], X: Variety, budget: Budget | None = None) -> bool:
    """True iff ``gens`` generate the whole function field (every coordinate is a member)."""
    coords = [RationalFunction.variable(X.nvars, i) for i in range(X.nvars)]
    gens = [g for g in gens if not g.is_constant()]
    if all(c in gens for c in coords):
        return True
    oracle = SubfieldOracle(gens, X, budget)
    return all(oracle.contains(c) for c in coords)


# ---- observability -------------------------------------------------------------


@dataclass
class ObservabilityReport:
    trdeg_obs: int
    dim_X: int
    rationally_observable: bool
    chain: GeneratorChain
    method: str
    trdeg_trajectory: list[int]
    field_equality_confirmed: bool | None
    minimal: bool
    assumptions: dict
    n_o: int | None = None
    caveats: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "trdeg_obs": self.trdeg_obs,
            "dim_X": self.dim_X,
            "rationally_observable": self.rationally_observable,
            "n_o": self.n_o,
            "chain": self.chain.to_dict(),
            "method": self.method,
            "trdeg_trajectory": self.trdeg_trajectory,
            "field_equality_confirmed": self.field_equality_confirmed,
            "minimal": self.minimal,
            "assumptions": self.assumptions,
            "caveats": self.caveats,
        }


def _trdeg(gens, X: Variety, method: str, seed: int, trials: int, budget: Budget | None) -> int:
    if method == "jacobian-probabilistic":
        return trdeg_jacobian(gens, X, trials=trials, seed=seed)
    return trdeg_exact(gens, X, budget)


def _resolve_method(method: str, X: Variety, caveats: list[str]) -> str:
    aliases = {"jacobian": "jacobian-probabilistic", "exact": "elimination-exact"}
    method = aliases.get(method, method)
    if method not in ("jacobian-probabilistic", "elimination-exact"):
        raise ValueError(f"unknown trdeg method {method!r}")
    if method == "jacobian-probabilistic" and not X.sampleable:
        caveats.append("variety is not sampleable; fell back to the exact elimination method")
        method = "elimination-exact"
    return method


def rationally_observable(
    s: RationalSystem,
    method: str = "jacobian",
    k_max: int = 8,
    seed: int = 0,
    trials: int = 3,
    budget: Budget | None = None,
) -> ObservabilityReport:
    """Decide whether the observation field equals the function field of the state variety.

    The chain grows until its transcendence degree reaches ``dim X`` or stays
    unchanged for two consecutive levels (or ``k_max`` is reached). Unless
    ``no_algebraic_gap`` is asserted, equality of fields is then confirmed by
    membership of every coordinate, growing the chain further if needed.
    """
    caveats = [CAVEAT_IRREDUCIBLE]
    method = _resolve_method(method, s.X, caveats)
    dim = s.X.dim
    grower = _ChainGrower(s)
    trajectory = [_trdeg(grower.chain.generators(0), s.X, method, seed, trials, budget)]
    k = 0
    while k < k_max and trajectory[-1] < dim:
        if len(trajectory) >= 3 and trajectory[-1] == trajectory[-2] == trajectory[-3]:
            break
        grower.grow()
        k += 1
        trajectory.append(_trdeg(grower.chain.generators(k), s.X, method, seed, trials, budget))
    d = trajectory[-1]
    observable = d == dim
    confirmed: bool | None = None
    if observable and not s.assumptions.no_algebraic_gap:
        caveats.append(
            "no_algebraic_gap not asserted: equal transcendence degree need not mean equal fields; "
            "confirmed by coordinate membership"
        )
        try:
            confirmed = generates_function_field(grower.chain.generators(k), s.X, budget)
            while not confirmed and k < k_max:
                grower.grow()
                k += 1
                trajectory.append(d)
                confirmed = generates_function_field(grower.chain.generators(k), s.X, budget)
        except BudgetExceeded as exc:
            confirmed = None
            caveats.append(f"field-equality confirmation skipped: {exc}")
        if confirmed is False:
            observable = False
            caveats.append(f"coordinates not in the observation field through level {k}")
    elif observable:
        caveats.append("no_algebraic_gap asserted: transcendence-degree equality accepted as field equality")
    controllable = s.assumptions.algebraically_controllable
    caveats.append(
        "algebraic controllability is an asserted assumption ("
        + ("asserted" if controllable else "not asserted")
        + "); minimality depends on it"
    )
    return ObservabilityReport(
        trdeg_obs=d,
        dim_X=dim,
        rationally_observable=observable,
        chain=grower.chain,
        method=method,
        trdeg_trajectory=trajectory,
        field_equality_confirmed=confirmed,
        minimal=observable and controllable,
        assumptions={
            "algebraically_controllable": controllable,
            "no_algebraic_gap": s.assumptions.no_algebraic_gap,
        },
        caveats=caveats,
    )


class IndexNotAchieved(ObservabilityError):
    def __init__(self, k_max: int, trajectory: list[int]):
        super().__init__(
            f"observation field not generated within {k_max} levels (trdeg trajectory {trajectory})"
        )
        self.k_max = k_max
        self.trajectory = trajectory


@dataclass
class IndexReport:
    n_o: int
    level: int
    generators: list[RationalFunction]
    n: int
    dim_X: int
    names: tuple[str, ...]
    caveats: list[str]

    def to_dict(self) -> dict:
        return {
            "n_o": self.n_o,
            "level": self.level,
            "generators": [g.format(self.names) for g in self.generators],
            "n": self.n,
            "dim_X": self.dim_X,
            "caveats": self.caveats,
        }


def observability_index_report(
    s: RationalSystem, k_max: int = 8, seed: int = 0, trials: int = 3, budget: Budget | None = None
) -> IndexReport:
    """Smallest ``|G_k|`` whose generators give the whole observation field."""
    report = rationally_observable(s, "jacobian", k_max, seed, trials, budget)
    if not report.rationally_observable:
        raise NotObservable("observability index requires a rationally observable system")
    caveats = [CAVEAT_COUNTING]
    method = _resolve_method("jacobian", s.X, caveats)
    dim = s.X.dim
    grower = _ChainGrower(s)
    trajectory = []
    for k in range(k_max + 1):
        if k:
            grower.grow()
        gens = grower.chain.generators(k)
        d = _trdeg(gens, s.X, method, seed, trials, budget)
        trajectory.append(d)
        if d == dim and generates_function_field(gens, s.X, budget):
            return IndexReport(len(gens), k, gens, s.n, dim, s.variables, caveats)
    raise IndexNotAchieved(k_max, trajectory)


def observability_index(s: RationalSystem, k_max: int = 8, budget: Budget | None = None) -> int:
    return observability_index_report(s, k_max, budget=budget).n_o


# ---- canonical observation subfields ---------------------------------------------


@dataclass
class TowerLevel:
    index: int
    generators: list[RationalFunction]
    dropped: list[RationalFunction]


@dataclass
class SubfieldTower:
    """Experimental: generators of each subfield, with trailing coordinates set to zero."""

    levels: list[TowerLevel]
    names: tuple[str, ...]
    warnings: list[str]
    experimental: bool = True

    def to_dict(self) -> dict:
        return {
            "experimental": self.experimental,
            "levels": [
                {
                    "i": lvl.index,
                    "generators": [g.format(self.names) for g in lvl.generators],
                    "dropped": [g.format(self.names) for g in lvl.dropped],
                }
                for lvl in self.levels
            ],
            "warnings": self.warnings,
        }


def subfield_tower(s_ocf: RationalSystem, budget: Budget | None = None) -> SubfieldTower:
    """Restrict the chain generators to ``x_{i+1} = ... = x_n = 0`` for ``i = 1..d``.

    ``d`` is the transcendence degree of the observation field; the last level
    keeps the generators unchanged.
    """
    from .canform import is_ocf

    if not is_ocf(s_ocf).is_ocf:
        raise ValueError("subfield tower requires a system in observable canonical form")
    n = s_ocf.n
    gens = generator_chain(s_ocf, max(n - 1, 0)).generators(max(n - 1, 0))
    d = s_ocf.X.dim
    levels = []
    warnings = []
    for i in range(1, d + 1):
        if i == d:
            levels.append(TowerLevel(i, list(gens), []))
            continue
        images = [
            RationalFunction.variable(n, j) if j < i else RationalFunction.constant(n, 0)
            for j in range(n)
        ]
        kept, dropped = [], []
        for g in gens:
            try:
                kept.append(substitute(g, images))
            except ZeroDivisionError:
                dropped.append(g)
                warnings.append(
                    f"level {i}: dropped {g.format(s_ocf.variables)} (denominator vanishes)"
                )
        levels.append(TowerLevel(i, kept, dropped))
    return SubfieldTower(levels, s_ocf.variables, warnings)
