"""Buchberger's algorithm and the ideal operations built on it.

Elimination, saturation (extra-variable trick), radical membership
(Rabinowitsch) and Krull dimension of an ideal. Every computation runs under
a :class:`Budget`; exceeding it raises :class:`BudgetExceeded`.
"""

from __future__ import annotations

import heapq
import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .poly import (
    GRLEX,
    Exponent,
    MonomialOrder,
    Polynomial,
    PolynomialError,
    block_order,
    divides,
    lcm_exp,
)


@dataclass(frozen=True)
class Budget:
    """Resource caps for a single Gröbner basis computation."""

    max_pairs: int = 50_000
    max_degree: int = 60

    @classmethod
    def parse(cls, text: str) -> "Budget":
        """Parse ``"pairs:degree"``, e.g. ``"50000:60"``."""
        try:
            pairs, degree = text.split(":")
            budget = cls(int(pairs), int(degree))
        except ValueError:
            raise ValueError(f"budget must look like 'pairs:degree', got {text!r}") from None
        if budget.max_pairs < 1 or budget.max_degree < 1:
            raise ValueError("budget limits must be positive")
        return budget

    @classmethod
    def from_env(cls, var: str = "RATSYS_BUDGET") -> "Budget":
        text = os.environ.get(var)
        return cls.parse(text) if text else cls()


class BudgetExceeded(RuntimeError):
    def __init__(self, resource: str, limit: int, observed: int):
        super().__init__(f"Gröbner budget exceeded: {resource} {observed} > limit {limit}")
        self.resource = resource
        self.limit = limit
        self.observed = observed


_default_budget = Budget()


def default_budget() -> Budget:
    return _default_budget


def set_default_budget(budget: Budget) -> None:
    global _default_budget
    _default_budget = budget


def grevlex(nvars: int) -> MonomialOrder:
    return block_order(nvars) if nvars else GRLEX


# ---- internal polynomial helpers --------------------------------------------

Terms = dict[Exponent, object]

try:  # gmpy2 rationals are several times faster than Fraction in the inner loops
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction


def _to_internal(terms) -> Terms:
    return {e: _Q(c.numerator, c.denominator) for e, c in terms.items()}


def _to_fraction(terms: Terms) -> dict[Exponent, Fraction]:
    return {e: Fraction(int(c.numerator), int(c.denominator)) for e, c in terms.items()}


def _negate(k):
    if isinstance(k, tuple):
        return tuple(_negate(x) for x in k)
    return -k


class _KeyCache(dict):
    """Order keys per exponent, plus negated keys for use in a min-heap."""

    def __init__(self, key):
        super().__init__()
        self.key = key
        self.neg: dict = {}

    def __missing__(self, e):
        k = self[e] = self.key(e)
        self.neg[e] = _negate(k)
        return k

    def heap_key(self, e):
        if e not in self.neg:
            self[e]
        return self.neg[e]


def _reduce(f: Terms, basis: Sequence[tuple[Exponent, Terms]], key: _KeyCache) -> Terms:
    """Full reduction of ``f`` by monic ``basis`` elements."""
    f = dict(f)
    heap = [(key.heap_key(e), e) for e in f]
    heapq.heapify(heap)
    rem: Terms = {}
    while heap:
        _, m = heapq.heappop(heap)
        c = f.pop(m, None)
        if c is None:
            continue  # stale entry: the term cancelled earlier
        for lm, g in basis:
            if divides(lm, m):
                shift = tuple(a - b for a, b in zip(m, lm))
                for e, a in g.items():
                    if e == lm:
                        continue
                    e2 = tuple(x + y for x, y in zip(e, shift))
                    v = f.get(e2)
                    if v is None:
                        f[e2] = -c * a
                        heapq.heappush(heap, (key.heap_key(e2), e2))
                    else:
                        v = v - c * a
                        if v:
                            f[e2] = v
                        else:
                            del f[e2]
                break
        else:
            rem[m] = c
    return rem


def _leading(f: Terms, key: _KeyCache) -> Exponent:
    return max(f, key=key.__getitem__)


def _make_monic(f: Terms, lm: Exponent) -> Terms:
    c = f[lm]
    if c == 1:
        return f
    inv = 1 / c
    return {e: a * inv for e, a in f.items()}


def _spoly(f: Terms, lf: Exponent, g: Terms, lg: Exponent) -> Terms:
    lcm = lcm_exp(lf, lg)
    sf = tuple(a - b for a, b in zip(lcm, lf))
    sg = tuple(a - b for a, b in zip(lcm, lg))
    out: Terms = {}
    for e, a in f.items():
        if e != lf:
            out[tuple(x + y for x, y in zip(e, sf))] = a
    for e, a in g.items():
        if e == lg:
            continue
        e2 = tuple(x + y for x, y in zip(e, sg))
        v = out.get(e2, 0) - a
        if v:
            out[e2] = v
        else:
            out.pop(e2, None)
    return out


# ---- public types -------------------------------------------------------------


@dataclass(frozen=True)
class GroebnerBasis:
    """A reduced Gröbner basis: monic, autoreduced, sorted by decreasing leading monomial."""

    order: MonomialOrder
    nvars: int
    elements: tuple[Polynomial, ...]

    def normal_form(self, p: Polynomial) -> Polynomial:
        return normal_form(p, self)

    def contains(self, p: Polynomial) -> bool:
        return normal_form(p, self).is_zero()

    def is_unit(self) -> bool:
        return any(g.is_constant() and g for g in self.elements)

    def leading_monomials(self) -> list[Exponent]:
        return [g.leading_term(self.order)[0] for g in self.elements]

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)


class Ideal:
    """An ideal of the polynomial ring in ``nvars`` variables.

    Reduced bases are cached per monomial order; the cache is filled with
    identical values by any thread that computes them, so concurrent writers
    are harmless.
    """

    def __init__(self, nvars: int, generators: Iterable[Polynomial] = ()):
        gens = []
        for g in generators:
            if g.nvars != nvars:
                raise PolynomialError(f"generator has {g.nvars} variables, ideal has {nvars}")
            if g:
                gens.append(g)
        self.nvars = nvars
        self.generators: tuple[Polynomial, ...] = tuple(gens)
        self._cache: dict[MonomialOrder, GroebnerBasis] = {}

    def groebner(self, order: MonomialOrder = GRLEX, budget: Budget | None = None) -> GroebnerBasis:
        gb = self._cache.get(order)
        if gb is None:
            gb = buchberger(self, order, budget)
            self._cache[order] = gb
        return gb

    def contains(self, p: Polynomial, budget: Budget | None = None) -> bool:
        if p.is_zero():
            return True
        if not self.generators:
            return False
        return self.groebner(grevlex(self.nvars), budget).contains(p)

    def is_unit(self, budget: Budget | None = None) -> bool:
        return self.contains(Polynomial.constant(self.nvars, 1), budget)

    def is_zero(self) -> bool:
        return not self.generators

    def __add__(self, other: "Ideal") -> "Ideal":
        if other.nvars != self.nvars:
            raise PolynomialError("ideals live in different rings")
        return Ideal(self.nvars, self.generators + other.generators)

    def with_generators(self, extra: Iterable[Polynomial]) -> "Ideal":
        return Ideal(self.nvars, self.generators + tuple(extra))

    def same_as(self, other: "Ideal", budget: Budget | None = None) -> bool:
        """Equality as ideals (equal reduced graded-lex bases)."""
        return self.groebner(GRLEX, budget).elements == other.groebner(GRLEX, budget).elements

    def embed(self, nvars: int, positions: Sequence[int]) -> "Ideal":
        return Ideal(nvars, (g.embed(nvars, positions) for g in self.generators))

    def __repr__(self) -> str:
        return f"Ideal({self.nvars}, [{', '.join(g.format() for g in self.generators)}])"


def buchberger(
    ideal: Ideal, order: MonomialOrder = GRLEX, budget: Budget | None = None, strategy: str = "normal"
) -> GroebnerBasis:
    """Reduced Gröbner basis by Buchberger's algorithm.

    Pairs are selected by the normal strategy (smallest lcm under ``order``,
    ties broken by index, so the result is deterministic) and pruned with the
    Gebauer-Möller installation of both Buchberger criteria. The sugar
    strategy is available via ``strategy="sugar"``; on the saturated graph
    ideals used for implicitization it was the slower of the two.
    """
    budget = budget or _default_budget
    if strategy not in ("normal", "sugar"):
        raise ValueError(f"unknown pair selection strategy {strategy!r}")
    n = ideal.nvars
    key = _KeyCache(order.key)
    polys: list[Terms] = []
    lms: list[Exponent] = []
    sugar: list[int] = []
    current: list[int] = []
    pairs: list[tuple[int, int]] = []

    def basis() -> list[tuple[Exponent, Terms]]:
        # trying divisors with small leading monomials first limits coefficient growth
        return sorted(((lms[i], polys[i]) for i in current), key=lambda t: key[t[0]])

    def install(h: Terms, s: int = 0) -> None:
        lm = _leading(h, key)
        h = _make_monic(h, lm)
        deg = max(sum(e) for e in h)
        if deg > budget.max_degree:
            raise BudgetExceeded("degree", budget.max_degree, deg)
        idx = len(polys)
        polys.append(h)
        lms.append(lm)
        sugar.append(max(s, deg))
        _update(idx)

    def _update(h: int) -> None:
        nonlocal current, pairs
        lh = lms[h]
        cands = [(h, g) for g in current]
        kept: list[tuple[int, int]] = []
        for i, (a, g1) in enumerate(cands):
            l1 = lcm_exp(lh, lms[g1])
            coprime = all(not (x and y) for x, y in zip(lh, lms[g1]))
            if coprime:
                kept.append((a, g1))
                continue
            others = cands[i + 1 :] + kept
            if not any(divides(lcm_exp(lh, lms[g2]), l1) for _, g2 in others):
                kept.append((a, g1))
        new_pairs = [
            (a, g) for a, g in kept if not all(not (x and y) for x, y in zip(lh, lms[g]))
        ]
        survivors = []
        for g1, g2 in pairs:
            l12 = lcm_exp(lms[g1], lms[g2])
            if (
                divides(lh, l12)
                and lcm_exp(lms[g1], lh) != l12
                and lcm_exp(lh, lms[g2]) != l12
            ):
                continue
            survivors.append((g1, g2))
        pairs = survivors + new_pairs
        current = [g for g in current if not divides(lh, lms[g])] + [h]

    one = (0,) * n
    gens = sorted(
        (_to_internal(g.terms) for g in ideal.generators),
        key=lambda t: key[_leading(t, key)],
    )
    for g in gens:
        if one in g and len(g) == 1:
            return GroebnerBasis(order, n, (Polynomial.constant(n, 1),))
        h = _reduce(g, basis(), key)
        if h:
            install(h)

    processed = 0

    def pair_key(p: tuple[int, int]) -> tuple:
        i, j = p
        l = lcm_exp(lms[i], lms[j])
        if strategy == "sugar":
            s = max(sugar[i] - sum(lms[i]), sugar[j] - sum(lms[j])) + sum(l)
            return (s, key[l], min(i, j), max(i, j))
        return (key[l], min(i, j), max(i, j))

    while pairs:
        best = min(pairs, key=pair_key)
        s = pair_key(best)[0] if strategy == "sugar" else 0
        pairs.remove(best)
        processed += 1
        if processed > budget.max_pairs:
            raise BudgetExceeded("pairs", budget.max_pairs, processed)
        i, j = best
        sp = _spoly(polys[i], lms[i], polys[j], lms[j])
        if not sp:
            continue
        h = _reduce(sp, basis(), key)
        if h:
            if one in h and len(h) == 1:
                return GroebnerBasis(order, n, (Polynomial.constant(n, 1),))
            install(h, s)

    # interreduce into the unique reduced basis
    final = basis()
    reduced: list[tuple[Exponent, Terms]] = []
    for idx, (lm, g) in enumerate(final):
        others = final[:idx] + final[idx + 1 :]
        tail = {e: c for e, c in g.items() if e != lm}
        tail = _reduce(tail, others, key)
        tail[lm] = _Q(1)
        reduced.append((lm, tail))
    reduced.sort(key=lambda t: key[t[0]], reverse=True)
    return GroebnerBasis(order, n, tuple(Polynomial._raw(n, _to_fraction(g)) for _, g in reduced))


def groebner(
    polys: Sequence[Polynomial],
    order: MonomialOrder = GRLEX,
    budget: Budget | None = None,
    nvars: int | None = None,
    strategy: str = "normal",
) -> GroebnerBasis:
    if nvars is None:
        if not polys:
            raise ValueError("nvars required for an empty generator list")
        nvars = polys[0].nvars
    return buchberger(Ideal(nvars, polys), order, budget, strategy)


def normal_form(p: Polynomial, G: GroebnerBasis) -> Polynomial:
    """Remainder of ``p`` on division by ``G``; zero iff ``p`` lies in the ideal."""
    if p.nvars != G.nvars:
        raise PolynomialError(f"polynomial has {p.nvars} variables, basis has {G.nvars}")
    key = _KeyCache(G.order.key)
    basis = [(g.leading_term(G.order)[0], _to_internal(g.terms)) for g in G.elements]
    return Polynomial._raw(p.nvars, _to_fraction(_reduce(_to_internal(p.terms), basis, key)))


def eliminate(ideal: Ideal, keep: Sequence[int], budget: Budget | None = None) -> Ideal:
    """Generators of ``ideal`` intersected with the subring in the ``keep`` variables.

    The result lives in the same ring as ``ideal``. Computed with a block
    elimination order placing the removed variables first.
    """
    n = ideal.nvars
    keep = sorted(set(keep))
    drop = [i for i in range(n) if i not in keep]
    if not drop:
        return ideal
    if not keep:
        return Ideal(n, [Polynomial.constant(n, 1)] if ideal.is_unit(budget) else [])
    perm = drop + keep  # new position j holds old variable perm[j]
    positions = [0] * n
    for j, old in enumerate(perm):
        positions[old] = j
    moved = ideal.embed(n, positions)
    gb = moved.groebner(block_order(len(drop)), budget)
    back = [0] * n
    for j, old in enumerate(perm):
        back[j] = old
    nd = len(drop)
    out = [g.embed(n, back) for g in gb.elements if not any(e[:nd] != (0,) * nd for e in g.terms)]
    return Ideal(n, out)


def eliminate_to(ideal: Ideal, keep: Sequence[int], budget: Budget | None = None) -> Ideal:
    """Like :func:`eliminate` but returns the ideal in the ring of the ``keep`` variables only."""
    keep = sorted(set(keep))
    elim = eliminate(ideal, keep, budget)
    return Ideal(len(keep), (g.restrict(keep) for g in elim.generators))


def saturate(ideal: Ideal, q: Polynomial | Sequence[Polynomial], budget: Budget | None = None) -> Ideal:
    """``ideal : q^infinity`` via elimination of ``y`` from ``ideal + <1 - y*q>``.

    ``q`` may also be a list of factors; each distinct non-constant factor then
    gets its own ``y``, which keeps degrees low and is much cheaper than a
    single ``y`` against the product.
    """
    factors = [q] if isinstance(q, Polynomial) else list(q)
    if any(f.is_zero() for f in factors):
        raise ValueError("cannot saturate by the zero polynomial")
    uniq: list[Polynomial] = []
    for f in factors:
        if not f.is_constant() and f not in uniq:
            uniq.append(f)
    if not uniq:
        return ideal
    n, k = ideal.nvars, len(uniq)
    positions = list(range(k, k + n))
    ext = ideal.embed(n + k, positions)
    one = Polynomial.constant(n + k, 1)
    ext = ext.with_generators(
        [one - Polynomial.variable(n + k, j) * f.embed(n + k, positions) for j, f in enumerate(uniq)]
    )
    return eliminate_to(ext, positions, budget)


def vanishes_on_variety(p: Polynomial, X: Ideal, budget: Budget | None = None) -> bool:
    """True iff ``p`` lies in the radical of ``X`` (decided by ``1 in X + <1 - y*p>``)."""
    if p.nvars != X.nvars:
        raise PolynomialError("polynomial and ideal live in different rings")
    if p.is_zero():
        return True
    n = X.nvars
    positions = list(range(1, n + 1))
    y = Polynomial.variable(n + 1, 0)
    ext = X.embed(n + 1, positions).with_generators(
        [Polynomial.constant(n + 1, 1) - y * p.embed(n + 1, positions)]
    )
    return ext.is_unit(budget)


def ideal_dimension(ideal: Ideal, budget: Budget | None = None) -> int:
    """Krull dimension: the largest set of variables free of every leading monomial."""
    n = ideal.nvars
    if ideal.is_zero():
        return n
    gb = ideal.groebner(grevlex(n), budget)
    if gb.is_unit():
        raise ValueError("the unit ideal defines the empty variety and has no dimension")
    supports = [frozenset(i for i, a in enumerate(e) if a) for e in gb.leading_monomials()]
    for size in range(n, -1, -1):
        for subset in itertools.combinations(range(n), size):
            s = set(subset)
            if not any(sup <= s for sup in supports):
                return size
    return 0


__all__ = [
    "Budget",
    "BudgetExceeded",
    "GroebnerBasis",
    "Ideal",
    "buchberger",
    "default_budget",
    "eliminate",
    "eliminate_to",
    "grevlex",
    "groebner",
    "ideal_dimension",
    "normal_form",
    "saturate",
    "set_default_budget",
    "vanishes_on_variety",
]
