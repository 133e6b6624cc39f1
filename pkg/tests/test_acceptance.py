"""Acceptance criteria 1-9.

Each test prints (and records for the terminal summary) one line of the form
``criterion N (title): PASS|FAIL [detail; elapsed < limit]`` and then asserts
the verdict. Run on its own with ``python3 -m pytest tests/test_acceptance.py -v``
or ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import random
import sys
import time
from fractions import Fraction

import sympy

from conftest import ACCEPTANCE_LINES, fixture_system, random_linear_map, to_sympy
from ratsys.canform import apply_map, is_ocf, ocf_identical, to_ocf
from ratsys.exprio import system_from_dict
from ratsys.obsfield import (
    field_membership,
    generator_chain,
    observability_index,
    rationally_observable,
    trdeg_exact,
    trdeg_jacobian,
)
from ratsys.poly import Polynomial, exact_div, gcd
from ratsys.ratfunc import RationalFunction, canonicalize, coordinates, lie_derivative, substitute
from ratsys.simulate import PiecewiseConstantInput, response_equiv_probe, simulate
from ratsys.sysmodel import Variety

FLAGS = dict(algebraically_controllable=True, no_algebraic_gap=True)


def run_criterion(number: int, title: str, limit: float, body) -> None:
    """Time ``body`` (returning ``(ok, detail)``), record the verdict line and assert it."""
    t0 = time.perf_counter()
    try:
        ok, detail = body()
    except Exception as exc:  # a crash is a FAIL with the reason on the line
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - t0
    ok = bool(ok) and elapsed < limit
    line = f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'} [{detail}; {elapsed:.2f}s < {limit:g}s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _parse(exprs, n):
    from ratsys.exprio import parse_expression

    return [parse_expression(e, [f"x{i + 1}" for i in range(n)]) for e in exprs]


# ---- 1. Example 4 reproduction --------------------------------------------------


def test_criterion_1_example4_chain_and_index():
    def body():
        s = fixture_system("example4")
        expected = _parse(["x1", "x1 - x2^2 + x2", "x1 - 3*x2^2 + 2*x2"], 2)
        chain = generator_chain(s, 2)
        got = chain.generators(2)
        exact = got == expected and all(sum(not g.is_constant() for g in level) == 1 for level in chain.levels)
        n_o = observability_index(s)
        obs = rationally_observable(s).rationally_observable
        detail = f"chain={[g.format(s.variables) for g in got]}, n_o={n_o}, observable={obs}"
        return exact and n_o == 3 and obs, detail

    run_criterion(1, "Example 4 chain, index 3", 5, body)


# ---- 2. Example 3 structure -------------------------------------------------------


def test_criterion_2_example3_is_ocf():
    def body():
        rep = is_ocf(fixture_system("example3"))
        return rep.is_ocf and rep.input_field_nonvanishing, f"is_ocf={rep.is_ocf}, f21 nonvanishing={rep.input_field_nonvanishing}"

    run_criterion(2, "Example 3 is in OCF", 2, body)


# ---- 3. random OCF systems are observable ------------------------------------------


def _positive_denominator(rng: random.Random, n: int) -> Polynomial:
    # 1 + sum of c * m^2 with c > 0: no real zeros
    terms = {(0,) * n: Fraction(1)}
    for _ in range(rng.randint(1, 2)):
        e = tuple(2 * rng.randint(0, 1) for _ in range(n))
        if any(e):
            terms[e] = terms.get(e, 0) + rng.randint(1, 3)
    if len(terms) == 1:
        e = [0] * n
        e[rng.randrange(n)] = 2
        terms[tuple(e)] = Fraction(rng.randint(1, 3))
    return Polynomial(n, terms)


def _small_poly(rng: random.Random, n: int, max_deg: int, nonzero: bool) -> Polynomial:
    while True:
        terms = {}
        for _ in range(rng.randint(1, 3)):
            e = [0] * n
            for _ in range(rng.randint(0, max_deg)):
                e[rng.randrange(n)] += 1
            terms[tuple(e)] = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]))
        p = Polynomial(n, terms)
        if p or not nonzero:
            return p


def random_ocf_system(rng: random.Random):
    n = rng.randint(1, 3)
    names = [f"x{i + 1}" for i in range(n)]
    f0 = [names[i + 1] for i in range(n - 1)]
    f1 = ["0"] * (n - 1)
    num0 = _small_poly(rng, n, 2, nonzero=False)
    den0 = _positive_denominator(rng, n) if rng.random() < 0.6 else Polynomial.constant(n, 1)
    num1 = _small_poly(rng, n, 2, nonzero=True)
    den1 = _positive_denominator(rng, n) if rng.random() < 0.6 else Polynomial.constant(n, 1)
    f0.append(f"({num0.format(names)})/({den0.format(names)})")
    f1.append(f"({num1.format(names)})/({den1.format(names)})")
    return system_from_dict(
        {
            "variables": names,
            "f0": f0,
            "f1": f1,
            "h": "x1",
            "x0": [str(Fraction(rng.randint(-3, 3), rng.randint(1, 3))) for _ in range(n)],
            "input_values": ["-1", "0", "1"],
            "assumptions": {"algebraically_controllable": True, "no_algebraic_gap": False},
        }
    )


def test_criterion_3_random_ocf_systems_are_observable():
    def body():
        rng = random.Random(2024)
        count, bad = 30, []
        for k in range(count):
            s = random_ocf_system(rng)
            if not (is_ocf(s).is_ocf and rationally_observable(s).rationally_observable):
                bad.append(k)
        return not bad, f"{count - len(bad)}/{count} random OCF systems in OCF and observable"

    run_criterion(3, "random OCF systems observable", 60, body)


# ---- 4. idempotence and uniqueness ------------------------------------------------------


def test_criterion_4_idempotence_and_uniqueness():
    def body():
        notes = []
        ok = True
        for name in ("example3", "double_integrator", "integrator"):
            s = fixture_system(name)
            ocf, b = to_ocf(s)
            this = b.is_identity() and ocf_identical(ocf, s)
            ok &= this
            notes.append(f"{name}:{'id' if this else 'changed'}")
        perm = fixture_system("double_integrator_permuted")
        ref = to_ocf(perm).system
        ok &= ocf_identical(ref, to_ocf(fixture_system("double_integrator")).system)
        for seed in range(3):
            moved = apply_map(perm, random_linear_map(perm.X, perm.variables, seed))
            same = ocf_identical(to_ocf(moved).system, ref)
            ok &= same
            notes.append(f"linear copy {seed}:{'identical' if same else 'differs'}")
        return ok, ", ".join(notes)

    run_criterion(4, "to_ocf idempotent and unique", 30, body)


# ---- 5. round trip --------------------------------------------------------------------


def test_criterion_5_round_trip():
    def body():
        perm = fixture_system("double_integrator_permuted")
        suite = [(name, fixture_system(name, **FLAGS)) for name in (
            "double_integrator_permuted", "example3", "example4_minimal", "oscillator_subspace", "parabola"
        )]
        suite.append(("linear copy", apply_map(perm, random_linear_map(perm.X, perm.variables, 7))))
        worst, ok, notes = 0.0, True, []
        for name, s in suite:
            ocf, b = to_ocf(s)
            pulled = substitute(ocf.h, list(b.forward))
            symbolic = s.X.equal_functions(pulled, s.h)
            rep = response_equiv_probe(s, ocf, trials=20, horizon=2.0, seed=0)
            worst = max(worst, rep.max_deviation)
            ok &= symbolic and rep.max_deviation < 1e-6
            notes.append(f"{name}:{rep.max_deviation:.1e}{'' if symbolic else ' h-mismatch'}")
        return ok, f"max deviation {worst:.2e} ({', '.join(notes)})"

    run_criterion(5, "probe round trip < 1e-6", 120, body)


# ---- 6. trdeg cross-validation ----------------------------------------------------------


def _monomial(rng: random.Random, n: int, deg: int) -> tuple[int, ...]:
    e = [0] * n
    for _ in range(rng.randint(1, deg)):
        e[rng.randrange(n)] += 1
    return tuple(e)


def _sparse(rng: random.Random, n: int, deg: int) -> Polynomial:
    return Polynomial(n, {_monomial(rng, n, deg): rng.choice([-3, -2, -1, 1, 2, 3]) for _ in range(rng.randint(1, 2))})


def random_generator_set(rng: random.Random):
    """<= 3 functions in <= 3 variables of degree <= 4.

    Numerators have one or two terms; a quarter of the functions share one
    denominator ``1 + c*x_i^2`` (numerator degree <= 3 then) and a quarter are
    built from earlier ones so that dependent sets occur.
    """
    n, m = rng.randint(1, 3), rng.randint(1, 3)
    e = _monomial(rng, n, 1)
    q = Polynomial(n, {tuple(2 * k for k in e): rng.randint(1, 3), (0,) * n: 1})
    gens: list[RationalFunction] = []
    for _ in range(m):
        r = rng.random()
        if gens and r < 0.25:
            a, b = rng.choice(gens), rng.choice(gens)
            if a.num.total_degree() <= 2 and a.den.is_constant() and rng.random() < 0.5:
                gens.append(a * a + b * rng.randint(1, 3))
            else:
                gens.append(a * rng.randint(1, 3) + b * rng.randint(-3, 3) + rng.randint(-3, 3))
        elif r > 0.75:
            gens.append(RationalFunction(_sparse(rng, n, 3), q))
        else:
            gens.append(RationalFunction(_sparse(rng, n, 4)))
    return n, gens


def test_criterion_6_trdeg_cross_validation():
    def body():
        rng = random.Random(0)
        count, agree, deficient, with_den = 25, 0, 0, 0
        for case in range(count):
            n, gens = random_generator_set(rng)
            X = Variety(n)
            a = trdeg_jacobian(gens, X, trials=3, seed=case)
            b = trdeg_exact(gens, X)
            agree += a == b
            deficient += b < min(n, len(gens))
            with_den += any(not g.den.is_constant() for g in gens)
        detail = f"{agree}/{count} agree ({deficient} rank-deficient, {with_den} with denominators)"
        return agree == count, detail

    run_criterion(6, "trdeg jacobian = exact", 120, body)


# ---- 7. field membership pair ---------------------------------------------------------------


def test_criterion_7_membership_pair():
    def body():
        s = fixture_system("example4")
        b1, b2, b3 = generator_chain(s, 2).generators(2)
        x2 = coordinates(2)[1]
        out2 = field_membership(x2, [b1, b2], s.X)
        in3 = field_membership(x2, [b1, b2, b3], s.X)
        X1, X2 = sympy.symbols("x1 x2")
        witness = sympy.expand(3 * to_sympy(b2) - to_sympy(b3) - 2 * to_sympy(b1) - X2) == 0
        detail = f"x2 in Q(b1,b2)={out2}, x2 in Q(b1,b2,b3)={in3}, 3b2-b3-2b1=x2 by expansion={witness}"
        return (not out2) and in3 and witness, detail

    run_criterion(7, "field membership pair", 30, body)


# ---- 8. CAS substrate properties ---------------------------------------------------------------


def _rand_poly(rng: random.Random, n: int = 3, terms: int = 4, deg: int = 3) -> Polynomial:
    out = {}
    for _ in range(rng.randint(0, terms)):
        e = tuple(rng.randint(0, deg) for _ in range(n))
        out[e] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return Polynomial(n, out)


def _rand_nonzero(rng: random.Random, n: int = 3, terms: int = 3, deg: int = 2) -> Polynomial:
    while True:
        p = _rand_poly(rng, n, terms, deg)
        if p:
            return p


def test_criterion_8_cas_properties():
    def body():
        rng = random.Random(8)
        cases = 1000
        fails = {"ring": 0, "product rule": 0, "gcd": 0, "canonicalize": 0}
        one = Polynomial.constant(3, 1)
        zero = Polynomial.zero(3)
        for _ in range(cases):
            a, b, c = _rand_poly(rng), _rand_poly(rng), _rand_poly(rng)
            ring_ok = (
                (a + b) + c == a + (b + c)
                and a + b == b + a
                and (a * b) * c == a * (b * c)
                and a * b == b * a
                and a * (b + c) == a * b + a * c
                and a + zero == a
                and a * one == a
                and a - a == zero
            )
            fails["ring"] += not ring_ok
        for _ in range(cases):
            f = RationalFunction(_rand_poly(rng, 2, 3, 2), _rand_nonzero(rng, 2, 2, 1))
            g = RationalFunction(_rand_poly(rng, 2, 3, 2), _rand_nonzero(rng, 2, 2, 1))
            field = [RationalFunction(_rand_poly(rng, 2, 2, 2)) for _ in range(2)]
            lhs = lie_derivative(f * g, field)
            rhs = lie_derivative(f, field) * g + f * lie_derivative(g, field)
            fails["product rule"] += lhs != rhs
        for _ in range(cases):
            p, q, r = _rand_nonzero(rng, 2, 3, 2), _rand_nonzero(rng, 2, 3, 2), _rand_nonzero(rng, 2, 2, 2)
            a, b = p * r, q * r
            d = gcd(a, b)
            try:
                ok = exact_div(a, d) * d == a and exact_div(b, d) * d == b and exact_div(d, r) * r == d
            except ArithmeticError:
                ok = False
            fails["gcd"] += not ok
        for _ in range(cases):
            num, den = _rand_poly(rng, 2, 3, 2), _rand_nonzero(rng, 2, 3, 2)
            k = Fraction(rng.choice([-7, -2, 3, 5]), rng.randint(1, 5))
            r1 = canonicalize(num, den)
            ok = canonicalize(r1.num, r1.den) == r1 and canonicalize(num.scale(k), den.scale(k)) == r1
            fails["canonicalize"] += not ok
        detail = ", ".join(f"{k}: {v} failures/{cases}" for k, v in fails.items())
        return not any(fails.values()), detail

    run_criterion(8, "CAS property suites", 60, body)


# ---- 9. simulator order check -----------------------------------------------------------------


def test_criterion_9_simulator_convergence():
    def body():
        rtols = (1e-6, 1e-9, 1e-12)
        eps = sys.float_info.epsilon
        integrator = system_from_dict(
            {"variables": ["x"], "f0": ["0"], "f1": ["1"], "h": "x", "x0": ["1/3"], "input_values": ["-1", "0", "2"]}
        )
        bilinear = system_from_dict(
            {"variables": ["x"], "f0": ["0"], "f1": ["x"], "h": "x", "x0": ["1"], "input_values": ["-1", "0", "1"]}
        )
        ok, notes = True, []
        inputs = [
            PiecewiseConstantInput(((0.7, 2), (0.4, -1), (0.9, 0), (0.5, 2))),
            PiecewiseConstantInput.constant(-1, 2.0),
            PiecewiseConstantInput(((0.25, 0), (1.5, 2))),
        ]
        for u in inputs:
            exact = 1 / 3 + sum(d * v for d, v in u.segments)
            errs = [abs(simulate(integrator, u, rtol=r).final_state()[0] - exact) for r in rtols]
            floor = 16 * eps * max(1.0, abs(exact))  # dx = u is integrated exactly up to roundoff
            mono = all(b <= max(a, floor) for a, b in zip(errs, errs[1:]))
            ok &= errs[1] < 1e-8 and mono
            notes.append("dx=u " + "/".join(f"{e:.0e}" for e in errs))
        u = PiecewiseConstantInput(((0.7, 1), (0.4, -1), (0.9, 0), (0.5, 1)))
        exact = math.exp(sum(d * v for d, v in u.segments))
        errs = [abs(simulate(bilinear, u, rtol=r).final_state()[0] - exact) for r in rtols]
        ok &= errs[1] < 1e-8 and all(b < a for a, b in zip(errs, errs[1:]))
        notes.append("dx=x*u " + "/".join(f"{e:.0e}" for e in errs))
        return ok, "; ".join(notes)

    run_criterion(9, "simulator error vs rtol", 10, body)


if __name__ == "__main__":
    import pytest

    sys.exit(pytest.main([__file__, "-q"]))
