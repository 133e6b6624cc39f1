from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

import pytest
import sympy
from hypothesis import strategies as st

from ratsys.canform import BirationalMap, birational_map_from_forward
from ratsys.exprio import load_system
from ratsys.poly import Polynomial
from ratsys.ratfunc import RationalFunction, coordinates
from ratsys.sysmodel import Variety

FIXTURES = Path(__file__).parent / "fixtures"

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


def fixture_system(name: str, **flags):
    s = load_system((FIXTURES / f"{name}.json").read_text())
    return s.with_assumptions(**flags) if flags else s


@pytest.fixture
def load():
    return fixture_system


def names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)]


def to_sympy(obj, var_names=None):
    """Convert a Polynomial or RationalFunction to a sympy expression via its exact terms."""
    if isinstance(obj, RationalFunction):
        return to_sympy(obj.num, var_names) / to_sympy(obj.den, var_names)
    syms = sympy.symbols(var_names or names(obj.nvars))
    if obj.nvars == 1 and not isinstance(syms, (list, tuple)):
        syms = [syms]
    expr = sympy.Integer(0)
    for e, c in obj.terms.items():
        term = sympy.Rational(c.numerator, c.denominator)
        for s, k in zip(syms, e):
            term *= s**k
        expr += term
    return expr


def from_sympy(expr, nvars: int) -> Polynomial:
    syms = sympy.symbols(names(nvars))
    p = sympy.Poly(sympy.expand(expr), *syms)
    return Polynomial(nvars, {m: Fraction(int(c.p), int(c.q)) for m, c in p.terms()})


coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def polynomials(draw, nvars: int = 3, max_terms: int = 4, max_deg: int = 3, allow_zero: bool = True):
    k = draw(st.integers(0 if allow_zero else 1, max_terms))
    terms = {}
    for _ in range(k):
        e = tuple(draw(st.integers(0, max_deg)) for _ in range(nvars))
        c = draw(coeffs)
        if c:
            terms[e] = c
    p = Polynomial(nvars, terms)
    if not allow_zero and p.is_zero():
        p = Polynomial.constant(nvars, 1)
    return p


@st.composite
def rational_functions(draw, nvars: int = 2, max_terms: int = 3, max_deg: int = 2):
    num = draw(polynomials(nvars, max_terms, max_deg))
    den = draw(polynomials(nvars, max_terms, max_deg, allow_zero=False))
    return RationalFunction(num, den)


def random_linear_map(X: Variety, names, seed: int) -> BirationalMap:
    """A random invertible linear change of coordinates with small integer entries."""
    rng = random.Random(seed)
    n = X.nvars
    while True:
        M = sympy.Matrix(n, n, lambda i, j: rng.randint(-3, 3))
        if M.det() != 0:
            break
    xs = coordinates(n)
    forward = []
    for i in range(n):
        acc = RationalFunction.constant(n, 0)
        for j in range(n):
            acc = acc + xs[j] * int(M[i, j])
        forward.append(acc)
    return birational_map_from_forward(X, forward, names, [f"z{i + 1}" for i in range(n)])
