"""Exact observability analysis and observable canonical forms for rational control systems."""

from .canform import BirationalMap, OcfReport, apply_map, is_ocf, ocf_identical, to_ocf
from .exprio import load_system, parse_expression, system_from_dict
from .groebner import Budget, BudgetExceeded, Ideal, groebner
from .obsfield import (
    field_membership,
    generator_chain,
    observability_index,
    rationally_observable,
    trdeg_exact,
    trdeg_jacobian,
)
from .poly import Polynomial
from .ratfunc import RationalFunction, lie_derivative
from .simulate import PiecewiseConstantInput, response_equiv_probe, simulate
from .sysmodel import RationalSystem, Variety, validate_system

__version__ = "0.1.0"
