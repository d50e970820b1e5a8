"""Numerical analysis of singular extremals for L1-minimal control-affine problems."""

from saa.errors import SaaError
from saa.field_dsl import ControlAffineSystem, builtin_system, eval_jet, parse_field_expr, pretty

__all__ = ["SaaError", "ControlAffineSystem", "builtin_system", "eval_jet", "parse_field_expr", "pretty"]
