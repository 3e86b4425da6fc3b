"""Curl- and div-conforming finite element spaces."""
from .reference import NEDELEC, RAVIART_THOMAS, ReferenceElement, reference_element
from .space import (
    FEField,
    FESpace,
    boundary_tangential_trace,
    build_space,
    eval_basis,
    interpolate,
    tangential,
)

__all__ = [
    "NEDELEC", "RAVIART_THOMAS", "ReferenceElement", "reference_element",
    "FEField", "FESpace", "boundary_tangential_trace", "build_space", "eval_basis",
    "interpolate", "tangential",
]
