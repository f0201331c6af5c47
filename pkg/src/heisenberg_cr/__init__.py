"""Heisenberg-group calculus: exact horizontal jets, CR maps, the conformal
tensor and its sigma_k functions, and a finite-difference sublaplacian."""

__version__ = "0.1.0"

from .core_group import (Point, SingularPointError, UnitaryRotation, check_invert, compose,
                    cr_invert, dilate, distance, gauge_norm, invert, iota, rotate)
from .jets import HorizontalJet, Jet2, JetDomainError, horizontal_from_euclidean, sublaplacian
from .fields import Field, ParseError, builtin_corpus, eval_field, parse_field
from .crtransform import (CRMap, CheckInvert, Dilate, Iota, Rotate, Translate, apply_map,
                          jacobian_det, transform_field)
from .schouten import SchoutenMatrix, eigen_sym, schouten_from_phi, schouten_tensor, sigma_k

__all__ = [
    "Point", "SingularPointError", "UnitaryRotation", "check_invert", "compose", "cr_invert",
    "dilate", "distance", "gauge_norm", "invert", "iota", "rotate",
    "HorizontalJet", "Jet2", "JetDomainError", "horizontal_from_euclidean", "sublaplacian",
    "Field", "ParseError", "builtin_corpus", "eval_field", "parse_field",
    "CRMap", "CheckInvert", "Dilate", "Iota", "Rotate", "Translate", "apply_map",
    "jacobian_det", "transform_field",
    "SchoutenMatrix", "eigen_sym", "schouten_from_phi", "schouten_tensor", "sigma_k",
]
