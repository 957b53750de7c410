"""Numerical laboratory for structured diffeomorphisms of the 2- and 3-torus.

Skew products over irrational rotations, their derivative cocycles and
polynomial growth, square-zero matrix structure, generators of integer
orthogonal lattices, and the straightening of area-preserving maps along
the level sets of a first integral.
"""
from __future__ import annotations

from .errors import HypothesisFailure, InputError, StructuralError, TorogrowError
from .torus import (CircleFunction, Torus2Function, circle_deriv, circle_eval, frac, reduce,
                    unipotent_power_growth)
from .lattice import (LatticeBasis, image_preimages, is_full_image, membership, orthogonal_generators,
                      primitive_part)
from .nilpotent import PairClassification, PairKind, Rank1Factorization, classify_pair, square_zero_factor
from .systems import (Anzai, Automorphism, RandomAnzaiSpec, Rotation, SkewFlip, SpecialFlowSpec, TwoStep,
                      birkhoff_sum, evaluate, iterate, jacobian, random_step, return_index)
from .cocycle import (GrowthReport, LimitDiagnostics, check_limit_identities, cocycle_path,
                      derivative_cocycle, estimate_growth, random_growth_mc, stolz_average,
                      sublinear_drift, theoretical_limit)
from .conjugacy import (Composition, ConjugacyResult, FirstIntegral, LinearMap, Shear, SpecMap,
                        build_conjugacy, conjugate, transversal_curve, verify_conjugacy)

__version__ = "0.1.0"

__all__ = [
    "HypothesisFailure", "InputError", "StructuralError", "TorogrowError",
    "CircleFunction", "Torus2Function", "circle_deriv", "circle_eval", "frac", "reduce",
    "unipotent_power_growth",
    "LatticeBasis", "image_preimages", "is_full_image", "membership", "orthogonal_generators",
    "primitive_part",
    "PairClassification", "PairKind", "Rank1Factorization", "classify_pair", "square_zero_factor",
    "Anzai", "Automorphism", "RandomAnzaiSpec", "Rotation", "SkewFlip", "SpecialFlowSpec", "TwoStep",
    "birkhoff_sum", "evaluate", "iterate", "jacobian", "random_step", "return_index",
    "GrowthReport", "LimitDiagnostics", "check_limit_identities", "cocycle_path", "derivative_cocycle",
    "estimate_growth", "random_growth_mc", "stolz_average", "sublinear_drift", "theoretical_limit",
    "Composition", "ConjugacyResult", "FirstIntegral", "LinearMap", "Shear", "SpecMap",
    "build_conjugacy", "conjugate", "transversal_curve", "verify_conjugacy",
]
