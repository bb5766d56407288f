"""Willmore surfaces in spheres from loop-group potentials.

The pipeline is potential -> holomorphic frame -> Iwasawa splitting ->
extended frame -> surface, with the inverse direction (Maurer-Cartan data
-> normalized potential) in :mod:`dpwillmore.wu`.
"""
import logging

from .errors import (BigCellViolation, BranchPoint, CellBoundary, DegenerateLift, DomainError,
                     DPWError, NotInCell, NullConditionViolated, NumericError, PoleEncountered,
                     PoleError, PotentialSyntaxError, SingularLoop, ValidationError)
from .factorization import (FactorizationReport, birkhoff, cell_classify, delta0,
                            k_factor_normalize, iwasawa)
from .frames import FrameField, dpw_construct, dpw_points, integrate_holomorphic_frame
from .grid import Grid
from .homogeneous import (cylinder_potential, ejiri_potential, homogeneous_frame,
                          homogeneous_surface, torus_energy, vacuum_classify, validate_homogeneous)
from .linalg import cartan_split, group_inverse, is_in_algebra, is_in_group, matrix_exp
from .loops import TwistedLoop, loop_exp, tau
from .potentials import (Potential, classify_potential, gauge_transform, load_potential,
                         make_isotropic_potential, make_lightlike_potential, parse_potential,
                         validate_normalized, validate_potential)
from .rational import RationalExpr, RationalMatrix
from .reference import cylinder_immersion, ejiri_immersion, example_s6, rotation_D
from .surfaces import (ConformalFrame, SurfaceGrid, conformal_gauss_frame, conformality_check,
                       frame_to_immersion, isotropy_check, strong_conformality_residual,
                       willmore_energy, willmore_residual)
from .wu import BivariateTaylor, wu_normalized_potential, wu_roundtrip

logging.getLogger(__name__).addHandler(logging.NullHandler())

__all__ = [
    "BigCellViolation", "BranchPoint", "CellBoundary", "DegenerateLift", "DomainError",
    "DPWError", "NotInCell", "NullConditionViolated", "NumericError", "PoleEncountered",
    "PoleError", "PotentialSyntaxError", "SingularLoop", "ValidationError",
    "FactorizationReport", "birkhoff", "cell_classify", "delta0", "k_factor_normalize", "iwasawa",
    "FrameField", "dpw_construct", "dpw_points", "integrate_holomorphic_frame", "Grid",
    "cylinder_potential", "ejiri_potential", "homogeneous_frame", "homogeneous_surface",
    "torus_energy", "vacuum_classify", "validate_homogeneous",
    "cartan_split", "group_inverse", "is_in_algebra", "is_in_group", "matrix_exp",
    "TwistedLoop", "loop_exp", "tau",
    "Potential", "classify_potential", "gauge_transform", "load_potential",
    "make_isotropic_potential", "make_lightlike_potential", "parse_potential",
    "validate_normalized", "validate_potential", "RationalExpr", "RationalMatrix",
    "cylinder_immersion", "ejiri_immersion", "example_s6", "rotation_D",
    "ConformalFrame", "SurfaceGrid", "conformal_gauss_frame", "conformality_check",
    "frame_to_immersion", "isotropy_check", "strong_conformality_residual", "willmore_energy",
    "willmore_residual", "BivariateTaylor", "wu_normalized_potential", "wu_roundtrip",
]
