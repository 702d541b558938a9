"""Metric projections, proximal normal and tangent cones, and minimizing curves
in prox-regular subsets of model Riemannian manifolds."""

__version__ = "0.1.0"

from .cones import Cone, ConeKind
from .curves import (DiscreteCurve, covariant_accel, energy, first_variation, length,
                     minimize_curve, necessary_condition_residual, variation_apply)
from .expr import PsiExpr
from .manifolds import Euclidean, Hyperbolic2, Sphere2, load_manifold
from .projection import cone_project, directional_derivative, project
from .sets import (CombSet, PointClass, ProxSet, bouligand_tangent_cone, classify, estimate_reach,
                   load_set, polar, proximal_normal_cone)

__all__ = [
    "CombSet", "Cone", "ConeKind", "DiscreteCurve", "Euclidean", "Hyperbolic2", "PointClass",
    "ProxSet", "PsiExpr", "Sphere2", "bouligand_tangent_cone", "classify", "cone_project",
    "covariant_accel", "directional_derivative", "energy", "estimate_reach", "first_variation",
    "length", "load_manifold", "load_set", "minimize_curve", "necessary_condition_residual",
    "polar", "project", "proximal_normal_cone", "variation_apply",
]
