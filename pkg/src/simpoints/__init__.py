"""Similarity-invariant points of convex bodies.

Polytope geometry (volume, centroid, Hausdorff and translation-class
distances), orthogonal-group tools (Haar sampling, symmetry groups, orbit
alignment), invariant-point functionals including the anchored blend
construction, and suspension bodies whose invariant points are confined to
a slice.
"""

from .body import (
    ConvexBody,
    TranslationClass,
    apply_map,
    centroid,
    class_distance,
    contains,
    convex_hull,
    hausdorff_distance,
    normalize,
    support_function,
    translation_class,
    volume,
)
from .functionals import (
    BlendSpec,
    InvariantFunctional,
    blend_functional,
    centroid_functional,
    equivariance_report,
    make_blend_spec,
    mvee_center,
    similarity_extend,
    unit_blend,
)
from .group import (
    HaarSampler,
    SymmetryGroup,
    fixed_point_set,
    group_average_scalar,
    haar_sample_orthogonal,
    orbit_align,
    symmetry_group,
)
from .maps import AffineMap, Similarity
from .suspension import SuspensionBody, asymmetric_profile, suspend, verify_fixed_slice

__all__ = [
    "AffineMap",
    "BlendSpec",
    "ConvexBody",
    "HaarSampler",
    "InvariantFunctional",
    "Similarity",
    "SuspensionBody",
    "SymmetryGroup",
    "TranslationClass",
    "apply_map",
    "asymmetric_profile",
    "blend_functional",
    "centroid",
    "centroid_functional",
    "class_distance",
    "contains",
    "convex_hull",
    "equivariance_report",
    "fixed_point_set",
    "group_average_scalar",
    "haar_sample_orthogonal",
    "hausdorff_distance",
    "make_blend_spec",
    "mvee_center",
    "normalize",
    "orbit_align",
    "similarity_extend",
    "support_function",
    "suspend",
    "symmetry_group",
    "translation_class",
    "unit_blend",
    "verify_fixed_slice",
    "volume",
]
