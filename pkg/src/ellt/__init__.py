"""Exact algebraic model of rational circle-equivariant elliptic
cohomology, built from a Weierstrass curve and a coordinate.

Everything is computed over Q with no floats anywhere: function-field
arithmetic in canonical form, Riemann-Roch spaces, certified
kernel/cokernel windows for representation spheres, the residue
pairing, completions and local cohomology, and sections of divisor
sheaves over torsion-complement opens.  The `ellt` command line runs
the same computations from JSON job configs.
"""

from .affinegroups import (
    AffineGroup,
    additive_group,
    affine_sphere_module,
    multiplicative_group,
)
from .curvefield import (
    Coordinate,
    CycCache,
    FuncElt,
    TorsionDivisor,
    WeierstrassCurve,
    exact_order_count,
    h_dims,
)
from .eatheory import (
    EATheory,
    GradedFn,
    SphereHomology,
    TorsionClass,
    build_ea,
    coefficient_ring,
    completion,
    local_cohomology,
    localization_vertex,
    product_check,
    rep_to_divisor,
    serre_pairing,
    sphere_cohomology,
    sphere_homology,
    stable_sphere_homology,
)
from .errors import (
    CapTooSmall,
    DepthExceeded,
    EllTError,
    PrecisionExhausted,
    UnsupportedPoles,
    ValidationFailed,
    ZeroSeries,
)
from .exactcore import Matrix, Q, qtext
from .sheafside import (
    OpenSet,
    SectionWindow,
    glue_check,
    ma_eval,
    roundtrip,
    sa_build,
    sections,
)
from .tmodel import (
    ASObject,
    AlmostConstant,
    QWindow,
    Representation,
    SphereObject,
    dim_fn,
    stabilize,
    suspend,
)

__version__ = "0.1.0"

__all__ = [
    "AffineGroup",
    "ASObject",
    "AlmostConstant",
    "CapTooSmall",
    "Coordinate",
    "CycCache",
    "DepthExceeded",
    "EATheory",
    "EllTError",
    "FuncElt",
    "GradedFn",
    "Matrix",
    "OpenSet",
    "PrecisionExhausted",
    "Q",
    "QWindow",
    "Representation",
    "SectionWindow",
    "SphereHomology",
    "SphereObject",
    "TorsionClass",
    "TorsionDivisor",
    "UnsupportedPoles",
    "ValidationFailed",
    "WeierstrassCurve",
    "ZeroSeries",
    "additive_group",
    "affine_sphere_module",
    "build_ea",
    "coefficient_ring",
    "completion",
    "dim_fn",
    "exact_order_count",
    "glue_check",
    "h_dims",
    "local_cohomology",
    "localization_vertex",
    "ma_eval",
    "multiplicative_group",
    "product_check",
    "qtext",
    "rep_to_divisor",
    "roundtrip",
    "sa_build",
    "sections",
    "serre_pairing",
    "sphere_cohomology",
    "sphere_homology",
    "stable_sphere_homology",
    "stabilize",
    "suspend",
]
