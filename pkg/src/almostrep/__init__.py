"""Recursive-averaging correction of almost representations of finite groupoids."""

from .cocycle import (
    Cochain1,
    Multiplier,
    apply_coboundary,
    ell,
    isometrize,
    trivial_multiplier,
    validate_multiplier,
)
from .core import (
    FiniteGroupoid,
    Homomorphism,
    Report,
    build_group,
    build_group_bundle,
    build_pair_groupoid,
    build_transformation_groupoid,
    isotropy_and_orbits,
    restrict,
    validate_groupoid,
)
from .hilbert import averaged_gram, is_unitary, unitarize
from .measure import (
    CutoffFunction,
    HaarSystem,
    normalize_cutoff,
    normalized_counting_haar,
    validate_cutoff,
    validate_haar,
)
from .morita import (
    PushforwardSection,
    canonical_equivalence,
    check_pf,
    extend_and_correct,
    pullback,
    pushforward,
    regular_rep,
    separates,
)
from .rep import (
    PseudoRep,
    average,
    correct,
    defect_and_bound,
    invert_with_bound_check,
    is_almost,
    operator_norm,
    perturb,
    validate_rep,
)

__version__ = "0.1.0"
