"""Series-to-vector feature extraction (load-shape and statistical families)."""
from . import agnostic, informed  # noqa: F401  (registers the features)
from .matrix import (
    FeatureMatrix,
    FeatureVector,
    SeriesFeaturizer,
    assemble_matrix,
    matrix_from_raw,
    combine,
    extract,
    extract_domain_agnostic,
    extract_domain_informed,
)
from .registry import (
    AGNOSTIC,
    COMBINED,
    FAMILIES,
    INFORMED,
    FeatureSpec,
    family_slug,
    parse_family,
    register_feature,
    registry,
    schema,
)

__all__ = [
    "FeatureMatrix", "FeatureVector", "SeriesFeaturizer", "assemble_matrix", "matrix_from_raw", "combine",
    "extract", "extract_domain_agnostic", "extract_domain_informed",
    "AGNOSTIC", "COMBINED", "FAMILIES", "INFORMED", "FeatureSpec", "family_slug",
    "parse_family", "register_feature", "registry", "schema",
]
