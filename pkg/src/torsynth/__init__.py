"""torsynth: scale Tor network consensuses into synthetic larger networks.

Parses v3 network-status consensuses, measures historical horizontal and
vertical growth, scales a consensus vertically (weights) and/or
horizontally (synthetic relays), and validates synthetic consensuses
against reference ones.
"""

from .consensus_io import (
    AsnTable,
    FamilyDeclarations,
    annotate_asns,
    load_asn_table,
    load_family_declarations,
    parse_consensus,
    serialize_consensus,
    serialize_family_partition,
)
from .errors import TorsynthError
from .horizontal import (
    FamilyStats,
    HorizontalConfig,
    compute_family_stats,
    scale_horizontal,
)
from .model import (
    Consensus,
    FamilyPartition,
    Relay,
    RelayRole,
    build_family_partition,
    group_counts,
    group_weights,
    role_of,
)
from .validation import DeviationReport, per_rank_deviation, weight_cdf
from .vertical import (
    ResolvedGroupFactors,
    RoleFactors,
    derive_group_factors,
    scale_by_quantile,
    scale_by_role,
    scale_uniform,
)

__version__ = "0.1.0"

__all__ = [
    "AsnTable",
    "Consensus",
    "DeviationReport",
    "FamilyDeclarations",
    "FamilyPartition",
    "FamilyStats",
    "HorizontalConfig",
    "Relay",
    "RelayRole",
    "ResolvedGroupFactors",
    "RoleFactors",
    "TorsynthError",
    "annotate_asns",
    "build_family_partition",
    "compute_family_stats",
    "derive_group_factors",
    "group_counts",
    "group_weights",
    "load_asn_table",
    "load_family_declarations",
    "parse_consensus",
    "per_rank_deviation",
    "role_of",
    "scale_by_quantile",
    "scale_by_role",
    "scale_horizontal",
    "scale_uniform",
    "serialize_consensus",
    "serialize_family_partition",
    "weight_cdf",
]
