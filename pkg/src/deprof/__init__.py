"""deprof: dependency-driven data profiling and data-quality workflows.

Discovery and validation of exact, approximate (g1), and metric functional
dependencies over CSV data, plus three workflows built on them: typo
detection, sorted-neighborhood deduplication, and partition-over-partition
anomaly detection.
"""

from .relation import (
    Attribute,
    CsvConfig,
    CsvFormatError,
    Relation,
    StrippedPartition,
    build_pli,
    from_rows,
    intersect_pli,
    load_csv,
    partition_for,
    to_csv,
)
from .fd import FD, FDSet, DiscoveryCancelled, discover_fds, fd_holds, partition_error
from .afd import AFD, as_fraction, discover_afds, g1_error, single_attribute_afds
from .mfd import (
    MFDStatement,
    MFDVerdict,
    cluster_diameter,
    distance,
    levenshtein,
    validate_mfd,
)
from .typo import (
    TypoConfig,
    ViolationCluster,
    filter_clusters,
    mine_almost_fds,
    propose_fixes,
    violation_clusters,
)
from .dedup import (
    DedupConfig,
    DedupSession,
    DuplicatePair,
    KeyCandidate,
    Resolution,
    StaleResolutionError,
    apply_resolution,
    find_duplicates,
    match_pair,
    rank_dedup_keys,
    sort_for_neighborhood,
    window_pairs,
)
from .anomaly import (
    AnomalyState,
    SweepConfig,
    advance_canonical,
    afd_probe,
    fd_diff,
    mfd_sweep,
    suggest_sweep_bound,
)

__version__ = "0.1.0"

__all__ = [
    "AFD",
    "AnomalyState",
    "Attribute",
    "CsvConfig",
    "CsvFormatError",
    "DedupConfig",
    "DedupSession",
    "DiscoveryCancelled",
    "DuplicatePair",
    "FD",
    "FDSet",
    "KeyCandidate",
    "MFDStatement",
    "MFDVerdict",
    "Relation",
    "Resolution",
    "StaleResolutionError",
    "StrippedPartition",
    "SweepConfig",
    "TypoConfig",
    "ViolationCluster",
    "advance_canonical",
    "afd_probe",
    "apply_resolution",
    "as_fraction",
    "build_pli",
    "cluster_diameter",
    "discover_afds",
    "discover_fds",
    "distance",
    "fd_diff",
    "fd_holds",
    "filter_clusters",
    "find_duplicates",
    "from_rows",
    "g1_error",
    "intersect_pli",
    "levenshtein",
    "load_csv",
    "match_pair",
    "mfd_sweep",
    "mine_almost_fds",
    "partition_error",
    "partition_for",
    "propose_fixes",
    "rank_dedup_keys",
    "single_attribute_afds",
    "sort_for_neighborhood",
    "suggest_sweep_bound",
    "to_csv",
    "validate_mfd",
    "violation_clusters",
    "window_pairs",
]
