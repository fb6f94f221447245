"""Transaction conflict analysis for blockchain blocks."""

__version__ = "0.1.0"

from .conflicts import (
    BlockMetrics,
    ConflictGraph,
    ConflictType,
    analyze_block,
    build_graph,
    conflict,
    conflict_families,
    count_conflicts,
    densest_family,
    independent_transactions,
    longest_conflict_chain,
)
from .ingest import filter_for_analysis, load_path, parse_ethereum, parse_solana
from .model import (
    AccessMode,
    AccessSet,
    AnalysisConfig,
    BlockWorkload,
    Chain,
    SuccessFilter,
    Transaction,
    TransactionKind,
    effective_access,
)
from .schedule import Schedule, bounded_schedule, level_schedule, speedup_report
from .workload import generate, worked_example
