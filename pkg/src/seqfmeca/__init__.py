"""Message-level FMECA generation from textual interaction models."""

from .catalog import (
    DEFAULT_PROFILE,
    ActorProfile,
    ErrorModel,
    FailureModeCandidate,
    applicable_errors,
    candidate_id,
    enumerate_candidates,
)
from .dsl import parse, parse_file, serialize
from .fmeca import (
    Probability,
    RiskClass,
    RiskMatrix,
    Severity,
    Worksheet,
    WorksheetRow,
    completeness_check,
    default_matrix,
    init_worksheet,
    merge_annotations,
    rank_rows,
    residual_risk,
    risk_rank,
)
from .model import SystemModel, allocation_lints, message_elements, predecessors, validate_model
from .mutator import classify, mutant_counts, mutate, nominal_trace
from .reporting import ReportOptions, emit_fmeca, emit_sequence_text, emit_summary

__version__ = "0.1.0"
