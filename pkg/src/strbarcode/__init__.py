"""Minimum DNA string barcodes: candidate generation and greedy selection."""

from .candidates import Candidate, CandidatePool, GenerationConfig, generate_candidates, passes_filters
from .greedy import SelectionConfig, SelectionState, Solution, delta_gain, select_greedy, verify_solution
from .instances import RandomSpec, containment_probability, random_instance
from .sequence_model import (
    DegenerateBase,
    FastaError,
    GenomicSequence,
    InstanceSet,
    MatchKind,
    OccurrenceClass,
    distinguishes,
    match_at,
    occurrence_class,
    parse_fasta,
    read_fasta,
)

__all__ = [
    "Candidate", "CandidatePool", "GenerationConfig", "generate_candidates", "passes_filters",
    "SelectionConfig", "SelectionState", "Solution", "delta_gain", "select_greedy", "verify_solution",
    "RandomSpec", "containment_probability", "random_instance",
    "DegenerateBase", "FastaError", "GenomicSequence", "InstanceSet", "MatchKind", "OccurrenceClass",
    "distinguishes", "match_at", "occurrence_class", "parse_fasta", "read_fasta",
]

__version__ = "0.1.0"
