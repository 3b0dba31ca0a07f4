"""Degenerate DNA sequences, FASTA ingestion and probe match semantics.

Bases are stored as 4-bit masks (a=1, c=2, g=4, t=8). A degenerate base is
any non-empty combination; single-bit masks are the plain nucleotides.
Positions in :func:`match_at` are 1-based.
"""

from __future__ import annotations

import enum
import io
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, TextIO

import numpy as np

__all__ = [
    "DegenerateBase",
    "GenomicSequence",
    "InstanceSet",
    "MatchKind",
    "OccurrenceClass",
    "FastaError",
    "IUPAC",
    "parse_fasta",
    "read_fasta",
    "format_fasta",
    "match_at",
    "occurrence_class",
    "distinguishes",
]

NUCLEOTIDES = "acgt"
BIT = {"a": 1, "c": 2, "g": 4, "t": 8}

IUPAC: dict[str, str] = {
    "a": "a", "c": "c", "g": "g", "t": "t",
    "r": "ag", "y": "ct", "s": "cg", "w": "at", "k": "gt", "m": "ac",
    "b": "cgt", "d": "agt", "h": "act", "v": "acg", "n": "acgt",
}

MASK_OF_LETTER: dict[str, int] = {
    letter: sum(BIT[b] for b in bases) for letter, bases in IUPAC.items()
}
LETTER_OF_MASK: dict[int, str] = {m: letter for letter, m in MASK_OF_LETTER.items()}

# byte -> mask lookup; 0 marks a character outside the IUPAC alphabet
_MASK_TABLE = np.zeros(256, dtype=np.uint8)
for _letter, _mask in MASK_OF_LETTER.items():
    _MASK_TABLE[ord(_letter)] = _mask

# every IUPAC letter compatible with a given plain nucleotide, for regex scans
_COMPATIBLE = {
    b: "".join(sorted(l for l, bases in IUPAC.items() if b in bases)) for b in NUCLEOTIDES
}


class FastaError(ValueError):
    """Malformed FASTA input. ``line``/``column`` are 1-based when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class DegenerateBase:
    """A non-empty subset of {a, c, g, t} packed into 4 bits."""

    mask: int

    def __post_init__(self):
        if not 0 < self.mask < 16:
            raise ValueError(f"degenerate base mask must be in 1..15, got {self.mask}")

    @classmethod
    def from_letter(cls, letter: str) -> DegenerateBase:
        try:
            return cls(MASK_OF_LETTER[letter.lower()])
        except KeyError:
            raise ValueError(f"not an IUPAC nucleotide code: {letter!r}") from None

    @property
    def members(self) -> frozenset[str]:
        return frozenset(b for b in NUCLEOTIDES if self.mask & BIT[b])

    @property
    def letter(self) -> str:
        return LETTER_OF_MASK[self.mask]

    @property
    def is_degenerate(self) -> bool:
        return self.mask & (self.mask - 1) != 0

    def __contains__(self, nucleotide: str) -> bool:
        return bool(self.mask & BIT.get(nucleotide, 0))

    def __str__(self) -> str:
        return self.letter


@dataclass(frozen=True, eq=False)
class GenomicSequence:
    """An identified sequence of degenerate bases.

    ``text`` is the canonical lowercase IUPAC string; per-base views are
    derived from it on demand so megabase genomes stay compact.
    """

    id: int
    name: str
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"sequence {self.name!r} is empty")
        bad = _first_invalid(self.text)
        if bad is not None:
            raise ValueError(f"sequence {self.name!r}: invalid base {self.text[bad]!r} at {bad + 1}")

    @classmethod
    def from_bases(cls, id: int, name: str, bases: Iterable[DegenerateBase]) -> GenomicSequence:
        return cls(id, name, "".join(b.letter for b in bases))

    def __len__(self) -> int:
        return len(self.text)

    @property
    def bases(self) -> list[DegenerateBase]:
        return [DegenerateBase(MASK_OF_LETTER[ch]) for ch in self.text]

    @cached_property
    def masks(self) -> np.ndarray:
        return _MASK_TABLE[np.frombuffer(self.text.encode("ascii"), dtype=np.uint8)]

    @cached_property
    def degenerate_count(self) -> int:
        return len(self.text) - sum(self.text.count(b) for b in NUCLEOTIDES)

    @property
    def has_degenerate(self) -> bool:
        return self.degenerate_count > 0


@dataclass
class InstanceSet:
    """The problem input: sequences with unique ids ``0..n-1`` and unique names."""

    sequences: list[GenomicSequence] = field(default_factory=list)

    def __post_init__(self):
        names = set()
        for i, seq in enumerate(self.sequences):
            if seq.id != i:
                raise ValueError(f"sequence ids must be 0..n-1 in order; got {seq.id} at {i}")
            if seq.name in names:
                raise ValueError(f"duplicate sequence name {seq.name!r}")
            names.add(seq.name)

    @classmethod
    def from_texts(cls, texts: Iterable[str], names: Iterable[str] | None = None) -> InstanceSet:
        texts = [t.lower() for t in texts]
        if names is None:
            names = [f"s{i + 1}" for i in range(len(texts))]
        return cls([GenomicSequence(i, name, t) for i, (name, t) in enumerate(zip(names, texts))])

    @property
    def n(self) -> int:
        return len(self.sequences)

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    def __getitem__(self, i: int) -> GenomicSequence:
        return self.sequences[i]

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.sequences]

    @property
    def total_length(self) -> int:
        return sum(len(s) for s in self.sequences)

    @property
    def has_degenerate(self) -> bool:
        return any(s.has_degenerate for s in self.sequences)

    def index_of(self, name: str) -> int:
        for seq in self.sequences:
            if seq.name == name:
                return seq.id
        raise KeyError(name)

    def duplicate_groups(self) -> list[list[int]]:
        """Groups of ids whose contents are identical (never separable)."""
        by_text: dict[str, list[int]] = {}
        for seq in self.sequences:
            by_text.setdefault(seq.text, []).append(seq.id)
        return [ids for ids in by_text.values() if len(ids) > 1]


_INVALID = re.compile(f"[^{''.join(IUPAC)}]")
_INVALID_IN_LINE = re.compile(f"[^{''.join(IUPAC)}\\s]")


def _first_invalid(text: str) -> int | None:
    m = _INVALID.search(text)
    return m.start() if m else None


def parse_fasta(text: str | TextIO) -> InstanceSet:
    """Parse FASTA records into an :class:`InstanceSet`.

    Header lines start with ``>``; the record name is the first
    whitespace-delimited token. Sequence lines are concatenated and
    lower-cased. Blank lines are ignored.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    records: list[tuple[str, int, list[str]]] = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if line.startswith(">"):
            header = line[1:].strip()
            name = header.split()[0] if header else ""
            if not name:
                raise FastaError("empty record header", lineno)
            if name in seen:
                raise FastaError(f"duplicate record name {name!r} (first seen on line {seen[name]})", lineno)
            seen[name] = lineno
            records.append((name, lineno, []))
            continue
        stripped = line.strip()
        if not stripped:
            continue
        if not records:
            raise FastaError("sequence data before the first '>' header", lineno)
        body = line.lower()
        bad = _INVALID_IN_LINE.search(body)
        if bad is not None:
            raise FastaError(f"invalid nucleotide code {line[bad.start()]!r}", lineno, bad.start() + 1)
        records[-1][2].append("".join(body.split()))
    if not records:
        raise FastaError("no FASTA records found")
    sequences = []
    for i, (name, lineno, chunks) in enumerate(records):
        seq = "".join(chunks)
        if not seq:
            raise FastaError(f"record {name!r} has no sequence", lineno)
        sequences.append(GenomicSequence(i, name, seq))
    return InstanceSet(sequences)


def read_fasta(path) -> InstanceSet:
    import gzip

    path = str(path)
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rt") as fh:
        return parse_fasta(fh)


def format_fasta(instance: InstanceSet, width: int = 60) -> str:
    out = []
    for seq in instance:
        out.append(f">{seq.name}\n")
        for i in range(0, len(seq.text), width):
            out.append(seq.text[i:i + width] + "\n")
    return "".join(out)


class MatchKind(enum.Enum):
    PERFECT_MATCH = "perfect"
    UNCERTAIN_MATCH = "uncertain"
    PERFECT_MISMATCH = "mismatch"


class OccurrenceClass(enum.Enum):
    HAS_PERFECT = "has_perfect"
    UNCERTAIN_ONLY = "uncertain_only"
    ALL_MISMATCH = "all_mismatch"


def _check_probe(x: str) -> str:
    x = x.lower()
    if not x or any(ch not in BIT for ch in x):
        raise ValueError(f"probe must be a non-empty plain DNA string, got {x!r}")
    return x


def match_at(x: str, y: GenomicSequence, i: int) -> MatchKind:
    """Classify probe ``x`` against ``y`` at 1-based start position ``i``."""
    x = _check_probe(x)
    if not 1 <= i <= len(y) - len(x) + 1:
        raise IndexError(f"start position {i} out of range 1..{len(y) - len(x) + 1}")
    strict = False
    for j, b in enumerate(x):
        mask = MASK_OF_LETTER[y.text[i - 1 + j]]
        if not mask & BIT[b]:
            return MatchKind.PERFECT_MISMATCH
        if mask != BIT[b]:
            strict = True
    return MatchKind.UNCERTAIN_MATCH if strict else MatchKind.PERFECT_MATCH


def compatible_pattern(x: str) -> re.Pattern:
    """Regex matching any window of IUPAC text that ``x`` could hybridize to."""
    return re.compile("".join(f"[{_COMPATIBLE[b]}]" for b in x))


def occurrence_class(x: str, y: GenomicSequence) -> OccurrenceClass:
    """Classify ``x`` against every start position of ``y``.

    A probe longer than ``y`` has no valid position and is ALL_MISMATCH.
    """
    x = _check_probe(x)
    if len(x) > len(y):
        return OccurrenceClass.ALL_MISMATCH
    # a perfect match needs plain letters equal to x, so str.find is exact
    if x in y.text:
        return OccurrenceClass.HAS_PERFECT
    if y.has_degenerate and compatible_pattern(x).search(y.text):
        return OccurrenceClass.UNCERTAIN_ONLY
    return OccurrenceClass.ALL_MISMATCH


def distinguishes(x: str, y: GenomicSequence, z: GenomicSequence) -> bool:
    cy = occurrence_class(x, y)
    cz = occurrence_class(x, z)
    return (cy is OccurrenceClass.HAS_PERFECT and cz is OccurrenceClass.ALL_MISMATCH) or (
        cz is OccurrenceClass.HAS_PERFECT and cy is OccurrenceClass.ALL_MISMATCH
    )
