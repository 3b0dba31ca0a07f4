"""Brute-force reference implementations for tests and acceptance runs.

Nothing here is fast. Each routine recomputes its answer from the raw
sequences with the most direct method available so it can be used to check
the optimized code paths.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .candidates import GenerationConfig, passes_filters
from .sequence_model import (
    BIT,
    InstanceSet,
    MatchKind,
    OccurrenceClass,
    match_at,
)

__all__ = [
    "OracleGuardError",
    "SignatureClass",
    "brute_occurrence_class",
    "literal_generate",
    "enumerate_signatures",
    "brute_delta",
    "naive_greedy",
    "exact_minimum",
    "separable_pairs",
    "containment_reference",
]


class OracleGuardError(ValueError):
    """Instance too large for exhaustive methods."""


def brute_occurrence_class(x: str, y) -> OccurrenceClass:
    """Scan every start position with :func:`match_at`."""
    if len(x) > len(y):
        return OccurrenceClass.ALL_MISMATCH
    kinds = {match_at(x, y, i) for i in range(1, len(y) - len(x) + 2)}
    if MatchKind.PERFECT_MATCH in kinds:
        return OccurrenceClass.HAS_PERFECT
    if MatchKind.UNCERTAIN_MATCH in kinds:
        return OccurrenceClass.UNCERTAIN_ONLY
    return OccurrenceClass.ALL_MISMATCH


def _signature(x: str, instance: InstanceSet) -> tuple[frozenset, frozenset]:
    P, U = set(), set()
    for seq in instance:
        c = brute_occurrence_class(x, seq)
        if c is OccurrenceClass.HAS_PERFECT:
            P.add(seq.id)
        elif c is OccurrenceClass.UNCERTAIN_ONLY:
            U.add(seq.id)
    return frozenset(P), frozenset(U)


def _occurrence_starts(x: str, instance: InstanceSet) -> list[tuple[int, int, MatchKind]]:
    out = []
    for seq in instance:
        for i in range(1, len(seq) - len(x) + 2):
            kind = match_at(x, seq, i)
            if kind is not MatchKind.PERFECT_MISMATCH:
                out.append((seq.id, i - 1, kind))
    return out


TRUE, FALSE, DONE = "TRUE", "FALSE", "DONE"


def literal_generate(instance: InstanceSet, config: GenerationConfig | None = None):
    """Position-by-position flag sweep, written straight from the description.

    Returns ``(text, (seq, 1-based start), P, U)`` tuples in generation order.
    """
    config = config or GenerationConfig()
    n = instance.n
    sources = config.sources_for(n)
    flags = {s: [TRUE] * len(instance[s]) for s in sources}
    unique_saved: set[int] = set()
    out = []
    if n < 2:
        return out
    length = config.l_min
    while config.l_max is None or length <= config.l_max:
        for s in sources:
            f = flags[s]
            for p in range(len(f)):
                if f[p] == FALSE:
                    f[p] = TRUE
        active = any(
            flags[s][p] == TRUE for s in sources for p in range(len(instance[s]) - length + 1)
        )
        if not active:
            break
        for s in sources:
            text_s = instance[s].text
            f = flags[s]
            for p in range(len(text_s) - length + 1):
                if f[p] != TRUE:
                    continue
                window = text_s[p:p + length]
                if any(ch not in BIT for ch in window):
                    f[p] = DONE
                    continue
                occ = _occurrence_starts(window, instance)
                for q_seq, q, _ in occ:
                    if q_seq in flags and flags[q_seq][q] == TRUE:
                        flags[q_seq][q] = FALSE
                P = frozenset(q_seq for q_seq, _, k in occ if k is MatchKind.PERFECT_MATCH)
                U = frozenset(q_seq for q_seq, _, _ in occ) - P
                hit = P | U if config.uncertain_occurrences else P
                if len(hit) == n:
                    continue
                if hit == {s}:
                    if s in unique_saved:
                        f[p] = DONE
                    elif passes_filters(window, config) and len(P | U) < n:
                        unique_saved.add(s)
                        out.append((window, (s, p + 1), P, U))
                        f[p] = DONE
                    continue
                if P and len(P | U) < n and passes_filters(window, config):
                    out.append((window, (s, p + 1), P, U))
        length += 1
    return out


@dataclass(frozen=True)
class SignatureClass:
    perfect: frozenset[int]
    uncertain: frozenset[int]
    representative: str
    count: int  # distinct strings (up to l_max) realizing this signature

    def separates(self, i: int, j: int, n: int) -> bool:
        mis = lambda k: k not in self.perfect and k not in self.uncertain  # noqa: E731
        return (i in self.perfect and mis(j)) or (j in self.perfect and mis(i))


def enumerate_signatures(
    instance: InstanceSet, l_max: int = 16, max_total_length: int = 200
) -> list[SignatureClass]:
    """Every plain substring up to ``l_max``, classified and grouped by (P, U)."""
    if instance.total_length > max_total_length or l_max > 16:
        raise OracleGuardError(
            f"enumerate_signatures guard: total length {instance.total_length} "
            f"(max {max_total_length}), l_max {l_max} (max 16)"
        )
    n = instance.n
    texts = set()
    for seq in instance:
        for k in range(1, min(l_max, len(seq)) + 1):
            for p in range(len(seq) - k + 1):
                w = seq.text[p:p + k]
                if all(ch in BIT for ch in w):
                    texts.add(w)
    classes: dict[tuple, list[str]] = {}
    for w in texts:
        P, U = _signature(w, instance)
        if not P or len(P | U) == n:
            continue
        classes.setdefault((P, U), []).append(w)
    out = []
    for (P, U), ws in classes.items():
        rep = min(ws, key=lambda w: (len(w), w))
        out.append(SignatureClass(P, U, rep, len(ws)))
    out.sort(key=lambda c: (len(c.representative), c.representative))
    return out


def brute_delta(perfect, uncertain, cover, m: int) -> int:
    """Pairs {i, j} with one side perfect, the other a perfect mismatch, cover < m."""
    n = len(cover)
    P, U = set(perfect), set(uncertain)
    M = set(range(n)) - P - U
    gain = 0
    for i in range(n):
        for j in range(i + 1, n):
            if cover[i][j] >= m:
                continue
            if (i in P and j in M) or (j in P and i in M):
                gain += 1
    return gain


def _levenshtein(a: str, b: str) -> int:
    # full table, deliberately unlike the two-row version in greedy
    D = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        D[i][0] = i
    for j in range(len(b) + 1):
        D[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            D[i][j] = min(D[i - 1][j] + 1, D[i][j - 1] + 1, D[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return D[-1][-1]


def naive_greedy(pool, m: int = 1, min_edit_distance: int = 0) -> list[int]:
    """Greedy selection recomputing every gain from the pair matrix each round."""
    n = pool.n
    P_all, U_all = pool.membership()
    M_all = ~(P_all | U_all)
    cover = np.zeros((n, n), dtype=np.int64)
    removed = np.zeros(len(pool), dtype=bool)
    texts = pool.texts() if min_edit_distance > 0 else None
    selected: list[int] = []
    while True:
        open_ = (cover < m).astype(np.int64)
        np.fill_diagonal(open_, 0)
        best, best_id = 0, -1
        for c in range(len(pool)):
            if removed[c]:
                continue
            Pi = np.flatnonzero(P_all[c])
            Mi = np.flatnonzero(M_all[c])
            g = int(open_[np.ix_(Pi, Mi)].sum())
            if g > best:
                best, best_id = g, c
        if best == 0:
            return selected
        selected.append(best_id)
        removed[best_id] = True
        Pi = np.flatnonzero(P_all[best_id])
        Mi = np.flatnonzero(M_all[best_id])
        cover[np.ix_(Pi, Mi)] = np.minimum(cover[np.ix_(Pi, Mi)] + 1, m)
        cover[np.ix_(Mi, Pi)] = np.minimum(cover[np.ix_(Mi, Pi)] + 1, m)
        if min_edit_distance > 0:
            for c in range(len(pool)):
                if not removed[c] and _levenshtein(texts[c], texts[best_id]) < min_edit_distance:
                    removed[c] = True


def separable_pairs(classes: Sequence[SignatureClass], n: int) -> set[tuple[int, int]]:
    return {
        (i, j)
        for i, j in itertools.combinations(range(n), 2)
        if any(c.separates(i, j, n) for c in classes)
    }


def exact_minimum(instance: InstanceSet, m: int = 1, l_max: int = 16, max_classes: int = 64) -> int:
    """Smallest number of distinct strings giving each separable pair min(m, achievable) cover.

    Signature classes with identical pair-coverage are interchangeable and
    are merged (their string counts add up); the search is breadth-first over
    capped coverage vectors.
    """
    n = instance.n
    classes = enumerate_signatures(instance, l_max=l_max)
    pairs = list(itertools.combinations(range(n), 2))
    by_cover: dict[tuple, int] = {}
    for c in classes:
        key = tuple(int(c.separates(i, j, n)) for i, j in pairs)
        if any(key):
            by_cover[key] = by_cover.get(key, 0) + c.count
    if len(by_cover) > max_classes:
        raise OracleGuardError(f"{len(by_cover)} coverage classes exceeds guard {max_classes}")
    vecs = list(by_cover)
    caps = [min(by_cover[v], m) for v in vecs]
    achievable = [min(m, sum(v[p] * by_cover[v] for v in vecs)) for p in range(len(pairs))]
    target = tuple(achievable)
    if not any(target):
        return 0
    if m == 1:
        frontier = {tuple([0] * len(pairs))}
        seen = set(frontier)
        for k in range(1, len(vecs) + 1):
            nxt = set()
            for covered in frontier:
                for v in vecs:
                    cov = tuple(a | b for a, b in zip(covered, v))
                    if cov == target:
                        return k
                    if cov not in seen:
                        seen.add(cov)
                        nxt.add(cov)
            frontier = nxt
    else:
        # with redundancy the per-class usage matters, so it is part of the state
        start = (tuple([0] * len(pairs)), tuple([0] * len(vecs)))
        frontier = {start}
        seen = {start}
        for k in range(1, sum(caps) + 1):
            nxt = set()
            for covered, used in frontier:
                for ci, v in enumerate(vecs):
                    if used[ci] >= caps[ci]:
                        continue
                    cov = tuple(min(m, a + b) for a, b in zip(covered, v))
                    if cov == target:
                        return k
                    state = (cov, used[:ci] + (used[ci] + 1,) + used[ci + 1:])
                    if state not in seen:
                        seen.add(state)
                        nxt.add(state)
            frontier = nxt
            if len(frontier) > 2_000_000:
                raise OracleGuardError("exact_minimum search space exceeds guard")
    raise AssertionError("target coverage unreachable; inconsistent achievable vector")


def log2_lower_bound(n: int) -> int:
    return math.ceil(math.log2(n)) if n > 1 else 0


def containment_reference(length: int, k: int, sequences: int = 400, seed: int = 12345) -> float:
    """P(random k-mer occurs in a random sequence), averaged exactly over k-mers.

    For each random sequence the fraction of all 4**k strings present is
    counted directly, so every sequence contributes an exact conditional
    probability. Uses numpy's default generator, not the Philox streams of
    :mod:`instances`, so it shares no code path with the estimator it checks.
    """
    if not 1 <= k <= min(length, 12):
        raise OracleGuardError("need 1 <= k <= min(length, 12)")
    rng = np.random.default_rng(seed)
    weights = 4 ** np.arange(k - 1, -1, -1, dtype=np.int64)
    total = 0.0
    for _ in range(sequences):
        codes = rng.integers(0, 4, length, dtype=np.int64)
        windows = np.lib.stride_tricks.sliding_window_view(codes, k)
        total += len(np.unique(windows @ weights)) / 4 ** k
    return total / sequences
