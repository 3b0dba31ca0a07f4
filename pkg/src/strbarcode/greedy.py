"""Lazy greedy set-cover selection of distinguishers.

Elements are pairs of sequences, candidates are the sets of pairs they
separate, and every pair must be covered ``redundancy`` times. Gains are
computed either from the partition of sequences induced by the current
selection (only valid for redundancy 1 without uncertain matches) or from the
``cover`` count matrix. Cached gains are upper bounds because gains never
increase as the selection grows, which is what makes the lazy scan sound.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .candidates import Candidate, CandidatePool
from .sequence_model import InstanceSet, OccurrenceClass, occurrence_class

__all__ = [
    "SelectionConfig",
    "SelectionState",
    "Solution",
    "UncoveredPair",
    "VerificationReport",
    "delta_gain",
    "select_greedy",
    "apply_edit_filter",
    "edit_distance",
    "verify_solution",
]

_UNSEEN = np.iinfo(np.int64).max
_CHUNK = 4096
_CELLS = 1 << 22  # dense scratch budget per gain batch


def edit_distance(s1: str, s2: str) -> int:
    """Unit-cost Levenshtein distance."""
    if len(s1) < len(s2):
        s1, s2 = s2, s1
    prev = list(range(len(s2) + 1))
    for i, a in enumerate(s1, start=1):
        cur = [i]
        for j, b in enumerate(s2, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a != b)))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class SelectionConfig:
    """``gain`` is "auto", "partition" or "matrix"; ``lazy=False`` recomputes every gain each round."""

    redundancy: int = 1
    min_edit_distance: int = 0
    gain: str = "auto"
    lazy: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.redundancy < 1:
            raise ValueError("redundancy must be >= 1")
        if self.min_edit_distance < 0:
            raise ValueError("min_edit_distance must be >= 0")
        if self.gain not in ("auto", "partition", "matrix"):
            raise ValueError(f"unknown gain method {self.gain!r}")


class SelectionState:
    """Selected ids, saturating pair-cover counts and (fast path) the partition."""

    def __init__(self, n: int, n_candidates: int, redundancy: int = 1, partition: bool = False):
        self.n = n
        self.m = redundancy
        self.selected: list[int] = []
        self.cover = np.zeros((n, n), dtype=np.int32)
        self.use_partition = partition
        self.block = np.zeros(n, dtype=np.int64)
        self.nblocks = 1
        self.delta_old = np.full(n_candidates, _UNSEEN, dtype=np.int64)
        self.removed = np.zeros(n_candidates, dtype=bool)

    @property
    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.nblocks)]
        for i, b in enumerate(self.block.tolist()):
            out[b].append(i)
        return out

    def open_pairs(self) -> np.ndarray:
        W = (self.cover < self.m).astype(np.float32 if self.n < 4096 else np.float64)
        np.fill_diagonal(W, 0)
        return W

    def add(self, perfect: np.ndarray, uncertain: np.ndarray, cand_id: int) -> None:
        mis = np.ones(self.n, dtype=bool)
        mis[perfect] = False
        mis[uncertain] = False
        mis = np.flatnonzero(mis)
        block = np.ix_(perfect, mis)
        self.cover[block] = np.minimum(self.cover[block] + 1, self.m)
        block = np.ix_(mis, perfect)
        self.cover[block] = np.minimum(self.cover[block] + 1, self.m)
        self.selected.append(cand_id)
        self.removed[cand_id] = True
        if self.use_partition:
            inP = np.zeros(self.n, dtype=np.int64)
            inP[perfect] = 1
            _, self.block = np.unique(self.block * 2 + inP, return_inverse=True)
            self.nblocks = int(self.block.max()) + 1


@numba.njit(cache=True, nogil=True)
def _partition_gain(indptr, indices, c, block, sizes, cnt):
    # O(|P|); cnt is an all-zero scratch array of length nblocks and is left zeroed
    s = 0
    for e in range(indptr[c], indptr[c + 1]):
        cnt[block[indices[e]]] += 1
    for e in range(indptr[c], indptr[c + 1]):
        b = block[indices[e]]
        if cnt[b]:
            s += cnt[b] * (sizes[b] - cnt[b])
            cnt[b] = 0
    return s


@numba.njit(cache=True, nogil=True)
def _partition_kernel(indptr, indices, ids, block, sizes, cnt):
    out = np.empty(len(ids), np.int64)
    for k in range(len(ids)):
        out[k] = _partition_gain(indptr, indices, ids[k], block, sizes, cnt)
    return out


@numba.njit(cache=True, nogil=True)
def _partition_lazy_scan(indptr, indices, delta_old, block, sizes, cnt):
    """One round of the lazy loop in cand_id order; returns (best, best_id, evaluations)."""
    best, best_id, evals = 0, -1, 0
    for c in range(len(delta_old)):
        if delta_old[c] <= best:
            continue
        g = _partition_gain(indptr, indices, c, block, sizes, cnt)
        evals += 1
        delta_old[c] = g
        if g > best:
            best, best_id = g, c
    return best, best_id, evals


def _partition_gains(pool: CandidatePool, state: SelectionState, ids: np.ndarray) -> np.ndarray:
    """sum over blocks of |S & P| * |S - P|."""
    sizes = np.bincount(state.block, minlength=state.nblocks)
    cnt = np.zeros(state.nblocks, dtype=np.int64)
    return _partition_kernel(pool.p_indptr, pool.p_indices, np.asarray(ids, dtype=np.int64), state.block, sizes, cnt)


def _matrix_gains(pool: CandidatePool, state: SelectionState, ids: np.ndarray, W=None) -> np.ndarray:
    """|{(i, j) : i in P, j in M, cover[i, j] < m}| via one matrix product per batch."""
    if W is None:
        W = state.open_pairs()
    n = state.n
    out = np.empty(len(ids), dtype=np.int64)
    step = max(1, _CELLS // max(n, 1))
    for lo in range(0, len(ids), step):
        sub = ids[lo:lo + step]
        P, U = pool.membership(sub)
        G = P.astype(W.dtype) @ W
        G[P | U] = 0
        out[lo:lo + step] = np.rint(G.sum(axis=1)).astype(np.int64)
    return out


def delta_gain(c: Candidate | int, state: SelectionState, pool: CandidatePool | None = None, method: str = "auto") -> int:
    """Gain of one candidate against the current state."""
    if isinstance(c, Candidate):
        P = np.array(sorted(c.perfect), dtype=np.int64)
        U = np.array(sorted(c.uncertain), dtype=np.int64)
    else:
        P, U = pool.perfect_ids(c).astype(np.int64), pool.uncertain_ids(c).astype(np.int64)
    if method == "auto":
        method = "partition" if state.use_partition and len(U) == 0 else "matrix"
    if method == "partition":
        if state.m != 1 or len(U):
            raise ValueError("partition gain needs redundancy 1 and no uncertain matches")
        sizes = np.bincount(state.block, minlength=state.nblocks)
        cnt = np.bincount(state.block[P], minlength=state.nblocks)
        return int((cnt * (sizes - cnt)).sum())
    W = state.open_pairs()
    M = np.ones(state.n, dtype=bool)
    M[P] = False
    M[U] = False
    return int(np.rint(W[np.ix_(P, np.flatnonzero(M))].sum()))


def apply_edit_filter(chosen: str, pool: CandidatePool, state: SelectionState, d: int, texts=None) -> int:
    """Remove live candidates closer than ``d`` edits to ``chosen``; returns how many."""
    if d < 1:
        return 0
    from rapidfuzz.distance import Levenshtein
    from rapidfuzz.process import cdist

    live = np.flatnonzero(~state.removed & (state.delta_old > 0))
    if len(live) == 0:
        return 0
    # a length gap of d or more already forces distance >= d
    live = live[np.abs(pool.lengths[live].astype(np.int64) - len(chosen)) < d]
    if len(live) == 0:
        return 0
    choices = [texts[i] for i in live] if texts is not None else pool.texts(live)
    dist = cdist([chosen], choices, scorer=Levenshtein.distance, score_cutoff=d - 1, dtype=np.int32)[0]
    hit = live[dist < d]
    state.removed[hit] = True
    state.delta_old[hit] = 0
    return len(hit)


@dataclass
class UncoveredPair:
    i: int
    j: int
    count: int
    impossible: bool


@dataclass
class Solution:
    instance: InstanceSet
    distinguishers: list[Candidate]
    barcodes: list[str]
    uncovered: list[UncoveredPair]
    redundancy: int = 1
    iterations: int = 0
    gain_evaluations: int = 0
    selection_time: float = 0.0
    method: str = ""
    pruned: int = 0

    @property
    def size(self) -> int:
        return len(self.distinguishers)

    @property
    def texts(self) -> list[str]:
        return [c.text for c in self.distinguishers]

    @property
    def feasible(self) -> bool:
        return not self.uncovered


def barcode_rows(distinguishers: list[Candidate], n: int) -> list[str]:
    rows = [[] for _ in range(n)]
    for c in distinguishers:
        for i in range(n):
            rows[i].append("1" if i in c.perfect else "?" if i in c.uncertain else "0")
    return ["".join(r) for r in rows]


def _pick_method(pool: CandidatePool, cfg: SelectionConfig) -> str:
    eligible = cfg.redundancy == 1 and not pool.has_uncertain
    if cfg.gain == "partition" and not eligible:
        raise ValueError("partition gains need redundancy 1 and a pool without uncertain matches")
    if cfg.gain == "auto":
        return "partition" if eligible else "matrix"
    return cfg.gain


def select_greedy(pool: CandidatePool, config: SelectionConfig | None = None) -> Solution:
    """Greedy selection until no candidate adds coverage.

    Each round scans candidates in cand_id order and skips any whose cached
    gain cannot beat the best gain seen so far in the round; the others get
    their gain recomputed and cached. The winner is the maximum gain, lowest
    cand_id on ties.
    """
    cfg = config or SelectionConfig()
    t0 = time.perf_counter()
    n, N = pool.n, len(pool)
    method = _pick_method(pool, cfg)
    state = SelectionState(n, N, cfg.redundancy, partition=(method == "partition"))
    texts = pool.texts() if cfg.min_edit_distance > 0 else None
    executor = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    evaluations = iterations = pruned = 0

    def gains(ids: np.ndarray) -> np.ndarray:
        W = None if method == "partition" else state.open_pairs()

        def run(sub):
            if method == "partition":
                return _partition_gains(pool, state, sub)
            return _matrix_gains(pool, state, sub, W)

        if executor is None or len(ids) < 2 * cfg.threads:
            return run(ids)
        parts = np.array_split(ids, cfg.threads)
        return np.concatenate(list(executor.map(run, parts)))

    try:
        while True:
            iterations += 1
            best, best_id = 0, -1
            if cfg.lazy and method == "partition":
                sizes = np.bincount(state.block, minlength=state.nblocks)
                cnt = np.zeros(state.nblocks, dtype=np.int64)
                best, best_id, ev = _partition_lazy_scan(
                    pool.p_indptr, pool.p_indices, state.delta_old, state.block, sizes, cnt
                )
                evaluations += ev
            elif cfg.lazy:
                # the matrix path evaluates in chunks but reproduces the one-by-one scan
                for lo in range(0, N, _CHUNK):
                    ids = np.arange(lo, min(lo + _CHUNK, N))
                    ids = ids[state.delta_old[ids] > best]
                    if len(ids) == 0:
                        continue
                    g = gains(ids)
                    evaluations += len(ids)
                    # the threshold each candidate would face in a one-by-one scan
                    before = np.maximum.accumulate(np.concatenate([[best], g[:-1]]))
                    refreshed = state.delta_old[ids] > before
                    state.delta_old[ids[refreshed]] = g[refreshed]
                    top = int(g.max())
                    if top > best:
                        best, best_id = top, int(ids[int(np.argmax(g))])
            else:
                ids = np.flatnonzero(~state.removed)
                if len(ids):
                    g = gains(ids)
                    evaluations += len(ids)
                    state.delta_old[ids] = g
                    top = int(g.max())
                    if top > 0:
                        best, best_id = top, int(ids[int(np.argmax(g))])
            if best <= 0:
                break
            state.add(pool.perfect_ids(best_id).astype(np.int64), pool.uncertain_ids(best_id).astype(np.int64), best_id)
            state.delta_old[best_id] = 0
            if cfg.min_edit_distance > 0:
                pruned += apply_edit_filter(texts[best_id], pool, state, cfg.min_edit_distance, texts)
    finally:
        if executor is not None:
            executor.shutdown()

    distinguishers = [pool[i] for i in state.selected]
    uncovered = _uncovered_pairs(pool, state)
    return Solution(
        instance=pool.instance,
        distinguishers=distinguishers,
        barcodes=barcode_rows(distinguishers, n),
        uncovered=uncovered,
        redundancy=cfg.redundancy,
        iterations=iterations,
        gain_evaluations=evaluations,
        selection_time=time.perf_counter() - t0,
        method=method + ("+lazy" if cfg.lazy else ""),
        pruned=pruned,
    )


def _uncovered_pairs(pool: CandidatePool, state: SelectionState) -> list[UncoveredPair]:
    """Pairs left below the redundancy target.

    At termination no live candidate separates an uncovered pair, so the
    only pool candidates that could are the selected ones (already counted)
    and the ones removed by the edit-distance filter.
    """
    n, m = state.n, state.m
    iu, ju = np.triu_indices(n, k=1)
    low = state.cover[iu, ju] < m
    iu, ju = iu[low], ju[low]
    if len(iu) == 0:
        return []
    extra = np.zeros((n, n), dtype=np.int64)
    pruned = np.flatnonzero(state.removed)
    pruned = pruned[~np.isin(pruned, state.selected)]
    step = max(1, _CELLS // max(n, 1))
    for lo in range(0, len(pruned), step):
        P, U = pool.membership(pruned[lo:lo + step])
        M = ~(P | U)
        sep = P.astype(np.int64).T @ M.astype(np.int64)
        extra += sep + sep.T
    return [
        UncoveredPair(int(i), int(j), int(state.cover[i, j]), bool(state.cover[i, j] == 0 and extra[i, j] == 0))
        for i, j in zip(iu, ju)
    ]


@dataclass
class VerificationReport:
    ok: bool
    problems: list[str] = field(default_factory=list)
    pair_counts: np.ndarray | None = None
    uncovered: list[tuple[int, int, int]] = field(default_factory=list)


def verify_solution(solution: Solution, instance: InstanceSet | None = None, m: int | None = None) -> VerificationReport:
    """Recompute barcodes and per-pair counts from the raw sequences.

    Checks that the recorded barcodes match, that the recorded uncovered
    pairs are exactly the pairs below ``m``, and that barcodes are pairwise
    distinct when every pair is covered.
    """
    instance = instance or solution.instance
    m = solution.redundancy if m is None else m
    n = instance.n
    problems = []
    cols = []
    for c in solution.distinguishers:
        col = []
        for seq in instance:
            cls = occurrence_class(c.text, seq)
            col.append("1" if cls is OccurrenceClass.HAS_PERFECT else "?" if cls is OccurrenceClass.UNCERTAIN_ONLY else "0")
        cols.append(col)
    barcodes = ["".join(col[i] for col in cols) for i in range(n)]
    if len(solution.barcodes) != n:
        problems.append(f"{len(solution.barcodes)} barcodes recorded for {n} sequences")
    else:
        for i, (got, want) in enumerate(zip(solution.barcodes, barcodes)):
            if got != want:
                problems.append(f"barcode of {instance[i].name} is {got!r}, recomputed {want!r}")
    counts = np.zeros((n, n), dtype=np.int64)
    for col in cols:
        one = np.array([ch == "1" for ch in col])
        zero = np.array([ch == "0" for ch in col])
        sep = np.outer(one, zero)
        counts += sep | sep.T
    below = [(i, j, int(counts[i, j])) for i in range(n) for j in range(i + 1, n) if counts[i, j] < m]
    recorded = sorted((p.i, p.j, p.count) for p in solution.uncovered)
    if recorded != below:
        problems.append(f"uncovered pairs recorded {recorded[:5]}..., recomputed {below[:5]}...")
    if not below and len(set(barcodes)) != n:
        problems.append("every pair is covered but barcodes are not pairwise distinct")
    return VerificationReport(not problems, problems, counts, below)
