"""Candidate distinguisher generation.

Candidates are generated in increasing order of length. Conceptually every
position of a source sequence carries a flag:

* TRUE  -- the substring of the current length starting here is still to be
  evaluated;
* FALSE -- an earlier position already evaluated the same substring at this
  length (reset to TRUE when the length grows);
* DONE  -- no longer substring starting here can be useful (it runs past a
  degenerate base, or it is confined to its own sequence).

The sweep below processes one *occurrence group* at a time instead of one
position at a time. A group is the set of all positions, in every sequence,
where a given substring occurs at the current length; evaluating the first
TRUE position of a group and marking the rest FALSE is exactly what the
position-wise scan does, so the outcome is the same. Groups of length ``l+1``
are obtained by splitting the groups of length ``l`` on the next base, which
is the "extend the occurrence list of the shorter substring" step.

Uncertain occurrences (windows containing a degenerate base compatible with
the substring) are tracked as a separate relation, since one window can be
compatible with several substrings.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .sequence_model import BIT, InstanceSet, _MASK_TABLE

__all__ = [
    "Candidate",
    "CandidatePool",
    "GenerationConfig",
    "generate_candidates",
    "passes_filters",
    "gc_content",
    "melting_temperature",
]

# mask -> code: plain bases 0..3, degenerate 4, sequence separator 5
_CODE = np.full(16, 4, dtype=np.int8)
_CODE[0] = 5
for _i, _b in enumerate("acgt"):
    _CODE[BIT[_b]] = _i
_GC_MASK = np.zeros(16, dtype=np.int8)
_GC_MASK[BIT["c"]] = _GC_MASK[BIT["g"]] = 1


def gc_content(text: str) -> float:
    if not text:
        raise ValueError("gc_content of an empty string")
    text = text.lower()
    return (text.count("g") + text.count("c")) / len(text)


def melting_temperature(text: str) -> float:
    """Wallace rule: 2 C per A/T plus 4 C per G/C."""
    if not text:
        raise ValueError("melting_temperature of an empty string")
    text = text.lower()
    gc = text.count("g") + text.count("c")
    return float(2 * (len(text) - gc) + 4 * gc)


@dataclass(frozen=True)
class GenerationConfig:
    """Length bounds, source restriction and per-candidate filters.

    ``source_ids=None`` means every sequence is a source. ``forbidden`` holds
    contaminant sequences; a candidate occurring in any of them verbatim is
    rejected. With ``uncertain_occurrences=True`` uncertain matches count as
    occurrences for the "appears in every sequence" and "confined to its
    source" suppression tests.
    """

    l_min: int = 1
    l_max: int | None = None
    source_ids: tuple[int, ...] | None = None
    gc_min: float = 0.0
    gc_max: float = 1.0
    tm_min: float | None = None
    tm_max: float | None = None
    forbidden: tuple[str, ...] = ()
    uncertain_occurrences: bool = True

    def __post_init__(self):
        if self.l_min < 1:
            raise ValueError("l_min must be >= 1")
        if self.l_max is not None and self.l_max < self.l_min:
            raise ValueError("l_max must be >= l_min")
        if not 0.0 <= self.gc_min <= self.gc_max <= 1.0:
            raise ValueError("need 0 <= gc_min <= gc_max <= 1")
        if self.tm_min is not None and self.tm_max is not None and self.tm_min > self.tm_max:
            raise ValueError("tm_min must be <= tm_max")
        if self.source_ids is not None:
            object.__setattr__(self, "source_ids", tuple(sorted(set(self.source_ids))))
            if not self.source_ids:
                raise ValueError("source_ids must be non-empty")
        object.__setattr__(self, "forbidden", tuple(f.lower() for f in self.forbidden))

    @property
    def has_content_filters(self) -> bool:
        return (
            self.gc_min > 0.0
            or self.gc_max < 1.0
            or self.tm_min is not None
            or self.tm_max is not None
            or bool(self.forbidden)
        )

    def sources_for(self, n: int) -> tuple[int, ...]:
        if self.source_ids is None:
            return tuple(range(n))
        bad = [i for i in self.source_ids if not 0 <= i < n]
        if bad:
            raise ValueError(f"source ids out of range: {bad}")
        return self.source_ids


def passes_filters(text: str, config: GenerationConfig) -> bool:
    text = text.lower()
    if len(text) < config.l_min or (config.l_max is not None and len(text) > config.l_max):
        return False
    if not config.gc_min <= gc_content(text) <= config.gc_max:
        return False
    if config.tm_min is not None or config.tm_max is not None:
        tm = melting_temperature(text)
        if config.tm_min is not None and tm < config.tm_min:
            return False
        if config.tm_max is not None and tm > config.tm_max:
            return False
    return not any(text in f for f in config.forbidden)


@dataclass(frozen=True)
class Candidate:
    """A saved candidate. ``source`` is (sequence id, 1-based start)."""

    cand_id: int
    text: str
    source: tuple[int, int]
    perfect: frozenset[int]
    uncertain: frozenset[int]
    n: int

    @property
    def mismatch(self) -> frozenset[int]:
        return frozenset(range(self.n)) - self.perfect - self.uncertain

    def __len__(self) -> int:
        return len(self.text)


@dataclass
class PoolStats:
    candidates: int = 0
    matches: int = 0
    generation_time: float = 0.0
    max_length: int = 0


@dataclass
class CandidatePool:
    """Candidates in cand_id order, stored column-wise.

    Perfect/uncertain sequence sets are CSR arrays (``*_indptr``,
    ``*_indices``) with sorted sequence ids per candidate.
    """

    instance: InstanceSet
    lengths: np.ndarray
    src_seq: np.ndarray
    src_start: np.ndarray  # 0-based
    p_indptr: np.ndarray
    p_indices: np.ndarray
    u_indptr: np.ndarray
    u_indices: np.ndarray
    stats: PoolStats = field(default_factory=PoolStats)

    def __len__(self) -> int:
        return len(self.lengths)

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def has_uncertain(self) -> bool:
        return len(self.u_indices) > 0

    @property
    def perfect_sizes(self) -> np.ndarray:
        return np.diff(self.p_indptr)

    @property
    def uncertain_sizes(self) -> np.ndarray:
        return np.diff(self.u_indptr)

    def text(self, i: int) -> str:
        s, start = int(self.src_seq[i]), int(self.src_start[i])
        return self.instance[s].text[start:start + int(self.lengths[i])]

    def texts(self, ids: Iterable[int] | None = None) -> list[str]:
        ids = range(len(self)) if ids is None else ids
        return [self.text(int(i)) for i in ids]

    def perfect_ids(self, i: int) -> np.ndarray:
        return self.p_indices[self.p_indptr[i]:self.p_indptr[i + 1]]

    def uncertain_ids(self, i: int) -> np.ndarray:
        return self.u_indices[self.u_indptr[i]:self.u_indptr[i + 1]]

    def __getitem__(self, i: int) -> Candidate:
        if not -len(self) <= i < len(self):
            raise IndexError(i)
        i = i % len(self)
        return Candidate(
            cand_id=i,
            text=self.text(i),
            source=(int(self.src_seq[i]), int(self.src_start[i]) + 1),
            perfect=frozenset(self.perfect_ids(i).tolist()),
            uncertain=frozenset(self.uncertain_ids(i).tolist()),
            n=self.n,
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def candidates(self) -> list[Candidate]:
        return list(self)

    def membership(self, ids: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Dense boolean (P, U) indicator matrices for the given candidates."""
        ids = np.arange(len(self)) if ids is None else np.asarray(ids)
        P = np.zeros((len(ids), self.n), dtype=bool)
        U = np.zeros((len(ids), self.n), dtype=bool)
        rows, cols = _gather_csr(self.p_indptr, self.p_indices, ids)
        P[rows, cols] = True
        rows, cols = _gather_csr(self.u_indptr, self.u_indices, ids)
        U[rows, cols] = True
        return P, U

    def to_tsv(self) -> str:
        names = self.instance.names
        lines = ["cand_id\ttext\tsource_seq\tsource_pos\tperfect_ids\tuncertain_ids"]
        for i in range(len(self)):
            lines.append(
                "\t".join([
                    str(i),
                    self.text(i),
                    names[int(self.src_seq[i])],
                    str(int(self.src_start[i]) + 1),
                    ",".join(map(str, self.perfect_ids(i).tolist())),
                    ",".join(map(str, self.uncertain_ids(i).tolist())),
                ])
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def empty(cls, instance: InstanceSet) -> CandidatePool:
        z = np.zeros(0, dtype=np.int64)
        return cls(instance, z.astype(np.int32), z.astype(np.int32), z, np.zeros(1, np.int64),
                   z.astype(np.int32), np.zeros(1, np.int64), z.astype(np.int32))

    @classmethod
    def from_texts(cls, instance: InstanceSet, texts: Sequence[str]) -> CandidatePool:
        """Build a pool from explicit texts by locating each one in the instance.

        Texts that do not occur perfectly in any sequence are rejected. Used
        by tests and by report verification; no suppression is applied.
        """
        from .sequence_model import OccurrenceClass, occurrence_class

        lengths, seqs, starts, pi, ui = [], [], [], [0], [0]
        p_ind, u_ind = [], []
        for text in texts:
            text = text.lower()
            where = next(((s.id, s.text.find(text)) for s in instance if text in s.text), None)
            if where is None:
                raise ValueError(f"{text!r} has no perfect occurrence in the instance")
            lengths.append(len(text))
            seqs.append(where[0])
            starts.append(where[1])
            for seq in instance:
                cls_ = occurrence_class(text, seq)
                if cls_ is OccurrenceClass.HAS_PERFECT:
                    p_ind.append(seq.id)
                elif cls_ is OccurrenceClass.UNCERTAIN_ONLY:
                    u_ind.append(seq.id)
            pi.append(len(p_ind))
            ui.append(len(u_ind))
        return cls(
            instance,
            np.array(lengths, dtype=np.int32),
            np.array(seqs, dtype=np.int32),
            np.array(starts, dtype=np.int64),
            np.array(pi, dtype=np.int64),
            np.array(p_ind, dtype=np.int32),
            np.array(ui, dtype=np.int64),
            np.array(u_ind, dtype=np.int32),
            PoolStats(candidates=len(texts), matches=len(p_ind) + len(u_ind)),
        )


def _gather_csr(indptr: np.ndarray, indices: np.ndarray, rows: np.ndarray):
    """(local row, column) pairs for the selected CSR rows."""
    rows = np.asarray(rows, dtype=np.int64)
    lo = indptr[rows]
    sizes = indptr[rows + 1] - lo
    total = int(sizes.sum())
    if total == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    local = np.repeat(np.arange(len(rows)), sizes)
    offs = np.arange(total) - np.repeat(np.cumsum(sizes) - sizes, sizes)
    return local, indices[np.repeat(lo, sizes) + offs].astype(np.int64)


# ---------------------------------------------------------------------------
# the sweep


class _Layout:
    """All sequences (then contaminants) concatenated with 0-mask separators."""

    def __init__(self, instance: InstanceSet, forbidden: Sequence[str], sources: Sequence[int]):
        texts = [s.text for s in instance] + list(forbidden)
        self.n = instance.n
        lens = np.array([len(t) for t in texts], dtype=np.int64)
        self.starts = np.concatenate([[0], np.cumsum(lens + 1)[:-1]])
        raw = ("\0".join(texts) + "\0").encode("ascii")
        self.masks = _MASK_TABLE[np.frombuffer(raw, dtype=np.uint8)]
        self.code = _CODE[self.masks]
        self.seq_of = np.repeat(np.arange(len(texts), dtype=np.int64), lens + 1)
        src = np.zeros(len(texts), dtype=bool)
        src[list(sources)] = True
        self.is_source = src[self.seq_of]
        self.is_source[self.masks == 0] = False
        self.gc_prefix = np.concatenate([[0], np.cumsum(_GC_MASK[self.masks], dtype=np.int64)])


def _expand_uncertain(gid: np.ndarray, pos: np.ndarray, masks: np.ndarray):
    """Children keys ``gid*4 + b`` for every base b allowed by ``masks``."""
    keys, out_pos = [], []
    for b, bit in enumerate((1, 2, 4, 8)):
        sel = (masks & bit) != 0
        keys.append(gid[sel] * 4 + b)
        out_pos.append(pos[sel])
    return np.concatenate(keys), np.concatenate(out_pos)


class _Sweep:
    def __init__(self, instance: InstanceSet, config: GenerationConfig, sources: Sequence[int]):
        self.instance = instance
        self.config = config
        self.lay = _Layout(instance, config.forbidden, sources)
        self.n = instance.n
        self.unique_saved = np.zeros(self.n, dtype=bool)
        self.saved: list[tuple] = []

    def run(self) -> None:
        lay, cfg = self.lay, self.config
        l_max = cfg.l_max
        # length 1: every plain base is an exact member of the group of its code
        plain = np.flatnonzero(lay.code < 4)
        keys = lay.code[plain].astype(np.int64)
        deg = np.flatnonzero(lay.code == 4)
        u_keys, u_pos = _expand_uncertain(np.zeros(len(deg), np.int64), deg, lay.masks[deg])
        length = 1
        state = self._regroup(keys, plain, u_keys, u_pos)
        while state is not None:
            if length >= cfg.l_min:
                state = self._evaluate(length, *state)
                if state is None:
                    break
            if l_max is not None and length >= l_max:
                break
            state = self._extend(length, *state)
            length += 1

    def _regroup(self, keys, pos, u_keys, u_pos):
        """Group exact members by key, drop groups with no source member."""
        lay = self.lay
        if len(keys) == 0:
            return None
        order = np.argsort(keys, kind="stable")
        keys, pos = keys[order], pos[order]
        new = np.empty(len(keys), dtype=bool)
        new[0] = True
        np.not_equal(keys[1:], keys[:-1], out=new[1:])
        gid = np.cumsum(new) - 1
        heads = np.flatnonzero(new)
        live = np.add.reduceat(lay.is_source[pos].astype(np.int64), heads) > 0
        if not live.any():
            return None
        keep = live[gid]
        pos, gid, live_keys = pos[keep], gid[keep], keys[heads][live]
        gid = (np.cumsum(live) - 1)[gid]
        if len(u_keys):
            idx = np.searchsorted(live_keys, u_keys)
            idx[idx == len(live_keys)] = 0
            ok = live_keys[idx] == u_keys
            u_gid, u_pos = idx[ok], u_pos[ok]
        else:
            u_gid = np.zeros(0, np.int64)
        return pos, gid, int(live.sum()), u_pos, u_gid

    def _extend(self, length, pos, gid, ngroups, u_pos, u_gid):
        lay = self.lay
        nxt = lay.code[pos + length]
        plain = nxt < 4
        keys = gid[plain] * 4 + nxt[plain]
        exact_pos = pos[plain]
        deg = nxt == 4
        k1, p1 = _expand_uncertain(gid[deg], pos[deg], lay.masks[pos[deg] + length])
        k2, p2 = _expand_uncertain(u_gid, u_pos, lay.masks[u_pos + length])
        return self._regroup(keys, exact_pos, np.concatenate([k1, k2]), np.concatenate([p1, p2]))

    def _evaluate(self, length, pos, gid, G, u_pos, u_gid):
        """Classify every live group at this length; save and prune."""
        lay, cfg, n = self.lay, self.config, self.n
        seq = lay.seq_of[pos]
        in_inst = seq < n
        # perfect sets: members are sorted by (gid, pos), so seq is sorted per group
        pk = gid[in_inst] * n + seq[in_inst]
        pk = pk[np.concatenate([[True], pk[1:] != pk[:-1]])] if len(pk) else pk
        p_gid, p_seq = pk // n, pk % n
        p_count = np.bincount(p_gid, minlength=G)
        if len(u_gid):
            useq = lay.seq_of[u_pos]
            uk = np.unique(u_gid[useq < n] * n + useq[useq < n])
            uk = uk[~np.isin(uk, pk, assume_unique=True)]
        else:
            uk = np.zeros(0, np.int64)
        u_gid_, u_seq = uk // n, uk % n
        u_count = np.bincount(u_gid_, minlength=G)

        heads = np.flatnonzero(np.concatenate([[True], gid[1:] != gid[:-1]]))
        big = np.iinfo(np.int64).max
        rep = np.minimum.reduceat(np.where(lay.is_source[pos], pos, big), heads)
        src = lay.seq_of[rep]
        occ = p_count + u_count if cfg.uncertain_occurrences else p_count
        in_all = occ == n
        confined = occ == 1
        # groups with no separating power: M empty or P empty
        useless = (p_count + u_count == n) | (p_count == 0)
        ok = self._filters(length, rep, heads, gid, seq, G)

        general = ~in_all & ~confined & ~useless
        save = general & ok
        drop = np.zeros(G, dtype=bool)

        cg = np.flatnonzero(confined)
        if len(cg):
            sseq = src[cg]
            already = self.unique_saved[sseq]
            passing = ok[cg] & ~useless[cg] & ~already
            first = np.full(n, big, dtype=np.int64)
            np.minimum.at(first, sseq[passing], rep[cg][passing])
            chosen = passing & (rep[cg] == first[sseq])
            save[cg[chosen]] = True
            drop[cg[already | (rep[cg] >= first[sseq])]] = True
            self.unique_saved[sseq[chosen]] = True

        saved = np.flatnonzero(save)
        if len(saved):
            self._record(length, saved, rep, src, p_gid, p_seq, u_gid_, u_seq)

        if not drop.any():
            return pos, gid, G, u_pos, u_gid
        keepg = ~drop
        remap = np.cumsum(keepg) - 1
        k = keepg[gid]
        ku = keepg[u_gid]
        if not k.any():
            return None
        return pos[k], remap[gid[k]], int(keepg.sum()), u_pos[ku], remap[u_gid[ku]]

    def _filters(self, length, rep, heads, gid, seq, G):
        lay, cfg = self.lay, self.config
        ok = np.ones(G, dtype=bool)
        if cfg.gc_min > 0.0 or cfg.gc_max < 1.0 or cfg.tm_min is not None or cfg.tm_max is not None:
            gc = lay.gc_prefix[rep + length] - lay.gc_prefix[rep]
            frac = gc / length
            ok &= (frac >= cfg.gc_min - 1e-12) & (frac <= cfg.gc_max + 1e-12)
            tm = 2 * (length - gc) + 4 * gc
            if cfg.tm_min is not None:
                ok &= tm >= cfg.tm_min
            if cfg.tm_max is not None:
                ok &= tm <= cfg.tm_max
        if cfg.forbidden:
            contam = np.zeros(G, dtype=bool)
            contam[gid[seq >= self.n]] = True
            ok &= ~contam
        return ok

    def _record(self, length, saved, rep, src, p_gid, p_seq, u_gid, u_seq):
        lay = self.lay
        order = saved[np.argsort(rep[saved], kind="stable")]
        rank = np.full(len(rep), -1, dtype=np.int64)
        rank[order] = np.arange(len(order))
        pr = rank[p_gid]
        psel = pr >= 0
        po = np.lexsort((p_seq[psel], pr[psel]))
        ur = rank[u_gid]
        usel = ur >= 0
        uo = np.lexsort((u_seq[usel], ur[usel]))
        self.saved.append((
            length,
            rep[order],
            lay.seq_of[rep[order]],
            rep[order] - lay.starts[src[order]],
            np.bincount(pr[psel], minlength=len(order)),
            p_seq[psel][po],
            np.bincount(ur[usel], minlength=len(order)),
            u_seq[usel][uo],
        ))


def _assemble(instance: InstanceSet, parts: list[tuple]) -> CandidatePool:
    if not parts:
        return CandidatePool.empty(instance)
    lengths = np.concatenate([np.full(len(p[1]), p[0], dtype=np.int32) for p in parts])
    seqs = np.concatenate([p[2] for p in parts]).astype(np.int32)
    starts = np.concatenate([p[3] for p in parts]).astype(np.int64)
    p_sizes = np.concatenate([p[4] for p in parts])
    u_sizes = np.concatenate([p[6] for p in parts])
    return CandidatePool(
        instance,
        lengths,
        seqs,
        starts,
        np.concatenate([[0], np.cumsum(p_sizes)]).astype(np.int64),
        np.concatenate([p[5] for p in parts]).astype(np.int32),
        np.concatenate([[0], np.cumsum(u_sizes)]).astype(np.int64),
        np.concatenate([p[7] for p in parts]).astype(np.int32),
        PoolStats(
            candidates=len(lengths),
            matches=int(p_sizes.sum() + u_sizes.sum()),
            max_length=int(lengths.max()) if len(lengths) else 0,
        ),
    )


def _merge(instance: InstanceSet, sweeps: list[_Sweep]) -> list[tuple]:
    """Merge per-source-chunk results into the sequential cand_id order.

    The same (length, text) can be saved by several chunks with different
    representatives; the smallest global scan position wins, as it would in
    a single sweep.
    """
    code = sweeps[0].lay.code
    by_len: dict[int, list] = {}
    for sw in sweeps:
        for part in sw.saved:
            by_len.setdefault(part[0], []).append(part)
    merged = []
    for length in sorted(by_len):
        cols = [np.concatenate([p[k] for p in by_len[length]]) for k in range(1, 8)]
        rep, seqs, starts, psz, pind, usz, uind = cols
        order = np.argsort(rep, kind="stable")
        text = np.ascontiguousarray(code[rep[order, None] + np.arange(length)])
        _, first = np.unique(text.view(np.dtype((np.void, length)))[:, 0], return_index=True)
        keep = order[np.sort(first)]
        _, p_cols = _gather_csr(np.concatenate([[0], np.cumsum(psz)]), pind, keep)
        _, u_cols = _gather_csr(np.concatenate([[0], np.cumsum(usz)]), uind, keep)
        merged.append((length, rep[keep], seqs[keep], starts[keep], psz[keep], p_cols, usz[keep], u_cols))
    return merged


def generate_candidates(
    instance: InstanceSet, config: GenerationConfig | None = None, threads: int = 1
) -> CandidatePool:
    """Run the length-increasing candidate sweep.

    With ``threads > 1`` the source sequences are split into contiguous
    chunks swept independently and merged; the resulting pool is identical
    to the single-threaded one.
    """
    config = config or GenerationConfig()
    t0 = time.perf_counter()
    sources = config.sources_for(instance.n)
    if instance.n < 2:
        pool = CandidatePool.empty(instance)
    elif threads <= 1 or len(sources) < 2:
        sweep = _Sweep(instance, config, sources)
        sweep.run()
        pool = _assemble(instance, sweep.saved)
    else:
        chunks = [list(c) for c in np.array_split(np.array(sources), min(threads, len(sources))) if len(c)]
        sweeps = [_Sweep(instance, config, c) for c in chunks]
        with ThreadPoolExecutor(max_workers=len(sweeps)) as ex:
            list(ex.map(lambda s: s.run(), sweeps))
        pool = _assemble(instance, _merge(instance, sweeps))
    pool.stats.generation_time = time.perf_counter() - t0
    return pool
