"""Reproducible random instances.

Random bases come from Philox4x64-10 (numpy's ``Philox`` bit generator),
keyed by ``(seed, stream)`` with the counter starting at zero. Sequence ``i``
of an instance uses stream ``i``. Each raw 64-bit output supplies 32 bases,
two bits per base starting from the least significant bits, mapped
0,1,2,3 -> a,c,g,t. Nothing depends on numpy's distribution code, so the
bases are stable across numpy versions and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sequence_model import GenomicSequence, InstanceSet

__all__ = [
    "RandomSpec",
    "random_bases",
    "random_instance",
    "containment_probability",
    "synthetic_genomes",
]

_LETTERS = np.frombuffer(b"acgt", dtype=np.uint8)
_SHIFTS = np.arange(0, 64, 2, dtype=np.uint64)


@dataclass(frozen=True)
class RandomSpec:
    n: int
    length: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.length < 1:
            raise ValueError("n and length must be >= 1")


def _bitgen(seed: int, stream: int) -> np.random.Philox:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stream & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Philox(key=key)


def _codes(bitgen: np.random.Philox, count: int) -> np.ndarray:
    words = np.asarray(bitgen.random_raw(-(-count // 32)), dtype=np.uint64)
    return ((words[:, None] >> _SHIFTS) & np.uint64(3)).astype(np.uint8).ravel()[:count]


def random_bases(seed: int, stream: int, length: int) -> str:
    return _LETTERS[_codes(_bitgen(seed, stream), length)].tobytes().decode("ascii")


def random_instance(spec: RandomSpec) -> InstanceSet:
    """``spec.n`` i.i.d. uniform sequences of exactly ``spec.length`` bases."""
    return InstanceSet([
        GenomicSequence(i, f"r{i + 1}", random_bases(spec.seed, i, spec.length))
        for i in range(spec.n)
    ])


def containment_probability(length: int, k: int, trials: int, seed: int = 0) -> float:
    """Monte-Carlo estimate of P(random k-mer occurs in a random length-``length`` sequence).

    Trial ``t`` draws its sequence from stream ``2t`` and its probe from
    stream ``2t + 1``.
    """
    if not 1 <= k <= length:
        raise ValueError("need 1 <= k <= length")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hits = 0
    for t in range(trials):
        seq = _LETTERS[_codes(_bitgen(seed, 2 * t), length)].tobytes()
        probe = _LETTERS[_codes(_bitgen(seed, 2 * t + 1), k)].tobytes()
        hits += probe in seq
    return hits / trials


_DEGENERATE = "rykmswbdhvn"


def synthetic_genomes(
    n: int = 12,
    min_length: int = 60_000,
    max_length: int = 180_000,
    divergence: float = 0.04,
    indel_rate: float = 0.002,
    degenerate_per_genome: int = 25,
    seed: int = 2005,
) -> InstanceSet:
    """A family of related genomes with scattered degenerate bases.

    Every genome is a mutated, truncated copy of a shared random ancestor:
    substitutions at rate ``divergence`` and single-base indels at
    ``indel_rate``. Degenerate IUPAC codes are then sprinkled at random
    positions. All randomness is drawn from the Philox streams above.
    """
    ancestor = _codes(_bitgen(seed, 0), max_length + 1000)
    out = []
    for i in range(n):
        r = np.random.Generator(_bitgen(seed, i + 1))
        length = int(r.integers(min_length, max_length + 1))
        start = int(r.integers(0, len(ancestor) - length))
        g = ancestor[start:start + length].copy()
        subs = np.flatnonzero(r.random(length) < divergence)
        g[subs] = (g[subs] + r.integers(1, 4, len(subs))) % 4
        # each indel event either drops the base or puts a random base before it
        events = np.flatnonzero(r.random(length) < indel_rate)
        insert = r.random(len(events)) < 0.5
        copies = np.ones(length, dtype=np.int64)
        copies[events[~insert]] = 0
        copies[events[insert]] = 2
        first = np.cumsum(copies) - copies
        g = np.repeat(g, copies)
        g[first[events[insert]]] = r.integers(0, 4, int(insert.sum()))
        text = bytearray(_LETTERS[g].tobytes())
        for p in r.choice(len(text), size=degenerate_per_genome, replace=False):
            text[int(p)] = ord(_DEGENERATE[int(r.integers(0, len(_DEGENERATE)))])
        out.append(GenomicSequence(i, f"genome{i + 1:02d}", text.decode("ascii")))
    return InstanceSet(out)
