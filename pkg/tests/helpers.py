import random

from strbarcode.sequence_model import InstanceSet


def random_texts(rng: random.Random, n: int, lo: int, hi: int, degenerate: float = 0.0) -> list[str]:
    out = []
    for _ in range(n):
        k = rng.randint(lo, hi)
        out.append("".join(
            rng.choice("rynwsk") if rng.random() < degenerate else rng.choice("acgt") for _ in range(k)
        ))
    return out


def small_instance(rng: random.Random, n_max: int = 8, lo: int = 3, hi: int = 25, degenerate: float = 0.0) -> InstanceSet:
    return InstanceSet.from_texts(random_texts(rng, rng.randint(2, n_max), lo, hi, degenerate))


def pool_rows(pool):
    return [(c.text, c.source, c.perfect, c.uncertain) for c in pool]
