import math
import random

import numpy as np
import pytest

from helpers import small_instance
from strbarcode.candidates import generate_candidates
from strbarcode.greedy import select_greedy
from strbarcode.oracle import (
    OracleGuardError,
    brute_delta,
    brute_occurrence_class,
    containment_reference,
    enumerate_signatures,
    exact_minimum,
    log2_lower_bound,
)
from strbarcode.sequence_model import InstanceSet, OccurrenceClass, occurrence_class


def test_signatures_small_example():
    inst = InstanceSet.from_texts(["acgt", "ttgt"])
    classes = enumerate_signatures(inst, l_max=4)
    sigs = {(c.perfect, c.uncertain) for c in classes}
    assert (frozenset({0}), frozenset()) in sigs
    assert (frozenset({1}), frozenset()) in sigs
    assert len(classes) == 2
    # "tt" lies in the class of s2 and "gt" occurs in both, so it is in none
    s2 = next(c for c in classes if c.perfect == {1})
    assert occurrence_class("tt", inst[1]) is OccurrenceClass.HAS_PERFECT
    assert s2.representative == "tg"


def test_representatives_realize_signature():
    rng = random.Random(1)
    for _ in range(10):
        inst = small_instance(rng, n_max=5, hi=15, degenerate=0.1)
        for c in enumerate_signatures(inst, l_max=8):
            for s in inst:
                cls = brute_occurrence_class(c.representative, s)
                assert (s.id in c.perfect) == (cls is OccurrenceClass.HAS_PERFECT)
                assert (s.id in c.uncertain) == (cls is OccurrenceClass.UNCERTAIN_ONLY)


def test_signatures_trivial_instances():
    assert enumerate_signatures(InstanceSet.from_texts(["acgt"])) == []
    assert enumerate_signatures(InstanceSet.from_texts(["acgt", "acgt"])) == []


def test_guard():
    with pytest.raises(OracleGuardError):
        enumerate_signatures(InstanceSet.from_texts(["a" * 150, "c" * 150]))
    with pytest.raises(OracleGuardError):
        enumerate_signatures(InstanceSet.from_texts(["acgt", "ttgt"]), l_max=17)


def test_brute_delta_examples():
    zero = np.zeros((10, 10), dtype=int)
    assert brute_delta({0, 1, 2, 3}, set(), zero, 1) == 24
    cover = np.zeros((5, 5), dtype=int)
    cover[:3, 3:] = cover[3:, :3] = 1
    assert brute_delta({0, 3}, set(), cover, 1) == 3
    assert brute_delta({0}, {1}, np.zeros((3, 3), dtype=int), 1) == 1


def test_exact_minimum_examples():
    assert exact_minimum(InstanceSet.from_texts(["acgt", "ttgt"])) == 1
    four = InstanceSet.from_texts(["aacc", "aagg", "ttcc", "ttgg"])
    assert exact_minimum(four) == 2
    assert exact_minimum(InstanceSet.from_texts(["acgt", "acgt"])) == 0


def test_exact_minimum_redundancy_not_below_m1():
    rng = random.Random(6)
    for _ in range(10):
        inst = small_instance(rng, n_max=4, lo=4, hi=10)
        assert exact_minimum(inst, m=2) >= exact_minimum(inst, m=1)


def test_exact_never_beats_greedy_the_wrong_way():
    rng = random.Random(3)
    for _ in range(25):
        inst = small_instance(rng, n_max=5, lo=5, hi=12)
        opt = exact_minimum(inst)
        sol = select_greedy(generate_candidates(inst))
        assert opt <= sol.size <= (1 + 2 * math.log(inst.n)) * opt
        if sol.feasible and opt:
            assert opt >= log2_lower_bound(inst.n - sum(len(g) - 1 for g in inst.duplicate_groups()))


def test_containment_reference_matches_poisson():
    assert abs(containment_reference(10_000, 8, sequences=50) - (1 - math.exp(-9993 / 4**8))) < 0.005
