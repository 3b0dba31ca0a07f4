import random

import numpy as np
import pytest

from helpers import pool_rows, small_instance
from strbarcode.candidates import (
    CandidatePool,
    GenerationConfig,
    gc_content,
    generate_candidates,
    melting_temperature,
    passes_filters,
)
from strbarcode.oracle import brute_occurrence_class, enumerate_signatures, literal_generate, separable_pairs
from strbarcode.sequence_model import InstanceSet, OccurrenceClass


def test_gc_content():
    assert gc_content("acgt") == 0.5
    assert gc_content("aaaa") == 0.0
    assert gc_content("gcgc") == 1.0


def test_melting_temperature():
    assert melting_temperature("acgt") == 12
    assert melting_temperature("aaaa") == 8
    assert melting_temperature("ggggg") == 20


def test_passes_filters():
    assert passes_filters("acgt", GenerationConfig())
    assert not passes_filters("gggg", GenerationConfig(gc_max=0.5))
    assert not passes_filters("acg", GenerationConfig(forbidden=("tacgt",)))
    assert not passes_filters("ac", GenerationConfig(l_min=3))
    assert not passes_filters("acgtt", GenerationConfig(l_max=4))
    assert not passes_filters("aaaa", GenerationConfig(tm_min=10))
    assert passes_filters("aaaa", GenerationConfig(tm_min=8, tm_max=8))


def test_config_validation():
    with pytest.raises(ValueError):
        GenerationConfig(l_min=0)
    with pytest.raises(ValueError):
        GenerationConfig(l_min=5, l_max=4)
    with pytest.raises(ValueError):
        GenerationConfig(gc_min=0.7, gc_max=0.6)
    with pytest.raises(ValueError):
        GenerationConfig(source_ids=())
    assert GenerationConfig(source_ids=(3, 1, 3)).source_ids == (1, 3)


def test_length_one_keeps_a_single_unique_candidate():
    # "a" and "c" are both confined to the first sequence; only the first one
    # scanned becomes that sequence's unique candidate
    inst = InstanceSet.from_texts(["acgt", "ttgt"])
    pool = generate_candidates(inst, GenerationConfig(l_max=1))
    assert pool.texts() == ["a"]
    c = pool[0]
    assert c.perfect == {0} and c.mismatch == {1}


def test_unbounded_small_example():
    inst = InstanceSet.from_texts(["acgt", "ttgt"])
    pool = generate_candidates(inst)
    assert [(c.text, set(c.perfect)) for c in pool] == [("a", {0}), ("tt", {1})]


def test_identical_sequences_give_empty_pool():
    inst = InstanceSet.from_texts(["acgtacgt", "acgtacgt"])
    assert len(generate_candidates(inst)) == 0


def test_single_sequence_gives_empty_pool():
    assert len(generate_candidates(InstanceSet.from_texts(["acgt"]))) == 0


def test_degenerate_window_not_a_candidate():
    inst = InstanceSet.from_texts(["anc", "ggg", "acc"])
    for c in generate_candidates(inst):
        assert "n" not in c.text


def test_uncertain_sets():
    inst = InstanceSet.from_texts(["aaaa", "ana", "cccc"])
    pool = generate_candidates(inst)
    c = next(c for c in pool if c.text == "aa")
    assert c.perfect == {0} and c.uncertain == {1} and c.mismatch == {2}


def test_matches_literal_sweep():
    rng = random.Random(11)
    for _ in range(60):
        inst = small_instance(rng, degenerate=rng.choice([0.0, 0.1]))
        cfg = GenerationConfig(l_min=rng.randint(1, 3), l_max=rng.choice([None, 4, 8]))
        got = pool_rows(generate_candidates(inst, cfg))
        want = [(t, src, frozenset(P), frozenset(U)) for t, src, P, U in literal_generate(inst, cfg)]
        assert got == want


def test_match_sets_equal_brute_force():
    rng = random.Random(5)
    for _ in range(30):
        inst = small_instance(rng, degenerate=0.15)
        for c in generate_candidates(inst):
            for s in inst:
                cls = brute_occurrence_class(c.text, s)
                assert (s.id in c.perfect) == (cls is OccurrenceClass.HAS_PERFECT)
                assert (s.id in c.uncertain) == (cls is OccurrenceClass.UNCERTAIN_ONLY)


def test_pool_invariants():
    rng = random.Random(8)
    for _ in range(30):
        inst = small_instance(rng, degenerate=0.1)
        pool = generate_candidates(inst)
        confined_per_source = {}
        for k, c in enumerate(pool):
            assert c.cand_id == k
            assert c.source[0] in c.perfect
            assert not c.perfect & c.uncertain
            assert c.perfect and c.mismatch
            if c.perfect | c.uncertain == {c.source[0]}:
                confined_per_source[c.source[0]] = confined_per_source.get(c.source[0], 0) + 1
        assert all(v == 1 for v in confined_per_source.values())
        assert pool.stats.candidates == len(pool)
        assert pool.stats.matches == int(pool.perfect_sizes.sum() + pool.uncertain_sizes.sum())
        order = list(zip(pool.lengths.tolist(), pool.src_seq.tolist(), pool.src_start.tolist()))
        assert order == sorted(order)


def test_no_duplicate_texts():
    rng = random.Random(2)
    for _ in range(20):
        pool = generate_candidates(small_instance(rng))
        texts = pool.texts()
        assert len(texts) == len(set(texts))


def test_signature_completeness():
    rng = random.Random(21)
    for _ in range(40):
        inst = small_instance(rng, n_max=6, hi=18)
        if inst.total_length > 200:
            continue
        classes = enumerate_signatures(inst, l_max=16)
        pool = generate_candidates(inst)
        by_pool = {
            (i, j)
            for c in pool
            for i in range(inst.n)
            for j in range(i + 1, inst.n)
            if (i in c.perfect and j in c.mismatch) or (j in c.perfect and i in c.mismatch)
        }
        assert by_pool == separable_pairs(classes, inst.n)


def test_filtered_candidate_still_extends():
    # every length-1 and length-2 string fails l_min=3 but must seed length 3
    inst = InstanceSet.from_texts(["aaacgt", "ccctga"])
    pool = generate_candidates(inst, GenerationConfig(l_min=3))
    assert len(pool) > 0
    assert all(len(c.text) >= 3 for c in pool)


def test_gc_filter_applies():
    rng = random.Random(4)
    inst = small_instance(rng, hi=40)
    cfg = GenerationConfig(gc_min=0.4, gc_max=0.6)
    for c in generate_candidates(inst, cfg):
        assert 0.4 <= gc_content(c.text) <= 0.6


def test_forbidden():
    inst = InstanceSet.from_texts(["acgtacgg", "ttttcccc", "gggaaatt"])
    pool = generate_candidates(inst, GenerationConfig(forbidden=("cgta",)))
    assert pool.texts()
    assert all(t not in "cgta" for t in pool.texts())
    assert all(passes_filters(t, GenerationConfig(forbidden=("cgta",))) for t in pool.texts())


def test_source_restriction():
    rng = random.Random(9)
    inst = small_instance(rng, n_max=8, lo=20, hi=40)
    full = generate_candidates(inst)
    one = generate_candidates(inst, GenerationConfig(source_ids=(0,)))
    assert len(one) <= len(full)
    assert one.stats.matches <= full.stats.matches
    assert set(one.src_seq.tolist()) <= {0}
    with pytest.raises(ValueError):
        generate_candidates(inst, GenerationConfig(source_ids=(inst.n,)))


def test_threads_identical():
    rng = random.Random(13)
    for _ in range(10):
        inst = small_instance(rng, n_max=9, degenerate=0.05)
        a = generate_candidates(inst)
        b = generate_candidates(inst, threads=4)
        assert pool_rows(a) == pool_rows(b)
        assert np.array_equal(a.p_indptr, b.p_indptr)


def test_from_texts_and_tsv():
    inst = InstanceSet.from_texts(["acgt", "ttgt", "anat"])
    pool = CandidatePool.from_texts(inst, ["ac", "tt"])
    assert pool[0].perfect == {0} and pool[0].uncertain == {2}
    assert pool[1].perfect == {1}
    tsv = pool.to_tsv().splitlines()
    assert tsv[0].split("\t") == ["cand_id", "text", "source_seq", "source_pos", "perfect_ids", "uncertain_ids"]
    assert tsv[1].split("\t") == ["0", "ac", "s1", "1", "0", "2"]
    with pytest.raises(ValueError):
        CandidatePool.from_texts(inst, ["ggg"])


def test_membership():
    inst = InstanceSet.from_texts(["acgt", "ttgt", "anat"])
    pool = generate_candidates(inst)
    P, U = pool.membership()
    for k, c in enumerate(pool):
        assert set(np.flatnonzero(P[k])) == c.perfect
        assert set(np.flatnonzero(U[k])) == c.uncertain
