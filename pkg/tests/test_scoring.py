import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from narrcause.counting import count_scope, smoothed_count
from narrcause.errors import ValidationError
from narrcause.events import PERSON, SOMETHING, ArgCombination, EventInstance, build_arg_profiles
from narrcause.scoring import (ScoringError, causal_potential, combine_windows, cpc, pmi,
                               read_scores, score_scope, scp, write_scores)

from oracles import oracle_cpc, oracle_scores, raw_counts

small_corpora = st.lists(st.lists(st.sampled_from("abcd"), max_size=10), min_size=1, max_size=5) \
    .filter(lambda sc: sum(len(s) for s in sc) <= 50)


def test_pmi_all_same_event_is_zero():
    [t] = count_scope([["a", "a"]], 1)
    assert pmi(t, "a", "a") == 0.0


def test_pmi_hand_enumerated():
    [t] = count_scope([["a", "b", "a", "b"]], 1)
    assert (t.unigram["a"], t.unigram["b"], t.total_events, t.total_ordered_pairs) == (2, 2, 4, 3)
    assert t.ordered_pair[("a", "b")] == 2 and t.ordered_pair[("b", "a")] == 1
    oracle = oracle_scores([["a", "b", "a", "b"]], "a", "b", 1)[0]
    assert oracle == pytest.approx(math.log(4), abs=1e-12)
    assert pmi(t, "a", "b") == pytest.approx(oracle, abs=1e-12)


def test_pmi_symmetric():
    [t] = count_scope([["a", "b", "c", "a", "c", "b", "b"]], 1)
    for x in "abc":
        for y in "abc":
            assert pmi(t, x, y) == pmi(t, y, x)


def test_unknown_lemma():
    [t] = count_scope([["a", "b"]], 1)
    with pytest.raises(KeyError):
        pmi(t, "a", "q")


def test_no_pairs_in_scope():
    [t] = count_scope([["a"], ["b"]], 1)
    with pytest.raises(ScoringError):
        causal_potential(t, "a", "b")


def test_ordering_term_push_fall():
    scenes = [["push", "fall"]] * 10 + [["walk"]]
    [t] = count_scope(scenes, 1)
    diff = causal_potential(t, "push", "fall") - causal_potential(t, "fall", "push")
    assert diff == pytest.approx(2 * math.log(10), abs=1e-12)
    o_fwd, o_bwd = oracle_scores(scenes, "push", "fall", 1)[1], oracle_scores(scenes, "fall", "push", 1)[1]
    assert diff == pytest.approx(o_fwd - o_bwd, abs=1e-12)


def test_symmetric_counts_cp_equals_pmi():
    [t] = count_scope([["a", "b"], ["b", "a"]], 1)
    assert causal_potential(t, "a", "b") == pmi(t, "a", "b")


def test_cpc_single_window_is_cp1():
    tables = count_scope([["a", "b", "c"]], 1)
    assert cpc(tables, "a", "b") == causal_potential(tables[0], "a", "b")


def test_cpc_stated_inputs():
    assert combine_windows([3.0, 2.0, 1.5]) == 4.5


def test_cpc_missing_window():
    tables = count_scope([["a", "b", "c"]], 3)
    with pytest.raises(ValidationError):
        cpc([tables[0], tables[2]], "a", "b")


def test_scp_never_cooccurring():
    [t] = count_scope([["a", "b"], ["c"]], 1)
    assert scp(t, "a", "c") == 0.0


def test_scp_hand_enumerated():
    scenes = [["a", "b"]] * 4
    [t] = count_scope(scenes, 1)
    assert scp(t, "a", "b") == 1.0
    assert oracle_scores(scenes, "a", "b", 1)[2] == 1.0
    assert scp(t, "b", "a") == 0.0


@given(small_corpora)
def test_brute_force_equivalence(scenes):
    tables = count_scope(scenes, 3)
    lemmas = sorted(tables[0].unigram)
    assume(tables[0].total_ordered_pairs > 0)
    for a in lemmas:
        for b in lemmas:
            for t in tables:
                o_pmi, o_cp, o_scp = oracle_scores(scenes, a, b, t.window)
                assert abs(pmi(t, a, b) - o_pmi) <= 1e-9
                assert abs(causal_potential(t, a, b) - o_cp) <= 1e-9
                assert abs(scp(t, a, b) - o_scp) <= 1e-9
            assert abs(cpc(tables, a, b) - oracle_cpc(scenes, a, b, 3)) <= 1e-9


@given(small_corpora)
def test_cp_algebra(scenes):
    tables = count_scope(scenes, 3)
    assume(tables[0].total_ordered_pairs > 0)
    for t in tables:
        for a in t.unigram:
            for b in t.unigram:
                cp_ab, cp_ba = causal_potential(t, a, b), causal_potential(t, b, a)
                assert math.isfinite(cp_ab)
                assert cp_ab + cp_ba == pytest.approx(2 * pmi(t, a, b), abs=1e-9)
                ratio = smoothed_count(t, a, b) / smoothed_count(t, b, a)
                assert cp_ab - cp_ba == pytest.approx(2 * math.log(ratio), abs=1e-9)
                assert scp(t, a, b) * scp(t, b, a) >= 0


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=5), st.floats(-5, 5))
def test_cpc_linear(cps, c):
    assert combine_windows([c * x for x in cps]) == pytest.approx(c * combine_windows(cps), abs=1e-9)


@given(small_corpora, st.lists(st.sampled_from("wxyz"), min_size=1, max_size=6))
def test_disjoint_scene_keeps_direction(scenes, extra):
    before = count_scope(scenes, 1)[0]
    after = count_scope(scenes + [extra], 1)[0]
    assume(before.total_ordered_pairs > 0)
    for a in "abcd":
        for b in "abcd":
            if a in before.unigram and b in before.unigram:
                assert before.ordered_pair[(a, b)] == after.ordered_pair[(a, b)]
                d0 = causal_potential(before, a, b) - causal_potential(before, b, a)
                d1 = causal_potential(after, a, b) - causal_potential(after, b, a)
                assert (d0 > 0) == (d1 > 0) and (d0 < 0) == (d1 < 0)


def _events(scenes):
    out = []
    for s_i, scene in enumerate(scenes):
        for i, lemma in enumerate(scene):
            out.append(EventInstance(lemma, PERSON, SOMETHING if lemma == "a" else "none", "none",
                                     None, "f", s_i, i))
    return out


def test_score_scope_min_support_and_args():
    scenes = [["a", "b", "c"], ["a", "b"], ["c", "d"]]
    tables = count_scope(scenes, 3)
    profiles = build_arg_profiles(_events(scenes))
    all_pairs = score_scope(tables, profiles, min_support=1)
    assert {p.key for p in all_pairs} == set(tables[0].ordered_pair)
    filtered = score_scope(tables, profiles, min_support=2)
    assert [p.key for p in filtered] == [("a", "b")]
    p = filtered[0]
    assert p.args1 == ArgCombination(PERSON, SOMETHING) and p.args2 == ArgCombination(PERSON)
    assert p.support == {1: 2, 2: 2, 3: 2}
    assert p.cpc == pytest.approx(sum(p.cp_per_window[i] / i for i in (1, 2, 3)), abs=0)


def test_score_scope_sorted_and_deterministic():
    scenes = [["a", "b", "c", "a", "d"], ["b", "a", "c"], ["d", "c", "b", "a"]]
    tables = count_scope(scenes, 3)
    first = score_scope(tables, min_support=1)
    assert first == score_scope(tables, min_support=1)
    keys = [(-p.cpc, p.e1, p.e2) for p in first]
    assert keys == sorted(keys)


def test_score_file_round_trip(tmp_path):
    tables = count_scope([["a", "b", "c", "a"], ["b", "c"]], 3, "Drama")
    scored = {"Drama": score_scope(tables, min_support=1)}
    write_scores(scored, tmp_path / "scores.tsv", 3)
    header = (tmp_path / "scores.tsv").read_text().splitlines()[0].split("\t")
    assert header == ["scope", "e1", "args1", "e2", "args2", "pmi_w1", "pmi_w2", "pmi_w3",
                      "cp_w1", "cp_w2", "cp_w3", "cpc", "scp", "support_w1", "support_w2", "support_w3"]
    assert read_scores(tmp_path / "scores.tsv") == scored
