"""Macro-F1 against a brute-force confusion-matrix oracle."""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from personaforge.metrics import macro_f1


def confusion_oracle(predictions, truths, classes):
    scores = []
    for c in classes:
        tp = fp = fn = 0
        for p, t in zip(predictions, truths):
            if p == c and t == c:
                tp += 1
            elif p == c:
                fp += 1
            elif t == c:
                fn += 1
        if tp == 0:
            scores.append(0.0)
        else:
            prec, rec = tp / (tp + fp), tp / (tp + fn)
            scores.append(2 * prec * rec / (prec + rec))
    return sum(scores) / len(scores)


def test_perfect_predictor():
    assert macro_f1(["E", "I", "E"], ["E", "I", "E"]) == 1.0


def test_hand_computed_case():
    # class E: P=0.5, R=1, F1=2/3; class I: F1=0; macro=1/3
    got = macro_f1(["E", "E", "E", "E"], ["E", "E", "I", "I"])
    assert abs(got - 1.0 / 3.0) < 1e-12


def test_explicit_classes_cover_absent_pole():
    got = macro_f1(["E", "E"], ["E", "E"], classes=("E", "I"))
    assert got == 0.5


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        macro_f1([], [])


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        macro_f1(["E"], ["E", "I"])


def test_exhaustive_small_labelings_match_oracle():
    for n in (1, 2, 3):
        for truths in itertools.product("EI", repeat=n):
            for preds in itertools.product("EI", repeat=n):
                got = macro_f1(list(preds), list(truths), classes=("E", "I"))
                want = confusion_oracle(list(preds), list(truths), ("E", "I"))
                assert got == want


@given(st.lists(st.sampled_from("EI"), min_size=1, max_size=8),
       st.integers(0, 10 ** 6))
@settings(max_examples=100, deadline=None)
def test_random_labelings_match_oracle(truths, seed):
    import random
    r = random.Random(seed)
    preds = [r.choice("EI") for _ in truths]
    got = macro_f1(preds, truths, classes=("E", "I"))
    assert got == confusion_oracle(preds, truths, ("E", "I"))


@given(st.lists(st.sampled_from("EI"), min_size=1, max_size=10),
       st.lists(st.sampled_from("EI"), min_size=1, max_size=10))
@settings(max_examples=100, deadline=None)
def test_symmetric_under_class_relabeling(a, b):
    n = min(len(a), len(b))
    preds, truths = a[:n], b[:n]
    swap = {"E": "I", "I": "E"}
    direct = macro_f1(preds, truths, classes=("E", "I"))
    relabeled = macro_f1([swap[p] for p in preds], [swap[t] for t in truths],
                         classes=("I", "E"))
    assert abs(direct - relabeled) < 1e-12
