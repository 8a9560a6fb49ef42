"""Macro-F1 for binary axis labels."""

from __future__ import annotations

from typing import Sequence


def macro_f1(predictions: Sequence[str], truths: Sequence[str],
             classes: Sequence[str] | None = None) -> float:
    """Unweighted mean of per-class F1.

    A class with zero predicted and zero true positives contributes F1=0.
    `classes` defaults to the union of observed labels; pass the axis's
    two poles explicitly when one may be absent from a small sample.
    """
    if len(predictions) != len(truths):
        raise ValueError("predictions and truths differ in length")
    if not truths:
        raise ValueError("macro_f1 needs at least one item")
    if classes is None:
        classes = sorted(set(truths) | set(predictions))
    scores = []
    for cls in classes:
        tp = sum(1 for p, t in zip(predictions, truths) if p == cls and t == cls)
        fp = sum(1 for p, t in zip(predictions, truths) if p == cls and t != cls)
        fn = sum(1 for p, t in zip(predictions, truths) if p != cls and t == cls)
        if tp == 0:
            scores.append(0.0)
            continue
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        scores.append(2 * precision * recall / (precision + recall))
    return sum(scores) / len(scores)
