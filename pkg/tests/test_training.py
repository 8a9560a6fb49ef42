"""Training loop behavior on small corpora (the n=500 run lives in acceptance)."""

import numpy as np
import pytest

from personaforge.corpus import LabeledExample, synthesize_corpus
from personaforge.errors import TrainingError
from personaforge.mbti import MbtiType
from personaforge.store import SocialPost, UserProfile
from personaforge.training import (EvalReport, TrainConfig, axis_f1,
                                   evaluate_matrix, prepare_examples,
                                   split_corpus, train)


def one_example():
    profile = UserProfile("solo", "solo", "twitter", [
        SocialPost("p0", "quiet reading tea alone journal", timestamp=2),
        SocialPost("p1", "library rain calm indoors", timestamp=1),
    ], MbtiType.from_letters("ISTP"))
    return [LabeledExample(profile, profile.mbti)]


def test_memorizes_single_example():
    cfg = TrainConfig(learning_rate=0.05, epochs=300, patience=300, seed=0)
    result = train(one_example(), "text", cfg)
    assert result.train_loss < 0.01


def test_loss_non_increasing_on_single_example():
    cfg = TrainConfig(epochs=8, patience=8, seed=1)
    result = train(one_example(), "text", cfg)
    losses = [h["train_loss"] for h in result.history]
    for earlier, later in zip(losses, losses[1:]):
        assert later <= earlier + 1e-6


def test_seeded_run_reproducible():
    corpus = synthesize_corpus(24, seed=4)
    cfg = TrainConfig(epochs=2, seed=4, precision="float32")
    a = train(corpus, "text", cfg)
    b = train(corpus, "text", cfg)
    assert a.history == b.history
    assert a.test_f1 == b.test_f1


def test_split_is_seeded_and_partitions():
    corpus = synthesize_corpus(50, seed=6)
    tr1, va1, te1 = split_corpus(corpus, seed=9)
    tr2, va2, te2 = split_corpus(corpus, seed=9)
    assert [e.profile.user_id for e in tr1] == [e.profile.user_id for e in tr2]
    ids = [e.profile.user_id for e in tr1 + va1 + te1]
    assert sorted(ids) == sorted(e.profile.user_id for e in corpus)
    assert len(tr1) == 40 and len(va1) == 5 and len(te1) == 5


def test_early_stopping_returns_best_snapshot():
    corpus = synthesize_corpus(40, seed=7)
    cfg = TrainConfig(epochs=5, patience=2, seed=7, precision="float32")
    result = train(corpus, "text", cfg)
    _, val_set, _ = split_corpus(corpus, cfg.seed)
    prep = prepare_examples(val_set, result.model.vocab, cfg.dtype)
    scores = axis_f1(prep, [e.truth.letters for e in val_set],
                     result.model, cfg.dtype)
    recomputed = sum(scores.values()) / len(scores)
    assert recomputed >= result.best_val_f1 - 1e-12


def test_divergence_raises_training_error():
    # float32 conv stack overflows to inf under an absurd learning rate;
    # the resulting NaN loss must abort with diagnostics, not train on
    corpus = synthesize_corpus(16, seed=8)
    cfg = TrainConfig(learning_rate=1e12, epochs=4, seed=8, precision="float32")
    with np.errstate(all="ignore"):
        with pytest.raises(TrainingError):
            train(corpus, "image", cfg)


def test_evaluate_matrix_shape():
    corpus = synthesize_corpus(20, seed=10)
    cfg = TrainConfig(epochs=1, seed=10, precision="float32")
    report = evaluate_matrix(corpus, cfg)
    assert set(report.rows) == {"text", "image", "fused"}
    for row in report.rows.values():
        assert set(row) == {"EI", "SN", "TF", "JP"}
        assert all(0.0 <= v <= 1.0 for v in row.values())
    # table and json render without error and carry all cells
    assert "fused" in report.table()
    assert "macro_f1" in report.to_json()


def test_eval_report_rejects_out_of_range():
    with pytest.raises(ValueError):
        EvalReport({"text": {"EI": 1.2, "SN": 0.5, "TF": 0.5, "JP": 0.5}})


def test_checkpoint_roundtrip_preserves_predictions(tmp_path):
    corpus = synthesize_corpus(20, seed=11)
    cfg = TrainConfig(epochs=1, seed=11)
    result = train(corpus, "fused", cfg)
    model = result.model
    model.save(tmp_path / "m.ckpt", tmp_path / "vocab.json")

    from personaforge.text import Vocab
    from personaforge.training import ModelSnapshot
    rng = np.random.default_rng(99)
    fresh = ModelSnapshot.init("fused", Vocab.load(tmp_path / "vocab.json"), rng)
    fresh.load_weights(tmp_path / "m.ckpt")
    prep = prepare_examples(corpus[:4], model.vocab, cfg.dtype)
    truths = [e.truth.letters for e in corpus[:4]]
    assert axis_f1(prep, truths, fresh, cfg.dtype) == \
        axis_f1(prep, truths, model, cfg.dtype)
