"""Synthetic corpus: determinism, balance, and planted-signal structure."""

import numpy as np
from sklearn.linear_model import LogisticRegression

from personaforge.corpus import (IMAGES_PER_USER, POSTS_PER_USER,
                                 corpus_fingerprint, load_corpus, save_corpus,
                                 synthesize_corpus)
from personaforge.metrics import macro_f1


def test_seeded_corpus_byte_identical_on_rerun():
    a = synthesize_corpus(40, seed=123)
    b = synthesize_corpus(40, seed=123)
    assert corpus_fingerprint(a) == corpus_fingerprint(b)


def test_different_seeds_differ():
    a = synthesize_corpus(40, seed=1)
    b = synthesize_corpus(40, seed=2)
    assert corpus_fingerprint(a) != corpus_fingerprint(b)


def test_label_marginals_within_five_percent():
    corpus = synthesize_corpus(101, seed=5)
    for i in range(4):
        first = sum(1 for ex in corpus if ex.truth.letters[i] in "ESTJ")
        assert abs(first / len(corpus) - 0.5) <= 0.05


def test_profile_structure():
    corpus = synthesize_corpus(5, seed=9)
    for ex in corpus:
        texts = ex.profile.texts()
        images = ex.profile.recent_images()
        assert len(texts) == POSTS_PER_USER
        assert len(images) == IMAGES_PER_USER
        for img in images:
            assert img.shape == (3, 64, 64)
            assert img.min() >= 0.0 and img.max() <= 1.0
        assert len(ex.truth.letters) == 4


def _heldout_split(corpus, frac=0.75):
    cut = int(len(corpus) * frac)
    return corpus[:cut], corpus[cut:]


def _text_features(examples):
    vocab = sorted({w for ex in examples for t in ex.profile.texts()
                    for w in t.split()})
    index = {w: i for i, w in enumerate(vocab)}
    feats = np.zeros((len(examples), len(vocab)))
    for r, ex in enumerate(examples):
        for t in ex.profile.texts():
            for w in t.split():
                if w in index:
                    feats[r, index[w]] += 1
    return feats


def _image_features(examples):
    feats = []
    for ex in examples:
        imgs = ex.profile.recent_images()
        mean = np.mean(imgs, axis=0)
        small = mean.reshape(3, 8, 8, 8, 8).mean(axis=(2, 4))
        feats.append(small.ravel())
    return np.asarray(feats)


def test_tf_axis_at_chance_for_single_view_linear_probes():
    corpus = synthesize_corpus(240, seed=11)
    train, test = _heldout_split(corpus)
    y_train = [ex.truth.letters[2] for ex in train]
    y_test = [ex.truth.letters[2] for ex in test]
    for featurize in (_text_features, _image_features):
        x_all = featurize(corpus)
        x_train, x_test = x_all[: len(train)], x_all[len(train):]
        probe = LogisticRegression(max_iter=2000).fit(x_train, y_train)
        preds = probe.predict(x_test)
        assert macro_f1(list(preds), y_test, classes=("T", "F")) <= 0.6


def test_planted_axes_visible_to_single_view_probes():
    # sanity that the signal really is in the assigned view
    corpus = synthesize_corpus(240, seed=12)
    train, test = _heldout_split(corpus)
    x_all = _text_features(corpus)
    probe = LogisticRegression(max_iter=2000).fit(
        x_all[: len(train)], [ex.truth.letters[0] for ex in train])
    preds = probe.predict(x_all[len(train):])
    assert macro_f1(list(preds), [ex.truth.letters[0] for ex in test],
                    classes=("E", "I")) >= 0.9

    x_all = _image_features(corpus)
    probe = LogisticRegression(max_iter=2000).fit(
        x_all[: len(train)], [ex.truth.letters[1] for ex in train])
    preds = probe.predict(x_all[len(train):])
    assert macro_f1(list(preds), [ex.truth.letters[1] for ex in test],
                    classes=("S", "N")) >= 0.9


def test_corpus_disk_roundtrip(tmp_path):
    corpus = synthesize_corpus(6, seed=3)
    save_corpus(corpus, tmp_path / "c")
    loaded = load_corpus(tmp_path / "c")
    assert len(loaded) == len(corpus)
    for orig, back in zip(corpus, loaded):
        assert back.truth == orig.truth
        assert back.profile.user_id == orig.profile.user_id
        assert back.profile.texts() == orig.profile.texts()
        got = back.profile.recent_images()
        want = orig.profile.recent_images()
        assert len(got) == len(want)
        for g, w in zip(got, want):
            assert np.max(np.abs(g - w)) <= 1.0 / 255.0
