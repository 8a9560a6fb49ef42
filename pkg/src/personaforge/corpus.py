"""Synthetic multimodal corpora with planted per-axis signal.

Stands in for the proprietary training data. The generative recipe plants
each axis in a chosen view:

  EI          token lexicons in post texts (text-only signal)
  SN          stripe orientation motifs in images (image-only signal)
  TF          an XOR of a text bit and an image bit: T iff the bits agree,
              so either view alone is at chance and only their conjunction
              (the fused model) can recover the label
  JP          pure noise, no signal anywhere

Labels are balanced exactly per axis. Everything derives from one seed,
so a corpus is byte-identical across reruns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imaging
from .errors import StoreError
from .mbti import MbtiType
from .store import SocialPost, UserProfile, _read_jsonl

POSTS_PER_USER = 4
TOKENS_PER_POST = 8
IMAGES_PER_USER = 2
IMAGE_SIZE = 64

E_WORDS = ["party", "friends", "crowd", "festival", "tonight", "everyone",
           "dance", "cheers", "social", "meetup", "loud", "together"]
I_WORDS = ["quiet", "solitude", "reading", "alone", "tea", "journal",
           "calm", "indoors", "library", "rain", "slow", "thoughts"]
TB1_WORDS = ["logic", "metric", "data", "proof", "system", "analysis"]
TB0_WORDS = ["feeling", "heart", "warmth", "care", "empathy", "kindness"]
NEUTRAL_WORDS = ["the", "a", "my", "today", "about", "photo", "new", "good",
                 "day", "week", "city", "home", "food", "music", "work",
                 "morning", "walk", "coffee", "light", "street", "old",
                 "little", "big", "very", "time", "year", "first", "last"]

DEFAULT_SIGNAL = {"EI": "text", "SN": "image", "TF": "conjunction", "JP": "none"}


@dataclass
class LabeledExample:
    profile: UserProfile
    truth: MbtiType


@dataclass
class CorpusSpec:
    n_users: int
    signal: dict = field(default_factory=lambda: dict(DEFAULT_SIGNAL))
    seed: int = 0
    pole_word_rate: float = 0.45
    bit_word_rate: float = 0.3
    motif_amplitude: float = 0.35


def _balanced_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    bits = np.zeros(n, dtype=np.int64)
    bits[: n // 2] = 1
    rng.shuffle(bits)
    return bits


def _post_text(rng, pole_words, bit_words, spec: CorpusSpec) -> str:
    tokens = []
    for _ in range(TOKENS_PER_POST):
        u = rng.random()
        if pole_words and u < spec.pole_word_rate:
            tokens.append(pole_words[rng.integers(len(pole_words))])
        elif bit_words and u < spec.pole_word_rate + spec.bit_word_rate:
            tokens.append(bit_words[rng.integers(len(bit_words))])
        else:
            tokens.append(NEUTRAL_WORDS[rng.integers(len(NEUTRAL_WORDS))])
    return " ".join(tokens)


def _user_image(rng, sn_first_pole: bool, image_bit: int, spec: CorpusSpec) -> np.ndarray:
    img = 0.5 + rng.uniform(-0.1, 0.1, size=(3, IMAGE_SIZE, IMAGE_SIZE))
    amp = spec.motif_amplitude
    band = ((np.arange(IMAGE_SIZE) // 8) % 2) * 2.0 - 1.0  # +/-1 in 8px bands
    if spec.signal["SN"] == "image":
        if sn_first_pole:
            img[0] += amp * band[:, None]  # S: horizontal bands
        else:
            img[0] += amp * band[None, :]  # N: vertical bands
    if spec.signal["TF"] == "conjunction":
        img[2, :16, :16] += amp if image_bit else -amp
    return np.clip(img, 0.0, 1.0)


def synthesize_corpus(n_users: int, signal: dict | None = None,
                      seed: int = 0, spec: CorpusSpec | None = None) -> list[LabeledExample]:
    """Deterministic labeled corpus for a seed; see module docstring."""
    if n_users < 1:
        raise ValueError("n_users must be >= 1")
    if spec is None:
        spec = CorpusSpec(n_users, dict(signal or DEFAULT_SIGNAL), seed)
    rng = np.random.default_rng(spec.seed)

    ei = _balanced_bits(rng, n_users)   # 1 = E
    sn = _balanced_bits(rng, n_users)   # 1 = S
    tf = _balanced_bits(rng, n_users)   # 1 = T
    jp = _balanced_bits(rng, n_users)   # 1 = J
    text_bits = rng.integers(0, 2, size=n_users)
    # conjunction: label T iff text bit equals image bit
    image_bits = np.where(tf == 1, text_bits, 1 - text_bits)

    examples = []
    for i in range(n_users):
        letters = ("E" if ei[i] else "I") + ("S" if sn[i] else "N") \
            + ("T" if tf[i] else "F") + ("J" if jp[i] else "P")
        truth = MbtiType.from_letters(letters)
        pole_words = None
        if spec.signal["EI"] == "text":
            pole_words = E_WORDS if ei[i] else I_WORDS
        bit_words = None
        if spec.signal["TF"] == "conjunction":
            bit_words = TB1_WORDS if text_bits[i] else TB0_WORDS
        posts = []
        ts = POSTS_PER_USER + IMAGES_PER_USER
        for j in range(POSTS_PER_USER):
            posts.append(SocialPost(f"u{i}_t{j}",
                                    _post_text(rng, pole_words, bit_words, spec),
                                    timestamp=ts))
            ts -= 1
        for j in range(IMAGES_PER_USER):
            img = _user_image(rng, bool(sn[i]), int(image_bits[i]), spec)
            posts.append(SocialPost(f"u{i}_v{j}", "",
                                    image_refs=[f"images/u{i}_v{j}.png"],
                                    timestamp=ts, images=[img]))
            ts -= 1
        profile = UserProfile(f"u{i}", f"user{i}", "twitter", posts, truth)
        examples.append(LabeledExample(profile, truth))
    return examples


def corpus_fingerprint(examples: list[LabeledExample]) -> bytes:
    """Stable byte serialization for determinism checks."""
    import hashlib
    h = hashlib.sha256()
    for ex in examples:
        h.update(json.dumps(ex.profile.to_record(), sort_keys=True).encode())
        for img, _ in ex.profile.images_with_timestamps():
            h.update(np.ascontiguousarray(img).tobytes())
    return h.digest()


def save_corpus(examples: list[LabeledExample], path):
    """users.jsonl + images/ PNG layout (the documented on-disk format)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / "users.jsonl", "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.profile.to_record()) + "\n")
            for post in ex.profile.posts:
                if post.images:
                    for ref, img in zip(post.image_refs, post.images):
                        imaging.save_png(path / ref, img)


def load_corpus(path) -> list[LabeledExample]:
    """Read a corpus directory in the documented format."""
    path = Path(path)
    users_path = path / "users.jsonl"
    if not users_path.exists():
        raise StoreError(f"{users_path}: corpus has no users.jsonl")
    examples = []
    for lineno, rec in _read_jsonl(users_path):
        try:
            posts = []
            for p in rec["posts"]:
                images = [imaging.load_png(path / ref)
                          for ref in p.get("image_refs", [])]
                posts.append(SocialPost(p["post_id"], p.get("text", ""),
                                        list(p.get("image_refs", [])),
                                        int(p.get("timestamp", 0)),
                                        images or None))
            truth = MbtiType.from_letters(rec["mbti"])
            profile = UserProfile(rec["user_id"], rec.get("handle", rec["user_id"]),
                                  rec.get("platform", "twitter"), posts, truth)
        except (KeyError, ValueError, FileNotFoundError) as exc:
            raise StoreError(f"{users_path}:{lineno}: bad corpus record: {exc}")
        examples.append(LabeledExample(profile, truth))
    return examples
