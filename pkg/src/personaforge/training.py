"""Profiler training loops and the macro-F1 evaluation matrix.

Three view modes mirror the evaluation table's column groups: text-only
and image-only runs put a head directly on the single view vector, the
fused run applies the direct-product fusion head. Adam on summed BCE,
80/10/10 seeded split, patience-based early stopping on validation
macro-F1.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import fusion, tensor as T, text as text_mod, vision
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import LabeledExample
from .errors import TrainingError
from .fusion import FusionParams, HeadParams, bce_loss
from .mbti import AXES, FIRST_POLES, MbtiType
from .metrics import macro_f1
from .tensor import Tape, Tensor

VIEW_MODES = ("text", "image", "fused")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 16
    epochs: int = 10
    seed: int = 0
    precision: str = "float64"  # float32 permitted for speed
    patience: int = 5
    vocab_size: int = 512

    def __post_init__(self):
        if min(self.learning_rate, self.batch_size, self.epochs,
               self.patience, self.vocab_size) <= 0:
            raise ValueError("hyperparameters must be positive")
        if self.precision not in ("float64", "float32"):
            raise ValueError(f"unknown precision {self.precision!r}")

    @property
    def dtype(self):
        return np.float64 if self.precision == "float64" else np.float32


class Adam:
    def __init__(self, params: list[Tensor], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.t = 0

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            m_hat = self.m[i] / (1 - b1 ** self.t)
            v_hat = self.v[i] / (1 - b2 ** self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = None


@dataclass
class ModelSnapshot:
    """Immutable-by-convention parameter bundle for one view mode."""

    view_mode: str
    vocab: text_mod.Vocab
    text_params: text_mod.TextEncoderParams | None
    image_params: vision.ImageEncoderParams | None
    head: HeadParams

    @classmethod
    def init(cls, view_mode: str, vocab: text_mod.Vocab,
             rng: np.random.Generator, dtype=np.float64) -> "ModelSnapshot":
        if view_mode not in VIEW_MODES:
            raise ValueError(f"unknown view mode {view_mode!r}")
        text_params = text_mod.TextEncoderParams.init(len(vocab), rng, dtype) \
            if view_mode in ("text", "fused") else None
        image_params = vision.ImageEncoderParams.init(rng, dtype) \
            if view_mode in ("image", "fused") else None
        head = FusionParams.init(rng, dtype) if view_mode == "fused" \
            else HeadParams.init(fusion.VIEW_DIM, rng, dtype)
        return cls(view_mode, vocab, text_params, image_params, head)

    def tensors(self) -> list[Tensor]:
        out = []
        if self.text_params is not None:
            out.extend(self.text_params.tensors())
        if self.image_params is not None:
            out.extend(self.image_params.tensors())
        out.extend(self.head.tensors())
        return out

    def named_tensors(self) -> dict[str, Tensor]:
        named = {}
        if self.text_params is not None:
            named.update(self.text_params.named("text"))
        if self.image_params is not None:
            named.update(self.image_params.named("image"))
        named.update(self.head.named("head"))
        return named

    def clone(self) -> "ModelSnapshot":
        return copy.deepcopy(self)

    def save(self, path, vocab_path=None):
        save_checkpoint(path, self.named_tensors())
        if vocab_path is not None:
            self.vocab.save(vocab_path)

    def restore_from(self, other: "ModelSnapshot"):
        for mine, theirs in zip(self.tensors(), other.tensors()):
            mine.data[...] = theirs.data

    def load_weights(self, path, dtype=np.float64):
        loaded = load_checkpoint(path, dtype)
        for name, t in self.named_tensors().items():
            if name not in loaded:
                raise TrainingError(f"checkpoint missing parameter {name!r}")
            if loaded[name].shape != t.shape:
                raise TrainingError(f"checkpoint parameter {name!r} has shape "
                                    f"{loaded[name].shape}, expected {t.shape}")
            t.data[...] = loaded[name].data


@dataclass
class PreparedExample:
    tokens: list
    images: list[np.ndarray]
    labels: tuple[int, int, int, int]


def prepare_examples(corpus: list[LabeledExample], vocab: text_mod.Vocab,
                     dtype) -> list[PreparedExample]:
    prepared = []
    for ex in corpus:
        tokens = [text_mod.tokenize(t, vocab) for t in ex.profile.texts()]
        images = [np.asarray(img, dtype=dtype)
                  for img in ex.profile.recent_images(vision.MAX_RECENT_IMAGES)]
        labels = tuple(int(ex.truth.letters[i] == FIRST_POLES[i]) for i in range(4))
        prepared.append(PreparedExample(tokens, images, labels))
    return prepared


def forward_probs(ex: PreparedExample, model: ModelSnapshot, dtype) -> Tensor:
    zero = lambda: Tensor(np.zeros(fusion.VIEW_DIM, dtype))
    if model.view_mode == "text":
        vec = text_mod.encode_text(ex.tokens, model.text_params) if ex.tokens else zero()
        return model.head.forward(vec)
    if model.view_mode == "image":
        imgs = [Tensor(i) for i in ex.images]
        vec = vision.encode_images(imgs, model.image_params) if imgs else zero()
        return model.head.forward(vec)
    tvec = text_mod.encode_text(ex.tokens, model.text_params) if ex.tokens else zero()
    vvec = vision.encode_images([Tensor(i) for i in ex.images],
                                model.image_params) if ex.images else zero()
    return model.head.forward_views(tvec, vvec)


def predict_letters(ex: PreparedExample, model: ModelSnapshot, dtype) -> str:
    probs = forward_probs(ex, model, dtype)
    if not np.isfinite(probs.data).all():
        raise TrainingError(
            f"model emits non-finite probabilities (view_mode={model.view_mode}); "
            "training diverged")
    return MbtiType.from_probabilities(probs.data).letters


def axis_f1(prepared: list[PreparedExample], truths: list[str],
            model: ModelSnapshot, dtype) -> dict[str, float]:
    predicted = [predict_letters(ex, model, dtype) for ex in prepared]
    out = {}
    for i, axis in enumerate(AXES):
        classes = (axis[0], axis[1])
        out[axis] = macro_f1([p[i] for p in predicted], [t[i] for t in truths],
                             classes=classes)
    return out


def split_corpus(corpus: list[LabeledExample], seed: int):
    """Seeded 80/10/10 split; degenerate corpora reuse train for val/test."""
    order = np.random.default_rng(seed).permutation(len(corpus))
    shuffled = [corpus[i] for i in order]
    n = len(shuffled)
    n_train = max(1, int(0.8 * n))
    n_val = int(0.1 * n)
    train = shuffled[:n_train]
    val = shuffled[n_train:n_train + n_val] or train
    test = shuffled[n_train + n_val:] or train
    return train, val, test


@dataclass
class TrainResult:
    model: ModelSnapshot
    test_f1: dict[str, float]
    best_val_f1: float
    history: list[dict] = field(default_factory=list)
    train_loss: float = 0.0
    epochs_run: int = 0


def train(corpus: list[LabeledExample], view_mode: str,
          config: TrainConfig | None = None) -> TrainResult:
    """Adam on summed BCE with early stopping on validation macro-F1."""
    config = config or TrainConfig()
    dtype = config.dtype
    train_set, val_set, test_set = split_corpus(corpus, config.seed)
    vocab = text_mod.Vocab.build(
        (t for ex in train_set for t in ex.profile.texts()),
        max_size=config.vocab_size)
    rng = np.random.default_rng(config.seed + 1)
    model = ModelSnapshot.init(view_mode, vocab, rng, dtype)

    prep_train = prepare_examples(train_set, vocab, dtype)
    prep_val = prepare_examples(val_set, vocab, dtype)
    prep_test = prepare_examples(test_set, vocab, dtype)
    val_truths = [ex.truth.letters for ex in val_set]
    test_truths = [ex.truth.letters for ex in test_set]

    params = model.tensors()
    opt = Adam(params, config.learning_rate, config.beta1, config.beta2,
               config.adam_eps)
    best = model.clone()
    best_val = -1.0
    since_best = 0
    history = []
    last_loss = float("nan")

    for epoch in range(config.epochs):
        order = np.random.default_rng(config.seed + 100 + epoch) \
            .permutation(len(prep_train))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = [prep_train[i] for i in order[start:start + config.batch_size]]
            opt.zero_grad()
            with Tape():
                total = None
                for ex in batch:
                    loss = bce_loss(forward_probs(ex, model, dtype), ex.labels)
                    total = loss if total is None else T.add(total, loss)
                total = T.mul(total, 1.0 / len(batch))
                if not np.isfinite(total.data).all():
                    raise TrainingError(
                        f"loss diverged to non-finite at epoch {epoch}, "
                        f"batch offset {start} (view_mode={view_mode})")
                T.backward(total)
            opt.step()
            epoch_loss += total.item() * len(batch)
        last_loss = epoch_loss / len(prep_train)

        val_scores = axis_f1(prep_val, val_truths, model, dtype)
        val_mean = sum(val_scores.values()) / len(val_scores)
        history.append({"epoch": epoch, "train_loss": last_loss,
                        "val_f1": val_scores, "val_mean_f1": val_mean})
        if val_mean > best_val:
            best_val = val_mean
            best = model.clone()
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break

    model.restore_from(best)
    test_scores = axis_f1(prep_test, test_truths, model, dtype)
    return TrainResult(model, test_scores, best_val, history, last_loss,
                       epochs_run=len(history))


@dataclass
class EvalReport:
    """Per-axis macro F1 for the three view modes (3x4 matrix)."""

    rows: dict[str, dict[str, float]]
    runtime_seconds: float = 0.0

    def __post_init__(self):
        for mode, scores in self.rows.items():
            for axis, value in scores.items():
                if not 0.0 <= value <= 1.0:
                    raise ValueError(f"{mode}/{axis}: F1 {value} outside [0,1]")

    def to_json(self) -> str:
        return json.dumps({"macro_f1": self.rows,
                           "runtime_seconds": round(self.runtime_seconds, 2)},
                          indent=2)

    def table(self) -> str:
        header = f"{'Model':<12}" + "".join(f"{a:>8}" for a in AXES)
        lines = [header, "-" * len(header)]
        for mode in VIEW_MODES:
            if mode not in self.rows:
                continue
            row = self.rows[mode]
            lines.append(f"{mode:<12}" + "".join(f"{row[a]:>8.3f}" for a in AXES))
        return "\n".join(lines)


def evaluate_matrix(corpus: list[LabeledExample],
                    config: TrainConfig | None = None) -> EvalReport:
    """Train every view mode and assemble the evaluation matrix."""
    started = time.time()
    rows = {}
    for mode in VIEW_MODES:
        rows[mode] = train(corpus, mode, config).test_f1
    return EvalReport(rows, runtime_seconds=time.time() - started)
