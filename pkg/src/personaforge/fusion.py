"""Direct-product fusion of the two view vectors and the four MBTI heads."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from . import text as text_mod
from . import vision
from .errors import DimensionError, InsufficientDataError
from .mbti import MbtiType
from .store import UserProfile
from .tensor import Tensor

VIEW_DIM = 32
FUSED_DIM = VIEW_DIM * VIEW_DIM
HIDDEN = 128
N_AXES = 4
BCE_EPS = 1e-7


def direct_product(t: Tensor, v: Tensor) -> Tensor:
    """Flattened outer product: element i*n+j is t_i * v_j."""
    if t.data.ndim != 1 or v.data.ndim != 1 or t.shape[0] != v.shape[0]:
        raise DimensionError(f"direct_product needs equal-length vectors, "
                             f"got {t.shape} and {v.shape}")
    n = t.shape[0]
    outer = T.matmul(T.reshape(t, (n, 1)), T.reshape(v, (1, n)))
    return T.reshape(outer, (n * n,))


@dataclass
class HeadParams:
    """FC + relu into a 4-unit sigmoid output layer."""

    fc_w: Tensor
    fc_b: Tensor
    out_w: Tensor
    out_b: Tensor

    @classmethod
    def init(cls, in_dim: int, rng: np.random.Generator,
             dtype=np.float64) -> "HeadParams":
        def fc(rows, cols):
            bound = np.sqrt(6.0 / (rows + cols))
            return Tensor(rng.uniform(-bound, bound, (rows, cols)).astype(dtype),
                          requires_grad=True)
        return cls(fc(in_dim, HIDDEN),
                   Tensor(np.zeros(HIDDEN, dtype), requires_grad=True),
                   fc(HIDDEN, N_AXES),
                   Tensor(np.zeros(N_AXES, dtype), requires_grad=True))

    def tensors(self) -> list[Tensor]:
        return [self.fc_w, self.fc_b, self.out_w, self.out_b]

    def named(self, prefix: str) -> dict[str, Tensor]:
        names = ("fc_w", "fc_b", "out_w", "out_b")
        return {f"{prefix}.{n}": t for n, t in zip(names, self.tensors())}

    def forward(self, x: Tensor) -> Tensor:
        hidden = T.relu(T.affine(x, self.fc_w, self.fc_b))
        return T.sigmoid(T.affine(hidden, self.out_w, self.out_b))


class FusionParams(HeadParams):
    """Head over the 1024-dim direct product of the two 32-dim views."""

    @classmethod
    def init(cls, rng: np.random.Generator, dtype=np.float64) -> "FusionParams":
        return super().init(FUSED_DIM, rng, dtype)

    def forward_views(self, text_vec: Tensor, image_vec: Tensor) -> Tensor:
        return self.forward(direct_product(text_vec, image_vec))


def bce_loss(probabilities: Tensor, labels) -> Tensor:
    """Sum of four binary cross-entropies; labels are 1 for first poles."""
    y = Tensor(np.asarray(labels, dtype=probabilities.dtype))
    p = T.clip(probabilities, BCE_EPS, 1.0 - BCE_EPS)
    pos = T.mul(y, T.log(p))
    neg = T.mul(T.sub(1.0, y), T.log(T.sub(1.0, p)))
    return T.mul(T.sum_all(T.add(pos, neg)), -1.0)


def profile_views(profile: UserProfile, text_params, image_params, vocab,
                  dtype=np.float64) -> tuple[Tensor, Tensor]:
    """Encode both views; a missing view becomes the zero vector."""
    texts = profile.texts()
    image_pairs = profile.images_with_timestamps()
    if not texts and not image_pairs:
        raise InsufficientDataError(
            f"user {profile.user_id}: no text and no images to encode")
    if texts:
        posts = [text_mod.tokenize(t, vocab) for t in texts]
        tvec = text_mod.encode_text(posts, text_params)
    else:
        tvec = Tensor(np.zeros(VIEW_DIM, dtype))
    if image_pairs:
        images = vision.select_recent(image_pairs)
        vvec = vision.encode_images([Tensor(np.asarray(i, dtype)) for i in images],
                                    image_params)
    else:
        vvec = Tensor(np.zeros(VIEW_DIM, dtype))
    return tvec, vvec


def predict(profile: UserProfile, text_params, image_params,
            fusion_params: FusionParams, vocab) -> MbtiType:
    """Full two-view forward pass to a labeled MBTI type."""
    tvec, vvec = profile_views(profile, text_params, image_params, vocab)
    probs = fusion_params.forward_views(tvec, vvec)
    return MbtiType.from_probabilities(probs.data)
