"""Text view: tokenizer, vocabulary, and the BiGRU post encoder.

Per post, token embeddings run through a forward and a backward GRU; the
two final hidden states are concatenated and the per-post vectors mean-
pooled, then projected to a 32-dim view vector.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensor as T
from .tensor import Tensor

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
MAX_TOKENS = 64

EMBED_DIM = 64
HIDDEN_DIM = 64
TEXT_VIEW_DIM = 32

_WORD_RE = re.compile(r"[\w']+")


class Vocab:
    """Token -> id map with reserved ids {0: PAD, 1: UNK}."""

    def __init__(self, token_to_id: dict[str, int]):
        if token_to_id.get(PAD_TOKEN, PAD_ID) != PAD_ID \
                or token_to_id.get(UNK_TOKEN, UNK_ID) != UNK_ID:
            raise ValueError("ids 0 and 1 are reserved for PAD and UNK")
        self.token_to_id = dict(token_to_id)
        self.token_to_id.setdefault(PAD_TOKEN, PAD_ID)
        self.token_to_id.setdefault(UNK_TOKEN, UNK_ID)

    def __len__(self):
        return max(self.token_to_id.values()) + 1

    def id_for(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    @classmethod
    def build(cls, documents, max_size: int = 4096) -> "Vocab":
        """Rank tokens by descending frequency, ties by first occurrence."""
        counts: dict[str, int] = {}
        first_seen: dict[str, int] = {}
        pos = 0
        for doc in documents:
            for tok in _WORD_RE.findall(doc.lower()):
                counts[tok] = counts.get(tok, 0) + 1
                if tok not in first_seen:
                    first_seen[tok] = pos
                pos += 1
        ranked = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
        mapping = {PAD_TOKEN: PAD_ID, UNK_TOKEN: UNK_ID}
        for i, tok in enumerate(ranked[:max_size - 2]):
            mapping[tok] = i + 2
        return cls(mapping)

    def save(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.token_to_id, indent=0, sort_keys=True))

    @classmethod
    def load(cls, path) -> "Vocab":
        return cls(json.loads(Path(path).read_text()))


@dataclass
class TokenizedPost:
    """Token ids for one post, original text retained for audit."""

    ids: list[int]
    text: str

    def __post_init__(self):
        if len(self.ids) > MAX_TOKENS:
            raise ValueError(f"tokenized post exceeds {MAX_TOKENS} tokens")


def tokenize(text: str, vocab: Vocab) -> TokenizedPost:
    """Lowercase, split on whitespace/punctuation, map OOV to UNK.

    Posts are truncated to MAX_TOKENS; an empty text becomes a single PAD
    so the recurrence always has one step.
    """
    tokens = _WORD_RE.findall(text.lower())[:MAX_TOKENS]
    ids = [vocab.id_for(t) for t in tokens] if tokens else [PAD_ID]
    return TokenizedPost(ids=ids, text=text)


@dataclass
class GruParams:
    """One direction's gate weights: update (z), reset (r), candidate (h)."""

    w_z: Tensor
    w_r: Tensor
    w_h: Tensor
    u_z: Tensor
    u_r: Tensor
    u_h: Tensor
    b_z: Tensor
    b_r: Tensor
    b_h: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, in_dim: int = EMBED_DIM,
             hidden: int = HIDDEN_DIM, dtype=np.float64) -> "GruParams":
        def w(rows, cols):
            bound = np.sqrt(6.0 / (rows + cols))
            return Tensor(rng.uniform(-bound, bound, (rows, cols)).astype(dtype),
                          requires_grad=True)

        def b():
            return Tensor(np.zeros(hidden, dtype), requires_grad=True)

        return cls(w(in_dim, hidden), w(in_dim, hidden), w(in_dim, hidden),
                   w(hidden, hidden), w(hidden, hidden), w(hidden, hidden),
                   b(), b(), b())

    def tensors(self) -> list[Tensor]:
        return [self.w_z, self.w_r, self.w_h, self.u_z, self.u_r, self.u_h,
                self.b_z, self.b_r, self.b_h]

    def named(self, prefix: str) -> dict[str, Tensor]:
        names = ["w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h"]
        return {f"{prefix}.{n}": t for n, t in zip(names, self.tensors())}


def gru_step(x: Tensor, h: Tensor, p: GruParams) -> Tensor:
    """z=sigma(..), r=sigma(..), cand=tanh(..), h' = (1-z)*h + z*cand."""
    z = T.sigmoid(T.dual_affine(x, p.w_z, h, p.u_z, p.b_z))
    r = T.sigmoid(T.dual_affine(x, p.w_r, h, p.u_r, p.b_r))
    cand = T.tanh(T.dual_affine(x, p.w_h, T.mul(r, h), p.u_h, p.b_h))
    return T.add(T.mul(T.sub(1.0, z), h), T.mul(z, cand))


def run_gru(emb: Tensor, p: GruParams, reverse: bool = False) -> Tensor:
    """Final hidden state after consuming embedded tokens in one direction."""
    steps = range(emb.shape[0] - 1, -1, -1) if reverse else range(emb.shape[0])
    h = Tensor(np.zeros(HIDDEN_DIM, emb.dtype))
    for i in steps:
        h = gru_step(T.row(emb, i), h, p)
    return h


@dataclass
class TextEncoderParams:
    """Embedding table, both GRU directions, and the projection FC."""

    embedding: Tensor
    forward: GruParams
    backward: GruParams
    fc_w: Tensor
    fc_b: Tensor

    @classmethod
    def init(cls, vocab_size: int, rng: np.random.Generator,
             dtype=np.float64) -> "TextEncoderParams":
        emb = Tensor(rng.normal(0.0, 0.1, (vocab_size, EMBED_DIM)).astype(dtype),
                     requires_grad=True)
        bound = np.sqrt(6.0 / (2 * HIDDEN_DIM + TEXT_VIEW_DIM))
        fc_w = Tensor(rng.uniform(-bound, bound,
                                  (2 * HIDDEN_DIM, TEXT_VIEW_DIM)).astype(dtype),
                      requires_grad=True)
        fc_b = Tensor(np.zeros(TEXT_VIEW_DIM, dtype), requires_grad=True)
        return cls(emb, GruParams.init(rng, dtype=dtype),
                   GruParams.init(rng, dtype=dtype), fc_w, fc_b)

    def tensors(self) -> list[Tensor]:
        return ([self.embedding] + self.forward.tensors()
                + self.backward.tensors() + [self.fc_w, self.fc_b])

    def named(self, prefix: str = "text") -> dict[str, Tensor]:
        out = {f"{prefix}.embedding": self.embedding,
               f"{prefix}.fc_w": self.fc_w, f"{prefix}.fc_b": self.fc_b}
        out.update(self.forward.named(f"{prefix}.fwd"))
        out.update(self.backward.named(f"{prefix}.bwd"))
        return out


def encode_post(post: TokenizedPost, p: TextEncoderParams) -> Tensor:
    emb = T.embedding_lookup(p.embedding, post.ids)
    fwd = run_gru(emb, p.forward)
    bwd = run_gru(emb, p.backward, reverse=True)
    return T.concat(fwd, bwd)


def encode_text(posts: list[TokenizedPost], p: TextEncoderParams) -> Tensor:
    """Mean of per-post BiGRU vectors, projected through FC + relu."""
    if not posts:
        raise ValueError("encode_text needs at least one post")
    pooled = encode_post(posts[0], p)
    for post in posts[1:]:
        pooled = T.add(pooled, encode_post(post, p))
    pooled = T.mul(pooled, 1.0 / len(posts))
    return T.relu(T.affine(pooled, p.fc_w, p.fc_b))
