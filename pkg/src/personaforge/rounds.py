"""Generation rounds: the card batches shown on a dashboard."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Card:
    card_id: str
    image_ref: str
    is_original: bool  # server-side only; never serialized to clients
    source_asset_id: str
    context: dict = field(default_factory=dict)

    def public_dict(self) -> dict:
        return {"card_id": self.card_id, "image_ref": self.image_ref,
                "source_asset_id": self.source_asset_id,
                "context": dict(self.context)}


@dataclass
class GenerationRound:
    round_id: str
    user_id: str
    industry: str
    cards: list[Card]
    position_seed: int
    closed: bool = False
    created_at: int = 0

    def variant_cards(self) -> list[Card]:
        return [c for c in self.cards if not c.is_original]

    def card(self, card_id: str) -> Card | None:
        for c in self.cards:
            if c.card_id == card_id:
                return c
        return None

    def public_dict(self) -> dict:
        return {"round_id": self.round_id, "user_id": self.user_id,
                "industry": self.industry, "closed": self.closed,
                "created_at": self.created_at,
                "cards": [c.public_dict() for c in self.cards]}


def interleave_cards(variants: list[Card], originals: list[Card],
                     seed: int) -> list[Card]:
    """Mix originals into the variant list at seeded-random positions."""
    cards = list(variants) + list(originals)
    order = np.random.default_rng(seed).permutation(len(cards))
    return [cards[i] for i in order]
