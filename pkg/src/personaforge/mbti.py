"""MBTI personality types: four binary axes with per-axis probabilities."""

from __future__ import annotations

from dataclasses import dataclass, field

AXES = ("EI", "SN", "TF", "JP")
FIRST_POLES = "ESTJ"
SECOND_POLES = "INFP"


@dataclass(frozen=True)
class MbtiType:
    """Four axis labels plus P(first-listed pole) per axis.

    The label on each axis is the first pole (E/S/T/J) iff its probability
    is >= 0.5; ties resolve to the first pole for determinism.
    """

    letters: str
    probabilities: tuple[float, float, float, float] = field(
        default=(1.0, 1.0, 1.0, 1.0))

    def __post_init__(self):
        if len(self.letters) != 4:
            raise ValueError(f"MBTI type needs 4 letters, got {self.letters!r}")
        for i, (letter, p) in enumerate(zip(self.letters, self.probabilities)):
            expected = FIRST_POLES[i] if p >= 0.5 else SECOND_POLES[i]
            if letter != expected:
                raise ValueError(
                    f"axis {AXES[i]}: letter {letter!r} inconsistent with p={p}")
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"axis {AXES[i]}: probability {p} outside [0,1]")

    @classmethod
    def from_probabilities(cls, probs) -> "MbtiType":
        probs = tuple(float(p) for p in probs)
        if len(probs) != 4:
            raise ValueError("need exactly 4 axis probabilities")
        letters = "".join(
            FIRST_POLES[i] if p >= 0.5 else SECOND_POLES[i]
            for i, p in enumerate(probs))
        return cls(letters, probs)

    @classmethod
    def from_letters(cls, letters: str) -> "MbtiType":
        letters = letters.upper()
        probs = tuple(
            1.0 if letters[i] == FIRST_POLES[i] else 0.0 for i in range(4))
        return cls(letters, probs)

    def axis_label(self, axis: str) -> str:
        return self.letters[AXES.index(axis)]

    def probability_map(self) -> dict[str, float]:
        return dict(zip(AXES, self.probabilities))

    def to_dict(self) -> dict:
        return {"mbti": self.letters, "probabilities": self.probability_map()}

    @classmethod
    def from_dict(cls, d: dict) -> "MbtiType":
        probs = d.get("probabilities")
        if probs:
            return cls(d["mbti"], tuple(probs[a] for a in AXES))
        return cls.from_letters(d["mbti"])
