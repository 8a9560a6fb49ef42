"""Human-feedback settlement: penalize, prioritize, augment, schedule.

A closed round's ratings decide each source asset's fate for the next
generator retraining: sources whose variants all failed (unrated counts
as failed) are penalized out of the cycle; sources with successes are
prioritized with multiple augmented entries in the retrain manifest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import NotFoundError, PersonaForgeError
from .rounds import GenerationRound

COMPLIANCE_VALUES = ("yes", "no", "dont_know")
WOULD_CLICK_VALUES = ("yes", "no")
RECIPES = ("hflip", "crop-pad4", "brightness", "rotate")
MULTIPLICITY_CAP = 4


@dataclass(frozen=True)
class FeedbackRecord:
    """One card's four-factor rating."""

    round_id: str
    card_id: str
    attractiveness: int  # 0..100
    preference: int      # 1..5
    compliance: str      # yes | no | dont_know
    would_click: str     # yes | no
    timestamp: int = 0

    def __post_init__(self):
        if not 0 <= self.attractiveness <= 100:
            raise ValueError(f"attractiveness {self.attractiveness} outside 0..100")
        if not 1 <= self.preference <= 5:
            raise ValueError(f"preference {self.preference} outside 1..5")
        if self.compliance not in COMPLIANCE_VALUES:
            raise ValueError(f"compliance {self.compliance!r} invalid")
        if self.would_click not in WOULD_CLICK_VALUES:
            raise ValueError(f"would_click {self.would_click!r} invalid")

    def to_record(self) -> dict:
        return {"round_id": self.round_id, "card_id": self.card_id,
                "attractiveness": self.attractiveness,
                "preference": self.preference, "compliance": self.compliance,
                "would_click": self.would_click, "timestamp": self.timestamp}


def judge_variant(f: FeedbackRecord) -> bool:
    """Success iff preference >= 4 or the rater would click the ad.

    Attractiveness and compliance are recorded for reporting only.
    """
    return f.preference >= 4 or f.would_click == "yes"


@dataclass
class SourceEntry:
    success_count: int = 0
    failure_count: int = 0
    penalized: bool = False
    multiplicity: int = 0


@dataclass
class RetrainManifest:
    """Assets admitted to the next generator retraining, with recipes."""

    round_id: str
    entries: list[tuple[str, list[str]]] = field(default_factory=list)

    def asset_ids(self) -> list[str]:
        return [aid for aid, _ in self.entries]

    def to_record(self) -> dict:
        return {"round_id": self.round_id,
                "entries": [{"asset_id": a, "recipes": r} for a, r in self.entries]}


class SourceLedger:
    """Per-asset success/failure state, journaled as append-only JSONL."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.entries: dict[str, SourceEntry] = {}
        self.settlements: dict[str, dict] = {}
        if self.path is not None and self.path.exists():
            self._replay()

    def entry(self, asset_id: str) -> SourceEntry:
        return self.entries.setdefault(asset_id, SourceEntry())

    def _replay(self):
        for line in self.path.read_text().splitlines():
            if not line.strip():
                continue
            event = json.loads(line)
            if event["kind"] == "settlement":
                self._apply(event)
            elif event["kind"] == "state":
                self._restore(event)

    def _append(self, event: dict):
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")

    def _apply(self, event: dict):
        if event["round_id"] in self.settlements:
            return
        for aid in event["penalized"]:
            e = self.entry(aid)
            e.failure_count += event["failures"].get(aid, 1)
            e.penalized = True
            e.multiplicity = 0
        for aid, mult in event["prioritized"].items():
            e = self.entry(aid)
            e.success_count += event["successes"].get(aid, 1)
            e.failure_count += event["failures"].get(aid, 0)
            e.penalized = False
            e.multiplicity = mult
        self.settlements[event["round_id"]] = event

    def _restore(self, event: dict):
        self.entries = {aid: SourceEntry(**vals)
                        for aid, vals in event["entries"].items()}
        self.settlements = event["settlements"]

    def compact(self):
        """Rewrite the journal as a single state record."""
        if self.path is None:
            return
        state = {"kind": "state",
                 "entries": {aid: e.__dict__ for aid, e in self.entries.items()},
                 "settlements": self.settlements}
        self.path.write_text(json.dumps(state) + "\n")


def settle_round(rnd: GenerationRound, feedback: list[FeedbackRecord],
                 ledger: SourceLedger) -> tuple[dict, RetrainManifest]:
    """Fold a closed round's feedback into the ledger; idempotent per round.

    A source is penalized iff none of its variants in the round succeeded
    (unrated variants count as non-success). Sources with n >= 1 successes
    get multiplicity 1+n (capped) augmented manifest entries.
    """
    if rnd.round_id in ledger.settlements:
        event = ledger.settlements[rnd.round_id]
        return _summary(event), _manifest_from_event(event)

    by_card: dict[str, bool] = {}
    for f in feedback:
        if f.round_id != rnd.round_id:
            raise NotFoundError(f"feedback for foreign round {f.round_id!r}")
        by_card[f.card_id] = by_card.get(f.card_id, False) or judge_variant(f)

    successes: dict[str, int] = {}
    failures: dict[str, int] = {}
    for card in rnd.variant_cards():
        src = card.source_asset_id
        if by_card.get(card.card_id, False):
            successes[src] = successes.get(src, 0) + 1
            failures.setdefault(src, 0)
        else:
            failures[src] = failures.get(src, 0) + 1
            successes.setdefault(src, 0)

    penalized = sorted(s for s, n in successes.items() if n == 0)
    prioritized = {s: min(1 + n, MULTIPLICITY_CAP)
                   for s, n in sorted(successes.items()) if n > 0}
    event = {"kind": "settlement", "round_id": rnd.round_id,
             "penalized": penalized, "prioritized": prioritized,
             "successes": successes, "failures": failures}
    ledger._apply(event)
    ledger._append(event)
    return _summary(event), _manifest_from_event(event)


def _recipes_for(asset_id: str, multiplicity: int) -> list[str]:
    # deterministic recipe rotation, staggered per asset for diversity
    start = sum(asset_id.encode()) % len(RECIPES)
    return [RECIPES[(start + i) % len(RECIPES)] for i in range(multiplicity)]


def _manifest_from_event(event: dict) -> RetrainManifest:
    entries = [(aid, _recipes_for(aid, mult))
               for aid, mult in event["prioritized"].items()]
    return RetrainManifest(event["round_id"], entries)


def _summary(event: dict) -> dict:
    return {"round_id": event["round_id"], "penalized": list(event["penalized"]),
            "prioritized": dict(event["prioritized"])}


# ---------------------------------------------------------------------------
# invariant augmentation

def augment(image: np.ndarray, recipe: str, seed: int) -> np.ndarray:
    """Label-preserving transform of a [3,h,w] image in [-1,1].

    hflip mirrors (seed-free involution); crop-pad4 pads 4 edge pixels and
    crops at a seeded offset; brightness scales by a seeded +/-10 percent;
    rotate turns by a seeded +/-10 degrees.
    """
    if image.ndim != 3:
        raise ValueError("augment expects a [c,h,w] image")
    rng = np.random.default_rng(seed)
    if recipe == "hflip":
        return image[:, :, ::-1].copy()
    if recipe == "crop-pad4":
        padded = np.pad(image, ((0, 0), (4, 4), (4, 4)), mode="edge")
        dy, dx = rng.integers(0, 9, size=2)
        return padded[:, dy:dy + image.shape[1], dx:dx + image.shape[2]].copy()
    if recipe == "brightness":
        factor = 1.1 if rng.integers(0, 2) else 0.9
        return np.clip(image * factor, -1.0, 1.0)
    if recipe == "rotate":
        angle = 10.0 if rng.integers(0, 2) else -10.0
        rotated = ndimage.rotate(image, angle, axes=(1, 2), reshape=False,
                                 order=1, mode="nearest")
        return np.clip(rotated, -1.0, 1.0)
    raise ValueError(f"unknown augmentation recipe {recipe!r}")


# ---------------------------------------------------------------------------
# cadence scheduling over the logical clock

TASK_INGESTION = "ingestion"
TASK_PROFILER_RETRAIN = "profiler_retrain"
TASK_GENERATOR_RETRAIN = "generator_retrain"

MIN_PROFILER_HOURS = 24.0
MAX_PROFILER_HOURS = 30 * 24.0


@dataclass
class ScheduleConfig:
    ingestion_hours: float = 12.0
    profiler_retrain_hours: float = 7 * 24.0
    generator_retrain_hours: float = 24.0

    def __post_init__(self):
        if min(self.ingestion_hours, self.profiler_retrain_hours,
               self.generator_retrain_hours) <= 0:
            raise ValueError("schedule intervals must be positive")
        if not MIN_PROFILER_HOURS <= self.profiler_retrain_hours <= MAX_PROFILER_HOURS:
            raise ValueError("profiler retrain interval must lie in 24h..30d")


class Scheduler:
    """Logical clock; advancing it returns due tasks in chronological order."""

    def __init__(self, config: ScheduleConfig | None = None):
        self.config = config or ScheduleConfig()
        self.now = 0.0
        self._last = {TASK_INGESTION: 0.0, TASK_PROFILER_RETRAIN: 0.0,
                      TASK_GENERATOR_RETRAIN: 0.0}

    def _interval(self, task: str) -> float:
        return {TASK_INGESTION: self.config.ingestion_hours,
                TASK_PROFILER_RETRAIN: self.config.profiler_retrain_hours,
                TASK_GENERATOR_RETRAIN: self.config.generator_retrain_hours}[task]

    def advance(self, hours: float) -> list[str]:
        """Move the clock forward; each task fires once per elapsed interval."""
        if hours < 0:
            raise PersonaForgeError("logical clock cannot run backwards")
        self.now += hours
        events: list[tuple[float, int, str]] = []
        order = (TASK_INGESTION, TASK_GENERATOR_RETRAIN, TASK_PROFILER_RETRAIN)
        for rank, task in enumerate(order):
            interval = self._interval(task)
            due = int((self.now - self._last[task]) // interval)
            for i in range(1, due + 1):
                events.append((self._last[task] + i * interval, rank, task))
            self._last[task] += due * interval
        events.sort()
        return [task for _, _, task in events]
