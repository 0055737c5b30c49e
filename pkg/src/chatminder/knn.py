"""Priority classification with a k-nearest-neighbour model.

Events are mapped to a five-component feature vector and classified against
a small labelled set: shipped seed examples plus whatever feedback the user
has given. Everything is deterministic: distance ties break on the lower
example seq, vote ties break toward the higher priority.
"""

from __future__ import annotations

import enum
import json
import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import NamedTuple, Sequence

DATA_DIR = Path(__file__).parent / "data"

FEATURE_DIM = 5

URGENCY_HORIZON_DAYS = 30.0

DEFAULT_WEIGHT = 0.5

COLD_START_HIGH = timedelta(hours=48)
COLD_START_MEDIUM = timedelta(days=7)

# reminder lead offsets per priority, in minutes before the event
DEFAULT_LEAD_MINUTES = {
    "High": [7 * 24 * 60, 24 * 60, 3 * 60],
    "Medium": [3 * 24 * 60, 24 * 60],
    "Low": [24 * 60],
}


class KnnError(Exception):
    pass


class EmptyModelError(KnnError):
    pass


class DatasetTooSmallError(KnnError):
    pass


class PriorityLevel(enum.Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"

    @property
    def rank(self) -> int:
        return {"High": 3, "Medium": 2, "Low": 1}[self.value]

    @classmethod
    def from_str(cls, text: str) -> "PriorityLevel":
        for level in cls:
            if level.value == text:
                return level
        raise ValueError(f"unknown priority {text!r}")


PRIORITY_ORDER = (PriorityLevel.HIGH, PriorityLevel.MEDIUM, PriorityLevel.LOW)


@dataclass(frozen=True)
class FeatureVector:
    f_urgency: float
    f_type_weight: float
    f_sender_affinity: float
    f_explicit_time: float
    f_direct_chat: float

    def __post_init__(self):
        for value in self.as_tuple():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"feature component {value} outside [0, 1]")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (
            self.f_urgency,
            self.f_type_weight,
            self.f_sender_affinity,
            self.f_explicit_time,
            self.f_direct_chat,
        )

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "FeatureVector":
        if len(values) != FEATURE_DIM:
            raise ValueError(f"expected {FEATURE_DIM} components, got {len(values)}")
        return cls(*[float(v) for v in values])


@dataclass(frozen=True)
class LabeledExample:
    vector: FeatureVector
    label: PriorityLevel
    origin: str  # seed | feedback
    seq: int


class Neighbor(NamedTuple):
    seq: int
    distance: float
    label: PriorityLevel


@dataclass
class ClassificationReport:
    neighbors: list[Neighbor]
    k: int
    cold_start: bool = False


@dataclass
class UserPreferences:
    event_type_weights: dict[str, float] = field(default_factory=dict)
    sender_affinity: dict[str, float] = field(default_factory=dict)
    lead_schedule: dict[str, list[int]] = field(default_factory=dict)
    quiet_hours: tuple[int, int] | None = None

    def type_weight(self, event_type: str) -> float:
        return self.event_type_weights.get(event_type, DEFAULT_WEIGHT)

    def affinity(self, sender: str) -> float:
        return self.sender_affinity.get(sender, DEFAULT_WEIGHT)

    def lead_minutes(self, priority: PriorityLevel) -> list[int]:
        return list(self.lead_schedule.get(priority.value, DEFAULT_LEAD_MINUTES[priority.value]))

    def to_body(self) -> dict:
        return {
            "event_type_weights": dict(self.event_type_weights),
            "sender_affinity": dict(self.sender_affinity),
            "lead_schedule": {k: list(v) for k, v in self.lead_schedule.items()},
            "quiet_hours": list(self.quiet_hours) if self.quiet_hours else None,
        }

    @classmethod
    def from_body(cls, body: dict) -> "UserPreferences":
        quiet = body.get("quiet_hours")
        return cls(
            event_type_weights={k: float(v) for k, v in body.get("event_type_weights", {}).items()},
            sender_affinity={k: float(v) for k, v in body.get("sender_affinity", {}).items()},
            lead_schedule={k: [int(m) for m in v] for k, v in body.get("lead_schedule", {}).items()},
            quiet_hours=(int(quiet[0]), int(quiet[1])) if quiet else None,
        )

    def validate(self) -> None:
        for name, table in (("event_type_weights", self.event_type_weights),
                            ("sender_affinity", self.sender_affinity)):
            for key, value in table.items():
                if not 0.0 <= value <= 1.0:
                    raise ValueError(f"{name}[{key!r}] = {value} outside [0, 1]")
        for level, offsets in self.lead_schedule.items():
            if level not in DEFAULT_LEAD_MINUTES:
                raise ValueError(f"unknown priority {level!r} in lead_schedule")
            if any(m <= 0 for m in offsets):
                raise ValueError("lead offsets must be positive minutes")
        if self.quiet_hours is not None:
            start, end = self.quiet_hours
            if not (0 <= start <= 23 and 0 <= end <= 23):
                raise ValueError("quiet_hours must be hours in 0..23")


def clamp01(value: float) -> float:
    return min(1.0, max(0.0, value))


def featurize(candidate, prefs: UserPreferences, now: datetime) -> FeatureVector:
    """Build the feature vector for an event candidate.

    Urgency falls linearly from 1 at zero lead to 0 at 30 days out; past
    events clamp at 1. The two weight components come from preferences and
    default to 0.5 for unknown types and senders.
    """
    lead_days = (candidate.occurs_at - now).total_seconds() / 86400.0
    return FeatureVector(
        f_urgency=clamp01(1.0 - lead_days / URGENCY_HORIZON_DAYS),
        f_type_weight=clamp01(prefs.type_weight(candidate.event_type)),
        f_sender_affinity=clamp01(prefs.affinity(candidate.sender)),
        f_explicit_time=1.0 if candidate.confidence > 0.6 else 0.0,
        f_direct_chat=0.0 if candidate.is_group else 1.0,
    )


def euclidean(a: FeatureVector, b: FeatureVector) -> float:
    total = 0.0
    for x, y in zip(a.as_tuple(), b.as_tuple()):
        diff = x - y
        total += diff * diff
    return math.sqrt(total)


@dataclass
class KnnModel:
    examples: list[LabeledExample] = field(default_factory=list)
    k: int = 5

    def next_seq(self) -> int:
        return max((e.seq for e in self.examples), default=0) + 1

    def add_example(self, vector: FeatureVector, label: PriorityLevel, origin: str) -> LabeledExample:
        example = LabeledExample(vector=vector, label=label, origin=origin, seq=self.next_seq())
        self.examples.append(example)
        return example


def classify(model: KnnModel, query: FeatureVector) -> tuple[PriorityLevel, ClassificationReport]:
    """Majority vote over the k nearest examples.

    Equal distances prefer the older (lower-seq) example; an even vote goes
    to the higher priority. k shrinks to the number of stored examples.
    """
    if not model.examples:
        raise EmptyModelError("the model holds no examples")
    k = min(model.k, len(model.examples))
    ranked = sorted(
        model.examples,
        key=lambda e: (euclidean(e.vector, query), e.seq),
    )
    nearest = ranked[:k]
    counts: dict[PriorityLevel, int] = {}
    for example in nearest:
        counts[example.label] = counts.get(example.label, 0) + 1
    best_count = max(counts.values())
    winner = next(level for level in PRIORITY_ORDER if counts.get(level, 0) == best_count)
    report = ClassificationReport(
        neighbors=[Neighbor(e.seq, euclidean(e.vector, query), e.label) for e in nearest],
        k=k,
    )
    return winner, report


def cold_start_priority(lead: timedelta) -> PriorityLevel:
    """Fallback for an empty model: urgency thresholds only."""
    if lead < COLD_START_HIGH:
        return PriorityLevel.HIGH
    if lead < COLD_START_MEDIUM:
        return PriorityLevel.MEDIUM
    return PriorityLevel.LOW


def add_feedback(model: KnnModel, candidate, prefs: UserPreferences, now: datetime,
                 label: PriorityLevel) -> LabeledExample:
    """Teach the model from a user correction; the caller persists it."""
    vector = featurize(candidate, prefs, now)
    return model.add_example(vector, label, origin="feedback")


@dataclass
class EvalResult:
    accuracy: float
    confusion: dict[str, dict[str, int]]
    n_train: int
    n_test: int


def evaluate_split(dataset: list[LabeledExample], k: int = 5, seed: int = 0) -> EvalResult:
    """Shuffle deterministically, train on the first 70%, test on the rest."""
    if len(dataset) < 10:
        raise DatasetTooSmallError(f"need at least 10 examples, got {len(dataset)}")
    items = list(dataset)
    random.Random(seed).shuffle(items)
    cut = (len(items) * 7) // 10
    train, test = items[:cut], items[cut:]
    model = KnnModel(examples=train, k=k)
    confusion = {a.value: {p.value: 0 for p in PRIORITY_ORDER} for a in PRIORITY_ORDER}
    hits = 0
    for item in test:
        predicted, _ = classify(model, item.vector)
        confusion[item.label.value][predicted.value] += 1
        if predicted == item.label:
            hits += 1
    return EvalResult(
        accuracy=hits / len(test),
        confusion=confusion,
        n_train=len(train),
        n_test=len(test),
    )


def load_seed_examples(path: str | None = None) -> list[LabeledExample]:
    p = Path(path) if path else DATA_DIR / "seed_examples.jsonl"
    examples = []
    for seq, line in enumerate((ln for ln in p.read_text(encoding="utf-8").splitlines() if ln.strip()), start=1):
        obj = json.loads(line)
        examples.append(
            LabeledExample(
                vector=FeatureVector.from_sequence(obj["v"]),
                label=PriorityLevel.from_str(obj["label"]),
                origin="seed",
                seq=seq,
            )
        )
    return examples


def load_dataset(path: str) -> list[LabeledExample]:
    """Read a JSONL dataset of {"v": [...], "label": ...} rows for eval."""
    return load_seed_examples(path)
