"""Entity recognition and event candidate assembly.

Four entity kinds come out of a processed message: EVENT_TYPE (a content
token whose lemma sits in the event gazetteer), PERSON (a capitalized,
non-sentence-initial token that is not a calendar word), and DATE / TIME
(one per temporal expression). Assembly then pairs each TIME with the most
plausible event type and date to produce event candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from functools import lru_cache
from pathlib import Path

from .ids import content_hash
from .ingest import ChatMessage, format_minute, parse_minute
from .temporal import (
    DateExpr,
    TemporalError,
    TemporalExpr,
    month_names,
    resolve_datetime,
    scan_temporal,
    weekday_names,
)
from .textpipe import ProcessedText, process_text

DATA_DIR = Path(__file__).parent / "data"

ENTITY_EVENT_TYPE = "EVENT_TYPE"
ENTITY_PERSON = "PERSON"
ENTITY_DATE = "DATE"
ENTITY_TIME = "TIME"

CONF_SAME_SENTENCE = 1.0
CONF_CROSS_SENTENCE = 0.8
CONF_DEFAULT_TIME = 0.6

STATUS_ACTIVE = "active"


@lru_cache(maxsize=8)
def load_gazetteer(path: str | None = None) -> frozenset[str]:
    p = Path(path) if path else DATA_DIR / "event_gazetteer.txt"
    entries = set()
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.add(line)
    return frozenset(entries)


@dataclass
class Entity:
    kind: str
    token_span: tuple[int, int]
    surface: str
    normalized: str
    sentence_index: int
    temporal: TemporalExpr | None = None


@dataclass
class EventCandidate:
    id: str
    message_id: str
    chat_id: str
    sender: str
    event_type: str
    occurs_at: datetime
    participants: list[str]
    confidence: float
    is_group: bool
    sent_at: datetime
    status: str = STATUS_ACTIVE

    def to_body(self) -> dict:
        return {
            "id": self.id,
            "message_id": self.message_id,
            "chat_id": self.chat_id,
            "sender": self.sender,
            "event_type": self.event_type,
            "occurs_at": format_minute(self.occurs_at),
            "participants": list(self.participants),
            "confidence": self.confidence,
            "is_group": self.is_group,
            "sent_at": format_minute(self.sent_at),
            "status": self.status,
        }

    @classmethod
    def from_body(cls, body: dict) -> "EventCandidate":
        return cls(
            id=body["id"],
            message_id=body["message_id"],
            chat_id=body["chat_id"],
            sender=body["sender"],
            event_type=body["event_type"],
            occurs_at=parse_minute(body["occurs_at"]),
            participants=list(body["participants"]),
            confidence=body["confidence"],
            is_group=body["is_group"],
            sent_at=parse_minute(body["sent_at"]),
            status=body.get("status", STATUS_ACTIVE),
        )


@dataclass
class ExtractionResult:
    processed: ProcessedText
    temporals: list[TemporalExpr]
    entities: list[Entity]
    candidates: list[EventCandidate]
    warnings: list[dict] = field(default_factory=list)


def recognize_entities(
    processed: ProcessedText,
    temporals: list[TemporalExpr],
    gazetteer: frozenset[str] | None = None,
) -> list[Entity]:
    """Tag EVENT_TYPE, PERSON, DATE and TIME entities over the token stream.

    Temporal spans win any overlap: tokens inside them are invisible to the
    other recognizers.
    """
    gaz = gazetteer if gazetteer is not None else load_gazetteer()
    tokens = processed.tokens
    covered: set[int] = set()
    entities: list[Entity] = []

    for expr in temporals:
        start, end = expr.token_span
        covered.update(range(start, end))
        kind = ENTITY_TIME if expr.time is not None else ENTITY_DATE
        first, last = tokens[start], tokens[end - 1]
        sentence = processed.sentences[first.sentence_index]
        surface = sentence[first.char_span[0] : last.char_span[1]]
        if expr.resolved_at is not None:
            normalized = (
                format_minute(expr.resolved_at)
                if kind == ENTITY_TIME
                else expr.resolved_at.date().isoformat()
            )
        else:
            normalized = surface
        entities.append(
            Entity(
                kind=kind,
                token_span=expr.token_span,
                surface=surface,
                normalized=normalized,
                sentence_index=first.sentence_index,
                temporal=expr,
            )
        )

    content = set(processed.content_indices)
    calendar_words = set(month_names()) | set(weekday_names())
    first_of_sentence: dict[int, int] = {}
    for i, tok in enumerate(tokens):
        first_of_sentence.setdefault(tok.sentence_index, i)

    for i, tok in enumerate(tokens):
        if i in covered:
            continue
        if i in content and processed.lemmas[i] in gaz:
            entities.append(
                Entity(
                    kind=ENTITY_EVENT_TYPE,
                    token_span=(i, i + 1),
                    surface=tok.surface,
                    normalized=processed.lemmas[i],
                    sentence_index=tok.sentence_index,
                )
            )
            continue
        if (
            tok.raw_surface[:1].isupper()
            and first_of_sentence.get(tok.sentence_index) != i
            and tok.surface not in calendar_words
            and tok.surface not in gaz
        ):
            entities.append(
                Entity(
                    kind=ENTITY_PERSON,
                    token_span=(i, i + 1),
                    surface=tok.surface,
                    normalized=tok.raw_surface,
                    sentence_index=tok.sentence_index,
                )
            )

    entities.sort(key=lambda e: e.token_span[0])
    return entities


def _span_distance(a: tuple[int, int], b: tuple[int, int]) -> int:
    """Token gap between two disjoint spans."""
    if a[1] <= b[0]:
        return b[0] - a[1]
    return a[0] - b[1]


def _nearest(
    target: Entity, pool: list[Entity], same_sentence_first: bool = True
) -> Entity | None:
    if not pool:
        return None
    if same_sentence_first:
        local = [e for e in pool if e.sentence_index == target.sentence_index]
        if local:
            pool = local
    return min(pool, key=lambda e: (_span_distance(e.token_span, target.token_span), e.token_span[0]))


def _left_in_sentence(target: Entity, pool: list[Entity]) -> Entity | None:
    left = [
        e
        for e in pool
        if e.sentence_index == target.sentence_index and e.token_span[1] <= target.token_span[0]
    ]
    if not left:
        return None
    return max(left, key=lambda e: e.token_span[1])


def _confidence(sentences: list[int]) -> float:
    return CONF_SAME_SENTENCE if len(set(sentences)) == 1 else CONF_CROSS_SENTENCE


def assemble_event_candidates(
    entities: list[Entity],
    message: ChatMessage,
    default_time: tuple[int, int] | None = None,
) -> tuple[list[EventCandidate], list[dict]]:
    """Combine entities into event candidates.

    Every TIME entity yields at most one candidate: the nearest EVENT_TYPE
    to its left in the same sentence claims it (falling back to the nearest
    type anywhere), and the nearest DATE supplies the day. One leftover
    EVENT_TYPE may still surface with the default time, but only for a date
    no candidate covers yet.
    """
    from .temporal import DEFAULT_EVENT_TIME

    default_time = default_time or DEFAULT_EVENT_TIME
    times = [e for e in entities if e.kind == ENTITY_TIME]
    dates = [e for e in entities if e.kind == ENTITY_DATE]
    types = [e for e in entities if e.kind == ENTITY_EVENT_TYPE]
    persons = [e for e in entities if e.kind == ENTITY_PERSON]

    participants: list[str] = []
    for person in persons:
        if person.normalized not in participants:
            participants.append(person.normalized)

    warnings: list[dict] = []
    candidates: list[EventCandidate] = []
    claimed_types: set[int] = set()
    claimed_dates: set = set()

    def build(event_type: Entity, occurs_at: datetime, confidence: float) -> EventCandidate:
        return EventCandidate(
            id=content_hash(message.id, event_type.normalized, format_minute(occurs_at)),
            message_id=message.id,
            chat_id=message.chat_id,
            sender=message.sender,
            event_type=event_type.normalized,
            occurs_at=occurs_at,
            participants=list(participants),
            confidence=confidence,
            is_group=message.is_group,
            sent_at=message.sent_at,
        )

    for time_entity in times:
        event_type = _left_in_sentence(time_entity, types) or _nearest(
            time_entity, types, same_sentence_first=False
        )
        if event_type is None:
            continue

        expr = time_entity.temporal
        assert expr is not None and expr.time is not None
        involved = [time_entity.sentence_index, event_type.sentence_index]
        if expr.date is not None:
            occurs_at = expr.resolved_at
        else:
            date_entity = _nearest(time_entity, dates)
            if date_entity is not None and date_entity.temporal is not None:
                merged = TemporalExpr(
                    token_span=time_entity.token_span,
                    date=date_entity.temporal.date,
                    time=expr.time,
                )
                try:
                    occurs_at = resolve_datetime(merged, message.sent_at, default_time)
                except TemporalError as exc:
                    warnings.append(_warning(message.id, "unresolvable", str(exc)))
                    continue
                involved.append(date_entity.sentence_index)
            else:
                occurs_at = expr.resolved_at
        if occurs_at is None:
            continue
        if occurs_at < message.sent_at:
            warnings.append(
                _warning(message.id, "past_event", f"{event_type.normalized} at {occurs_at}")
            )
            continue
        claimed_types.add(id(event_type))
        claimed_dates.add(occurs_at.date())
        built = build(event_type, occurs_at, _confidence(involved))
        # a repeated mention of the same type and moment is the same event
        if all(existing.id != built.id for existing in candidates):
            candidates.append(built)

    # One unclaimed type may still surface at the default time; pick the one
    # closest to a date mention, and only for a day nothing else covers.
    unclaimed = [t for t in types if id(t) not in claimed_types]
    best: tuple[int, int, Entity, datetime] | None = None
    for event_type in unclaimed:
        date_entity = _nearest(event_type, dates)
        if date_entity is None or date_entity.temporal is None:
            continue
        merged = TemporalExpr(
            token_span=event_type.token_span, date=date_entity.temporal.date, time=None
        )
        try:
            occurs_at = resolve_datetime(merged, message.sent_at, default_time)
        except TemporalError as exc:
            warnings.append(_warning(message.id, "unresolvable", str(exc)))
            continue
        if occurs_at < message.sent_at or occurs_at.date() in claimed_dates:
            continue
        distance = _span_distance(event_type.token_span, date_entity.token_span)
        key = (distance, event_type.token_span[0])
        if best is None or key < (best[0], best[1]):
            best = (distance, event_type.token_span[0], event_type, occurs_at)
    if best is not None:
        candidates.append(build(best[2], best[3], CONF_DEFAULT_TIME))

    return candidates, warnings


def _warning(message_id: str, reason: str, detail: str) -> dict:
    return {"message_id": message_id, "reason": reason, "detail": detail}


def extract_message(
    message: ChatMessage,
    *,
    stopwords: frozenset[str] | None = None,
    irregulars: dict[str, str] | None = None,
    gazetteer: frozenset[str] | None = None,
    date_order: str = "dmy",
    default_time: tuple[int, int] | None = None,
) -> ExtractionResult:
    """Run the full pipeline over one message and assemble candidates."""
    from .temporal import DEFAULT_EVENT_TIME

    default_time = default_time or DEFAULT_EVENT_TIME
    processed = process_text(message.id, message.raw_text, stopwords, irregulars)
    scanned = scan_temporal(processed.tokens, processed.sentences, date_order)
    warnings: list[dict] = []
    temporals: list[TemporalExpr] = []
    for expr in scanned:
        try:
            expr.resolved_at = resolve_datetime(expr, message.sent_at, default_time)
            temporals.append(expr)
        except TemporalError as exc:
            warnings.append(_warning(message.id, "unresolvable", str(exc)))
    entities = recognize_entities(processed, temporals, gazetteer)
    candidates, assembly_warnings = assemble_event_candidates(entities, message, default_time)
    warnings.extend(assembly_warnings)
    return ExtractionResult(
        processed=processed,
        temporals=temporals,
        entities=entities,
        candidates=candidates,
        warnings=warnings,
    )


def message_to_events(message: ChatMessage, **kwargs) -> list[EventCandidate]:
    """Convenience wrapper: just the candidates."""
    return extract_message(message, **kwargs).candidates
