"""Notification planning, delivery ticks, acknowledgements and feedback.

A freshly detected event gets one detection notification plus reminders at
priority-dependent lead times. Delivered notifications stay pinned: they
keep appearing in the pending listing until the user acknowledges them, and
that survives restarts because every state change lands in the store.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import requests

from . import knn
from .entities import EventCandidate, extract_message
from .ids import content_hash
from .ingest import (
    ChatMessage,
    format_minute,
    parse_jsonl_messages,
    parse_minute,
    parse_whatsapp_export,
)
from .knn import (
    EmptyModelError,
    KnnModel,
    PriorityLevel,
    UserPreferences,
    classify,
    cold_start_priority,
    featurize,
    load_seed_examples,
)
from .store import (
    EventStore,
    NOTIF_ACKNOWLEDGED,
    NOTIF_DELIVERED,
    NOTIF_PENDING,
    STATUS_ACTIVE,
    UnknownIdError,
)

KIND_DETECTION = "detection"
KIND_REMINDER = "reminder"


class NotifyError(Exception):
    pass


class EventNotActiveError(NotifyError):
    pass


class SinkFailure(NotifyError):
    pass


@dataclass
class Notification:
    id: str
    event_id: str
    fire_at: datetime
    kind: str  # detection | reminder
    priority: PriorityLevel
    state: str = NOTIF_PENDING

    def to_body(self) -> dict:
        return {
            "id": self.id,
            "event_id": self.event_id,
            "fire_at": format_minute(self.fire_at),
            "kind": self.kind,
            "priority": self.priority.value,
            "state": self.state,
        }

    @classmethod
    def from_body(cls, body: dict) -> "Notification":
        return cls(
            id=body["id"],
            event_id=body["event_id"],
            fire_at=parse_minute(body["fire_at"]),
            kind=body["kind"],
            priority=PriorityLevel.from_str(body["priority"]),
            state=body["state"],
        )


def _in_quiet_hours(moment: datetime, quiet: tuple[int, int]) -> bool:
    start, end = quiet
    if start == end:
        return False
    hour = moment.hour
    if start < end:
        return start <= hour < end
    return hour >= start or hour < end


def _quiet_end(moment: datetime, quiet: tuple[int, int]) -> datetime:
    end = moment.replace(hour=quiet[1], minute=0, second=0, microsecond=0)
    if end <= moment:
        end += timedelta(days=1)
    return end


def _make_notification(event_id: str, fire_at: datetime, kind: str, priority: PriorityLevel) -> Notification:
    return Notification(
        id=content_hash(event_id, format_minute(fire_at), kind),
        event_id=event_id,
        fire_at=fire_at,
        kind=kind,
        priority=priority,
    )


def plan_notifications(
    event: EventCandidate,
    priority: PriorityLevel,
    now: datetime,
    prefs: UserPreferences | None = None,
) -> list[Notification]:
    """Detection at now plus the priority's reminder ladder.

    Reminders that would already be due collapse into the detection, none
    ever fires after the event itself, and reminders landing inside quiet
    hours shift to the quiet-hour end unless that overshoots the event. An
    event discovered after it happened still surfaces once.
    """
    prefs = prefs or UserPreferences()
    detection = _make_notification(event.id, now, KIND_DETECTION, priority)
    if event.occurs_at < now:
        return [detection]

    notifications = [detection]
    seen_ids = {detection.id}
    for offset_minutes in prefs.lead_minutes(priority):
        fire_at = event.occurs_at - timedelta(minutes=offset_minutes)
        if fire_at <= now:
            continue  # overdue reminders merge into the immediate detection
        if prefs.quiet_hours is not None and _in_quiet_hours(fire_at, prefs.quiet_hours):
            shifted = _quiet_end(fire_at, prefs.quiet_hours)
            if shifted <= event.occurs_at:
                fire_at = shifted
        if fire_at > event.occurs_at:
            continue
        notification = _make_notification(event.id, fire_at, KIND_REMINDER, priority)
        if notification.id in seen_ids:
            continue
        seen_ids.add(notification.id)
        notifications.append(notification)

    notifications.sort(key=lambda n: (n.fire_at, n.kind != KIND_DETECTION))
    return notifications


def stdout_sink(notification: Notification, event: EventCandidate) -> None:
    print(
        f"NOTIFY [{notification.priority.value}] {event.event_type} "
        f"at {format_minute(event.occurs_at)} (from {event.sender}) "
        f"{notification.kind} {notification.id}"
    )


def make_webhook_sink(url: str, timeout: float = 5.0):
    def webhook_sink(notification: Notification, event: EventCandidate) -> None:
        payload = {
            "notification_id": notification.id,
            "kind": notification.kind,
            "priority": notification.priority.value,
            "event_id": event.id,
            "event_type": event.event_type,
            "occurs_at": format_minute(event.occurs_at),
            "sender": event.sender,
            "participants": event.participants,
        }
        try:
            response = requests.post(url, json=payload, timeout=timeout)
            response.raise_for_status()
        except requests.RequestException as exc:
            raise SinkFailure(f"webhook delivery failed: {exc}") from exc

    return webhook_sink


@dataclass
class ScanResult:
    new_events: list[EventCandidate] = field(default_factory=list)
    planned: list[Notification] = field(default_factory=list)
    warnings: int = 0


class NotifierService:
    """Ties the pipeline together over one event store.

    Every public method takes ``now`` so behaviour is reproducible; when it
    is omitted the wall clock is used. A single lock serializes mutations,
    matching the store's one-writer rule.
    """

    def __init__(
        self,
        store: EventStore,
        *,
        k: int = 5,
        seed_path: str | None = None,
        sinks: list | None = None,
        date_order: str = "dmy",
        default_time: tuple[int, int] | None = None,
        now_fn=None,
    ):
        self.store = store
        self.date_order = date_order
        self.default_time = default_time
        self._now_fn = now_fn or datetime.now
        self._lock = threading.RLock()
        self._scanned_messages = 0

        self.model = KnnModel(examples=list(load_seed_examples(seed_path)), k=k)
        for body in store.state.examples:
            self.model.add_example(
                knn.FeatureVector.from_sequence(body["vector"]),
                PriorityLevel.from_str(body["label"]),
                origin=body.get("origin", "feedback"),
            )

        if sinks is None:
            sinks = [stdout_sink]
            webhook_url = os.environ.get("WEBHOOK_URL")
            if webhook_url:
                sinks.append(make_webhook_sink(webhook_url))
        self.sinks = sinks

    # -- helpers ----------------------------------------------------------

    def now(self) -> datetime:
        return self._now_fn()

    @property
    def prefs(self) -> UserPreferences:
        body = self.store.state.prefs
        return UserPreferences.from_body(body) if body else UserPreferences()

    def set_prefs(self, prefs: UserPreferences, now: datetime | None = None) -> None:
        prefs.validate()
        with self._lock:
            self.store.set_prefs(prefs.to_body(), at=now or self.now())

    def event(self, event_id: str) -> dict | None:
        return self.store.state.events.get(event_id)

    def _event_record(self, candidate: EventCandidate, priority: PriorityLevel,
                      notifications: list[Notification]) -> dict:
        body = candidate.to_body()
        body["priority"] = priority.value
        body["notifications"] = [n.to_body() for n in notifications]
        return body

    # -- ingest and scan --------------------------------------------------

    def ingest_text(
        self,
        content: str,
        fmt: str,
        chat_id: str = "",
        is_group: bool = False,
        date_order: str | None = None,
        now: datetime | None = None,
    ) -> tuple[int, list[tuple[int, str]]]:
        """Parse raw export content and append unseen messages."""
        if fmt == "whatsapp":
            messages = parse_whatsapp_export(
                content, chat_id, is_group, date_order or self.date_order
            )
            skipped: list[tuple[int, str]] = []
        elif fmt == "jsonl":
            messages, skipped = parse_jsonl_messages(content)
        else:
            raise ValueError(f"unknown format {fmt!r}")
        at = now or self.now()
        with self._lock:
            new = 0
            for message in messages:
                if self.store.has_message(message.id):
                    continue
                self.store.append_message(message.to_body(), at=at)
                new += 1
        return new, skipped

    def _classify_candidate(self, candidate: EventCandidate, now: datetime) -> PriorityLevel:
        vector = featurize(candidate, self.prefs, now)
        try:
            priority, _ = classify(self.model, vector)
        except EmptyModelError:
            priority = cold_start_priority(candidate.occurs_at - now)
        return priority

    def run_scan(self, now: datetime | None = None) -> ScanResult:
        """Extract events from messages not seen by a previous scan.

        Re-running is harmless: candidates are content-addressed, so an
        already-known event id is skipped without touching its plan.
        """
        now = now or self.now()
        result = ScanResult()
        with self._lock:
            messages = list(self.store.state.messages.values())
            fresh = messages[self._scanned_messages :]
            for body in fresh:
                message = ChatMessage.from_body(body)
                extraction = extract_message(
                    message,
                    date_order=self.date_order,
                    default_time=self.default_time,
                )
                for warning in extraction.warnings:
                    # a rescan after restart revisits old messages; identical
                    # warnings must not pile up in the log
                    if warning in self.store.state.warnings:
                        continue
                    self.store.add_warning(warning, at=now)
                    result.warnings += 1
                for candidate in extraction.candidates:
                    if candidate.id in self.store.state.events:
                        continue
                    priority = self._classify_candidate(candidate, now)
                    plan = plan_notifications(candidate, priority, now, self.prefs)
                    self.store.upsert_event(self._event_record(candidate, priority, plan), at=now)
                    result.new_events.append(candidate)
                    result.planned.extend(plan)
            self._scanned_messages = len(messages)
        return result

    # -- delivery ---------------------------------------------------------

    def tick(self, now: datetime | None = None) -> list[Notification]:
        """Deliver everything due. Sink failure leaves a notification
        pending for the next tick; the store is only touched on success."""
        now = now or self.now()
        delivered: list[Notification] = []
        with self._lock:
            for event_body in list(self.store.state.events.values()):
                candidate = EventCandidate.from_body(event_body)
                notifications = [
                    Notification.from_body(b) for b in event_body.get("notifications", [])
                ]
                changed = False
                for notification in notifications:
                    if notification.state != NOTIF_PENDING or notification.fire_at > now:
                        continue
                    try:
                        for sink in self.sinks:
                            sink(notification, candidate)
                    except SinkFailure:
                        continue  # stays pending; retried next tick
                    notification.state = NOTIF_DELIVERED
                    delivered.append(notification)
                    changed = True
                if changed:
                    # state is only updated through the store fold, so build
                    # a fresh body rather than editing the snapshot in place
                    updated = dict(event_body)
                    updated["notifications"] = [n.to_body() for n in notifications]
                    self.store.upsert_event(updated, at=now)
        return delivered

    def list_notifications(self, state: str | None = None) -> list[tuple[Notification, dict]]:
        """Notifications with their event bodies, ordered by fire time.

        state="pending" is the pinned view: pending plus delivered-but-not-
        acknowledged. state="delivered" narrows to delivered only.
        """
        rows: list[tuple[Notification, dict]] = []
        for event_body in self.store.state.events.values():
            for notif_body in event_body.get("notifications", []):
                notification = Notification.from_body(notif_body)
                if state == "pending" and notification.state == NOTIF_ACKNOWLEDGED:
                    continue
                if state == "delivered" and notification.state != NOTIF_DELIVERED:
                    continue
                rows.append((notification, event_body))
        rows.sort(key=lambda row: (row[0].fire_at, row[0].id))
        return rows

    def list_events(
        self,
        occurs_from: datetime | None = None,
        occurs_to: datetime | None = None,
        status: str | None = None,
    ) -> list[dict]:
        out = []
        for body in self.store.state.events.values():
            occurs_at = parse_minute(body["occurs_at"])
            if occurs_from is not None and occurs_at < occurs_from:
                continue
            if occurs_to is not None and occurs_at > occurs_to:
                continue
            if status is not None and body.get("status") != status:
                continue
            out.append(body)
        out.sort(key=lambda b: (b["occurs_at"], b["id"]))
        return out

    # -- user actions -----------------------------------------------------

    def acknowledge(self, target: str, now: datetime | None = None) -> None:
        """Ack one notification or, given an event id, the whole event."""
        with self._lock:
            self.store.record_ack(target, at=now or self.now())

    def apply_feedback(
        self, event_id: str, label: PriorityLevel, now: datetime | None = None
    ) -> dict:
        """Record a correction, teach the model, re-plan future reminders.

        The event takes the user's label immediately. Already-fired
        notifications stay untouched; pending ones are replaced by the new
        priority's schedule.
        """
        now = now or self.now()
        with self._lock:
            event_body = self.store.state.events.get(event_id)
            if event_body is None:
                raise UnknownIdError(f"no event with id {event_id!r}")
            if event_body.get("status") != STATUS_ACTIVE:
                raise EventNotActiveError(f"event {event_id} is {event_body.get('status')}")

            candidate = EventCandidate.from_body(event_body)
            example = knn.add_feedback(self.model, candidate, self.prefs, now, label)
            self.store.append_feedback(
                {
                    "vector": list(example.vector.as_tuple()),
                    "label": label.value,
                    "origin": "feedback",
                    "event_id": event_id,
                },
                at=now,
            )

            old_priority = PriorityLevel.from_str(event_body["priority"])
            if label != old_priority:
                fired = [
                    Notification.from_body(b)
                    for b in event_body.get("notifications", [])
                    if b["state"] != NOTIF_PENDING
                ]
                fired_ids = {n.id for n in fired}
                has_detection = any(n.kind == KIND_DETECTION for n in fired)
                fresh = [
                    n
                    for n in plan_notifications(candidate, label, now, self.prefs)
                    if n.id not in fired_ids and not (has_detection and n.kind == KIND_DETECTION)
                ]
                merged = fired + fresh
                merged.sort(key=lambda n: (n.fire_at, n.kind != KIND_DETECTION))
                updated = dict(event_body)
                updated["priority"] = label.value
                updated["notifications"] = [n.to_body() for n in merged]
                self.store.upsert_event(updated, at=now)
            return self.store.state.events[event_id]

    # -- wiring -----------------------------------------------------------

    def close(self) -> None:
        self.store.close()

    def __enter__(self) -> "NotifierService":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def open_service(store_path: str | None = None, **kwargs) -> NotifierService:
    """Open the store named by EVENT_STORE_PATH (or the given path)."""
    path = store_path or os.environ.get("EVENT_STORE_PATH", "events.jsonl")
    return NotifierService(EventStore(path), **kwargs)
