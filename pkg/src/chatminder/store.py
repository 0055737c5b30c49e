"""Append-only JSONL event log; replay is the single source of truth.

Every record is one JSON line ``{"kind": ..., "seq": ..., "at": ..., "body":
{...}}``. State is a pure fold over records in seq order, and the live store
applies the exact same fold function to each record after writing it, so an
open store and a replay of its file can never disagree.

One process owns the log at a time: opening takes an exclusive lock on the
file. Readers that only need a snapshot can call :func:`replay` directly.
"""

from __future__ import annotations

import fcntl
import json
import os
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

KIND_MESSAGE = "message"
KIND_EVENT = "event"
KIND_FEEDBACK = "feedback"
KIND_ACK = "ack"
KIND_PREF = "pref"
KIND_WARNING = "warning"

RECORD_KINDS = (KIND_MESSAGE, KIND_EVENT, KIND_FEEDBACK, KIND_ACK, KIND_PREF, KIND_WARNING)

STATUS_ACTIVE = "active"
STATUS_ACKNOWLEDGED = "acknowledged"
STATUS_EXPIRED = "expired"

NOTIF_PENDING = "pending"
NOTIF_DELIVERED = "delivered"
NOTIF_ACKNOWLEDGED = "acknowledged"


class StoreError(Exception):
    pass


class CorruptRecordError(StoreError):
    def __init__(self, line_no: int, detail: str):
        super().__init__(f"corrupt record at line {line_no}: {detail}")
        self.line_no = line_no
        self.detail = detail


class UnknownIdError(StoreError):
    pass


class StoreLockedError(StoreError):
    pass


@dataclass
class ReplayState:
    messages: dict[str, dict] = field(default_factory=dict)
    events: dict[str, dict] = field(default_factory=dict)
    examples: list[dict] = field(default_factory=list)
    prefs: dict | None = None
    warnings: list[dict] = field(default_factory=list)
    last_seq: int = 0
    dropped_tail: bool = False
    needs_repair: bool = False
    raw_lines: list[str] = field(default_factory=list)


def _apply(state: ReplayState, record: dict) -> None:
    """Fold one record into the state. Shared by replay and live appends."""
    kind = record["kind"]
    body = record["body"]
    state.last_seq = record["seq"]
    if kind == KIND_MESSAGE:
        state.messages[body["id"]] = body
    elif kind == KIND_EVENT:
        state.events[body["id"]] = body
    elif kind == KIND_FEEDBACK:
        state.examples.append(body)
    elif kind == KIND_PREF:
        state.prefs = body
    elif kind == KIND_WARNING:
        state.warnings.append(body)
    elif kind == KIND_ACK:
        _apply_ack(state, body["target"])


def _apply_ack(state: ReplayState, target: str) -> None:
    event = state.events.get(target)
    if event is not None:
        event["status"] = STATUS_ACKNOWLEDGED
        for notif in event.get("notifications", []):
            notif["state"] = NOTIF_ACKNOWLEDGED
        return
    for event in state.events.values():
        for notif in event.get("notifications", []):
            if notif["id"] == target:
                notif["state"] = NOTIF_ACKNOWLEDGED
                if all(n["state"] == NOTIF_ACKNOWLEDGED for n in event["notifications"]):
                    event["status"] = STATUS_ACKNOWLEDGED
                return
    # A well-formed log never reaches here: record_ack validates targets
    # before appending. On a foreign log we fold it as a no-op.


def _validate_record(obj: object, line_no: int, last_seq: int) -> dict:
    if not isinstance(obj, dict):
        raise CorruptRecordError(line_no, "record is not an object")
    for key in ("kind", "seq", "at", "body"):
        if key not in obj:
            raise CorruptRecordError(line_no, f"missing field {key!r}")
    if obj["kind"] not in RECORD_KINDS:
        raise CorruptRecordError(line_no, f"unknown kind {obj['kind']!r}")
    if not isinstance(obj["seq"], int) or obj["seq"] <= last_seq:
        raise CorruptRecordError(line_no, f"seq {obj['seq']!r} not increasing after {last_seq}")
    if not isinstance(obj["body"], dict):
        raise CorruptRecordError(line_no, "body is not an object")
    return obj


def replay(path: str | os.PathLike, keep_lines: bool = False) -> ReplayState:
    """Rebuild state from the log file.

    A trailing half-written line (the one a crash can leave behind) is
    dropped and flagged on the returned state; anything else malformed
    raises CorruptRecordError with its line number. ``needs_repair`` marks
    a file whose tail must be rewritten before it is safe to append to;
    with ``keep_lines`` the surviving raw lines are kept for that rewrite.
    """
    state = ReplayState()
    p = Path(path)
    if not p.exists():
        return state
    text = p.read_text(encoding="utf-8")
    terminated = text.endswith("\n")
    lines = text.split("\n")
    # a newline-terminated file yields a final empty chunk; drop it
    if lines and lines[-1] == "":
        lines.pop()
    for idx, line in enumerate(lines):
        line_no = idx + 1
        last = idx == len(lines) - 1
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            if last:
                state.dropped_tail = True
                state.needs_repair = True
                break
            raise CorruptRecordError(line_no, f"invalid JSON: {exc.msg}")
        record = _validate_record(obj, line_no, state.last_seq)
        _apply(state, record)
        if keep_lines:
            state.raw_lines.append(line)
        if last and not terminated:
            # complete record, missing its newline; appending would merge
            state.needs_repair = True
    return state


class EventStore:
    """Single-writer append log plus the in-memory state it folds to."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.path.touch(exist_ok=True)
        self._fh = open(self.path, "r+", encoding="utf-8")
        try:
            fcntl.flock(self._fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            self._fh.close()
            raise StoreLockedError(f"{self.path} is locked by another writer")
        try:
            # replay and any tail repair happen under the lock
            self._state = replay(self.path, keep_lines=True)
            if self._state.needs_repair:
                content = "".join(line + "\n" for line in self._state.raw_lines)
                self._fh.seek(0)
                self._fh.truncate()
                self._fh.write(content)
                self._fh.flush()
                os.fsync(self._fh.fileno())
                self._state.needs_repair = False
            self._state.raw_lines = []
            self._fh.seek(0, os.SEEK_END)
        except Exception:
            self._fh.close()
            raise

    # -- plumbing ---------------------------------------------------------

    @property
    def state(self) -> ReplayState:
        return self._state

    def close(self) -> None:
        if self._fh is not None:
            fcntl.flock(self._fh.fileno(), fcntl.LOCK_UN)
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "EventStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def append(self, kind: str, body: dict, at: datetime) -> int:
        """Write one record, flush it to disk, fold it into state."""
        if kind not in RECORD_KINDS:
            raise StoreError(f"unknown record kind {kind!r}")
        seq = self._state.last_seq + 1
        record = {"kind": kind, "seq": seq, "at": at.isoformat(timespec="seconds"), "body": body}
        line = json.dumps(record, ensure_ascii=False)
        self._fh.write(line + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        # fold the deserialized line so live state matches a future replay
        _apply(self._state, json.loads(line))
        return seq

    # -- typed helpers ----------------------------------------------------

    def has_message(self, message_id: str) -> bool:
        return message_id in self._state.messages

    def append_message(self, body: dict, at: datetime | None = None) -> int:
        return self.append(KIND_MESSAGE, body, at or datetime.now())

    def upsert_event(self, body: dict, at: datetime | None = None) -> bool:
        """Insert or update an event; identical bodies are skipped."""
        existing = self._state.events.get(body["id"])
        if existing == body:
            return False
        self.append(KIND_EVENT, body, at or datetime.now())
        return True

    def append_feedback(self, body: dict, at: datetime | None = None) -> int:
        return self.append(KIND_FEEDBACK, body, at or datetime.now())

    def record_ack(self, target: str, at: datetime | None = None) -> int:
        """Acknowledge an event or a single notification by id."""
        if not self._known_target(target):
            raise UnknownIdError(f"no event or notification with id {target!r}")
        return self.append(KIND_ACK, {"target": target}, at or datetime.now())

    def set_prefs(self, body: dict, at: datetime | None = None) -> int:
        return self.append(KIND_PREF, body, at or datetime.now())

    def add_warning(self, body: dict, at: datetime | None = None) -> int:
        return self.append(KIND_WARNING, body, at or datetime.now())

    def _known_target(self, target: str) -> bool:
        if target in self._state.events:
            return True
        return any(
            notif["id"] == target
            for event in self._state.events.values()
            for notif in event.get("notifications", [])
        )

    # -- maintenance ------------------------------------------------------

    def compact(self, at: datetime | None = None) -> int:
        """Rewrite the log with only live records; returns the new length.

        Acks are folded into the event bodies they touched and old event
        versions disappear. Warnings are transient and are dropped too.
        """
        at = at or datetime.now()
        records: list[tuple[str, dict]] = []
        for body in self._state.messages.values():
            records.append((KIND_MESSAGE, body))
        for body in self._state.events.values():
            records.append((KIND_EVENT, body))
        for body in self._state.examples:
            records.append((KIND_FEEDBACK, body))
        if self._state.prefs is not None:
            records.append((KIND_PREF, self._state.prefs))

        tmp_path = self.path.with_suffix(self.path.suffix + ".compact")
        with open(tmp_path, "w", encoding="utf-8") as tmp:
            for seq, (kind, body) in enumerate(records, start=1):
                record = {"kind": kind, "seq": seq, "at": at.isoformat(timespec="seconds"), "body": body}
                tmp.write(json.dumps(record, ensure_ascii=False) + "\n")
            tmp.flush()
            os.fsync(tmp.fileno())

        self.close()
        os.replace(tmp_path, self.path)
        self._state = replay(self.path)
        self._fh = open(self.path, "a", encoding="utf-8")
        fcntl.flock(self._fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        return len(records)
