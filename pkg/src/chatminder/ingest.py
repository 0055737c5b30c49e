"""Chat log ingestion: exported text archives and JSONL streams.

The text format is the familiar phone-export shape::

    01/07/2023, 14:32 - Priya: I am inviting you ...

Lines that do not start a new message continue the previous one. Header
lines without a "Sender: " part are app notices ("Messages are end-to-end
encrypted ...") and are skipped.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime

from .ids import content_hash

HEADER_RE = re.compile(
    r"^(\d{1,2})/(\d{1,2})/(\d{2,4}), (\d{1,2}):(\d{2})( [ap]m)? - ([^:]+): (.*)$"
)
HEADER_PREFIX_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{2,4}), (\d{1,2}):(\d{2})( [ap]m)? - ")

SOURCE_WHATSAPP = "whatsapp_export"
SOURCE_JSONL = "jsonl"

JSONL_REQUIRED_FIELDS = ("chat_id", "sender", "sent_at", "text", "is_group")


class IngestError(Exception):
    pass


class EmptyInputError(IngestError):
    """No message header found anywhere; almost certainly the wrong format."""


@dataclass(frozen=True)
class ChatMessage:
    id: str
    source: str
    chat_id: str
    sender: str
    sent_at: datetime
    raw_text: str
    is_group: bool

    def to_body(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "chat_id": self.chat_id,
            "sender": self.sender,
            "sent_at": format_minute(self.sent_at),
            "raw_text": self.raw_text,
            "is_group": self.is_group,
        }

    @classmethod
    def from_body(cls, body: dict) -> "ChatMessage":
        return cls(
            id=body["id"],
            source=body["source"],
            chat_id=body["chat_id"],
            sender=body["sender"],
            sent_at=parse_minute(body["sent_at"]),
            raw_text=body["raw_text"],
            is_group=body["is_group"],
        )


def format_minute(dt: datetime) -> str:
    return dt.strftime("%Y-%m-%dT%H:%M")


def parse_minute(text: str) -> datetime:
    """Parse an ISO timestamp, truncating anything below the minute."""
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is not None:
        raise ValueError("timezone-aware timestamps are not supported")
    return dt.replace(second=0, microsecond=0)


def make_message(
    *,
    source: str,
    chat_id: str,
    sender: str,
    sent_at: datetime,
    raw_text: str,
    is_group: bool,
) -> ChatMessage:
    sent_at = sent_at.replace(second=0, microsecond=0)
    msg_id = content_hash(chat_id, format_minute(sent_at), sender, raw_text)
    return ChatMessage(
        id=msg_id,
        source=source,
        chat_id=chat_id,
        sender=sender,
        sent_at=sent_at,
        raw_text=raw_text,
        is_group=is_group,
    )


def _header_datetime(match: re.Match, date_order: str) -> datetime | None:
    first, second, year = int(match.group(1)), int(match.group(2)), int(match.group(3))
    hour, minute = int(match.group(4)), int(match.group(5))
    ampm = match.group(6)
    day, month = (first, second) if date_order == "dmy" else (second, first)
    if year < 100:
        year += 2000
    if ampm is not None:
        hour = hour % 12
        if ampm.strip() == "pm":
            hour += 12
    try:
        return datetime(year, month, day, hour, minute)
    except ValueError:
        return None


def parse_whatsapp_export(
    text: str, chat_id: str, is_group: bool = False, date_order: str = "dmy"
) -> list[ChatMessage]:
    """Parse an exported chat archive into messages.

    date_order picks how the numeric date reads: "dmy" (default) or "mdy".
    Raises EmptyInputError when nothing in the input looks like a header.
    """
    if date_order not in ("dmy", "mdy"):
        raise ValueError(f"unknown date order {date_order!r}")

    messages: list[ChatMessage] = []
    current_sender: str | None = None
    current_sent: datetime | None = None
    current_lines: list[str] = []
    saw_header = False

    def finalize() -> None:
        nonlocal current_sender, current_sent
        if current_sender is None or current_sent is None:
            return
        raw = "\n".join(current_lines).strip()
        if raw:
            messages.append(
                make_message(
                    source=SOURCE_WHATSAPP,
                    chat_id=chat_id,
                    sender=current_sender,
                    sent_at=current_sent,
                    raw_text=raw,
                    is_group=is_group,
                )
            )
        current_sender = None
        current_sent = None
        current_lines.clear()

    for line in text.splitlines():
        header = HEADER_RE.match(line)
        if header is not None:
            sent = _header_datetime(header, date_order)
            if sent is None:
                continue  # header shape but an impossible date; skip the line
            finalize()
            saw_header = True
            current_sender = header.group(7)
            current_sent = sent
            current_lines.append(header.group(8))
        elif HEADER_PREFIX_RE.match(line) is not None:
            saw_header = True  # app notice line; no sender segment
        elif current_sender is not None:
            current_lines.append(line)
        # else: stray text before any header; nothing to attach it to

    finalize()
    if not saw_header:
        raise EmptyInputError("no message header found; is this really a chat export?")
    return messages


def parse_jsonl_messages(text: str) -> tuple[list[ChatMessage], list[tuple[int, str]]]:
    """Parse newline-delimited JSON messages.

    Returns (messages, skipped) where skipped holds (line_number, reason)
    for every line that failed validation. Bad lines never abort the batch.
    """
    messages: list[ChatMessage] = []
    skipped: list[tuple[int, str]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            skipped.append((lineno, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(obj, dict):
            skipped.append((lineno, "not an object"))
            continue
        missing = [k for k in JSONL_REQUIRED_FIELDS if k not in obj]
        if missing:
            skipped.append((lineno, f"missing fields: {', '.join(missing)}"))
            continue
        if not all(isinstance(obj[k], str) for k in ("chat_id", "sender", "sent_at", "text")):
            skipped.append((lineno, "chat_id, sender, sent_at and text must be strings"))
            continue
        if not isinstance(obj["is_group"], bool):
            skipped.append((lineno, "is_group must be a boolean"))
            continue
        if not obj["text"].strip():
            skipped.append((lineno, "empty text"))
            continue
        try:
            sent_at = parse_minute(obj["sent_at"])
        except ValueError as exc:
            skipped.append((lineno, f"bad sent_at: {exc}"))
            continue
        messages.append(
            make_message(
                source=SOURCE_JSONL,
                chat_id=obj["chat_id"],
                sender=obj["sender"],
                sent_at=sent_at,
                raw_text=obj["text"].strip(),
                is_group=obj["is_group"],
            )
        )
    return messages, skipped


def ingest_new(messages: list[ChatMessage], store) -> int:
    """Append messages the store has not seen; returns how many were new."""
    appended = 0
    for message in messages:
        if store.has_message(message.id):
            continue
        store.append_message(message.to_body())
        appended += 1
    return appended
