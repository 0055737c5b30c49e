"""Temporal expression grammar: scan token streams, resolve to timestamps.

The grammar is a closed list of date and time shapes people actually type in
chats ("1 august", "1/8", "next friday", "6pm", "10 in the morning",
"tomorrow at 5"). Resolution is future-biased: a yearless date means its next
occurrence on or after the reference moment, because an invitation talks
about something upcoming.
"""

from __future__ import annotations

import calendar
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from functools import lru_cache
from pathlib import Path

from .textpipe import Token

DATA_DIR = Path(__file__).parent / "data"

ORDINAL_SUFFIXES = ("st", "nd", "rd", "th")
DAYPARTS = ("morning", "afternoon", "evening", "night")

# Days a (day, month) pair may carry regardless of year; February admits 29
# here and the leap check happens at resolution.
MONTH_MAX_DAY = {1: 31, 2: 29, 3: 31, 4: 30, 5: 31, 6: 30, 7: 31, 8: 31, 9: 30, 10: 31, 11: 30, 12: 31}

DEFAULT_EVENT_TIME = (9, 0)

# How many years ahead a yearless date may land; 8 covers the leap cycle.
YEAR_SEARCH_SPAN = 8


class TemporalError(Exception):
    pass


class InvalidDateError(TemporalError):
    """The expression names a calendar date that does not exist."""


class UnresolvableTimeError(TemporalError):
    """The expression names an hour its daypart cannot hold."""


@lru_cache(maxsize=4)
def _load_name_table(filename: str) -> dict[str, int]:
    table = {}
    for line in (DATA_DIR / filename).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, _, num = line.partition("\t")
        table[name] = int(num)
    return table


def month_names() -> dict[str, int]:
    return _load_name_table("month_names.tsv")


def weekday_names() -> dict[str, int]:
    return _load_name_table("weekday_names.tsv")


@lru_cache(maxsize=1)
def month_render_names() -> dict[int, str]:
    # full names only, for rendering resolved dates back to text
    out: dict[int, str] = {}
    for name, num in month_names().items():
        if num not in out or len(name) > len(out[num]):
            out[num] = name
    return out


@dataclass
class DateExpr:
    """A date shape; only the fields its kind needs are set."""

    kind: str  # absolute_dm | numeric_slash | relative_day | weekday
    token_span: tuple[int, int]
    day: int | None = None
    month: int | None = None
    year: int | None = None
    offset_days: int | None = None
    weekday: int | None = None


@dataclass
class TimeExpr:
    raw_hour: int
    minute: int
    daypart: str  # am | pm | morning | afternoon | evening | night | none
    token_span: tuple[int, int]


@dataclass
class TemporalExpr:
    token_span: tuple[int, int]
    date: DateExpr | None = None
    time: TimeExpr | None = None
    resolved_at: datetime | None = None
    time_defaulted: bool = field(default=False)


def _sep_char(tokens: list[Token], sentences: list[str], i: int, j: int) -> str | None:
    """The single character between adjacent tokens i and j, if exactly one."""
    a, b = tokens[i], tokens[j]
    if a.sentence_index != b.sentence_index:
        return None
    if b.char_span[0] - a.char_span[1] != 1:
        return None
    return sentences[a.sentence_index][a.char_span[1]]


class _Scanner:
    def __init__(self, tokens: list[Token], sentences: list[str], date_order: str = "dmy"):
        self.tokens = tokens
        self.sentences = sentences
        self.date_order = date_order
        self.months = month_names()
        self.weekdays = weekday_names()

    def _same_sentence(self, i: int, j: int) -> bool:
        return self.tokens[i].sentence_index == self.tokens[j].sentence_index

    def _surf(self, i: int) -> str | None:
        if 0 <= i < len(self.tokens):
            return self.tokens[i].surface
        return None

    def _num(self, i: int) -> int | None:
        s = self._surf(i)
        if s is not None and s.isdigit():
            return int(s)
        return None

    def match_date(self, i: int) -> DateExpr | None:
        tokens = self.tokens
        if i >= len(tokens):
            return None

        def ok_span(j: int) -> bool:
            # multi-token matches must not cross a sentence boundary
            return j < len(tokens) and self._same_sentence(i, j)

        s0 = self._surf(i)
        n0 = self._num(i)

        # day after tomorrow / tomorrow / today
        if s0 == "day" and ok_span(i + 2) and self._surf(i + 1) == "after" and self._surf(i + 2) == "tomorrow":
            return DateExpr(kind="relative_day", offset_days=2, token_span=(i, i + 3))
        if s0 == "today":
            return DateExpr(kind="relative_day", offset_days=0, token_span=(i, i + 1))
        if s0 == "tomorrow":
            return DateExpr(kind="relative_day", offset_days=1, token_span=(i, i + 1))

        # [next] weekday
        if s0 == "next" and ok_span(i + 1) and self._surf(i + 1) in self.weekdays:
            return DateExpr(kind="weekday", weekday=self.weekdays[self._surf(i + 1)], token_span=(i, i + 2))
        if s0 in self.weekdays:
            return DateExpr(kind="weekday", weekday=self.weekdays[s0], token_span=(i, i + 1))

        # day ordinal month ("1st august")
        if (
            n0 is not None
            and ok_span(i + 2)
            and self._surf(i + 1) in ORDINAL_SUFFIXES
            and self._surf(i + 2) in self.months
        ):
            month = self.months[self._surf(i + 2)]
            if 1 <= n0 <= MONTH_MAX_DAY[month]:
                return DateExpr(kind="absolute_dm", day=n0, month=month, token_span=(i, i + 3))

        # day month ("1 august")
        if n0 is not None and ok_span(i + 1) and self._surf(i + 1) in self.months:
            month = self.months[self._surf(i + 1)]
            if 1 <= n0 <= MONTH_MAX_DAY[month]:
                return DateExpr(kind="absolute_dm", day=n0, month=month, token_span=(i, i + 2))

        # month day ("august 1")
        if s0 in self.months and ok_span(i + 1):
            day = self._num(i + 1)
            month = self.months[s0]
            if day is not None and 1 <= day <= MONTH_MAX_DAY[month]:
                return DateExpr(kind="absolute_dm", day=day, month=month, token_span=(i, i + 2))

        # d/m or d/m/y
        if n0 is not None and ok_span(i + 1) and _sep_char(tokens, self.sentences, i, i + 1) == "/":
            n1 = self._num(i + 1)
            if n1 is not None:
                first, second = n0, n1
                day, month = (first, second) if self.date_order == "dmy" else (second, first)
                year = None
                end = i + 2
                if ok_span(i + 2) and _sep_char(tokens, self.sentences, i + 1, i + 2) == "/":
                    n2 = self._num(i + 2)
                    if n2 is not None:
                        year = n2 + 2000 if n2 < 100 else n2
                        end = i + 3
                if 1 <= month <= 12 and 1 <= day <= MONTH_MAX_DAY[month]:
                    return DateExpr(
                        kind="numeric_slash", day=day, month=month, year=year, token_span=(i, end)
                    )

        return None

    def match_time(self, i: int) -> TimeExpr | None:
        tokens = self.tokens
        if i >= len(tokens):
            return None

        def ok_span(j: int) -> bool:
            return j < len(tokens) and self._same_sentence(i, j)

        s0 = self._surf(i)
        if s0 == "noon":
            return TimeExpr(raw_hour=12, minute=0, daypart="none", token_span=(i, i + 1))
        if s0 == "midnight":
            return TimeExpr(raw_hour=0, minute=0, daypart="none", token_span=(i, i + 1))

        n0 = self._num(i)
        if n0 is None:
            return None

        candidates: list[TimeExpr] = []

        # h:mm with optional am/pm
        if (
            ok_span(i + 1)
            and _sep_char(tokens, self.sentences, i, i + 1) == ":"
            and self._surf(i + 1) is not None
            and len(self._surf(i + 1)) == 2
            and self._surf(i + 1).isdigit()
        ):
            minute = int(self._surf(i + 1))
            if minute <= 59:
                if ok_span(i + 2) and self._surf(i + 2) in ("am", "pm"):
                    if 1 <= n0 <= 12:
                        candidates.append(
                            TimeExpr(raw_hour=n0, minute=minute, daypart=self._surf(i + 2), token_span=(i, i + 3))
                        )
                if n0 <= 23:
                    candidates.append(TimeExpr(raw_hour=n0, minute=minute, daypart="none", token_span=(i, i + 2)))

        # h am / h pm
        if ok_span(i + 1) and self._surf(i + 1) in ("am", "pm") and 1 <= n0 <= 12:
            candidates.append(TimeExpr(raw_hour=n0, minute=0, daypart=self._surf(i + 1), token_span=(i, i + 2)))

        # h [in the] daypart
        if n0 <= 23:
            j = i + 1
            if ok_span(i + 2) and self._surf(i + 1) == "in" and self._surf(i + 2) == "the":
                j = i + 3
            if j < len(tokens) and self._same_sentence(i, j) and self._surf(j) in DAYPARTS:
                candidates.append(TimeExpr(raw_hour=n0, minute=0, daypart=self._surf(j), token_span=(i, j + 1)))

        if not candidates:
            return None
        return max(candidates, key=lambda t: t.token_span[1])

    def match_bare_hour(self, i: int) -> TimeExpr | None:
        # Only legal straight after "DATE at": "tomorrow at 5".
        n0 = self._num(i)
        if n0 is not None and 0 <= n0 <= 23 and len(self._surf(i)) <= 2:
            return TimeExpr(raw_hour=n0, minute=0, daypart="none", token_span=(i, i + 1))
        return None

    def match_at(self, i: int) -> TemporalExpr | None:
        """Longest date/time/combined expression starting at token i."""
        best: TemporalExpr | None = None

        def consider(expr: TemporalExpr) -> None:
            nonlocal best
            if best is None or expr.token_span[1] > best.token_span[1]:
                best = expr

        d = self.match_date(i)
        if d is not None:
            consider(TemporalExpr(token_span=d.token_span, date=d))
            j = d.token_span[1]
            k = j
            explicit_at = False
            if j < len(self.tokens) and self._same_sentence(i, j) and self._surf(j) == "at":
                k = j + 1
                explicit_at = True
            if k < len(self.tokens) and self._same_sentence(i, k):
                t = self.match_time(k)
                if t is None and explicit_at:
                    t = self.match_bare_hour(k)
                if t is not None:
                    consider(TemporalExpr(token_span=(i, t.token_span[1]), date=d, time=t))

        t0 = self.match_time(i)
        if t0 is not None:
            consider(TemporalExpr(token_span=t0.token_span, time=t0))
            j = t0.token_span[1]
            k = j
            if j < len(self.tokens) and self._same_sentence(i, j) and self._surf(j) == "on":
                k = j + 1
            if k < len(self.tokens) and self._same_sentence(i, k):
                d2 = self.match_date(k)
                if d2 is not None:
                    consider(TemporalExpr(token_span=(i, d2.token_span[1]), time=t0, date=d2))

        return best


def scan_temporal(
    tokens: list[Token], sentences: list[str], date_order: str = "dmy"
) -> list[TemporalExpr]:
    """Left-to-right longest-match scan; matches never overlap."""
    scanner = _Scanner(tokens, sentences, date_order)
    out: list[TemporalExpr] = []
    i = 0
    while i < len(tokens):
        expr = scanner.match_at(i)
        if expr is not None:
            out.append(expr)
            i = expr.token_span[1]
        else:
            i += 1
    return out


def _first_valid_date(day: int, month: int, start_year: int, not_before: date) -> date | None:
    for year in range(start_year, start_year + YEAR_SEARCH_SPAN + 1):
        if day > calendar.monthrange(year, month)[1]:
            continue
        candidate = date(year, month, day)
        if candidate >= not_before:
            return candidate
    return None


def resolve_date(expr: DateExpr, reference: datetime) -> date:
    """Resolve a date expression against a reference; future-biased.

    Yearless dates land on their earliest occurrence on or after the
    reference date (today counts). A bare weekday means the next strictly
    future one, so naming today's weekday points a week out.
    """
    ref_day = reference.date()
    if expr.kind in ("absolute_dm", "numeric_slash"):
        assert expr.day is not None and expr.month is not None
        if expr.year is not None:
            try:
                return date(expr.year, expr.month, expr.day)
            except ValueError:
                raise InvalidDateError(f"{expr.day}/{expr.month}/{expr.year} does not exist")
        found = _first_valid_date(expr.day, expr.month, ref_day.year, ref_day)
        if found is None:
            raise InvalidDateError(f"{expr.day}/{expr.month} has no upcoming occurrence")
        return found
    if expr.kind == "relative_day":
        assert expr.offset_days is not None
        return ref_day + timedelta(days=expr.offset_days)
    if expr.kind == "weekday":
        assert expr.weekday is not None
        for delta in range(1, 8):
            candidate = ref_day + timedelta(days=delta)
            if candidate.weekday() == expr.weekday:
                return candidate
    raise InvalidDateError(f"unknown date kind {expr.kind!r}")


def resolve_hour(time: TimeExpr) -> int:
    """Map (raw_hour, daypart) to a 24h hour."""
    raw = time.raw_hour
    part = time.daypart
    if part == "am":
        return raw % 12
    if part in ("pm", "afternoon", "evening"):
        return (raw % 12) + 12
    if part == "morning":
        if raw > 12:
            raise UnresolvableTimeError(f"{raw} in the morning")
        return raw
    if part == "night":
        return 0 if raw == 12 else (raw % 12) + 12
    return raw  # 24h clock, as written


def _is_reresolvable(d: DateExpr) -> bool:
    # date shapes without a pinned year can roll to the next occurrence
    return d.kind == "absolute_dm" or (d.kind == "numeric_slash" and d.year is None) or d.kind == "weekday"


def resolve_datetime(
    expr: TemporalExpr,
    reference: datetime,
    default_time: tuple[int, int] = DEFAULT_EVENT_TIME,
) -> datetime:
    """Resolve a scanned expression to a concrete timestamp.

    Missing time defaults (09:00 unless configured otherwise). Missing date
    means today if the time is still ahead of the reference, else tomorrow.
    When a flexible date resolves to today but its stated time has already
    passed, the date rolls to the next occurrence; a defaulted time instead
    clamps to the reference so same-day mentions surface immediately. Dates
    pinned to an earlier day stay in the past for the caller to discard.
    """
    if expr.time is not None:
        hour = resolve_hour(expr.time)
        minute = expr.time.minute
        defaulted = False
    else:
        hour, minute = default_time
        defaulted = True
    expr.time_defaulted = defaulted

    if expr.date is None:
        candidate = reference.replace(hour=hour, minute=minute, second=0, microsecond=0)
        if candidate < reference:
            candidate += timedelta(days=1)
        return candidate

    resolved_day = resolve_date(expr.date, reference)
    combined = datetime(resolved_day.year, resolved_day.month, resolved_day.day, hour, minute)
    if combined >= reference:
        return combined
    if defaulted and resolved_day == reference.date():
        return reference
    if not defaulted and _is_reresolvable(expr.date):
        if expr.date.kind == "weekday":
            bumped = resolved_day + timedelta(days=7)
        else:
            assert expr.date.day is not None and expr.date.month is not None
            bumped = _first_valid_date(
                expr.date.day, expr.date.month, resolved_day.year + 1, resolved_day + timedelta(days=1)
            )
            if bumped is None:
                raise InvalidDateError(f"{expr.date.day}/{expr.date.month} has no upcoming occurrence")
        return datetime(bumped.year, bumped.month, bumped.day, hour, minute)
    return combined  # explicit past date; the caller decides what to drop


def render_day_month(d: date) -> str:
    """Render a date as grammar-compatible text, e.g. "1 august"."""
    return f"{d.day} {month_render_names()[d.month]}"
