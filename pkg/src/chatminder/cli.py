"""Command line entry points.

The store path comes from --store, the EVENT_STORE_PATH environment
variable, or ./events.jsonl, in that order. A webhook sink is attached
automatically when WEBHOOK_URL is set.
"""

from __future__ import annotations

import argparse
import os
import sys
import threading
import time

from .ingest import EmptyInputError, format_minute, parse_minute
from .knn import DatasetTooSmallError, evaluate_split, load_dataset
from .notify import NotifierService
from .store import EventStore, StoreError, UnknownIdError

PRIORITY_COLUMNS = ("High", "Medium", "Low")


def _store_path(args) -> str:
    return args.store or os.environ.get("EVENT_STORE_PATH", "events.jsonl")


def _service(args) -> NotifierService:
    return NotifierService(EventStore(_store_path(args)))


def _parse_now(value: str | None):
    return parse_minute(value) if value else None


def cmd_ingest(args) -> int:
    with open(args.path, "r", encoding="utf-8") as fh:
        content = fh.read()
    service = _service(args)
    try:
        new, skipped = service.ingest_text(
            content,
            args.format,
            chat_id=args.chat_id,
            is_group=args.group,
            date_order=args.date_order,
        )
    except EmptyInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        service.close()
    for line, reason in skipped:
        print(f"skipped line {line}: {reason}", file=sys.stderr)
    print(f"ingested {new} new message(s), skipped {len(skipped)} line(s)")
    return 0


def cmd_scan(args) -> int:
    service = _service(args)
    try:
        result = service.run_scan(_parse_now(args.now))
    finally:
        service.close()
    print(
        f"scan found {len(result.new_events)} new event(s), "
        f"planned {len(result.planned)} notification(s)"
    )
    for candidate in result.new_events:
        print(f"  {candidate.id} {candidate.event_type} at {format_minute(candidate.occurs_at)}")
    return 0


def cmd_list_events(args) -> int:
    service = _service(args)
    try:
        events = service.list_events(
            _parse_now(getattr(args, "from")), _parse_now(args.to), args.status
        )
    finally:
        service.close()
    if not events:
        print("no events")
        return 0
    for body in events:
        pct = int(round(body["confidence"] * 100))
        print(
            f"{body['id']}  {body['occurs_at']}  [{body['priority']}] "
            f"{body['event_type']}  ({body['status']}, {pct}% confidence, from {body['sender']})"
        )
    return 0


def cmd_notify_tick(args) -> int:
    service = _service(args)
    try:
        delivered = service.tick(_parse_now(args.now))
    finally:
        service.close()
    print(f"delivered {len(delivered)} notification(s)")
    return 0


def cmd_ack(args) -> int:
    service = _service(args)
    try:
        service.acknowledge(args.id)
    except UnknownIdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        service.close()
    print(f"acknowledged {args.id}")
    return 0


def cmd_eval(args) -> int:
    try:
        dataset = load_dataset(args.dataset)
        result = evaluate_split(dataset, k=args.k, seed=args.seed)
    except DatasetTooSmallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"examples {len(dataset)} train {result.n_train} test {result.n_test}")
    print(f"accuracy {result.accuracy:.6f}")
    print("confusion rows=actual cols=predicted order High,Medium,Low")
    for actual in PRIORITY_COLUMNS:
        row = result.confusion[actual]
        print(f"{actual:<6} " + " ".join(f"{row[p]:>4}" for p in PRIORITY_COLUMNS))
    return 0


def cmd_compact(args) -> int:
    with EventStore(_store_path(args)) as store:
        kept = store.compact()
    print(f"compacted to {kept} record(s)")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    service = _service(args)
    app = create_app(service, ui_dir=args.ui_dir)

    if args.tick_interval > 0:
        def ticker() -> None:
            while True:
                time.sleep(args.tick_interval)
                try:
                    service.tick()
                except StoreError as exc:
                    print(f"tick failed: {exc}", file=sys.stderr)

        threading.Thread(target=ticker, daemon=True).start()

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chatminder",
        description="Mine chat exports for upcoming events and schedule pinned reminders.",
    )
    parser.add_argument("--store", help="path to the event log (default: $EVENT_STORE_PATH or ./events.jsonl)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a chat export and append new messages")
    p.add_argument("path")
    p.add_argument("--format", choices=("whatsapp", "jsonl"), required=True)
    p.add_argument("--chat-id", default="", help="chat id recorded on every message")
    p.add_argument("--group", action="store_true", help="mark the chat as a group chat")
    p.add_argument("--date-order", choices=("dmy", "mdy"), default="dmy")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("scan", help="extract event candidates from unscanned messages")
    p.add_argument("--now", help="ISO timestamp to scan against (testing aid)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("list-events", help="list known events")
    p.add_argument("--from", dest="from", default=None, metavar="ISO")
    p.add_argument("--to", default=None, metavar="ISO")
    p.add_argument("--status", choices=("active", "acknowledged", "expired"), default=None)
    p.set_defaults(func=cmd_list_events)

    p = sub.add_parser("notify-tick", help="deliver all due notifications once")
    p.add_argument("--now", help="ISO timestamp to tick at (testing aid)")
    p.set_defaults(func=cmd_notify_tick)

    p = sub.add_parser("ack", help="acknowledge a notification or event by id")
    p.add_argument("id")
    p.set_defaults(func=cmd_ack)

    p = sub.add_parser("eval", help="70/30 split evaluation over a labelled dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compact", help="rewrite the log keeping only live records")
    p.set_defaults(func=cmd_compact)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui-dir", default=None, help="static dashboard build to mount at /ui/")
    p.add_argument("--tick-interval", type=float, default=60.0,
                   help="seconds between delivery ticks; 0 disables the loop")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
