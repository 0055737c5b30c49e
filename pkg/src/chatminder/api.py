"""HTTP interface over the notifier service.

All mutation goes through the same NotifierService the CLI uses; the app
object is a thin translation layer between JSON and the domain calls. The
dashboard's static build, when present, is mounted under /ui/.
"""

from __future__ import annotations

from datetime import datetime
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .ingest import EmptyInputError, parse_minute
from .knn import PriorityLevel, UserPreferences
from .notify import EventNotActiveError, NotifierService
from .store import UnknownIdError


class IngestRequest(BaseModel):
    format: Literal["whatsapp", "jsonl"]
    content: str
    chat_id: str = ""
    is_group: bool = False
    date_order: Literal["dmy", "mdy"] | None = None


class FeedbackRequest(BaseModel):
    priority: Literal["High", "Medium", "Low"]


class PreferencesBody(BaseModel):
    event_type_weights: dict[str, float] = {}
    sender_affinity: dict[str, float] = {}
    lead_schedule: dict[str, list[int]] = {}
    quiet_hours: tuple[int, int] | None = None


def _parse_query_instant(value: str | None, name: str) -> datetime | None:
    if value is None:
        return None
    try:
        return parse_minute(value)
    except ValueError:
        raise HTTPException(status_code=422, detail=f"{name} is not a valid timestamp")


def _notification_row(notification, event_body: dict) -> dict:
    row = notification.to_body()
    row["event_type"] = event_body["event_type"]
    row["occurs_at"] = event_body["occurs_at"]
    row["sender"] = event_body["sender"]
    row["participants"] = event_body["participants"]
    return row


def create_app(service: NotifierService, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="chatminder", version="0.1.0")

    @app.get("/healthz")
    def healthz() -> Response:
        return Response(content="ok", media_type="text/plain")

    @app.post("/ingest", status_code=202)
    def ingest(request: IngestRequest) -> dict:
        try:
            new, skipped = service.ingest_text(
                request.content,
                request.format,
                chat_id=request.chat_id,
                is_group=request.is_group,
                date_order=request.date_order,
            )
        except EmptyInputError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {
            "new_messages": new,
            "skipped": [{"line": line, "reason": reason} for line, reason in skipped],
        }

    @app.post("/scan")
    def scan(now: str | None = Query(default=None)) -> dict:
        result = service.run_scan(_parse_query_instant(now, "now"))
        return {
            "new_events": len(result.new_events),
            "planned": len(result.planned),
            "event_ids": [c.id for c in result.new_events],
        }

    @app.get("/events")
    def events(
        occurs_from: str | None = Query(default=None, alias="from"),
        occurs_to: str | None = Query(default=None, alias="to"),
        status: str | None = None,
    ) -> list[dict]:
        return service.list_events(
            _parse_query_instant(occurs_from, "from"),
            _parse_query_instant(occurs_to, "to"),
            status,
        )

    @app.get("/notifications")
    def notifications(state: Literal["pending", "delivered"] | None = None) -> list[dict]:
        return [_notification_row(n, body) for n, body in service.list_notifications(state)]

    @app.post("/notifications/{notification_id}/ack", status_code=204)
    def ack(notification_id: str) -> Response:
        try:
            service.acknowledge(notification_id)
        except UnknownIdError:
            raise HTTPException(status_code=404, detail="unknown notification id")
        return Response(status_code=204)

    @app.post("/events/{event_id}/feedback")
    def feedback(event_id: str, request: FeedbackRequest) -> dict:
        try:
            return service.apply_feedback(event_id, PriorityLevel.from_str(request.priority))
        except UnknownIdError:
            raise HTTPException(status_code=404, detail="unknown event id")
        except EventNotActiveError as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.get("/preferences")
    def get_preferences() -> dict:
        return service.prefs.to_body()

    @app.put("/preferences")
    def put_preferences(body: PreferencesBody) -> dict:
        prefs = UserPreferences(
            event_type_weights=body.event_type_weights,
            sender_affinity=body.sender_affinity,
            lead_schedule=body.lead_schedule,
            quiet_hours=body.quiet_hours,
        )
        try:
            service.set_prefs(prefs)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return service.prefs.to_body()

    static_dir = Path(ui_dir) if ui_dir else None
    if static_dir is not None and static_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
