from datetime import datetime

import pytest
from fastapi.testclient import TestClient

from chatminder.api import create_app

from conftest import make_service

NOW = datetime(2023, 7, 1, 10, 0)

EXPORT = """\
01/07/2023, 09:32 - Priya: I am inviting you to my brother's wedding which is on 1 August
01/07/2023, 09:33 - Priya: The reception starts at 6 pm and the marriage starts at 10 in the morning.
01/07/2023, 09:40 - Me: Congratulations! I will be there
"""


@pytest.fixture
def service(store_path):
    s = make_service(store_path, now=NOW)
    yield s
    s.close()


@pytest.fixture
def client(service):
    return TestClient(create_app(service))


def ingest_and_scan(client):
    client.post("/ingest", json={"format": "whatsapp", "content": EXPORT, "chat_id": "priya"})
    return client.post("/scan", params={"now": "2023-07-01T10:00"}).json()


class TestHealth:
    def test_healthz(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.text == "ok"
        assert response.headers["content-type"].startswith("text/plain")


class TestIngest:
    def test_whatsapp_accepted(self, client):
        response = client.post(
            "/ingest", json={"format": "whatsapp", "content": EXPORT, "chat_id": "priya"}
        )
        assert response.status_code == 202
        assert response.json() == {"new_messages": 3, "skipped": []}

    def test_repost_is_idempotent(self, client):
        payload = {"format": "whatsapp", "content": EXPORT, "chat_id": "priya"}
        client.post("/ingest", json=payload)
        again = client.post("/ingest", json=payload)
        assert again.json()["new_messages"] == 0

    def test_jsonl_reports_skipped_lines(self, client):
        content = (
            '{"chat_id": "c", "sender": "A", "sent_at": "2023-07-01T09:00", "text": "hi", "is_group": false}\n'
            "garbage\n"
        )
        response = client.post("/ingest", json={"format": "jsonl", "content": content})
        assert response.status_code == 202
        body = response.json()
        assert body["new_messages"] == 1
        assert body["skipped"] == [{"line": 2, "reason": "invalid JSON: Expecting value"}]

    def test_wrong_format_rejected(self, client):
        response = client.post("/ingest", json={"format": "csv", "content": "x"})
        assert response.status_code == 422

    def test_headerless_export_rejected(self, client):
        response = client.post(
            "/ingest", json={"format": "whatsapp", "content": "no headers here", "chat_id": "c"}
        )
        assert response.status_code == 422


class TestScan:
    def test_scan_returns_counts_and_ids(self, client):
        body = ingest_and_scan(client)
        assert body["new_events"] == 3
        assert len(body["event_ids"]) == 3
        assert body["planned"] >= 3

    def test_rescan_finds_nothing(self, client):
        ingest_and_scan(client)
        body = client.post("/scan", params={"now": "2023-07-01T10:05"}).json()
        assert body["new_events"] == 0 and body["event_ids"] == []

    def test_bad_now_rejected(self, client):
        assert client.post("/scan", params={"now": "yesterday"}).status_code == 422

    def test_scan_without_now_uses_service_clock(self, client):
        client.post("/ingest", json={"format": "whatsapp", "content": EXPORT, "chat_id": "priya"})
        body = client.post("/scan").json()
        assert body["new_events"] == 3


class TestEvents:
    def test_listing_shape(self, client):
        ingest_and_scan(client)
        events = client.get("/events").json()
        assert len(events) == 3
        first = events[0]
        for key in ("id", "event_type", "occurs_at", "sender", "participants",
                    "confidence", "priority", "notifications", "status"):
            assert key in first
        assert [e["event_type"] for e in events] == ["marriage", "reception", "wedding"]

    def test_window_filter(self, client):
        ingest_and_scan(client)
        events = client.get(
            "/events", params={"from": "2023-07-01T00:00", "to": "2023-07-01T23:59"}
        ).json()
        assert [e["event_type"] for e in events] == ["marriage", "reception"]

    def test_status_filter(self, client):
        ingest_and_scan(client)
        event_id = client.get("/events").json()[0]["id"]
        client.post(f"/notifications/{event_id}/ack")
        active = client.get("/events", params={"status": "active"}).json()
        assert all(e["id"] != event_id for e in active)
        acked = client.get("/events", params={"status": "acknowledged"}).json()
        assert [e["id"] for e in acked] == [event_id]

    def test_bad_window_rejected(self, client):
        assert client.get("/events", params={"from": "nope"}).status_code == 422


class TestNotifications:
    def test_rows_carry_event_context(self, client):
        ingest_and_scan(client)
        rows = client.get("/notifications", params={"state": "pending"}).json()
        assert rows
        for row in rows:
            for key in ("id", "event_id", "fire_at", "kind", "priority", "state",
                        "event_type", "occurs_at", "sender", "participants"):
                assert key in row

    def test_state_filter_validated(self, client):
        assert client.get("/notifications", params={"state": "bogus"}).status_code == 422

    def test_ack_notification(self, client, service):
        ingest_and_scan(client)
        rows = client.get("/notifications").json()
        target = rows[0]["id"]
        response = client.post(f"/notifications/{target}/ack")
        assert response.status_code == 204
        left = client.get("/notifications", params={"state": "pending"}).json()
        assert target not in [r["id"] for r in left]

    def test_ack_unknown_is_404(self, client):
        assert client.post("/notifications/ghost/ack").status_code == 404

    def test_ack_whole_event(self, client):
        ingest_and_scan(client)
        event_id = client.get("/events").json()[0]["id"]
        assert client.post(f"/notifications/{event_id}/ack").status_code == 204
        rows = client.get("/notifications", params={"state": "pending"}).json()
        assert all(r["event_id"] != event_id for r in rows)


class TestFeedback:
    def test_feedback_updates_priority(self, client):
        ingest_and_scan(client)
        event = client.get("/events").json()[0]
        new_label = "Low" if event["priority"] != "Low" else "High"
        response = client.post(f"/events/{event['id']}/feedback", json={"priority": new_label})
        assert response.status_code == 200
        assert response.json()["priority"] == new_label

    def test_unknown_event_404(self, client):
        assert client.post("/events/ghost/feedback", json={"priority": "High"}).status_code == 404

    def test_acknowledged_event_409(self, client):
        ingest_and_scan(client)
        event_id = client.get("/events").json()[0]["id"]
        client.post(f"/notifications/{event_id}/ack")
        response = client.post(f"/events/{event_id}/feedback", json={"priority": "High"})
        assert response.status_code == 409

    def test_invalid_priority_rejected(self, client):
        assert client.post("/events/x/feedback", json={"priority": "Urgent"}).status_code == 422


class TestPreferences:
    def test_defaults(self, client):
        body = client.get("/preferences").json()
        assert body == {
            "event_type_weights": {},
            "sender_affinity": {},
            "lead_schedule": {},
            "quiet_hours": None,
        }

    def test_put_round_trips(self, client):
        payload = {
            "event_type_weights": {"dinner": 0.9},
            "sender_affinity": {"Priya": 0.7},
            "lead_schedule": {"High": [60, 30]},
            "quiet_hours": [22, 7],
        }
        response = client.put("/preferences", json=payload)
        assert response.status_code == 200
        assert response.json() == payload
        assert client.get("/preferences").json() == payload

    def test_put_invalid_weight_rejected(self, client):
        response = client.put("/preferences", json={"sender_affinity": {"A": 2.0}})
        assert response.status_code == 422

    def test_put_invalid_quiet_hours_rejected(self, client):
        response = client.put("/preferences", json={"quiet_hours": [25, 3]})
        assert response.status_code == 422

    def test_prefs_shape_validated(self, client):
        response = client.put("/preferences", json={"lead_schedule": {"High": "soon"}})
        assert response.status_code == 422


class TestStaticUi:
    def test_ui_served_when_built(self, service, tmp_path):
        ui = tmp_path / "dist"
        ui.mkdir()
        (ui / "index.html").write_text("<h1>dashboard</h1>", encoding="utf-8")
        client = TestClient(create_app(service, ui_dir=str(ui)))
        response = client.get("/ui/")
        assert response.status_code == 200
        assert "dashboard" in response.text

    def test_no_ui_dir_no_mount(self, client):
        assert client.get("/ui/").status_code == 404

    def test_api_works_without_ui(self, service, tmp_path):
        # missing directory is tolerated, the API still comes up
        client = TestClient(create_app(service, ui_dir=str(tmp_path / "absent")))
        assert client.get("/healthz").status_code == 200
