import json
import re

import pytest

from chatminder.cli import build_parser, main
from chatminder.knn import DATA_DIR
from chatminder.store import replay

EXPORT = """\
01/07/2023, 09:32 - Priya: I am inviting you to my brother's wedding which is on 1 August
01/07/2023, 09:33 - Priya: The reception starts at 6 pm and the marriage starts at 10 in the morning.
01/07/2023, 09:40 - Me: Congratulations! I will be there
"""

SEEDS = str(DATA_DIR / "seed_examples.jsonl")


@pytest.fixture(autouse=True)
def no_webhook(monkeypatch):
    monkeypatch.delenv("WEBHOOK_URL", raising=False)


@pytest.fixture
def export_file(tmp_path):
    path = tmp_path / "chat.txt"
    path.write_text(EXPORT, encoding="utf-8")
    return path


def run(store, *argv):
    return main(["--store", str(store), *argv])


class TestIngest:
    def test_whatsapp_file(self, store_path, export_file, capsys):
        code = run(store_path, "ingest", str(export_file), "--format", "whatsapp", "--chat-id", "priya")
        assert code == 0
        assert "ingested 3 new message(s)" in capsys.readouterr().out
        assert len(replay(store_path).messages) == 3

    def test_reingest_counts_zero(self, store_path, export_file, capsys):
        run(store_path, "ingest", str(export_file), "--format", "whatsapp", "--chat-id", "priya")
        run(store_path, "ingest", str(export_file), "--format", "whatsapp", "--chat-id", "priya")
        assert "ingested 0 new message(s)" in capsys.readouterr().out

    def test_jsonl_skips_reported_on_stderr(self, store_path, tmp_path, capsys):
        path = tmp_path / "rows.jsonl"
        path.write_text(
            '{"chat_id": "c", "sender": "A", "sent_at": "2023-07-01T09:00", "text": "hi", "is_group": false}\n'
            "broken\n",
            encoding="utf-8",
        )
        code = run(store_path, "ingest", str(path), "--format", "jsonl")
        captured = capsys.readouterr()
        assert code == 0
        assert "skipped line 2" in captured.err
        assert "ingested 1 new message(s), skipped 1 line(s)" in captured.out

    def test_headerless_export_fails(self, store_path, tmp_path, capsys):
        path = tmp_path / "notes.txt"
        path.write_text("no headers at all", encoding="utf-8")
        code = run(store_path, "ingest", str(path), "--format", "whatsapp")
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_group_flag_recorded(self, store_path, export_file):
        run(store_path, "ingest", str(export_file), "--format", "whatsapp", "--chat-id", "fam", "--group")
        assert all(m["is_group"] for m in replay(store_path).messages.values())


class TestScanAndList:
    def _loaded(self, store_path, export_file):
        run(store_path, "ingest", str(export_file), "--format", "whatsapp", "--chat-id", "priya")

    def test_scan_prints_new_events(self, store_path, export_file, capsys):
        self._loaded(store_path, export_file)
        code = run(store_path, "scan", "--now", "2023-07-01T10:00")
        out = capsys.readouterr().out
        assert code == 0
        assert "scan found 3 new event(s)" in out
        for name in ("wedding", "reception", "marriage"):
            assert name in out

    def test_list_events_table(self, store_path, export_file, capsys):
        self._loaded(store_path, export_file)
        run(store_path, "scan", "--now", "2023-07-01T10:00")
        capsys.readouterr()
        code = run(store_path, "list-events")
        out = capsys.readouterr().out
        assert code == 0
        assert out.count("\n") == 3
        assert "[High" in out or "[Medium" in out or "[Low" in out
        assert "active" in out

    def test_list_events_window(self, store_path, export_file, capsys):
        self._loaded(store_path, export_file)
        run(store_path, "scan", "--now", "2023-07-01T10:00")
        capsys.readouterr()
        run(store_path, "list-events", "--from", "2023-08-01T00:00")
        out = capsys.readouterr().out
        assert "wedding" in out and "reception" not in out

    def test_list_events_empty(self, store_path, capsys):
        run(store_path, "list-events")
        assert "no events" in capsys.readouterr().out


class TestTickAndAck:
    def _scanned(self, store_path, export_file):
        run(store_path, "ingest", str(export_file), "--format", "whatsapp", "--chat-id", "priya")
        run(store_path, "scan", "--now", "2023-07-01T10:00")

    def test_tick_delivers_detections(self, store_path, export_file, capsys):
        self._scanned(store_path, export_file)
        capsys.readouterr()
        code = run(store_path, "notify-tick", "--now", "2023-07-01T10:00")
        out = capsys.readouterr().out
        assert code == 0
        assert "delivered 3 notification(s)" in out
        assert out.count("NOTIFY") == 3

    def test_tick_idempotent(self, store_path, export_file, capsys):
        self._scanned(store_path, export_file)
        run(store_path, "notify-tick", "--now", "2023-07-01T10:00")
        capsys.readouterr()
        run(store_path, "notify-tick", "--now", "2023-07-01T10:00")
        assert "delivered 0 notification(s)" in capsys.readouterr().out

    def test_ack_event(self, store_path, export_file, capsys):
        self._scanned(store_path, export_file)
        event_id = next(iter(replay(store_path).events))
        capsys.readouterr()
        code = run(store_path, "ack", event_id)
        assert code == 0
        assert f"acknowledged {event_id}" in capsys.readouterr().out
        assert replay(store_path).events[event_id]["status"] == "acknowledged"

    def test_ack_unknown(self, store_path, capsys):
        code = run(store_path, "ack", "ghost")
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestEval:
    def test_eval_on_seed_dataset(self, store_path, capsys):
        code = run(store_path, "eval", "--dataset", SEEDS, "--k", "5", "--seed", "0")
        out = capsys.readouterr().out
        assert code == 0
        assert "examples 30 train 21 test 9" in out
        assert re.search(r"^accuracy \d\.\d{6}$", out, re.MULTILINE)
        for label in ("High", "Medium", "Low"):
            assert re.search(rf"^{label}\s+\d+\s+\d+\s+\d+$", out, re.MULTILINE)

    def test_eval_deterministic(self, store_path, capsys):
        run(store_path, "eval", "--dataset", SEEDS, "--seed", "7")
        first = capsys.readouterr().out
        run(store_path, "eval", "--dataset", SEEDS, "--seed", "7")
        assert capsys.readouterr().out == first

    def test_eval_small_dataset_fails(self, store_path, tmp_path, capsys):
        path = tmp_path / "tiny.jsonl"
        rows = [{"v": [0.5] * 5, "label": "Low"}] * 9
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
        code = run(store_path, "eval", "--dataset", str(path))
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestCompact:
    def test_compact_shrinks_log(self, store_path, export_file, capsys):
        run(store_path, "ingest", str(export_file), "--format", "whatsapp", "--chat-id", "priya")
        run(store_path, "scan", "--now", "2023-07-01T10:00")
        run(store_path, "notify-tick", "--now", "2023-07-01T10:00")
        lines_before = store_path.read_text().count("\n")
        capsys.readouterr()
        code = run(store_path, "compact")
        assert code == 0
        assert "compacted to 6 record(s)" in capsys.readouterr().out
        assert store_path.read_text().count("\n") == 6 < lines_before


class TestStorePathSelection:
    def test_env_var_used_without_flag(self, tmp_path, monkeypatch, export_file, capsys):
        path = tmp_path / "env_store.jsonl"
        monkeypatch.setenv("EVENT_STORE_PATH", str(path))
        code = main(["ingest", str(export_file), "--format", "whatsapp", "--chat-id", "c"])
        assert code == 0
        assert path.exists()

    def test_flag_beats_env(self, tmp_path, monkeypatch, export_file):
        monkeypatch.setenv("EVENT_STORE_PATH", str(tmp_path / "ignored.jsonl"))
        chosen = tmp_path / "chosen.jsonl"
        main(["--store", str(chosen), "ingest", str(export_file), "--format", "whatsapp"])
        assert chosen.exists()
        assert not (tmp_path / "ignored.jsonl").exists()


class TestParser:
    def test_serve_defaults(self):
        args = build_parser().parse_args(["serve"])
        assert args.port == 8000
        assert args.host == "127.0.0.1"
        assert args.tick_interval == 60.0
        assert args.ui_dir is None

    def test_command_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_ingest_format_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["ingest", "x.txt"])
