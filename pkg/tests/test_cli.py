import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from maad.cli import main

FIXTURES = Path(__file__).parent / "fixtures"
BOOKSTORE = FIXTURES / "bookstore"
PINNED_DIGEST = (BOOKSTORE / "pinned_digest.txt").read_text().strip()


@pytest.fixture
def runner():
    return CliRunner()


class TestRun:
    def test_non_interactive_fixture_run(self, runner, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            [
                "run",
                "--srs", str(BOOKSTORE / "srs.txt"),
                "--out", str(out),
                "--backend", f"replay:{BOOKSTORE / 'replay'}",
                "--non-interactive",
                "--data-dir", str(BOOKSTORE / "data"),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "verdict=confirmed" in result.output
        assert "rounds=2" in result.output
        assert f"digest={PINNED_DIGEST}" in result.output
        assert (out / "journal.jsonl").exists()
        assert (out / "digest.txt").read_text().strip() == PINNED_DIGEST
        package = json.loads((out / "package.json").read_text())
        assert package["verdict"] == "confirmed"

    def test_interactive_run_prompts_on_stdin(self, runner, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            [
                "run",
                "--srs", str(BOOKSTORE / "srs.txt"),
                "--out", str(out),
                "--backend", f"replay:{FIXTURES / 'bookstore_interactive' / 'replay'}",
                "--data-dir", str(BOOKSTORE / "data"),
            ],
            input="No, discounts arrive in a later release.\n",
        )
        assert result.exit_code == 0, result.output
        assert "Q-001" in result.output
        assert "verdict=confirmed" in result.output
        assert "rounds=1" in result.output

    def test_empty_srs_fails_cleanly(self, runner, tmp_path):
        empty = tmp_path / "empty.txt"
        empty.write_text("   ")
        result = runner.invoke(
            main, ["run", "--srs", str(empty), "--out", str(tmp_path / "o"), "--non-interactive"]
        )
        assert result.exit_code != 0
        assert "EmptySrs" in result.output


class TestReplayCommand:
    def test_replay_reports_the_pinned_digest(self, runner, tmp_path):
        out = tmp_path / "out"
        runner.invoke(
            main,
            [
                "run",
                "--srs", str(BOOKSTORE / "srs.txt"),
                "--out", str(out),
                "--backend", f"replay:{BOOKSTORE / 'replay'}",
                "--non-interactive",
                "--data-dir", str(BOOKSTORE / "data"),
            ],
        )
        result = runner.invoke(main, ["replay", "--journal", str(out / "journal.jsonl")])
        assert result.exit_code == 0, result.output
        assert "phase=CONFIRMED" in result.output
        assert f"digest={PINNED_DIGEST}" in result.output


class TestKnowledgeCommands:
    def test_ingest_then_search(self, runner, tmp_path):
        doc = tmp_path / "doc.txt"
        doc.write_text("Caches absorb read bursts when the catalog is hot.")
        result = runner.invoke(
            main,
            ["ingest", "--source", "literature", "--roles", "a,m", "--file", str(doc),
             "--data-dir", str(tmp_path / "data")],
        )
        assert result.exit_code == 0, result.output
        assert result.output.strip() == "doc-0001:0000"
        search = runner.invoke(
            main,
            ["kb-search", "catalog cache bursts", "--role", "modeler", "-k", "3",
             "--data-dir", str(tmp_path / "data")],
        )
        assert search.exit_code == 0, search.output
        assert "doc-0001:0000" in search.output

    def test_search_role_filter(self, runner, tmp_path):
        doc = tmp_path / "doc.txt"
        doc.write_text("Review every artifact against its requirement.")
        runner.invoke(
            main,
            ["ingest", "--source", "expert", "--roles", "e", "--file", str(doc),
             "--data-dir", str(tmp_path / "data")],
        )
        miss = runner.invoke(
            main,
            ["kb-search", "artifact review", "--role", "analyst", "-k", "3",
             "--data-dir", str(tmp_path / "data")],
        )
        assert miss.output.strip() == ""

    def test_search_without_index(self, runner, tmp_path):
        result = runner.invoke(
            main, ["kb-search", "anything", "--role", "analyst", "--data-dir", str(tmp_path / "none")]
        )
        assert result.exit_code != 0


class TestRender:
    def test_render_class_model(self, runner, tmp_path):
        model = {
            "classes": [{"name": "Order", "attributes": [{"name": "id", "type": "String"}],
                         "methods": [], "responsibility": ""}],
            "relations": [{"from": "Order", "to": "Product", "kind": "depends"}],
        }
        path = tmp_path / "model.json"
        path.write_text(json.dumps(model))
        result = runner.invoke(main, ["render", "--model", str(path), "--kind", "class"])
        assert result.exit_code == 0, result.output
        assert result.output == "@startuml\nclass Order {\n  +id: String\n}\nOrder ..> Product\n@enduml\n"

    def test_render_rejects_bad_schema(self, runner, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"classes": [{"title": "oops"}], "relations": []}))
        result = runner.invoke(main, ["render", "--model", str(path), "--kind", "class"])
        assert result.exit_code != 0
