from __future__ import annotations

import json

import pytest

from govbus.acme import acme_sources, default_config
from govbus.acme.config import save_config, save_script, script_to_json
from govbus.cli import main
from govbus.hierarchy import write_manifest


@pytest.fixture
def fig3_manifest(tmp_path):
    return write_manifest(tmp_path / "laws", acme_sources(default_config(1), {"mgr1": "operator"}))


class TestLawCheck:
    def test_valid_ensemble_exits_zero(self, fig3_manifest, capsys):
        assert main(["law", "check", str(fig3_manifest)]) == 0
        out = capsys.readouterr().out
        assert "ensemble ok" in out and "buyer" in out

    def test_broken_law_exits_one_with_diagnostics(self, tmp_path, capsys):
        laws = tmp_path / "laws"
        laws.mkdir()
        (laws / "bad.law").write_text("UPON sent( DO", "utf-8")
        (laws / "manifest.json").write_text(
            json.dumps({"laws": [{"name": "bad", "file": "bad.law", "parent": None}]}), "utf-8"
        )
        assert main(["law", "check", str(laws / "manifest.json")]) == 1
        assert "bad" in capsys.readouterr().err

    def test_missing_manifest_exits_one(self, tmp_path, capsys):
        assert main(["law", "check", str(tmp_path / "none.json")]) == 1


class TestLawHash:
    def test_same_file_twice_same_output(self, tmp_path, capsys):
        law = tmp_path / "a.law"
        law.write_text("UPON sent(*) DO [forward]\n", "utf-8")
        assert main(["law", "hash", str(law)]) == 0
        first = capsys.readouterr().out.strip()
        assert main(["law", "hash", str(law)]) == 0
        second = capsys.readouterr().out.strip()
        assert first == second and len(first) == 64

    def test_formatting_does_not_change_the_digest(self, tmp_path, capsys):
        a = tmp_path / "a.law"
        b = tmp_path / "b.law"
        a.write_text("UPON sent(*) DO [forward]\n", "utf-8")
        b.write_text("# noise\nUPON   sent(*)   DO [ forward ]\n", "utf-8")
        main(["law", "hash", str(a)])
        ha = capsys.readouterr().out.strip()
        main(["law", "hash", str(b)])
        hb = capsys.readouterr().out.strip()
        assert ha == hb

    def test_invalid_law_exits_one(self, tmp_path):
        law = tmp_path / "bad.law"
        law.write_text("UPON sent(*) DO [teleport]\n", "utf-8")
        assert main(["law", "hash", str(law)]) == 1


class TestAcmeRun:
    def test_seeded_run_writes_trace_and_verifies(self, tmp_path, capsys):
        trace = tmp_path / "t.jsonl"
        code = main(["acme", "run", "--seed", "9", "--trace", str(trace), "--verify"])
        assert code == 0
        out = capsys.readouterr().out
        assert "digest" in out and trace.exists()
        report = json.loads(out[out.index("{"):])
        assert report["ok"] is True

    def test_custom_config_and_script_files(self, tmp_path, capsys):
        from govbus.acme import Injection

        cfg_path = tmp_path / "scenario.json"
        save_config(default_config(1), cfg_path)
        script_path = tmp_path / "script.json"
        save_script((Injection(time=30, branch="store7", kind="overspend", amount=10**6),), script_path)
        code = main([
            "acme", "run", "--seed", "3", "--config", str(cfg_path),
            "--script", str(script_path), "--verify",
        ])
        assert code == 0
        out = capsys.readouterr().out
        report = json.loads(out[out.index("{"):])
        assert report["ok"] is True
        assert report["violationAudits"] == 1

    def test_until_flag_shortens_the_run(self, capsys):
        assert main(["acme", "run", "--seed", "1", "--until", "10"]) == 0
        short = capsys.readouterr().out
        assert main(["acme", "run", "--seed", "1"]) == 0
        long = capsys.readouterr().out
        n_short = int(short.split("trace: ")[1].split(" records")[0])
        n_long = int(long.split("trace: ")[1].split(" records")[0])
        assert n_short < n_long


class TestAuditTail:
    def test_tail_prints_last_lines(self, tmp_path, capsys):
        f = tmp_path / "audit.jsonl"
        rows = [{"t": i, "actor": ["a", "b", "M"], "kind": "managerMsg", "detail": i} for i in range(30)]
        f.write_text("".join(json.dumps(r) + "\n" for r in rows), "utf-8")
        assert main(["audit", "tail", "--file", str(f), "--lines", "5"]) == 0
        out_lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
        assert len(out_lines) == 5
        assert json.loads(out_lines[-1])["detail"] == 29

    def test_missing_file_exits_one(self, tmp_path):
        assert main(["audit", "tail", "--file", str(tmp_path / "none.jsonl")]) == 1
