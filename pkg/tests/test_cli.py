"""Batch-runner contract: outputs, manifests, determinism, exit codes."""

import json
import re
from pathlib import Path

import pytest

from branchcover.cli import main


def read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def strip_timestamps(doc: dict) -> dict:
    doc = dict(doc)
    doc.pop("started", None)
    doc.pop("finished", None)
    return doc


# ---------------------------------------------------------------------------
# experiment subcommands


def test_holes_writes_csv_and_manifest(tmp_path):
    out = tmp_path / "h1"
    rc = main(["holes", "--d", "2,3", "--cap-vol", "0.05", "--samples", "100",
               "--seed", "7", "--chunk-size", "64", "--out", str(out)])
    assert rc == 0
    csv = read(out / "result.csv")
    lines = csv.strip().splitlines()
    assert lines[0] == "# schema=1"
    assert len(lines) == 4            # header comment + columns + 2 degrees
    manifest = json.loads(read(out / "manifest.json"))
    assert manifest["seed"] == 7
    assert set(manifest["outputs"]) == {"result.csv", "result.json"}
    assert manifest["config_hash"] == manifest["config_hash"].lower()
    assert re.fullmatch(r"[0-9a-f]{16}", manifest["config_hash"])
    assert manifest["finished"] is not None


def test_rerun_is_byte_identical(tmp_path):
    args = ["holes", "--d", "2,3", "--samples", "100", "--seed", "1",
            "--chunk-size", "64"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert read(out1 / "result.csv") == read(out2 / "result.csv")
    m1 = strip_timestamps(json.loads(read(out1 / "manifest.json")))
    m2 = strip_timestamps(json.loads(read(out2 / "manifest.json")))
    assert m1 == m2


def test_nothing_written_outside_out(tmp_path, monkeypatch):
    workdir = tmp_path / "cwd"
    workdir.mkdir()
    monkeypatch.chdir(workdir)
    out = tmp_path / "only-here"
    assert main(["deviations", "--d", "2", "--samples", "100", "--eps", "0.3",
                 "--chunk-size", "64", "--out", str(out)]) == 0
    assert list(workdir.iterdir()) == []
    assert (out / "manifest.json").exists()


def test_manifest_config_roundtrip(tmp_path):
    out = tmp_path / "r"
    assert main(["counts", "--d", "2,4", "--cap-vol", "0.1", "--eps", "0.2",
                 "--samples", "100", "--seed", "3", "--chunk-size", "64",
                 "--out", str(out)]) == 0
    cfg = json.loads(read(out / "manifest.json"))["config"]
    assert cfg["d"] == [2, 4] and cfg["eps"] == 0.2 and cfg["seed"] == 3
    # re-running from the recorded config reproduces the outputs
    out2 = tmp_path / "r2"
    assert main(["counts", "--d", ",".join(map(str, cfg["d"])),
                 "--cap-vol", str(cfg["cap_vol"]), "--eps", str(cfg["eps"]),
                 "--samples", str(cfg["samples"]), "--seed", str(cfg["seed"]),
                 "--chunk-size", "64", "--out", str(out2)]) == 0
    assert read(out / "result.csv") == read(out2 / "result.csv")


def test_elliptic_subcommand(tmp_path):
    out = tmp_path / "e"
    rc = main(["elliptic", "--d", "2", "--samples", "100", "--cap-vol", "0.05",
               "--chunk-size", "64", "--out", str(out)])
    assert rc == 0
    lines = read(out / "result.csv").strip().splitlines()
    assert len(lines) == 4            # hole + count_deviation rows


# ---------------------------------------------------------------------------
# one-shot subcommands


def test_sample_counts_critical_points(tmp_path, capsys):
    assert main(["sample", "--d", "4", "--seed", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    pts = doc["critical_set"]["points"]
    assert sum(int(p[-1]) for p in pts) == 6      # 2d - 2
    assert doc["pair"]["degree"] == 4


def test_sample_torus_to_directory(tmp_path):
    out = tmp_path / "s"
    assert main(["sample", "--d", "2", "--seed", "2", "--kind", "torus",
                 "--out", str(out)]) == 0
    doc = json.loads(read(out / "sample.json"))
    assert doc["critical_set"]["genus"] == 1
    assert sum(int(p[-1]) for p in doc["critical_set"]["points"]) == 4


def test_bergman_subcommand(tmp_path):
    out = tmp_path / "b"
    assert main(["bergman", "--d", "3,10", "--out", str(out)]) == 0
    lines = read(out / "bergman.csv").strip().splitlines()
    assert lines[0] == "# schema=1" and len(lines) == 4
    d, K, d1, d2 = lines[2].split(",")
    assert d == "3" and float(K) == pytest.approx(4.0, abs=1e-9)


def test_pl_check_subcommand(tmp_path):
    out = tmp_path / "p"
    rc = main(["pl-check", "--d", "3", "--samples", "100", "--grid", "20000",
               "--chunk-size", "64", "--out", str(out)])
    assert rc == 0
    doc = json.loads(read(out / "result.json"))
    assert doc["rows"][0]["k"] == 0       # residuals all under threshold


# ---------------------------------------------------------------------------
# exit codes


def test_unknown_subcommand_exits_2(capsys):
    assert main(["frobnicate"]) == 2
    capsys.readouterr()


def test_unknown_flag_exits_2(capsys):
    assert main(["holes", "--d", "2", "--nope", "1", "--out", "x"]) == 2
    capsys.readouterr()


def test_bad_degree_list_exits_2(tmp_path, capsys):
    rc = main(["holes", "--d", "2;3", "--samples", "100",
               "--out", str(tmp_path / "x")])
    assert rc == 2
    capsys.readouterr()


def test_bad_tau_exits_2(tmp_path, capsys):
    rc = main(["elliptic", "--d", "2", "--samples", "100",
               "--tau", "1.0-2.0i", "--out", str(tmp_path / "x")])
    assert rc == 2
    capsys.readouterr()


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0
    capsys.readouterr()
