import json
import xml.etree.ElementTree as ET

import pytest

from activesense.cli import main, parse_snrs, UsageError

SMALL = {"M": 5, "theta_max_deg": 90, "segments": [[-50, -48, 1], [10, 12, 1]],
         "point_masses": [], "snr_db": 0, "noise_var": 1, "seed": 1}


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(SMALL))
    return path


def run(*argv):
    return main([str(a) for a in argv])


def snapshot(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_run_both_writes_csvs_and_manifest(config, tmp_path):
    out = tmp_path / "o"
    assert run("run", config, "--T", 12, "--reps", 2, "--out-dir", out, "--workers", 1) == 0
    names = set(snapshot(out))
    assert {"adaptive_0db_1.csv", "exhaustive_0db_1.csv", "manifest_0db_1.json"} <= names
    lines = (out / "adaptive_0db_1.csv").read_text().splitlines()
    assert lines[0] == "algorithm,rep,seed,t,beam,r,gamma"
    assert len(lines) == 1 + 2 * 12
    summary = (out / "summary_0db_1.csv").read_text().splitlines()
    assert summary[0] == "t,mean_adaptive,std_adaptive,mean_exhaustive,std_exhaustive"
    assert len(summary) == 13
    manifest = json.loads((out / "manifest_0db_1.json").read_text())
    assert manifest["seeds"] == [1, 2]
    assert manifest["config"]["M"] == 5
    assert len(manifest["config_hash"]) == 16


def test_run_is_byte_identical_and_manifest_reproduces(config, tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for d in (a, b):
        assert run("run", config, "--T", 10, "--reps", 1, "--out-dir", d) == 0
    assert snapshot(a) == snapshot(b)
    assert run("run", a / "manifest_0db_1.json", "--out-dir", c) == 0
    assert snapshot(a) == snapshot(c)


def test_output_independent_of_worker_count(config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("run", config, "--T", 10, "--reps", 2, "--out-dir", a, "--workers", 1) == 0
    assert run("run", config, "--T", 10, "--reps", 2, "--out-dir", b, "--workers", 2) == 0
    assert snapshot(a) == snapshot(b)


def test_short_horizon_rejected(config, tmp_path, capsys):
    assert run("run", config, "--T", 5, "--out-dir", tmp_path / "x") == 2
    err = capsys.readouterr().err
    assert "--T" in err and "2M - 1 = 9" in err


def test_exhaustive_only_allows_short_horizon(config, tmp_path):
    out = tmp_path / "e"
    assert run("run", config, "--algo", "exhaustive", "--T", 3, "--reps", 1, "--out-dir", out) == 0
    assert not (out / "adaptive_0db_1.csv").exists()


@pytest.mark.parametrize("patch, key", [
    ({"M": -3}, "M"),
    ({"snr_db": "loud"}, "snr_db"),
    ({"segments": [[10, 5, 1]]}, "segments"),
    ({"extra_key": 1}, "extra_key"),
])
def test_config_errors_name_key(tmp_path, capsys, patch, key):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({**SMALL, **patch}))
    assert run("run", path, "--out-dir", tmp_path / "x") == 2
    assert key in capsys.readouterr().err


def test_missing_key_and_bad_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"segments": []}))
    assert run("run", path) == 2
    assert "M" in capsys.readouterr().err
    path.write_text("{\n  \"M\": 4,\n}")
    assert run("run", path) == 2
    assert "bad.json:3" in capsys.readouterr().err


def test_invalid_p(config, tmp_path, capsys):
    assert run("run", config, "--p", 9, "--out-dir", tmp_path) == 2
    assert "--p" in capsys.readouterr().err


def test_sweep(config, tmp_path):
    out = tmp_path / "s"
    assert run("sweep-snr", config, "--snrs", "0,-10,-20", "--T", 10, "--reps", 1,
               "--out-dir", out) == 0
    for tag in ("0db", "-10db", "-20db"):
        assert (out / f"summary_{tag}_1.csv").exists()
    manifest = json.loads((out / "sweep_manifest_1.json").read_text())
    assert manifest["snrs_db"] == [0.0, -10.0, -20.0]
    rows = (out / "sweep_1.csv").read_text().splitlines()
    assert rows[0].startswith("snr_db,t,")
    assert len(rows) == 1 + 3 * 10


def test_empty_snr_list():
    with pytest.raises(UsageError):
        parse_snrs(" , ")
    assert parse_snrs("0, -10") == [0.0, -10.0]


def test_sweep_empty_list_exit_code(config, tmp_path):
    assert run("sweep-snr", config, "--snrs", "", "--out-dir", tmp_path) == 2


def _legend(svg_path):
    root = ET.parse(svg_path).getroot()
    return [el.text for el in root.iter() if el.get("class") == "legend"]


def test_plot_gamma_two_curves(config, tmp_path):
    out = tmp_path / "o"
    run("run", config, "--T", 10, "--reps", 1, "--out-dir", out)
    svg = tmp_path / "g.svg"
    assert run("plot", out / "summary_0db_1.csv", "--out", svg) == 0
    assert _legend(svg) == ["Adaptive", "Exhaustive"]
    svg2 = tmp_path / "g2.svg"
    assert run("plot", out / "adaptive_0db_1.csv", out / "exhaustive_0db_1.csv",
               "--out", svg2) == 0
    assert _legend(svg2) == ["Adaptive", "Exhaustive"]


def test_plot_spectrum_of_two_cluster_scenario(tmp_path):
    cfg = tmp_path / "two_cluster.json"
    cfg.write_text(json.dumps({**SMALL, "M": 20}))
    out = tmp_path / "o"
    assert run("run", cfg, "--algo", "exhaustive", "--T", 1, "--reps", 1, "--out-dir", out) == 0
    lines = (out / "spectrum_0db_1.csv").read_text().splitlines()[1:]
    sig = [float(l.split(",")[2]) for l in lines]
    assert sig[1] > 10 * sig[2]
    svg = tmp_path / "s.svg"
    assert run("plot", out / "spectrum_0db_1.csv", "--kind", "spectrum", "--out", svg) == 0
    ET.parse(svg)


def test_plot_empty_and_malformed(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    svg = tmp_path / "e.svg"
    assert run("plot", empty, "--out", svg) == 2
    assert not svg.exists()
    bad = tmp_path / "bad.csv"
    bad.write_text("t,mean_adaptive\n1,0.5\n2,0.6,7\n")
    assert run("plot", bad, "--out", svg) == 2
    assert "bad.csv:3" in capsys.readouterr().err
    assert not svg.exists()
    bad.write_text("t,mean_adaptive\n1,0.5\n2,oops\n")
    assert run("plot", bad, "--out", svg) == 2
    assert "bad.csv:3" in capsys.readouterr().err
    header_only = tmp_path / "h.csv"
    header_only.write_text("t,mean_adaptive\n")
    assert run("plot", header_only, "--out", svg) == 2
