import csv
import io
import json
import logging
import os
import subprocess
import sys

import pytest

from fogalloc.cli import main, parse_values
from fogalloc.rlnc import full_rank_probability
from fogalloc.scenario import LOAD_PRESETS, ScenarioConfig


@pytest.fixture
def cli(capsys, caplog):
    """Run ``main`` in-process; returns (exit code, stdout, stderr plus log text)."""
    def invoke(*argv):
        caplog.clear()
        caplog.set_level(logging.INFO)
        code = main(list(argv))
        out = capsys.readouterr()
        return code, out.out, out.err + caplog.text
    return invoke


def csv_blocks(text):
    blocks = {}
    for chunk in text.strip().split("\n\n"):
        lines = chunk.splitlines()
        head = dict(kv.split("=") for kv in lines[0].lstrip("# ").split())
        rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
        blocks[head["strategy"]] = (float(head["t_total_s"]), rows)
    return blocks


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "reference.json"
    path.write_text(json.dumps(ScenarioConfig().to_dict()))
    return str(path)


def test_optimize_equal_split(cli, config_file):
    code, out, _ = cli("optimize", config_file, "--strategy", "eq")
    assert code == 0
    (t_total, rows), = csv_blocks(out).values()
    assert len(rows) == 8
    assert all(r["alpha"] == "0.125" for r in rows)
    assert list(rows[0]) == ["node_index", "tier", "rate_mbps", "link_ms", "load", "d_request_ms", "alpha",
                             "t_download_s"]
    assert t_total == max(float(r["t_download_s"]) for r in rows)


def test_optimize_all_strategies_ordering(cli):
    code, out, _ = cli("optimize", "--strategy", "all", "--inject", "outage:3:fog")
    assert code == 0
    blocks = csv_blocks(out)
    assert set(blocks) == {"Eq", "Rb", "Opt", "Single"}
    assert blocks["Opt"][0] <= blocks["Rb"][0] <= blocks["Eq"][0]
    assert blocks["Opt"][0] <= blocks["Single"][0]
    opt_rows = blocks["Opt"][1]
    assert all(float(r["alpha"]) == 0 for r in opt_rows if r["tier"] == "fog")


def test_optimize_csv_json_agree(cli, config_file):
    _, text_csv, _ = cli("optimize", config_file, "--run", "7")
    _, text_json, _ = cli("optimize", config_file, "--run", "7", "--format", "json")
    blocks = csv_blocks(text_csv)
    doc = json.loads(text_json)
    assert doc["seed"] == 0 and doc["run"] == 7
    for alloc in doc["allocations"]:
        t_total, rows = blocks[alloc["strategy"]]
        assert float(f"{alloc['t_total_s']:.6g}") == t_total
        for node, row in zip(alloc["nodes"], rows):
            for col, value in row.items():
                if col == "tier":
                    assert node[col] == value
                else:
                    assert f"{node[col]:.6g}" == value


def test_optimize_is_repeatable(cli):
    first = cli("optimize", "--seed", "5", "--format", "json")[1]
    assert cli("optimize", "--seed", "5", "--format", "json")[1] == first
    assert cli("optimize", "--seed", "6", "--format", "json")[1] != first


def test_optimize_msr_infeasible(cli):
    code, out, err = cli("optimize", "--msr", "--strategy", "opt")
    assert code == 3 and out == "" and "infeasible constraints" in err


def test_missing_config_names_path(cli, tmp_path):
    missing = str(tmp_path / "nope.json")
    code, _, err = cli("optimize", missing)
    assert code == 2 and missing in err


def test_invalid_config_names_field(cli, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"fog_load_range": [0.7, 0.2]}))
    code, _, err = cli("optimize", str(path))
    assert code == 2 and "fog_load_range" in err
    path.write_text("{not json")
    assert cli("optimize", str(path))[0] == 2


def test_injection_too_large_exits_invalid(cli):
    assert cli("optimize", "--inject", "outage:9")[0] == 2


def test_sweep_fogs_rows(cli, tmp_path):
    out = tmp_path / "fogs.csv"
    code, _, err = cli("sweep", "--param", "fogs", "--values", "0..10", "--runs", "20", "--out", str(out))
    assert code == 0
    assert str(out) in err and " s" in err
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 33
    assert list(rows[0]) == ["sweep_value", "strategy", "n", "min", "q1", "median", "q3", "max", "mean", "variance"]
    assert [r["sweep_value"] for r in rows[:3]] == ["0"] * 3


def test_sweep_outage_rows(cli):
    code, out, _ = cli("sweep", "--param", "outage-nodes", "--values", "1..5", "--runs", "30")
    assert code == 0
    assert len(list(csv.DictReader(io.StringIO(out)))) == 15


def test_sweep_csv_json_agree(cli):
    args = ["sweep", "--param", "fog-load", "--values", "presets", "--runs", "25"]
    _, text_csv, _ = cli(*args)
    _, text_json, _ = cli(*args, "--format", "json")
    rows = list(csv.DictReader(io.StringIO(text_csv)))
    doc = json.loads(text_json)
    assert doc["provenance"]["values"] == [list(v) for v in LOAD_PRESETS]
    assert len(rows) == len(doc["rows"]) == 12
    for row, rec in zip(rows, doc["rows"]):
        assert row["sweep_value"] == rec["sweep_value"] and row["strategy"] == rec["strategy"]
        for col in ("n", "min", "q1", "median", "q3", "max", "mean", "variance"):
            assert f"{rec[col]:.6g}" == row[col]


def test_sweep_error_rows(cli, tmp_path):
    path = tmp_path / "nocloud.json"
    path.write_text(json.dumps({"n_cloud": 0}))
    code, out, _ = cli("sweep", str(path), "--param", "fogs", "--values", "0,1", "--runs", "3",
                       "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert all("error" in r and r["n"] == 0 and r["median"] is None for r in rows[:3])
    assert all("error" not in r for r in rows[3:])


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_sweep_byte_identical_across_workers(cli, tmp_path, fmt):
    paths = []
    for workers in ("1", "8", "1"):
        path = tmp_path / f"w{workers}_{len(paths)}.{fmt}"
        assert cli("sweep", "--param", "latency-nodes", "--values", "0..4", "--runs", "60",
                   "--workers", workers, "--format", fmt, "--out", str(path))[0] == 0
        paths.append(path)
    blobs = {p.read_bytes() for p in paths}
    assert len(blobs) == 1


def test_sweep_invalid_inputs(cli, tmp_path):
    assert cli("sweep", "--param", "fogs", "--runs", "0")[0] == 2
    assert cli("sweep", "--param", "fogs", "--values", "a..b")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--param", "servers"])
    assert exc.value.code == 2
    bad = tmp_path / "missing_dir" / "out.csv"
    assert cli("sweep", "--param", "fogs", "--values", "1", "--runs", "1", "--out", str(bad))[0] == 4


def test_parse_values():
    assert parse_values("fogs", "0..3") == (0, 1, 2, 3)
    assert parse_values("gensize", "50,100") == (50, 100)
    assert parse_values("fog-load", "0.1-0.3,0.5-0.7") == ((0.1, 0.3), (0.5, 0.7))


def test_rlnc_report(cli):
    code, out, _ = cli("rlnc", "--packets", "4", "--field", "256", "--trials", "10000")
    assert code == 0
    rep = json.loads(out)
    assert rep["success"] and rep["recovered_identical"] and rep["rank"] == 4
    assert rep["analytic_rate"] == pytest.approx(full_rank_probability(4, 8))
    assert abs(rep["empirical_rate"] - rep["analytic_rate"]) <= 0.005
    assert rep["verified"] == rep["full_rank"]


def test_rlnc_single_packet_rate(cli):
    rep = json.loads(cli("rlnc", "--packets", "1", "--field", "16", "--trials", "20000")[1])
    assert rep["analytic_rate"] == pytest.approx(1 - 1 / 16)
    assert abs(rep["empirical_rate"] - (1 - 1 / 16)) <= 0.01


def test_rlnc_binary_field_visibly_worse(cli):
    rep = json.loads(cli("rlnc", "--field", "2", "--packets", "8", "--trials", "5000")[1])
    assert rep["analytic_rate"] == pytest.approx(0.2899, abs=1e-4)
    assert rep["empirical_rate"] < 0.4


def test_rlnc_emit_and_invalid(cli, tmp_path):
    out = tmp_path / "pkts"
    code, text, _ = cli("rlnc", "--packets", "3", "--size", "10", "--extra", "1", "--emit-dir", str(out))
    assert code == 0
    files = sorted(out.iterdir())
    assert len(files) == 4 and all(len(f.read_bytes()) == 3 + 3 + 10 for f in files)
    assert cli("rlnc", "--packets", "0")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["rlnc", "--field", "8"])
    assert exc.value.code == 2


def test_module_entry_point_with_numpy_backend():
    env = dict(os.environ, FOGALLOC_BACKEND="numpy")
    proc = subprocess.run(
        [sys.executable, "-c", "from fogalloc._backend import BACKEND; from fogalloc import _waterfill as w;"
         " print(BACKEND, w.waterfill_batch is w.waterfill_batch_numpy)"],
        env=env, capture_output=True, text=True, check=True)
    assert proc.stdout.split() == ["numpy", "True"]
    proc = subprocess.run([sys.executable, "-m", "fogalloc", "optimize", "--strategy", "opt", "--format", "json"],
                          env=env, capture_output=True, text=True)
    assert proc.returncode == 0
    default = subprocess.run([sys.executable, "-m", "fogalloc", "optimize", "--strategy", "opt", "--format", "json"],
                             capture_output=True, text=True)
    a = json.loads(proc.stdout)["allocations"][0]
    b = json.loads(default.stdout)["allocations"][0]
    assert a["t_total_s"] == pytest.approx(b["t_total_s"], abs=1e-9)


def test_unknown_backend_rejected():
    env = dict(os.environ, FOGALLOC_BACKEND="cuda")
    proc = subprocess.run([sys.executable, "-c", "import fogalloc"], env=env, capture_output=True, text=True)
    assert proc.returncode != 0 and "FOGALLOC_BACKEND" in proc.stderr
