import json
import os

import pytest

from noon_dimer import __version__
from noon_dimer.cli import run
from noon_dimer.config import default_config, parse_config
from noon_dimer.errors import ConfigError


def write(tmp_path, text, name="job.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path) as fh:
        lines = [l.rstrip("\n") for l in fh if not l.startswith("#")]
    header = lines[0].split(",")
    return header, [l.split(",") for l in lines[1:]]


def test_minimal_config_fills_defaults():
    cfg = parse_config('subcommand = "protocol"\n[model]\nN = 12\n')
    assert cfg.subcommand == "protocol"
    assert cfg.model["N"] == 12 and cfg.model["J_max"] == 1.1
    assert cfg.U == pytest.approx(1 / 12)
    assert cfg.schedule["mode"] == "constant"
    assert cfg.to_dict()["ensemble"] == default_config("protocol").ensemble


def test_unknown_key_suggests_name():
    with pytest.raises(ConfigError) as err:
        parse_config("[model]\nN = 10\njmax = 1.2\n")
    msg = str(err.value)
    assert "jmax" in msg and "J_max" in msg and "line 3" in msg


def test_bias_must_stay_below_interaction():
    with pytest.raises(ConfigError) as err:
        parse_config("[model]\nN = 10\nDelta_max = 0.2\n")
    assert "Delta" in str(err.value)


@pytest.mark.parametrize("text", [
    "[model]\nN = 'ten'\n",
    "[schedule]\nmode = 'fastest'\n",
    "[nonsense]\nx = 1\n",
    "[model\nN = 3\n",
])
def test_schema_violations(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_exit_code_for_config_error(tmp_path, capsys):
    cfg = write(tmp_path, "[model]\njmax = 1.2\n")
    assert run(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "J_max" in capsys.readouterr().err


def test_exit_code_for_usage_error(capsys):
    assert run(["no-such-command"]) == 2
    assert run(["spectrum", "--threads", "0"]) == 2


def test_exit_code_for_compute_error(tmp_path, capsys):
    cfg = write(tmp_path, "[model]\nN = 10\nJ_max = 0.9\n")
    assert run(["protocol", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "noon_dimer.protocol" in capsys.readouterr().err


def test_protocol_files(tmp_path):
    cfg = write(tmp_path, """subcommand = "protocol"
[model]
N = 6
[schedule]
dotJ = 0.05
dotDelta = 0.05
phi = 0.2
dt = 0.05
record_stride = 20
""")
    out = tmp_path / "o"
    assert run(["--config", cfg, "--out", str(out)]) == 0
    names = set(os.listdir(out))
    assert {"populations.csv", "schedule.csv", "final_pn.csv", "manifest.json"} <= names
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["version"] == __version__
    assert manifest["schema_version"] == "1.0.0"
    assert manifest["config"]["model"]["N"] == 6
    assert set(manifest["files"]) == names - {"manifest.json"}
    header, rows = read_csv(out / "final_pn.csv")
    assert len(rows) == 7
    assert sum(float(r[header.index("P")]) for r in rows) == pytest.approx(1.0, abs=1e-10)


def test_nex_scan_columns_reduced_grid(tmp_path):
    cfg = write(tmp_path, """[model]
N = 100
[scan]
values = [0.05, 1.0]
[ensemble]
points = 200
dt = 0.05
[schedule]
dt = 0.05
""")
    out = tmp_path / "o"
    assert run(["nex-scan", "--config", cfg, "--out", str(out), "--seed", "5"]) == 0
    header, rows = read_csv(out / "nex_vs_rate.csv")
    assert header == ["dotJ", "nex_quantum", "nex_semiclassical", "nex_semiclassical_stderr",
                      "border_adiabatic", "border_diabatic", "theta"]
    assert len(rows) == 2
    slow, fast = ([float(x) for x in r] for r in rows)
    assert slow[1] < fast[1]
    assert slow[2] < fast[2]


def run_twice(tmp_path, sub, text, threads=("1", "1")):
    cfg = write(tmp_path, text)
    outs = []
    for i, k in enumerate(threads):
        d = tmp_path / f"run{i}"
        assert run([sub, "--config", cfg, "--out", str(d), "--seed", "17", "--threads", k]) == 0
        outs.append(d)
    return outs


def same_files(a, b):
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    # the manifests differ only in the recorded output directory
    for n in (n for n in names if n.endswith(".csv")):
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_rerun_from_manifest_is_byte_identical(tmp_path):
    a, _ = run_twice(tmp_path, "protocol", """[model]
N = 8
[schedule]
dotJ = 0.1
dotDelta = 0.1
dt = 0.05
[ensemble]
M = 300
""")
    c = tmp_path / "again"
    assert run(["--config", str(a / "manifest.json"), "--out", str(c)]) == 0
    for name in json.loads((a / "manifest.json").read_text())["files"]:
        assert (a / name).read_bytes() == (c / name).read_bytes()


def test_threads_do_not_change_output(tmp_path):
    a, b = run_twice(tmp_path, "nex-scan", """[model]
N = 20
[scan]
values = [0.1, 0.5, 2.0]
[ensemble]
points = 100
""", threads=("1", "3"))
    same_files(a, b)


@pytest.mark.parametrize("sub,text,expected", [
    ("spectrum", "[model]\nN = 12\n[scan]\nsteps = 4\n", "spectrum.csv"),
    ("wkb", "[model]\nN = 60\n", "wkb_levels.csv"),
    ("quench", "[model]\nN = 12\nJ = 0.5\n", "quench_pn.csv"),
    ("fscan", "[model]\nN = 40\n[scan]\nsteps = 5\n", "fscan.csv"),
    ("bias-scan", "[model]\nN = 8\n[scan]\nvalues = [0.0, 0.05]\n", "bias_scan.csv"),
    ("husimi", "[model]\nN = 8\n[state]\nkind = 'even_cat'\nresolution = [16, 32]\n", "husimi.csv"),
    ("feasibility", "", "feasibility.json"),
])
def test_each_subcommand_runs(tmp_path, sub, text, expected):
    cfg = write(tmp_path, text)
    out = tmp_path / "o"
    assert run([sub, "--config", cfg, "--out", str(out)]) == 0
    assert (out / expected).exists()
    assert (out / "manifest.json").exists()


def test_feasibility_report_numbers(tmp_path):
    out = tmp_path / "o"
    assert run(["feasibility", "--out", str(out)]) == 0
    report = json.loads((out / "feasibility.json").read_text())
    assert report["N"] == 50
    assert report["hierarchy_ok"] is True
