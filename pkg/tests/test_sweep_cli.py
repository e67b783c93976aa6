import csv
import io
import json
import math
import subprocess
import sys

import pytest
from numpy.testing import assert_allclose

from xxzbath import __version__
from xxzbath.sweep_cli import (
    EXIT_CAP, EXIT_OK, EXIT_USAGE, THREADS_ENV, SweepConfig, UsageError, build_parser,
    build_sweep_config, fmt, main, parse_grid, resolve_settings,
)

SMALL = ["--delta=-4,0,1.5", "--temperature", "0.05,1,inf", "--time", "0,10,100"]


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def settings_for(argv):
    args = build_parser().parse_args(argv)
    return resolve_settings(args, args.command)


def test_parse_grid_forms():
    assert parse_grid("1,2.5,-3", "x") == [1.0, 2.5, -3.0]
    assert parse_grid("linspace:0:1:3", "x") == [0.0, 0.5, 1.0]
    assert_allclose(parse_grid("logspace:-1:1:3", "x"), [0.1, 1.0, 10.0])
    assert parse_grid("inf", "T") == [math.inf]
    for bad in ("", "a,b", "linspace:0:1", "nan"):
        with pytest.raises(UsageError):
            parse_grid(bad, "x")


def test_config_validation():
    with pytest.raises(UsageError):
        SweepConfig([0.0], [0.0], [1.0])
    with pytest.raises(UsageError):
        SweepConfig([0.0], [1.0], [-1.0])
    with pytest.raises(UsageError):
        SweepConfig([0.0], [1.0], [1.0], f=1.5)
    with pytest.raises(UsageError):
        SweepConfig([0.0], [1.0], [1.0], measures=("bogus",))


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(fmt(x)) == x
    assert fmt(math.nan) == "nan" and fmt(math.inf) == "inf" and fmt(True) == "1"


def test_ghz_dynamics_csv(capsys):
    code, out, _ = run(["ghz-dynamics"] + SMALL, capsys)
    assert code == EXIT_OK
    rows = rows_of(out)
    assert len(rows) == 27
    assert list(rows[0]) == ["delta", "T", "t", "f", "gamma", "n", "u", "v", "E_G", "E_D", "physical"]
    first = rows[0]
    assert float(first["u"]) == 1.0 and float(first["v"]) == 0.5
    assert float(first["E_G"]) == 0.5 and float(first["E_D"]) == 1.0


def test_ghz_unphysical_cells_are_nan(capsys):
    # at infinite temperature the printed u drops below 2|v| at early times
    _, out, _ = run(["ghz-dynamics", "--delta", "0", "--temperature", "inf", "--time", "1"], capsys)
    row = rows_of(out)[0]
    assert row["physical"] == "0" and row["E_G"] == "nan" and row["E_D"] == "nan"


def test_w_dynamics_json(capsys):
    code, out, _ = run(["w-dynamics", "--format", "json"] + SMALL, capsys)
    assert code == EXIT_OK
    data = json.loads(out)
    assert len(data) == 27
    for r in data:
        assert_allclose(r["w0"] + r["w1"] + r["w2p"] + r["w2m"], 1.0, atol=1e-12)
    assert data[0]["w1"] == 1.0


def test_infinite_temperature_plateau(capsys):
    _, out, _ = run(["w-dynamics", "--delta", "0", "--temperature", "inf", "--time", "100"], capsys)
    assert abs(float(rows_of(out)[0]["w1"]) - 0.25) < 0.01


def test_time_unit_decay(capsys):
    _, out, _ = run(["ghz-dynamics", "--delta", "0", "--temperature", "1", "--time", "1",
                     "--time-unit", "decay"], capsys)
    assert_allclose(float(rows_of(out)[0]["t"]), 1 / (math.pi * 0.01 * 10))


def test_heatmap_writes_files_and_manifest(tmp_path, capsys):
    out = tmp_path / "map.csv"
    code, _, _ = run(["heatmap", "--delta=linspace:-4:2:4", "--temperature", "logspace:-2:2:3",
                      "--out", str(out)], capsys)
    assert code == EXIT_OK
    assert len(rows_of(out.read_text())) == 12
    man = json.loads((tmp_path / "map.csv.manifest.json").read_text())
    assert man["version"] == __version__ and len(man["cell_checksums"]) == 12
    for m in ("gme_ghz", "distill_rate", "w_fraction", "cme_bound"):
        lines = (tmp_path / f"map.csv.{m}.dat").read_text().splitlines()
        assert lines[0].startswith("#")
        head = lines[1].split()
        assert head[0] == "4" and len(head) == 5
        assert len(lines) == 2 + 3 and all(len(l.split()) == 5 for l in lines[2:])


@pytest.mark.parametrize("fmt_name", ["csv", "json"])
def test_heatmap_bitwise_deterministic_across_threads(tmp_path, capsys, fmt_name):
    outs = []
    for threads in ("1", "4"):
        path = tmp_path / f"h{threads}.{fmt_name}"
        assert main(["heatmap", "--format", fmt_name, "--threads", threads, "--out", str(path)]) == EXIT_OK
        outs.append(path)
    capsys.readouterr()
    assert outs[0].read_bytes() == outs[1].read_bytes()
    for m in ("gme_ghz", "w_fraction"):
        a = outs[0].with_name(outs[0].name + f".{m}.dat").read_bytes()
        b = outs[1].with_name(outs[1].name + f".{m}.dat").read_bytes()
        assert a == b


def test_settings_precedence(tmp_path, monkeypatch):
    ini = tmp_path / "c.ini"
    ini.write_text("[sweep]\nf = 0.02\nthreads = 2\ndelta = 1,2\n[heatmap]\nf = 0.03\n")
    monkeypatch.delenv(THREADS_ENV, raising=False)
    s = settings_for(["heatmap", "--config", str(ini)])
    assert s["f"] == "0.03" and s["delta"] == "1,2" and s["threads"] == "2"
    s = settings_for(["heatmap", "--config", str(ini), "--f", "0.04", "--threads", "3"])
    assert s["f"] == 0.04 and s["threads"] == 3
    monkeypatch.setenv(THREADS_ENV, "5")
    cfg = build_sweep_config(settings_for(["heatmap", "--config", str(ini), "--threads", "3"]))
    assert cfg.threads == 5 and cfg.f == 0.03


def test_missing_config_is_usage_error(capsys):
    code, _, err = run(["heatmap", "--config", "/nonexistent.ini"], capsys)
    assert code == EXIT_USAGE and "config" in err


def test_usage_errors(capsys):
    assert run(["ghz-dynamics", "--temperature", "-1"], capsys)[0] == EXIT_USAGE
    assert run(["ghz-dynamics", "--measures", "nope"], capsys)[0] == EXIT_USAGE
    assert run(["distill", "--v", "0.8"], capsys)[0] == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == EXIT_USAGE
    capsys.readouterr()


def test_resource_cap_exit_code(capsys):
    code, _, err = run(["bethe-roots", "--N", "100000"], capsys)
    assert code == EXIT_CAP and "cap" in err


def test_distill_command(capsys):
    code, out, _ = run(["distill", "--u", "1", "--v", "0.5,0", "--r-max", "3"], capsys)
    assert code == EXIT_OK
    rows = rows_of(out)
    assert len(rows) == 8
    assert {r["rate"] for r in rows if r["v"] == "0.5"} == {"1"}
    assert {r["rate"] for r in rows if r["v"] == "0"} == {"0"}


def test_bethe_roots_command(capsys):
    code, out, _ = run(["bethe-roots", "--N", "8", "--delta", "0.5,2"], capsys)
    assert code == EXIT_OK
    rows = rows_of(out)
    assert sum(r["kind"] == "bound" for r in rows) == 1
    assert all(float(r["residual"]) < 1e-10 for r in rows)


def test_verify_command(capsys):
    code, out, _ = run(["verify"], capsys)
    assert code == EXIT_OK
    assert all(r["passed"] == "1" for r in rows_of(out))


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "xxzbath", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == __version__
