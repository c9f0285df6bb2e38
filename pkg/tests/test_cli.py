import json
import math

import numpy as np
import pytest

from spinhf import __version__
from spinhf.cli import (
    PRESETS,
    UsageError,
    main,
    parse_initial,
    parse_methods,
    parse_scalar,
)
from spinhf.special import bessel_j0, bessel_j0_zero, struve_h0

R1 = 2.404825557695773


# --- argument parsing helpers ---------------------------------------------------

def test_parse_scalar_numbers_and_tokens():
    assert parse_scalar("1.5e-3") == 1.5e-3
    assert parse_scalar("-2") == -2.0
    assert parse_scalar("pi/2") == math.pi / 2
    assert parse_scalar("-pi") == -math.pi
    assert parse_scalar("2pi") == 2 * math.pi
    assert parse_scalar("3pi/4") == 3 * math.pi / 4
    assert parse_scalar("+pi") == math.pi
    assert abs(parse_scalar("r1") - R1) < 1e-12
    assert parse_scalar("r2") == bessel_j0_zero(2)


def test_parse_scalar_rejects_garbage():
    for bad in ("abc", "r0", "pi/0", "1..2", "r-1", ""):
        with pytest.raises(UsageError):
            parse_scalar(bad)


def test_parse_initial():
    assert parse_initial("plus").up == 1.0
    assert parse_initial("minus").down == 1.0
    psi = parse_initial("0.6,0.3")
    assert abs(psi.up - 0.6) < 1e-15
    assert abs(psi.down - 0.8 * complex(math.cos(0.3), math.sin(0.3))) < 1e-12
    token = parse_initial("0.5,pi/2")
    assert abs(token.down - math.sqrt(0.75) * 1j) < 1e-12


def test_parse_initial_rejects_bad_specs():
    for bad in ("1.5,0", "-0.1,0", "plus,minus", "0.5", "0.5,0,0"):
        with pytest.raises(UsageError):
            parse_initial(bad)


def test_parse_methods_canonical_order():
    assert parse_methods("numeric,avg") == ["avg", "numeric"]
    assert parse_methods(["ms", "exact"]) == ["exact", "ms"]
    assert parse_methods("avg,avg") == ["avg"]
    with pytest.raises(UsageError):
        parse_methods("magic")
    with pytest.raises(UsageError):
        parse_methods("")


# --- constants -------------------------------------------------------------------

def test_constants_zero_listing_and_table(capsys):
    code = main(["constants", "--zeros", "2", "--gamma-at", "1,r1"])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == f"r_1 = {bessel_j0_zero(1):.10f}"
    assert out[1] == f"r_2 = {bessel_j0_zero(2):.10f}"
    assert out[2] == "r,J0,H0,gamma1,gamma2"
    r, j0, h0, g1, g2 = out[3].split(",")
    assert float(r) == 1.0
    assert abs(float(j0) - bessel_j0(1.0)) < 1e-12
    assert abs(float(h0) - struve_h0(1.0)) < 1e-12
    assert abs(float(g1) - (-0.6845326710661928)) < 1e-12
    row_r1 = out[4].split(",")
    assert abs(float(row_r1[3]) - (-0.6039833732241502)) < 1e-12


def test_constants_reports_per_entry_errors(capsys):
    # 60 is outside the special-function domain; the cell carries the error
    code = main(["constants", "--zeros", "0", "--gamma-at", "60"])
    assert code == 0
    out = capsys.readouterr().out
    assert "error:" in out
    assert out.startswith("r,J0,H0,gamma1,gamma2")


# --- evolve ----------------------------------------------------------------------

def test_evolve_csv_numeric_matches_exact(tmp_path):
    out = tmp_path / "trace.csv"
    code = main([
        "evolve", "--r", "0", "--omega-par", "0", "--t-end", "2",
        "--methods", "exact,numeric", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,exact,numeric"
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    assert data[0, 0] == 0.0
    assert abs(data[0, 1] - 1.0) < 1e-12
    assert np.max(np.abs(data[:, 1] - data[:, 2])) < 1e-6


def test_evolve_json_schema(tmp_path):
    out = tmp_path / "trace.json"
    code = main([
        "evolve", "--r", "0", "--t-end", "1", "--methods", "avg",
        "--format", "json", "--out", str(out),
    ])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "spinhf/evolve/1"
    assert doc["version"] == __version__
    assert doc["params"]["r"] == 0.0
    assert set(doc["traces"]) == {"avg"}
    assert len(doc["t"]) == len(doc["traces"]["avg"])


def test_evolve_averaged_column_layout(tmp_path):
    out = tmp_path / "avg.csv"
    code = main([
        "evolve", "--omega-par", "-1", "--r", "1", "--t-end", "3",
        "--methods", "avg,numeric", "--hf-average", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,avg,numeric,numeric_avg"
    first_t = float(lines[1].split(",")[0])
    # first averaged sample is the center of the first 32-sample window
    dt = (2 * math.pi / 50) / 32
    assert abs(first_t - 15.5 * dt) < 1e-9
    vals = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    # raw and averaged numeric columns stay within the ripple scale
    assert np.max(np.abs(vals[:, 2] - vals[:, 3])) < 0.2


def test_evolve_t_start_window(tmp_path):
    out = tmp_path / "win.csv"
    code = main([
        "evolve", "--r", "0", "--t-start", "1", "--t-end", "2",
        "--methods", "avg", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    ts = [float(ln.split(",")[0]) for ln in lines[1:]]
    assert ts[0] >= 1.0 - 1e-12
    assert ts[-1] <= 2.0 + 1e-12


def test_evolve_requires_t_end(capsys):
    assert main(["evolve", "--methods", "avg"]) == 2
    assert "t-end" in capsys.readouterr().err


def test_evolve_rejects_exact_with_drive(capsys):
    code = main(["evolve", "--methods", "exact", "--r", "1", "--t-end", "1"])
    assert code == 2
    assert "exact" in capsys.readouterr().err


def test_evolve_rejects_unknown_method(capsys):
    assert main(["evolve", "--methods", "magic", "--t-end", "1"]) == 2


def test_evolve_short_averaging_window_is_usage_error(capsys):
    code = main([
        "evolve", "--t-end", "0.05", "--methods", "numeric", "--hf-average",
    ])
    assert code == 2
    assert "shorter" in capsys.readouterr().err


def test_evolve_deterministic_bytes(tmp_path):
    args = [
        "evolve", "--omega-par", "-1", "--r", "r1", "--t-end", "3",
        "--methods", "avg,ms",
    ]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


# --- sweep -----------------------------------------------------------------------

def test_sweep_closed_amplitudes(capsys):
    code = main([
        "sweep", "--r", "0", "--grid", "-1", "0", "2",
        "--methods", "exact", "--jobs", "1",
    ])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "omega_par,exact"
    w0, a0 = (float(x) for x in lines[1].split(","))
    w1, a1 = (float(x) for x in lines[2].split(","))
    assert (w0, w1) == (-1.0, 0.0)
    assert abs(a0 - 1.0) < 1e-12
    assert abs(a1 - 0.9) < 1e-12


def test_sweep_failure_exit_code_and_gaps(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main([
        "sweep", "--r", "0", "--grid", "-1", "-1", "1",
        "--methods", "numeric", "--t-end", "1", "--jobs", "1",
        "--out", str(out),
    ])
    assert code == 3
    err = capsys.readouterr().err
    assert "sweep point omega_par=-1 [numeric] failed" in err
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "omega_par,numeric"
    assert lines[1].endswith(",")  # gap cell for the failed point


def test_sweep_requires_grid(capsys):
    assert main(["sweep", "--methods", "avg"]) == 2
    assert "--grid" in capsys.readouterr().err


def test_sweep_grid_tokens(capsys):
    # pi tokens work as bounds (negative ones must be written numerically,
    # since a leading dash reads as a flag)
    code = main([
        "sweep", "--r", "0", "--grid", "0", "pi", "3",
        "--methods", "avg", "--jobs", "1",
    ])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert abs(float(lines[-1].split(",")[0]) - math.pi) < 1e-12


# --- compare ---------------------------------------------------------------------

def test_compare_closed_form_equivalence(tmp_path, capsys):
    out = tmp_path / "cmp.json"
    code = main([
        "compare", "--preset", "fig7", "--t-end", "30",
        "--methods", "avg,ms", "--out", str(out),
    ])
    assert code == 0
    stdout = capsys.readouterr().out
    devs = {}
    for ln in stdout.strip().splitlines():
        name, _, val = ln.partition(" max_deviation = ")
        devs[name] = float(val)
    assert devs["ms"] < 1e-12
    assert devs["avg"] < 1e-12
    doc = json.loads(out.read_text())
    assert doc["schema"] == "spinhf/compare/1"
    assert abs(doc["phase_shift"] - R1) < 1e-12
    assert doc["max_deviation"]["ms"] < 1e-12


def test_compare_requires_t_end(capsys):
    assert main(["compare", "--methods", "ms", "--r", "r1", "--omega-par", "-1"]) == 2


# --- presets and config -----------------------------------------------------------

def test_preset_subcommand_mismatch(capsys):
    assert main(["evolve", "--preset", "fig2"]) == 2
    assert "belongs to subcommand" in capsys.readouterr().err


def test_unknown_preset(capsys):
    assert main(["evolve", "--preset", "fig99"]) == 2


def test_preset_table_is_complete():
    assert set(PRESETS) == {"fig2", "fig3", "fig3b", "fig4", "fig5", "fig6", "fig7"}
    for name, data in PRESETS.items():
        assert data["subcommand"] in ("evolve", "sweep", "compare")


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "subcommand": "evolve", "omega_par": -1.0, "r": 0.0,
        "t_end": 2.0, "methods": "avg",
    }))
    out_cfg = tmp_path / "cfg.csv"
    assert main(["evolve", "--config", str(cfg), "--out", str(out_cfg)]) == 0
    lines = out_cfg.read_text().strip().splitlines()
    assert lines[0] == "t,avg"
    assert float(lines[-1].split(",")[0]) <= 2.0 + 1e-12

    # an explicit flag wins over the config value
    out_flag = tmp_path / "flag.csv"
    assert main([
        "evolve", "--config", str(cfg), "--t-end", "1", "--out", str(out_flag),
    ]) == 0
    last_t = float(out_flag.read_text().strip().splitlines()[-1].split(",")[0])
    assert last_t <= 1.0 + 1e-12


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"t_end": 1.0, "bogus": 2}))
    assert main(["evolve", "--config", str(cfg)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_config_subcommand_mismatch(tmp_path, capsys):
    cfg = tmp_path / "mis.json"
    cfg.write_text(json.dumps({"subcommand": "sweep", "t_end": 1.0}))
    assert main(["evolve", "--config", str(cfg), "--methods", "avg"]) == 2


def test_config_invalid_json(tmp_path, capsys):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    assert main(["evolve", "--config", str(cfg)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


# --- top level --------------------------------------------------------------------

def test_unknown_flag_is_argparse_error():
    with pytest.raises(SystemExit) as exc_info:
        main(["evolve", "--nope"])
    assert exc_info.value.code == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["--version"])
    assert exc_info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_broken_pipe_exits_quietly():
    # a downstream consumer that closes early (| head) must not traceback
    import shlex
    import subprocess
    import sys

    cmd = (
        f"{shlex.quote(sys.executable)} -m spinhf.cli evolve "
        "--omega-perp 3 --omega-par 0 --Omega-HF 50 --r 0 --phi-hf 0 "
        "--t-end 200 --methods exact | head -2"
    )
    proc = subprocess.run(cmd, shell=True, capture_output=True, text=True)
    assert proc.returncode == 0
    assert "Traceback" not in proc.stderr
    assert proc.stderr == ""
