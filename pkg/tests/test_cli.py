import subprocess
import sys

import pytest

from sublevel_sense import cli
from sublevel_sense.numerics import ConvergenceError


def _run(tmp_path, *args):
    out = tmp_path / "out.csv"
    code = cli.main([*args, "--output", str(out)])
    return code, out


def _table(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return lines[0].split(","), [l.split(",") for l in lines[1:]]


def test_precess_columns(tmp_path):
    code, out = _run(tmp_path, "precess", "--f", "3", "--initial-m", "3", "--phases", "0:6.2832:0.001")
    assert code == 0
    header, rows = _table(out)
    assert header[:2] == ["phase", "p_+3"] and header[7] == "p_-3"
    assert header[8] == "inv_dphi_+3" and header[-1] == "inv_dphi_Fx"
    assert len(rows) == 6284
    text = out.read_text()
    assert text.startswith("# experiment: precess\n# reproduces: ")


def test_half_integer_columns(tmp_path):
    code, out = _run(tmp_path, "parity", "--f", "3/2", "--initial-m", "1/2", "--phases", "0:1:0.5")
    assert code == 0
    header, rows = _table(out)
    assert header == ["phase", "p_even", "dp_even_dphi", "inv_dphi_even"] and len(rows) == 3


def test_identical_config_gives_identical_bytes(tmp_path):
    args = ["sequential", "--f", "7/2", "--initial-m", "1/2", "--phases", "0.2:2.9:0.05"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main([*args, "--output", str(a)]) == 0
    assert cli.main([*args, "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# parity run\nf = 2\ninitial_m = 1\nphases = 0:1:0.25\nprecision = 6\n")
    code, out = _run(tmp_path, "parity", "--config", str(cfg), "--initial-m", "0")
    assert code == 0
    text = out.read_text()
    assert "# config: f = 2\n" in text and "# config: initial-m = 0\n" in text
    assert "# config: precision = 6\n" in text
    _, rows = _table(out)
    assert rows[0][1] == "1"  # |2,0>_x at phase 0 is entirely even


@pytest.mark.parametrize(
    "content",
    ["colour = blue\n", "f 3\n", "f = 3\nf = 4\n", "experiment = precess\n"],
)
def test_strict_config_parsing(tmp_path, content):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(content)
    code, out = _run(tmp_path, "parity", "--config", str(cfg))
    assert code == 2 and not out.exists()


@pytest.mark.parametrize(
    "args",
    [
        ["precess", "--phases", "0:1"],
        ["precess", "--phases", "0:1:-0.1"],
        ["precess", "--phases", "1:0:0.1"],
        ["precess", "--phases", "0:1:auto"],
        ["precess", "--f", "0"],
        ["precess", "--initial-m", "9"],
        ["precess", "--precision", "40"],
        ["harmonic", "--f", "5/2"],
        ["edm-scan", "--bias", "10:11:0.5"],
        ["edm-eigen", "--stark-e1", "0"],
        ["transverse", "--sin-gamma", "1"],
        ["nonsense"],
        [],
    ],
)
def test_config_errors_exit_2_without_output(tmp_path, args, capsys):
    code, out = _run(tmp_path, *args) if args else (cli.main([]), tmp_path / "none")
    assert code == 2
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_numerical_failure_exits_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise ConvergenceError("no convergence after 100 sweeps")

    monkeypatch.setattr(cli.edm, "eigen_spectrum_scan", boom)
    code, out = _run(tmp_path, "edm-eigen")
    assert code == 3 and not out.exists()
    assert not list(tmp_path.glob(".sublevel-*"))


def test_list_names_every_experiment(capsys):
    assert cli.main(["--list"]) == 0
    listed = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert listed == list(cli.EXPERIMENTS)
    assert set(listed) == {
        "precess", "sequential", "parity", "harmonic", "scaling",
        "transverse", "edm-eigen", "edm-scan", "edm-threshold",
    }


def test_scaling_table_laws(tmp_path):
    code, out = _run(tmp_path, "scaling", "--f-max", "6")
    header, rows = _table(out)
    assert code == 0 and len(rows) == 12
    i, j = header.index("inv_dphi_combined"), header.index("inv_dphi_law")
    for row in rows:
        assert abs(float(row[i]) - float(row[j])) < 1e-9
    combined = [float(r[i]) for r in rows]
    assert combined == sorted(combined)


def test_summary_line_on_stdout(tmp_path, capsys):
    code, out = _run(tmp_path, "harmonic", "--phases", "0:1:0.5")
    assert code == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("harmonic: 3 rows x 3 columns") and line.endswith(str(out))


def test_stdout_mode(capsys):
    assert cli.main(["edm-eigen", "--transverse-grid", "0:1:1"]) == 0
    captured = capsys.readouterr()
    assert captured.out.splitlines()[-3].startswith("transverse,energy_0")
    assert "edm-eigen" in captured.err


def test_number_format():
    assert cli.format_number(-0.0, 12) == "0"
    assert cli.format_number(float("inf"), 12) == "inf"
    assert cli.format_number(1 / 3, 5) == "0.33333"
    assert cli.format_number(2.0, 12) == "2"


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    res = subprocess.run(
        [sys.executable, "-m", "sublevel_sense", "parity", "--phases", "0:0.1:0.1", "--output", str(out)],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0 and out.exists()
