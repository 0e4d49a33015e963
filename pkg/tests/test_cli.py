from __future__ import annotations

import csv
import io
import subprocess
import sys

import pytest

from fptjump.cli import main

BASE = """\
[model]
m = {m}
lambda = {lam}
jump = {jump}
x = {x}

[run]
seed = 42
n = 2000
t = 0.5, 1
l = 0.2, 0.8
horizon = 1, 5
"""


def write(tmp_path, m=0, lam=1, jump="exp rate=1", x=1, extra=""):
    p = tmp_path / "run.cfg"
    p.write_text(BASE.format(m=m, lam=lam, jump=jump, x=x) + extra)
    return str(p)


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_density_no_jumps_exact(tmp_path, capsys):
    code, out, _ = run(["density", "--config", write(tmp_path, lam=0)], capsys)
    assert code == 0
    table = rows(out)
    assert table[0] == ["t", "x", "estimate", "stderr", "n", "method"]
    first = dict(zip(table[0], table[2]))
    assert first["t"] == "1"
    assert float(first["estimate"]) == pytest.approx(0.241971, abs=1e-6)
    assert first["stderr"] == "0"


@pytest.mark.parametrize(
    "command,header",
    [
        ("density", ["t", "x", "estimate", "stderr", "n", "method"]),
        ("joint", ["t", "l", "g", "stderr", "n"]),
        ("zero", ["component", "value"]),
        ("mass", ["horizon", "p_hit", "stderr"]),
        ("sample", ["status", "tau", "K", "L", "n_jumps"]),
    ],
)
def test_headers_and_repeatability(tmp_path, capsys, command, header):
    cfg = write(tmp_path, jump="mix 0.5*atom@1 + 0.5*exp rate=1")
    code, first, _ = run([command, "--config", cfg], capsys)
    _, second, _ = run([command, "--config", cfg], capsys)
    assert code == 0
    assert rows(first)[0] == header
    assert first == second


def test_seventeen_digits(tmp_path, capsys):
    _, out, _ = run(["mass", "--config", write(tmp_path)], capsys)
    value = rows(out)[1][1]
    assert float(value) == float("%.17g" % float(value))


def test_out_file_and_shards(tmp_path, capsys):
    cfg = write(tmp_path)
    target = tmp_path / "o.csv"
    assert main(["density", "--config", cfg, "--out", str(target), "--shards", "3"]) == 0
    assert capsys.readouterr().out == ""
    text = target.read_text()
    _, again, _ = run(["density", "--config", cfg, "--shards", "3"], capsys)
    assert text == again
    _, other, _ = run(["density", "--config", cfg, "--shards", "2"], capsys)
    assert other != again


def test_seed_env_override(tmp_path, capsys, monkeypatch):
    cfg = write(tmp_path)
    _, base, _ = run(["mass", "--config", cfg], capsys)
    monkeypatch.setenv("FPT_SEED", "42")
    _, same, _ = run(["mass", "--config", cfg], capsys)
    monkeypatch.setenv("FPT_SEED", "7")
    _, other, _ = run(["mass", "--config", cfg], capsys)
    assert base == same and base != other
    monkeypatch.setenv("FPT_SEED", "seven")
    assert run(["mass", "--config", cfg], capsys)[0] == 2


def test_exit_codes(tmp_path, capsys):
    assert run(["density", "--config", write(tmp_path, jump="mix 0.6*atom@1 + 0.5*exp rate=1")], capsys)[0] == 2
    code, _, err = run(["density", "--config", write(tmp_path, x=-1)], capsys)
    assert code == 2 and "x" in err
    bad = tmp_path / "bad.cfg"
    bad.write_text("[model]\nm 0\n")
    code, _, err = run(["density", "--config", str(bad)], capsys)
    assert code == 1 and "line 2" in err
    assert run(["nonsense", "--config", str(bad)], capsys)[0] == 1
    assert run(["density"], capsys)[0] == 1
    assert run(["density", "--config", str(tmp_path / "missing.cfg")], capsys)[0] == 1


def test_numerical_failure_exit(tmp_path, capsys, monkeypatch):
    from fptjump import cli
    from fptjump.errors import NumericalError

    def boom(cfg):
        raise NumericalError("no convergence")

    monkeypatch.setitem(cli.COMMANDS, "zero", boom)
    assert run(["zero", "--config", write(tmp_path)], capsys)[0] == 3


def test_validate_exit_four_on_failure(tmp_path, capsys, monkeypatch):
    from fptjump import validation
    from fptjump.validation import CheckResult

    def fake(seed, shards, quick):
        good, bad = CheckResult(1, "a"), CheckResult(2, "b")
        good.add("ok", 1.0, 1.0, 0.0)
        bad.add("off", 2.0, 1.0, 0.5)
        return [good, bad]

    monkeypatch.setattr(validation, "run_all", fake)
    code, out, _ = run(["validate", "--config", write(tmp_path)], capsys)
    assert code == 4
    assert [r[-1] for r in rows(out)[1:]] == ["true", "false"]


def test_console_script(tmp_path):
    cfg = write(tmp_path, lam=0)
    proc = subprocess.run([sys.executable, "-m", "fptjump.cli", "zero", "--config", cfg], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "component,value"


@pytest.mark.slow
def test_validate_quick_on_reference_config(capsys):
    from pathlib import Path

    cfg = Path(__file__).resolve().parents[1] / "configs" / "reference.cfg"
    code, out, _ = run(["validate", "--config", str(cfg), "--quick"], capsys)
    table = rows(out)
    assert table[0] == ["check_name", "value", "reference", "tolerance", "pass"]
    assert code == 0
    assert all(r[-1] == "true" for r in table[1:])
