import csv
import io
import json
import math

import pytest

from dbctl import reference as ref
from dbctl.cli import main
from dbctl.simulate import cycloid_oracle


@pytest.fixture
def files(tmp_path):
    out = {}
    for key, text in (("b", ref.BRACHISTOCHRONE), ("q", ref.QUANTUM), ("l", ref.LINDBLAD)):
        p = tmp_path / f"{key}.dbc"
        p.write_text(text)
        out[key] = str(p)
    bad = tmp_path / "bad.dbc"
    bad.write_text("problem p\nstate x\ndynamics\n  x' = x +* 2\n")
    out["bad"] = str(bad)
    return out


def test_analyze_text_and_json(files, capsys, tmp_path):
    assert main(["analyze", files["b"]]) == 0
    assert "optimal u = " in capsys.readouterr().out
    target = tmp_path / "r.json"
    assert main(["analyze", files["b"], "--json", str(target)]) == 0
    assert json.loads(target.read_text())["problem"] == "brachistochrone"
    capsys.readouterr()
    assert main(["analyze", files["q"], "--json", "-"]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "quantum"


def test_analyze_errors(files, capsys):
    assert main(["analyze", files["bad"]]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error: ") and "line 4, column 11" in err
    assert main(["analyze", "/nonexistent/file.dbc"]) == 1
    with pytest.raises(SystemExit) as info:
        main(["analyze"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 2


def test_simulate_preset_lands_on_cycloid(files, capsys):
    assert main(["simulate", files["b"], "--preset", "offset-start", "--param", "g=9.8"]) == 0
    cap = capsys.readouterr()
    rows = list(csv.reader(io.StringIO(cap.out)))
    header, last = rows[0], rows[-1]
    assert header[:5] == ["t", "x1", "x2", "x3", "x4"]
    x, y = cycloid_oracle(1.0, 9.8, math.pi)
    assert abs(float(last[1]) - x) < 1e-6 and abs(float(last[3]) - y) < 1e-6
    assert "final deviation from the cycloid" in cap.err


def test_simulate_quantum_to_file(files, capsys, tmp_path):
    out = tmp_path / "q.csv"
    args = ["simulate", files["q"], "--ic", "psi1=1,psi2=0", "--t-final", "1", "--dt", "0.01",
            "--param", "H11=0,H12=i,H21=-i,H22=0,omega=1", "--out", str(out)]
    assert main(args) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 101
    last = rows[-1]
    # H = -sigma_y: psi(t) = (cos t, -sin t)
    assert float(last["psi1_re"]) == pytest.approx(math.cos(1.0), abs=1e-9)
    assert float(last["psi2_re"]) == pytest.approx(-math.sin(1.0), abs=1e-9)
    assert float(last["norm"]) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("extra, message", [
    (["--ic", "x1=0,x2=1,x3=0,x4=1"], "g"),
    (["--ic", "x1=0,x2=1,x3=0,x4=1", "--param", "g=9.8"], "--t-final"),
    (["--ic", "zz=1", "--param", "g=9.8", "--t-final", "1"], "unknown state zz"),
    (["--ic", "x1=0,x2=1,x3=0,x4=1", "--param", "g=9.8", "--t-final", "1", "--dt", "0"], "step"),
    (["--ic", "x1=abc", "--param", "g=9.8", "--t-final", "1"], "not a number"),
    (["--ic", "x1=0,x2=0,x3=0,x4=0", "--param", "g=9.8", "--t-final", "1"], "integration aborted"),
])
def test_simulate_domain_errors(files, capsys, extra, message):
    assert main(["simulate", files["b"], *extra]) == 1
    assert message in capsys.readouterr().err


def test_simulate_rejects_lindblad_and_quantum_preset(files, capsys):
    assert main(["simulate", files["l"], "--t-final", "1"]) == 1
    assert main(["simulate", files["q"], "--preset", "offset-start"]) == 1
    assert main(["simulate", files["q"], "--ic", "psi1=1", "--t-final", "1"]) == 1
    assert "psi2" in capsys.readouterr().err


def test_verify_quantum_passes(capsys):
    assert main(["verify", "quantum"]) == 0
    out = capsys.readouterr().out
    assert "PASS  closed-form trajectory" in out and out.rstrip().endswith("all checks passed")
