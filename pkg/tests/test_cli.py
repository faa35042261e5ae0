import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qpdsim import __version__
from qpdsim.cli import main
from qpdsim.report import ReportDocument


def circuit(inputs, gates=(), detectors=None, **extra):
    d = {
        "modes": len(inputs),
        "inputs": list(inputs),
        "gates": list(gates),
        "detectors": detectors or [{"type": "heterodyne"}] * len(inputs),
    }
    d.update(extra)
    return d


def coh(a):
    return {"type": "coherent", "params": {"amplitude": a}}


def fock(n):
    return {"type": "fock", "params": {"n": n}}


def gate(kind, modes, **params):
    return {"type": kind, "modes": list(modes), "params": params}


SQ_LOSS = circuit([{"type": "squeezed", "params": {"r": 0.2}}], [gate("loss", [0], eta=0.8)])
FOCK_SQUEEZE = circuit([fock(1)], [gate("squeeze", [0], r=0.3)])


@pytest.fixture
def write(tmp_path):
    def _write(doc, name="c.json"):
        p = tmp_path / name
        p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
        return str(p)
    return _write


def rows(text):
    return list(csv.reader(io.StringIO(text)))


# -- analyze -------------------------------------------------------------------

def test_analyze_failing_circuit(write, tmp_path, capsys):
    rep = tmp_path / "r.json"
    assert main(["analyze", write(FOCK_SQUEEZE), "--report", str(rep)]) == 2
    doc = ReportDocument.from_json(rep.read_text())
    assert doc.outcome == "Failed"
    assert doc.failure["layer_index"] == 0
    assert "failed at layer 0" in capsys.readouterr().out


def test_analyze_empty_coherent(write, capsys):
    assert main(["analyze", write(circuit([coh(0.5)]))]) == 0
    assert "Simulable" in capsys.readouterr().out


def test_analyze_policy_flag(write, tmp_path):
    doc = circuit([{"type": "squeezed", "params": {"r": 0.2}}, coh(0)], [gate("beamsplitter", [0, 1], theta=0.4)])
    rep = tmp_path / "r.json"
    assert main(["analyze", write(doc), "--policy", "greedy-b", "--report", str(rep)]) == 0
    assert ReportDocument.from_json(rep.read_text()).policy == "greedy-b"
    assert main(["analyze", write(doc), "--policy", "sideways"]) == 1


@pytest.mark.parametrize(
    "text, fragment",
    [
        ('{"modes": 1,\n "inputs": [}', "line 2"),
        (json.dumps(circuit([coh(0)], [gate("loss", [0], eta=2.0)])), "gates[0].params.eta"),
        (json.dumps(circuit([coh(0)], extra_key=1)), "<root>"),
    ],
)
def test_analyze_malformed(write, capsys, text, fragment):
    assert main(["analyze", write(text)]) == 1
    assert fragment in capsys.readouterr().err


def test_missing_file_and_bad_command(capsys):
    assert main(["analyze", "/nonexistent/c.json"]) == 1
    assert main(["frobnicate"]) == 1


def test_version(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


# -- sample --------------------------------------------------------------------

def test_sample_csv_is_byte_identical(write, tmp_path):
    path = write(SQ_LOSS)
    outs = []
    for name, threads in (("a.csv", "1"), ("b.csv", "1"), ("c.csv", "3")):
        out = tmp_path / name
        assert main(["sample", path, "-n", "500", "--seed", "7", "--threads", threads, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    table = rows(outs[0].decode())
    assert table[0] == ["record", "mode", "outcome_q", "outcome_p"]
    assert len(table) == 501


def test_sample_seed_changes_output(write, capsys):
    path = write(SQ_LOSS)
    main(["sample", path, "-n", "5", "--seed", "1"])
    a = capsys.readouterr().out
    main(["sample", path, "-n", "5", "--seed", "2"])
    assert capsys.readouterr().out != a


def test_sample_thread_env(write, capsys, monkeypatch):
    path = write(SQ_LOSS)
    main(["sample", path, "-n", "50", "--seed", "3"])
    base = capsys.readouterr().out
    monkeypatch.setenv("QPD_SIM_THREADS", "4")
    assert main(["sample", path, "-n", "50", "--seed", "3"]) == 0
    assert capsys.readouterr().out == base
    monkeypatch.setenv("QPD_SIM_THREADS", "many")
    assert main(["sample", path, "-n", "5"]) == 1


def test_sample_on_off_header(write, capsys):
    doc = circuit([coh(1)], detectors=[{"type": "onoff"}])
    assert main(["sample", write(doc), "-n", "2000", "--seed", "0"]) == 0
    table = rows(capsys.readouterr().out)
    assert table[0] == ["record", "mode", "click"]
    clicks = np.array([int(r[2]) for r in table[1:]])
    # P(no click) = exp(-|alpha|^2)
    assert abs(1 - clicks.mean() - math.exp(-1)) < 4 * math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / 2000)


def test_sample_mixed_header(write, capsys):
    doc = circuit([coh(1), coh(0)], detectors=[{"type": "heterodyne"}, {"type": "onoff"}])
    assert main(["sample", write(doc), "-n", "3"]) == 0
    table = rows(capsys.readouterr().out)
    assert table[0] == ["record", "mode", "outcome_q", "outcome_p", "click"]
    assert table[1][4] == "" and table[2][2] == "" and table[2][4] in ("0", "1")


def test_sample_exit_codes(write):
    assert main(["sample", write(FOCK_SQUEEZE), "-n", "5"]) == 2
    assert main(["sample", write(circuit([fock(1)])), "-n", "5"]) == 3


# -- verify --------------------------------------------------------------------

def test_verify_identity_heterodyne(write, capsys):
    assert main(["verify", write(circuit([coh(0.5)])), "--samples", "100000"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    stats = [float(line.split("=")[1]) for line in out.splitlines() if "KS" in line]
    assert len(stats) == 2 and max(stats) < 0.01


def test_verify_corrupted_kernel_fails(write, capsys):
    assert main(["verify", write(SQ_LOSS), "--samples", "20000", "--corrupt-kernel"]) == 2
    assert "FAIL" in capsys.readouterr().out


def test_verify_discrete(write, capsys):
    doc = circuit([coh(1)], [gate("loss", [0], eta=0.5)], [{"type": "onoff"}])
    assert main(["verify", write(doc), "--samples", "100000"]) == 0
    assert "TV" in capsys.readouterr().out


def test_verify_three_modes(write, capsys):
    assert main(["verify", write(circuit([coh(0)] * 3))]) == 4
    assert "oracle limited to 2 modes" in capsys.readouterr().err


def test_verify_truncation_abort(write, capsys):
    assert main(["verify", write(circuit([coh(6), coh(6)])), "--samples", "10"]) == 4
    assert "truncation" in capsys.readouterr().err


def test_corrupt_flag_hidden():
    from qpdsim.cli import build_parser

    sub = build_parser()._subparsers._group_actions[0].choices["verify"]
    assert "corrupt" not in sub.format_help()


# -- cubic-rstar, curves, loss-tolerance ---------------------------------------

def test_cubic_rstar(capsys):
    assert main(["cubic-rstar", "--eps", "1e-2,0.5"]) == 0
    table = rows(capsys.readouterr().out)
    assert table[0] == ["epsilon", "r_star", "bracket_lo", "bracket_hi", "min_value", "status"]
    assert 5.3 <= float(table[1][1]) <= 5.7 and table[1][5] == "ok"
    assert table[2][1] == "" and table[2][5].startswith("error")


def test_curves_squeeze(capsys):
    assert main(["curves", "--gate", "squeeze", "--r", "0.3"]) == 0
    table = rows(capsys.readouterr().out)[1:]
    assert [float(r[0]) for r in table] == pytest.approx([-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9], abs=0)
    for s, t, ok in table:
        s, t = float(s), float(t)
        assert t == s * math.exp(-0.6 if s >= 0 else 0.6)
        assert ok == ("1" if s >= -math.exp(-0.6) else "0")


def test_curves_subtraction_endpoint(capsys):
    assert main(["curves", "--gate", "subtraction", "--kappa", "0.5", "--s-min", "-1", "--s-max", "1"]) == 0
    table = [(float(a), float(b)) for a, b, _ in rows(capsys.readouterr().out)[1:]]
    assert any(a == pytest.approx(-1 / 3, abs=1e-12) and b == pytest.approx(-1, abs=1e-12) for a, b in table)


def test_curves_kappa_zero_is_diagonal(capsys):
    assert main(["curves", "--gate", "subtraction", "--kappa", "0", "--s-min", "-0.9", "--points", "13"]) == 0
    for a, b, _ in rows(capsys.readouterr().out)[1:]:
        assert float(a) == pytest.approx(float(b), abs=1e-15)


def test_loss_tolerance(write, capsys):
    assert main(["loss-tolerance", write(FOCK_SQUEEZE), "--layer", "0"]) == 0
    value = float(capsys.readouterr().out.split("=")[1].split()[0])
    assert value == pytest.approx(1 - (1 + math.exp(-0.6)) / 2, abs=2e-3)
    cubic = circuit([coh(0)], [gate("cubic", [0], gamma=8.0)], [{"type": "single_photon"}])
    assert main(["loss-tolerance", write(cubic)]) == 2
    assert main(["loss-tolerance", write(FOCK_SQUEEZE), "--layer", "9"]) == 1


def test_console_script(write):
    # the installed entry point maps exit codes the same way
    proc = subprocess.run([sys.executable, "-m", "qpdsim.cli", "analyze", write(FOCK_SQUEEZE)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
