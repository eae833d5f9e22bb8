import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from wittenlab.cli import main
from wittenlab.field import GridTopology, sample, save_field

pytestmark = pytest.mark.filterwarnings("ignore::wittenlab.witten.ResolutionWarning")


def test_run_cosine_writes_reports(tmp_path, capsys):
    assert main(["run", "cosine", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "PASS counts" in out
    bars = json.loads((tmp_path / "cosine_barcode.json").read_text())
    assert len(bars) == 2 and all(b["death"] == "inf" for b in bars)
    summary = json.loads((tmp_path / "cosine_summary.json").read_text())
    assert all(c["counts"]["0"]["observed"] == 0 for c in summary["counts"])
    for suffix in ("_prediction.json", "_spectrum.csv", "_plot.py"):
        assert (tmp_path / f"cosine{suffix}").exists()
    compile((tmp_path / "cosine_plot.py").read_text(), "plot", "exec")


def test_reports_are_deterministic_modulo_timestamp(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run", "kwell_symmetric", "--K", "3", "--h", "0.3,0.2,0.15", "--out", str(d)]) == 0
    for name in ("kwell_symmetric_barcode.json", "kwell_symmetric_prediction.json",
                 "kwell_symmetric_spectrum.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    sa, sb = (json.loads((d / "kwell_symmetric_summary.json").read_text()) for d in (a, b))
    sa.pop("generated"), sb.pop("generated")
    assert sa == sb


def test_run_from_config_file(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text(f"[scenario]\nname = double_well_1d\nh = 0.2, 0.15, 0.1\n[output]\ndir = {tmp_path}\nprefix = dw\n")
    assert main(["run", str(cfg)]) == 0
    rows = list(csv.DictReader((tmp_path / "dw_spectrum.csv").open()))
    # one exact kernel value and one labelled small value per h
    assert [r["bar_id"] == "kernel" for r in rows] == [True, False] * 3
    assert len({r["bar_id"] for r in rows if r["bar_id"] != "kernel"}) == 1


def test_bad_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[scenario]\nname = cosine\nspeed = 3\n")
    assert main(["run", str(cfg)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_input_errors_exit_3(tmp_path):
    assert main(["barcode", "--input", str(tmp_path / "missing.csv")]) == 3
    assert main(["run", "no_such_scenario"]) == 3
    assert main(["run", "cosine", "--h", "0.1,0.2"]) == 3


def test_barcode_and_predict_on_input_file(tmp_path, capsys):
    path = tmp_path / "f.json"
    save_field(sample("cos(2*x)", GridTopology.circle(32)), path)
    assert main(["barcode", "--input", str(path)]) == 0
    bars = json.loads(capsys.readouterr().out)
    assert sum(b["death"] != "inf" for b in bars) == 1
    assert main(["predict", "--input", str(path), "--window=-2,2"]) == 0
    json.loads(capsys.readouterr().out)


def test_spectrum_and_verify(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["spectrum", "--scenario", "double_well_1d", "--h", "0.2,0.15,0.1", "--out", str(out)]) == 0
    assert out.read_text().startswith("h,degree,sigma")
    assert main(["verify", "--scenario", "kwell_symmetric(4)", "--h", "0.3,0.2,0.15"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_prefactor_and_svcheck(tmp_path, capsys):
    assert main(["prefactor", "--scenario", "double_well_1d", "--h", "0.2,0.1"]) == 0
    model = json.loads(capsys.readouterr().out)
    assert len(model["model"]) == 2
    assert main(["svcheck", "--trials", "20"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_stability_subcommand(tmp_path):
    out = tmp_path / "st.json"
    assert main(["stability", "--scenario", "kwell_symmetric(3)", "--trials", "3", "--amplitude", "0.05",
                 "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["pass"] and len(data["trials"]) == 3


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "wittenlab.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "svcheck" in r.stdout
