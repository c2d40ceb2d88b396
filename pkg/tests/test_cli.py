import csv
import json
import subprocess
import sys

import pytest

from relaybf.cli import CAMPAIGN_COLUMNS, SAMPLE_COLUMNS, fmt, main

SMALL = """\
network.num_relays = 1
network.num_ues = 2
network.n_bs = 4
network.n_rn = 4
network.n_ue = 2
network.cell_radius = 750 m
network.bs_rn_ratio = 0.5
network.num_subcarriers = 2
radio.bandwidth = 180 kHz
radio.n0 = -174 dBm/Hz
radio.snr_gap = 0 dB
radio.p_max_bs = 20 dBm
radio.p_max_rn = 10 dBm
grouping.alpha = 0.3
sweep.alpha = 0.1, 0.3
sim.num_samples = 3
sim.seed = 1
"""


@pytest.fixture
def conf(tmp_path):
    p = tmp_path / "small.conf"
    p.write_text(SMALL)
    return p


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def test_fmt():
    assert fmt(float("nan")) == ""
    assert fmt(3) == "3"
    assert fmt(0.1) == "0.1"
    assert fmt(1e-20) == "0.00000000000000000001"
    assert fmt(2.0e7) == "20000000"
    assert "e" not in fmt(123456789.123)


def test_run_writes_csv_meta_and_samples(conf, tmp_path):
    out = tmp_path / "out.csv"
    per = tmp_path / "samples.csv"
    assert main(["run", str(conf), "--out", str(out), "--per-sample", str(per)]) == 0
    rows = read_csv(out)
    assert tuple(rows[0]) == CAMPAIGN_COLUMNS
    assert [r[0] for r in rows[1:]] == ["alpha", "alpha"]
    assert [r[1] for r in rows[1:]] == ["0.1", "0.3"]
    meta = json.loads((tmp_path / "out.csv.meta.json").read_text())
    assert "grouping.alpha = 0.3" in meta["config"]
    for value in ("0.1", "0.3"):
        sample_rows = read_csv(tmp_path / f"samples_alpha_{value}.csv")
        assert tuple(sample_rows[0]) == SAMPLE_COLUMNS and len(sample_rows) == 4


def test_overrides(conf, tmp_path):
    out = tmp_path / "o.csv"
    assert main(["run", str(conf), "--samples", "2", "--seed", "5", "--out", str(out)]) == 0
    assert all(r[-2] == "2" for r in read_csv(out)[1:])
    meta = json.loads((tmp_path / "o.csv.meta.json").read_text())
    assert "sim.seed = 5" in meta["config"] and "sim.num_samples = 2" in meta["config"]


def test_stdout_when_no_out(conf, capsys):
    assert main(["run", str(conf), "--samples", "1"]) == 0
    assert capsys.readouterr().out.startswith(",".join(CAMPAIGN_COLUMNS))


def test_missing_file_exit_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.conf")]) == 2
    assert "missing.conf" in capsys.readouterr().err


def test_bad_config_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.conf"
    p.write_text(SMALL.replace("radio.n0 = -174 dBm/Hz", "radio.n0 = -174 dB"))
    assert main(["run", str(p)]) == 2
    assert "line 10: radio.n0" in capsys.readouterr().err


def test_unknown_flag_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["fig2", "--bogus"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_bad_numeric_override(conf):
    assert main(["run", str(conf), "--samples", "0"]) == 2
    assert main(["run", str(conf), "--threads", "0"]) == 2


def test_validate_exit_0(capsys):
    assert main(["validate"]) == 0
    assert "properties passed" in capsys.readouterr().out


def test_fig2_smoke(tmp_path):
    out = tmp_path / "f2.csv"
    assert main(["fig2", "--samples", "1", "--seed", "7", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r[1] for r in rows[1:]] == ["0.1", "0.2", "0.3", "0.4", "0.5"]


def test_module_entry_point(conf):
    proc = subprocess.run(
        [sys.executable, "-m", "relaybf", "run", str(conf), "--samples", "1"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and proc.stdout.startswith("sweep_var,")
