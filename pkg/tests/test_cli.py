import numpy as np

from nafdm.cli import main
from nafdm.config import CSV_COLUMNS

from test_config import SMALL


def test_simulate_and_determinism(tmp_path):
    cfg = tmp_path / "suite.toml"
    cfg.write_text(SMALL)
    out1, out2, out3 = (tmp_path / f"r{i}.csv" for i in range(3))
    assert main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(out2), "--workers", "2"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert main(["simulate", "--config", str(cfg), "--out", str(out3), "--runs", "b", "--seed", "8"]) == 0
    lines = out3.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 3
    assert all(line.startswith("b,") and line.endswith(",8") for line in lines[1:])


def test_simulate_errors(tmp_path, capsys):
    cfg = tmp_path / "suite.toml"
    cfg.write_text(SMALL)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x.csv"), "--runs", "zz"]) == 2
    assert "zz" in capsys.readouterr().err
    bad = tmp_path / "bad.toml"
    bad.write_text("[[run]]\nid = 1\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
    assert "field 'id'" in capsys.readouterr().err


def test_dump_ici(tmp_path):
    out = tmp_path / "c.txt"
    assert main(["dump-ici", "--n", "16", "--alpha-num", "4", "--alpha-den", "5", "--c2", "0.09375", "--out", str(out)]) == 0
    mag = np.loadtxt(out)
    assert mag.shape == (16, 16)
    assert mag[0, 5] < 1e-10 and mag[0, 1] > 0.1
    assert main(["dump-ici", "--n", "16", "--alpha-num", "5", "--alpha-den", "4", "--out", str(out)]) == 2


def test_dump_channel(tmp_path):
    out = tmp_path / "h.txt"
    args = ["dump-channel", "--n", "16", "--c1", "0.09375", "--delay", "1", "--doppler", "1", "--out", str(out)]
    assert main(args) == 0
    mag = np.loadtxt(out)
    assert np.all(np.argmax(mag, axis=1) == (np.arange(16) + 4) % 16)


def test_default_config(tmp_path, capsys):
    assert main(["default-config", "--seed", "4"]) == 0
    assert "seed = 4" in capsys.readouterr().out
    out = tmp_path / "d.toml"
    assert main(["default-config", "--out", str(out)]) == 0
    assert "[[run]]" in out.read_text()
