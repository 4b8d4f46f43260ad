from __future__ import annotations

import pytest

from pieceable.cli import main, read_config
from pieceable.harness import REFERENCE, read_results


def test_verify_structural(capsys):
    assert main(["verify", "--skip-faults"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "all checks passed" in out


def test_codes(capsys):
    assert main(["codes"]) == 0
    out = capsys.readouterr().out
    assert "1010101|0000000" in out and "rm15" in out


def test_gen_data_is_deterministic(tmp_path):
    paths = [tmp_path / "a.txt", tmp_path / "b.txt"]
    for p, w in zip(paths, (1, 2)):
        assert main(["gen-data", "--eps", "2e-3", "--shots", "400", "--seed", "5", "--workers", str(w),
                     "--out", str(p)]) == 0
    a, b = (p.read_text().splitlines() for p in paths)
    assert a[0].startswith("# s_lec") and "workers=1" in a[0] and "workers=2" in b[0]
    assert a[1:] == b[1:] and len(a) > 1


def test_simulate_zero_noise(tmp_path, capsys):
    out = tmp_path / "r.txt"
    assert main(["simulate", "--circuit", "both", "--decoder", "mwd,lookup", "--eps", "0", "--shots", "100",
                 "--out", str(out)]) == 0
    rows, header = read_results(out)
    assert len(rows) == 4 and all(r.failures == 0 and r.shots == 100 for _, _, r in rows)
    assert header["shots"] == 100 or header["shots"] == "100"


def test_threshold_report_includes_reference(tmp_path, capsys):
    out = tmp_path / "r.txt"
    main(["simulate", "--circuit", "A", "--eps", "1e-3 2e-3 4e-3", "--shots", "3000", "--out", str(out)])
    capsys.readouterr()
    assert main(["threshold", "--circuit", "A", "--results", str(out), "--fit-min", "1e-3", "--fit-max", "5e-3"]) == 0
    text = capsys.readouterr().out
    assert "eps_star=" in text and f"{REFERENCE[('A', 'mwd')]:.3g}" in text
    assert main(["report", "--results", str(out), "--fit-min", "1e-3", "--fit-max", "5e-3"]) == 0
    assert "A" in capsys.readouterr().out


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nshots = 50\neps=0\ncircuit=B\n")
    assert read_config(cfg) == {"shots": "50", "eps": "0", "circuit": "B"}
    out = tmp_path / "r.txt"
    assert main(["--config", str(cfg), "simulate", "--out", str(out)]) == 0
    rows, _ = read_results(out)
    assert [(c, r.shots) for c, _, r in rows] == [("B", 50)]
    bad = tmp_path / "bad.cfg"
    bad.write_text("shots 50\n")
    with pytest.raises(SystemExit):
        read_config(bad)


def test_unknown_circuit():
    with pytest.raises(SystemExit):
        main(["simulate", "--circuit", "C", "--eps", "0", "--shots", "1", "--out", "/dev/null"])
