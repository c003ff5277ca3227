import csv
import subprocess
import sys

import numpy as np
import pytest

from vibcoh.cli import main, parse_config
from vibcoh.experiments import ConfigError, coerce, resolve_params


def _num(v):
    try:
        return float(v)
    except ValueError:
        return v


def read_table(path):
    rows = list(csv.reader(ln for ln in path.read_text().splitlines() if not ln.startswith("#")))
    cols = {name: [_num(r[i]) for r in rows[1:]] for i, name in enumerate(rows[0])}
    return {k: np.array(v) if all(isinstance(x, float) for x in v) else v for k, v in cols.items()}


def header(path):
    return [ln for ln in path.read_text().splitlines() if ln.startswith("#")]


# ---------------------------------------------------------------------------
# config parsing


def test_parse_config():
    text = "# comment\nalpha = 2.0  # trailing\n\nshots=10\n"
    assert parse_config(text) == {"alpha": "2.0", "shots": "10"}


@pytest.mark.parametrize("text", ["alpha 2", "a = 1\na = 2", " = 3"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_coerce_types():
    assert coerce("x", "3", 1) == 3
    assert coerce("x", "off", True) is False
    assert coerce("x", " reversed ", "counterintuitive") == "reversed"
    with pytest.raises(ConfigError):
        coerce("x", "abc", 1.0)


def test_resolve_rejects_unknown_key():
    with pytest.raises(ConfigError):
        resolve_params("table1", {"beta": "1"})
    with pytest.raises(ConfigError):
        resolve_params("fig9", {})


# ---------------------------------------------------------------------------
# runs


def test_table1_four_rows(tmp_path, capsys):
    assert main(["table1", "--out", str(tmp_path), "-q"]) == 0
    t = read_table(tmp_path / "table1.csv")
    assert len(t["input"]) == 4
    assert list(t["first"]) == ["g", "e", "g", "g"]
    assert list(t["second"]) == ["g", "g", "g", "e"]
    np.testing.assert_allclose(t["p_pair"], 1.0, atol=1e-9)
    assert "efficiency" in capsys.readouterr().out


def test_header_echoes_parameters(tmp_path):
    main(["table1", "--out", str(tmp_path), "--override", "alpha=2", "--seed", "3", "-q"])
    h = header(tmp_path / "table1.csv")
    assert "# engine = vibcoh 0.1.0" in h
    assert "# alpha = 2" in h
    assert "# seed = 3" in h
    assert "# experiment = table1" in h


def test_config_file_and_override_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("alpha = 1.5\nshots = 100\n")
    out = tmp_path / "o"
    assert main(["table1", "--config", str(cfg), "--override", "alpha=2", "--out", str(out), "-q"]) == 0
    h = header(out / "table1.csv")
    assert "# alpha = 2" in h and "# shots = 100" in h


def test_seeded_reruns_byte_identical(tmp_path):
    args = ["table1", "--override", "shots=500", "--seed", "11", "-q"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("table1.csv", "table1_branches.csv", "table1_summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    t = read_table(tmp_path / "a" / "table1.csv")
    assert t["shots_correct"][1] == 500


def test_fig2_peak(tmp_path):
    assert main(["fig2", "--out", str(tmp_path), "-q"]) == 0
    t = read_table(tmp_path / "fig2a.csv")
    k = int(np.argmax(t["overlap_true"]))
    assert t["overlap_true"][k] >= 0.98
    assert abs(t["gt"][k] - 6.25) <= 0.5
    assert (tmp_path / "fig2b.csv").exists()


def test_exit_codes(tmp_path, capsys):
    assert main(["fig2", "--override", "dim_x=2", "--out", str(tmp_path), "-q"]) == 3
    assert main(["fig2", "--override", "bogus=1", "--out", str(tmp_path), "-q"]) == 2
    assert main(["fig2", "--override", "novalue", "--out", str(tmp_path), "-q"]) == 2
    assert main(["fig2", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path), "-q"]) == 2
    err = capsys.readouterr().err
    assert "numerical guard" in err and "config error" in err


def test_gates_guard_exit(tmp_path):
    assert main(["gates", "--override", "theta_alt=1.0", "--override", "protocol=0", "--out", str(tmp_path), "-q"]) == 3


def test_unknown_experiment():
    with pytest.raises(SystemExit):
        main(["fig9"])


def test_sweep_writes_children(tmp_path):
    rc = main(["sweep", "--override", "base=table1", "--override", "param=alpha", "--override", "values=1.0,2.0",
               "--override", "workers=2", "--override", "shots=10", "--seed", "1", "--out", str(tmp_path), "-q"])
    assert rc == 0
    t = read_table(tmp_path / "sweep_table1_alpha.csv")
    np.testing.assert_allclose(t["alpha"], [1.0, 2.0])
    assert t["efficiency"][1] > t["efficiency"][0]
    assert (tmp_path / "alpha=2.0" / "table1.csv").exists()
    assert "# shots = 10" in header(tmp_path / "alpha=1.0" / "table1.csv")


def test_sweep_config_errors():
    with pytest.raises(ConfigError):
        resolve_params("sweep", {"base": "table1", "nope": "1"})
    assert main(["sweep", "--override", "base=sweep", "-q"]) == 2
    assert main(["sweep", "--override", "param=nope", "-q"]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "vibcoh", "table1", "--out", str(tmp_path), "-q"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0
    assert "eps = " in r.stdout
