import csv
import json

import pytest

from conegoursat.cli import main, run
from conegoursat.config import parse_config
from conegoursat.errors import ParseError, RangeError
from conegoursat.nonlinearity import SourceSpec, WaveMapSource

MINIMAL = """
[geometry]
n = 4
a = 1
lambda = -0.5

[weights]
alpha = -0.5

[source]
terms =
    1.0 3 0 0 0 0
"""

SMALL = """
[grid]
ny = 40
"""


def test_minimal_config():
    cfg = parse_config(MINIMAL)
    assert (cfg.n, cfg.a, cfg.lam, cfg.alpha) == (4, 1.0, -0.5, -0.5)
    src = cfg.source()
    assert isinstance(src, SourceSpec) and src.zero_order == 3
    assert len(cfg.config_hash) == 64


def test_empty_text_uses_defaults():
    cfg = parse_config("")
    assert cfg.ny == 400 and cfg.nx == 400 and cfg.u_max == 0.25 and cfg.eps_scri == 5e-4


def test_alpha_out_of_range():
    with pytest.raises(RangeError) as info:
        parse_config("[weights]\nalpha = 0\n")
    assert info.value.key == "weights.alpha"


@pytest.mark.parametrize("text, line", [
    ("[geometry]\nn = 4\nbogus = 1\n", 3),
    ("[geometry]\nn = four\n", 2),
    ("n = 4\n", 1),
    ("[geometry]\nn = 4\n[nowhere]\nx = 1\n", 3),
    ("[source]\nterms =\n    1.0 3 x 0 0 0\n", 2),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_config(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_range_errors_name_key():
    for text, key in (("[grid]\nu_max = 0.9\n", "grid.u_max"),
                      ("[picard]\ntol = 0\n", "picard.tol"),
                      ("[geometry]\nlambda = -2\n", "geometry.lambda"),
                      ("[data]\nplus = gaussian 0 -1 1\n", "data.plus")):
        with pytest.raises(RangeError) as info:
            parse_config(text)
        assert info.value.key == key


def test_hash_is_canonical():
    a = parse_config("[geometry]\nn = 4\n")
    b = parse_config("# comment\n[geometry]\nn=4.0   \n")
    c = parse_config("[geometry]\nn = 5\n")
    assert a.config_hash == b.config_hash != c.config_hash


def test_step_sizes_and_wavemap():
    cfg = parse_config("[grid]\nhy = 0.00125\nhx = 0.0025\n[source]\nterms = wavemap K=1 N=3\n")
    assert (cfg.ny, cfg.nx) == (200, 200)
    src = cfg.source()
    assert isinstance(src, WaveMapSource) and src.n_components == 3
    with pytest.raises(RangeError):
        parse_config("[grid]\nny = 10\nhy = 0.01\n")


def test_cli_verify(tmp_path):
    assert main(["verify", "-o", str(tmp_path)]) == 0
    checks = json.loads((tmp_path / "verify.json").read_text())
    assert all(c["pass"] for c in checks.values())


def test_cli_gate_exit(tmp_path):
    p = tmp_path / "gate.ini"
    p.write_text("[geometry]\nn = 3\n[grid]\nny = 20\n")
    assert main(["solve", str(p), "-o", str(tmp_path / "out")]) == 2


def test_cli_config_and_divergence_exits(tmp_path):
    assert main(["solve", str(tmp_path / "missing.ini")]) == 4
    p = tmp_path / "bad.ini"
    p.write_text("[weights]\nalpha = 0\n")
    assert main(["solve", str(p)]) == 4
    p.write_text("[grid]\nny = 60\n[data]\nplus = gaussian -0.25 0.05 100\n")
    assert main(["solve", str(p), "-o", str(tmp_path / "div")]) == 3
    assert json.loads((tmp_path / "div" / "report.json").read_text())["status"] == "diverged"


def test_cli_outputs(tmp_path, monkeypatch):
    p = tmp_path / "run.ini"
    p.write_text(SMALL)
    monkeypatch.setenv("GOURSAT_OUTPUT_DIR", str(tmp_path / "env"))
    for cmd in ("solve", "decay", "norms"):
        assert main([cmd, str(p)]) == 0
    out = tmp_path / "env"
    with open(out / "field.csv") as fh:
        assert next(csv.reader(fh)) == ["y", "x", "omega", "dyomega", "dxomega"]
    with open(out / "decay.csv") as fh:
        assert next(csv.reader(fh)) == ["t_plus_r", "f", "dtf", "drf", "ynull"]
    with open(out / "norms.csv") as fh:
        assert next(csv.reader(fh)) == ["quantity", "u", "v", "value", "weight_ell", "weight_Lambda"]
    fit = json.loads((out / "decay_fit.json").read_text())
    assert set(fit["channels"]) == {"f", "dtf", "drf"}
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "converged"


def test_sweep_matches_individual_runs(tmp_path):
    text = SMALL + "[sweep]\ngeometry.n = 4, 5, 6\n"
    p = tmp_path / "sweep.ini"
    p.write_text(text)
    assert main(["sweep", str(p), "-o", str(tmp_path / "sw"), "-j", "3"]) == 0
    runs = sorted((tmp_path / "sw").glob("run_*"))
    assert len(runs) == 3
    for n, d in zip((4, 5, 6), runs):
        cfg = parse_config(SMALL + f"[geometry]\nn = {n}\n")
        single = tmp_path / f"single_{n}"
        run("solve", cfg, single)
        for name in ("field.csv", "report.json", "summary.json"):
            assert (d / name).read_bytes() == (single / name).read_bytes()
