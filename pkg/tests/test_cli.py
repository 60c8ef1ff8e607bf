import json

import pytest

from ma_eigen.cli import ConfigError, main, parse_config
from ma_eigen.oracles import radial_eigenvalue


def test_parse_interval():
    cfg = parse_config('{"domain":{"kind":"interval","a":0,"b":1},"h":0.00390625}')
    assert cfg.h == 0.00390625 and cfg.domain.dim == 1
    assert cfg.iteration.max_iter == 500 and cfg.margin == 0.05


def test_parse_disk():
    cfg = parse_config('{"domain":{"kind":"disk","center":[0,0],"radius":1},"h":0.0078125,"W":2}')
    assert cfg.W == 2 and cfg.domain.kind == "disk"


@pytest.mark.parametrize(
    "doc, key",
    [
        ('{"domain":{"kind":"disk","center":[0,0],"radius":1},"h":-1}', "h"),
        ('{"domain":{"kind":"disk","center":[0,0],"radius":1},"h":0.1,"colour":1}', "colour"),
        ('{"domain":{"kind":"disk","center":[0,0],"radius":1},"h":0.1,"solver":{"sweeps":3}}', "solver.sweeps"),
        ('{"domain":{"kind":"disk","center":[0,0],"radius":1},"h":0.1,"W":9}', "W"),
        ('{"domain":{"kind":"blob"},"h":0.1}', "domain"),
        ('{"domain":{"kind":"disk","center":[0,0],"radius":1},"h":0.1,"iteration":{"max_iter":0}}', "iteration"),
        ("not json", "<document>"),
    ],
)
def test_parse_errors_name_key(doc, key):
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    assert info.value.key == key
    assert f"'{key}'" in str(info.value)


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, {"domain": {"kind": "interval", "a": 0, "b": 1}, "h": -1})
    assert main(["eigen", "--config", cfg]) == 3
    err = capsys.readouterr().err
    assert "h" in err and len(err.strip().splitlines()) == 1


def test_missing_config_file(tmp_path):
    assert main(["eigen", "--config", str(tmp_path / "nope.json")]) == 3


def test_unknown_command():
    assert main(["frobnicate"]) == 3


def test_oracle_1d(capsys):
    assert main(["oracle", "1d", "--length", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["lambda"] == pytest.approx(9.8696044, rel=1e-7)


def test_oracle_radial(capsys):
    assert main(["oracle", "radial", "--n", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["lambda_unit_ball"] == pytest.approx(radial_eigenvalue(2))


def test_eigen_deterministic(tmp_path):
    doc = {"domain": {"kind": "disk", "center": [0, 0], "radius": 1}, "h": 1 / 16, "W": 2}
    cfg = _write(tmp_path, doc)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["eigen", "--config", cfg, "--out", str(a)]) == 0
    assert main(["eigen", "--config", cfg, "--out", str(b)]) == 0
    for name in ("history.csv", "result.json", "eigenfunction.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    result = json.loads((a / "result.json").read_text())
    assert result["status"] == "converged"
    assert result["lambda"] == pytest.approx(radial_eigenvalue(2), rel=0.1)


def test_eigen_nonconvergence_exit(tmp_path):
    doc = {
        "domain": {"kind": "interval", "a": 0, "b": 1}, "h": 1 / 64,
        "iteration": {"max_iter": 2},
    }
    assert main(["eigen", "--config", _write(tmp_path, doc), "--out", str(tmp_path)]) == 2
    assert json.loads((tmp_path / "result.json").read_text())["status"] == "max_iter_reached"


def test_ma_solve_constant_and_file(tmp_path):
    square = {"kind": "convex_polygon", "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}
    doc = {"domain": square, "h": 1 / 16}
    cfg = _write(tmp_path, doc)
    assert main(["ma-solve", "--config", cfg, "--out", str(tmp_path / "c")]) == 0
    sol = (tmp_path / "c" / "solution.csv").read_text().splitlines()
    assert sol[0] == "ix,iy,x,y,class,value"
    # feed the density back in from a file preset
    ones = "\n".join(
        [sol[0]] + [",".join(r.split(",")[:-1] + ["1"]) for r in sol[1:]]
    )
    (tmp_path / "rhs.csv").write_text(ones)
    doc["rhs"] = {"kind": "file", "path": "rhs.csv"}
    cfg2 = _write(tmp_path, doc, "cfg2.json")
    assert main(["ma-solve", "--config", cfg2, "--out", str(tmp_path / "f")]) == 0
    assert (tmp_path / "f" / "solution.csv").read_text() == "\n".join(sol) + "\n"


def test_ma_solve_nonconvergence(tmp_path):
    doc = {"domain": {"kind": "disk", "center": [0, 0], "radius": 1}, "h": 1 / 16,
           "solver": {"max_sweeps": 2}}
    assert main(["ma-solve", "--config", _write(tmp_path, doc), "--out", str(tmp_path)]) == 2


@pytest.mark.slow
def test_check_command(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "checks passed" in out
