import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from crlab.cli import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, main
from crlab.study import (
    COLUMNS,
    CSV_VERSION,
    MAXIMIZER_COLUMNS,
    StudyConfig,
    dump_maximizer,
    m_for,
    read_csv,
    round_half_up,
    run_point,
    run_study,
    write_csv,
)


def test_rounding_rule():
    assert round_half_up(2.5) == 3 and round_half_up(22.627) == 23
    assert [m_for("m_n32", n) for n in (4, 8, 16, 32)] == [8, 23, 64, 181]
    assert [m_for("m_n52", n) for n in (1, 2, 4)] == [1, 6, 32]
    assert m_for("m_eq_n", 7) == 7


def test_config_points():
    assert StudyConfig("m_n2", n_min=2, n_max=8).points() == [(2, 4), (4, 16), (8, 64)]
    assert StudyConfig("m_eq_n").points() == [(4, 4), (8, 8), (16, 16), (32, 32)]
    assert StudyConfig("m_n52").points()[-1] == (16, 1024)
    assert StudyConfig("custom", pairs=[(3, 5)]).points() == [(3, 5)]


@pytest.mark.parametrize("kwargs", [
    {"mode": "nope"}, {"mode": "custom"}, {"mode": "custom", "pairs": [(4, 2)]},
    {"skip": frozenset({"mesh"})}, {"n_min": 0},
])
def test_config_errors(kwargs):
    with pytest.raises(ValueError):
        StudyConfig(**kwargs)


def test_study_csv(tmp_path):
    out = tmp_path / "a.csv"
    svg = tmp_path / "a.svg"
    assert main(["study", "--mode", "m_eq_n", "--n-min", "2", "--n-max", "8", "--csv", str(out), "--svg", str(svg)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == f"# {CSV_VERSION}"
    assert lines[1].split(",") == COLUMNS
    rows = read_csv(out)
    assert [(int(r["n"]), int(r["m"])) for r in rows] == [(2, 2), (4, 4), (8, 8)]
    E = [float(r["E"]) for r in rows]
    assert E[0] > E[1] > E[2]
    assert all(r["error"] == "" for r in rows)
    assert all(0 < float(r["friedrichs"]) <= 0.5 for r in rows)
    assert svg.read_text().lstrip().startswith("<?xml")


def test_byte_identical(tmp_path):
    paths = [tmp_path / f"{i}.csv" for i in range(3)]
    args = ["study", "--mode", "custom", "--pairs", "2:2,3:5,4:16"]
    main(args + ["--csv", str(paths[0])])
    main(args + ["--csv", str(paths[1])])
    main(args + ["--csv", str(paths[2]), "--threads", "2"])
    data = [p.read_bytes() for p in paths]
    assert data[0] == data[1] == data[2]


def test_svg_deterministic(tmp_path):
    rows = run_study(StudyConfig("custom", pairs=[(2, 2), (4, 4)], skip=frozenset({"friedrichs"})))
    from crlab.study import write_svg

    write_svg(rows, tmp_path / "a.svg")
    write_svg(rows, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_skip_columns():
    row = run_point(2, 2, skip=frozenset({"witness", "rt", "friedrichs"}))
    assert row["witness_norm"] == row["rt_error"] == row["friedrichs"] == ""
    assert row["E"] > 0


def test_stdout(capsys):
    assert main(["study", "--mode", "custom", "--pairs", "2:2", "--skip", "friedrichs"]) == EXIT_OK
    text = capsys.readouterr().out
    rows = list(csv.DictReader(io.StringIO(text.split("\n", 1)[1])))
    assert len(rows) == 1 and rows[0]["friedrichs"] == ""


@pytest.mark.parametrize("argv", [
    ["study", "--mode", "custom"],
    ["study", "--mode", "custom", "--pairs", "4:2"],
    ["study", "--pairs", "x"],
    ["study", "--tol", "1e-3"],
    ["study", "--n-min", "64", "--n-max", "8"],
    ["study", "--skip", "mesh"],
    ["mesh", "--n", "3", "--m", "2", "--out", "x.json"],
    ["bogus"],
])
def test_config_error_exit(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv))
    assert exc.value.code == EXIT_CONFIG


def test_partial_failure(monkeypatch, tmp_path):
    import crlab.study as study

    real = study.analyze

    def flaky(n, m, **kw):
        if n == 3:
            raise RuntimeError("boom")
        return real(n, m, **kw)

    monkeypatch.setattr(study, "analyze", flaky)
    out = tmp_path / "p.csv"
    assert main(["study", "--mode", "custom", "--pairs", "2:2,3:3", "--csv", str(out)]) == EXIT_PARTIAL
    rows = read_csv(out)
    assert rows[0]["error"] == "" and rows[1]["error"] == "RuntimeError: boom"


def test_maximizer_schema(tmp_path):
    out = tmp_path / "mx.csv"
    assert main(["maximizer", "--n", "10", "--m", "10", "--out", str(out)]) == EXIT_OK
    rows = read_csv(out)
    assert list(rows[0]) == MAXIMIZER_COLUMNS
    from crlab.mesh import MeshParams, build_mesh

    tri = build_mesh(MeshParams(10, 10))
    slanted = (np.abs(tri.edge_slopes) == 1) & ~tri.boundary
    assert len(rows) == slanted.sum()


def test_maximizer_oscillation():
    # after removing a smooth quartic trend, the maximizer follows the witness pattern
    from crlab.mesh import MeshParams, build_mesh
    from crlab.witness import build_witness

    rows = dump_maximizer(10, 100)
    x = np.array([r["x"] for r in rows])
    y = np.array([r["y"] for r in rows])
    v = np.array([r["maximizer"] for r in rows])
    tri = build_mesh(MeshParams(10, 100))
    wv = build_witness(tri).function.edge_values()
    key = {tuple(np.round(p, 12)): e for e, p in enumerate(tri.edge_midpoints)}
    w = wv[[key[(round(a, 12), round(b, 12))] for a, b in zip(x, y)]]
    V = np.column_stack([x**i * y**j for i in range(5) for j in range(5 - i)])
    osc = v - V @ np.linalg.lstsq(V, v, rcond=None)[0]
    assert np.corrcoef(osc, w)[0, 1] > 0.9


def test_mesh_and_matrix_export(tmp_path):
    assert main(["mesh", "--n", "2", "--m", "3", "--out", str(tmp_path / "m.json")]) == EXIT_OK
    data = json.loads((tmp_path / "m.json").read_text())
    assert data["params"] == {"n": 2, "m": 3} and len(data["triangles"]) == 2 * 3 * 5
    assert main(["matrix", "--n", "1", "--m", "1", "--out", str(tmp_path / "a.txt")]) == EXIT_OK
    lines = (tmp_path / "a.txt").read_text().splitlines()
    assert lines[0].startswith("# 6 6 ")
    assert all(len(ln.split()) == 3 for ln in lines[1:])


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.json"
    proc = subprocess.run([sys.executable, "-m", "crlab", "mesh", "--n", "1", "--m", "1", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and out.exists()


def test_write_csv_stream():
    buf = io.StringIO()
    write_csv([{"n": 1, "m": 2, "E": 0.1}], buf)
    assert buf.getvalue().splitlines()[2].startswith("1,2,,,,0.1")
