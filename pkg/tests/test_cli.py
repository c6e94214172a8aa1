import numpy as np
import pytest

from virtual_dme import csvio
from virtual_dme.cli import EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, EXIT_VALIDATION, load_filter, main, read_config


def run(tmp_path, *args):
    out = tmp_path / "out.csv"
    code = main([*args, "--out", str(out)])
    return code, out


def test_csv_round_trip(tmp_path):
    p = tmp_path / "t.csv"
    csvio.write_table(p, ["a", "b"], [[1, 0.1], [2, "x,y"]], {"k": 3})
    header, rows, meta = csvio.read_table(p)
    assert header == ["a", "b"]
    assert rows[1]["b"] == "x,y"
    assert float(rows[0]["b"]) == 0.1
    assert meta == {"k": "3"}


def test_csv_rejects_unknown_version():
    with pytest.raises(csvio.SchemaError):
        csvio.parse("# vdme-csv v9\na\n1\n")
    with pytest.raises(csvio.SchemaError):
        csvio.parse("a\n1\n")


def test_float_format_is_round_trip_exact():
    x = 0.1 + 0.2
    assert float(csvio.format_value(x)) == x


def test_dme_sweep(tmp_path):
    code, out = run(tmp_path, "dme-sweep", "--seed", "1", "--points", "4")
    assert code == EXIT_OK
    header, rows, meta = csvio.read_table(out)
    assert header[:3] == ["eps", "L", "worst_copies"]
    assert len(rows) == 4
    assert len({r["pure_copies"] for r in rows}) == 1
    for r in rows:
        assert int(r["worst_copies"]) == 4 + 8 * int(r["L"])
        assert int(r["worst_observed"]) <= int(r["worst_copies"])
        assert 4 <= float(r["mean_copies"]) <= 6


def test_seed_required(tmp_path):
    code, _ = run(tmp_path, "dme-sweep")
    assert code == EXIT_VALIDATION


def test_validation_errors(tmp_path):
    assert run(tmp_path, "dme-sweep", "--seed", "1", "--eps-min", "0.3", "--eps-max", "0.1")[0] == EXIT_VALIDATION
    assert run(tmp_path, "filter-design", "--eta", "0.7")[0] == EXIT_VALIDATION
    assert run(tmp_path, "dme-sweep", "--seed", "abc")[0] == EXIT_VALIDATION


def test_io_error(tmp_path):
    code = main(["filter-design", "--eps1", "0.1", "--eps2", "0.1", "--out", str(tmp_path / "missing" / "x.csv")])
    assert code == EXIT_IO
    assert main(["filter-design", "--config", str(tmp_path / "nope.cfg")]) == EXIT_IO


def test_filter_design_round_trip(tmp_path):
    code, out = run(tmp_path, "filter-design", "--eta", "0.2", "--eps1", "0.1", "--eps2", "0.1")
    assert code == EXIT_OK
    fs = load_filter(out)
    xp = np.linspace(0, 0.2, 10_001)
    xs = np.linspace(0.8, 1, 10_001)
    assert np.max(np.abs(fs(xp) - 1)) <= 0.1
    assert np.max(np.abs(fs(xs))) <= 0.1
    assert fs.M_f <= 4


def test_filter_design_infeasible(tmp_path):
    code, _ = run(tmp_path, "filter-design", "--eps2", "1e-14", "--max-order", "12")
    assert code == EXIT_INFEASIBLE


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nseed = 4\npoints=3\neps-min=1e-6\n")
    assert read_config(cfg)["eps_min"] == "1e-6"
    code, out = run(tmp_path, "dme-sweep", "--config", str(cfg), "--points", "2")
    assert code == EXIT_OK
    _, rows, meta = csvio.read_table(out)
    assert len(rows) == 2 and meta["seed"] == "4"
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour=blue\n")
    assert main(["dme-sweep", "--config", str(bad)]) == EXIT_VALIDATION


def test_mc_estimate_reproducible(tmp_path):
    args = ["mc-estimate", "--seed", "5", "--shots", "5000", "--dim", "2"]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    log = tmp_path / "log.csv"
    assert main([*args, "--out", str(a), "--log", str(log)]) == EXIT_OK
    assert main([*args, "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    _, rows, _ = csvio.read_table(a)
    r = rows[0]
    assert abs(float(r["mean"]) - float(r["exact"])) <= 4 * float(r["std_error"])
    _, groups, _ = csvio.read_table(log)
    assert sum(int(g["count"]) for g in groups) == 5000


def test_qpca_compare(tmp_path):
    code, out = run(tmp_path, "qpca-compare", "--seed", "1", "--lambda", "0.2", "--points", "2", "--eps-min", "1e-4", "--eps-max", "1e-2", "--samples", "1000")
    assert code == EXIT_OK
    header, rows, _ = csvio.read_table(out)
    assert header == ["delta", "method", "copies_per_circuit", "p25", "p50", "p95", "overhead", "order"]
    assert {r["method"] for r in rows} == {"coherent", "hybrid", "vd", "original"}
    vd = sorted((float(r["delta"]), float(r["overhead"])) for r in rows if r["method"] == "vd")
    assert vd[0][1] > vd[1][1]


def test_pure_dme_check(tmp_path, capsys):
    code, out = run(tmp_path, "pure-dme-check", "--seed", "1", "--states", "2", "--dim", "2")
    assert code == EXIT_OK
    _, rows, _ = csvio.read_table(out)
    assert len(rows) == 4
    assert max(float(r["max_choi_upper"]) for r in rows) <= 1e-9
    assert "max residual" in capsys.readouterr().err
