import csv
import json

import numpy as np
import pytest

from depkde.cli import EXIT_CONFIG, EXIT_INPUT, _companion_path, main, read_series
from depkde.samplers import iid_sample, normal_target
from depkde.selectors import default_config, select


@pytest.fixture()
def series_file(tmp_path):
    y = iid_sample(normal_target(), 1500, 7)
    path = tmp_path / "chain.txt"
    path.write_text("".join(f"{v:.17g}\n" for v in y))
    return path, y


def test_read_series_plain_and_csv(tmp_path):
    plain = tmp_path / "a.txt"
    plain.write_text("1.5\n-2.0\n\n# comment\n3.25\n")
    np.testing.assert_array_equal(read_series(str(plain)), [1.5, -2.0, 3.25])
    withcsv = tmp_path / "b.csv"
    withcsv.write_text("value,other\n1.0,9\n2.0,9\n")
    np.testing.assert_array_equal(read_series(str(withcsv)), [1.0, 2.0])


def test_read_series_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1.0\noops\n")
    with pytest.raises(Exception) as exc:
        read_series(str(bad))
    assert "bad.txt:2" in str(exc.value)
    short = tmp_path / "short.txt"
    short.write_text("1.0\n")
    with pytest.raises(Exception):
        read_series(str(short))
    inf = tmp_path / "inf.txt"
    inf.write_text("1.0\ninf\n2.0\n")
    with pytest.raises(Exception):
        read_series(str(inf))


def test_select_on_file_matches_library(series_file, capsys):
    path, y = series_file
    assert main(["select", "--method", "SJse", "--input", str(path)]) == 0
    out = capsys.readouterr().out
    lines = dict((k, v.strip()) for k, v in
                 (line.split(":", 1) for line in out.strip().splitlines()))
    h_cli = float(lines["h"])
    h_lib = select(y, default_config(y, "SJse")).h
    assert h_cli == pytest.approx(h_lib, rel=1e-12)
    assert 0.1 < h_cli < 1.5  # sane range for n=1500 normal(3, 2^2)


def test_select_writes_json(series_file, tmp_path):
    path, _ = series_file
    out = tmp_path / "sel.json"
    assert main(["select", "--method", "BCV", "--input", str(path),
                 "--out", str(out), "--format", "json"]) == 0
    payload = json.loads(out.read_text())
    assert payload["method"] == "BCV"
    assert payload["h"] > 0 and payload["converged"]


def test_select_missing_input_is_config_error(capsys):
    assert main(["select", "--method", "SJse"]) == EXIT_CONFIG
    assert "either --input or --dist" in capsys.readouterr().err


def test_select_missing_file_is_input_error(tmp_path, capsys):
    code = main(["select", "--method", "SJse", "--input", str(tmp_path / "nope.txt")])
    assert code == EXIT_INPUT


def test_empty_input_is_input_error(tmp_path, capsys):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert main(["select", "--method", "SJse", "--input", str(empty)]) == EXIT_INPUT


def test_unknown_method_is_usage_error(series_file):
    path, _ = series_file
    with pytest.raises(SystemExit) as exc:
        main(["select", "--method", "magic", "--input", str(path)])
    assert exc.value.code == 2  # argparse usage error


def test_generated_series_deterministic(capsys):
    args = ["select", "--method", "SJse", "--dist", "normal", "--n", "1200", "--seed", "4"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first


STUDY_ARGS = ["study", "--dist", "normal", "--sampler", "iid", "--n", "1500",
              "--replicates", "2", "--methods", "SJse", "SJmin", "--seed", "3"]


def test_study_csv_rerun_byte_identical(tmp_path, capsys):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    assert main(STUDY_ARGS + ["--out", str(out_a)]) == 0
    assert main(STUDY_ARGS + ["--out", str(out_b)]) == 0
    capsys.readouterr()
    assert out_a.read_bytes() == out_b.read_bytes()
    summary_a = tmp_path / _companion_path("a.csv", "summary")
    assert summary_a.read_bytes() == (tmp_path / "b_summary.csv").read_bytes()


def test_study_csv_shape(tmp_path, capsys):
    out = tmp_path / "study.csv"
    assert main(STUDY_ARGS + ["--out", str(out)]) == 0
    capsys.readouterr()
    lines = out.read_text().splitlines()
    meta = [line for line in lines if line.startswith("# ")]
    assert any(line.startswith("# dist=normal") for line in meta)
    rows = list(csv.DictReader(line for line in lines if not line.startswith("#")))
    assert len(rows) == 4  # 2 methods x 2 replicates
    assert set(rows[0]) == {"method", "replicate", "h", "ise", "zeta",
                            "acceptance", "iat"}
    for row in rows:
        assert float(row["h"]) > 0
        # 17 significant digit round trip
        assert format(float(row["h"]), ".17g") == row["h"]


def test_study_json(tmp_path, capsys):
    out = tmp_path / "study.json"
    assert main(STUDY_ARGS + ["--out", str(out), "--format", "json"]) == 0
    capsys.readouterr()
    payload = json.loads(out.read_text())
    assert set(payload) == {"config", "summary", "records"}
    assert len(payload["records"]) == 4
    assert payload["summary"]["SJse"]["count"] == 2


def test_curve_fixed_h_integrates_to_one(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    assert main(["curve", "--dist", "normal", "--n", "2000", "--seed", "1",
                 "--h", "0.45", "--out", str(out)]) == 0
    capsys.readouterr()
    lines = out.read_text().splitlines()
    assert lines[0] == "# h=0.45000000000000001"
    rows = list(csv.DictReader(lines[1:]))
    xs = np.array([float(r["x"]) for r in rows])
    dens = np.array([float(r["density"]) for r in rows])
    assert np.trapezoid(dens, xs) == pytest.approx(1.0, abs=1e-3)


def test_curve_zeta_column(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    assert main(["curve", "--dist", "normal", "--n", "1000", "--seed", "2",
                 "--h", "0.5", "--zeta-column", "--out", str(out)]) == 0
    capsys.readouterr()
    rows = list(csv.DictReader(out.read_text().splitlines()[1:]))
    assert "kernel_iat" in rows[0]
    taus = np.array([float(r["kernel_iat"]) for r in rows])
    assert np.all(taus > 0)


def test_curve_rejects_nonpositive_h(capsys):
    code = main(["curve", "--dist", "normal", "--n", "500", "--h", "-0.2"])
    assert code == EXIT_CONFIG


def test_config_file_defaults_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "depkde.cfg"
    cfg.write_text("dist = normal\nn = 900\nseed = 6  # comment\n")
    assert main(["select", "--method", "SJse", "--config", str(cfg)]) == 0
    base = dict((k, v.strip()) for k, v in (line.split(":", 1) for line in capsys.readouterr().out.strip().splitlines()))
    assert base["n"] == "900"
    # explicit flag beats the config file
    assert main(["select", "--method", "SJse", "--config", str(cfg), "--n", "1100"]) == 0
    override = dict((k, v.strip()) for k, v in (line.split(":", 1) for line in capsys.readouterr().out.strip().splitlines()))
    assert override["n"] == "1100"


def test_config_file_malformed(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("just a line without equals\n")
    code = main(["select", "--method", "SJse", "--dist", "normal", "--config", str(cfg)])
    assert code == EXIT_CONFIG


def test_companion_path():
    assert _companion_path("out.csv", "summary") == "out_summary.csv"
    assert _companion_path("results", "summary") == "results_summary"
    assert _companion_path("dir.v2/out", "summary") == "dir.v2/out_summary"
