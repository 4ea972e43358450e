"""CSV ingestion, report files and the command-line interface."""
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfplr import __version__
from sfplr.cli import EXIT_INPUT, EXIT_OK, EXIT_USAGE, main
from sfplr.io import (
    DatasetError,
    DatasetFiles,
    ReportFile,
    load_dataset,
    read_report,
    write_dataset,
    write_report,
)
from sfplr.linearity import DirectionResult, TestConfig, TestReport
from sfplr.simulation import gen_scenario


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def tiny_files(tmp_path):
    curves = write(tmp_path / "c.csv", "0,0.25,0.5,0.75,1\n1,2,3,4,5\n2,2,2,2,2\n0,1,0,1,0\n")
    scalars = write(tmp_path / "s.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9.5\n")
    return curves, scalars


class TestLoad:
    def test_basic(self, tiny_files):
        c, s = tiny_files
        ds = load_dataset(DatasetFiles(c, s, response_column="y"))
        assert ds.n == 3 and ds.X.grid.size == 5 and ds.p == 2
        assert ds.z_names == ("a", "b")
        assert np.array_equal(ds.Y, [3, 6, 9.5])

    def test_response_in_middle(self, tiny_files):
        c, s = tiny_files
        ds = load_dataset(DatasetFiles(c, s, response_column="a"))
        assert np.array_equal(ds.Y, [1, 4, 7]) and ds.z_names == ("b", "y")

    def test_response_file_gives_flm(self, tmp_path, tiny_files):
        c, _ = tiny_files
        r = write(tmp_path / "y.csv", "y\n1\n2\n3\n")
        ds = load_dataset(DatasetFiles(c, response_path=r))
        assert ds.p == 0 and np.array_equal(ds.Y, [1, 2, 3])

    def test_no_grid_row(self, tmp_path):
        c = write(tmp_path / "c.csv", "1,2,3\n4,5,6\n")
        r = write(tmp_path / "y.csv", "1\n2\n")
        ds = load_dataset(DatasetFiles(c, response_path=r, grid_row=False))
        assert np.allclose(ds.X.grid.points, [0, 0.5, 1])

    def test_nan_rejected_with_location(self, tmp_path, tiny_files):
        _, s = tiny_files
        c = write(tmp_path / "bad.csv", "0,1\n1,2\n3,NaN\n5,6\n")
        with pytest.raises(DatasetError, match=r"bad.csv:3: column 2"):
            load_dataset(DatasetFiles(c, s, response_column="y"))

    def test_unparseable_cell(self, tmp_path, tiny_files):
        _, s = tiny_files
        c = write(tmp_path / "bad.csv", "0,1\n1,x\n3,4\n5,6\n")
        with pytest.raises(DatasetError, match=r":2: column 2"):
            load_dataset(DatasetFiles(c, s, response_column="y"))

    def test_ragged_rows(self, tmp_path, tiny_files):
        _, s = tiny_files
        c = write(tmp_path / "bad.csv", "0,1\n1,2\n3\n5,6\n")
        with pytest.raises(DatasetError, match=r":3:"):
            load_dataset(DatasetFiles(c, s, response_column="y"))

    def test_non_increasing_grid(self, tmp_path, tiny_files):
        _, s = tiny_files
        c = write(tmp_path / "bad.csv", "0,1,1\n1,2,3\n3,4,5\n5,6,7\n")
        with pytest.raises(DatasetError, match="increasing"):
            load_dataset(DatasetFiles(c, s, response_column="y"))

    def test_row_count_mismatch(self, tmp_path, tiny_files):
        c, _ = tiny_files
        s = write(tmp_path / "s.csv", "a,y\n1,2\n3,4\n")
        with pytest.raises(DatasetError, match="mismatch"):
            load_dataset(DatasetFiles(c, s, response_column="y"))

    def test_missing_response_column(self, tiny_files):
        c, s = tiny_files
        with pytest.raises(DatasetError, match="no column"):
            load_dataset(DatasetFiles(c, s, response_column="fat"))

    def test_missing_file(self, tmp_path, tiny_files):
        _, s = tiny_files
        with pytest.raises(DatasetError, match="no such file"):
            DatasetFiles(tmp_path / "nope.csv", s, response_column="y")

    def test_dump_round_trip(self, tmp_path):
        ds = gen_scenario(4, 1, 12, rng_seed=3)
        files = write_dataset(ds, tmp_path / "c.csv", tmp_path / "s.csv")
        back = load_dataset(files)
        assert np.array_equal(back.X.data, ds.X.data)
        assert np.array_equal(back.X.grid.points, ds.X.grid.points)
        assert np.array_equal(back.Z, ds.Z) and np.array_equal(back.Y, ds.Y)
        assert back.z_names == ds.z_names


pvals = st.floats(0, 1)
stats = st.floats(0, 1e6, allow_nan=False)


@st.composite
def reports(draw):
    K = draw(st.integers(1, 5))
    rows = tuple(
        DirectionResult(i, draw(stats), draw(stats), draw(pvals), draw(pvals), draw(st.booleans()), draw(st.integers(1, 10)))
        for i in range(K)
    )
    cfg = TestConfig(num_directions=K, bootstrap_reps=draw(st.integers(1, 10**5)), seed=draw(st.integers(0, 2**64 - 1)))
    return TestReport(
        per_direction=rows,
        merged_p_ks=draw(st.one_of(st.none(), pvals)),
        merged_p_cvm=draw(pvals),
        fit_summary={"beta": draw(st.lists(st.floats(-1e6, 1e6), max_size=4)), "k_selected": draw(st.integers(0, 20)), "bandwidth": draw(st.floats(1e-3, 10))},
        config=cfg,
        seed=cfg.seed,
    )


class TestReportFile:
    @settings(max_examples=60, deadline=None)
    @given(reports(), st.floats(0, 1e4))
    def test_round_trip(self, tmp_path_factory, rep, runtime):
        path = tmp_path_factory.mktemp("r") / "r.json"
        rf = ReportFile(rep, __version__, runtime)
        write_report(rf, path)
        assert read_report(path) == rf

    def test_schema_fields(self, tmp_path):
        rep = TestReport((DirectionResult(0, 1.0, 2.0, 0.5, 0.25),), 0.5, 0.25, {"beta": [], "k_selected": 1, "bandwidth": 1.0}, TestConfig(num_directions=1), 0)
        write_report(ReportFile(rep, __version__, 1.5), tmp_path / "r.json")
        d = json.loads((tmp_path / "r.json").read_text())
        for key in ("schema_version", "config", "per_direction", "merged_p_ks", "merged_p_cvm", "fit_summary", "seed", "runtime_seconds"):
            assert key in d
        assert set(d["fit_summary"]) == {"beta", "k_selected", "bandwidth"}

    def test_unknown_schema(self, tmp_path):
        write(tmp_path / "r.json", json.dumps({"schema_version": 99}))
        with pytest.raises(DatasetError):
            read_report(tmp_path / "r.json")


def _strip_timing(d):
    d = dict(d)
    d.pop("runtime_seconds", None)
    d.pop("elapsed", None)
    return d


@pytest.fixture(scope="module")
def dumped(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    ds = gen_scenario(1, 0, 40, rng_seed=1)
    write_dataset(ds, root / "c.csv", root / "s.csv")
    return root


class TestCli:
    def test_test_command(self, dumped, tmp_path, capsys):
        out = tmp_path / "r.json"
        rc = main(["test", "--curves", str(dumped / "c.csv"), "--scalars", str(dumped / "s.csv"),
                   "--response", "Y", "--B", "100", "--out", str(out)])
        assert rc == EXIT_OK
        line = capsys.readouterr().out.strip()
        assert "CvM p=" in line and ("retain" in line or "reject" in line)
        rf = read_report(out)
        assert len(rf.report.per_direction) == 7 and rf.report.config.bootstrap_reps == 100

    def test_rejection_is_not_an_error(self, tmp_path):
        ds = gen_scenario(5, 2, 60, rng_seed=2)
        write_dataset(ds, tmp_path / "c.csv", tmp_path / "s.csv")
        rc = main(["test", "--curves", str(tmp_path / "c.csv"), "--scalars", str(tmp_path / "s.csv"),
                   "--response", "Y", "--B", "100", "--stat", "cvm", "--out", str(tmp_path / "r.json")])
        assert rc == EXIT_OK
        assert read_report(tmp_path / "r.json").report.rejects("cvm")

    def test_missing_curves_is_usage_error(self, capsys):
        assert main(["test", "--response-file", "y.csv"]) == EXIT_USAGE

    def test_bad_input_exit_code(self, tmp_path, capsys):
        write(tmp_path / "c.csv", "0,1\n1,NaN\n")
        write(tmp_path / "y.csv", "1\n")
        rc = main(["test", "--curves", str(tmp_path / "c.csv"), "--response-file", str(tmp_path / "y.csv")])
        assert rc == EXIT_INPUT
        assert "non-finite" in capsys.readouterr().err

    @pytest.mark.parametrize("threads", ["1", "3"])
    def test_test_is_reproducible(self, dumped, tmp_path, threads):
        args = ["test", "--curves", str(dumped / "c.csv"), "--scalars", str(dumped / "s.csv"), "--response", "Y", "--B", "60", "--seed", "77"]
        main(args + ["--out", str(tmp_path / "a.json")])
        main(args + ["--out", str(tmp_path / "b.json"), "--threads", threads])
        a = _strip_timing(json.loads((tmp_path / "a.json").read_text()))
        b = _strip_timing(json.loads((tmp_path / "b.json").read_text()))
        assert a == b

    def test_simulate_outputs(self, tmp_path, capsys):
        out = tmp_path / "sim.json"
        rc = main(["simulate", "--scenario", "1", "--deviation", "0", "--n", "30", "--M", "1", "--B", "50",
                   "--K", "2", "--out", str(out), "--dump-dataset", str(tmp_path / "dump")])
        assert rc == EXIT_OK
        d = json.loads(out.read_text())
        assert d["rejection_rate_cvm"] in (0.0, 1.0) and d["M"] == 1
        lines = (tmp_path / "sim.pvalues.csv").read_text().splitlines()
        assert lines[0] == "replicate,merged_p_ks,merged_p_cvm" and len(lines) == 2
        ds = load_dataset(DatasetFiles(tmp_path / "dump_curves.csv", tmp_path / "dump_scalars.csv", response_column="Y"))
        assert ds.n == 30

    def test_simulate_invalid_scenario(self, capsys):
        assert main(["simulate", "--scenario", "9", "--deviation", "0"]) == EXIT_USAGE

    def test_simulate_local_unsupported(self, capsys):
        assert main(["simulate", "--scenario", "4", "--local", "--M", "1", "--B", "10"]) == EXIT_USAGE
