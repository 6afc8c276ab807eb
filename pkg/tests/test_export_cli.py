import json
import math
from dataclasses import dataclass
from pathlib import Path

import pytest

from rcp3bp import cli, export as ex

DATA = Path(__file__).parent / "data"


@dataclass
class _Row:
    a: float
    b: int


class TestExport:
    def test_csv_layout(self):
        text = ex.render([{"x": 0.1, "flag": True, "name": "p"}], "csv")
        assert text == "# schema_version=1\nx,flag,name\n0.1,1,p\n"

    def test_float_round_trip(self):
        x = 1 / 3
        line = ex.render([{"x": x}], "csv").splitlines()[2]
        assert float(line) == x

    def test_jsonl_non_finite(self):
        lines = ex.render([{"x": math.nan, "y": math.inf}], "jsonl").splitlines()
        assert json.loads(lines[0]) == {"schema_version": 1, "columns": ["x", "y"]}
        assert json.loads(lines[1]) == {"x": "nan", "y": "inf"}

    def test_dataclasses_and_nesting(self):
        rows = ex.render([{"run": _Row(1.5, 2), "k": [1, 2]}], "csv").splitlines()
        assert rows[1] == "run.a,run.b,k" and rows[2] == "1.5,2,1 2"

    def test_column_order_is_first_seen(self):
        text = ex.render([{"b": 1}, {"a": 2, "b": 3}], "csv")
        assert text.splitlines()[1:] == ["b,a", "1,", "3,2"]

    def test_empty_is_header_only(self, tmp_path):
        for fmt in ex.FORMATS:
            path = ex.export([], tmp_path / f"empty.{fmt}", fmt, columns=("t", "x"))
            lines = path.read_text().splitlines()
            assert len(lines) == (2 if fmt == "csv" else 1)
            assert ex.read_schema_version(path) == ex.SCHEMA_VERSION

    def test_schema_version_bump(self, tmp_path, monkeypatch):
        monkeypatch.setattr(ex, "SCHEMA_VERSION", 2)
        for fmt in ex.FORMATS:
            path = ex.export([{"x": 1}], tmp_path / f"v2.{fmt}", fmt)
            assert ex.read_schema_version(path) == 2

    def test_bad_format(self):
        with pytest.raises(ValueError):
            ex.render([], "xml")

    def test_io_error_surfaces(self, tmp_path):
        with pytest.raises(OSError):
            ex.export([{"x": 1}], tmp_path / "missing" / "f.csv")


class TestCLI:
    @pytest.mark.parametrize("argv, golden", [
        (["collision-set", "--mu", "1e-4", "--n", "3"], "collision_set_n3.csv"),
        (["dioph", "--K", "2", "3", "--depth", "12", "--format", "jsonl"], "dioph_gaps.jsonl"),
    ])
    def test_golden_files(self, tmp_path, argv, golden):
        out = tmp_path / golden
        assert cli.main(argv + ["--out", str(out)]) == cli.EXIT_OK
        assert out.read_bytes() == (DATA / golden).read_bytes()

    def test_shoot_reproducible_and_hits(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            assert cli.main(["shoot", "--seed", "0", "--n-probes", "1", "--out", str(p)]) == cli.EXIT_OK
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_no_hit_exit_code(self, tmp_path, monkeypatch):
        from rcp3bp import lab

        def miss(probe, cfg):
            return lab.ShootResult(None, 1.0, False, math.nan, None, message="forced")
        monkeypatch.setattr(cli, "shoot_collision", miss)
        assert cli.main(["shoot", "--n-probes", "1", "--out", str(tmp_path / "m.csv")]) == cli.EXIT_NO_HIT

    def test_error_exit_code(self, tmp_path, capsys):
        assert cli.main(["dioph", "--varpi", "3", "--out", str(tmp_path / "x.csv")]) == cli.EXIT_ERROR
        assert "error:" in capsys.readouterr().err

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("mu = 1e-6\n")
        assert cli.main(["dioph", "--config", str(cfg), "--omega", "0.6180339887498949"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[1] == "omega,q_star,max_gap,min_collision_clearance"

    def test_integrate_stdout(self, capsys):
        assert cli.main(["integrate", "--t-end", "1", "--samples", "5"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 7 and lines[1].startswith("t,u1,u2,v1,v2,jacobi,region")

    def test_segment_and_recurrence(self, tmp_path):
        assert cli.main(["segment-r2", "--n", "5", "--out", str(tmp_path / "s.csv")]) == cli.EXIT_OK
        assert cli.main(["recurrence", "--no-full-flow", "--format", "jsonl",
                         "--out", str(tmp_path / "r.jsonl")]) == cli.EXIT_OK
        rec = json.loads((tmp_path / "r.jsonl").read_text().splitlines()[1])
        assert rec["steps"] >= 1
