import csv
import json
import math
from pathlib import Path

import pytest

from tentlab import cli
from tentlab.cli import (
    ExperimentConfig,
    MeasureSpec,
    Report,
    WeightSpec,
    _workers,
    main,
    presets,
    run_experiment,
    write_report,
)
from tentlab.disc import maximal
from tentlab.disc.grid import PolarGrid
from tentlab.disc.weights import constant

CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.toml"))


def write_config(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


class TestConfig:
    def test_defaults(self):
        config = ExperimentConfig.from_dict({"name": "x", "experiment": "doubling"})
        assert config.weight == WeightSpec()
        assert config.measure.kind == "lattice"
        assert config.p == 2.0 and config.q == 2.0

    def test_sections(self):
        config = ExperimentConfig.from_dict(
            {
                "name": "x",
                "experiment": "carleson",
                "q": math.inf,
                "weight": {"kind": "standard", "alpha": 1.5},
                "measure": {"kind": "points", "atoms": [[0.5, 1.0]]},
                "grid": {"depths": [3, 4]},
            }
        )
        assert config.weight == WeightSpec("standard", {"alpha": 1.5})
        assert config.measure.params == {"atoms": [[0.5, 1.0]]}
        assert config.grid.depths == (3, 4)

    @pytest.mark.parametrize(
        "data",
        [
            {"experiment": "nothing"},
            {"experiment": "doubling", "weight": {"kind": "nothing"}},
            {"experiment": "doubling", "measure": {"kind": "nothing"}},
            {"experiment": "doubling", "p": 0},
            {"experiment": "doubling", "n": 1.5},
            {"experiment": "doubling", "n": -1},
            {"experiment": "carleson", "grid": {"depths": [2, 3]}},
        ],
    )
    def test_invalid(self, data):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"name": "x", **data})

    def test_overrides(self):
        config = ExperimentConfig.from_dict({"name": "x", "experiment": "doubling"})
        changed = config.with_overrides(depth=3, seed=9, out="elsewhere")
        assert (changed.grid.depth, changed.seed, changed.out) == (3, 9, "elsewhere")
        assert config.with_overrides() == config

    @pytest.mark.parametrize("path", CONFIGS, ids=lambda path: path.stem)
    def test_shipped(self, path):
        config = ExperimentConfig.from_file(path)
        assert config.name == path.stem


class TestMeasureSpec:
    def test_lattice_truncation(self):
        grid = PolarGrid(4)
        mu = MeasureSpec().build(constant, grid, 0)
        assert mu.points.size > 0
        assert (1 - abs(mu.points)).min() >= 2 * grid.outer_defect

    def test_seeded(self):
        grid = PolarGrid(4)
        first = MeasureSpec().build(constant, grid, 3)
        second = MeasureSpec().build(constant, grid, 3)
        assert (first.points == second.points).all()


class TestReport:
    def test_write(self, tmp_path):
        report = Report("sample", "doubling")
        report.add(4, "beta", 0.5)
        report.add(5, "beta", 0.25)
        report.details["array"] = [1, 2]
        json_path, csv_path = write_report(report, tmp_path / "out")
        document = json.loads(json_path.read_text())
        expected = {"depth": 5, "quantity": "beta", "value": 0.25}
        assert document["quantities"][1] == expected
        assert document["flags"] == [] and document["findings"] == []
        with open(csv_path, newline="") as stream:
            rows = list(csv.reader(stream))
        assert rows == [
            ["depth", "quantity", "value"],
            ["4", "beta", "0.5"],
            ["5", "beta", "0.25"],
        ]

    def test_workers(self, monkeypatch):
        monkeypatch.setenv("LAB_THREADS", "4")
        assert _workers() == 4
        monkeypatch.setenv("LAB_THREADS", "many")
        assert _workers() == 1


class TestRun:
    def test_doubling(self):
        config = ExperimentConfig.from_dict({"name": "x", "experiment": "doubling"})
        report = run_experiment(config)
        assert "certificate" in report.details
        assert report.rows
        assert report.flags == []

    def test_cone_kernel(self):
        config = ExperimentConfig.from_dict(
            {"name": "x", "experiment": "cone-kernel", "grid": {"depth": 3}}
        )
        report = run_experiment(config)
        assert [quantity for _, quantity, _ in report.rows] == [
            "ratio_lambda0+1",
            "ratio_lambda0+2",
            "ratio_lambda0+4",
        ]

    def test_factorization(self):
        config = ExperimentConfig.from_dict(
            {
                "name": "x",
                "experiment": "factorization",
                "q": 2,
                "samples": 2,
                "grid": {"depth": 4},
            }
        )
        report = run_experiment(config)
        k3 = [value for _, quantity, value in report.rows if quantity == "balayage_k3"]
        assert len(k3) == 2
        assert all(0 < value < math.inf for value in k3)

    def test_failed_computation(self, monkeypatch):
        def fail(*args):
            raise ArithmeticError("2 non-finite values")

        monkeypatch.setitem(cli.RUNNERS, "doubling", fail)
        config = ExperimentConfig.from_dict({"name": "x", "experiment": "doubling"})
        report = run_experiment(config)
        assert report.flags == ["Computation failed: 2 non-finite values"]

    def test_maximal_violation(self, monkeypatch):
        monkeypatch.setattr(
            maximal._NormSampler, "__call__", lambda self, values: 1e300
        )
        config = ExperimentConfig.from_dict(
            {
                "name": "x",
                "experiment": "maximal",
                "p": 2,
                "q": 3,
                "alpha": 1,
                "samples": 2,
                "grid": {"depth": 4},
            }
        )
        report = run_experiment(config)
        assert any(flag.startswith("Operator norm constant") for flag in report.flags)
        assert any(quantity == "bound_bracket" for _, quantity, _ in report.rows)


class TestMain:
    def test_presets(self, capsys):
        assert main(["presets"]) == 0
        assert "experiments:" in capsys.readouterr().out
        assert "lattice" in presets()

    def test_missing_config(self, tmp_path):
        assert main(["run", str(tmp_path / "missing.toml")]) == 2

    def test_invalid_config(self, tmp_path):
        path = write_config(tmp_path / "bad.toml", 'experiment = "nothing"\n')
        assert main(["run", str(path)]) == 2

    def test_broken_toml(self, tmp_path):
        path = write_config(tmp_path / "broken.toml", "experiment = \n")
        assert main(["run", str(path)]) == 2

    def test_run(self, tmp_path, capsys):
        path = write_config(tmp_path / "double.toml", 'experiment = "doubling"\n')
        assert main(["run", str(path), "--out", str(tmp_path / "reports")]) == 0
        assert (tmp_path / "reports" / "double.json").exists()
        assert (tmp_path / "reports" / "double.csv").exists()
        document = json.loads((tmp_path / "reports" / "double.json").read_text())
        assert document["name"] == "double"
        assert document["experiment"] == "doubling"

    def test_missing_table(self, tmp_path, capsys):
        path = write_config(
            tmp_path / "table.toml",
            f'experiment = "doubling"\n\n[weight]\nkind = "table"\n'
            f'path = "{tmp_path / "missing.csv"}"\n',
        )
        assert main(["run", str(path), "--out", str(tmp_path / "reports")]) == 2
        assert "missing.csv" in capsys.readouterr().err
