"""Experiment driver: ``lab run <config.toml>`` and ``lab presets``.

A run writes ``<out>/<name>.json`` and ``<out>/<name>.csv`` with the rows
``depth,quantity,value``. The exit status is 2 for an invalid config, 1 when
the report carries flags and 0 otherwise.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from tentlab.checks import check_exponent, check_non_negative
from tentlab.disc.atomic import decompose_tp_infty, decompose_tp_q, factorize
from tentlab.disc.carleson import (
    COUNTEREXAMPLE_DEPTHS,
    ConditionReport,
    Verdict,
    counterexample_scan,
    verdict,
)
from tentlab.disc.grid import DEFAULT_DEPTH, DEFAULT_RHO, PolarGrid
from tentlab.disc.maximal import maximal_bound_check, maximal_necessity_check
from tentlab.disc.measure import DiscMeasure, build_measure
from tentlab.disc.tent import (
    TentFunction,
    TentSpace,
    cone_kernel_ratio,
    holder_bound,
    stopping_time,
)
from tentlab.disc.weights import RadialWeight, weight_from_spec

EXPERIMENTS = (
    "doubling",
    "carleson",
    "tent-duality",
    "factorization",
    "atoms",
    "maximal",
    "cone-kernel",
    "counterexample",
)
REFINEMENT = ("carleson",)
WEIGHT_PRESETS = ("constant", "standard", "log", "exponential", "table")
MEASURE_PRESETS = (
    "zero",
    "points",
    "csv",
    "hyperbolic",
    "counterexample",
    "weighted",
    "lattice",
)
# relative error of the exact identities
IDENTITY_TOLERANCE = 1e-9
RECONSTRUCTION_TOLERANCE = 1e-12


@dataclass(frozen=True)
class WeightSpec:
    kind: str = "constant"
    params: dict = field(default_factory=dict)

    def build(self) -> RadialWeight:
        return weight_from_spec(self.kind, **self.params)


@dataclass(frozen=True)
class MeasureSpec:
    kind: str = "lattice"
    params: dict = field(default_factory=lambda: {"delta": 0.5})

    def build(self, weight: RadialWeight, grid: PolarGrid, seed: int) -> DiscMeasure:
        """The measure truncated at the outermost ring of `grid`.

        Lattices stop at twice the outer defect, so that every point keeps
        cells in its tent.
        """
        params = dict(self.params)
        if self.kind in ("hyperbolic", "counterexample"):
            params.setdefault("t_min", grid.outer_defect)
        if self.kind == "lattice":
            params.setdefault("t_min", 2 * grid.outer_defect)
        if self.kind in ("counterexample", "weighted"):
            params["weight"] = weight
        if self.kind == "weighted":
            params["grid"] = grid
        if self.kind == "lattice":
            params["rng"] = np.random.default_rng(seed)
        return build_measure(self.kind, **params)


@dataclass(frozen=True)
class GridSpec:
    depth: int = DEFAULT_DEPTH
    rho: float = DEFAULT_RHO
    depths: tuple[int, ...] = (4, 5, 6)

    def at(self, depth: int | None = None) -> PolarGrid:
        return PolarGrid(self.depth if depth is None else depth, self.rho)


def _section(data: dict, key: str, kind: str) -> dict:
    section = dict(data.get(key, {}))
    if not isinstance(section, dict):
        raise ValueError(f"Expected a table [{key}]")
    return {"kind": section.pop("kind", kind), "params": section}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    experiment: str
    weight: WeightSpec = field(default_factory=WeightSpec)
    measure: MeasureSpec = field(default_factory=MeasureSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    p: float = 2.0
    q: float = 2.0
    n: int = 0
    alpha: float = 1.0
    seed: int = 0
    samples: int = 10
    out: str = "reports"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"Unknown experiment {self.experiment!r}")
        if self.weight.kind not in WEIGHT_PRESETS:
            raise ValueError(f"Unknown weight {self.weight.kind!r}")
        if self.measure.kind not in MEASURE_PRESETS:
            raise ValueError(f"Unknown measure {self.measure.kind!r}")
        check_exponent(self.p)
        check_exponent(self.q, infinite=True)
        check_exponent(self.alpha)
        check_non_negative(self.n)
        if self.n != int(self.n):
            raise ValueError(f"Expected an integer order, got {self.n=}")
        if self.experiment in REFINEMENT and min(self.grid.depths) < 3:
            raise ValueError(f"Expected grid depths >= 3, got {self.grid.depths}")

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        data = dict(data)
        grid = dict(data.pop("grid", {}))
        if "depths" in grid:
            grid["depths"] = tuple(int(depth) for depth in grid["depths"])
        return ExperimentConfig(
            weight=WeightSpec(**_section(data, "weight", "constant")),
            measure=MeasureSpec(**_section(data, "measure", "lattice")),
            grid=GridSpec(**grid),
            **{
                key: value
                for key, value in data.items()
                if key not in ("weight", "measure")
            },
        )

    @staticmethod
    def from_file(path: str | Path) -> "ExperimentConfig":
        with open(path, "rb") as stream:
            data = tomllib.load(stream)
        data.setdefault("name", Path(path).stem)
        return ExperimentConfig.from_dict(data)

    def with_overrides(
        self,
        depth: int | None = None,
        seed: int | None = None,
        out: str | None = None,
    ):
        config = self
        if depth is not None:
            config = replace(config, grid=replace(config.grid, depth=depth))
        if seed is not None:
            config = replace(config, seed=seed)
        if out is not None:
            config = replace(config, out=out)
        return config


@dataclass
class Report:
    name: str
    experiment: str
    rows: list[tuple[int, str, float]] = field(default_factory=list)
    details: dict = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    findings: list[str] = field(default_factory=list)

    def add(self, depth: int, quantity: str, value: float):
        self.rows.append((int(depth), quantity, float(value)))

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "experiment": self.experiment,
            "quantities": [
                {"depth": d, "quantity": q, "value": v} for d, q, v in self.rows
            ],
            "details": self.details,
            "flags": self.flags,
            "findings": self.findings,
        }


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"Unexpected {type(value).__name__} in report")


def write_report(report: Report, out: str | Path) -> tuple[Path, Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / f"{report.name}.json"
    csv_path = out / f"{report.name}.csv"
    document = json.dumps(report.as_dict(), sort_keys=True, indent=2, default=_plain)
    json_path.write_text(document + "\n")
    with open(csv_path, "w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(["depth", "quantity", "value"])
        for depth, quantity, value in report.rows:
            writer.writerow([depth, quantity, repr(value)])
    return json_path, csv_path


def _workers() -> int:
    value = os.environ.get("LAB_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        logging.warning(f"Ignore LAB_THREADS={value!r}")
        return 1


def _random_function(space: TentSpace, rng: np.random.Generator) -> TentFunction:
    size = space.points.size
    values = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return TentFunction(space, values)


def _relative(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    scale = float(max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0)))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


def _space(config: ExperimentConfig, weight: RadialWeight) -> TentSpace:
    grid = config.grid.at()
    return TentSpace(config.measure.build(weight, grid, config.seed), weight, grid)


def run_doubling(config, weight, rng, report):
    certificate = weight.certificate
    report.details["certificate"] = certificate.as_dict()
    for key, value in certificate.as_dict().items():
        if isinstance(value, float):
            report.add(config.grid.depth, key, value)


def _add_conditions(report: Report, conditions: ConditionReport):
    for condition in conditions.conditions:
        for depth, value in zip(condition.depths, condition.values):
            report.add(depth, condition.name, value)


def _splits(conditions: ConditionReport) -> list[str]:
    findings = []
    for a in conditions.conditions:
        for b in conditions.conditions:
            if a.verdict is Verdict.DIVERGING and b.verdict is Verdict.BOUNDED:
                findings.append(
                    f"{a.name} condition diverges while {b.name} stays bounded"
                )
    return findings


def run_carleson(config, weight, rng, report):
    def measure_at(depth: int) -> DiscMeasure:
        return config.measure.build(weight, config.grid.at(depth), config.seed)

    table = verdict(
        measure_at,
        weight,
        config.p,
        config.q,
        int(config.n),
        rng,
        depths=config.grid.depths,
        workers=_workers(),
    )
    report.details["verdict"] = table.as_dict()
    _add_conditions(report, table.report)
    for depth, value in zip(table.embedding.depths, table.embedding.values):
        report.add(depth, "embedding", value)
    report.flags.extend(table.flags)
    report.findings.extend(_splits(table.report))
    if config.measure.kind == "counterexample":
        run_counterexample(config, weight, rng, report)


def run_counterexample(config, weight, rng, report):
    depths = tuple(config.measure.params.get("depths", COUNTEREXAMPLE_DEPTHS))
    scan = counterexample_scan(weight, depths)
    report.details["counterexample"] = scan.as_dict()
    _add_conditions(report, scan)
    report.findings.extend(_splits(scan))


def run_tent_duality(config, weight, rng, report):
    space = _space(config, weight)
    depth, p, q = config.grid.depth, config.p, config.q
    for i in range(config.samples):
        f, g = _random_function(space, rng), _random_function(space, rng)
        if q < math.inf:
            lhs = float((space.cell_weights * space.area_values(f, q) ** q).sum())
            weights = space.tent_masses * space.masses
            rhs = float((np.abs(f.values) ** q * weights).sum())
            error = abs(lhs - rhs) / rhs if rhs > 0 else abs(lhs)
            report.add(depth, "fubini_error", error)
            if error > IDENTITY_TOLERANCE:
                report.flags.append(f"Fubini identity off by {error:.3g} in sample {i}")
        if 1 < p < math.inf and 1 <= q < math.inf:
            bound = holder_bound(f, g, p, q)
            report.add(depth, "holder_ratio", bound.ratio)
            if not bound.holds:
                report.flags.append(
                    f"Holder bound fails with ratio {bound.ratio:.6g} in sample {i}"
                )
        if 1 < q < math.inf:
            profile = stopping_time(g, q / (q - 1))
            report.add(depth, "stopping_C3", profile.C3)
            coverage = float(np.nanmin(profile.coverage, initial=1.0))
            report.add(depth, "stopping_coverage", coverage)
            if not profile.covered():
                report.flags.append(
                    f"Stopping time covers less than half a tent in sample {i}"
                )


def run_factorization(config, weight, rng, report):
    space = _space(config, weight)
    depth = config.grid.depth
    for i in range(config.samples):
        f = _random_function(space, rng)
        factors = factorize(f, config.p, config.q)
        error = _relative(factors.g.values * factors.h.values, f.values)
        report.add(depth, "g_ratio", factors.g_ratio)
        report.add(depth, "h_norm", factors.h_norm)
        report.add(depth, "balayage_k3", factors.k3)
        report.add(depth, "product_error", error)
        if error > IDENTITY_TOLERANCE:
            report.flags.append(f"f = g h off by {error:.3g} in sample {i}")


def run_atoms(config, weight, rng, report):
    space = _space(config, weight)
    depth, p, q = config.grid.depth, config.p, config.q
    for i in range(config.samples):
        f = _random_function(space, rng)
        if q == math.inf:
            decomposition = decompose_tp_infty(f, p)
        else:
            decomposition = decompose_tp_q(f, p, q)
        error = _relative(decomposition.reconstruct(), f.values)
        report.add(depth, "atoms", len(decomposition))
        report.add(depth, "lambda_ratio", decomposition.ratio)
        report.add(depth, "dilation", decomposition.dilation)
        report.add(depth, "reconstruction_error", error)
        if error > RECONSTRUCTION_TOLERANCE:
            report.flags.append(f"Reconstruction off by {error:.3g} in sample {i}")
        invalid = sum(not check.valid for check in decomposition.checks())
        if invalid:
            report.flags.append(f"{invalid} invalid atoms in sample {i}")


def run_maximal(config, weight, rng, report):
    grid = config.grid.at()
    mu = config.measure.build(weight, grid, config.seed)
    args = (mu, weight, config.p, config.q, config.alpha, grid)
    necessity = maximal_necessity_check(*args)
    bound = maximal_bound_check(*args, rng, config.samples)
    report.details["necessity"] = necessity.as_dict()
    report.details["bound"] = bound.as_dict()
    report.add(grid.depth, "condition", necessity.condition)
    report.add(grid.depth, "necessity_norm", necessity.norm)
    report.add(grid.depth, "bound_constant", bound.constant)
    if not necessity.holds:
        report.flags.append("Maximal condition exceeds the empirical operator norm")
    report.add(grid.depth, "bound_bracket", bound.bracket)
    if not bound.holds:
        report.flags.append(
            f"Operator norm constant {bound.constant:.6g} above {bound.bracket:.6g}"
        )


def run_cone_kernel(config, weight, rng, report):
    space = _space(config, weight)
    lambda0 = weight.certificate.lambda0
    if not math.isfinite(lambda0):
        raise ValueError(f"Expected a weight with a kernel exponent, got {weight!r}")
    for shift in (1, 2, 4):
        result = cone_kernel_ratio(space, config.p, lambda0 + shift)
        report.add(config.grid.depth, f"ratio_lambda0+{shift}", result["ratio"])
        if not math.isfinite(result["ratio"]):
            report.flags.append(f"Cone integral undefined for lambda0 + {shift}")


RUNNERS: dict[str, Callable] = {
    "doubling": run_doubling,
    "carleson": run_carleson,
    "tent-duality": run_tent_duality,
    "factorization": run_factorization,
    "atoms": run_atoms,
    "maximal": run_maximal,
    "cone-kernel": run_cone_kernel,
    "counterexample": run_counterexample,
}


def run_experiment(config: ExperimentConfig) -> Report:
    """Run `config` drawing all randomness from one generator seeded by `seed`."""
    logging.info(f"Start {config.experiment} experiment {config.name!r}")
    rng = np.random.default_rng(config.seed)
    weight = config.weight.build()
    report = Report(config.name, config.experiment)
    report.details["config"] = asdict(config)
    try:
        RUNNERS[config.experiment](config, weight, rng, report)
    except ArithmeticError as error:
        logging.error(f"{config.experiment} stopped: {error}")
        report.flags.append(f"Computation failed: {error}")
    logging.info(f"Finish {config.name!r} with {len(report.flags)} flags")
    return report


def presets() -> str:
    lines = [
        "weights: " + ", ".join(WEIGHT_PRESETS),
        "measures: " + ", ".join(MEASURE_PRESETS),
    ]
    lines.append("experiments: " + ", ".join(EXPERIMENTS))
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lab", description="Tent space and Carleson measure experiments"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("run", help="Run an experiment config")
    run.add_argument("config", type=Path, help="TOML experiment config")
    run.add_argument("--out", help="Output directory, overrides the config")
    run.add_argument("--depth", type=int, help="Grid depth, overrides the config")
    run.add_argument("--seed", type=int, help="Random seed, overrides the config")
    run.add_argument("--verbose", action="store_true", help="Log debug messages")
    commands.add_parser("presets", help="List weights, measures and experiments")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        print(presets())
        return 0
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        config = ExperimentConfig.from_file(args.config)
        config = config.with_overrides(args.depth, args.seed, args.out)
    except (OSError, tomllib.TOMLDecodeError, ValueError, KeyError, TypeError) as error:
        print(f"lab: invalid config {args.config}: {error}", file=sys.stderr)
        return 2
    try:
        report = run_experiment(config)
    except (OSError, ValueError, KeyError) as error:
        print(f"lab: invalid config {args.config}: {error}", file=sys.stderr)
        return 2
    json_path, csv_path = write_report(report, config.out)
    print(f"{json_path}\n{csv_path}")
    for flag in report.flags:
        print(f"flag: {flag}", file=sys.stderr)
    return 1 if report.flags else 0


if __name__ == "__main__":
    sys.exit(main())
