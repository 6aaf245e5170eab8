"""Batch front-end: sweep a density/threshold grid through the engines.

A single JSON document describes the scenario template, the grids and the
engines to run; every (lambda, theta, association, engine) cell becomes one
row of figure-ready CSV (or JSON lines). Runs are deterministic for a fixed
config, including the Monte Carlo columns and the row order, regardless of
the worker count.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
import time
from dataclasses import dataclass

from .analytic import Scenario, coverage_multislope, coverage_upper_bound
from .model import Association, FadingModel, LosModel, NetworkConfig, PathLossModel
from .montecarlo import SimSpec, estimate_coverage
from .quadrature import QuadratureError

SCHEMA_VERSION = 1
ENGINES = ("analytic", "upper_bound", "montecarlo")
CSV_HEADER = "lambda,theta_db,association,engine,pcov,err,flag,wall_ms"
WORKERS_ENV = "UDNCOVER_WORKERS"


class ConfigError(Exception):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class Cell:
    lam: float
    theta_db: float
    association: Association
    engine: str


@dataclass
class RunConfig:
    path_loss: PathLossModel
    los: LosModel
    fading: FadingModel
    associations: list[Association]
    sigma2: float
    lambda_grid: list[float]
    theta_grid_db: list[float]
    engines: list[str]
    mc_n: int = 100_000
    mc_seed: int | None = None
    mc_window: float | None = None
    output_path: str | None = None
    output_format: str = "csv"

    def cells(self) -> list[Cell]:
        cells = [
            Cell(lam, th, assoc, engine)
            for lam in self.lambda_grid
            for th in self.theta_grid_db
            for assoc in self.associations
            for engine in self.engines
        ]
        cells.sort(key=lambda c: (c.lam, c.theta_db, c.association.value, c.engine))
        return cells

    def scenario(self, cell: Cell) -> Scenario:
        return Scenario(
            net=NetworkConfig(
                density=cell.lam,
                theta=10.0 ** (cell.theta_db / 10.0),
                association=cell.association,
                sigma2=self.sigma2,
            ),
            path_loss=self.path_loss,
            los=self.los,
            fading=self.fading,
        )


def _expect(cond, message, key=None):
    if not cond:
        raise ConfigError(message, key=key)


def _parse_los(doc) -> LosModel:
    _expect(isinstance(doc, dict) and "kind" in doc, "los must be an object with a 'kind'", "los")
    kind = doc["kind"]
    try:
        if kind == "none":
            return LosModel.none()
        if kind == "constant":
            _expect("p" in doc, "constant LOS model needs 'p'", "los")
            return LosModel.constant(float(doc["p"]))
        if kind == "umi":
            return LosModel.umi(float(doc.get("d1", 18.0)), float(doc.get("d2", 36.0)))
        if kind == "step":
            _expect("d" in doc, "step LOS model needs the critical distance 'd'", "los")
            return LosModel.step(float(doc["d"]))
    except ValueError as exc:
        raise ConfigError(f"invalid los model: {exc}", "los") from exc
    raise ConfigError(f"unknown los kind {kind!r} (none|constant|umi|step)", "kind")


def _parse_fading(doc) -> FadingModel:
    _expect(isinstance(doc, dict), "fading must be an object", "fading")
    has_m, has_k = "m" in doc, "k_db" in doc
    _expect(has_m != has_k, "fading needs exactly one of 'm' or 'k_db'", "fading")
    try:
        if has_m:
            return FadingModel(m=doc["m"])
        return FadingModel.from_k_factor(10.0 ** (float(doc["k_db"]) / 10.0))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid fading model: {exc}", "fading") from exc


def _parse_lambda_grid(doc) -> list[float]:
    if isinstance(doc, list):
        _expect(len(doc) > 0, "lambda_grid must not be empty", "lambda_grid")
        grid = [float(v) for v in doc]
        _expect(all(v > 0 for v in grid), "lambda_grid values must be > 0", "lambda_grid")
        return grid
    _expect(isinstance(doc, dict), "lambda_grid must be a list or a log-spacing object", "lambda_grid")
    for k in ("start", "stop", "points_per_decade"):
        _expect(k in doc, f"lambda_grid log-spacing needs '{k}'", "lambda_grid")
    start, stop, ppd = float(doc["start"]), float(doc["stop"]), int(doc["points_per_decade"])
    _expect(0 < start <= stop, "lambda_grid needs 0 < start <= stop", "lambda_grid")
    _expect(ppd >= 1, "points_per_decade must be >= 1", "lambda_grid")
    n = round(math.log10(stop / start) * ppd)
    grid = [start * 10.0 ** (k / ppd) for k in range(n + 1)]
    grid[-1] = min(grid[-1], stop)
    return grid


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc.msg} (line {exc.lineno})") from exc
    _expect(isinstance(doc, dict), "top level must be a JSON object")
    _expect(
        doc.get("schema_version") == SCHEMA_VERSION,
        f"schema_version must be {SCHEMA_VERSION}",
        "schema_version",
    )

    try:
        pl_doc = doc.get("path_loss")
        _expect(isinstance(pl_doc, dict), "path_loss must be an object", "path_loss")
        path_loss = PathLossModel(
            exponents=tuple(pl_doc.get("exponents", ())),
            transitions=tuple(pl_doc.get("transitions", ())),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid path_loss: {exc}", "path_loss") from exc

    los = _parse_los(doc.get("los", {"kind": "none"}))
    fading = _parse_fading(doc.get("fading", {"m": 1}))

    assoc_doc = doc.get("associations")
    _expect(
        isinstance(assoc_doc, list) and len(assoc_doc) > 0,
        "associations must be a non-empty list",
        "associations",
    )
    associations = []
    for name in assoc_doc:
        try:
            associations.append(Association(name))
        except ValueError:
            raise ConfigError(f"unknown association {name!r} (closest|strongest)", "associations")

    snr = doc.get("snr_db")
    if isinstance(snr, list):
        _expect(
            len(snr) <= 1,
            "snr_db lists longer than 1 are not supported: the output schema "
            "has no noise column to tell the rows apart; use one config per SNR",
            "snr_db",
        )
        snr = snr[0] if snr else None
    sigma2 = 0.0 if snr is None else 10.0 ** (-float(snr) / 10.0)

    lambda_grid = _parse_lambda_grid(doc.get("lambda_grid"))
    theta_doc = doc.get("theta_grid_db")
    _expect(
        isinstance(theta_doc, list) and len(theta_doc) > 0,
        "theta_grid_db must be a non-empty list",
        "theta_grid_db",
    )
    theta_grid = [float(v) for v in theta_doc]

    engines_doc = doc.get("engines")
    _expect(
        isinstance(engines_doc, list) and len(engines_doc) > 0,
        "engines must be a non-empty list",
        "engines",
    )
    for eng in engines_doc:
        _expect(eng in ENGINES, f"unknown engine {eng!r} {ENGINES}", "engines")

    cfg = RunConfig(
        path_loss=path_loss,
        los=los,
        fading=fading,
        associations=associations,
        sigma2=sigma2,
        lambda_grid=lambda_grid,
        theta_grid_db=theta_grid,
        engines=list(engines_doc),
    )

    mc_doc = doc.get("mc")
    if mc_doc is not None:
        _expect(isinstance(mc_doc, dict), "mc must be an object", "mc")
        cfg.mc_n = int(mc_doc.get("n_realizations", cfg.mc_n))
        _expect(cfg.mc_n >= 1, "mc.n_realizations must be >= 1", "mc")
        if mc_doc.get("seed") is not None:
            cfg.mc_seed = int(mc_doc["seed"])
        if mc_doc.get("window_radius") is not None:
            cfg.mc_window = float(mc_doc["window_radius"])
            _expect(cfg.mc_window > 0, "mc.window_radius must be > 0", "mc")

    out_doc = doc.get("output")
    if out_doc is not None:
        _expect(isinstance(out_doc, dict), "output must be an object", "output")
        cfg.output_path = out_doc.get("path")
        cfg.output_format = out_doc.get("format", "csv")
        _expect(cfg.output_format in ("csv", "jsonl"), "output.format must be csv or jsonl", "output")
    return cfg


def check_config(cfg: RunConfig) -> list[tuple[Cell, Scenario]]:
    """Instantiate every cell's scenario, surfacing invariant violations."""
    if "montecarlo" in cfg.engines and cfg.mc_seed is None:
        raise ConfigError(
            "mc.seed is required when the montecarlo engine is enabled "
            "(runs must be reproducible)",
            "mc",
        )
    if "upper_bound" in cfg.engines:
        if cfg.los.kind.value != "step" or cfg.path_loss.n_slopes != 1:
            raise ConfigError(
                "the upper_bound engine applies to single-slope path loss "
                "with the step LOS model only",
                "engines",
            )
    out = []
    for cell in cfg.cells():
        try:
            out.append((cell, cfg.scenario(cell)))
        except (ValueError, TypeError) as exc:
            raise ConfigError(
                f"cell (lambda={cell.lam!r}, theta_db={cell.theta_db!r}, "
                f"association={cell.association.value}): {exc}"
            ) from exc
    return out


def _compute_cell(args):
    cfg, cell = args
    scn = cfg.scenario(cell)
    t0 = time.perf_counter()
    if cell.engine == "analytic":
        res = coverage_multislope(scn)
        pcov, err, flag = res.pcov, res.quad_error, res.flag
    elif cell.engine == "upper_bound":
        res = coverage_upper_bound(scn)
        pcov, err, flag = res.pcov, res.quad_error, res.flag
    else:
        est = estimate_coverage(
            SimSpec(
                scenario=scn,
                n_realizations=cfg.mc_n,
                seed=cfg.mc_seed,
                window_radius=cfg.mc_window,
            )
        )
        pcov, err, flag = est.pcov_hat, est.stderr, None
    wall_ms = int(round((time.perf_counter() - t0) * 1000.0))
    return pcov, err, flag, wall_ms


def _format_row(cell: Cell, pcov, err, flag, wall_ms, fmt: str) -> str:
    if fmt == "csv":
        return (
            f"{float(cell.lam)!r},{float(cell.theta_db)!r},{cell.association.value},"
            f"{cell.engine},{float(pcov)!r},{float(err)!r},{flag or ''},{wall_ms}"
        )
    return json.dumps(
        {
            "lambda": float(cell.lam),
            "theta_db": float(cell.theta_db),
            "association": cell.association.value,
            "engine": cell.engine,
            "pcov": float(pcov),
            "err": float(err),
            "flag": flag,
            "wall_ms": wall_ms,
        }
    )


def _default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def run(config_path: str, output=None, fmt=None, workers=None, engines=None, timing=False) -> int:
    """Execute a sweep; returns the process exit code."""
    try:
        cfg = load_config(config_path)
        if engines:
            for eng in engines:
                if eng not in ENGINES:
                    raise ConfigError(f"unknown engine {eng!r} {ENGINES}", "engines")
            cfg.engines = list(engines)
        check_config(cfg)
    except ConfigError as exc:
        print(_anchored(config_path, exc), file=sys.stderr)
        return 2

    if output is not None:
        cfg.output_path = output
    if fmt is not None:
        cfg.output_format = fmt
    if cfg.output_path is None:
        base = os.path.splitext(os.path.basename(config_path))[0]
        cfg.output_path = base + (".jsonl" if cfg.output_format == "jsonl" else ".csv")
    workers = workers if workers else _default_workers()

    cells = cfg.cells()
    results: dict[int, tuple] = {}
    failure = None
    if workers <= 1:
        for i, cell in enumerate(cells):
            try:
                results[i] = _compute_cell((cfg, cell))
            except QuadratureError as exc:
                failure = (cell, exc)
                break
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_compute_cell, (cfg, cell)): i for i, cell in enumerate(cells)}
            for fut in concurrent.futures.as_completed(futs):
                i = futs[fut]
                try:
                    results[i] = fut.result()
                except QuadratureError as exc:
                    if failure is None:
                        failure = (cells[i], exc)

    lines = [CSV_HEADER] if cfg.output_format == "csv" else []
    for i in sorted(results):
        pcov, err, flag, wall_ms = results[i]
        if not timing:
            wall_ms = 0
        lines.append(_format_row(cells[i], pcov, err, flag, wall_ms, cfg.output_format))
    with open(cfg.output_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

    if failure is not None:
        cell, exc = failure
        print(
            f"numerical failure in cell (lambda={cell.lam!r}, theta_db={cell.theta_db!r}, "
            f"association={cell.association.value}, engine={cell.engine}): {exc}; "
            f"completed rows flushed to {cfg.output_path}",
            file=sys.stderr,
        )
        return 3
    print(f"wrote {len(results)} rows to {cfg.output_path}")
    return 0


def validate(config_path: str) -> int:
    """Schema and invariant check without computing anything."""
    try:
        cfg = load_config(config_path)
        cells = check_config(cfg)
    except ConfigError as exc:
        print(_anchored(config_path, exc), file=sys.stderr)
        return 2
    for cell, scn in cells:
        print(
            f"cell lambda={cell.lam!r} theta_db={cell.theta_db!r} "
            f"association={cell.association.value} engine={cell.engine} "
            f"sigma2={scn.net.sigma2!r} m={scn.fading.m}"
        )
    print(f"OK, {len(cells)} cells")
    return 0


def _anchored(config_path: str, exc: ConfigError) -> str:
    """Prefix the message with file:line of the offending key when findable."""
    line = None
    if exc.key is not None and os.path.exists(config_path):
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                for i, text in enumerate(fh, 1):
                    if f'"{exc.key}"' in text:
                        line = i
                        break
        except OSError:
            pass
    loc = f"{config_path}:{line}" if line else config_path
    return f"{loc}: config error: {exc}"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="udncover",
        description="Coverage-probability sweeps for LOS/NLOS cellular models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a sweep config and write result rows")
    p_run.add_argument("config")
    p_run.add_argument("--output", help="output file path (default: <config>.csv)")
    p_run.add_argument("--format", choices=("csv", "jsonl"), dest="fmt")
    p_run.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    p_run.add_argument("--engines", help="comma-separated engine override")
    p_run.add_argument(
        "--timing",
        action="store_true",
        help="record wall_ms per cell (off by default so identical configs "
        "produce byte-identical output)",
    )

    p_val = sub.add_parser("validate", help="check a config without computing")
    p_val.add_argument("config")

    args = parser.parse_args(argv)
    if args.command == "validate":
        return validate(args.config)
    engines = args.engines.split(",") if args.engines else None
    return run(
        args.config,
        output=args.output,
        fmt=args.fmt,
        workers=args.workers,
        engines=engines,
        timing=args.timing,
    )


if __name__ == "__main__":
    sys.exit(main())
