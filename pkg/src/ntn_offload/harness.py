"""Experiment configuration and the convergence / sweep runners.

Outputs are plain CSV.  Every float is written with ``repr`` and rows are sorted
by (m_h, bandwidth_hz, run, scheme) before writing, so a given config produces
byte-identical files regardless of the worker count.  Wall-clock timings are
the one nondeterministic output and go to a separate ``timings.csv``.
"""
from __future__ import annotations

import csv
import dataclasses
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .baselines import brute_force_optimal, random_scheme
from .benders import SolverOptions, benders_solve, write_trace_csv
from .model import ConvergenceError, Mode, Scheme
from .physics import Instance, SystemParams, random_instance, with_bandwidth

OUTPUT_DIR_ENV = "NTN_OFFLOAD_OUTPUT_DIR"

RESULT_COLUMNS = ("m_h", "bandwidth_hz", "scheme", "run_seed", "objective_bps", "local_bps",
                  "offload_bps", "backhaul_bps", "iterations", "chosen_y_bitmask", "errors")
TIMING_COLUMNS = ("m_h", "bandwidth_hz", "scheme", "run_seed", "wall_ms")
MEAN_COLUMNS = ("m_h", "bandwidth_hz", "scheme", "runs", "mean_objective_bps", "mean_local_bps",
                "mean_offload_bps", "mean_backhaul_bps", "mean_iterations")
SCHEME_ORDER = (Scheme.BENDERS, Scheme.ORACLE, Scheme.RANDOM)


class ConfigError(ValueError):
    def __init__(self, field_name: str, msg: str, line: Optional[int] = None):
        self.field = field_name
        self.line = line
        self.msg = msg
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{field_name}{where}: {msg}")


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, "results")


@dataclass
class ExperimentConfig:
    params: SystemParams = field(default_factory=SystemParams)
    hue_counts: list = field(default_factory=lambda: [100])
    # None -> [params.bandwidth_hz]
    bandwidths_hz: Optional[list] = None
    runs: int = 100
    base_seed: int = 0
    mode: Mode = Mode.PAPER
    epsilon: float = 1e-4
    psi_down: float = -25.0
    max_iter: int = 50
    num_lues: int = 0
    # None -> unit weights; [lo, hi] -> per-HUE uniform draw from the cell seed
    weight_range: Optional[list] = None
    workers: int = 1
    output_dir: str = field(default_factory=default_output_dir)

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.bandwidths_hz is None:
            self.bandwidths_hz = [self.params.bandwidth_hz]
        self.hue_counts = [int(m) for m in self.hue_counts]
        self.bandwidths_hz = [float(b) for b in self.bandwidths_hz]
        if not self.hue_counts or any(m < 1 for m in self.hue_counts):
            raise ConfigError("hue_counts", "must be a nonempty list of integers >= 1")
        if not self.bandwidths_hz or any(not b > 0 or not math.isfinite(b) for b in self.bandwidths_hz):
            raise ConfigError("bandwidths_hz", "must be a nonempty list of positive numbers")
        if self.runs < 1:
            raise ConfigError("runs", "must be >= 1")
        if not self.epsilon > 0:
            raise ConfigError("epsilon", "must be > 0")
        if self.max_iter < 1:
            raise ConfigError("max_iter", "must be >= 1")
        if self.num_lues < 0:
            raise ConfigError("num_lues", "must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        if self.weight_range is not None:
            wr = [float(v) for v in self.weight_range]
            if len(wr) != 2 or not 0 < wr[0] <= wr[1]:
                raise ConfigError("weight_range", "must be [lo, hi] with 0 < lo <= hi")
            self.weight_range = wr

    def solver_options(self) -> SolverOptions:
        return SolverOptions(epsilon=self.epsilon, max_iter=self.max_iter, mode=self.mode,
                             psi_down=self.psi_down)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["params"] = self.params.to_dict()
        d["mode"] = self.mode.value
        return d


# --- config file parsing -------------------------------------------------------

_INT_FIELDS = {"runs", "base_seed", "max_iter", "num_lues", "workers"}
_FLOAT_FIELDS = {"epsilon", "psi_down"}


def _key_lines(node) -> dict:
    """Map 'key' and 'params.key' to 1-based source lines."""
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            lines[k.value] = k.start_mark.line + 1
            if k.value == "params" and isinstance(v, yaml.MappingNode):
                for pk, _ in v.value:
                    lines[f"params.{pk.value}"] = pk.start_mark.line + 1
    return lines


def _as_float(name: str, v, line) -> float:
    if isinstance(v, bool):
        raise ConfigError(name, f"expected a number, got {v!r}", line)
    try:
        return float(v)  # also accepts '20e6', which YAML 1.1 leaves as a string
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {v!r}", line) from None


def _as_int(name: str, v, line) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(name, f"expected an integer, got {v!r}", line)
    return v


def config_from_dict(raw: Optional[dict], lines: Optional[dict] = None) -> ExperimentConfig:
    lines = lines or {}
    raw = {} if raw is None else raw
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "top level must be a mapping")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    kwargs = {}
    for key, v in raw.items():
        line = lines.get(key)
        if key not in known:
            raise ConfigError(key, "unknown key", line)
        if key == "params":
            kwargs["params"] = _params_from_dict(v, lines)
        elif key in _INT_FIELDS:
            kwargs[key] = _as_int(key, v, line)
        elif key in _FLOAT_FIELDS:
            kwargs[key] = _as_float(key, v, line)
        elif key == "hue_counts":
            if not isinstance(v, list):
                raise ConfigError(key, "expected a list of integers", line)
            kwargs[key] = [_as_int(key, x, line) for x in v]
        elif key == "bandwidths_hz":
            if not isinstance(v, list):
                raise ConfigError(key, "expected a list of numbers", line)
            kwargs[key] = [_as_float(key, x, line) for x in v]
        elif key == "weight_range":
            if v is not None and not isinstance(v, list):
                raise ConfigError(key, "expected [lo, hi]", line)
            kwargs[key] = None if v is None else [_as_float(key, x, line) for x in v]
        elif key == "mode":
            try:
                kwargs[key] = Mode(v)
            except ValueError:
                raise ConfigError(key, f"expected 'paper' or 'relaxed', got {v!r}", line) from None
        elif key == "output_dir":
            kwargs[key] = str(v)
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError as e:
        raise ConfigError(e.field, e.msg, lines.get(e.field)) from None


def _params_from_dict(v, lines: dict) -> SystemParams:
    if v is None:
        return SystemParams()
    if not isinstance(v, dict):
        raise ConfigError("params", "expected a mapping", lines.get("params"))
    fields = {f.name: f for f in dataclasses.fields(SystemParams)}
    kw = {}
    for k, x in v.items():
        name = f"params.{k}"
        line = lines.get(name)
        if k not in fields:
            raise ConfigError(name, "unknown key", line)
        if k == "random_rician":
            if not isinstance(x, bool):
                raise ConfigError(name, f"expected true/false, got {x!r}", line)
            kw[k] = x
        elif k == "uav_leo_distance_m" and x is None:
            kw[k] = None
        else:
            kw[k] = _as_float(name, x, line)
    try:
        return SystemParams(**kw)
    except ValueError as e:
        field_name = str(e).split(":", 1)[0]
        full = f"params.{field_name}"
        raise ConfigError(full, str(e).split(": ", 1)[-1], lines.get(full)) from None


def parse_config(path) -> ExperimentConfig:
    """Load a YAML experiment config.

    Absent keys take their defaults (an empty file gives the full default
    parameter set); unknown keys and out-of-range values raise
    :class:`ConfigError` naming the field and its line.
    """
    text = Path(path).read_text()
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError("<file>", f"invalid YAML: {e}",
                          mark.line + 1 if mark is not None else None) from None
    return config_from_dict(raw, _key_lines(node))


def dump_config(config: ExperimentConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config.to_dict(), sort_keys=False))


# --- seeds and instances ---------------------------------------------------------

def cell_seed(base_seed: int, m_h: int, run: int) -> int:
    """Seed for one (m_h, run) cell.

    Bandwidth is deliberately not an input: all bandwidths of a cell share the
    same topology and shadowing so their rows are directly comparable.
    """
    return int(np.random.SeedSequence([base_seed, m_h, run]).generate_state(1, dtype=np.uint64)[0]
               >> np.uint64(1))


def cell_instance(config: ExperimentConfig, m_h: int, bandwidth_hz: float, run: int) -> Instance:
    seed = cell_seed(config.base_seed, m_h, run)
    weights = None
    if config.weight_range is not None:
        wrng = np.random.default_rng([seed, 7])
        weights = wrng.uniform(config.weight_range[0], config.weight_range[1], size=m_h)
    params = with_bandwidth(config.params, bandwidth_hz)
    return random_instance(params, m_h, seed, weights=weights, m_l=config.num_lues)


# --- runners ------------------------------------------------------------------------

def _out_dir(config: ExperimentConfig, output_dir=None) -> Path:
    out = Path(output_dir or config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out}: {e}") from e
    return out


def run_convergence(config: ExperimentConfig, output_dir=None, filename="convergence.csv"):
    """Benders trace on the first configured cell.

    Returns (csv_path, converged, solution).
    """
    m_h, bw = config.hue_counts[0], config.bandwidths_hz[0]
    inst = cell_instance(config, m_h, bw, 0)
    out = _out_dir(config, output_dir)
    try:
        sol, state = benders_solve(inst, config.solver_options())
        converged = True
    except ConvergenceError as e:
        sol, state, converged = e.best, e.state, False
    path = out / filename
    try:
        write_trace_csv(path, state.trace)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
    return path, converged, sol


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _solve_cell(args) -> tuple:
    config, m_h, bw, run = args
    seed = cell_seed(config.base_seed, m_h, run)
    rows, timings = [], []
    try:
        inst = cell_instance(config, m_h, bw, run)
    except Exception as e:  # noqa: BLE001 - recorded in the errors column
        for scheme in SCHEME_ORDER:
            rows.append((m_h, bw, scheme.value, seed) + (None,) * 6 + (f"{type(e).__name__}: {e}",))
        return rows, timings

    def benders():
        try:
            sol, _ = benders_solve(inst, config.solver_options())
            return sol, ""
        except ConvergenceError as e:
            return e.best, f"nonconvergence gap={e.gap!r}"

    runners = {
        Scheme.BENDERS: benders,
        Scheme.ORACLE: lambda: (brute_force_optimal(inst, config.mode), ""),
        Scheme.RANDOM: lambda: (random_scheme(inst, config.mode, seed), ""),
    }
    for scheme in SCHEME_ORDER:
        t0 = time.perf_counter()
        try:
            sol, err = runners[scheme]()
            rows.append((m_h, bw, scheme.value, seed, sol.objective_bps, *sol.breakdown,
                         sol.iterations, sol.y.bitmask, err))
        except Exception as e:  # noqa: BLE001
            rows.append((m_h, bw, scheme.value, seed) + (None,) * 6 + (f"{type(e).__name__}: {e}",))
        timings.append((m_h, bw, scheme.value, seed, (time.perf_counter() - t0) * 1e3))
    return rows, timings


def sweep_rows(config: ExperimentConfig, workers: Optional[int] = None) -> tuple:
    """Solve every (m_h, bandwidth, run) cell with all three schemes.

    Returns (rows, timings) ordered by (m_h, bandwidth, run, scheme).
    """
    cells = [(config, m, b, r) for m in config.hue_counts for b in config.bandwidths_hz
             for r in range(config.runs)]
    workers = workers or config.workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_solve_cell, cells, chunksize=max(1, len(cells) // (4 * workers))))
    else:
        results = [_solve_cell(c) for c in cells]
    rows = [r for res in results for r in res[0]]
    timings = [t for res in results for t in res[1]]
    return rows, timings


def cell_means(rows) -> list:
    groups = {}
    for r in rows:
        if r[4] is None:
            continue
        groups.setdefault((r[0], r[1], r[2]), []).append(r)
    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], [s.value for s in SCHEME_ORDER].index(k[2]))):
        g = groups[key]
        cols = np.array([[r[4], r[5], r[6], r[7], r[8]] for r in g], dtype=float)
        means = [float(v) for v in cols.mean(axis=0)]
        out.append(key + (len(g),) + tuple(means))
    return out


def _write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e


def run_sweep(config: ExperimentConfig, output_dir=None, workers: Optional[int] = None) -> dict:
    """Write results.csv, means.csv and timings.csv; returns their paths."""
    out = _out_dir(config, output_dir)
    rows, timings = sweep_rows(config, workers)
    paths = {"results": out / "results.csv", "means": out / "means.csv",
             "timings": out / "timings.csv"}
    _write_csv(paths["results"], RESULT_COLUMNS, rows)
    _write_csv(paths["means"], MEAN_COLUMNS, cell_means(rows))
    _write_csv(paths["timings"], TIMING_COLUMNS, timings)
    return paths
