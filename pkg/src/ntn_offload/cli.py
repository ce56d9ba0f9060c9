"""Command line entry point.

    ntn-offload solve --config cfg.yaml --seed 3 [--mode relaxed] [--epsilon 1e-3]
    ntn-offload convergence --config cfg.yaml
    ntn-offload sweep --config cfg.yaml [--workers 4]

Exit codes: 0 success, 2 invalid config or arguments, 3 Benders did not converge.
Output goes to the config's ``output_dir`` (default: $NTN_OFFLOAD_OUTPUT_DIR or
./results) unless ``--output-dir`` is given.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .benders import benders_solve
from .harness import ConfigError, cell_instance, parse_config, run_convergence, run_sweep
from .model import ConvergenceError, Mode

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3

log = logging.getLogger("ntn_offload")


def _load(args):
    cfg = parse_config(args.config)
    if getattr(args, "mode", None):
        cfg.mode = Mode(args.mode)
    if getattr(args, "epsilon", None) is not None:
        if not args.epsilon > 0:
            raise ConfigError("--epsilon", "must be > 0")
        cfg.epsilon = args.epsilon
    if getattr(args, "workers", None) is not None:
        if args.workers < 1:
            raise ConfigError("--workers", "must be >= 1")
        cfg.workers = args.workers
    if args.output_dir:
        cfg.output_dir = args.output_dir
    return cfg


def cmd_solve(args) -> int:
    cfg = _load(args)
    m_h, bw = cfg.hue_counts[0], cfg.bandwidths_hz[0]
    cfg = dataclasses.replace(cfg, base_seed=args.seed)
    inst = cell_instance(cfg, m_h, bw, 0)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "instance.json").write_text(inst.to_json(indent=1))
    code = EXIT_OK
    try:
        sol, _ = benders_solve(inst, cfg.solver_options())
    except ConvergenceError as e:
        log.error("%s", e)
        sol, code = e.best, EXIT_NONCONVERGED
    doc = json.dumps(sol.to_dict(), indent=1)
    (out / "solution.json").write_text(doc)
    print(doc)
    return code


def cmd_convergence(args) -> int:
    cfg = _load(args)
    path, converged, sol = run_convergence(cfg)
    print(f"{path}: {sol.iterations} iterations, gap {sol.gap!r} bps, "
          f"objective {sol.objective_bps!r} bps")
    if not converged:
        log.error("gap above epsilon=%g after %d iterations", cfg.epsilon, cfg.max_iter)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    paths = run_sweep(cfg)
    for name, p in paths.items():
        print(f"{name}: {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ntn-offload", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--output-dir", default=None)

    p = sub.add_parser("solve", help="solve one seeded instance with Benders")
    common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--epsilon", type=float)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("convergence", help="write the Benders bound trace")
    common(p)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("sweep", help="compare Benders, oracle and random over a grid")
    common(p)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as e:
        log.error("%s", e)
        return EXIT_INVALID
    except OSError as e:
        log.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
