"""Command-line entry point: ``nlcalc {verify,compare-L,assemble,simulate}``.

Exit codes: 0 success, 1 a verification failed, 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import calculus, config, dynamics, peridyn
from .errors import ConfigurationError, DimensionError, SingularConfigurationError

log = logging.getLogger("nlcalc")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _out_path(cfg: dict, args, key: str) -> Path:
    base = Path(args.out) if args.out else Path(cfg["output"]["dir"])
    base.mkdir(parents=True, exist_ok=True)
    return base / cfg["output"][key]


def _seed(cfg: dict, args, section: str | None = None) -> int:
    if args.seed is not None:
        return args.seed
    if section and "seed" in cfg.get(section, {}):
        return cfg[section]["seed"]
    return cfg["seed"]


def cmd_verify(cfg: dict, args) -> int:
    seed = _seed(cfg, args, "verify")
    suites = args.suite.split(",") if args.suite else cfg["verify"].get("suites")
    grid = config.build_grid(cfg)
    kernel = config.build_kernel(cfg, grid, seed)
    label = f"{cfg['kernel']['family']}_{cfg['kernel']['form']}"
    rows = calculus.run_suite(kernel, seed, suites, label, cfg["verify"]["norm_trials"])
    path = _out_path(cfg, args, "residuals")
    calculus.write_reports_csv(path, rows)
    failed = [r for r in rows if not r.passed]
    for r in rows:
        log.info("%-40s %-14s residual %.3e  threshold %.3e", r.name, r.status, r.max_abs_residual, r.threshold)
    disagree = [r for r in rows if r.agrees_with_published is False]
    if disagree:
        log.info("%d row(s) differ from the published claim: %s", len(disagree),
                 ", ".join(sorted({r.name for r in disagree})))
    log.warning("%d/%d identities pass; residuals written to %s", len(rows) - len(failed), len(rows), path)
    return EXIT_FAIL if failed else EXIT_OK


def _l_forms(mat, u, forms):
    out = {}
    for f in forms:
        if f == "direct":
            out[f] = peridyn.apply_L_direct(u, mat)
        elif f == "kernel":
            out[f] = peridyn.apply_L_kernel(peridyn.assemble_C(mat), u)
        else:
            out[f] = -peridyn.apply_L_operator(u, mat, form=f)
    return out


def cmd_compare_L(cfg: dict, args) -> int:
    seed = _seed(cfg, args)
    grid = config.build_grid(cfg)
    mat = config.build_material(cfg, grid, seed)
    forms = cfg["compare"]["forms"]
    if mat.exponent != 2 and ({"gradient", "tensor"} & set(forms)):
        raise ConfigurationError("the operator forms of L require the influence exponent r = 2")
    u = np.random.default_rng(seed + 1).uniform(-1.0, 1.0, (grid.n, 3))
    results = _l_forms(mat, u, forms)
    worst = 0.0
    names = list(results)
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            d = peridyn.relative_discrepancy(results[names[a]], results[names[b]])
            log.info("%s vs %s: %.3e", names[a], names[b], d)
            worst = max(worst, d)
    tol = cfg["compare"]["tolerance"]
    print(f"max relative discrepancy {worst:.17g} ({', '.join(names)})")
    return EXIT_OK if worst <= tol else EXIT_FAIL


def cmd_assemble(cfg: dict, args) -> int:
    grid = config.build_grid(cfg)
    mat = config.build_material(cfg, grid, _seed(cfg, args))
    C = peridyn.assemble_C(mat)
    path = _out_path(cfg, args, "blocks")
    C.write_csv(path)
    log.warning("%d blocks on %d nodes written to %s", C.nnz_blocks, grid.n, path)
    return EXIT_OK


def _initial_displacement(cfg: dict, grid) -> np.ndarray:
    init = cfg["simulate"]["initial"]
    amp = np.asarray(init["amplitude"], dtype=float)
    if init["type"] == "zero":
        return np.zeros((grid.n, 3))
    if init["type"] == "constant":
        return np.tile(amp, (grid.n, 1))
    lo = np.array([b[0] for b in cfg["grid"]["bounds"]])
    hi = np.array([b[1] for b in cfg["grid"]["bounds"]])
    center = np.asarray(init.get("center", (lo + hi) / 2), dtype=float)
    bump = np.exp(-np.sum((grid.nodes - center) ** 2, axis=1) / (2.0 * init["width"] ** 2))
    return bump[:, None] * amp


def _constraints(cfg: dict, grid) -> dynamics.Constraints:
    """Volume constraints: layers of nodes near a face follow a sin(2 pi f t) displacement."""
    specs = cfg["simulate"]["constraints"]
    if not specs:
        return dynamics.Constraints.none()
    owner = np.full(grid.n, -1)
    for idx, spec in enumerate(specs):
        axis = int(spec["face"][1]) - 1
        x = grid.nodes[:, axis]
        layer = spec.get("layer", grid.horizon)
        near = x <= x.min() + layer if spec["face"].endswith("-") else x >= x.max() - layer
        owner[near & (owner < 0)] = idx
    nodes = np.flatnonzero(owner >= 0)
    amps = np.array([specs[o].get("amplitude", [0.0, 0.0, 0.0]) for o in owner[nodes]], dtype=float)
    freqs = np.array([specs[o].get("frequency", 0.0) for o in owner[nodes]], dtype=float)

    def displacement(t):
        # Zero frequency means a constant prescribed displacement.
        phase = np.where(freqs > 0, np.sin(2.0 * np.pi * freqs * t), 1.0)
        return amps * phase[:, None]

    return dynamics.Constraints(nodes, displacement)


def cmd_simulate(cfg: dict, args) -> int:
    seed = _seed(cfg, args)
    sc = cfg["simulate"]
    grid = config.build_grid(cfg)
    mat = config.build_material(cfg, grid, seed)
    C = peridyn.assemble_C(mat)
    dt = dynamics.stable_dt(C, mat.density, sc["safety"]) if sc["dt"] == "auto" else sc["dt"]
    traj = dynamics.simulate(C, mat.density, _initial_displacement(cfg, grid), np.asarray(sc["initial"]["velocity"]),
                             np.asarray(sc["body_force"]), dt, sc["steps"], sc["stride"], _constraints(cfg, grid))
    tpath, epath = _out_path(cfg, args, "trajectory"), _out_path(cfg, args, "energy")
    traj.write_csv(tpath, grid)
    traj.write_energy_csv(epath)
    log.warning("%d steps at dt = %.6g; energy drift %.3e; wrote %s and %s",
                sc["steps"], dt, traj.relative_energy_drift(), tpath, epath)
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "compare-L": cmd_compare_L, "assemble": cmd_assemble, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlcalc", description="Discrete nonlocal calculus and peridynamics.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--seed", type=int, metavar="N", help="overrides the config seed")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
        p.add_argument("--suite", metavar="NAME[,NAME...]", help=f"identity groups: {', '.join(calculus.SUITES)}")
        p.add_argument("--quiet", action="store_true")
        p.add_argument("--verbose", action="store_true")
    return parser


def _thread_limit():
    raw = os.environ.get("NLCALC_THREADS")
    if not raw:
        return nullcontext()
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"NLCALC_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigurationError(f"NLCALC_THREADS must be a positive integer, got {raw!r}")
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.ERROR if args.quiet else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(message)s", stream=sys.stderr)
    try:
        cfg = config.load(args.config)
        if args.seed is not None and args.seed < 0:
            raise ConfigurationError("--seed must be non-negative")
        with _thread_limit():
            return COMMANDS[args.command](cfg, args)
    except (ConfigurationError, DimensionError, SingularConfigurationError) as exc:
        log.error("error: %s", exc)
        return EXIT_CONFIG
    except dynamics.SimulationDiverged as exc:
        log.error("error: %s", exc)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
