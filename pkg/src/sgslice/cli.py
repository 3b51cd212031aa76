"""Command line entry point.

    sgslice <simulate|benchmark|convergence-dt|convergence-n|solve-ot> [--config PATH] [--out DIR] [-v]

On failure a single JSON line {"error": category, "message": ...} goes to
stderr and the exit status identifies the category.
"""

import argparse
import json
import logging
import os
import sys
import time

import numpy as np
import yaml

from . import __version__
from .benchmark import single_seed_solution
from .config import MODES, config_from_dict, dump_config, load_config
from .errors import OutputError, SGSliceError
from .experiment import (
    Numerics,
    SECONDS_PER_DAY,
    benchmark_setup,
    particle_study,
    physical_setup,
    square_grid_setup,
    timestep_study,
)
from .dynamics import run_simulation
from .initial import InitConfig
from .output import write_diagnostics, write_records, write_report, write_snapshot
from .solver import solve

log = logging.getLogger("sgslice")

EXIT_CODES = {
    "config": 2,
    "singular-seed": 3,
    "degenerate-seeds": 3,
    "non-convergence": 4,
    "initialization": 4,
    "solver-state": 4,
    "blow-up": 5,
    "integrity": 6,
    "metric": 7,
    "study": 8,
    "io": 9,
}


def _numerics(cfg):
    n = cfg.numerics
    return Numerics(n.dt, n.days, n.newton_tol, n.max_iter, n.quad_order, n.copies, n.snapshot_every)


def _init(cfg):
    i = cfg.init
    return InitConfig(i.Bu, i.a, i.M1, i.M2, i.surface_exner, i.masses, i.refine)


def _physical(cfg):
    s = cfg.scales
    return physical_setup(cfg.params, _init(cfg), _numerics(cfg), s.L0, s.H1, s.H2)


def _square(cfg, n):
    s = cfg.scales
    return square_grid_setup(n, cfg.params, _numerics(cfg), _init(cfg), s.L0, s.H1, s.H2)


def _snapshot_writer(path):
    if os.path.exists(path):
        os.remove(path)

    def write(state, rhs):
        write_snapshot(state, rhs, path, append=True)

    return write


def run_simulate(cfg, out):
    setup = _physical(cfg)
    n = cfg.numerics
    steps = setup.steps_for(n.dt, n.days)
    every = n.snapshot_every or max(1, int(round(SECONDS_PER_DAY / n.dt / 4)))
    res = run_simulation(setup.state, setup.model, setup.nondim_dt(n.dt), steps, every,
                         _snapshot_writer(os.path.join(out, "snapshots.csv")), verbose=log.isEnabledFor(logging.DEBUG))
    write_diagnostics(res.diagnostics, os.path.join(out, "diagnostics.csv"))
    return {"particles": int(setup.state.n), "steps": steps, "Pi0": setup.model.Pi0,
            "max_abs_energy_rel_err": max(abs(r.energy_rel_err) for r in res.diagnostics)}


def run_benchmark(cfg, out):
    b = cfg.benchmark
    seeds = np.asarray(b.seeds, dtype=float)
    setup = benchmark_setup(seeds, b.masses, _numerics(cfg))
    every = cfg.numerics.snapshot_every or max(1, b.steps // 4)
    res = run_simulation(setup.state, setup.model, b.dt, b.steps, every,
                         _snapshot_writer(os.path.join(out, "snapshots.csv")), verbose=log.isEnabledFor(logging.DEBUG))
    write_diagnostics(res.diagnostics, os.path.join(out, "diagnostics.csv"))
    summary = {"steps": b.steps, "t": res.state.t}
    if len(seeds) == 1:
        exact = single_seed_solution(seeds[0, 1])
        z_exact = seeds[0, 0] + exact.E_I * res.state.t
        summary.update({"branch": exact.branch, "w_star": exact.w_star, "E_I": exact.E_I,
                        "w_numeric": float(res.rhs.weights[0]), "E_I_numeric": float(res.rhs.E_I[0]),
                        "z1_final": float(res.state.seeds[0, 0]), "z1_exact": float(z_exact),
                        "z1_error": float(abs(res.state.seeds[0, 0] - z_exact))})
    return summary


def run_convergence_dt(cfg, out):
    c = cfg.convergence
    setup = _square(cfg, c.n)
    rep = timestep_study(setup, [float(d) for d in c.dts], float(c.dt_ref), cfg.numerics.days, c.normalizer)
    write_report(rep, os.path.join(out, "report.yaml"))
    return {"slope": rep.slope, "residual": rep.residual, "note": rep.note}


def run_convergence_n(cfg, out):
    c = cfg.convergence
    rep = particle_study(lambda n: _square(cfg, n), [int(s) for s in c.sizes], int(c.n_ref),
                         float(c.dt), cfg.numerics.days, c.epsilon)
    write_report(rep, os.path.join(out, "report.yaml"))
    return {"slope": rep.slope, "residual": rep.residual, "bias_floor": rep.extra["bias_floor"]}


def run_solve_ot(cfg, out):
    setup = _physical(cfg)
    st = setup.state
    dual = solve(st.seeds, st.masses, setup.model.ctx, w0=st.weights, tol=cfg.numerics.newton_tol,
                 max_iter=cfg.numerics.max_iter, verbose=log.isEnabledFor(logging.DEBUG))
    C = dual.integrals.centroids()
    records = [{"index": i, "z1": float(st.seeds[i, 0]), "z2": float(st.seeds[i, 1]), "m": float(st.masses[i]),
                "w": float(dual.weights[i]), "C1": float(C[i, 0]), "C2": float(C[i, 1])} for i in range(st.n)]
    write_records(records, os.path.join(out, "cells.yaml"))
    write_records(dual.trace, os.path.join(out, "newton_trace.yaml"))
    return {"particles": int(st.n), "iterations": dual.iterations, "residual": dual.residual_norm,
            "Pi0": setup.model.Pi0}


RUNNERS = {
    "simulate": run_simulate,
    "benchmark": run_benchmark,
    "convergence-dt": run_convergence_dt,
    "convergence-n": run_convergence_n,
    "solve-ot": run_solve_ot,
}


def build_parser():
    p = argparse.ArgumentParser(prog="sgslice", description="Compressible semi-geostrophic slice particle model.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", help="YAML configuration file (defaults used when omitted)")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("-v", "--verbose", action="store_true", help="log solver traces")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.verbose:
        logging.getLogger("sgslice.solver").setLevel(logging.INFO)
    try:
        cfg = load_config(args.config) if args.config else config_from_dict({})
        if args.config and cfg.mode != args.command and _mode_given(args.config):
            log.warning("config mode %r overridden by subcommand %r", cfg.mode, args.command)
        cfg.mode = args.command
        if cfg.mode == "benchmark" and cfg.thermo != "benchmark":
            cfg.thermo = "benchmark"
        out = args.out or cfg.output
        cfg.output = out
        try:
            os.makedirs(out, exist_ok=True)
        except OSError as exc:
            raise OutputError(f"cannot create {out}: {exc}") from exc
        dump_config(cfg, os.path.join(out, "config.resolved.yaml"))
        t0 = time.time()
        summary = RUNNERS[cfg.mode](cfg, out)
        write_records([summary], os.path.join(out, "summary.yaml"))
        print(json.dumps({"status": "ok", "mode": cfg.mode, "seconds": round(time.time() - t0, 3), **summary},
                         default=float))
        return 0
    except SGSliceError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)


def _mode_given(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        return isinstance(data, dict) and "mode" in data
    except (OSError, yaml.YAMLError):
        return False


if __name__ == "__main__":
    sys.exit(main())
