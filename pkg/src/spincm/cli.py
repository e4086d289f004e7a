"""Command-line front end.

Exit codes: 0 success, 1 a check ran and failed, 2 usage or config error,
3 runtime failure (for example loss of regularity during integration).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, build_state, config_hash, load_config
from .dynamics.extended import GaugeFixError, embed_extended, flow_extended, gauge_fix, radial_distance
from .dynamics.integrate import IntegrationError, Trajectory, integrate
from .dynamics.io import _fmt_float, atomic_write, csv_header, dumps, flat_row, trajectory_to_dict
from .periodic import RegularityError
from .verify import SUITES, run_suite

log = logging.getLogger("spincm")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
SUITE_NAMES = sorted(SUITES) + ["all"]


def _provenance(cfg: RunConfig | None, seed: int) -> dict:
    return {"config_hash": config_hash(cfg) if cfg is not None else None, "seed": seed, "version": __version__}


def _write_csv(traj: Trajectory, path: Path, prov: dict) -> None:
    buf = io.StringIO()
    buf.write(f"# config_hash={prov['config_hash']} seed={prov['seed']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + csv_header(traj.states[0]))
    for t, st in zip(traj.times, traj.states):
        w.writerow([_fmt_float(float(t))] + [_fmt_float(v) for v in flat_row(st)])
    atomic_write(path, buf.getvalue())


def _emit(traj: Trajectory, out: Path, stem: str, fmt: str, prov: dict, extra: dict | None = None) -> list[Path]:
    traj.meta.update(prov)
    if extra:
        traj.meta.update(extra)
    written = []
    if fmt in ("json", "both"):
        p = out / f"{stem}.json"
        atomic_write(p, dumps(trajectory_to_dict(traj)))
        written.append(p)
    if fmt in ("csv", "both"):
        p = out / f"{stem}.csv"
        _write_csv(traj, p, prov)
        written.append(p)
    return written


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "format", None):
        changes["fmt"] = args.format
    return replace(cfg, **changes) if changes else cfg


def free_flight_velocity(p, d: int) -> np.ndarray:
    """``dq/dt`` for the purely kinetic ``Tr(x^d) = sum p_i^d`` under ``{q_i, p_j} = (delta_ij - 1/N)/2N``."""
    p = np.asarray(p, dtype=float)
    g = d * p ** (d - 1)
    return (g - g.mean()) / (2.0 * p.size)


def _free_flight_residual(traj: Trajectory, d: int) -> float:
    s0 = traj.states[0]
    v = free_flight_velocity(s0.p, d)
    worst = 0.0
    for t, st in zip(traj.times, traj.states):
        worst = max(worst, float(np.abs(st.q - s0.q - t * v).max()), float(np.abs(st.p - s0.p).max()))
    return worst


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    prov = _provenance(cfg, cfg.seed)
    state = build_state(cfg)
    try:
        traj = integrate(state, cfg.site, cfg.degree, cfg.T, cfg.integrator)
    except IntegrationError as exc:
        if exc.partial is not None:
            _emit(exc.partial, out, "trajectory_partial", cfg.fmt, prov, {"failure": str(exc), "failure_time": exc.time})
        log.error("integration failed at t=%s: %s", exc.time, exc)
        return EXIT_RUNTIME
    files = _emit(traj, out, "trajectory", cfg.fmt, prov)
    for f in files:
        print(f)
    if args.assert_free_flight:
        tol = 1e-9 if args.tol is None else args.tol
        resid = _free_flight_residual(traj, cfg.degree)
        print(f"free flight residual {resid:.3e} (tolerance {tol:g})")
        if not resid < tol:
            return EXIT_FAIL
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = args.seed
    cfg = None
    if args.config:
        cfg = load_config(args.config)
        if seed is None:
            seed = cfg.seed
    seed = 0 if seed is None else seed
    report = run_suite(args.suite, seed=seed, tol=args.tol)
    report.update(_provenance(cfg, seed))
    path = Path(args.out) / f"verify_{args.suite}.json"
    atomic_write(path, dumps(report))
    status = "PASS" if report["pass"] else "FAIL"
    print(f"{args.suite}: {status} max_residual={report['max_residual']:.3e} tolerance={report['tolerance']:g} -> {path}")
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_compare(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    tol = 1e-6 if args.tol is None else args.tol
    prov = _provenance(cfg, cfg.seed)
    state = build_state(cfg)
    try:
        traj = integrate(state, cfg.site, cfg.degree, cfg.T, cfg.integrator)
    except IntegrationError as exc:
        log.error("integration failed at t=%s: %s", exc.time, exc)
        return EXIT_RUNTIME
    es = embed_extended(state)
    exact = []
    try:
        for t in traj.times:
            exact.append(gauge_fix(flow_extended(es, cfg.site, cfg.degree, float(t)), state))
    except (GaugeFixError, RegularityError) as exc:
        log.error("projection method left the regular set: %s", exc)
        return EXIT_RUNTIME
    dists = [radial_distance(a, b, relative=True) for a, b in zip(traj.states, exact)]
    sup = max(dists)
    proj = Trajectory(traj.times.copy(), exact, {"method": "projection", "hamiltonian": {"site": cfg.site, "degree": cfg.degree}})
    _emit(traj, out, "ode_trajectory", cfg.fmt, prov)
    _emit(proj, out, "projection_trajectory", cfg.fmt, prov)
    report = {"suite": "compare", "sup_distance": sup, "distances": dists, "tolerance": tol, "pass": sup < tol, **prov}
    atomic_write(out / "compare_report.json", dumps(report))
    print(f"compare: sup distance {sup:.3e} (tolerance {tol:g}) -> {out / 'compare_report.json'}")
    return EXIT_OK if sup < tol else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spincm", description="Spin Calogero-Moser chains: simulation and verification.")
    ap.add_argument("--version", action="version", version=f"spincm {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="TOML run configuration")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--tol", type=float, default=None, help="override the pass tolerance")

    p = sub.add_parser("simulate", help="integrate one Hamiltonian flow")
    common(p)
    p.add_argument("--format", choices=("json", "csv", "both"), default=None)
    p.add_argument("--assert-free-flight", action="store_true", help="check that p stays constant and q moves linearly at the kinetic velocity")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=SUITE_NAMES)
    common(p, config_required=False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="projection method against the integrator")
    common(p)
    p.add_argument("--format", choices=("json", "csv", "both"), default=None)
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RegularityError, GaugeFixError, FloatingPointError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
