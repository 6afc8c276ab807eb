"""Command-line entry point: ``rcp3bp <subcommand> [options]``.

Exit status is 0 on success, 2 when a shot (or every shot of a scan) finds
no collision, and 1 on error.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import diophantine as dio
from .collision_geometry import collision_graph_table
from .dynamics import classify_region, integrate, jacobi_constant
from .export import FORMATS, export
from .kepler import DelaunayState, JupiterCenteredState, delaunay_to_jupiter
from .lab import (
    ExperimentConfig,
    density_scan,
    evolve_segment_R2,
    load_config,
    make_incoming_segment,
    recurrence_scan,
    sample_probes,
    shoot_collision,
)

log = logging.getLogger("rcp3bp")

EXIT_OK, EXIT_ERROR, EXIT_NO_HIT = 0, 1, 2


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key = value file with ExperimentConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--varpi", type=float)
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="rcp3bp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", parents=[common], help="integrate one orbit")
    p.add_argument("--probe", type=int, default=0, help="index of the sampled probe")
    p.add_argument("--delaunay", type=float, nargs=4, metavar=("ELL", "G_ANGLE", "L", "G"),
                   help="explicit initial condition instead of a probe")
    p.add_argument("--t-end", type=float, default=20.0)
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--mollified", action="store_true")

    p = sub.add_parser("collision-set", parents=[common], help="tabulate collision points")
    p.add_argument("--L-range", type=float, nargs=2, default=(0.8, 1.3))
    p.add_argument("--G-range", type=float, nargs=2, default=(0.2, 1.1))
    p.add_argument("--n", type=int, default=11)

    p = sub.add_parser("shoot", parents=[common], help="shoot collision orbits from probes")
    p.add_argument("--n-probes", type=int, default=5)

    p = sub.add_parser("density-scan", parents=[common], help="probe-to-collision distance over mu")
    p.add_argument("--mus", type=float, nargs="+", default=(1e-3, 1e-4, 1e-5))
    p.add_argument("--n-probes", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("recurrence", parents=[common], help="rotation-model recurrence")
    p.add_argument("--n-probes", type=int, default=1)
    p.add_argument("--no-full-flow", action="store_true")

    p = sub.add_parser("dioph", parents=[common], help="gap tables or rotation orbit stats")
    p.add_argument("--K", type=int, nargs="+", default=(2, 3, 4, 5))
    p.add_argument("--depth", type=int, default=25)
    p.add_argument("--omega", type=float, help="report orbit statistics for this rotation")

    p = sub.add_parser("segment-r2", parents=[common], help="evolve a segment through R2")
    p.add_argument("--v0", type=float, nargs=2, default=(0.0, -1.0))
    p.add_argument("--n", type=int, default=21)
    p.add_argument("--model", choices=("full", "linear"), default="full")
    return parser


def _config(args) -> ExperimentConfig:
    overrides = {k: getattr(args, k) for k in ("seed", "mu", "tau", "rho", "delta", "varpi")}
    if args.config:
        return load_config(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def _probe_record(i: int, p: DelaunayState) -> dict:
    return {"probe": i, "probe_ell": p.ell, "probe_g": p.g, "probe_L": p.L, "probe_G": p.G}


def cmd_integrate(args, cfg: ExperimentConfig) -> int:
    if args.delaunay:
        s = DelaunayState(*args.delaunay)
    else:
        s = sample_probes(args.probe + 1, cfg)[args.probe]
    mp = cfg.model
    t_eval = np.linspace(0.0, args.t_end, args.samples)
    tr = integrate(delaunay_to_jupiter(s, cfg.mu), (0.0, args.t_end), mp,
                   rtol=cfg.rtol, atol=cfg.atol, mollified=args.mollified, t_eval=t_eval,
                   events=("collision", "enter_R2", "enter_R3"))
    for ev in tr.events:
        log.info("event %s at t=%.6f", ev.kind, ev.t)
    rows = []
    for t, y in zip(tr.t, tr.y):
        st = JupiterCenteredState.from_array(y)
        rows.append({"t": float(t), "u1": y[0], "u2": y[1], "v1": y[2], "v2": y[3],
                     "jacobi": jacobi_constant(st, cfg.mu),
                     "region": classify_region(st.u, mp).value})
    export(rows, args.out, args.format)
    return EXIT_OK


def cmd_collision_set(args, cfg: ExperimentConfig) -> int:
    Ls = np.linspace(*args.L_range, args.n)
    Gs = np.linspace(*args.G_range, args.n)
    rows = collision_graph_table(Ls, Gs, cfg.mu)
    export(rows, args.out, args.format, columns=("L", "G", "branch", "ell_col", "g_col"))
    return EXIT_OK


def cmd_shoot(args, cfg: ExperimentConfig) -> int:
    rows, hits = [], 0
    for i, probe in enumerate(sample_probes(args.n_probes, cfg)):
        res = shoot_collision(probe, cfg)
        hits += res.hit
        log.info("probe %d: hit=%s min_distance=%.3e %s", i, res.hit, res.min_distance, res.message)
        rows.append({**_probe_record(i, probe), **res.as_record()})
    export(rows, args.out, args.format)
    return EXIT_OK if hits else EXIT_NO_HIT


def cmd_density_scan(args, cfg: ExperimentConfig) -> int:
    probes = sample_probes(args.n_probes, cfg)
    summary = density_scan(list(args.mus), probes, cfg, workers=args.workers)
    rows = [{"mu": r.mu, **_probe_record(r.probe_index, r.probe), "distance": r.distance,
             "hit": r.hit, "sign_change": r.sign_change, "min_distance": r.min_distance}
            for r in summary.records]
    export(rows, args.out, args.format)
    for mu, med in summary.medians.items():
        log.info("mu=%g median distance %.6f", mu, med)
    log.info("fitted exponent %.4g +- %.2g, monotone=%s",
             summary.exponent, summary.exponent_stderr, summary.monotone)
    return EXIT_OK if any(r.hit for r in summary.records) else EXIT_NO_HIT


def cmd_recurrence(args, cfg: ExperimentConfig) -> int:
    rows = []
    for i, probe in enumerate(sample_probes(args.n_probes, cfg)):
        rep = recurrence_scan(probe, cfg, full_flow=not args.no_full_flow)
        rows.append({**_probe_record(i, probe), **rep.as_record()})
    export(rows, args.out, args.format)
    return EXIT_OK


def cmd_dioph(args, cfg: ExperimentConfig) -> int:
    if args.omega is not None:
        st = dio.rotation_orbit_stats(args.omega, cfg.ball_turns, cfg.mu, cfg.tau, cfg.gamma_value)
        rows = [{"omega": st.omega, "q_star": st.q_star, "max_gap": st.max_gap,
                 "min_collision_clearance": st.min_collision_clearance}]
        export(rows, args.out, args.format)
        return EXIT_OK
    rows = []
    for K in args.K:
        gap = dio.largest_gap(K, args.depth)
        lim = dio.largest_gap_limit(K)
        rows.append({"K": K, "depth": args.depth, "left": gap.left, "right": gap.right,
                     "width": gap.width, "limit_width": lim.width})
    export(rows, args.out, args.format, columns=("K", "depth", "left", "right", "width", "limit_width"))
    return EXIT_OK


def cmd_segment_r2(args, cfg: ExperimentConfig) -> int:
    seg = make_incoming_segment(np.array(args.v0), cfg, n=args.n)
    rep = evolve_segment_R2(seg, cfg, model=args.model)
    log.info("dropped %d, spread/mu^(tau/3)=%.4g, time/mu^tau=%.4g, sector coverage %.3f",
             rep.dropped, rep.spread_ratio, rep.time_ratio, rep.sector_coverage)
    rows = [{"t": t, "u1": y[0], "u2": y[1], "v1": y[2], "v2": y[3]} for t, y in rep.arrivals]
    export(rows, args.out, args.format, columns=("t", "u1", "u2", "v1", "v2"))
    return EXIT_OK


COMMANDS = {
    "integrate": cmd_integrate,
    "collision-set": cmd_collision_set,
    "shoot": cmd_shoot,
    "density-scan": cmd_density_scan,
    "recurrence": cmd_recurrence,
    "dioph": cmd_dioph,
    "segment-r2": cmd_segment_r2,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except (ArithmeticError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
