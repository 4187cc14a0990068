"""Command-line front end: design, simulate, sweep.

Exit codes: 0 success, 1 configuration errors, 2 design (parameter
selection) errors, 3 simulation errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    check_certificate,
    detect_quiescence,
    iet_stats,
    measured_M,
    summarize,
    write_certificate_csv,
)
from .battery import phev_profile, run_sweep, write_profile_csv, write_sweep_csv
from .config import ConfigError, RunConfig, load_config
from .design import TriggerDesignError, dwell_time_bound
from .hybrid import (
    MaxJumpsExceededError,
    NonFiniteStateError,
    simulate,
    write_arc_csv,
)
from .linalg import NotHurwitzError, SingularLyapunovError
from .svgplot import Panel, Series, render_panels

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DESIGN = 2
EXIT_SIM = 3


def _load(args) -> RunConfig:
    rc = load_config(args.config)
    if args.out is not None:
        rc.out_dir = args.out
    return rc


def _design_report(rc: RunConfig):
    cert = rc.certificate()
    params = rc.trigger_params(cert)
    return cert, params


def _print_design(rc: RunConfig, cert, params) -> None:
    np.set_printoptions(precision=6, suppress=False)
    print("certificate:")
    print(f"  alpha [1/s]   : {cert.alpha:.6g}")
    print(f"  gamma         : {cert.gamma:.6g}")
    print(f"  c split       : {cert.c:g}")
    print(f"  P             : {cert.P.tolist()}")
    print("trigger parameters:")
    print(f"  sigma         : {params.sigma:g}")
    print(f"  c1 [1/s]      : {params.c1:g}")
    print(f"  c2            : {params.c2:g}")
    print(f"  c3            : {params.c3:g}")
    print(f"  epsilon       : {params.epsilon:.6g}")
    print(f"  eps_star      : {params.eps_star:.6g}")
    print(f"  d             : {params.d:.6g}")
    print(f"  alpha_bar     : {params.alpha_bar:.6g}")
    print(f"  nu            : {params.nu:.6g}")
    if rc.m_bound is not None:
        tau = dwell_time_bound(rc.m_bound, params.epsilon, cert.gamma)
        print(f"  dwell time for M = {rc.m_bound:g}: {tau:.6g} s")


def cmd_design(args) -> int:
    try:
        rc = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cert, params = _design_report(rc)
    except (TriggerDesignError, NotHurwitzError, SingularLyapunovError,
            ValueError) as exc:
        print(f"design error: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    _print_design(rc, cert, params)
    return EXIT_OK


def _write_iet_csv(stats, events, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "gap"])
        times = [te for te, _ in events]
        for k, gap in enumerate(stats.series):
            writer.writerow([f"{times[k + 1]:.17g}", f"{gap:.17g}"])


def _trajectory_panels(rc: RunConfig, arc, u_signal, stats) -> list[Panel]:
    keep = slice(None, None, max(1, arc.t.size // 4000))  # plot decimation
    ts = arc.t[keep]
    y = (arc.x @ rc.plant.C.T)[keep]
    ybar = arc.ybar[keep]
    xi = (arc.x - arc.xhat)[keep]
    u_vals = u_signal.values_at(ts)
    panels = [
        Panel(title="input", ylabel="u",
              series=[Series(ts, u_vals[:, i], label=f"u_{i + 1}")
                      for i in range(u_vals.shape[1])]),
        Panel(title="output and held output", ylabel="y",
              series=[Series(ts, y[:, i], label=f"y_{i + 1}")
                      for i in range(y.shape[1])]
              + [Series(ts, ybar[:, i], label=f"held y_{i + 1}")
                 for i in range(ybar.shape[1])]),
        Panel(title="estimation error", ylabel="xi",
              series=[Series(ts, xi[:, i], label=f"xi_{i + 1}")
                      for i in range(xi.shape[1])]),
    ]
    times = arc.event_times()
    if stats.count > 0:
        panels.append(Panel(title="inter-event times", ylabel="s",
                            series=[Series(times[1:], stats.series,
                                           kind="scatter")]))
    else:
        panels.append(Panel(title="inter-event times (no events)",
                            series=[]))
    return panels


def cmd_simulate(args) -> int:
    try:
        rc = _load(args)
        if rc.sim is None:
            raise ConfigError("missing [simulation] section")
        if rc.x0 is None or rc.xhat0 is None:
            raise ConfigError("simulation needs x0 and xhat0")
        u_signal = rc.input_signal(args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cert, params = _design_report(rc)
    except (TriggerDesignError, NotHurwitzError, SingularLyapunovError,
            ValueError) as exc:
        print(f"design error: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    try:
        arc = simulate(rc.plant, cert, params, u_signal, rc.x0, rc.xhat0, rc.sim)
    except (MaxJumpsExceededError, NonFiniteStateError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM

    out = Path(rc.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = check_certificate(arc, cert, params)
    stats = iet_stats(arc)
    m_traj = measured_M(arc, rc.plant, u_signal)
    tau = (dwell_time_bound(m_traj, params.epsilon, cert.gamma)
           if m_traj > 0 else float("inf"))

    write_arc_csv(arc, out / "arc.csv")
    write_certificate_csv(report, out / "certificate.csv")
    _write_iet_csv(stats, arc.events, out / "iet.csv")
    text = summarize(arc, report, stats, m_traj, tau)
    quiet = detect_quiescence(arc)
    if quiet:
        text += "quiescent intervals : " + ", ".join(
            f"[{lo:.6g}, {hi:.6g}]" for lo, hi in quiet) + "\n"
    (out / "summary.txt").write_text(text)
    if not args.no_plots:
        render_panels(_trajectory_panels(rc, arc, u_signal, stats),
                      out / "trajectory.svg")
    print(text, end="")
    print(f"artifacts written to {out}")
    return EXIT_OK


def _trend_lines(report) -> list[str]:
    rows = [r for r in report.rows if r.valid]
    lines = []
    eps_groups: dict = {}
    for r in rows:
        eps_groups.setdefault((r.sigma, r.c1, r.c2, r.c3), []).append(r)
    for key, group in eps_groups.items():
        if len(group) < 2:
            continue
        group = sorted(group, key=lambda r: r.epsilon)
        tx = [g.avg_transmissions for g in group]
        errs = [g.max_err for g in group]
        dec = all(a > b for a, b in zip(tx, tx[1:]))
        inc = all(np.all(a <= b) for a, b in zip(errs, errs[1:]))
        eps_list = ", ".join(f"{g.epsilon:g}" for g in group)
        lines.append(f"sigma={key[0]:g} c1={key[1]:g} over epsilon in ({eps_list}): "
                     f"transmissions decreasing: {'yes' if dec else 'NO'}; "
                     f"errors nondecreasing: {'yes' if inc else 'NO'}")
    by_rest: dict = {}
    for r in rows:
        by_rest.setdefault((r.c1, r.c2, r.c3, r.epsilon), []).append(r)
    for key, group in by_rest.items():
        zero = [g for g in group if g.sigma == 0]
        pos = [g for g in group if g.sigma > 0]
        for z in zero:
            for p in pos:
                more = z.avg_transmissions > p.avg_transmissions
                lines.append(
                    f"sigma=0 vs sigma={p.sigma:g} at epsilon={key[3]:g}: "
                    f"{z.avg_transmissions:g} vs {p.avg_transmissions:g} "
                    f"({'more' if more else 'NOT more'} without the filter)")
    return lines


def cmd_sweep(args) -> int:
    try:
        rc = _load(args)
        if rc.sweep is None:
            raise ConfigError("missing [sweep] section")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cert = rc.certificate()
    except (NotHurwitzError, SingularLyapunovError, ValueError) as exc:
        print(f"design error: {exc}", file=sys.stderr)
        return EXIT_DESIGN

    sweep_cfg = rc.sweep
    if args.seed is not None:
        sweep_cfg = type(sweep_cfg)(
            param_grid=sweep_cfg.param_grid, trials=sweep_cfg.trials,
            ic_ranges=sweep_cfg.ic_ranges, horizon=sweep_cfg.horizon,
            error_window=sweep_cfg.error_window, seed=args.seed)
    dt_max = rc.sim.dt_max if rc.sim is not None else 0.05
    event_tol = rc.sim.event_tol if rc.sim is not None else 1e-9
    report = run_sweep(sweep_cfg, rc.plant, cert, dt_max=dt_max,
                       event_tol=event_tol, eta0=rc.sweep_eta0)

    out = Path(rc.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(report, out / "sweep.csv")
    write_profile_csv(phev_profile(sweep_cfg.seed, sweep_cfg.horizon),
                      out / "profile.csv")

    for row in report.rows:
        status = "ok" if row.valid else f"flagged: {row.note}"
        print(f"sigma={row.sigma:g} c1={row.c1:g} epsilon={row.epsilon:g} -> "
              f"tx={row.avg_transmissions:g} [{status}]")
    for line in _trend_lines(report):
        print(line)
    if not any(r.valid for r in report.rows):
        print("all sweep rows failed", file=sys.stderr)
        return EXIT_SIM
    print(f"sweep table written to {out / 'sweep.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etobs",
        description="Event-triggered observer design, simulation and analysis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("design", cmd_design), ("simulate", cmd_simulate),
                     ("sweep", cmd_sweep)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML configuration file")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--no-plots", action="store_true",
                       help="skip SVG generation")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
