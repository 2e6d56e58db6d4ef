"""Command-line front end.

Subcommands: spectrum, topology, optimize, echo, simulate, validate,
gen-comb.  Every tabular output is CSV with the run manifest embedded as
leading '#' comment lines, so a result file documents how it was produced
and identical inputs reproduce identical bytes (set SOURCE_DATE_EPOCH to pin
the manifest timestamp).

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 validation
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__, matching, model, timedomain, topology
from .config import (InputPulse, config_hash, config_to_dict, equidistant_comb,
                     load_config, save_config, symmetric_config)
from .errors import ConfigError, QmemError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4


def _fmt(x) -> str:
    """Shortest round-trip decimal rendering."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


@dataclass(frozen=True)
class RunManifest:
    """Provenance block embedded in every output file.

    The timestamp honours SOURCE_DATE_EPOCH so identical inputs can produce
    byte-identical outputs.
    """

    command: str
    config_hash: str
    overrides: dict
    version: str
    seed: int
    timestamp: str

    def comment_lines(self) -> list[str]:
        return [f"# command = {self.command}",
                f"# version = {self.version}",
                f"# config_hash = {self.config_hash}",
                f"# overrides = {json.dumps(self.overrides, sort_keys=True)}",
                f"# seed = {self.seed}",
                f"# timestamp = {self.timestamp}"]


def _manifest(command: str, cfg, args, seed: int) -> list[str]:
    stamp = os.environ.get("SOURCE_DATE_EPOCH")
    if stamp is None:
        stamp = str(int(time.time()))
    over = {k: v for k, v in (("gamma", args.gamma), ("kappa", args.kappa))
            if v is not None}
    manifest = RunManifest(command=command,
                           config_hash=config_hash(cfg) if cfg else "none",
                           overrides=over, version=__version__, seed=seed,
                           timestamp=stamp)
    return manifest.comment_lines()


def _write_table(path, manifest_lines, header, rows):
    out = sys.stdout if path in (None, "-") else open(path, "w")
    try:
        for line in manifest_lines:
            out.write(line + "\n")
        out.write(",".join(header) + "\n")
        for row in rows:
            out.write(",".join(_fmt(v) for v in row) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


def _load_with_overrides(args):
    cfg = load_config(args.config)
    if args.gamma is not None or args.kappa is not None:
        cfg = cfg.with_updates(kappa=args.kappa, gamma=args.gamma)
    return cfg


def _parse_band(text: str):
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise ConfigError(f"--band expects LO:HI, got {text!r}") from None


def _workers() -> int:
    env = os.environ.get("QMEM_MATCH_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_spectrum(args) -> int:
    cfg = _load_with_overrides(args)
    band = _parse_band(args.band)
    sample = model.sample_spectrum(cfg, band=band, points=args.points)
    dbs_vals, _ = model.dbs(sample.error)
    rows = [(nu, s.real, s.imag, eta, d, e, db)
            for nu, s, eta, d, e, db
            in zip(sample.nu_grid, sample.s_values, sample.efficiency,
                   sample.delay, sample.error, dbs_vals)]
    man = _manifest("spectrum", cfg, args, args.seed)
    man.append(f"# t0 = {_fmt(sample.t0)}")
    _write_table(args.out, man,
                 ["nu", "re_S", "im_S", "eta", "delay", "delta_S2", "dbs"], rows)
    return EXIT_OK


def cmd_topology(args) -> int:
    cfg = _load_with_overrides(args)
    g_grid = np.linspace(args.g_min, args.g_max, args.steps)
    traj = None
    if len(g_grid) > 1:
        traj = topology.line_trajectories(cfg, g_grid)

    pulse = InputPulse(sigma=args.sigma if args.sigma is not None
                       else 0.2 * cfg.n_pairs)

    ref = cfg.positive_side()[0].g
    pos_det = [a.detuning for a in cfg.positive_side()]
    pos_gam = [a.gamma for a in cfg.positive_side()]
    pos_g = [a.g for a in cfg.positive_side()]

    def one(i):
        g = float(g_grid[i])
        c = symmetric_config(pos_det, [x * (g / ref) for x in pos_g],
                             gamma=pos_gam, kappa=cfg.kappa,
                             delta_unit=cfg.delta_unit)
        lines = topology.resonance_lines(c)
        recall = model.t0_matching(c)
        echo = model.echo_intensity(c, recall, pulse, rtol=args.tolerance)
        return lines, echo

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(one, range(len(g_grid))))

    header = (["g"] + [f"E_{k+1}" for k in range(2 * cfg.n_pairs)]
              + [f"width_{k+1}" for k in range(2 * cfg.n_pairs)]
              + ["n_distinct_lines", "I_echo"])
    rows = []
    for i, (lines, echo) in enumerate(results):
        if traj is not None:
            # branch-ordered: column k follows one line across the sweep
            pos = traj.branches[:, i].real
            wid = -2.0 * traj.branches[:, i].imag
        else:
            pos, wid = lines.positions, lines.widths
        rows.append((g_grid[i], *pos, *wid, lines.n_distinct(), echo))
    man = _manifest("topology", cfg, args, args.seed)
    counts = np.array([lines.n_distinct() for lines, _ in results])
    drops = np.nonzero(np.diff(counts) < 0)[0]
    if traj is not None and len(drops):
        i = int(drops[0])
        gstar = topology.transition_point(cfg, (float(g_grid[i]),
                                                float(g_grid[i + 1])))
        man.append(f"# g_star = {_fmt(gstar)}")
        man.append(f"# merge_events = {' '.join(_fmt(g) for g in traj.merge_events)}")
        echoes = np.array([e for _, e in results])
        man.append(f"# echo_max = {_fmt(float(np.max(echoes)))}")
        man.append(f"# echo_argmax_g = {_fmt(float(g_grid[int(np.argmax(echoes))]))}")
    _write_table(args.out, man, header, rows)
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = _load_with_overrides(args)
    band = _parse_band(args.band)
    report = matching.optimize(cfg, M=args.orders, band=band,
                               objective=args.objective,
                               max_evals=args.max_evals)
    if args.out:
        save_config(report.final_config, args.out)
    summary = {
        "objective": report.objective,
        "converged": report.converged,
        "iterations": report.iterations,
        "band_error": report.band_error,
        "t0": model.t0_matching(report.final_config),
        "max_residual": matching.residuals(report.final_config).max_residual,
        "final_config": config_to_dict(report.final_config),
    }
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK if report.converged else EXIT_NUMERIC


def cmd_echo(args) -> int:
    cfg = _load_with_overrides(args)
    pulse = InputPulse(sigma=args.sigma if args.sigma is not None
                       else 0.2 * cfg.n_pairs)
    recall = args.recall_time if args.recall_time is not None \
        else model.t0_matching(cfg)
    value = model.echo_intensity(cfg, recall, pulse, rtol=args.tolerance)
    man = _manifest("echo", cfg, args, args.seed)
    _write_table(args.out, man, ["recall_time", "sigma", "I_echo"],
                 [(recall, pulse.sigma, value)])
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_with_overrides(args)
    pulse = InputPulse(sigma=args.sigma if args.sigma is not None
                       else 0.2 * cfg.n_pairs)
    trace = timedomain.simulate(cfg, pulse, tol=args.tolerance,
                                points=args.points)
    rows = [(t, ai.real, ai.imag, ao.real, ao.imag, abs(ao) ** 2, ac.real, ac.imag)
            for t, ai, ao, ac
            in zip(trace.t_grid, trace.a_in, trace.a_out, trace.a_cavity)]
    man = _manifest("simulate", cfg, args, args.seed)
    man.append(f"# t_center = {_fmt(trace.t_center)}")
    man.append(f"# method = {trace.method}")
    man.append(f"# energy_in = {_fmt(trace.energy_in())}")
    man.append(f"# energy_out = {_fmt(trace.energy_out())}")
    _write_table(args.out, man,
                 ["t", "re_a_in", "im_a_in", "re_a_out", "im_a_out",
                  "abs2_a_out", "re_a_cavity", "im_a_cavity"], rows)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load_with_overrides(args)
    checks = []

    span = float(np.max(np.abs(cfg.detunings))) + 3.0
    lossless = cfg.with_updates(gamma=0.0)
    nu = model.frequency_grid(lossless, (-span, span), 1501)
    s = model.transfer_fn(lossless, nu)
    checks.append(("unimodularity_lossless",
                   float(np.max(np.abs(np.abs(s) - 1.0))), 1e-12))

    eta = model.spectral_efficiency(cfg, nu)
    checks.append(("passivity", float(np.max(eta) - 1.0), 1e-12))

    if cfg.symmetric:
        if cfg.is_lossless():
            checks.append(("conjugate_symmetry",
                           float(np.max(np.abs(model.transfer_fn(cfg, -nu)
                                               - np.conj(s)))), 1e-10))
        target = 4.0 / cfg.kappa + model.t0_matching(lossless)
        checks.append(("delay_identity",
                       abs(model.phase_slope_fd(lossless) - target), 1e-8))

    pulse = InputPulse(sigma=0.2 * cfg.n_pairs)
    trace = timedomain.simulate(cfg, pulse, tol=1e-10)
    aout_fd = timedomain.output_via_tf(cfg, pulse, trace.t_grid)
    rel = (np.linalg.norm(aout_fd - trace.a_out)
           / max(np.linalg.norm(trace.a_out), 1e-30))
    checks.append(("time_frequency_equivalence", float(rel), 1e-6))

    trace0 = timedomain.simulate(lossless, pulse, tol=1e-10)
    if trace0.stored_energy_end() > 1e-8:
        trace0 = timedomain.simulate(lossless, pulse,
                                     t_span=(0.0, trace0.t_grid[-1] * 3.0),
                                     points=6001, tol=1e-10)
    checks.append(("energy_balance",
                   abs(trace0.energy_in() - trace0.energy_out()), 1e-6))

    failed = 0
    for name, value, tol in checks:
        ok = value <= tol
        failed += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} (tol {tol:.0e})")
    return EXIT_OK if failed == 0 else EXIT_VALIDATION


def cmd_gen_comb(args) -> int:
    cfg = equidistant_comb(args.pairs, args.g, gamma=args.comb_gamma,
                           kappa=args.comb_kappa, delta_unit=args.delta)
    if args.out is None:
        json.dump(config_to_dict(cfg), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        save_config(cfg, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmem",
                                description="multi-absorber cavity memory toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        if config_required:
            sp.add_argument("--config", required=True, help="config JSON path")
        sp.add_argument("--gamma", type=float, default=None,
                        help="override every absorber loss")
        sp.add_argument("--kappa", type=float, default=None,
                        help="override the cavity coupling")
        sp.add_argument("--seed", type=int, default=0, help="run seed (recorded)")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--tolerance", type=float, default=1e-6,
                        help="numeric tolerance for quadrature/integration")

    sp = sub.add_parser("spectrum", help="transfer function over a band")
    common(sp)
    sp.add_argument("--band", default="-1.0:1.0", help="LO:HI in comb units")
    sp.add_argument("--points", type=int, default=2001)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("topology", help="line positions and echo vs coupling")
    common(sp)
    sp.add_argument("--g-min", type=float, default=0.05)
    sp.add_argument("--g-max", type=float, default=0.6)
    sp.add_argument("--steps", type=int, default=100)
    sp.add_argument("--sigma", type=float, default=None,
                    help="pulse spectral width (default 0.2 N)")
    sp.set_defaults(func=cmd_topology)

    sp = sub.add_parser("optimize", help="tune comb parameters")
    common(sp)
    sp.add_argument("--band", default="-0.6:0.6")
    sp.add_argument("--objective", default="residuals",
                    choices=["residuals", "band_error", "mixed"])
    sp.add_argument("--orders", type=int, default=None,
                    help="number of matching conditions (default 4N-1)")
    sp.add_argument("--max-evals", type=int, default=20000)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("echo", help="recalled-pulse intensity")
    common(sp)
    sp.add_argument("--sigma", type=float, default=None)
    sp.add_argument("--recall-time", type=float, default=None,
                    help="default: the config's own matching recall time")
    sp.set_defaults(func=cmd_echo)

    sp = sub.add_parser("simulate", help="time-domain trace")
    common(sp)
    sp.add_argument("--sigma", type=float, default=None)
    sp.add_argument("--points", type=int, default=2001)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("validate", help="run the invariant suite on a config")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("gen-comb", help="emit an equidistant comb config")
    common(sp, config_required=False)
    sp.add_argument("--pairs", type=int, required=True, help="number of pairs N")
    sp.add_argument("--g", type=float, required=True)
    sp.add_argument("--comb-gamma", type=float, default=1e-4)
    sp.add_argument("--comb-kappa", type=float, default=100.0)
    sp.add_argument("--delta", type=float, default=1.0)
    sp.set_defaults(func=cmd_gen_comb)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QmemError as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
