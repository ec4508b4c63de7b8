"""Command-line front end.

Each subcommand writes into ``--out``:

* ``*.csv``          trajectories (columns ``t,s,omega,xi,xi_dot,n_exc,fidelity,heat,phase``)
                     or scan tables,
* ``summary.json``   resolved config, results, references and deviations
                     (byte-identical across repeated single-worker runs),
* ``timing.json``    wall-clock time (kept apart so the summary stays reproducible).

Exit codes: 0 success, 1 config error, 2 numeric failure, 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import analytic, kzm, observables
from .ermakov import IntegrationError, adiabatic_init, integrate
from .protocols import DriveSpec, ProtocolError, omega, rescale_to_unit_rate
from .specfun import DomainError
from .spherical import SphericalSystem, SymmetricPhaseViolation, evolve

COLUMNS = ("t", "s", "omega", "xi", "xi_dot", "n_exc", "fidelity", "heat", "phase")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
COMMANDS = ("half-cycle", "full-cycle", "gapped", "universality", "kzm-fit", "spherical", "verify")


class ConfigError(ValueError):
    pass


class VerificationFailed(RuntimeError):
    pass


# --- parsing --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def parse_list(text: str) -> list[float]:
    """``a,b,c`` or a log range ``a..b`` / ``a..b:n`` (default 8 points)."""
    text = str(text).strip()
    try:
        if ".." in text:
            rng, _, n = text.partition(":")
            lo, hi = (float(v) for v in rng.split(".."))
            n = int(n) if n else 8
            if not (lo > 0 and hi > lo and n >= 2):
                raise ValueError
            return np.logspace(math.log10(lo), math.log10(hi), n).tolist()
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse value list {text!r}") from None
    if not vals:
        raise ConfigError("empty value list")
    return vals


def parse_lin_list(text: str) -> list[float]:
    """``a,b,c`` or a linear range ``a..b:n``."""
    text = str(text).strip()
    if ".." not in text:
        return parse_list(text)
    try:
        rng, _, n = text.partition(":")
        lo, hi = (float(v) for v in rng.split(".."))
        n = int(n) if n else 11
    except ValueError:
        raise ConfigError(f"cannot parse range {text!r}") from None
    return np.linspace(lo, hi, n).tolist()


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; keys mirror flag names."""
    cfg = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc.strerror}") from None
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{no}: expected key=value")
        cfg[key.strip().lstrip("-").replace("-", "_")] = val.strip()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--znu", type=float, default=1.0)
    common.add_argument("--delta", type=float, default=1.0)
    common.add_argument("--t0", type=float, default=0.0)
    common.add_argument("--gamma", type=str, default="0")
    common.add_argument("--n-corr", type=int, default=2)
    common.add_argument("--s-end", type=float, default=kzm.S_END)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--window", type=float, default=kzm.WINDOW)
    common.add_argument("--deltas", type=str, default="1e-3..1e-1:8")
    common.add_argument("--s0", type=str, default=None)
    common.add_argument("--alpha", type=float, default=0.5)
    common.add_argument("--L", type=int, default=256)
    common.add_argument("--g", type=float, default=0.1)
    common.add_argument("--max-rows", type=int, default=5000)
    common.add_argument("--out", type=str, default="out")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--config", type=str, default=None)

    parser = _Parser(prog="qcycles", description="Driven harmonic mode across a gapless point.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "half-cycle": "ramp to the gapless point; heat at the end",
        "full-cycle": "ramp through the gapless point; plateau of n_exc and fidelity",
        "gapped": "cycle with a finite minimal gap (single t0 or an --s0 scan)",
        "universality": "plateaus under drive corrections (--gamma list, --n-corr)",
        "kzm-fit": "half-cycle heat versus rate and its power-law exponent",
        "spherical": "self-consistent long-range O(N) chain",
        "verify": "cross-checks of the analytic and numeric machinery",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


_CONFIG_KEYS = {"znu", "delta", "t0", "gamma", "n_corr", "s_end", "tol", "window", "deltas", "s0",
                "alpha", "L", "g", "max_rows", "out", "workers"}


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        unknown = sorted(set(cfg) - _CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        # flags override the file: file values become defaults, then re-parse
        types = {a.dest: a.type for a in sub._actions}
        defaults = {}
        for k, v in cfg.items():
            try:
                defaults[k] = types[k](v) if types.get(k) else v
            except ValueError:
                raise ConfigError(f"bad value for {k}: {v!r}") from None
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    validate(args)
    return args


def validate(args):
    if not (1e-14 < args.tol < 1e-3):
        raise ConfigError(f"tol={args.tol} outside (1e-14, 1e-3)")
    if args.workers < 1:
        raise ConfigError("workers must be >= 1")
    if not (0 < args.window <= 0.5):
        raise ConfigError("window must lie in (0, 0.5]")
    if args.max_rows < 2:
        raise ConfigError("max-rows must be >= 2")
    try:
        if args.command in ("half-cycle", "full-cycle"):
            DriveSpec.power_law(args.znu, args.delta)
        elif args.command == "gapped":
            DriveSpec.gapped(args.znu, args.delta, args.t0)
        elif args.command == "universality":
            for g in parse_list(args.gamma):
                DriveSpec.corrected(args.znu, 1.0, g, args.n_corr)
    except ProtocolError as exc:
        raise ConfigError(str(exc)) from None
    if args.command == "spherical" and not (2 <= args.L <= 4096 and args.alpha > 0 and args.g >= 0):
        raise ConfigError("spherical needs 2 <= L <= 4096, alpha > 0, g >= 0")


def resolved_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items())}


# --- output ---------------------------------------------------------------

def fmt(x: float) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def trajectory_rows(traj, max_rows: int):
    """OutputRow tuples; long trajectories are thinned to ``max_rows`` (``t = 0`` kept)."""
    sc = rescale_to_unit_rate(traj.drive)
    n = len(traj)
    idx = np.arange(n)
    if n > max_rows:
        idx = np.unique(np.concatenate((np.linspace(0, n - 1, max_rows).round().astype(int),
                                        np.flatnonzero(traj.t == 0.0))))
    w = traj.omega
    cols = {q: observables.series(traj, q) for q in ("n_exc", "fidelity", "heat")}
    for i in idx:
        yield (traj.t[i], traj.t[i] / sc.time_scale, w[i], traj.xi[i], traj.xi_dot[i],
               cols["n_exc"][i], cols["fidelity"][i], cols["heat"][i], traj.phase[i])


class Output:
    """Collects files and writes them at the end; nothing is left behind on failure."""

    def __init__(self, directory: str):
        self.dir = Path(directory)
        self.files: dict[str, str] = {}

    def csv(self, name: str, header, rows):
        lines = [",".join(header)]
        lines += [",".join(fmt(v) if not isinstance(v, str) else v for v in r) for r in rows]
        self.files[name] = "\n".join(lines) + "\n"

    def json(self, name: str, obj):
        self.files[name] = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"

    def commit(self):
        self.dir.mkdir(parents=True, exist_ok=True)
        written = []
        try:
            for name, text in self.files.items():
                p = self.dir / name
                p.write_text(text, encoding="utf-8")
                written.append(p)
        except OSError:
            for p in written:
                p.unlink(missing_ok=True)
            raise
        return written


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_jsonable(v) for v in o.tolist()]
    if isinstance(o, (np.floating, float)):
        o = float(o)
        return o if math.isfinite(o) else repr(o)
    if isinstance(o, np.integer):
        return int(o)
    return o


def _rel(value, ref):
    return (value - ref) / ref if ref else None


# --- commands -------------------------------------------------------------

def cmd_half_cycle(args, out: Output) -> dict:
    drive = DriveSpec.power_law(args.znu, args.delta)
    C = kzm.half_cycle_constant(args.znu, args.delta)
    t_i = C / args.delta
    traj = integrate(drive, adiabatic_init(drive, -t_i), 0.0, tol=args.tol, n_samples=2001)
    out.csv("trajectory.csv", COLUMNS, trajectory_rows(traj, args.max_rows))
    q = observables.heat(traj.final, 0.0)
    est = kzm.impulse_heat_estimate(args.znu, args.delta)
    return {"heat_end": q, "impulse_estimate": est, "impulse_ratio": est / q, "C": C, "t_start": -t_i,
            "expected_heat_exponent": analytic.kzm_heat_exponent(args.znu)}


def _cycle_summary(summary, znu):
    ref_n, ref_f = analytic.asymptotic_n_exc(znu), analytic.asymptotic_fidelity(znu)
    return {
        "n_exc": {"mean": summary.n_mean, "amplitude": summary.n_amplitude, "reference": ref_n,
                  "relative_deviation": _rel(summary.n_mean, ref_n)},
        "fidelity": {"mean": summary.f_mean, "amplitude": summary.f_amplitude, "reference": ref_f,
                     "relative_deviation": _rel(summary.f_mean, ref_f)},
        "heat_end": summary.heat_end, "t_start": summary.t_start, "t_end": summary.t_end,
    }


def cmd_full_cycle(args, out: Output) -> dict:
    drive = DriveSpec.power_law(args.znu, args.delta)
    summary, traj = kzm.run_full_cycle(drive, args.s_end, args.tol, args.window, return_trajectory=True)
    out.csv("trajectory.csv", COLUMNS, trajectory_rows(traj, args.max_rows))
    return _cycle_summary(summary, args.znu)


def _scan_table(out: Output, scan: kzm.ScanResult):
    rows = list(scan.rows())
    header = list(rows[0])
    out.csv("scan.csv", header, [[r[h] for h in header] for r in rows])


def cmd_gapped(args, out: Output) -> dict:
    if args.s0 is not None:
        scan = kzm.gapped_cycle_scan(args.znu, parse_lin_list(args.s0), args.s_end, args.tol, args.window, args.workers)
        _scan_table(out, scan)
        heat = scan.means["heat"]
        return {"scan": scan.to_dict(), "heat_ratio_last_first": float(heat[-1] / heat[0]) if heat[0] else None,
                "heat_monotone_decreasing": bool(np.all(np.diff(heat) < 0))}
    drive = DriveSpec.gapped(args.znu, args.delta, args.t0)
    summary, traj = kzm.run_full_cycle(drive, args.s_end, args.tol, args.window, return_trajectory=True)
    out.csv("trajectory.csv", COLUMNS, trajectory_rows(traj, args.max_rows))
    res = _cycle_summary(summary, args.znu)
    res["s0"] = rescale_to_unit_rate(drive).drive.t0
    return res


def cmd_universality(args, out: Output) -> dict:
    scan = kzm.universality_scan(args.znu, parse_list(args.gamma), args.n_corr, args.s_end, args.tol,
                                 args.window, args.workers)
    _scan_table(out, scan)
    ref = analytic.asymptotic_n_exc(args.znu)
    return {"scan": scan.to_dict(), "relative_spread": scan.metadata["relative_spread"],
            "max_relative_deviation": float(np.max(np.abs(scan.means["n_exc"] / ref - 1.0)))}


def cmd_kzm_fit(args, out: Output) -> dict:
    deltas = parse_list(args.deltas)
    fit = kzm.half_cycle_heat_scan(args.znu, deltas, args.tol, workers=args.workers)
    est = [kzm.impulse_heat_estimate(args.znu, d) for d in deltas]
    out.csv("scan.csv", ("delta", "heat_end", "impulse_estimate"), zip(fit.x, fit.y, est))
    imp = kzm.fit_power_law(deltas, est)
    expected = analytic.kzm_heat_exponent(args.znu)
    return {"fit": fit.to_dict(), "expected_exponent": expected,
            "exponent_deviation": fit.exponent - expected, "impulse_exponent": imp.exponent}


def cmd_spherical(args, out: Output) -> dict:
    drive = DriveSpec.power_law(args.znu, args.delta)
    system = SphericalSystem(args.L, args.alpha, args.g, drive)
    sc = rescale_to_unit_rate(drive)
    t_end = args.s_end * sc.time_scale
    t_w = (1.0 - args.window) * t_end
    grid = np.concatenate((np.linspace(-t_end, t_w, 1001),
                           observables.oscillation_grid(lambda t: omega(drive, t), t_w, t_end)))
    run = evolve(system, -t_end, t_end, tol=args.tol, samples=grid)
    n = run.n_exc()[-1]
    q = 2.0 * np.pi * np.arange(args.L) / args.L
    out.csv("modes.csv", ("q", "energy", "xi", "xi_dot", "n_exc"),
            zip(q, system.energies, run.xi[-1], run.xi_dot[-1], n))
    dev = run.nonzero_mode_deviation()
    idx = np.unique(np.linspace(0, run.t.size - 1, min(run.t.size, args.max_rows)).round().astype(int))
    out.csv("mu_eff.csv", ("t", "mu_eff", "nonzero_mode_deviation"), zip(run.t[idx], run.mu_eff[idx], dev[idx]))
    pl = run.zero_mode_plateau("n_exc", args.window)
    ref = analytic.asymptotic_n_exc(args.znu)
    return {"mu_c": system.mu_c, "zero_mode_n_exc": {"mean": pl.mean, "amplitude": pl.amplitude, "reference": ref,
                                                     "relative_deviation": _rel(pl.mean, ref)},
            "max_abs_nonzero_mode_deviation": float(np.max(np.abs(dev))), "t_end": t_end}


def run_checks(tol: float = 1e-10) -> list[tuple[str, bool, float, float]]:
    """``(name, passed, measured, threshold)`` for each cross-check."""
    from .ermakov import WidthState, integrate_classical_pair
    from .specfun import airy_gen, airy_wronskian

    checks = []
    for znu in (0.5, 1.0, 2.0):
        p = analytic.p_of(znu)
        d = DriveSpec.power_law(znu)
        x0, v0 = analytic.xi_glued(znu, -20.0)
        ts = np.linspace(-20.0, 20.0, 161)
        tr = integrate(d, WidthState(-20.0, float(x0), float(v0)), 20.0, tol=tol, samples=ts)
        xa, _ = analytic.xi_glued(znu, tr.t)
        checks.append((f"analytic_vs_numeric_znu{znu:g}", float(np.max(np.abs(tr.xi / xa - 1))), 1e-6))
        s0 = tr.at(0.0)
        checks.append((f"xi2_at_zero_znu{znu:g}", abs(s0.xi ** 2 - analytic.xi_at_zero(p)), 1e-5))
        checks.append((f"xixidot_at_zero_znu{znu:g}", abs(2 * s0.xi * s0.xi_dot - analytic.xixidot_at_zero(p, "-")), 1e-5))
        w = tr.omega
        m = w > 0
        n = observables.series(tr, "n_exc")[m]
        f = observables.series(tr, "fidelity")[m]
        checks.append((f"duality_znu{znu:g}", float(np.max(np.abs((1 / f ** 2 - n - 1) / (1 + n)))), 1e-12))
        cp = integrate_classical_pair(d, (1.0, 0.0), (0.0, 1.0), -10.0, 10.0, tol=tol)
        checks.append((f"pair_wronskian_znu{znu:g}", float(np.max(np.abs(cp.wronskian - 1.0))), 1e-8))
        worst = 0.0
        for t in (0.1, 1.0, 5.0, 30.0):
            r = airy_gen(p, t)
            worst = max(worst, abs((r.ai * r.bi_deriv - r.ai_deriv * r.bi) / airy_wronskian(p) - 1))
        checks.append((f"airy_wronskian_p{p:.4g}", worst, 1e-8))
    return [(name, val <= thr, val, thr) for name, val, thr in checks]


def cmd_verify(args, out: Output) -> dict:
    checks = run_checks(args.tol)
    out.csv("verify.csv", ("check", "passed", "measured", "threshold"),
            [(n, "pass" if ok else "fail", v, t) for n, ok, v, t in checks])
    for name, ok, val, thr in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name} measured={val:.3e} threshold={thr:.0e}")
    res = {"checks": {n: {"passed": ok, "measured": v, "threshold": t} for n, ok, v, t in checks},
           "all_passed": all(ok for _, ok, _, _ in checks)}
    return res


HANDLERS = {
    "half-cycle": cmd_half_cycle, "full-cycle": cmd_full_cycle, "gapped": cmd_gapped,
    "universality": cmd_universality, "kzm-fit": cmd_kzm_fit, "spherical": cmd_spherical,
    "verify": cmd_verify,
}


def run(args) -> int:
    out = Output(args.out)
    t_wall = time.perf_counter()
    results = HANDLERS[args.command](args, out)
    out.json("summary.json", {"command": args.command, "config": resolved_config(args), "results": results})
    out.json("timing.json", {"wall_clock_seconds": time.perf_counter() - t_wall})
    out.commit()
    if args.command == "verify" and not results["all_passed"]:
        return EXIT_VERIFY
    return EXIT_OK


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": " ".join(str(message).split())}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    try:
        return run(args)
    except (ConfigError, ProtocolError, DomainError) as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    except (IntegrationError, kzm.ScanError, SymmetricPhaseViolation, observables.InsufficientDataError,
            FloatingPointError) as exc:
        return _fail("numeric", str(exc), EXIT_NUMERIC)


if __name__ == "__main__":
    sys.exit(main())
