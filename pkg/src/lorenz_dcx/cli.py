"""Command-line entry point: ``lorenz-dcx <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 mismatch in ``reproduce``,
3 numeric error (divergence where a bounded orbit is required).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import ClassifierTolerances, InsufficientData, classify, coexisting_attractors
from .equilibria import classify_equilibrium, fixed_points, residual
from .experiments import dumps, export_plot_data, run_suite, worker_count
from .lorenz_map import apply_symmetry, iterate, iterate_real, write_orbit_csv
from .lyapunov import DivergentOrbit, LyapunovSettings, spectrum
from .types import (
    OrbitConfig,
    ParameterError,
    State3,
    SystemParams,
    format_complex,
    parse_complex,
)

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH, EXIT_NUMERIC = 0, 1, 2, 3

# flags whose values may legitimately start with "-" (e.g. --r -1-5i)
VALUE_FLAGS = {"--a", "--b", "--r", "--dt", "--x0", "--y0", "--z0"}

DEFAULT_INITIAL = ("0.1+0.2i", "0.3+0.4i", "1+2i")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _join_values(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _add_params(p, need_r=True, default_dt="0.0005"):
    p.add_argument("--a", default="10", help="Prandtl-like parameter (complex literal, default 10)")
    p.add_argument("--b", default="8/3", help="geometric parameter (default 8/3)")
    p.add_argument("--r", required=need_r, help="control parameter, e.g. 28 or -1-5i")
    p.add_argument("--dt", default=default_dt, help=f"step size (default {default_dt})")


def _add_orbit(p, steps=2_000_000):
    p.add_argument("--x0", default=DEFAULT_INITIAL[0])
    p.add_argument("--y0", default=DEFAULT_INITIAL[1])
    p.add_argument("--z0", default=DEFAULT_INITIAL[2])
    p.add_argument("--steps", type=int, default=steps)
    p.add_argument("--stride", type=int, default=10, help="record every n-th step")


def _add_output(p, formats=("csv", "json"), default="json"):
    p.add_argument("--out", help="output directory (default out/<subcommand>/<timestamp>)")
    p.add_argument("--format", choices=formats, default=default)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lorenz-dcx", description="Discrete complex Lorenz map toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="iterate the map and export the orbit")
    _add_params(p)
    _add_orbit(p)
    p.add_argument("--real", action="store_true", help="use the real-variable restriction")
    p.add_argument("--plot-data", choices=("complex_plane", "components", "three_d"), action="append",
                   help="also write plot-ready CSVs (repeatable)")
    _add_output(p, default="csv")

    p = sub.add_parser("fixed-points", help="print the three fixed points")
    _add_params(p)
    _add_output(p, formats=("json", "text"), default="text")

    p = sub.add_parser("eigen", help="eigenvalues and stability at every fixed point")
    _add_params(p)
    _add_output(p, formats=("json", "text"), default="json")

    p = sub.add_parser("lyapunov", help="Lyapunov spectrum and finite-time largest exponent")
    _add_params(p)
    _add_orbit(p)
    p.add_argument("--burn-in", type=int, help="transient steps excluded (default 20%% of steps)")
    p.add_argument("--interval", type=int, default=10, help="orthonormalization interval")
    p.add_argument("--window", type=int, help="finite-time window length in steps")
    _add_output(p)

    p = sub.add_parser("classify", help="regime label for one orbit")
    _add_params(p)
    _add_orbit(p)
    _add_output(p)

    p = sub.add_parser("ensemble", help="group an ensemble of initial states by attractor")
    _add_params(p)
    _add_orbit(p)
    p.add_argument("--count", type=int, default=8, help="random members drawn from the unit polydisk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--symmetric", action="store_true", help="include the mirror image of the initial state")
    _add_output(p)

    p = sub.add_parser("reproduce", help="run a scenario suite and compare labels")
    p.add_argument("--suite", required=True, action="append", help="suite file (repeatable)")
    _add_output(p)
    return ap


def _params(ns) -> SystemParams:
    return SystemParams(
        parse_complex(ns.a, "a"), parse_complex(ns.b, "b"), parse_complex(ns.r, "r"), _dt_value(ns.dt)
    )


def _dt_value(text: str) -> float:
    v = parse_complex(text, "dt")
    if v.imag != 0.0:
        raise ParameterError("dt", text, "dt must be real")
    return v.real


def _config(ns, stride=None) -> OrbitConfig:
    s0 = State3(parse_complex(ns.x0, "x0"), parse_complex(ns.y0, "y0"), parse_complex(ns.z0, "z0"))
    return OrbitConfig(s0, ns.steps, ns.stride if stride is None else stride)


def _out_dir(ns) -> Path:
    if ns.out:
        out = Path(ns.out)
    else:
        stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%S")
        out = Path("out") / ns.command / stamp
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc) -> None:
    path.write_text(dumps(doc))


def _fp_text(s: State3) -> str:
    return "(" + ", ".join(format_complex(c) for c in s) + ")"


def cmd_simulate(ns) -> int:
    params, cfg = _params(ns), _config(ns)
    if ns.real:
        orbit = iterate_real(params, cfg)
    else:
        orbit = iterate(params, cfg)
    out = _out_dir(ns)
    doc = {
        "params": params.to_json(),
        "initial": cfg.initial.to_json(),
        "steps": cfg.steps,
        "stride": cfg.record_stride,
        "mode": "real" if ns.real else "complex",
        "terminated_by": orbit.terminated_by,
        "diverged_at": orbit.diverged_at,
        "recorded_samples": len(orbit),
        "final": orbit.final.to_json(),
        "orbit_csv": "orbit.csv",
    }
    write_orbit_csv(orbit, out / "orbit.csv")
    if ns.format == "json":
        _write_json(out / "simulate.json", doc)
    for mode in ns.plot_data or []:
        export_plot_data(orbit, mode, out / "plot_data", stem="orbit")
    print(f"wrote {out / 'orbit.csv'} ({len(orbit)} samples)")
    if orbit.diverged:
        print(f"divergence: orbit left the threshold at step {orbit.diverged_at}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"final state {_fp_text(orbit.final)}")
    return EXIT_OK


def cmd_fixed_points(ns) -> int:
    params = _params(ns)
    fps = fixed_points(params)
    doc = {
        "params": params.to_json(),
        "fixed_points": [{"point": p.to_json(), "residual": residual(params, p)} for p in fps],
    }
    if ns.format == "json":
        print(dumps(doc), end="")
    else:
        for p in fps:
            print(f"{_fp_text(p)}  residual {residual(params, p):.3e}")
    if ns.out:
        _write_json(_out_dir(ns) / "fixed_points.json", doc)
    return EXIT_OK


def cmd_eigen(ns) -> int:
    params = _params(ns)
    reports = [classify_equilibrium(params, p) for p in fixed_points(params)]
    doc = {"params": params.to_json(), "equilibria": [r.to_json() for r in reports]}
    if ns.format == "json":
        print(dumps(doc), end="")
    else:
        for r in reports:
            print(_fp_text(r.point))
            for lam in r.eigenvalues:
                print(f"  lambda = {format_complex(lam)}  |lambda| = {abs(lam):.9g}")
            print(f"  paper_stable={r.paper_stable} modulus_stable={r.modulus_stable} "
                  f"derivative_stable={r.derivative_stable}")
    if ns.out:
        _write_json(_out_dir(ns) / "eigen.json", doc)
    return EXIT_OK


def cmd_lyapunov(ns) -> int:
    params, cfg = _params(ns), _config(ns, stride=1)
    settings = LyapunovSettings(burn_in=ns.burn_in, interval=ns.interval, window=ns.window)
    try:
        est = spectrum(params, cfg, settings)
    except DivergentOrbit as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NUMERIC
    out = _out_dir(ns)
    series = np.array(est.finite_time_series, dtype=float).reshape(-1, 2)
    np.savetxt(out / "finite_time.csv", series, fmt=["%d", "%.17g"], delimiter=",",
               header="k,largest", comments="")
    doc = dict(est.to_json(), params=params.to_json(), initial=cfg.initial.to_json(),
               finite_time_csv="finite_time.csv")
    _write_json(out / "lyapunov.json", doc)
    print(f"largest exponent {est.largest:.6e} per step ({est.verdict}); wrote {out}")
    return EXIT_OK


def cmd_classify(ns) -> int:
    params, cfg = _params(ns), _config(ns)
    orbit = iterate(params, cfg)
    lyap = None
    if not orbit.diverged:
        try:
            lyap = spectrum(params, OrbitConfig(cfg.initial, cfg.steps, 1))
        except DivergentOrbit:
            lyap = None
    label = classify(orbit, lyap)
    out = _out_dir(ns)
    doc = {
        "params": params.to_json(),
        "initial": cfg.initial.to_json(),
        "steps": cfg.steps,
        "label": label.to_json(),
        "evidence": label.evidence,
        "lyapunov": lyap.to_json() if lyap is not None else None,
        "tolerances": ClassifierTolerances().to_json(),
    }
    _write_json(out / "classify.json", doc)
    print(label)
    return EXIT_OK


def cmd_ensemble(ns) -> int:
    params, cfg = _params(ns), _config(ns)
    members = [cfg.initial]
    if ns.symmetric:
        members.append(apply_symmetry(cfg.initial))
    rng = np.random.default_rng(ns.seed)
    for _ in range(ns.count):
        members.append(State3.from_array(np.sqrt(rng.random(3)) * np.exp(2j * np.pi * rng.random(3))))
    groups = coexisting_attractors(params, members, cfg, workers=worker_count())
    doc = {
        "params": params.to_json(),
        "members": [m.to_json() for m in members],
        "groups": [
            {
                "fingerprint": g["fingerprint"].to_json(),
                "members": g["members"],
                "labels": [str(lab) for lab in g["labels"]],
            }
            for g in groups
        ],
    }
    out = _out_dir(ns)
    _write_json(out / "ensemble.json", doc)
    for i, g in enumerate(groups):
        print(f"group {i}: {g['fingerprint'].kind} members={g['members']} label={g['labels'][0]}")
    print(f"{len(groups)} groups")
    return EXIT_OK


def cmd_reproduce(ns) -> int:
    out = _out_dir(ns)
    failed = False
    for suite in ns.suite:
        if not Path(suite).is_file():
            raise UsageError(f"suite file not found: {suite}")
        target = out / Path(suite).stem if len(ns.suite) > 1 else out
        report = run_suite(suite, target)
        s = report.summary
        print(f"{Path(suite).name}: matched {s['matched']}/{s['total']} "
              f"(warnings {s['warnings']}, mismatched {s['mismatched']}, errors {s['errors']}, "
              f"skipped {s['skipped']})")
        failed |= report.failed
    print(f"reports in {out}")
    return EXIT_MISMATCH if failed else EXIT_OK


HANDLERS = {
    "simulate": cmd_simulate,
    "fixed-points": cmd_fixed_points,
    "eigen": cmd_eigen,
    "lyapunov": cmd_lyapunov,
    "classify": cmd_classify,
    "ensemble": cmd_ensemble,
    "reproduce": cmd_reproduce,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = build_parser().parse_args(_join_values(argv))
        return HANDLERS[ns.command](ns)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, InsufficientData, ValueError) as exc:
        print(f"lorenz-dcx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
