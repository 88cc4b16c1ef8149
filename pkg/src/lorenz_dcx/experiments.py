"""Scenario suites: replay published table rows and score the computed labels.

A suite file is a sequence of blank-line separated stanzas (see
:func:`lorenz_dcx.types.parse_stanzas`). Recognised keys:

``id``, ``label``, ``a``, ``b``, ``r``, ``dt``, ``x0``, ``y0``, ``z0``,
``steps``, ``stride``
    identity, parameters, initial state and run length.
``expected``
    regime label, e.g. ``chaotic`` or ``converges_to(4.899,4.899,9)``.
``expected_groups``
    number of coexisting attractors expected from an ensemble run.
``mode``
    ``complex`` (default) or ``real`` for the real-variable restriction.
``ensemble``, ``ensemble_seed``, ``symmetric``
    extra initial states drawn from the unit polydisk; ``symmetric=true``
    also adds the mirror image of the scenario's own initial state.
``target_tol``
    tolerance on ``converges_to`` targets (default ``1e-2``).
``reference_only``
    literature-only rows, stored but never run or scored.
``basin_sensitive``
    the initial state was chosen here; a mismatch is only a warning.
``reported_fixed_point``
    a published nonzero equilibrium, checked against the closed formula.
``reported_remark``
    ``all_attracting`` or ``origin_attracting``; checked against the
    computed stability verdicts.
``paper_note``
    free text carried into the report.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import (
    ClassifierTolerances,
    RegimeLabel,
    classify,
    coexisting_attractors,
    parse_label,
    short_complex,
)
from .equilibria import (
    DegenerateBound,
    classify_equilibrium,
    convergence_condition,
    fixed_points,
)
from .lorenz_map import Orbit, apply_symmetry, iterate, iterate_real, write_orbit_csv
from .lyapunov import DivergentOrbit, LyapunovSettings, spectrum
from .types import (
    OrbitConfig,
    ParameterError,
    State3,
    SystemParams,
    complex_to_json,
    params_from_mapping,
    parse_complex,
    parse_stanzas,
)

__all__ = [
    "Scenario",
    "ScenarioResult",
    "ReproductionReport",
    "load_suite",
    "run_scenario",
    "run_suite",
    "export_plot_data",
    "ensemble_states",
    "labels_match",
    "worker_count",
]

DEFAULT_STEPS = 2_000_000
DEFAULT_STRIDE = 10
DEFAULT_TARGET_TOL = 1e-2
EXPORT_MAX_ROWS = 10_000
_TRUE = {"1", "true", "yes", "on"}


@dataclass(frozen=True)
class Scenario:
    id: str
    params: SystemParams | None
    initial: State3 | None
    steps: int
    expected: str | None = None
    paper_note: str = ""
    reference_only: bool = False
    basin_sensitive: bool = False
    label: str = ""
    stride: int = DEFAULT_STRIDE
    mode: str = "complex"
    expected_groups: int | None = None
    ensemble: int = 0
    ensemble_seed: int = 0
    symmetric: bool = False
    target_tol: float = DEFAULT_TARGET_TOL
    reported_fixed_point: State3 | None = None
    reported_remark: str | None = None

    @property
    def config(self) -> OrbitConfig:
        return OrbitConfig(self.initial, self.steps, self.stride)


def _flag(values, key) -> bool:
    return values.get(key, "false").strip().lower() in _TRUE


def _state(values, prefix="") -> State3 | None:
    keys = [f"{prefix}x0", f"{prefix}y0", f"{prefix}z0"]
    if not all(k in values for k in keys):
        return None
    return State3(*(parse_complex(values[k], k) for k in keys))


def scenario_from_stanza(values: dict[str, str]) -> Scenario:
    if "id" not in values:
        raise ParameterError("id", str(values), "missing key")
    ref = _flag(values, "reference_only")
    params = None if ref and "a" not in values else params_from_mapping(values)
    initial = _state(values)
    if initial is None and not ref:
        raise ParameterError("x0", values["id"], "missing initial state")
    rfp = None
    if "reported_fixed_point" in values:
        parts = [p.strip() for p in values["reported_fixed_point"].split(",")]
        rfp = State3(*(parse_complex(p, "reported_fixed_point") for p in parts))
    expected = values.get("expected")
    if expected is not None:
        parse_label(expected)
    mode = values.get("mode", "complex")
    if mode not in ("complex", "real"):
        raise ParameterError("mode", mode, "expected complex or real")
    return Scenario(
        id=values["id"],
        params=params,
        initial=initial,
        steps=int(float(values.get("steps", DEFAULT_STEPS))),
        expected=expected,
        paper_note=values.get("paper_note", ""),
        reference_only=ref,
        basin_sensitive=_flag(values, "basin_sensitive"),
        label=values.get("label", ""),
        stride=int(values.get("stride", DEFAULT_STRIDE)),
        mode=mode,
        expected_groups=int(values["expected_groups"]) if "expected_groups" in values else None,
        ensemble=int(values.get("ensemble", 0)),
        ensemble_seed=int(values.get("ensemble_seed", 0)),
        symmetric=_flag(values, "symmetric"),
        target_tol=float(values.get("target_tol", DEFAULT_TARGET_TOL)),
        reported_fixed_point=rfp,
        reported_remark=values.get("reported_remark"),
    )


def load_suite(path: str | Path) -> list[Scenario]:
    """Parse a suite file; ids must be unique."""
    text = Path(path).read_text()
    scenarios = [scenario_from_stanza(s) for s in parse_stanzas(text)]
    seen: set[str] = set()
    for sc in scenarios:
        if sc.id in seen:
            raise ParameterError("id", sc.id, "duplicate scenario id")
        seen.add(sc.id)
    return scenarios


def ensemble_states(sc: Scenario) -> list[State3]:
    """The scenario's own state, optionally its mirror image, then seeded draws from the unit polydisk."""
    states = [sc.initial]
    if sc.symmetric:
        states.append(apply_symmetry(sc.initial))
    rng = np.random.default_rng(sc.ensemble_seed)
    for _ in range(sc.ensemble):
        rad = np.sqrt(rng.random(3))
        ang = 2 * np.pi * rng.random(3)
        states.append(State3.from_array(rad * np.exp(1j * ang)))
    return states


@dataclass
class ScenarioResult:
    id: str
    status: str  # match | mismatch | warning | skipped | error
    expected: str | None
    computed: str | None
    evidence: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    reference_only: bool = False

    @property
    def match(self) -> bool:
        return self.status == "match"

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "status": self.status,
            "match": self.match,
            "expected": self.expected,
            "computed": self.computed,
            "reference_only": self.reference_only,
            "warnings": self.warnings,
            "evidence": self.evidence,
        }


@dataclass
class ReproductionReport:
    suite: str
    results: list[ScenarioResult]

    @property
    def summary(self) -> dict:
        scored = [r for r in self.results if not r.reference_only]
        return {
            "matched": sum(r.status == "match" for r in scored),
            "total": len(scored),
            "skipped": sum(r.reference_only for r in self.results),
            "warnings": sum(r.status == "warning" for r in scored),
            "mismatched": sum(r.status == "mismatch" for r in scored),
            "errors": sum(r.status == "error" for r in scored),
        }

    @property
    def failed(self) -> bool:
        s = self.summary
        return s["mismatched"] + s["errors"] > 0

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "summary": self.summary,
            "scenarios": [r.to_json() for r in self.results],
        }

    def summary_text(self, timestamp: str | None = None) -> str:
        ts = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        lines = [f"# generated {ts}", f"suite: {self.suite}"]
        width = max([len(r.id) for r in self.results] + [8])
        lines.append(f"{'id'.ljust(width)}  {'status':8}  {'expected':40}  computed")
        for r in self.results:
            lines.append(
                f"{r.id.ljust(width)}  {r.status:8}  {str(r.expected or '-'):40}  {r.computed or '-'}"
            )
            for w in r.warnings:
                lines.append(f"{''.ljust(width)}  ! {w}")
        s = self.summary
        lines.append(
            f"matched {s['matched']}/{s['total']} (warnings {s['warnings']}, "
            f"mismatched {s['mismatched']}, errors {s['errors']}, skipped {s['skipped']})"
        )
        return "\n".join(lines) + "\n"


def _sym(s: State3) -> State3:
    return apply_symmetry(s)


def _dist(s1: State3, s2: State3) -> float:
    return max(abs(p - q) for p, q in zip(s1, s2))


def labels_match(expected: RegimeLabel, computed: RegimeLabel, target_tol: float) -> tuple[bool, str]:
    """Coarse-kind comparison plus target check; returns (ok, reason)."""
    ek, ck = expected.kind, computed.kind
    kind_ok = ek == ck
    reason = ""
    if not kind_ok and ek == "converges_to" and ck == "transient_chaos" and computed.target is not None:
        kind_ok, reason = True, "transient phase before settling on the sink"
    if not kind_ok and ek == "periodic" and expected.period is None and ck == "quasi_periodic":
        kind_ok, reason = True, "period exceeds P_max"
    if not kind_ok:
        return False, f"kind {ck} != {ek}"
    if expected.target is not None:
        if computed.target is None:
            return False, "no terminal state to compare"
        d = _dist(expected.target, computed.target)
        if d > target_tol:
            return False, f"target off by {d:.4g} (tol {target_tol:g})"
    if expected.period is not None and computed.period != expected.period:
        return False, f"period {computed.period} != {expected.period}"
    return True, reason


def _closest_approach(orbit: Orbit, target: State3) -> dict:
    d = np.abs(orbit.samples - target.to_array()).max(axis=1)
    i = int(np.argmin(d))
    return {"step": int(orbit.ks[i]), "distance": float(d[i])}


def _equilibria_evidence(params: SystemParams) -> tuple[list[dict], list[str]]:
    out, warnings = [], []
    for p in fixed_points(params):
        try:
            rep = classify_equilibrium(params, p)
        except Exception as exc:  # noqa: BLE001 - recorded, never fatal
            warnings.append(f"equilibrium {p}: {exc}")
            continue
        out.append(
            {
                "point": p.to_json(),
                "paper_stable": rep.paper_stable,
                "modulus_stable": rep.modulus_stable,
                "derivative_stable": rep.derivative_stable,
            }
        )
    return out, warnings


def _check_reported(sc: Scenario, eq: list[dict], computed: RegimeLabel | None) -> list[str]:
    warnings = []
    params = sc.params
    if sc.reported_fixed_point is not None:
        fps = fixed_points(params)
        d = min(_dist(sc.reported_fixed_point, p) for p in fps)
        if d > 1e-4:
            best = min(fps[1:], key=lambda p: _dist(sc.reported_fixed_point, p))
            shown = ", ".join(short_complex(c) for c in best)
            warnings.append(
                f"reported fixed point {sc.reported_fixed_point} is not an equilibrium of the map; "
                f"the formula gives ±({shown}) (distance {d:.4g})"
            )
    if sc.reported_remark:
        attracting = [e["derivative_stable"] for e in eq]
        if sc.reported_remark == "all_attracting":
            if not all(attracting):
                warnings.append(
                    "reported remark says all three fixed points attract; computed derivative "
                    f"stability is {attracting}"
                )
            if computed is not None and computed.kind in ("divergent", "chaotic", "quasi_periodic"):
                warnings.append(
                    f"reported remark says all fixed points attract but the orbit is {computed.kind}"
                )
        elif sc.reported_remark == "origin_attracting":
            if eq and not eq[0]["derivative_stable"]:
                warnings.append("reported remark says the origin attracts; computed derivative says it does not")
    return warnings


def run_scenario(
    sc: Scenario,
    out_dir: str | Path | None = None,
    tol: ClassifierTolerances | None = None,
    settings: LyapunovSettings | None = None,
) -> ScenarioResult:
    """Run one scenario end to end; failures are recorded, never raised."""
    if sc.reference_only:
        return ScenarioResult(sc.id, "skipped", sc.expected, None,
                              {"paper_note": sc.paper_note}, reference_only=True)
    tol = tol or ClassifierTolerances()
    settings = settings or LyapunovSettings()
    try:
        return _run_scenario(sc, out_dir, tol, settings)
    except Exception as exc:  # noqa: BLE001 - a scenario failure never aborts a suite
        return ScenarioResult(sc.id, "error", sc.expected, None,
                              {"error": f"{type(exc).__name__}: {exc}"})


def _run_scenario(sc, out_dir, tol, settings) -> ScenarioResult:
    params, cfg = sc.params, sc.config
    ev: dict = {
        "params": params.to_json(),
        "initial": sc.initial.to_json(),
        "steps": sc.steps,
        "mode": sc.mode,
        "paper_note": sc.paper_note,
        "basin_sensitive": sc.basin_sensitive,
    }
    eq, warnings = _equilibria_evidence(params)
    ev["equilibria"] = eq
    try:
        mod_r, bound, holds = convergence_condition(params)
        ev["convergence_condition"] = {"abs_r": mod_r, "bound": bound, "holds": holds}
    except DegenerateBound as exc:
        ev["convergence_condition"] = {"error": str(exc)}

    runner = iterate_real if sc.mode == "real" else iterate
    orbit = runner(params, cfg)
    lyap = None
    if not orbit.diverged:
        try:
            lyap = spectrum(params, OrbitConfig(sc.initial, sc.steps, 1), settings)
            ev["lyapunov"] = lyap.to_json()
            ev["finite_time_series"] = [[k, v] for k, v in lyap.finite_time_series]
        except DivergentOrbit as exc:
            ev["lyapunov"] = {"error": str(exc)}
    label = classify(orbit, lyap, tol)
    ev["label"] = label.to_json()
    ev["label_evidence"] = label.evidence
    ev["final_state"] = orbit.final.to_json()

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_orbit_csv(_decimate(orbit, EXPORT_MAX_ROWS), out / f"{sc.id}.csv")
        ev["orbit_csv"] = f"{sc.id}.csv"

    reasons: list[str] = []
    ok = True
    if sc.expected is not None:
        exp = parse_label(sc.expected)
        good, why = labels_match(exp, label, sc.target_tol)
        if why:
            reasons.append(why)
        ok &= good
        if exp.target is not None:
            ev["closest_approach_to_expected"] = _closest_approach(orbit, exp.target)
            if not good and label.target is not None and _dist(_sym(exp.target), label.target) <= sc.target_tol:
                reasons.append("reached the mirror-image sink")
    if sc.expected_groups is not None:
        states = ensemble_states(sc)
        groups = coexisting_attractors(params, states, OrbitConfig(sc.initial, sc.steps, sc.stride), tol, settings)
        ev["ensemble"] = {
            "size": len(states),
            "groups": [
                {
                    "fingerprint": g["fingerprint"].to_json(),
                    "members": g["members"],
                    "labels": [str(lab) for lab in g["labels"]],
                }
                for g in groups
            ],
        }
        if len(groups) != sc.expected_groups:
            ok = False
            reasons.append(f"{len(groups)} attractor groups != {sc.expected_groups}")
    warnings += _check_reported(sc, eq, label)
    computed = str(label)
    if sc.expected_groups is not None:
        computed += f" [groups={len(ev['ensemble']['groups'])}]"
    if ok:
        status = "match"
    elif sc.basin_sensitive:
        status = "warning"
        warnings.append("basin-sensitive row: " + "; ".join(reasons))
    else:
        status = "mismatch"
    if reasons:
        ev["match_notes"] = reasons
    expected = sc.expected
    if sc.expected_groups is not None:
        expected = (expected + " " if expected else "") + f"[groups={sc.expected_groups}]"
    return ScenarioResult(sc.id, status, expected, computed, ev, warnings)


def _decimate(orbit: Orbit, max_rows: int) -> Orbit:
    n = len(orbit)
    if n <= max_rows:
        return orbit
    step = math.ceil(n / max_rows)
    idx = np.arange(0, n, step)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return Orbit(orbit.params, orbit.ks[idx], orbit.samples[idx], orbit.diverged_at, orbit.config)


def worker_count(requested: int | None = None) -> int:
    if requested:
        return max(1, int(requested))
    env = os.environ.get("LORENZ_DCX_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _run_one(args):
    sc, out_dir = args
    return run_scenario(sc, out_dir)


def run_suite(
    path: str | Path, out_dir: str | Path | None = None, workers: int | None = None
) -> ReproductionReport:
    """Run every scenario of a suite file and write ``report.json`` and ``summary.txt``."""
    scenarios = load_suite(path)
    n = worker_count(workers)
    orbit_dir = Path(out_dir) / "orbits" if out_dir is not None else None
    jobs = [(sc, orbit_dir) for sc in scenarios]
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda r: r.id)
    report = ReproductionReport(Path(path).name, results)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(dumps(report.to_json()))
        (out / "summary.txt").write_text(report.summary_text())
    return report


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, complex):
        return complex_to_json(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, State3):
        return obj.to_json()
    return obj


def export_plot_data(orbit: Orbit, mode: str, out_dir: str | Path, stem: str = "orbit") -> list[Path]:
    """Write plot-ready CSVs.

    ``complex_plane``: one file per variable with ``re,im`` columns.
    ``components``: one file per variable with ``k,re,im`` columns.
    ``three_d``: ``re_x,re_y,re_z`` and ``im_x,im_y,im_z`` files.
    """
    if len(orbit) == 0:
        raise ValueError("orbit has no samples")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    s, ks = orbit.samples, orbit.ks
    paths: list[Path] = []

    def save(name, header, cols, fmt):
        p = out / name
        np.savetxt(p, np.column_stack(cols), fmt=fmt, delimiter=",", header=header, comments="")
        paths.append(p)

    if mode == "complex_plane":
        for i, v in enumerate("xyz"):
            save(f"{stem}_{v}_plane.csv", "re,im", [s[:, i].real, s[:, i].imag], "%.17g")
    elif mode == "components":
        for i, v in enumerate("xyz"):
            save(f"{stem}_{v}_components.csv", "k,re,im",
                 [ks.astype(float), s[:, i].real, s[:, i].imag], ["%d", "%.17g", "%.17g"])
    elif mode == "three_d":
        save(f"{stem}_real_3d.csv", "re_x,re_y,re_z", [s[:, 0].real, s[:, 1].real, s[:, 2].real], "%.17g")
        save(f"{stem}_imag_3d.csv", "im_x,im_y,im_z", [s[:, 0].imag, s[:, 1].imag, s[:, 2].imag], "%.17g")
    else:
        raise ValueError(f"unknown export mode {mode!r}")
    return paths
