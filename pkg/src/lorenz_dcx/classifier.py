"""Regime labels for orbits and grouping of coexisting attractors.

Decision cascade used by :func:`classify`:

1. the orbit diverged -> ``divergent``
2. the tail settled on a point -> ``converges_to``; otherwise the tail repeats
   with a period ``p <= P_max`` -> ``periodic``. A recurrence that holds at
   lag ``p`` but not at long multiples of ``p`` is slow drift: for ``p = 1``
   the orbit is still creeping toward a point and is labelled ``converges_to``
   with ``tail_settled = False``. Either outcome is upgraded to
   ``transient_chaos`` when the finite-time largest exponent shows a sustained
   positive phase followed by a non-positive tail.
3. largest exponent positive -> ``chaotic``
4. largest exponent negative but the tail has not settled yet -> ``converges_to``
   with ``tail_settled = False``
5. anything else that stays bounded -> ``quasi_periodic`` (operational: neutral
   exponent, no period up to ``P_max``)

Without Lyapunov evidence steps 3-4 are skipped.
"""

from __future__ import annotations

import hashlib
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .lorenz_map import Orbit, iterate
from .lyapunov import (
    POSITIVE_THRESHOLD,
    DivergentOrbit,
    LyapunovEstimate,
    LyapunovSettings,
    spectrum,
)
from .types import OrbitConfig, State3, SystemParams, parse_complex

__all__ = [
    "KINDS",
    "ClassifierTolerances",
    "InsufficientData",
    "RegimeLabel",
    "AttractorFingerprint",
    "classify",
    "detect_period",
    "finite_time_signature",
    "fingerprint",
    "coexisting_attractors",
    "parse_label",
    "short_complex",
]

KINDS = ("converges_to", "periodic", "quasi_periodic", "transient_chaos", "chaotic", "divergent")
MIN_SAMPLES = 10_000


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierTolerances:
    """Configuration knobs; defaults reproduce the table labels where they can."""

    convergence_rtol: float = 1e-6
    recurrence_rtol: float = 1e-6
    p_max: int = 50_000
    tail_fraction: float = 0.1
    sink_group_tol: float = 1e-4
    cell_size: float = 0.5
    cell_overlap: float = 0.5
    min_positive_windows: int = 2

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class RegimeLabel:
    kind: str
    target: State3 | None = None
    period: int | None = None
    divergence_step: int | None = None
    evidence: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown regime kind {self.kind!r}")

    def __str__(self) -> str:
        if self.kind == "converges_to" and self.target is not None:
            return "converges_to(" + ",".join(short_complex(c) for c in self.target) + ")"
        if self.kind == "periodic" and self.period is not None:
            return f"periodic({self.period})"
        if self.kind == "divergent" and self.divergence_step is not None:
            return f"divergent({self.divergence_step})"
        return self.kind

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "label": str(self),
            "target": self.target.to_json() if self.target is not None else None,
            "period": self.period,
            "divergence_step": self.divergence_step,
        }


def short_complex(c: complex) -> str:
    """Compact 4-decimal rendering used in labels, e.g. ``2.176-0.0004i``."""
    re_, im = round(c.real, 4) + 0.0, round(c.imag, 4) + 0.0
    text = f"{re_:g}"
    if im:
        text = f"{im:g}i" if re_ == 0 else text + f"{im:+g}i"
    return text


_LABEL_RE = re.compile(r"^\s*(?P<kind>[a-z_]+)\s*(?:\((?P<arg>[^)]*)\))?\s*$")


def parse_label(text: str) -> RegimeLabel:
    """Parse ``converges_to(4.899,4.899,9)``, ``periodic(7)``, ``chaotic`` ..."""
    m = _LABEL_RE.match(text)
    if m is None:
        raise ValueError(f"malformed regime label {text!r}")
    kind, arg = m.group("kind"), m.group("arg")
    if kind not in KINDS:
        raise ValueError(f"unknown regime kind {kind!r}")
    if arg is None or not arg.strip():
        return RegimeLabel(kind)
    if kind == "converges_to":
        parts = [p.strip() for p in arg.split(",")]
        if len(parts) != 3:
            raise ValueError(f"converges_to needs three components: {text!r}")
        return RegimeLabel(kind, target=State3(*(parse_complex(p) for p in parts)))
    if kind == "periodic":
        return RegimeLabel(kind, period=int(arg))
    if kind == "divergent":
        return RegimeLabel(kind, divergence_step=int(arg))
    raise ValueError(f"{kind} takes no argument: {text!r}")


def _max_dev(a: np.ndarray, ref: np.ndarray) -> float:
    return float(np.abs(a - ref).max()) if len(a) else 0.0


def detect_period(tail, p_max: int, rtol: float = 1e-6) -> int | None:
    """Smallest recurrence period (in samples) of the last ``p_max`` samples of ``tail``.

    ``tail`` is an ``(n, 3)`` complex array or a sequence of :class:`State3`
    with ``n >= 3 * p_max``. Returns ``None`` when no ``p <= p_max`` qualifies.
    """
    arr = _as_array(tail)
    if len(arr) < 3 * p_max:
        raise ValueError(f"tail of {len(arr)} samples is shorter than 3 * P_max = {3 * p_max}")
    tol = rtol * (1.0 + float(np.abs(arr).max()))
    p = _kernels.detect_period(arr, int(p_max), tol)
    return None if p < 0 else int(p)


def _drifting(samples: np.ndarray, period: int, p_max: int, rtol: float) -> bool:
    """True when the recurrence at ``period`` fails at the largest multiple of it within ``p_max``."""
    lag = max(p_max // period, 1) * period
    if lag == period or len(samples) < p_max + lag:
        return False
    tol = rtol * (1.0 + float(np.abs(samples[-p_max:]).max()))
    return _max_dev(samples[-p_max:], samples[-p_max - lag:-lag]) >= tol


def _as_array(tail) -> np.ndarray:
    if isinstance(tail, np.ndarray):
        return np.ascontiguousarray(tail, dtype=np.complex128)
    return np.array([s.to_array() for s in tail], dtype=np.complex128).reshape(-1, 3)


def finite_time_signature(series, min_positive_windows: int = 2) -> str:
    """Summarize windowed largest exponents.

    ``positive_then_negative``: a run of at least ``min_positive_windows``
    consecutive positive windows, with every window in the last quarter
    non-positive. Other outcomes: ``all_negative``, ``all_positive``,
    ``mixed``, ``empty``.
    """
    vals = [v for _, v in series]
    if not vals:
        return "empty"
    pos = [v > POSITIVE_THRESHOLD for v in vals]
    if all(v < -POSITIVE_THRESHOLD for v in vals):
        return "all_negative"
    if all(pos):
        return "all_positive"
    run = best = 0
    for p in pos:
        run = run + 1 if p else 0
        best = max(best, run)
    last = vals[len(vals) - max(len(vals) // 4, 1):]
    if best >= min_positive_windows and all(v <= POSITIVE_THRESHOLD for v in last):
        return "positive_then_negative"
    return "mixed"


def classify(
    orbit: Orbit,
    lyap: LyapunovEstimate | None = None,
    tol: ClassifierTolerances | None = None,
) -> RegimeLabel:
    tol = tol or ClassifierTolerances()
    ev: dict = {"recorded_samples": len(orbit), "stride": orbit.stride}
    if lyap is not None:
        ev["largest_exponent"] = lyap.largest
        ev["lyapunov_verdict"] = lyap.verdict
        ev["finite_time_signature"] = finite_time_signature(
            lyap.finite_time_series, tol.min_positive_windows
        )
    if orbit.diverged:
        return RegimeLabel("divergent", divergence_step=orbit.diverged_at, evidence=ev)
    n = len(orbit)
    if n < MIN_SAMPLES:
        raise InsufficientData(f"orbit has {n} recorded samples; need at least {MIN_SAMPLES}")

    samples = orbit.samples
    final = samples[-1]
    n_tail = max(int(tol.tail_fraction * n), 2)
    tail_dev = _max_dev(samples[-n_tail:], final)
    ev["tail_deviation"] = tail_dev
    final_state = State3.from_array(final)
    transient = ev.get("finite_time_signature") == "positive_then_negative"

    if tail_dev < tol.convergence_rtol * (1 + final_state.max_abs()):
        ev["detected_period"] = 1
        ev["tail_settled"] = True
        if transient:
            return RegimeLabel("transient_chaos", target=final_state, evidence=ev)
        return RegimeLabel("converges_to", target=final_state, evidence=ev)

    p_max = min(tol.p_max, n // 3)
    period = detect_period(samples, p_max, tol.recurrence_rtol)
    ev["p_max"] = p_max
    if period is not None and _drifting(samples, period, p_max, tol.recurrence_rtol):
        # short lags agree but long lags do not: a slow approach, not a cycle
        ev["drift_detected"] = True
        if period == 1:
            ev["detected_period"] = None
            ev["tail_settled"] = False
            kind = "transient_chaos" if transient else "converges_to"
            return RegimeLabel(kind, target=final_state, evidence=ev)
        period = None
    ev["detected_period"] = period
    if period is not None:
        steps = period * orbit.stride
        if transient:
            return RegimeLabel("transient_chaos", period=steps, evidence=ev)
        return RegimeLabel("periodic", period=steps, evidence=ev)
    ev["period_note"] = f"period exceeds P_max={p_max * orbit.stride} steps"

    if lyap is not None:
        verdict = lyap.verdict
        if verdict == "positive":
            return RegimeLabel("chaotic", evidence=ev)
        if verdict == "negative":
            ev["tail_settled"] = False
            if transient:
                return RegimeLabel("transient_chaos", target=final_state, evidence=ev)
            return RegimeLabel("converges_to", target=final_state, evidence=ev)
    ev["note"] = "operational label: bounded, non-convergent, no period up to P_max"
    return RegimeLabel("quasi_periodic", evidence=ev)


@dataclass(frozen=True)
class AttractorFingerprint:
    """Terminal behaviour of one orbit.

    ``kind`` is ``sink``, ``bounded`` or ``divergent``. Sinks carry their
    terminal state; bounded orbits carry the set of coarse cells (6 real axes)
    visited over the final window.
    """

    kind: str
    terminal: State3 | None = None
    cells: frozenset = frozenset()

    @property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.kind.encode())
        if self.kind == "sink" and self.terminal is not None:
            h.update(repr(tuple(round(v, 4) for c in self.terminal for v in (c.real, c.imag))).encode())
        for c in sorted(self.cells):
            h.update(repr(c).encode())
        return h.hexdigest()[:16]

    def same_attractor(self, other: "AttractorFingerprint", tol: ClassifierTolerances) -> bool:
        if self.kind != other.kind:
            return False
        if self.kind == "divergent":
            return True
        if self.kind == "sink":
            return max(abs(p - q) for p, q in zip(self.terminal, other.terminal)) <= tol.sink_group_tol
        if not self.cells or not other.cells:
            return self.cells == other.cells
        inter = len(self.cells & other.cells)
        union = len(self.cells | other.cells)
        return inter / union >= tol.cell_overlap

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "terminal": self.terminal.to_json() if self.terminal is not None else None,
            "cell_count": len(self.cells),
            "digest": self.digest,
        }


def fingerprint(
    orbit: Orbit, label: RegimeLabel, tol: ClassifierTolerances | None = None
) -> AttractorFingerprint:
    tol = tol or ClassifierTolerances()
    if label.kind == "divergent":
        return AttractorFingerprint("divergent")
    if label.kind in ("converges_to", "transient_chaos") and label.target is not None:
        if label.evidence.get("tail_settled", True):
            return AttractorFingerprint("sink", terminal=label.target)
    n = len(orbit)
    tail = orbit.samples[-max(int(tol.tail_fraction * n), 1):]
    reals = np.column_stack(
        [tail[:, 0].real, tail[:, 0].imag, tail[:, 1].real, tail[:, 1].imag, tail[:, 2].real, tail[:, 2].imag]
    )
    idx = np.floor(reals / tol.cell_size).astype(np.int64)
    cells = frozenset(map(tuple, np.unique(idx, axis=0).tolist()))
    return AttractorFingerprint("bounded", cells=cells)


def _ensemble_member(args):
    params, cfg, tol, settings = args
    orbit = iterate(params, cfg)
    lyap = None
    if not orbit.diverged:
        try:
            lyap = spectrum(params, replace(cfg, record_stride=1), settings)
        except DivergentOrbit:
            lyap = None
    label = classify(orbit, lyap, tol)
    return label, fingerprint(orbit, label, tol)


def coexisting_attractors(
    params: SystemParams,
    ensemble: list[State3],
    cfg: OrbitConfig,
    tol: ClassifierTolerances | None = None,
    settings: LyapunovSettings | None = None,
    workers: int = 1,
) -> list[dict]:
    """Classify every member and group them by attractor.

    Returns groups sorted by first-member index, each a dict with
    ``fingerprint``, ``members`` (indices) and ``labels``.
    """
    if len(ensemble) < 2:
        raise ValueError("ensemble needs at least two initial states")
    tol = tol or ClassifierTolerances()
    settings = settings or LyapunovSettings()
    jobs = [(params, replace(cfg, initial=s0), tol, settings) for s0 in ensemble]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_ensemble_member, jobs))
    else:
        results = [_ensemble_member(j) for j in jobs]
    groups: list[dict] = []
    for i, (label, fp) in enumerate(results):
        for g in groups:
            if g["fingerprint"].same_attractor(fp, tol):
                g["members"].append(i)
                g["labels"].append(label)
                break
        else:
            groups.append({"fingerprint": fp, "members": [i], "labels": [label]})
    return groups
