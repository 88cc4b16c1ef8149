"""Lyapunov spectrum of the map lifted to six real dimensions.

A complex tangent vector ``(dx, dy, dz)`` is treated as the real 6-vector
``(re dx, im dx, re dy, im dy, re dz, im dz)``; each complex derivative entry
``alpha + beta i`` becomes the real block ``[[alpha, -beta], [beta, alpha]]``.
Because the map is holomorphic, exponents come in near-equal pairs.

Exponents are per iteration (nats/step), so they scale with ``dt``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .equilibria import map_derivative_at
from .types import OrbitConfig, State3, SystemParams

__all__ = [
    "DivergentOrbit",
    "LyapunovSettings",
    "LyapunovEstimate",
    "real_representation",
    "tangent_step",
    "spectrum",
    "finite_time_largest",
    "sign_verdict",
    "POSITIVE_THRESHOLD",
]

POSITIVE_THRESHOLD = 5e-6
SIGNIFICANCE = 3.0


class DivergentOrbit(RuntimeError):
    def __init__(self, step: int, during_burn_in: bool):
        self.step = step
        self.during_burn_in = during_burn_in
        phase = "before burn-in end" if during_burn_in else "after burn-in"
        super().__init__(f"divergent orbit: diverged at step {step} ({phase})")


@dataclass(frozen=True)
class LyapunovSettings:
    """``burn_in=None`` means 20% of the run; ``window=None`` picks ~40 windows."""

    burn_in: int | None = None
    interval: int = 10
    window: int | None = None

    def resolve(self, total: int) -> "LyapunovSettings":
        burn = int(0.2 * total) if self.burn_in is None else int(self.burn_in)
        window = self.window
        if window is None:
            window = max(1000, total // 40)
        if window < 1000:
            raise ValueError("window must be at least 1000 steps")
        if self.interval < 1:
            raise ValueError("interval must be at least 1 step")
        return LyapunovSettings(burn_in=burn, interval=int(self.interval), window=int(window))

    def to_json(self) -> dict:
        return {"burn_in": self.burn_in, "interval": self.interval, "window": self.window}


@dataclass(frozen=True)
class LyapunovEstimate:
    exponents: tuple[float, ...]
    finite_time_series: tuple[tuple[int, float], ...]
    settings: LyapunovSettings
    total_steps: int
    mean_log_det: float
    final: State3
    standard_error: float = field(default=0.0)

    @property
    def largest(self) -> float:
        return self.exponents[0]

    @property
    def pairs(self) -> list[tuple[float, float]]:
        e = self.exponents
        return [(e[0], e[1]), (e[2], e[3]), (e[4], e[5])]

    @property
    def verdict(self) -> str:
        return sign_verdict(self.largest, self.standard_error)

    def to_json(self) -> dict:
        return {
            "exponents": list(self.exponents),
            "largest": self.largest,
            "verdict": self.verdict,
            "standard_error": self.standard_error,
            "mean_log_det": self.mean_log_det,
            "settings": dict(self.settings.to_json(), total=self.total_steps),
        }


def sign_verdict(largest: float, standard_error: float = 0.0) -> str:
    """positive / negative / neutral with the absolute-plus-significance rule."""
    if largest > POSITIVE_THRESHOLD and largest > SIGNIFICANCE * standard_error:
        return "positive"
    if largest < -POSITIVE_THRESHOLD:
        return "negative"
    return "neutral"


def real_representation(m) -> np.ndarray:
    """6x6 real matrix acting on (re, im) pairs like the complex 3x3 ``m``."""
    m = np.asarray(m, dtype=np.complex128)
    n = m.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[0::2, 0::2] = m.real
    out[0::2, 1::2] = -m.imag
    out[1::2, 0::2] = m.imag
    out[1::2, 1::2] = m.real
    return out


def tangent_step(params: SystemParams, s: State3, v) -> np.ndarray:
    """Image of a real 6-vector under the lifted derivative of the map at ``s``."""
    return real_representation(map_derivative_at(params, s)) @ np.asarray(v, dtype=float)


def _run(params: SystemParams, cfg: OrbitConfig, settings: LyapunovSettings):
    total = cfg.steps
    s = settings.resolve(total)
    if total < 10 * s.interval:
        raise ValueError(
            f"total steps {total} must be at least 10x the orthonormalization interval {s.interval}"
        )
    if not 0 <= s.burn_in < total:
        raise ValueError(f"burn_in {s.burn_in} must lie in [0, {total})")
    x, y, z = cfg.initial
    res = _kernels.lyapunov_run(
        params.a, params.b, params.r, params.dt, x, y, z,
        s.burn_in, total, s.interval, s.window, float(cfg.divergence_threshold),
    )
    return s, res


def spectrum(
    params: SystemParams, cfg: OrbitConfig, settings: LyapunovSettings | None = None
) -> LyapunovEstimate:
    """Run the orbit and six tangent vectors for ``cfg.steps`` steps.

    Raises :class:`DivergentOrbit` if the orbit leaves the divergence threshold.
    """
    settings = settings or LyapunovSettings()
    s, (sums, logdet, wk, wv, n_win, div, final) = _run(params, cfg, settings)
    if div >= 0:
        raise DivergentOrbit(int(div), div <= s.burn_in)
    n = cfg.steps - s.burn_in
    exps = np.sort(sums / n)[::-1]
    series = tuple((int(k), float(v)) for k, v in zip(wk[:n_win], wv[:n_win]))
    return LyapunovEstimate(
        exponents=tuple(float(e) for e in exps),
        finite_time_series=series,
        settings=s,
        total_steps=cfg.steps,
        mean_log_det=float(logdet / n),
        final=State3.from_array(final),
        standard_error=_last_quarter_se(series, s.burn_in),
    )


def _last_quarter_se(series, burn_in: int) -> float:
    vals = np.array([v for k, v in series if k >= burn_in])
    if len(vals) == 0:
        return 0.0
    q = vals[len(vals) - max(len(vals) // 4, 1):]
    if len(q) < 2:
        return 0.0
    return float(np.std(q, ddof=1) / np.sqrt(len(q)))


def finite_time_largest(
    params: SystemParams, cfg: OrbitConfig, window: int, interval: int = 10
) -> list[tuple[int, float]]:
    """Windowed largest-exponent series ``(window start k, exponent)`` from step 0."""
    if window < 1000:
        raise ValueError("window must be at least 1000 steps")
    settings = LyapunovSettings(burn_in=0, interval=interval, window=window)
    s, (sums, logdet, wk, wv, n_win, div, final) = _run(params, cfg, settings)
    if div >= 0:
        raise DivergentOrbit(int(div), False)
    return [(int(k), float(v)) for k, v in zip(wk[:n_win], wv[:n_win])]
