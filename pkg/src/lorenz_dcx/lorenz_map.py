"""The one-step discrete Lorenz map and orbit generation.

    x' = x + a (y - x) dt
    y' = y + (-x z + r x - y) dt
    z' = z + (x y - b z) dt

Every component multiplies by ``dt`` last, in the order written above, so
the Python reference step, the compiled orbit loop and the real-variable
restriction agree bit for bit on real inputs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .types import OrbitConfig, ParameterError, State3, SystemParams

__all__ = [
    "Orbit",
    "step",
    "step_real",
    "apply_symmetry",
    "iterate",
    "iterate_real",
    "orbit_to_csv",
    "write_orbit_csv",
    "CSV_HEADER",
]

CSV_HEADER = "k,re_x,im_x,re_y,im_y,re_z,im_z"


@dataclass(frozen=True)
class Orbit:
    """Recorded samples of one run.

    ``ks`` holds the step index of each row of ``samples`` (shape ``(n, 3)``,
    complex). ``diverged_at`` is the step at which a component left the
    divergence threshold, or ``None`` if the run completed.
    """

    params: SystemParams
    ks: np.ndarray
    samples: np.ndarray
    diverged_at: int | None
    config: OrbitConfig

    @property
    def terminated_by(self) -> str:
        return "completed" if self.diverged_at is None else f"diverged({self.diverged_at})"

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    @property
    def stride(self) -> int:
        return self.config.record_stride

    @property
    def final(self) -> State3:
        return State3.from_array(self.samples[-1])

    def __len__(self) -> int:
        return len(self.ks)


def step(params: SystemParams, s: State3) -> State3:
    a, b, r, dt = params.a, params.b, params.r, params.dt
    x, y, z = s.x, s.y, s.z
    return State3(
        x + a * (y - x) * dt,
        y + (-x * z + r * x - y) * dt,
        z + (x * y - b * z) * dt,
    )


def _require_real(name: str, v: complex | float) -> float:
    if isinstance(v, complex):
        if v.imag != 0.0:
            raise ParameterError(name, repr(v), "real restriction needs a zero imaginary part")
        return v.real
    return float(v)


def step_real(params: SystemParams, s) -> tuple[float, float, float]:
    """Same map in real arithmetic; rejects any nonzero imaginary part."""
    a = _require_real("a", params.a)
    b = _require_real("b", params.b)
    r = _require_real("r", params.r)
    dt = params.dt
    x, y, z = (_require_real(n, v) for n, v in zip("xyz", tuple(s)))
    return (
        x + a * (y - x) * dt,
        y + (-x * z + r * x - y) * dt,
        z + (x * y - b * z) * dt,
    )


def apply_symmetry(s: State3) -> State3:
    """(x, y, z) -> (-x, -y, z)."""
    return State3(-s.x, -s.y, s.z)


def iterate(params: SystemParams, cfg: OrbitConfig) -> Orbit:
    """Apply :func:`step` ``cfg.steps`` times, keeping every ``record_stride``-th state.

    Stops early when a component becomes non-finite or exceeds
    ``cfg.divergence_threshold`` in modulus; the offending state is not recorded.
    """
    s = cfg.initial
    ks, samples, div = _kernels.iterate_complex(
        params.a, params.b, params.r, params.dt,
        s.x, s.y, s.z,
        cfg.steps, cfg.record_stride, float(cfg.divergence_threshold),
    )
    return Orbit(params, ks.copy(), samples.copy(), None if div < 0 else int(div), cfg)


def iterate_real(params: SystemParams, cfg: OrbitConfig) -> Orbit:
    """Orbit of the real-variable restriction; samples are returned as complex with zero imaginary part."""
    a = _require_real("a", params.a)
    b = _require_real("b", params.b)
    r = _require_real("r", params.r)
    s = cfg.initial
    x, y, z = (_require_real(n, v) for n, v in zip(("x0", "y0", "z0"), tuple(s)))
    ks, samples, div = _kernels.iterate_real(
        a, b, r, params.dt, x, y, z,
        cfg.steps, cfg.record_stride, float(cfg.divergence_threshold),
    )
    return Orbit(
        params, ks.copy(), samples.astype(np.complex128), None if div < 0 else int(div), cfg
    )


def orbit_rows(orbit: Orbit) -> np.ndarray:
    s = orbit.samples
    return np.column_stack(
        [s[:, 0].real, s[:, 0].imag, s[:, 1].real, s[:, 1].imag, s[:, 2].real, s[:, 2].imag]
    )


def orbit_to_csv(orbit: Orbit) -> str:
    buf = io.StringIO()
    write_orbit_csv(orbit, buf)
    return buf.getvalue()


def write_orbit_csv(orbit: Orbit, target) -> None:
    """Write ``k,re_x,...,im_z`` rows at 17 significant digits."""
    data = np.column_stack([orbit.ks.astype(np.float64), orbit_rows(orbit)])
    fmt = ["%d"] + ["%.17g"] * 6
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as fh:
            np.savetxt(fh, data, fmt=fmt, delimiter=",", header=CSV_HEADER, comments="")
    else:
        np.savetxt(target, data, fmt=fmt, delimiter=",", header=CSV_HEADER, comments="")
