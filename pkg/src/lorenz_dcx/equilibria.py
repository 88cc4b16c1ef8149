"""Fixed points, Jacobians, eigenvalues and stability verdicts.

Two 3x3 matrices are available at any state:

* :func:`jacobian_at` is the published matrix display
  ``[[1+a dt, -a dt, 0], [(r+z) dt, 1-dt, x dt], [y dt, x dt, 1-b dt]]``.
  Its eigenvalues are the ones the stability tables quote, and the closed
  form for the origin is derived from it.
* :func:`map_derivative_at` is the actual derivative of the one-step map.
  Lyapunov exponents and the ``derivative_stable`` verdict use this one.

The two differ in the signs of the first row and of the ``z`` and ``x``
terms in the second row, so they disagree about stability in general.
Both are reported.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .lorenz_map import step
from .types import State3, SystemParams, complex_to_json

__all__ = [
    "EquilibriumReport",
    "NotAnEquilibrium",
    "DegenerateBound",
    "principal_sqrt",
    "fixed_points",
    "jacobian_at",
    "map_derivative_at",
    "characteristic_coefficients",
    "eigenvalues3",
    "sort_eigenvalues",
    "origin_eigenvalues_closed_form",
    "residual",
    "classify_equilibrium",
    "convergence_condition",
    "EQUILIBRIUM_RTOL",
]

EQUILIBRIUM_RTOL = 1e-9


class NotAnEquilibrium(ValueError):
    def __init__(self, point: State3, residual: float):
        self.point = point
        self.residual = residual
        super().__init__(f"not an equilibrium: {point} has residual {residual:.3e}")


class DegenerateBound(ValueError):
    """``a - b - 1 = 0`` makes the convergence bound undefined."""


def principal_sqrt(w: complex) -> complex:
    """Square root with argument in (-pi/2, pi/2]; a negative real maps to +i|w|^1/2."""
    w = complex(w)
    if w.imag == 0.0:
        w = complex(w.real, 0.0)
    return cmath.sqrt(w)


def fixed_points(params: SystemParams) -> tuple[State3, State3, State3]:
    """Origin, then ``(-s, -s, r-1)`` and ``(s, s, r-1)`` with ``s = sqrt(b) * sqrt(r-1)``."""
    zbar = params.r - 1
    s = principal_sqrt(params.b) * principal_sqrt(zbar)
    neg = _no_negative_zero(-s)
    s, zbar = _no_negative_zero(s), _no_negative_zero(zbar)
    return (State3(0, 0, 0), State3(neg, neg, zbar), State3(s, s, zbar))


def _no_negative_zero(c: complex) -> complex:
    return complex(c.real + 0.0, c.imag + 0.0)


def jacobian_at(params: SystemParams, s: State3) -> np.ndarray:
    a, b, r, dt = params.a, params.b, params.r, params.dt
    x, y, z = s.x, s.y, s.z
    return np.array(
        [
            [1 + a * dt, -a * dt, 0],
            [(r + z) * dt, 1 - dt, x * dt],
            [y * dt, x * dt, 1 - b * dt],
        ],
        dtype=np.complex128,
    )


def map_derivative_at(params: SystemParams, s: State3) -> np.ndarray:
    a, b, r, dt = params.a, params.b, params.r, params.dt
    x, y, z = s.x, s.y, s.z
    return np.array(
        [
            [1 - a * dt, a * dt, 0],
            [(r - z) * dt, 1 - dt, -x * dt],
            [y * dt, x * dt, 1 - b * dt],
        ],
        dtype=np.complex128,
    )


def characteristic_coefficients(m) -> tuple[complex, complex, complex]:
    """(trace, sum of principal 2x2 minors, determinant) of a 3x3 matrix."""
    m = [[complex(m[i][j]) for j in range(3)] for i in range(3)]
    tr = m[0][0] + m[1][1] + m[2][2]
    c2 = (
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
        + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2] - m[1][2] * m[2][1]
    )
    det = (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )
    return tr, c2, det


def _cbrt(w: complex) -> complex:
    if w == 0:
        return 0j
    return cmath.exp(cmath.log(w) / 3)


def _eig_key(lam: complex):
    return (-round(abs(lam), 12), -round(lam.real, 12), -lam.imag)


def sort_eigenvalues(values) -> list[complex]:
    """Descending modulus, then descending real part, then descending imaginary part."""
    return sorted((complex(v) for v in values), key=_eig_key)


def eigenvalues3(m) -> list[complex]:
    """Eigenvalues of a 3x3 complex matrix by Cardano's formula plus one Newton polish.

    The matrix is first shifted by a third of its trace. Map Jacobians have
    all eigenvalues near 1, and forming the invariants of the shifted matrix
    avoids cancellation in the depressed-cubic coefficients.
    """
    m = np.asarray(m, dtype=np.complex128)
    shift = complex(np.trace(m)) / 3
    ms = m - shift * np.eye(3)
    tr, c2, det = characteristic_coefficients(ms)
    # t^3 + B t^2 + C t + D, eigenvalue = t + shift
    B, C, D = -tr, c2, -det
    p = C - B * B / 3
    q = 2 * B**3 / 27 - B * C / 3 + D
    disc = q * q / 4 + p**3 / 27
    sq = cmath.sqrt(disc)
    u3 = -q / 2 + sq
    alt = -q / 2 - sq
    if abs(alt) > abs(u3):
        u3 = alt
    u = _cbrt(u3)
    omega = complex(-0.5, math.sqrt(3) / 2)
    roots = []
    for k in range(3):
        uk = u * omega**k
        t = uk - p / (3 * uk) if uk != 0 else 0j
        roots.append(t - B / 3)

    def f(t):
        return ((t + B) * t + C) * t + D

    def fp(t):
        return (3 * t + 2 * B) * t + C

    polished = []
    for t in roots:
        d = fp(t)
        if d != 0:
            t_new = t - f(t) / d
            if abs(f(t_new)) <= abs(f(t)):
                t = t_new
        polished.append(t + shift)
    return sort_eigenvalues(polished)


def origin_eigenvalues_closed_form(params: SystemParams) -> list[complex]:
    """Closed-form eigenvalues of ``jacobian_at`` the origin (principal square root)."""
    a, b, r, dt = params.a, params.b, params.r, params.dt
    root = principal_sqrt(1 + 2 * a + a**2 - 4 * a * r)
    return sort_eigenvalues(
        [
            1 - b * dt,
            (2 - dt + a * dt - dt * root) / 2,
            (2 - dt + a * dt + dt * root) / 2,
        ]
    )


def residual(params: SystemParams, p: State3) -> float:
    """Largest component modulus of ``step(p) - p``."""
    q = step(params, p)
    return max(abs(u - v) for u, v in zip(q, p))


@dataclass(frozen=True)
class EquilibriumReport:
    point: State3
    eigenvalues: tuple[complex, complex, complex]
    paper_stable: bool
    modulus_stable: bool
    residual: float
    derivative_eigenvalues: tuple[complex, complex, complex]
    derivative_stable: bool

    def to_json(self) -> dict:
        def ev(values):
            return [dict(complex_to_json(v), modulus=abs(v)) for v in values]

        return {
            "point": self.point.to_json(),
            "eigenvalues": ev(self.eigenvalues),
            "paper_stable": self.paper_stable,
            "modulus_stable": self.modulus_stable,
            "residual": self.residual,
            "derivative_eigenvalues": ev(self.derivative_eigenvalues),
            "derivative_stable": self.derivative_stable,
        }


def classify_equilibrium(params: SystemParams, p: State3) -> EquilibriumReport:
    """Stability of a fixed point under both criteria.

    ``paper_stable``: every eigenvalue of :func:`jacobian_at` has positive real part.
    ``modulus_stable``: every such eigenvalue lies inside the unit circle.
    ``derivative_stable``: the same modulus test on :func:`map_derivative_at`,
    i.e. whether the point actually attracts nearby orbits of the map.

    Raises :class:`NotAnEquilibrium` when the residual exceeds
    ``1e-9 * (1 + max|p|)``.
    """
    res = residual(params, p)
    if not res < EQUILIBRIUM_RTOL * (1 + p.max_abs()):
        raise NotAnEquilibrium(p, res)
    ev = eigenvalues3(jacobian_at(params, p))
    dev = eigenvalues3(map_derivative_at(params, p))
    return EquilibriumReport(
        point=p,
        eigenvalues=tuple(ev),
        paper_stable=all(v.real > 0 for v in ev),
        modulus_stable=all(abs(v) < 1 for v in ev),
        residual=res,
        derivative_eigenvalues=tuple(dev),
        derivative_stable=all(abs(v) < 1 for v in dev),
    )


def convergence_condition(params: SystemParams) -> tuple[float, float, bool]:
    """``(|r|, |a (a+b+3) / (a-b-1)|, |r| < bound)``."""
    a, b = params.a, params.b
    den = a - b - 1
    if den == 0:
        raise DegenerateBound(f"a - b - 1 = 0 for a={a}, b={b}")
    bound = abs(a * (a + b + 3) / den)
    mod_r = abs(params.r)
    return mod_r, bound, mod_r < bound
