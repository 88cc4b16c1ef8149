"""Shared value types and the literal grammar for parameters and states.

Complex values are plain Python ``complex`` objects (double precision).
Literals use a trailing ``i`` for the imaginary unit, e.g. ``4+9i``,
``-1-5i``, ``0.5497+0.9172i`` or ``-4i``. Real-only values may also be
written as a fraction such as ``8/3``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "ParameterError",
    "SystemParams",
    "State3",
    "OrbitConfig",
    "parse_complex",
    "format_complex",
    "parse_params",
    "format_params",
    "parse_state",
    "parse_key_values",
    "parse_stanzas",
    "DEFAULT_DIVERGENCE_THRESHOLD",
]

DEFAULT_DIVERGENCE_THRESHOLD = 1e6

_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(
    rf"^(?P<re>[+-]?{_NUM})?(?:(?P<sign>[+-])(?P<im>{_NUM})?i)?$"
)
_IMAG_RE = re.compile(rf"^(?P<sign>[+-]?)(?P<im>{_NUM})?i$")
_FRACTION_RE = re.compile(r"^[+-]?\d+\s*/\s*\d+$")


class ParameterError(ValueError):
    """A parameter or state literal failed to parse or validate."""

    def __init__(self, key: str, raw: str, message: str):
        self.key = key
        self.raw = raw
        super().__init__(f"{key}: {message} (got {raw!r})")


def parse_complex(text: str, key: str = "value") -> complex:
    """Parse a complex literal such as ``4+9i`` or a real such as ``8/3``."""
    raw = text
    s = text.strip().replace(" ", "")
    if not s:
        raise ParameterError(key, raw, "empty value")
    if _FRACTION_RE.match(s):
        num, den = s.split("/")
        if int(den) == 0:
            raise ParameterError(key, raw, "zero denominator")
        return complex(float(Fraction(int(num), int(den))), 0.0)
    m = _IMAG_RE.match(s)
    if m:
        mag = float(m.group("im")) if m.group("im") else 1.0
        return complex(0.0, -mag if m.group("sign") == "-" else mag)
    m = _COMPLEX_RE.match(s)
    if m is None or m.group("re") is None:
        raise ParameterError(key, raw, "malformed complex literal")
    re_part = float(m.group("re"))
    im_part = 0.0
    if m.group("sign"):
        mag = float(m.group("im")) if m.group("im") else 1.0
        im_part = -mag if m.group("sign") == "-" else mag
    value = complex(re_part, im_part)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ParameterError(key, raw, "value is not finite")
    return value


def _fmt_float(v: float) -> str:
    return repr(float(v))


def format_complex(z: complex) -> str:
    """Shortest literal that parses back to the identical ``complex``."""
    z = complex(z)
    out = _fmt_float(z.real)
    if z.imag != 0.0 or math.copysign(1.0, z.imag) < 0:
        im = _fmt_float(abs(z.imag))
        out += ("-" if math.copysign(1.0, z.imag) < 0 else "+") + im + "i"
    return out


@dataclass(frozen=True)
class SystemParams:
    """Parameters ``(a, b, r, dt)`` of the discrete map; ``dt`` is a positive real."""

    a: complex
    b: complex
    r: complex
    dt: float

    def __post_init__(self):
        for name in ("a", "b", "r"):
            v = complex(getattr(self, name))
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ParameterError(name, str(v), "must be finite")
            object.__setattr__(self, name, v)
        dt = self.dt
        if isinstance(dt, complex):
            if dt.imag != 0.0:
                raise ParameterError("dt", str(dt), "dt must be real")
            dt = dt.real
        dt = float(dt)
        if not math.isfinite(dt) or dt <= 0.0:
            raise ParameterError("dt", str(self.dt), "dt must be positive and finite")
        object.__setattr__(self, "dt", dt)

    @property
    def is_real(self) -> bool:
        return self.a.imag == 0.0 and self.b.imag == 0.0 and self.r.imag == 0.0

    def to_json(self) -> dict:
        return {
            "a": complex_to_json(self.a),
            "b": complex_to_json(self.b),
            "r": complex_to_json(self.r),
            "dt": self.dt,
        }


@dataclass(frozen=True)
class State3:
    """One point ``(x, y, z)`` of complex 3-space."""

    x: complex
    y: complex
    z: complex

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, complex(getattr(self, name)))

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.complex128)

    @classmethod
    def from_array(cls, arr) -> "State3":
        return cls(complex(arr[0]), complex(arr[1]), complex(arr[2]))

    def max_abs(self) -> float:
        """Largest component modulus."""
        return max(abs(self.x), abs(self.y), abs(self.z))

    def is_finite(self) -> bool:
        return all(math.isfinite(c.real) and math.isfinite(c.imag) for c in self)

    @property
    def real_part(self) -> "State3":
        return State3(self.x.real, self.y.real, self.z.real)

    def to_json(self) -> list:
        return [complex_to_json(c) for c in self]

    def __str__(self) -> str:
        return "(" + ", ".join(format_complex(c) for c in self) + ")"


@dataclass(frozen=True)
class OrbitConfig:
    initial: State3
    steps: int
    record_stride: int = 1
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ParameterError("steps", str(self.steps), "must be a positive integer")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ParameterError("stride", str(self.record_stride), "must be a positive integer")
        if self.record_stride > self.steps:
            raise ParameterError("stride", str(self.record_stride), "stride must not exceed steps")
        if not (self.divergence_threshold > 0 and math.isfinite(self.divergence_threshold)):
            raise ParameterError(
                "divergence_threshold", str(self.divergence_threshold), "must be positive"
            )
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "record_stride", int(self.record_stride))


def complex_to_json(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def parse_key_values(text: str) -> dict[str, str]:
    """Split ``k=v`` pairs separated by commas, semicolons or newlines."""
    out: dict[str, str] = {}
    for chunk in re.split(r"[,;\n]", text):
        chunk = chunk.strip()
        if not chunk or chunk.startswith("#"):
            continue
        if "=" not in chunk:
            raise ParameterError(chunk, chunk, "expected key=value")
        key, value = chunk.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def params_from_mapping(values: Mapping[str, str]) -> SystemParams:
    missing = [k for k in ("a", "b", "r", "dt") if k not in values]
    if missing:
        raise ParameterError(missing[0], "", "missing key")
    a = parse_complex(values["a"], "a")
    b = parse_complex(values["b"], "b")
    r = parse_complex(values["r"], "r")
    dt = parse_complex(values["dt"], "dt")
    if dt.imag != 0.0:
        raise ParameterError("dt", values["dt"], "dt must be real")
    if dt.real <= 0.0:
        raise ParameterError("dt", values["dt"], "dt must be positive")
    return SystemParams(a, b, r, dt.real)


def parse_params(text: str) -> SystemParams:
    """Parse ``"a=10, b=8/3, r=4+9i, dt=0.0005"`` into validated parameters."""
    return params_from_mapping(parse_key_values(text))


def format_params(p: SystemParams) -> str:
    return (
        f"a={format_complex(p.a)}, b={format_complex(p.b)}, "
        f"r={format_complex(p.r)}, dt={_fmt_float(p.dt)}"
    )


def parse_state(x0: str, y0: str, z0: str) -> State3:
    return State3(parse_complex(x0, "x0"), parse_complex(y0, "y0"), parse_complex(z0, "z0"))


def parse_stanzas(text: str) -> list[dict[str, str]]:
    """Split a scenario file into blank-line separated ``key=value`` stanzas.

    Lines starting with ``#`` are comments. Values run to the end of the line,
    so free-text keys such as ``label`` may contain commas.
    """
    stanzas: list[dict[str, str]] = []
    current: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped:
            if current:
                stanzas.append(current)
                current = {}
            continue
        if stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParameterError(f"line {lineno}", stripped, "expected key=value")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if key in current:
            raise ParameterError(key, stripped, f"duplicate key on line {lineno}")
        current[key] = value.strip()
    if current:
        stanzas.append(current)
    return stanzas


def states_close(s1: State3, s2: State3, tol: float) -> bool:
    return max(abs(a - b) for a, b in zip(s1, s2)) <= tol


def iter_complex(values: Iterable[complex]) -> list[dict]:
    return [complex_to_json(v) for v in values]
