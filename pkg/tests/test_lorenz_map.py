import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorenz_dcx.equilibria import fixed_points
from lorenz_dcx.lorenz_map import (
    CSV_HEADER,
    apply_symmetry,
    iterate,
    iterate_real,
    orbit_to_csv,
    step,
    step_real,
)
from lorenz_dcx.types import OrbitConfig, ParameterError, State3, SystemParams

from .oracles import euler_orbit

P5 = SystemParams(10, 8 / 3, 5, 0.005)
I0 = State3(0.1 + 0.2j, 0.3 + 0.4j, 1 + 2j)

comp = st.floats(min_value=-50, max_value=50, allow_nan=False)
cplx = st.builds(complex, comp, comp)


def test_origin_fixed():
    assert step(P5, State3(0, 0, 0)) == State3(0, 0, 0)


def test_hand_evaluated_step():
    s = step(P5, State3(1, 0, 0))
    assert s.x == pytest.approx(0.95, abs=1e-15)
    assert s.y == pytest.approx(0.025, abs=1e-15)
    assert s.z == 0


def test_fixed_point_residuals():
    for params in (P5, SystemParams(10, 8 / 3, 4 + 9j, 0.0005), SystemParams(4 + 20j, 20 + 10j, 0, 0.0005)):
        for p in fixed_points(params):
            q = step(params, p)
            res = max(abs(u - v) for u, v in zip(q, p))
            assert res < 1e-12 * (1 + p.max_abs())


def test_published_nonzero_point_is_not_fixed():
    # the literal point (4, 4, 6) moves under one step
    q = step(P5, State3(4, 4, 6))
    assert abs(q.y - 4) > 1e-3


def test_symmetry_examples():
    assert apply_symmetry(State3(1, 2, 3)) == State3(-1, -2, 3)
    assert apply_symmetry(State3(0, 0, 0)) == State3(0, 0, 0)
    assert apply_symmetry(State3(4 + 9j, -1, 2j)) == State3(-4 - 9j, 1, 2j)


@settings(max_examples=2000, deadline=None)
@given(cplx, cplx, cplx, cplx, cplx, cplx, st.floats(min_value=1e-6, max_value=0.1))
def test_symmetry_equivariance(a, b, r, x, y, z, dt):
    params = SystemParams(a, b, r, dt)
    s = State3(x, y, z)
    lhs = step(params, apply_symmetry(s))
    rhs = apply_symmetry(step(params, s))
    for u, v in zip(lhs, rhs):
        assert u.real == v.real and u.imag == v.imag


@settings(max_examples=500, deadline=None)
@given(comp, comp, comp, comp, comp, comp, st.floats(min_value=1e-6, max_value=0.1))
def test_real_restriction_bit_identical(a, b, r, x, y, z, dt):
    params = SystemParams(a, b, r, dt)
    c = step(params, State3(x, y, z))
    re_ = step_real(params, (x, y, z))
    for u, v in zip(c, re_):
        assert u.imag == 0.0
        assert u.real == v


def test_step_real_rejects_imaginary():
    with pytest.raises(ParameterError):
        step_real(SystemParams(10, 8 / 3, 4 + 9j, 0.0005), (0.1, 0.2, 0.3))
    with pytest.raises(ParameterError):
        step_real(P5, (0.1j, 0.2, 0.3))


def test_step_real_origin():
    assert step_real(SystemParams(10, 8 / 3, 10, 0.0005), (0.0, 0.0, 0.0)) == (0.0, 0.0, 0.0)


def test_kernel_matches_python_step():
    params = SystemParams(0.5497 + 0.9172j, 0.7572 + 0.7537j, -4j, 0.0005)
    orbit = iterate(params, OrbitConfig(I0, 2000, 1))
    s = I0
    for k in range(1, 2001):
        s = step(params, s)
        row = orbit.samples[k]
        assert (row == s.to_array()).all(), k


def test_kernel_matches_naive_loop():
    params = SystemParams(10, 8 / 3, 28, 0.0005)
    orbit = iterate(params, OrbitConfig(I0, 5000, 5000))
    ref = euler_orbit(10, 8 / 3, 28, 0.0005, tuple(I0), 5000)
    assert np.array_equal(orbit.samples[-1], np.array(ref))


def test_real_kernel_matches_complex_kernel():
    params = SystemParams(10, 8 / 3, 28, 0.0005)
    cfg = OrbitConfig(State3(0.1, 0.3, 1), 50000, 7)
    a, b = iterate(params, cfg), iterate_real(params, cfg)
    assert np.array_equal(a.samples, b.samples)
    assert np.array_equal(a.ks, b.ks)


def test_iterate_r10_converges():
    orbit = iterate(SystemParams(10, 8 / 3, 10, 0.0005), OrbitConfig(I0, 200_000, 100))
    target = np.array([np.sqrt(8 / 3 * 9), np.sqrt(8 / 3 * 9), 9])
    assert np.abs(orbit.final.to_array() - target).max() < 1e-3
    assert orbit.terminated_by == "completed"


def test_iterate_r18_converges():
    orbit = iterate(SystemParams(10, 8 / 3, 18, 0.0005), OrbitConfig(I0, 400_000, 100))
    assert np.abs(orbit.final.to_array() - np.array([-6.74, -6.74, 17])).max() < 1e-2


def test_iterate_real_r10():
    orbit = iterate_real(SystemParams(10, 8 / 3, 10, 0.0005), OrbitConfig(State3(0.1, 0.3, 1), 200_000, 100))
    assert np.abs(orbit.final.to_array() - np.array([4.899, 4.899, 9])).max() < 1e-3


def test_divergent_orbit_flagged():
    orbit = iterate(SystemParams(10, 8 / 3, -1 - 5j, 0.0005), OrbitConfig(I0, 2_000_000, 10))
    assert orbit.diverged
    k = orbit.diverged_at
    assert orbit.terminated_by == f"diverged({k})"
    assert orbit.ks[-1] < k
    assert np.isfinite(orbit.samples).all()
    assert np.abs(orbit.samples).max() <= 1e6


def test_sample_spacing():
    orbit = iterate(P5, OrbitConfig(I0, 1000, 7))
    assert orbit.ks[0] == 0
    assert (np.diff(orbit.ks) == 7).all()
    assert len(orbit) == 1000 // 7 + 1


def test_determinism():
    params = SystemParams(10, 8 / 3, 28, 0.0005)
    cfg = OrbitConfig(I0, 100_000, 10)
    assert orbit_to_csv(iterate(params, cfg)) == orbit_to_csv(iterate(params, cfg))


def test_csv_format():
    text = orbit_to_csv(iterate(P5, OrbitConfig(I0, 20, 10)))
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 4
    assert lines[1].split(",")[:3] == ["0", "0.10000000000000001", "0.20000000000000001"]


def test_nan_counts_as_divergence():
    params = SystemParams(10, 8 / 3, 28, 0.0005)
    orbit = iterate(params, OrbitConfig(State3(complex(float("nan"), 0), 0, 0), 10, 1))
    assert orbit.diverged_at == 1
