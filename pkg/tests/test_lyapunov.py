import numpy as np
import pytest

from lorenz_dcx.equilibria import eigenvalues3, fixed_points, map_derivative_at
from lorenz_dcx.lyapunov import (
    DivergentOrbit,
    LyapunovSettings,
    finite_time_largest,
    real_representation,
    sign_verdict,
    spectrum,
    tangent_step,
)
from lorenz_dcx.types import OrbitConfig, State3, SystemParams

I0 = State3(0.1 + 0.2j, 0.3 + 0.4j, 1 + 2j)
IR = State3(0.1, 0.3, 1)


def params(r, a=10, b=8 / 3, dt=0.0005):
    return SystemParams(a, b, r, dt)


@pytest.fixture(scope="module")
def sink_r10():
    return spectrum(params(10), OrbitConfig(I0, 2_000_000, 1))


@pytest.fixture(scope="module")
def chaotic_r28():
    return spectrum(params(28), OrbitConfig(IR, 2_000_000, 1))


@pytest.fixture(scope="module")
def a_zero():
    return spectrum(SystemParams(0, 8 / 3, 28, 0.0005), OrbitConfig(I0, 2_000_000, 1))


def test_real_representation_acts_like_complex():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    w = m @ v
    flat = np.column_stack([v.real, v.imag]).ravel()
    out = real_representation(m) @ flat
    assert np.allclose(out[0::2], w.real) and np.allclose(out[1::2], w.imag)
    assert np.isclose(np.linalg.det(real_representation(m)), abs(np.linalg.det(m)) ** 2)


def test_tangent_step_zero():
    assert not tangent_step(params(28), I0, np.zeros(6)).any()


def test_tangent_step_a_zero_x_subspace():
    p = SystemParams(0, 8 / 3, 28, 0.0005)
    for v in (np.array([1.0, 0, 0, 0, 0, 0]), np.array([0, 1.0, 0, 0, 0, 0])):
        out = tangent_step(p, I0, v)
        assert out[0:2].tolist() == v[0:2].tolist()


def test_tangent_step_stretch_at_fixed_point():
    p = params(10)
    fp = fixed_points(p)[2]
    d = map_derivative_at(p, fp)
    lam = eigenvalues3(d)[0]
    w, vecs = np.linalg.eig(d)
    vec = vecs[:, int(np.argmin(np.abs(w - lam)))]
    flat = np.column_stack([vec.real, vec.imag]).ravel()
    out = tangent_step(p, fp, flat)
    assert np.linalg.norm(out) / np.linalg.norm(flat) == pytest.approx(abs(lam), abs=1e-12)


def test_sink_exponents_negative(sink_r10):
    assert sink_r10.largest < 0
    assert sink_r10.verdict == "negative"
    assert list(sink_r10.exponents) == sorted(sink_r10.exponents, reverse=True)


def test_sink_pairing(sink_r10):
    p = params(10)
    logs = sorted((np.log(abs(v)) for v in eigenvalues3(map_derivative_at(p, fixed_points(p)[2]))), reverse=True)
    for (e1, e2), ref in zip(sink_r10.pairs, logs):
        assert abs(e1 - e2) < 1e-4
        assert abs(e1 - ref) < 1e-4 and abs(e2 - ref) < 1e-4


def test_chaotic_positive(chaotic_r28):
    assert chaotic_r28.largest > 5e-6
    assert chaotic_r28.verdict == "positive"


@pytest.mark.parametrize("fixture", ["sink_r10", "chaotic_r28", "a_zero"])
def test_log_det_identity(fixture, request):
    est = request.getfixturevalue(fixture)
    assert abs(sum(est.exponents) - est.mean_log_det) < 1e-3


def test_a_zero_neutral(a_zero):
    assert min(abs(e) for e in a_zero.exponents) < 1e-6


@pytest.mark.slow
def test_interval_independence():
    cfg = OrbitConfig(IR, 2_000_000, 1)
    vals = [spectrum(params(26), cfg, LyapunovSettings(interval=k)).largest for k in (5, 10, 20)]
    assert max(vals) - min(vals) < 2e-3


@pytest.mark.slow
@pytest.mark.parametrize("r,s0", [(10, I0), (18, I0), (22.35, I0), (10, IR), (18, IR), (22.35, IR), (26, IR), (28, IR)])
def test_sign_stability(r, s0):
    a = spectrum(params(r), OrbitConfig(s0, 2_000_000, 1))
    b = spectrum(params(r), OrbitConfig(s0, 4_000_000, 1))
    assert a.verdict == b.verdict


def test_divergent_raises():
    with pytest.raises(DivergentOrbit) as info:
        spectrum(params(-1 - 5j), OrbitConfig(I0, 400_000, 1))
    assert info.value.step == 173036
    assert info.value.during_burn_in is False


def test_too_short():
    with pytest.raises(ValueError):
        spectrum(params(10), OrbitConfig(I0, 50, 1))


def test_finite_time_window_minimum():
    with pytest.raises(ValueError):
        finite_time_largest(params(10), OrbitConfig(I0, 100_000, 1), window=999)


def test_finite_time_sink_negative_after_burn_in():
    cfg = OrbitConfig(I0, 2_000_000, 1)
    series = finite_time_largest(params(2), cfg, window=50_000)
    assert [k for k, _ in series][:3] == [0, 50_000, 100_000]
    assert all(v < 0 for k, v in series if k >= 400_000)


def test_settings_resolve():
    s = LyapunovSettings().resolve(2_000_000)
    assert s.burn_in == 400_000 and s.interval == 10 and s.window == 50_000


def test_sign_verdict_thresholds():
    assert sign_verdict(1e-5, 1e-6) == "positive"
    assert sign_verdict(1e-5, 4e-6) == "neutral"
    assert sign_verdict(4e-6) == "neutral"
    assert sign_verdict(-6e-6) == "negative"


def test_deterministic(sink_r10):
    again = spectrum(params(10), OrbitConfig(I0, 2_000_000, 1))
    assert again.exponents == sink_r10.exponents
    assert again.finite_time_series == sink_r10.finite_time_series
