import numpy as np
import pytest

from lorenz_dcx.classifier import (
    ClassifierTolerances,
    InsufficientData,
    RegimeLabel,
    classify,
    coexisting_attractors,
    detect_period,
    fingerprint,
    finite_time_signature,
    parse_label,
    short_complex,
)
from lorenz_dcx.lorenz_map import Orbit, apply_symmetry, iterate
from lorenz_dcx.lyapunov import spectrum
from lorenz_dcx.types import OrbitConfig, State3, SystemParams

I0 = State3(0.1 + 0.2j, 0.3 + 0.4j, 1 + 2j)


def synthetic_orbit(samples, stride=1):
    samples = np.asarray(samples, dtype=np.complex128)
    n = len(samples)
    cfg = OrbitConfig(State3.from_array(samples[0]), (n - 1) * stride, stride)
    return Orbit(SystemParams(1, 1, 1, 0.001), np.arange(n) * stride, samples, None, cfg)


def cycle(period, n):
    base = np.exp(2j * np.pi * np.arange(period) / period)
    ring = np.column_stack([base, 2 * base, 3 + 0 * base])
    return ring[np.arange(n) % period]


def test_detect_period_seven_cycle():
    assert detect_period(cycle(7, 300), p_max=100) == 7


def test_detect_period_constant():
    assert detect_period(np.ones((30, 3), dtype=complex), p_max=10) == 1


def test_detect_period_none():
    rng = np.random.default_rng(0)
    assert detect_period(rng.normal(size=(300, 3)) + 0j, p_max=100) is None


def test_detect_period_short_tail():
    with pytest.raises(ValueError):
        detect_period(cycle(7, 299), p_max=100)


def test_detect_period_accepts_states():
    states = [State3(*row) for row in cycle(3, 30)]
    assert detect_period(states, p_max=10) == 3


def test_classify_synthetic_cycle_scales_by_stride():
    label = classify(synthetic_orbit(cycle(7, 20_000), stride=10))
    assert label.kind == "periodic" and label.period == 70
    assert str(label) == "periodic(70)"


def test_classify_constant_converges():
    label = classify(synthetic_orbit(np.tile([1, 2, 3j], (20_000, 1))))
    assert str(label) == "converges_to(1,2,3i)"


def test_classify_insufficient_data():
    with pytest.raises(InsufficientData):
        classify(synthetic_orbit(cycle(7, 9_999)))


def test_classify_divergent():
    orbit = iterate(SystemParams(10, 8 / 3, -1 - 5j, 0.0005), OrbitConfig(I0, 2_000_000, 10))
    label = classify(orbit)
    assert label.kind == "divergent"
    assert label.divergence_step == orbit.diverged_at
    assert str(label) == f"divergent({orbit.diverged_at})"


@pytest.fixture(scope="module")
def r3_run():
    params = SystemParams(10, 8 / 3, 3, 0.0005)
    cfg = OrbitConfig(I0, 2_000_000, 10)
    orbit = iterate(params, cfg)
    return params, orbit, classify(orbit, spectrum(params, OrbitConfig(I0, 2_000_000, 1)))


def test_r3_converges(r3_run):
    _, _, label = r3_run
    assert label.kind == "converges_to"
    expected = [np.sqrt(8 / 3 * 2), np.sqrt(8 / 3 * 2), 2]
    assert np.abs(label.target.to_array() - expected).max() < 1e-4
    assert abs(label.target.x - 2.3094) < 1e-4


def test_symmetry_consistency(r3_run):
    params, _, label = r3_run
    cfg = OrbitConfig(apply_symmetry(I0), 2_000_000, 10)
    mirror = classify(iterate(params, cfg), spectrum(params, OrbitConfig(apply_symmetry(I0), 2_000_000, 1)))
    assert mirror.kind == label.kind
    assert np.abs(mirror.target.to_array() - apply_symmetry(label.target).to_array()).max() < 1e-9


def test_fingerprint_stable_across_strides():
    params = SystemParams(10, 8 / 3, 3, 0.0005)
    tol = ClassifierTolerances()
    prints = []
    for stride in (1, 10):
        orbit = iterate(params, OrbitConfig(I0, 2_000_000, stride))
        prints.append(fingerprint(orbit, classify(orbit), tol))
    assert prints[0].kind == "sink"
    assert prints[0].same_attractor(prints[1], tol)


def test_table4_row3_two_attractors():
    params = SystemParams(0.256, -0.3, 0, 0.0005)
    s0 = State3(-0.1, 0.1, -2)
    groups = coexisting_attractors(params, [s0, apply_symmetry(s0)], OrbitConfig(s0, 2_000_000, 10))
    assert len(groups) == 2
    assert [g["members"] for g in groups] == [[0], [1]]


def test_coexisting_needs_two():
    with pytest.raises(ValueError):
        coexisting_attractors(SystemParams(10, 8 / 3, 3, 0.0005), [I0], OrbitConfig(I0, 1000, 1))


@pytest.mark.parametrize(
    "text",
    ["converges_to(4.899,4.899,9)", "periodic(7)", "chaotic", "quasi_periodic", "divergent(173036)", "transient_chaos"],
)
def test_parse_label_round_trip(text):
    assert str(parse_label(text)) == text


def test_parse_label_complex_target():
    label = parse_label("converges_to(2.176-0.0004i, 0.0036i, 9)")
    assert label.target == State3(2.176 - 0.0004j, 0.0036j, 9)


@pytest.mark.parametrize("bad", ["spiral", "periodic(x)", "converges_to(1,2)", "chaotic(3)", "periodic(7"])
def test_parse_label_rejects(bad):
    with pytest.raises(ValueError):
        parse_label(bad)


def test_regime_label_unknown_kind():
    with pytest.raises(ValueError):
        RegimeLabel("strange")


def test_short_complex():
    assert short_complex(2.17601 - 0.00041j) == "2.176-0.0004i"
    assert short_complex(9 + 0j) == "9"
    assert short_complex(0.0036j) == "0.0036i"
    assert short_complex(-0.00001 + 0j) == "0"


def test_finite_time_signature():
    pos, neg = 1e-3, -1e-3
    assert finite_time_signature([]) == "empty"
    assert finite_time_signature([(k, neg) for k in range(8)]) == "all_negative"
    assert finite_time_signature([(k, pos) for k in range(8)]) == "all_positive"
    assert finite_time_signature(list(enumerate([pos, pos, neg, neg, neg, neg, neg, neg]))) == "positive_then_negative"
    assert finite_time_signature(list(enumerate([pos, neg, neg, neg, neg, neg, neg, neg]))) == "mixed"
    assert finite_time_signature(list(enumerate([pos, neg, neg, neg]))) == "mixed"
    assert finite_time_signature(list(enumerate([pos, neg, neg, neg])), min_positive_windows=1) == "positive_then_negative"


def test_tolerances_json():
    doc = ClassifierTolerances().to_json()
    assert doc["p_max"] == 50_000 and doc["min_positive_windows"] == 2
