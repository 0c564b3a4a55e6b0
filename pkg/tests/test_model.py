import math

import pytest
from hypothesis import given, strategies as st

from stochlv.errors import CriticalCase, DegenerateNoise, MixedModeUnsupported, NonPositiveCoefficient, ValidationError
from stochlv.model import (
    EXAMPLE_1,
    EXAMPLE_2,
    EXAMPLE_3,
    DeterministicCase,
    ModelParams,
    NoiseMode,
    classify_deterministic,
    validate_params,
)

pos = st.floats(0.1, 10.0)
noise = st.floats(0.0, 3.0)


@st.composite
def quadratic_params(draw):
    return ModelParams(*(draw(pos) for _ in range(6)), *(draw(st.floats(0.05, 3.0)) for _ in range(4)))


def test_json_round_trip():
    data = EXAMPLE_2.to_json()
    assert ModelParams.from_json(data) == EXAMPLE_2
    assert data["gamma"] == [0.0, 0.0]


def test_noise_pairs_default_to_zero():
    p = ModelParams.from_json({"a": [1, 2], "b": [1, 1], "c": [0.5, 0.5]})
    assert p.mode is NoiseMode.DETERMINISTIC


@pytest.mark.parametrize("data,field", [
    ({"a": [1, 2], "b": [1, 1]}, None),
    ({"a": [1, 2, 3], "b": [1, 1], "c": [1, 1]}, "a"),
    ({"a": [1, "x"], "b": [1, 1], "c": [1, 1]}, "a2"),
])
def test_malformed_json(data, field):
    with pytest.raises(ValidationError) as info:
        ModelParams.from_json(data)
    assert info.value.field == field


@pytest.mark.parametrize("name", ["a1", "b2", "c1"])
def test_nonpositive_rate_names_field(name):
    kw = {**EXAMPLE_1.__dict__, name: 0.0}
    with pytest.raises(NonPositiveCoefficient) as info:
        validate_params(ModelParams(**kw))
    assert info.value.field == name
    assert name in str(info.value)


def test_mixed_noise_rejected():
    p = ModelParams(1, 1, 1, 1, 1, 1, alpha1=1, alpha2=1, gamma1=0.5)
    assert p.mode is NoiseMode.GENERAL
    with pytest.raises(MixedModeUnsupported):
        validate_params(p)


def test_degenerate_noise():
    with pytest.raises(DegenerateNoise) as info:
        validate_params(ModelParams(1, 1, 1, 1, 1, 1, alpha1=1.0, beta1=0.3))
    assert info.value.species == 2
    with pytest.raises(DegenerateNoise):
        validate_params(ModelParams(1, 1, 1, 1, 1, 1))
    validate_params(ModelParams(1, 1, 1, 1, 1, 1), deterministic=True)


def test_infinite_noise_rejected():
    with pytest.raises(ValidationError):
        validate_params(ModelParams(1, 1, 1, 1, 1, 1, alpha1=math.inf, alpha2=1))


def test_example_deterministic_cases():
    r1 = classify_deterministic(EXAMPLE_1)
    assert r1.case_id is DeterministicCase.COEXIST
    assert r1.equilibrium == pytest.approx((1.0, 2.5), abs=1e-15)
    assert r1.lambda1_det == pytest.approx(3 - 0.5 * 4 / 1.5)
    assert classify_deterministic(EXAMPLE_3).case_id is DeterministicCase.BISTABLE
    # a1 - c1 a2 / b2 = 4 - 2 * 2 / 1 vanishes: the noise-free system is critical
    with pytest.raises(CriticalCase):
        classify_deterministic(EXAMPLE_2)


def test_deterministic_critical():
    p = ModelParams(a1=2, a2=1, b1=2, b2=1, c1=2, c2=1)
    with pytest.raises(CriticalCase):
        classify_deterministic(p)


@given(quadratic_params())
def test_swap_is_involution(p):
    assert p.swap_species().swap_species() == p


@given(quadratic_params())
def test_deterministic_swap_symmetry(p):
    try:
        r = classify_deterministic(p)
    except CriticalCase:
        return
    s = classify_deterministic(p.swap_species())
    assert (s.lambda1_det, s.lambda2_det) == (r.lambda2_det, r.lambda1_det)
    mirror = {DeterministicCase.X_WINS: DeterministicCase.Y_WINS, DeterministicCase.Y_WINS: DeterministicCase.X_WINS}
    assert s.case_id == mirror.get(r.case_id, r.case_id)


@given(quadratic_params())
def test_coexistence_equilibrium_is_fixed_point(p):
    try:
        r = classify_deterministic(p)
    except CriticalCase:
        return
    if r.case_id is not DeterministicCase.COEXIST:
        return
    x, y = r.equilibrium
    assert x > 0 and y > 0
    assert p.a1 - p.b1 * x - p.c1 * y == pytest.approx(0.0, abs=1e-9 * (1 + p.a1))
    assert p.a2 - p.b2 * y - p.c2 * x == pytest.approx(0.0, abs=1e-9 * (1 + p.a2))
