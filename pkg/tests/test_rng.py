import numpy as np
import pytest

from src.utils.errors import ContractError
from src.utils.rng import ExpRate, RngStream, exp_from_uniform, make_stream, sample_exp


def test_same_key_reproduces_stream():
    a = make_stream(42, 3, 1).uniform(100)
    b = make_stream(42, 3, 1).uniform(100)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("other", [(43, 3, 1), (42, 4, 1), (42, 3, 2)])
def test_any_key_component_changes_stream(other):
    a = make_stream(42, 3, 1).uniform(16)
    b = make_stream(*other).uniform(16)
    assert not np.array_equal(a, b)


def test_children_are_distinct_and_reproducible():
    parent = make_stream(7, 0)
    assert np.array_equal(parent.child(1).uniform(8), make_stream(7, 0).child(1).uniform(8))
    assert not np.array_equal(parent.child(1).uniform(8), parent.child(2).uniform(8))


def test_child_does_not_consume_parent():
    a = make_stream(7, 0)
    a.child(5).uniform(1000)
    assert np.array_equal(a.uniform(4), make_stream(7, 0).uniform(4))


def test_exponential_mean_matches_rate():
    samples = make_stream(1, 0).exponential(0.25, size=200_000)
    assert np.all(samples >= 0)
    assert abs(samples.mean() - 4.0) < 5 * 4.0 / np.sqrt(samples.size)


def test_exp_from_uniform_is_inverse_cdf():
    u = np.array([0.0, 0.5, 1 - np.exp(-2.0)])
    assert np.allclose(exp_from_uniform(u, 2.0), [0.0, np.log(2.0) / 2.0, 1.0])


def test_scalar_draw_is_float():
    value = make_stream(3, 0).exponential(1.0)
    assert isinstance(value, float)
    assert isinstance(sample_exp(make_stream(3, 0), ExpRate(1.0)), float)
    assert value == sample_exp(make_stream(3, 0), ExpRate(1.0))


@pytest.mark.parametrize("rate", [0.0, -1.0])
def test_rate_must_be_positive(rate):
    with pytest.raises(ContractError):
        ExpRate(rate)


def test_seed_must_fit_u64():
    RngStream(2**64 - 1, 0)
    with pytest.raises(ContractError, match="64-bit"):
        RngStream(2**64, 0)
    with pytest.raises(ContractError):
        RngStream(-1, 0)
