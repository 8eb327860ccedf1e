import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hst

from polargp.channels import (
    PRESETS,
    StateChannel,
    channel_from_config,
    check_degraded,
    make_bsc,
    make_bsc_interference,
    make_bsc_pair,
    make_noiseless_binary,
    make_stuck_memory,
    sample_states,
    sample_transmission,
)


def test_zero_noise_zero_state_is_identity():
    ch = make_bsc_interference(0.0, 0.0, 0.0)
    x = np.array([[0, 1, 1, 0]])
    y1, y2 = sample_transmission(ch, x, np.zeros_like(x), 0)
    assert np.array_equal(y1, x) and np.array_equal(y2, x)


def test_interference_flips_with_state():
    ch = make_bsc_interference(0.0, 0.0, 0.5)
    x = np.array([0, 1, 0, 1])
    s = np.array([0, 0, 1, 1])
    y1, _ = sample_transmission(ch, x, s, 0)
    assert y1.tolist() == [0, 1, 1, 0]


def test_stuck_memory_outputs():
    ch = make_stuck_memory(0.2)
    assert ch.p_s.tolist() == pytest.approx([0.8, 0.05, 0.05, 0.05, 0.05])
    x = np.array([0, 1, 2, 3, 0, 3])   # indices of {1, 2, 3, 4}
    s = np.array([0, 0, 0, 0, 2, 1])   # states 0, 0, 0, 0, 2, 1
    y1, y2 = sample_transmission(ch, x, s, 0)
    assert y1.tolist() == [0, 1, 2, 3, 1, 0]
    assert y2.tolist() == [0, 0, 1, 1, 0, 0]
    clean = make_stuck_memory(0.0)
    assert clean.p_s[0] == 1.0


@pytest.mark.parametrize("factory,args", [
    (make_bsc_interference, (0.6, 0.1)), (make_bsc_interference, (0.1, 0.1, 1.5)), (make_stuck_memory, (1.2,)),
])
def test_parameter_ranges(factory, args):
    with pytest.raises(ValueError):
        factory(*args)


def test_rows_must_normalize():
    t = np.zeros((2, 1, 2, 2))
    t[0, 0, 0, 0] = 1.0
    t[1, 0, 1, 1] = 0.9
    with pytest.raises(ValueError):
        StateChannel((0, 1), (0,), (0, 1), (0, 1), np.array([1.0]), t)


def test_every_preset_normalizes():
    for ch in (make_bsc_interference(0.05, 0.1), make_stuck_memory(0.3), make_noiseless_binary(),
               make_bsc(0.2), make_bsc_pair(0.05, 0.1)):
        sums = ch.transition.sum(axis=(2, 3))
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)


def test_json_round_trip_and_presets():
    ch = make_stuck_memory(0.2)
    back = StateChannel.from_dict(json.loads(ch.to_json()))
    assert np.array_equal(back.transition, ch.transition) and back.y1_alphabet == ch.y1_alphabet
    assert channel_from_config({"preset": "bsc-interference", "p1": 0.05, "p2": 0.1}).name == "bsc-interference"
    assert set(PRESETS) >= {"bsc-interference", "stuck-memory"}
    with pytest.raises(ValueError):
        channel_from_config({"preset": "gaussian"})


def test_sampling_is_reproducible():
    ch = make_bsc_interference(0.05, 0.1)
    x = np.random.default_rng(0).integers(0, 2, (3, 64))
    s = sample_states(ch, x.shape, 4)
    assert np.array_equal(s, sample_states(ch, x.shape, 4))
    a = sample_transmission(ch, x, s, 11)
    b = sample_transmission(ch, x, s, 11)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_empirical_transition_frequencies():
    ch = make_bsc_interference(0.05, 0.1, 0.5)
    rng = np.random.default_rng(8)
    n = 1_000_000
    x = rng.integers(0, 2, n)
    s = rng.integers(0, 2, n)
    y1, y2 = sample_transmission(ch, x, s, rng)
    for xi in range(2):
        for si in range(2):
            sel = (x == xi) & (s == si)
            counts = np.bincount(y1[sel] * 2 + y2[sel], minlength=4)
            p = ch.transition[xi, si].reshape(-1)
            sigma = np.sqrt(sel.sum() * p * (1 - p))
            assert np.all(np.abs(counts - sel.sum() * p) <= 3 * sigma + 1e-9)


def test_alphabet_violation_rejected():
    ch = make_bsc_interference(0.05, 0.1)
    with pytest.raises(ValueError):
        sample_transmission(ch, np.array([2]), np.array([0]), 0)
    with pytest.raises(ValueError):
        sample_transmission(ch, np.array([1]), np.array([3]), 0)


# ---------------------------------------------------------- degradedness


def test_bsc_pair_witness_crossover():
    w = check_degraded(make_bsc_interference(0.05, 0.1, 0.5))
    assert w is not None
    expected = (0.1 - 0.05) / (1 - 2 * 0.05)
    assert w.table[0, 1] == pytest.approx(expected, abs=1e-6)
    assert w.table[0, 1] == pytest.approx(0.0556, abs=5e-5)
    assert json.loads(json.dumps(w.to_dict()))


def test_reversed_pair_is_not_degraded():
    assert check_degraded(make_bsc_interference(0.05, 0.1, 0.5).swapped()) is None


def test_independent_strong_receiver_is_not_degraded():
    t = np.zeros((2, 1, 2, 2))
    for x in range(2):
        t[x, 0, :, x] = 0.5   # y2 = x, y1 a fair coin
    ch = StateChannel((0, 1), (0,), (0, 1), (0, 1), np.array([1.0]), t)
    assert check_degraded(ch) is None


@given(hst.floats(0, 1))
def test_stuck_memory_is_always_degraded(p):
    w = check_degraded(make_stuck_memory(p))
    assert w is not None
    # the witness is the deterministic blur {1, 2} -> 0, {3, 4} -> 1
    np.testing.assert_allclose(w.table, [[1, 0], [1, 0], [0, 1], [0, 1]], atol=1e-9)


def test_witness_composes_to_the_weak_channel():
    ch = make_bsc_pair(0.02, 0.2)
    w = check_degraded(ch)
    composed = np.einsum("xsa,ab->xsb", ch.marginal(1), w.table)
    np.testing.assert_allclose(composed, ch.marginal(2), atol=1e-9)
