import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hst

from helpers import (
    chain_violations,
    decode_both,
    full_messages,
    layered_channel,
    layered_code,
    layout_sets,
    overlap_w1,
    transmit,
)
from polargp.bcsi import BcsiCode, BcsiMessages, common_code
from polargp.channels import make_bsc_pair, make_noiseless_binary, sample_transmission
from polargp.codec import SharedRandomness
from polargp.construction import InfeasiblePlan, PolarSets
from polargp.region import AuxStrategy

SR = SharedRandomness(0x5EED)


# ---------------------------------------------------------------- messages


@given(hst.integers(0, 8), hst.integers(0, 12), hst.integers(0, 12), hst.integers(0, 2**32 - 1))
def test_common_equivalent_is_xor_of_m100_and_m2(n0, extra, n2, seed):
    rng = np.random.default_rng(seed)
    msgs = BcsiMessages.random(rng, 3, n0, n2 + extra, n2)
    cm = msgs.common_equivalent()
    assert cm.shape == (3, n2 + n0)
    assert np.array_equal(cm[:, :n2] ^ msgs.m2, msgs.m100)
    assert np.array_equal(cm[:, n2:], msgs.m0)


def test_messages_require_r1_at_least_r2():
    with pytest.raises(InfeasiblePlan):
        BcsiMessages(np.zeros((1, 0)), np.zeros((1, 2)), np.zeros((1, 3)))


# ------------------------------------------------------------ common scheme


def _stateless(code_n=16, k=3, case="a"):
    ch = make_noiseless_binary()
    return common_code(ch, 0.5, code_n, k, sets=layout_sets(case, code_n)), ch


def test_common_rate_sums_match_set_arithmetic():
    n, k = 64, 5
    code, _ = _stateless(n, k)
    i1, i2 = code.sets.info(1), code.sets.info(2)
    both = len(np.intersect1d(i1, i2))
    assert code.receiver_bits(1) == (k - 1) * len(i1) + both
    assert code.receiver_bits(2) == (k - 1) * len(i2) + both


def test_equal_information_sets_give_independent_blocks():
    n = 16
    sets = PolarSets(n, np.arange(n), {1: np.arange(6, n), 2: np.arange(6, n)})
    code = common_code(make_noiseless_binary(), 0.5, n, 4, sets=sets)
    p = code.plan
    assert len(p.d1) == len(p.d2) == len(p.d10) == len(p.d11) == 0
    roles = {code.plan.roles(b).tobytes() for b in range(4)}
    assert len(roles) == 1


@pytest.mark.parametrize("n", [16, 64])
def test_common_noiseless_roundtrip(n):
    code, _ = _stateless(n, 3)
    rng = np.random.default_rng(n)
    msgs = full_messages(code, rng, 40, n0=2)
    frame, y1, y2 = transmit(code, msgs, SR, rng)
    d1, d2 = decode_both(code, msgs, y1, y2, SR)
    assert np.array_equal(d1.m0, msgs.m0) and np.array_equal(d2.m0, msgs.m0)
    assert np.array_equal(d1.private, msgs.m1)
    assert np.array_equal(d2.private, msgs.m2)
    assert not d1.failed.any() and not d2.failed.any()


def test_common_block_roles_follow_the_boundary_rules():
    code, _ = _stateless(16, 3)
    p = code.plan
    first, mid, last = (code.plan.roles(b) for b in range(3))
    from polargp.construction import Role

    assert np.all(first[p.d10] == Role.LAMBDA) and np.all(first[p.d11] == Role.LAMBDA)
    assert np.all(mid[p.d10] == Role.CHAIN) and np.all(mid[p.d11] == Role.PRIVATE)
    assert np.all(mid[p.d2] == Role.COMMON) and np.all(last[p.d2] == Role.LAMBDA)


def test_common_extra_private_bits_ride_in_common_slots():
    # both receivers see everything, yet R1 > R2 is reachable because receiver 2 knows M1
    n, k = 16, 3
    sets = PolarSets(n, np.arange(n), {1: np.arange(4, n), 2: np.arange(4, n)})
    code = common_code(make_noiseless_binary(), 0.5, n, k, sets=sets)
    rng = np.random.default_rng(3)
    msgs = BcsiMessages.random(rng, 5, 1, 20, 10)
    frame, y1, y2 = transmit(code, msgs, SR, rng)
    d1, d2 = decode_both(code, msgs, y1, y2, SR)
    assert np.array_equal(d1.private, msgs.m1) and np.array_equal(d2.private, msgs.m2)
    with pytest.raises(InfeasiblePlan):
        code.check_messages(1, 40, 10)


def test_corrupted_middle_block_flags_dependent_blocks():
    n, k = 16, 4
    code, ch = _stateless(n, k)
    rng = np.random.default_rng(11)
    msgs = full_messages(code, rng, 1)
    frame, y1, y2 = transmit(code, msgs, SR, rng)
    mid = 2
    # receiver 1 walks backward: the damage in block `mid` reaches blocks mid, mid-1, ..., 0
    y1 = y1.copy()
    y1[0, mid, 0] ^= 1  # only u_0 moves, and it is frozen
    d1 = code.decode(1, y1, msgs.m2, SR, 0, msgs.m1.shape[1])
    assert d1.block_failed[0].tolist() == [True] * (mid + 1) + [False] * (k - mid - 1)
    # receiver 2 walks forward
    y2 = y2.copy()
    y2[0, mid, 0] ^= 1
    d2 = code.decode(2, y2, msgs.m1, SR, 0, msgs.m2.shape[1])
    assert d2.block_failed[0].tolist() == [False] * mid + [True] * (k - mid)


def test_bsc_pair_moderate_rate_decodes():
    ch = make_bsc_pair(0.05, 0.1)
    n, k = 256, 4
    code = common_code(ch, 0.5, n, k, samples=800, seed=2, low_sizes={1: 110, 2: 70})
    rng = np.random.default_rng(4)
    n2 = code.common_slots()
    msgs = BcsiMessages.random(rng, 100, 0, n2 + code.private_slots(), n2)
    frame, y1, y2 = transmit(code, msgs, SR, rng)
    d1, d2 = decode_both(code, msgs, y1, y2, SR)
    assert np.mean(np.any(d1.private != msgs.m1, axis=1)) < 0.1
    assert np.mean(np.any(d2.private != msgs.m2, axis=1)) < 0.1


# ------------------------------------------------------------- state scheme


@pytest.mark.parametrize("case", ["a", "b"])
@pytest.mark.parametrize("n", [16, 64])
@pytest.mark.parametrize("layered", [True, False])
def test_state_noiseless_roundtrip_and_chain_integrity(case, n, layered):
    code = layered_code(case, n, k=3, v2=layered)
    assert code.plan.case == case
    assert code.t >= 1
    rng = np.random.default_rng(n + len(case))
    msgs = full_messages(code, rng, 30)
    frame, y1, y2 = transmit(code, msgs, SR, rng)
    assert chain_violations(code, frame, msgs, SR) == []
    d1, d2 = decode_both(code, msgs, y1, y2, SR)
    assert np.array_equal(d1.private, msgs.m1)
    assert np.array_equal(d2.private, msgs.m2)
    assert np.array_equal(d1.u1, frame.u1) and np.array_equal(d2.u1, frame.u1)


@pytest.mark.parametrize("n", [16, 64])
def test_case_b_xor_resolution(n):
    code = layered_code("b", n, k=4)
    p = code.plan
    rng = np.random.default_rng(7)
    msgs = full_messages(code, rng, 20)
    frame, y1, y2 = transmit(code, msgs, SR, rng)
    sel = np.isin(p.r2, p.overlap)
    d1, d2 = decode_both(code, msgs, y1, y2, SR)
    for b in range(code.k - 1):
        w1 = overlap_w1(code, msgs, SR, b)
        w2 = frame.u1[:, b + 1][:, p.fr2][:, sel]
        mixed = frame.u1[:, b][:, p.overlap]
        assert np.array_equal(mixed ^ w1, w2)
        assert np.array_equal(mixed ^ w2, w1)
        # each receiver's reconstruction from its own decoded copy
        assert np.array_equal(d2.u1[:, b][:, p.overlap] ^ w1, w2)
        assert np.array_equal(d1.u1[:, b][:, p.overlap] ^ d1.u1[:, b + 1][:, p.fr2][:, sel], w1)


def test_case_classifier_matches_spill():
    n = 16
    a = layered_code("a", n).plan
    b = layered_code("b", n).plan
    assert a.case == "a" and len(a.overlap) == 0
    # in case a the chains avoid the opposite receiver's information set
    sets = layout_sets("a", n)
    assert not np.intersect1d(a.r1, sets.info(2)).size
    assert not np.intersect1d(np.setdiff1d(a.r2, a.overlap), sets.info(1)).size
    assert b.case == "b" and len(b.overlap) == len(b.fr2)


def test_degenerate_v2_matches_common_scheme_bit_for_bit():
    ch = make_bsc_pair(0.05, 0.1)
    n, k = 64, 4
    st = AuxStrategy.single([[0.5, 0.5]], [[0], [1]])
    cache = {}
    low = {1: 40, 2: 26}
    state = BcsiCode.build(ch, st, n, k, scheme="bcsi-state", samples=300, seed=3, low_sizes=low, cache=cache)
    common = common_code(ch, 0.5, n, k, samples=300, seed=3, low_sizes=low, cache=cache)
    assert state.t == common.t == 0
    rng = np.random.default_rng(0)
    msgs = full_messages(common, rng, 10, n0=3)
    states = np.zeros((10, k, n), dtype=np.intp)
    fa = state.encode(msgs, states, SR)
    fb = common.encode(msgs, states, SR)
    assert np.array_equal(fa.x, fb.x) and np.array_equal(fa.u1, fb.u1)


def test_genie_chain_bits_never_hurt():
    ch = layered_channel()
    code = layered_code("b", 64, k=3)
    rng = np.random.default_rng(1)
    msgs = full_messages(code, rng, 20)
    frame, y1, y2 = transmit(code, msgs, SR, rng)
    # corrupt receiver 1's pre-phase: the genie copy still decodes
    y1 = y1.copy()
    y1[:, -1] = (y1[:, -1] + 1) % 4
    tail = np.concatenate([frame.u1[:, -1][:, code.plan.fr1], frame.u2[:, -1][:, code.plan2.f_r]], axis=1)
    genie = code.decode(1, y1, msgs.m2, SR, 0, msgs.m1.shape[1], genie_fr=tail)
    full = code.decode(1, y1, msgs.m2, SR, 0, msgs.m1.shape[1])
    genie_err = np.any(genie.private != msgs.m1, axis=1)
    full_err = np.any(full.private != msgs.m1, axis=1)
    assert not genie_err.any()
    assert np.all(genie_err <= full_err)
    assert ch.name == "layered-noiseless"


def test_frame_trace_is_json():
    code = layered_code("a", 16)
    rng = np.random.default_rng(0)
    msgs = full_messages(code, rng, 1)
    frame, _, _ = transmit(code, msgs, SR, rng)
    trace = json.loads(json.dumps(frame.trace(code)))
    assert len(trace["blocks"]) == code.k
    assert trace["blocks"][1]["u1"] == frame.u1[0, 1].tolist()
    assert "u2" in trace["blocks"][0]
    assert trace["plan"]["case"] == "a"


def test_unsupported_strategy_rejected():
    ch = layered_channel()
    st = AuxStrategy(np.full((2, 3), 1 / 3), np.ones((3, 2, 1)), np.zeros((3, 1, 2), dtype=int))
    with pytest.raises(ValueError):
        BcsiCode.build(ch, st, 16, 3, sets=layout_sets("a", 16))


def test_wrong_state_shape_rejected():
    code = layered_code("a", 16)
    msgs = full_messages(code, np.random.default_rng(0), 2)
    with pytest.raises(ValueError):
        code.encode(msgs, np.zeros((2, code.k, 16), dtype=int), SR)


def test_sample_transmission_used_for_noiseless_outputs():
    ch = layered_channel()
    x = np.arange(4).reshape(1, 4)
    y1, y2 = sample_transmission(ch, x, np.zeros_like(x), np.random.default_rng(0))
    assert y1.tolist() == [[0, 1, 2, 3]] and y2.tolist() == [[0, 0, 1, 1]]
