"""Hand-made layouts and frame checks shared by the structural tests."""

from __future__ import annotations

import numpy as np

from polargp.bcsi import BcsiCode, BcsiMessages
from polargp.channels import StateChannel, sample_states, sample_transmission
from polargp.construction import PolarSets
from polargp.region import AuxStrategy

# Layouts on 16 "cells"; at n = 16 q every cell is a run of q indices.
#   case a: |F1r| = |F2r| = 2, I2 - I1 = {13, 14, 15} so D2 = {13} and D10 = {4}
#   case b: I2 is inside I1, so all of F2r spills into I1 & I2 (overlap O = {14, 15})
LAYOUTS = {
    "a": dict(high=range(4, 16), low1=range(2, 13), low2=[0, 1, *range(8, 16)]),
    "b": dict(high=range(4, 16), low1=range(2, 16), low2=[0, 1, *range(8, 16)]),
}
LAYER2 = dict(high=range(4, 16), low1=range(2, 16))


def cells(idx, q: int) -> np.ndarray:
    return np.array([c * q + r for c in idx for r in range(q)], dtype=np.intp)


def layout_sets(case: str, n: int) -> PolarSets:
    q = n // 16
    lay = LAYOUTS[case]
    return PolarSets(n, cells(lay["high"], q), {1: cells(lay["low1"], q), 2: cells(lay["low2"], q)})


def layer2_sets(n: int) -> PolarSets:
    q = n // 16
    return PolarSets(n, cells(LAYER2["high"], q), {1: cells(LAYER2["low1"], q)})


def layered_channel() -> StateChannel:
    """Noiseless: Y1 = X in {0..3} reveals (v1, v2), Y2 = X // 2 reveals v1; the state only shapes the input law."""
    t = np.zeros((4, 2, 4, 2))
    for x in range(4):
        t[x, :, x, x // 2] = 1.0
    return StateChannel((0, 1, 2, 3), (0, 1), (0, 1, 2, 3), (0, 1), np.array([0.6, 0.4]), t, name="layered-noiseless")


def layered_strategy(v2: bool = True) -> AuxStrategy:
    p_v1_s = np.array([[0.7, 0.3], [0.25, 0.75]])
    if not v2:
        return AuxStrategy.single(p_v1_s, [[0, 0], [2, 2]])
    p_v2 = np.array([[[0.8, 0.2], [0.4, 0.6]], [[0.5, 0.5], [0.1, 0.9]]])
    f = np.array([[[0, 0], [1, 1]], [[2, 2], [3, 3]]])
    return AuxStrategy(p_v1_s, p_v2, f)


def layered_code(case: str, n: int, k: int = 3, v2: bool = True) -> BcsiCode:
    ch = layered_channel()
    return BcsiCode.build(
        ch, layered_strategy(v2), n, k, samples=200, seed=1,
        sets=layout_sets(case, n), sets2=layer2_sets(n) if v2 else None,
    )


def full_messages(code: BcsiCode, rng, batch: int, n0: int = 0) -> BcsiMessages:
    """Messages filling every slot: M2 takes what is left of the common stream."""
    n2 = code.common_slots() - n0
    n1 = n2 + code.private_slots() + code.layer2_slots()
    return BcsiMessages.random(rng, batch, n0, n1, n2)


def transmit(code: BcsiCode, msgs: BcsiMessages, sr, rng):
    ch = code.channel
    states = sample_states(ch, (msgs.batch, code.blocks, code.n), rng)
    frame = code.encode(msgs, states, sr)
    y1, y2 = sample_transmission(ch, frame.x, states, rng)
    return frame, y1, y2


def decode_both(code: BcsiCode, msgs: BcsiMessages, y1, y2, sr):
    n0 = msgs.m0.shape[1]
    d1 = code.decode(1, y1, msgs.m2, sr, n0, msgs.m1.shape[1])
    d2 = code.decode(2, y2, msgs.m1, sr, n0, msgs.m2.shape[1])
    return d1, d2


def chain_violations(code: BcsiCode, frame, msgs: BcsiMessages, sr) -> list[str]:
    """Every copy the layout promises, checked bit for bit on an encoded frame."""
    p, u, k = code.plan, frame.u1, code.k
    bad = []
    for b in range(1, k):
        if not np.array_equal(u[:, b][:, p.r1], u[:, b - 1][:, p.fr1]):
            bad.append(f"R1 of block {b} differs from F1r of block {b - 1}")
        if not np.array_equal(u[:, b][:, p.d10], u[:, b - 1][:, p.d2]):
            bad.append(f"D10 of block {b} differs from D2 of block {b - 1}")
    plain = np.setdiff1d(p.r2, p.overlap)
    sel = np.isin(p.r2, plain)
    for b in range(k - 1):
        nxt = u[:, b + 1][:, p.fr2]
        if not np.array_equal(u[:, b][:, plain], nxt[:, sel]):
            bad.append(f"R2 of block {b} differs from F2r of block {b + 1}")
    for b in range(k - 1):
        w1 = overlap_w1(code, msgs, sr, b)
        w2 = u[:, b + 1][:, p.fr2][:, ~sel]
        if not np.array_equal(u[:, b][:, p.overlap], w1 ^ w2):
            bad.append(f"overlap of block {b} is not W1 xor W2")
    if code.layered:
        p2 = code.plan2
        for b in range(1, k):
            if not np.array_equal(frame.u2[:, b][:, p2.chain], frame.u2[:, b - 1][:, p2.f_r]):
                bad.append(f"layer-2 chain of block {b} differs from F11r of block {b - 1}")
    return bad


def overlap_w1(code: BcsiCode, msgs: BcsiMessages, sr, b: int) -> np.ndarray:
    """The receiver-1 half W1 of the overlap in payload block b."""
    p = code.plan
    if b == 0:
        gam = sr.gamma_bits("u1", 0, code.n)[p.overlap]
        return np.broadcast_to(gam, (msgs.batch, len(p.overlap)))
    _, m101, _ = code._streams(msgs, sr)
    _, _, ov, off = code._private_chunks()[b]
    return m101[:, off:off + len(ov)]
