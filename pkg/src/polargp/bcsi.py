"""
Broadcast codes for receivers that know each other's private message.

Both schemes share one layer-1 engine. The equivalent common message
``M'0 = (M100 xor M2, M0)`` occupies the positions both receivers decode;
positions only receiver 2 decodes (D2) are forwarded to receiver 1 through
D10 of the next block, and positions only receiver 1 decodes (D1 minus D10)
carry M101, which receiver 2 already knows.

With a state known at the encoder, each receiver also needs the frozen bits
it cannot decode (F_r): receiver 1's chain R1 runs forward (block b carries
F1r of block b-1) and receiver 2's chain R2 runs backward (block b carries
F2r of block b+1). When R2 does not fit in I2 - I1, the spill-over positions
O carry the XOR of M101 bits and R2 content. Receiver 2 is bootstrapped by a
causal pre-phase sent before the payload blocks and receiver 1 by one sent
after them; the second layer u2 (for receiver 1 only) runs its own forward
chain and shares receiver 1's pre-phase.

Frame layout in time: ``t`` pre-phase blocks for receiver 2, ``k`` payload
blocks, ``t`` pre-phase blocks for receiver 1.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channels import StateChannel
from .codec import DecRole, SharedRandomness, decode_block, encode_block
from .construction import (
    ChainPlan,
    InfeasiblePlan,
    PolarSets,
    SingleChainPlan,
    aux_joint,
    build_polar_sets,
    estimate_z_profile,
    fuse_obs,
    plan_chain,
    plan_single_chain,
)
from .gp import PrePhaseCode, to_enc_roles
from .polar import polar_transform
from .prob import JointPmf
from .region import AuxStrategy, region_bcsi_state

MAX_SWEEPS_EXTRA = 4


class ChainNotConverged(RuntimeError):
    pass


@dataclass
class BcsiMessages:
    """Common message and private messages, as (B, bits) arrays.

    ``m1`` is laid out as ``(M100, M101, M11)`` with ``|M100| = |M2|``.
    """

    m0: np.ndarray
    m1: np.ndarray
    m2: np.ndarray

    def __post_init__(self):
        self.m0 = np.atleast_2d(np.asarray(self.m0, dtype=np.uint8))
        self.m1 = np.atleast_2d(np.asarray(self.m1, dtype=np.uint8))
        self.m2 = np.atleast_2d(np.asarray(self.m2, dtype=np.uint8))
        if self.m1.shape[1] < self.m2.shape[1]:
            raise InfeasiblePlan("need R1 >= R2: exchange the receiver roles")

    @property
    def batch(self) -> int:
        return self.m1.shape[0]

    @property
    def m100(self) -> np.ndarray:
        return self.m1[:, : self.m2.shape[1]]

    def split(self, n101: int):
        n2 = self.m2.shape[1]
        return self.m1[:, n2:n2 + n101], self.m1[:, n2 + n101:]

    def common_equivalent(self) -> np.ndarray:
        """``M'0 = (M100 xor M2, M0)``."""
        return np.concatenate([self.m100 ^ self.m2, self.m0], axis=1)

    @classmethod
    def random(cls, rng, batch: int, n0: int, n1: int, n2: int) -> "BcsiMessages":
        return cls(
            rng.integers(0, 2, (batch, n0), dtype=np.uint8),
            rng.integers(0, 2, (batch, n1), dtype=np.uint8),
            rng.integers(0, 2, (batch, n2), dtype=np.uint8),
        )


def _fill(bits: np.ndarray, slots: int, pad: np.ndarray) -> np.ndarray:
    """Message bits followed by shared pad bits up to ``slots``."""
    if bits.shape[1] > slots:
        raise InfeasiblePlan(f"{bits.shape[1]} message bits exceed {slots} slots")
    tail = np.broadcast_to(pad[bits.shape[1]:slots], (bits.shape[0], slots - bits.shape[1]))
    return np.concatenate([bits, tail], axis=1)


@dataclass
class BcsiFrame:
    x: np.ndarray                 # (B, k + 2t, n) channel inputs
    u1: np.ndarray                # (B, k, n) layer-1 bits
    u2: Optional[np.ndarray]      # (B, k, n) layer-2 bits, or None
    sweeps: int = 1

    def trace(self, code: "BcsiCode", frame: int = 0) -> dict:
        """JSON-friendly per-block roles and bits of one frame."""
        blocks = []
        for b in range(code.k):
            entry = {"block": b, "roles": code.plan.roles(b).tolist(), "u1": self.u1[frame, b].tolist()}
            if self.u2 is not None:
                entry["u2"] = self.u2[frame, b].tolist()
            blocks.append(entry)
        return {"plan": code.plan.summary(), "blocks": blocks}


@dataclass
class BcsiDecoded:
    m0: np.ndarray
    private: np.ndarray
    u1: np.ndarray
    failed: np.ndarray        # (B,) any failure in the frame
    block_failed: np.ndarray  # (B, k) failure in a block or any block it depends on


@dataclass
class BcsiCode:
    """A two-receiver chained code (common-message or noncausal-state scheme)."""

    channel: StateChannel
    strategy: AuxStrategy
    scheme: str
    sets: PolarSets
    plan: ChainPlan
    enc_joint: JointPmf
    dec_joints: dict
    sets2: Optional[PolarSets] = None
    plan2: Optional[SingleChainPlan] = None
    enc_joint2: Optional[JointPmf] = None
    dec_joint2: Optional[JointPmf] = None
    prephase: dict = field(default_factory=dict)

    # ------------------------------------------------------------------ build

    @classmethod
    def build(
        cls,
        ch: StateChannel,
        strategy: AuxStrategy,
        n: int,
        k: int,
        scheme: str = "bcsi-state",
        samples: int = 1000,
        seed=0,
        low_sizes: Optional[dict] = None,
        low_size2: Optional[int] = None,
        policy: str = "rate-target",
        pre_backoff: float = 0.5,
        cache: Optional[dict] = None,
        sets: Optional[PolarSets] = None,
        sets2: Optional[PolarSets] = None,
    ) -> "BcsiCode":
        """Estimate profiles (memoized in ``cache``), form the sets and plan the chains.

        ``sets``/``sets2`` bypass estimation entirely (hand-made layouts).
        """
        cache = {} if cache is None else cache
        if strategy.v1_size != 2 or strategy.v2_size not in (1, 2):
            raise ValueError("polar layers need a binary V1 and a binary or constant V2")
        if scheme == "bcsi-common" and len(ch.s_alphabet) != 1:
            raise ValueError("the common-message scheme is for constant-state channels")

        def profile(key, joint):
            if key not in cache:
                cache[key] = estimate_z_profile(joint, n, samples, seed, key)
            return cache[key]

        enc_joint = aux_joint(ch, strategy, "v1", ["s"])
        dec_joints = {1: aux_joint(ch, strategy, "v1", ["y1"]), 2: aux_joint(ch, strategy, "v1", ["y2"])}
        if sets is None:
            sets = build_polar_sets(
                profile("U1|S", enc_joint),
                {m: profile(f"U1|Y{m}", dec_joints[m]) for m in (1, 2)},
                policy,
                low_sizes=low_sizes,
            )
        layered = strategy.v2_size == 2
        enc2 = dec2 = None
        if layered:
            enc2 = aux_joint(ch, strategy, "v2", ["s", "v1"])
            dec2 = aux_joint(ch, strategy, "v2", ["y1", "v1"])
            if sets2 is None:
                low2 = None if low_size2 is None else {1: low_size2}
                sets2 = build_polar_sets(
                    profile("U2|S,U1", enc2), {1: profile("U2|Y1,U1", dec2)}, policy, low_sizes=low2
                )
        stateless = scheme == "bcsi-common"
        fr2 = 0 if stateless else len(sets.f_r(2))
        fr1 = (0 if stateless else len(sets.f_r(1))) + (len(sets2.f_r(1)) if layered else 0)
        prephase = {}
        for m, need in ((1, fr1), (2, fr2)):
            if need:
                key = f"pre{m}"
                if key not in cache:
                    cache[key] = PrePhaseCode.build(ch, m, n, samples, seed, pre_backoff)
                prephase[m] = cache[key]
        per_block = {m: code.bits_per_block for m, code in prephase.items()}
        plan = plan_chain(sets, k, scheme, per_block, len(sets2.f_r(1)) if layered else 0)
        plan2 = None
        if layered:
            # layer 2 rides receiver 1's pre-phase, so it inherits the layer-1 length
            plan2 = dataclasses.replace(plan_single_chain(sets2, k, 1, per_block.get(1, 0)), t=plan.t)
        return cls(ch, strategy, scheme, sets, plan, enc_joint, dec_joints, sets2, plan2, enc2, dec2, prephase)

    # ------------------------------------------------------------ accounting

    @property
    def n(self) -> int:
        return self.sets.n

    @property
    def k(self) -> int:
        return self.plan.k

    @property
    def t(self) -> int:
        return self.plan.t

    @property
    def blocks(self) -> int:
        return self.k + 2 * self.t

    @property
    def layered(self) -> bool:
        return self.plan2 is not None

    @property
    def stateless(self) -> bool:
        return self.plan.stateless

    def common_slots(self) -> int:
        return self.plan.common_slots()

    def private_slots(self) -> int:
        return self.plan.private_slots()

    def layer2_slots(self) -> int:
        return self.plan2.message_slots() if self.layered else 0

    def receiver_bits(self, m: int) -> int:
        """Message bits receiver m decodes per frame (excluding side information)."""
        if m == 1:
            return self.common_slots() + self.private_slots() + self.layer2_slots()
        return self.common_slots()

    def check_messages(self, n0: int, n1: int, n2: int) -> tuple[int, int, int]:
        """Validate message sizes; return the (M101, M11, overflow) split of M1.

        M11 fills layer 2, M101 fills the private slots, and any M101 bits
        left over ride at the end of the common stream (receiver 2 knows M1,
        so it simply skips them).
        """
        if n1 < n2:
            raise InfeasiblePlan("need R1 >= R2: exchange the receiver roles")
        rest = n1 - n2
        n11 = min(rest, self.layer2_slots())
        n101 = rest - n11
        overflow = max(n101 - self.private_slots(), 0)
        if n0 + n2 + overflow > self.common_slots():
            raise InfeasiblePlan(
                f"M'0 needs {n0 + n2 + overflow} bits, {self.common_slots()} common slots available"
            )
        return n101, n11, overflow

    def theory(self) -> dict:
        corner = region_bcsi_state(self.channel, self.strategy)
        return {"r1": corner.r1, "r2": corner.r2, "conditions": corner.conditions}

    # -------------------------------------------------------------- encoding

    def _x(self, v1, v2, s):
        f = self.strategy.f
        return f[v1.astype(np.intp), v2.astype(np.intp), s]

    def _pads(self, sr):
        return (
            sr.gamma_bits("pad-common", 0, max(self.common_slots(), 1)),
            sr.gamma_bits("pad-private", 0, max(self.private_slots(), 1)),
            sr.gamma_bits("pad-layer2", 0, max(self.layer2_slots(), 1)),
        )

    def _streams(self, msgs: BcsiMessages, sr):
        n101, n11, over = self.check_messages(msgs.m0.shape[1], msgs.m1.shape[1], msgs.m2.shape[1])
        m101, m11 = msgs.split(n101)
        cut = n101 - over
        pc, pp, p2 = self._pads(sr)
        return (
            _fill(np.concatenate([msgs.common_equivalent(), m101[:, cut:]], axis=1), self.common_slots(), pc),
            _fill(m101[:, :cut], self.private_slots(), pp),
            _fill(m11, self.layer2_slots(), p2),
        )

    def _common_chunks(self):
        """Per block, (positions, offset) of the M'0 stream."""
        p = self.plan
        out, off = [], 0
        for b in range(self.k):
            pos = p.common if b == self.k - 1 else np.concatenate([p.common, p.d2])
            out.append((pos, off))
            off += len(pos)
        return out

    def _private_chunks(self):
        p = self.plan
        out, off = [None], 0
        for b in range(1, self.k):
            out.append((p.d11, off, p.overlap, off + len(p.d11)))
            off += len(p.d11) + len(p.overlap)
        return out

    def _layer1_data(self, b, cm0, m101, u1, r2c, gam):
        p = self.plan
        batch = cm0.shape[0]
        data = np.zeros((batch, self.n), dtype=np.uint8)
        pos, off = self._common_chunks()[b]
        data[:, pos] = cm0[:, off:off + len(pos)]
        w1 = np.broadcast_to(gam[p.overlap], (batch, len(p.overlap)))
        if b > 0:
            d11, o1, ov, o2 = self._private_chunks()[b]
            data[:, p.d10] = u1[:, b - 1][:, p.d2]
            data[:, d11] = m101[:, o1:o1 + len(d11)]
            data[:, p.r1] = u1[:, b - 1][:, p.fr1]
            w1 = m101[:, o2:o2 + len(ov)]
        if b < self.k - 1:
            content = np.zeros((batch, self.n), dtype=np.uint8)
            content[:, p.r2] = r2c[:, b]
        else:
            content = np.broadcast_to(gam, (batch, self.n)).copy()
        plain = np.setdiff1d(p.r2, p.overlap)
        data[:, plain] = content[:, plain]
        data[:, p.overlap] = w1 ^ content[:, p.overlap]
        return data

    def encode(self, msgs: BcsiMessages, states: np.ndarray, sr: SharedRandomness) -> BcsiFrame:
        """Channel inputs for ``msgs``; ``states`` has shape (B, k + 2t, n)."""
        batch, n, k, t = msgs.batch, self.n, self.k, self.t
        states = np.asarray(states, dtype=np.intp)
        if states.shape != (batch, self.blocks, n):
            raise ValueError(f"states must have shape {(batch, self.blocks, n)}")
        cm0, m101, m11 = self._streams(msgs, sr)
        pay = states[:, t:t + k]
        p = self.plan
        u1 = np.zeros((batch, k, n), dtype=np.uint8)
        r2c = np.zeros((batch, k, len(p.r2)), dtype=np.uint8)
        sweeps = 0
        limit = k + MAX_SWEEPS_EXTRA
        while True:
            sweeps += 1
            for b in range(k):
                gam = sr.gamma_bits("u1", b, n)
                data = self._layer1_data(b, cm0, m101, u1, r2c, gam)
                u1[:, b], _ = encode_block(to_enc_roles(p.roles(b)), data, self.enc_joint, pay[:, b], sr, b, "u1")
            new = np.zeros_like(r2c)
            for b in range(k - 1):
                new[:, b] = u1[:, b + 1][:, p.fr2]
            if np.array_equal(new, r2c):
                break
            if sweeps >= limit:
                raise ChainNotConverged("backward chain content did not settle; choose chain sets at later indices")
            r2c = new
        v1 = polar_transform(u1.reshape(-1, n)).reshape(batch, k, n)

        u2 = None
        v2 = np.zeros_like(v1)
        if self.layered:
            p2 = self.plan2
            u2 = np.zeros((batch, k, n), dtype=np.uint8)
            per = len(p2.message)
            for b in range(k):
                data = np.zeros((batch, n), dtype=np.uint8)
                data[:, p2.message] = m11[:, b * per:(b + 1) * per]
                if b > 0:
                    data[:, p2.chain] = u2[:, b - 1][:, p2.f_r]
                obs = fuse_obs([pay[:, b], v1[:, b]], [len(self.channel.s_alphabet), 2])
                u2[:, b], v2[:, b] = encode_block(to_enc_roles(p2.roles(b)), data, self.enc_joint2, obs, sr, b, "u2")

        x = np.zeros((batch, self.blocks, n), dtype=np.intp)
        x[:, t:t + k] = self._x(v1, v2, pay)
        if t:
            x[:, :t] = self._pre_encode(2, u1[:, 0][:, p.fr2], states[:, :t], sr, batch)
            tail = [u1[:, -1][:, p.fr1]]
            if self.layered:
                tail.append(u2[:, -1][:, self.plan2.f_r])
            x[:, t + k:] = self._pre_encode(1, np.concatenate(tail, axis=1), states[:, t + k:], sr, batch)
        return BcsiFrame(x, u1, u2, sweeps)

    def _pre_encode(self, m, bits, states, sr, batch):
        code = self.prephase.get(m)
        if code is None:
            # nothing to pre-communicate for this receiver: send a fixed symbol
            return np.zeros((batch, self.t, self.n), dtype=np.intp)
        return code.encode(bits, states, sr)

    # -------------------------------------------------------------- decoding

    def _dec_roles(self, m: int, b: int) -> np.ndarray:
        """Decoder role of every index of payload block b at receiver m."""
        s, p = self.sets, self.plan
        first, last = b == 0, b == self.k - 1
        frozen = DecRole.LAMBDA if self.stateless else DecRole.GAMMA
        r = np.full(self.n, frozen, dtype=np.int8)
        if self.stateless:
            r[s.info(m)] = DecRole.MAP
        else:
            r[s.info(m)] = DecRole.MAP
            r[s.f_f(m)] = DecRole.MAP
            r[s.f_r(m)] = DecRole.KNOWN
        plain_r2 = np.setdiff1d(p.r2, p.overlap)
        if m == 1:
            if last:
                r[p.d2] = frozen
                r[plain_r2] = frozen
            else:
                r[p.d2] = DecRole.KNOWN
                r[plain_r2] = DecRole.KNOWN
            if first:
                for idx in (p.d10, p.d11, p.r1):
                    r[idx] = frozen
                r[p.overlap] = DecRole.KNOWN
        else:
            if first:
                for idx in (p.d10, p.d11, p.r1):
                    r[idx] = frozen
            else:
                for idx in (p.d10, p.d11, p.r1):
                    r[idx] = DecRole.KNOWN
            if last:
                r[p.d2] = frozen
                r[plain_r2] = frozen
                r[p.overlap] = DecRole.KNOWN
        return r

    def _decode_layer1(self, m, b, y, known, sr):
        roles = self._dec_roles(m, b)
        lam = self.enc_joint if self.stateless else None
        return decode_block(roles, self.dec_joints[m], y, sr, b, "u1", known=known, lambda_joint=lam, lambda_obs=0)

    def decode(self, m: int, y: np.ndarray, side: np.ndarray, sr: SharedRandomness, n0: int, n_private: int,
               genie_fr: Optional[np.ndarray] = None) -> BcsiDecoded:
        """Decode receiver m's messages from its outputs (B, k + 2t, n).

        ``side`` is the other receiver's private message (M2 for receiver 1,
        M1 for receiver 2). ``n0`` and ``n_private`` are the sizes of
        M0 and the receiver's own private message.
        ``genie_fr`` replaces the pre-phase output (the frozen bits that
        bootstrap this receiver's chain).
        """
        if m == 1:
            return self._decode_rx1(y, side, sr, n0, n_private, genie_fr)
        return self._decode_rx2(y, side, sr, n0, n_private, genie_fr)

    def _decode_rx2(self, y, m1, sr, n0, n2, genie_fr):
        y = np.asarray(y, dtype=np.intp)
        batch, n, k, t = y.shape[0], self.n, self.k, self.t
        p = self.plan
        m1 = np.atleast_2d(np.asarray(m1, dtype=np.uint8))
        msgs = BcsiMessages(np.zeros((batch, n0), np.uint8), m1, np.zeros((batch, n2), np.uint8))
        n101, _, over = self.check_messages(n0, m1.shape[1], n2)
        m101, _ = msgs.split(n101)
        _, pp, _ = self._pads(sr)
        m101 = _fill(m101[:, :n101 - over], self.private_slots(), pp)
        failed = np.zeros(batch, dtype=bool)
        if genie_fr is not None:
            fr2 = np.asarray(genie_fr, dtype=np.uint8)
        elif len(p.fr2):
            fr2, bad = self.prephase[2].decode(len(p.fr2), y[:, :t], sr)
            failed |= bad
        else:
            fr2 = np.zeros((batch, 0), dtype=np.uint8)
        u_hat = np.zeros((batch, k, n), dtype=np.uint8)
        block_failed = np.zeros((batch, k), dtype=bool)
        chunks = self._private_chunks()
        carry = failed.copy()
        for b in range(k):
            gam = sr.gamma_bits("u1", b, n)
            known = np.zeros((batch, n), dtype=np.uint8)
            known[:, p.fr2] = fr2
            w1 = np.broadcast_to(gam[p.overlap], (batch, len(p.overlap)))
            if b > 0:
                d11, o1, ov, o2 = chunks[b]
                known[:, p.d10] = u_hat[:, b - 1][:, p.d2]
                known[:, d11] = m101[:, o1:o1 + len(d11)]
                known[:, p.r1] = u_hat[:, b - 1][:, p.fr1]
                w1 = m101[:, o2:o2 + len(ov)]
            if b == k - 1:
                known[:, p.overlap] = w1 ^ gam[p.overlap]
            res = self._decode_layer1(2, b, y[:, t + b], known, sr)
            u_hat[:, b] = res.u
            carry = carry | res.failed
            block_failed[:, b] = carry
            content = np.zeros((batch, n), dtype=np.uint8)
            content[:, p.r2] = res.u[:, p.r2]
            content[:, p.overlap] ^= w1
            fr2 = content[:, p.r2]
        cm0 = self._gather_common(u_hat)
        m2_hat = cm0[:, :n2] ^ msgs.m100
        return BcsiDecoded(cm0[:, n2:n2 + n0], m2_hat, u_hat, carry, block_failed)

    def _gather_common(self, u_hat):
        parts = [u_hat[:, b][:, pos] for b, (pos, _) in enumerate(self._common_chunks())]
        return np.concatenate(parts, axis=1)

    def _decode_rx1(self, y, m2, sr, n0, n1, genie_fr):
        y = np.asarray(y, dtype=np.intp)
        batch, n, k, t = y.shape[0], self.n, self.k, self.t
        p = self.plan
        m2 = np.atleast_2d(np.asarray(m2, dtype=np.uint8))
        n2 = m2.shape[1]
        n101, n11, over = self.check_messages(n0, n1, n2)
        failed = np.zeros(batch, dtype=bool)
        n_fr11 = len(self.plan2.f_r) if self.layered else 0
        if genie_fr is not None:
            tail = np.asarray(genie_fr, dtype=np.uint8)
        elif len(p.fr1) + n_fr11:
            tail, bad = self.prephase[1].decode(len(p.fr1) + n_fr11, y[:, t + k:], sr)
            failed |= bad
        else:
            tail = np.zeros((batch, 0), dtype=np.uint8)
        fr1, fr11 = tail[:, : len(p.fr1)], tail[:, len(p.fr1):]
        u_hat = np.zeros((batch, k, n), dtype=np.uint8)
        u2_hat = np.zeros((batch, k, n), dtype=np.uint8) if self.layered else None
        m101 = np.zeros((batch, self.private_slots()), dtype=np.uint8)
        block_failed = np.zeros((batch, k), dtype=bool)
        chunks = self._private_chunks()
        nxt = None
        for b in range(k - 1, -1, -1):
            gam = sr.gamma_bits("u1", b, n)
            known = np.zeros((batch, n), dtype=np.uint8)
            known[:, p.fr1] = fr1
            if b < k - 1:
                content = np.zeros((batch, n), dtype=np.uint8)
                content[:, p.r2] = nxt[:, p.fr2]
                known[:, p.d2] = nxt[:, p.d10]
            else:
                content = np.broadcast_to(gam, (batch, n)).copy()
            plain = np.setdiff1d(p.r2, p.overlap)
            known[:, plain] = content[:, plain]
            if b == 0:
                known[:, p.overlap] = gam[p.overlap] ^ content[:, p.overlap]
            res = self._decode_layer1(1, b, y[:, t + b], known, sr)
            u_hat[:, b] = res.u
            failed = failed | res.failed
            if b > 0:
                d11, o1, ov, o2 = chunks[b]
                m101[:, o1:o1 + len(d11)] = res.u[:, d11]
                m101[:, o2:o2 + len(ov)] = res.u[:, ov] ^ content[:, ov]
            fr1 = res.u[:, p.r1]
            nxt = res.u
            if self.layered:
                p2 = self.plan2
                r2roles = np.full(n, DecRole.GAMMA, dtype=np.int8)
                r2roles[self.sets2.info(1)] = DecRole.MAP
                r2roles[self.sets2.f_f(1)] = DecRole.MAP
                r2roles[self.sets2.f_r(1)] = DecRole.KNOWN
                if b == 0:
                    r2roles[p2.chain] = DecRole.GAMMA
                known2 = np.zeros((batch, n), dtype=np.uint8)
                known2[:, p2.f_r] = fr11
                v1 = polar_transform(res.u)
                obs = fuse_obs([y[:, t + b], v1], [len(self.channel.y1_alphabet), 2])
                res2 = decode_block(r2roles, self.dec_joint2, obs, sr, b, "u2", known=known2)
                u2_hat[:, b] = res2.u
                failed = failed | res2.failed
                fr11 = res2.u[:, p2.chain]
            block_failed[:, b] = failed
        cm0 = self._gather_common(u_hat)
        tail = n2 + n0
        parts = [cm0[:, :n2] ^ m2, m101[:, :n101 - over], cm0[:, tail:tail + over]]
        if self.layered:
            m11 = np.concatenate([u2_hat[:, b][:, self.plan2.message] for b in range(k)], axis=1)
            parts.append(m11[:, :n11])
        elif n11:
            parts.append(np.zeros((batch, n11), dtype=np.uint8))
        return BcsiDecoded(cm0[:, n2:n2 + n0], np.concatenate(parts, axis=1), u_hat, failed, block_failed)


def common_code(ch: StateChannel, input_p1: float, n: int, k: int, **kw) -> BcsiCode:
    """Common-message code for a constant-state binary-input channel with P(X=1) = input_p1."""
    if len(ch.x_alphabet) != 2:
        raise ValueError("the common-message scheme needs a binary input")
    st = AuxStrategy.single([[1.0 - input_p1, input_p1]], [[0], [1]])
    return BcsiCode.build(ch, st, n, k, scheme="bcsi-common", **kw)
