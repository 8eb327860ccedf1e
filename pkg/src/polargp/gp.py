"""
Single-user Gelfand-Pinsker polar code with a forward chain and a causal
pre-phase.

Payload blocks ``0..k-1`` are sent first. Block ``b >= 1`` carries the
F_r bits of block ``b-1`` in its chain positions R; the F_r bits of the last
payload block are sent afterwards in ``t`` pre-phase blocks that use only
causal state knowledge (x = f'(v', s)). The decoder reads the pre-phase
first and then walks the payload blocks backwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import StateChannel
from .codec import DecRole, EncRole, SharedRandomness, decode_block, encode_block
from .construction import (
    CausalStrategy,
    PolarSets,
    Role,
    SingleChainPlan,
    aux_joint,
    build_polar_sets,
    causal_capacity,
    estimate_z_profile,
    plan_single_chain,
)
from .prob import JointPmf
from .region import AuxStrategy

DATA_ROLES = (Role.COMMON, Role.PRIVATE, Role.CHAIN, Role.NETWORK)


def to_enc_roles(roles: np.ndarray) -> np.ndarray:
    out = np.full(roles.shape, EncRole.DATA, dtype=np.int8)
    out[roles == Role.LAMBDA] = EncRole.LAMBDA
    out[roles == Role.GAMMA] = EncRole.GAMMA
    return out


def symbols(f: np.ndarray, v: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Channel input indices x = f[v, s] for a one-layer strategy."""
    return np.asarray(f)[np.asarray(v, dtype=np.intp), np.asarray(s, dtype=np.intp)]


def split_evenly(bits: int, parts: int) -> list[int]:
    """Sizes of ``parts`` chunks holding ``bits``, earlier chunks larger."""
    if parts == 0:
        return []
    base, extra = divmod(bits, parts)
    return [base + (1 if p < extra else 0) for p in range(parts)]


@dataclass
class PointToPointCode:
    """One-block asymmetric polar code for a single receiver.

    The first ``count`` information indices carry data; the rest of H is
    gamma-frozen and the low-entropy part is lambda-frozen from the input law,
    which the decoder recomputes.
    """

    n: int
    receiver: int
    sets: PolarSets
    enc_joint: JointPmf
    dec_joint: JointPmf
    stream: str

    @classmethod
    def build(
        cls,
        ch: StateChannel,
        n: int,
        samples: int = 1000,
        seed=0,
        receiver: int = 1,
        input_p1: float = 0.5,
        info_size: Optional[int] = None,
        policy: str = "rate-target",
        cache: Optional[dict] = None,
    ) -> "PointToPointCode":
        """Binary input with P(X=1) = input_p1; the state, if any, is averaged out."""
        if len(ch.x_alphabet) != 2:
            raise ValueError("the point-to-point code needs a binary input")
        p_x = np.array([1.0 - input_p1, input_p1])
        w = np.einsum("s,xsy->xy", ch.p_s, ch.marginal(receiver))
        return cls._from_joints(
            JointPmf.unobserved(float(input_p1)), JointPmf(p_x[:, None] * w),
            n, samples, seed, receiver, info_size, policy, cache, "x",
        )

    @classmethod
    def _from_joints(cls, enc_joint, dec_joint, n, samples, seed, receiver, info_size, policy, cache, stream, **extra):
        cache = {} if cache is None else cache
        keys = (f"{stream}", f"{stream}|Y{receiver}")
        if keys[0] not in cache:
            cache[keys[0]] = estimate_z_profile(enc_joint, n, min(samples, 200), seed, keys[0])
        if keys[1] not in cache:
            cache[keys[1]] = estimate_z_profile(dec_joint, n, samples, seed, keys[1])
        low = None if info_size is None else {receiver: info_size}
        sets = build_polar_sets(cache[keys[0]], {receiver: cache[keys[1]]}, policy, low_sizes=low)
        return cls(n, receiver, sets, enc_joint, dec_joint, stream, **extra)

    @property
    def info(self) -> np.ndarray:
        return self.sets.info(self.receiver)

    @property
    def bits_per_block(self) -> int:
        return len(self.info)

    def roles(self, count: int):
        """Encoder and decoder role maps with ``count`` data indices."""
        if count > self.bits_per_block:
            raise ValueError(f"{count} bits exceed the {self.bits_per_block} information indices")
        info = self.info
        enc = np.full(self.n, EncRole.LAMBDA, dtype=np.int8)
        enc[self.sets.high] = EncRole.GAMMA
        enc[info[:count]] = EncRole.DATA
        dec = np.full(self.n, DecRole.LAMBDA, dtype=np.int8)
        dec[self.sets.high] = DecRole.GAMMA
        dec[info[:count]] = DecRole.MAP
        return enc, dec

    def encode_block(self, bits: np.ndarray, sr: SharedRandomness, j: int = 0):
        """Return ``(u, v)`` carrying (B, count) bits in block j."""
        bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
        enc, _ = self.roles(bits.shape[1])
        data = np.zeros((bits.shape[0], self.n), dtype=np.uint8)
        data[:, self.info[:bits.shape[1]]] = bits
        return encode_block(enc, data, self.enc_joint, 0, sr, j, self.stream)

    def decode_block(self, count: int, y: np.ndarray, sr: SharedRandomness, j: int = 0):
        """Return ``(bits, failed)`` from one block of outputs (B, n)."""
        _, dec = self.roles(count)
        res = decode_block(dec, self.dec_joint, y, sr, j, self.stream, lambda_joint=self.enc_joint)
        return res.u[:, self.info[:count]], res.failed


@dataclass
class PrePhaseCode(PointToPointCode):
    """Point-to-point code over the causal strategy channel v' -> y (x = f'(v', s))."""

    strategy: Optional[CausalStrategy] = None

    @classmethod
    def build(
        cls,
        ch: StateChannel,
        receiver: int,
        n: int,
        samples: int,
        seed,
        backoff: float = 0.5,
        strategy: Optional[CausalStrategy] = None,
    ) -> "PrePhaseCode":
        """Binary causal strategy and an information set sized ``backoff * C_causal * n``."""
        if strategy is None:
            strategy = causal_capacity(ch, receiver, v_size=2)
        p_v = np.clip(strategy.p_v, 0.0, None)
        p_v = p_v / p_v.sum()
        w = ch.marginal(receiver)
        ns = len(ch.p_s)
        w_v = np.einsum("s,vsy->vy", ch.p_s, w[strategy.f, np.arange(ns)[None, :]])
        size = int(math.floor(backoff * strategy.capacity * n))
        return cls._from_joints(
            JointPmf.unobserved(float(p_v[1])), JointPmf(p_v[:, None] * w_v),
            n, samples, seed, receiver, size, "rate-target", None, f"pre{receiver}", strategy=strategy,
        )

    def encode(self, bits: np.ndarray, states: np.ndarray, sr: SharedRandomness) -> np.ndarray:
        """Spread (B, nbits) over ``t = states.shape[1]`` blocks; return inputs (B, t, n)."""
        bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
        batch, t = states.shape[0], states.shape[1]
        x = np.zeros((batch, t, self.n), dtype=np.intp)
        start = 0
        for j, size in enumerate(split_evenly(bits.shape[1], t)):
            _, v = self.encode_block(bits[:, start:start + size], sr, j)
            start += size
            x[:, j] = symbols(self.strategy.f, v, states[:, j])
        return x

    def decode(self, nbits: int, y: np.ndarray, sr: SharedRandomness) -> tuple[np.ndarray, np.ndarray]:
        """Recover (B, nbits) from outputs (B, t, n); also return per-frame failure flags."""
        batch, t = y.shape[0], y.shape[1]
        out = np.zeros((batch, nbits), dtype=np.uint8)
        failed = np.zeros(batch, dtype=bool)
        start = 0
        for j, size in enumerate(split_evenly(nbits, t)):
            out[:, start:start + size], bad = self.decode_block(size, y[:, j], sr, j)
            failed |= bad
            start += size
        return out, failed


@dataclass
class GpFrame:
    x: np.ndarray  # (B, k + t, n) channel input indices
    u: np.ndarray  # (B, k, n) payload-block bits


@dataclass
class GpCode:
    """Chained Gelfand-Pinsker code for one receiver of a state channel."""

    channel: StateChannel
    receiver: int
    strategy: AuxStrategy
    sets: PolarSets
    plan: SingleChainPlan
    prephase: Optional[PrePhaseCode]
    enc_joint: JointPmf
    dec_joint: JointPmf

    @classmethod
    def build(
        cls,
        ch: StateChannel,
        strategy: AuxStrategy,
        n: int,
        k: int,
        samples: int = 1000,
        seed=0,
        receiver: int = 1,
        low_size: Optional[int] = None,
        policy: str = "rate-target",
        pre_backoff: float = 0.5,
        cache: Optional[dict] = None,
    ) -> "GpCode":
        """Estimate profiles (memoized in ``cache``), form the sets and plan the chain."""
        if strategy.v2_size != 1:
            raise ValueError("the single-user code uses a one-layer strategy")
        cache = {} if cache is None else cache
        y = "y1" if receiver == 1 else "y2"
        enc_joint = aux_joint(ch, strategy, "v1", ["s"])
        dec_joint = aux_joint(ch, strategy, "v1", [y])
        for key, joint in (("U1|S", enc_joint), (f"U1|Y{receiver}", dec_joint)):
            if key not in cache:
                cache[key] = estimate_z_profile(joint, n, samples, seed, key)
        low = None if low_size is None else {receiver: low_size}
        sets = build_polar_sets(cache["U1|S"], {receiver: cache[f"U1|Y{receiver}"]}, policy, low_sizes=low)
        prephase = None
        if len(sets.f_r(receiver)):
            key = f"pre{receiver}"
            if key not in cache:
                cache[key] = PrePhaseCode.build(ch, receiver, n, samples, seed, pre_backoff)
            prephase = cache[key]
        per_block = prephase.bits_per_block if prephase else 0
        plan = plan_single_chain(sets, k, receiver, per_block)
        return cls(ch, receiver, strategy, sets, plan, prephase, enc_joint, dec_joint)

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
        return self.k + self.t

    @property
    def message_bits(self) -> int:
        return self.plan.message_slots()

    @property
    def rate(self) -> float:
        """Message bits per transmitted symbol, counting the pre-phase."""
        return self.message_bits / (self.blocks * self.n)

    def _f(self) -> np.ndarray:
        return self.strategy.f[:, 0, :]

    def encode(self, messages: np.ndarray, states: np.ndarray, sr: SharedRandomness) -> GpFrame:
        messages = self._padded(np.atleast_2d(np.asarray(messages, dtype=np.uint8)), sr)
        batch = messages.shape[0]
        if states.shape != (batch, self.blocks, self.n):
            raise ValueError(f"states must have shape {(batch, self.blocks, self.n)}")
        plan, n = self.plan, self.n
        msg_idx, per = plan.message, len(plan.message)
        x = np.zeros((batch, self.blocks, n), dtype=np.intp)
        u_all = np.zeros((batch, self.k, n), dtype=np.uint8)
        for b in range(self.k):
            data = np.zeros((batch, n), dtype=np.uint8)
            data[:, msg_idx] = messages[:, b * per:(b + 1) * per]
            if b > 0:
                data[:, plan.chain] = u_all[:, b - 1][:, plan.f_r]
            u, v = encode_block(to_enc_roles(plan.roles(b)), data, self.enc_joint, states[:, b], sr, b, "u1")
            u_all[:, b] = u
            x[:, b] = symbols(self._f(), v, states[:, b])
        if self.t:
            carry = u_all[:, -1][:, plan.f_r]
            x[:, self.k:] = self.prephase.encode(carry, states[:, self.k:], sr)
        return GpFrame(x, u_all)

    def _padded(self, messages: np.ndarray, sr: SharedRandomness) -> np.ndarray:
        """Append shared pad bits up to the code's message size."""
        slots = self.message_bits
        if messages.shape[1] > slots:
            raise ValueError(f"message has {messages.shape[1]} bits, code carries {slots}")
        pad = sr.gamma_bits("pad", 0, max(slots, 1))[messages.shape[1]:slots]
        return np.concatenate([messages, np.broadcast_to(pad, (messages.shape[0], len(pad)))], axis=1)

    def decoder_roles(self, b: int) -> np.ndarray:
        sets, m = self.sets, self.receiver
        r = np.full(self.n, DecRole.GAMMA, dtype=np.int8)
        r[sets.info(m)] = DecRole.MAP
        r[sets.f_f(m)] = DecRole.MAP
        r[sets.f_r(m)] = DecRole.KNOWN
        if b == 0:
            r[self.plan.chain] = DecRole.GAMMA
        return r

    def decode(self, y: np.ndarray, sr: SharedRandomness, genie_fr: Optional[np.ndarray] = None,
               nbits: Optional[int] = None):
        """Return ``(messages, u_hat, failed)`` from outputs (B, k + t, n).

        ``nbits`` truncates the messages to the sender's length (default: all slots).

        ``genie_fr`` (B, |F_r|) replaces the pre-phase estimate of the last
        block's frozen bits.
        """
        y = np.asarray(y, dtype=np.intp)
        batch = y.shape[0]
        if y.shape[1:] != (self.blocks, self.n):
            raise ValueError(f"expected {self.blocks} blocks of length {self.n}")
        plan = self.plan
        failed = np.zeros(batch, dtype=bool)
        if genie_fr is not None:
            fr_bits = np.asarray(genie_fr, dtype=np.uint8)
        elif self.t:
            fr_bits, bad = self.prephase.decode(len(plan.f_r), y[:, self.k:], sr)
            failed |= bad
        else:
            fr_bits = np.zeros((batch, 0), dtype=np.uint8)
        u_hat = np.zeros((batch, self.k, self.n), dtype=np.uint8)
        for b in range(self.k - 1, -1, -1):
            known = np.zeros((batch, self.n), dtype=np.uint8)
            known[:, plan.f_r] = fr_bits
            res = decode_block(self.decoder_roles(b), self.dec_joint, y[:, b], sr, b, "u1", known=known)
            u_hat[:, b] = res.u
            failed |= res.failed
            fr_bits = res.u[:, plan.chain]
        per = len(plan.message)
        msgs = np.zeros((batch, self.message_bits), dtype=np.uint8)
        for b in range(self.k):
            msgs[:, b * per:(b + 1) * per] = u_hat[:, b][:, plan.message]
        if nbits is not None:
            msgs = msgs[:, :nbits]
        return msgs, u_hat, failed
