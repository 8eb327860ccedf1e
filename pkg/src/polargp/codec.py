"""
Single-block asymmetric polar encoding and decoding with shared frozen maps.

Both sides derive one uniform per (stream, block, index) from a master seed.
A lambda-frozen bit is ``uniform < P(U^i = 1 | context)`` and a gamma-frozen
bit is ``uniform < 1/2``; a decoder holding the same prefix and the same
conditional therefore reproduces both exactly.
"""

from __future__ import annotations

import hashlib
from enum import IntEnum
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from .polar import likelihoods, polar_transform, successive_cancellation
from .prob import JointPmf

MASTER_BITS = 256


class EncRole(IntEnum):
    DATA = 0     # bit supplied by the caller
    LAMBDA = 1   # drawn from the encoder-side conditional
    GAMMA = 2    # uniform shared bit


class DecRole(IntEnum):
    MAP = 0      # maximum a posteriori from the channel observation
    KNOWN = 1    # supplied by the caller (chain copies, side information)
    LAMBDA = 2   # recomputed from the encoder's (observable) conditional
    GAMMA = 3    # uniform shared bit


def _label(stream: str) -> int:
    return int.from_bytes(hashlib.sha256(stream.encode()).digest()[:8], "little")


@lru_cache(maxsize=4096)
def _uniforms(master: int, stream: str, j: int, n: int) -> np.ndarray:
    seq = np.random.SeedSequence(entropy=master, spawn_key=(_label(stream), j))
    out = np.random.Generator(np.random.PCG64(seq)).random(n)
    out.setflags(write=False)
    return out


class SharedRandomness:
    """Seed material for the frozen maps, shared by encoder and decoders.

    The uniform for index ``i`` of block ``j`` in ``stream`` does not depend
    on the block length or on any bit values.
    """

    def __init__(self, master: int):
        master = int(master)
        if not 0 <= master < 2**MASTER_BITS:
            raise ValueError("master seed must be a 256-bit non-negative integer")
        self.master = master

    @classmethod
    def from_hex(cls, text: str) -> "SharedRandomness":
        return cls(int(text, 16))

    def uniforms(self, stream: str, j: int, n: int) -> np.ndarray:
        return _uniforms(self.master, stream, int(j), int(n))

    def uniform(self, stream: str, j: int, i: int) -> float:
        return float(self.uniforms(stream, j, i + 1)[i])

    def gamma_bits(self, stream: str, j: int, n: int) -> np.ndarray:
        return (self.uniforms(stream, j, n) < 0.5).astype(np.uint8)

    def __repr__(self) -> str:
        return f"SharedRandomness(0x{self.master:064x})"


def frozen_lambda(sr: SharedRandomness, stream: str, j: int, i: int, p1: float) -> int:
    """1 iff the shared uniform of (stream, j, i) falls below P(U^i = 1 | context)."""
    return int(sr.uniform(stream, j, i) < p1)


def frozen_gamma(sr: SharedRandomness, stream: str, j: int, i: int) -> int:
    return int(sr.uniform(stream, j, i) < 0.5)


def _is_fair_unobserved(joint: JointPmf) -> bool:
    # U = X G_n is i.i.d. uniform, so every conditional is exactly 1/2
    return joint.n_obs == 1 and joint.table[0, 0] == joint.table[1, 0]


def encode_block(roles, data, joint: JointPmf, obs, sr: SharedRandomness, j: int, stream: str):
    """Assemble ``u`` index by index and return ``(u, v = u G_n)``.

    Parameters
    ----------
    roles : (n,) array of EncRole
    data : (B, n) bits, read at DATA positions only
    joint, obs : encoder-side law and (B, n) observation indices for LAMBDA bits
    """
    roles = np.asarray(roles)
    data = np.atleast_2d(np.asarray(data, dtype=np.uint8))
    batch, n = data.shape
    if roles.shape != (n,):
        raise ValueError("role map length differs from block length")
    unif = sr.uniforms(stream, j, n)
    u = np.where(roles == EncRole.DATA, data, 0).astype(np.uint8)
    gam = roles == EncRole.GAMMA
    u[:, gam] = (unif[gam] < 0.5).astype(np.uint8)
    lam = roles == EncRole.LAMBDA
    if lam.any() and _is_fair_unobserved(joint):
        u[:, lam] = (unif[lam] < 0.5).astype(np.uint8)
    elif lam.any():
        obs = np.broadcast_to(np.asarray(obs, dtype=np.intp), (batch, n))

        def decide(i, p1):
            if roles[i] != EncRole.LAMBDA:
                return u[:, i]
            # an impossible context (NaN) falls back to a fair draw
            p = np.where(np.isfinite(p1), p1, 0.5)
            u[:, i] = (unif[i] < p).astype(np.uint8)
            return u[:, i]

        successive_cancellation(likelihoods(joint, obs), decide)
    return u, polar_transform(u)


class Decoded(NamedTuple):
    u: np.ndarray       # (B, n) decided bits
    failed: np.ndarray  # (B,) True where an impossible context was met


def decode_block(
    roles,
    joint: JointPmf,
    obs,
    sr: SharedRandomness,
    j: int,
    stream: str,
    known=None,
    lambda_joint: Optional[JointPmf] = None,
    lambda_obs=None,
) -> Decoded:
    """Successive decoding of one block.

    MAP positions use ``joint`` with the channel observations ``obs``;
    KNOWN positions are copied from ``known`` (B, n); LAMBDA positions are
    recomputed from ``lambda_joint`` and ``lambda_obs`` (the encoder's law,
    which the decoder must be able to evaluate); GAMMA positions come from
    the shared uniforms. Ties in the MAP rule go to 0.
    """
    roles = np.asarray(roles)
    obs = np.atleast_2d(np.asarray(obs, dtype=np.intp))
    batch, n = obs.shape
    if roles.shape != (n,):
        raise ValueError("role map length differs from block length")
    need_known = roles == DecRole.KNOWN
    if need_known.any():
        if known is None:
            raise ValueError("role map has KNOWN positions but no known bits were given")
        known = np.broadcast_to(np.asarray(known), (batch, n))
        if np.any((known[:, need_known] != 0) & (known[:, need_known] != 1)):
            raise ValueError("known bits must be 0/1 at every KNOWN position")
    unif = sr.uniforms(stream, j, n)
    u = np.zeros((batch, n), dtype=np.uint8)
    failed = np.zeros(batch, dtype=bool)

    lam = roles == DecRole.LAMBDA
    fair_lambda = False
    lik = likelihoods(joint, obs)
    if lam.any():
        if lambda_joint is None:
            raise ValueError("role map has LAMBDA positions but no encoder law was given")
        if _is_fair_unobserved(lambda_joint):
            fair_lambda = True
        else:
            lobs = np.broadcast_to(np.asarray(0 if lambda_obs is None else lambda_obs, dtype=np.intp), (batch, n))
            lik = np.concatenate([lik, likelihoods(lambda_joint, lobs)], axis=0)

    def decide(i, p1):
        r = roles[i]
        if r == DecRole.MAP:
            p = p1[:batch]
            bad = ~np.isfinite(p)
            failed[bad] = True
            bit = (np.where(bad, 0.0, p) > 0.5).astype(np.uint8)
        elif r == DecRole.KNOWN:
            bit = known[:, i].astype(np.uint8)
            bad = ~np.isfinite(p1[:batch])
            failed[bad] = True
        elif r == DecRole.GAMMA:
            bit = np.full(batch, unif[i] < 0.5, dtype=np.uint8)
        else:
            p = np.full(batch, 0.5) if fair_lambda else p1[batch:]
            p = np.where(np.isfinite(p), p, 0.5)
            bit = (unif[i] < p).astype(np.uint8)
        u[:, i] = bit
        return np.concatenate([bit, bit]) if len(p1) > batch else bit

    successive_cancellation(lik, decide)
    return Decoded(u, failed)


def enc_roles_to_dec(enc_roles, mapping: dict) -> np.ndarray:
    """Translate an encoder role array through ``{enc_role: dec_role}``."""
    enc_roles = np.asarray(enc_roles)
    out = np.empty(enc_roles.shape, dtype=np.int8)
    for a, b in mapping.items():
        out[enc_roles == a] = b
    return out
