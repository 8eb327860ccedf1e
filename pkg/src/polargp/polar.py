"""
Polar transform and exact successive-cancellation probabilities.

Index convention: natural order, ``x = u @ G_n`` with
``G_n = [[1, 0], [1, 1]]^{(x) kappa}`` and no bit reversal. With this order a
block ``u = (a, b)`` maps to ``x = ((a ^ b) G', b G')``, so the first half of
``u`` is decoded from the elementwise XOR of the two codeword halves and the
second half from the right codeword half once that XOR is known.

All recursions carry per-symbol likelihood pairs ``L[..., j, x]`` that are
renormalized to sum to one at every stage. A pair that cannot be normalized
(zero total mass) turns into NaN, which is how an impossible conditioning
event surfaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .prob import JointPmf, Pmf

BRUTE_FORCE_MAX_N = 16


class ImpossibleContext(ValueError):
    """The observations have zero probability given the decided prefix."""


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _check_length(n: int):
    if not is_power_of_two(n):
        raise ValueError(f"block length must be a power of 2, got {n}")


def polar_transform(u) -> np.ndarray:
    """Return ``u G_n`` over GF(2) along the last axis. The map is an involution."""
    x = np.array(u, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    _check_length(n)
    lead = x.shape[:-1]
    h = n // 2
    while h >= 1:
        view = x.reshape(lead + (n // (2 * h), 2, h))
        view[..., 0, :] ^= view[..., 1, :]
        h //= 2
    return x


def likelihoods(joint: JointPmf, obs) -> np.ndarray:
    """Per-symbol pairs ``P(X = x, obs_j)`` with shape ``obs.shape + (2,)``."""
    obs = np.asarray(obs, dtype=np.intp)
    return joint.table.T[obs]


def _normalize(pair: np.ndarray) -> np.ndarray:
    s = pair[..., 0] + pair[..., 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = pair / s[..., None]
    out[s == 0] = np.nan
    return out


def _check(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # law of a ^ b for independent a, b
    f0 = a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
    f1 = a[..., 0] * b[..., 1] + a[..., 1] * b[..., 0]
    return np.stack([f0, f1], axis=-1)


def _var(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    # law of b given a ^ b = c
    c = c.astype(bool)
    a0 = np.where(c, a[..., 1], a[..., 0])
    a1 = np.where(c, a[..., 0], a[..., 1])
    return _normalize(np.stack([b[..., 0] * a0, b[..., 1] * a1], axis=-1))


Decider = Callable[[int, np.ndarray], np.ndarray]


def successive_cancellation(lik: np.ndarray, decide: Decider) -> np.ndarray:
    """Run one successive-cancellation pass over a batch of blocks.

    Parameters
    ----------
    lik : ndarray, shape (B, n, 2)
        Per-symbol joint likelihoods of the codeword bits.
    decide : callable
        ``decide(i, p1)`` receives the index ``i`` and ``p1[b] =
        P(U^i = 1 | obs, u^{1:i-1})`` (NaN where the context is impossible)
        and returns the bits chosen for ``u^i``, shape (B,).

    Returns
    -------
    x : ndarray of uint8, shape (B, n)
        The codeword ``u G_n`` of the decided bits.
    """
    lik = np.asarray(lik, dtype=float)
    if lik.ndim != 3 or lik.shape[-1] != 2:
        raise ValueError("likelihoods must have shape (B, n, 2)")
    _check_length(lik.shape[1])
    return _sc_node(_normalize(lik), decide, 0)


def _sc_node(L: np.ndarray, decide: Decider, offset: int) -> np.ndarray:
    m = L.shape[1]
    if m == 1:
        bits = np.asarray(decide(offset, L[:, 0, 1]), dtype=np.uint8)
        return bits.reshape(-1, 1)
    h = m // 2
    a, b = L[:, :h], L[:, h:]
    c = _sc_node(_check(a, b), decide, offset)
    right = _sc_node(_var(a, b, c), decide, offset + h)
    return np.concatenate([c ^ right, right], axis=1)


def genie_probabilities(lik: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``P(U^i = 1 | obs, u^{1:i-1})`` for every i, given the true ``u``.

    Same numbers as :func:`successive_cancellation` fed the true prefix, but
    computed level by level since every partial sum is known in advance.
    """
    lik = np.asarray(lik, dtype=float)
    u = np.asarray(u, dtype=np.uint8)
    batch, n = u.shape
    _check_length(n)
    L = _normalize(lik).reshape(batch, 1, n, 2)
    nodes, m = 1, n
    while m > 1:
        h = m // 2
        a, b = L[:, :, :h], L[:, :, h:]
        left_u = u.reshape(batch, 2 * nodes, h)[:, 0::2]
        c = polar_transform(left_u)
        left = _check(a, b)
        right = _var(a, b, c)
        L = np.stack([left, right], axis=2).reshape(batch, 2 * nodes, h, 2)
        nodes, m = 2 * nodes, h
    return L[:, :, 0, 1]


@dataclass(frozen=True)
class ScContext:
    """Conditioning for one synthetic bit: the law, the observations, the prefix."""

    joint: JointPmf
    observations: Sequence[int]
    decided: Sequence[int] = ()

    def __post_init__(self):
        n = len(self.observations)
        _check_length(n)
        if len(self.decided) >= n:
            raise ValueError("decided prefix must be shorter than the block")

    @property
    def n(self) -> int:
        return len(self.observations)


class _Stop(Exception):
    pass


def sc_conditional(ctx: ScContext) -> Pmf:
    """Exact ``P(U^i = . | obs^{1:n}, u^{1:i-1})`` for ``i = len(ctx.decided)``.

    Raises
    ------
    ImpossibleContext
        If the observations are inconsistent with the decided prefix.
    """
    prefix = np.asarray(ctx.decided, dtype=np.uint8)
    target = len(prefix)
    found = {}

    def decide(i, p1):
        if i == target:
            found["p1"] = float(p1[0])
            raise _Stop
        return prefix[i : i + 1]

    lik = likelihoods(ctx.joint, ctx.observations)[None]
    try:
        successive_cancellation(lik, decide)
    except _Stop:
        pass
    p1 = found["p1"]
    if not np.isfinite(p1):
        raise ImpossibleContext(f"zero-probability context at index {target}")
    return Pmf((0, 1), np.array([1.0 - p1, p1]))


def _all_words(n: int) -> np.ndarray:
    idx = np.arange(2**n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)


def brute_force_conditional(ctx: ScContext) -> Pmf:
    """Same contract as :func:`sc_conditional`, by summing over all 2^n words."""
    n = ctx.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    prefix = np.asarray(ctx.decided, dtype=np.uint8)
    i = len(prefix)
    words = _all_words(n)
    words = words[np.all(words[:, :i] == prefix, axis=1)]
    x = polar_transform(words)
    obs = np.asarray(ctx.observations, dtype=np.intp)
    weight = ctx.joint.table[x, obs[None, :]].prod(axis=1)
    mass = np.array([weight[words[:, i] == 0].sum(), weight[words[:, i] == 1].sum()])
    total = mass.sum()
    if total == 0:
        raise ImpossibleContext(f"zero-probability context at index {i}")
    return Pmf((0, 1), mass / total)


def block_likelihood(joint: JointPmf, u, obs) -> float:
    """P(U = u, obs) for a single block, by direct product over symbols."""
    x = polar_transform(u)
    obs = np.asarray(obs, dtype=np.intp)
    return float(joint.table[x, obs].prod())
