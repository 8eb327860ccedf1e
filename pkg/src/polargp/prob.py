"""
Finite-alphabet probability primitives.

Everything here works on small dense tables in double precision. A
``JointPmf`` always has a binary first coordinate (the bit being polarized)
and an arbitrary finite observation alphabet; composite observations such as
``(y, v1)`` are fused into a single symbol index by the caller.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

NORM_TOL = 1e-12


def _xlogx(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = p[mask] * np.log2(p[mask])
    return out


def entropy_of(probs) -> float:
    """Shannon entropy in bits of an arbitrary probability array (any shape)."""
    return float(-_xlogx(np.asarray(probs, dtype=float)).sum())


@dataclass(frozen=True)
class Pmf:
    """Probability mass function over an ordered finite support."""

    support: tuple
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if len(probs) != len(self.support):
            raise ValueError("support and probs have different lengths")
        if np.any(probs < 0):
            raise ValueError("negative probability")
        if abs(probs.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "probs", probs)

    @classmethod
    def bernoulli(cls, p: float) -> "Pmf":
        return cls((0, 1), np.array([1.0 - p, p]))

    @classmethod
    def uniform(cls, support: Sequence) -> "Pmf":
        m = len(support)
        return cls(tuple(support), np.full(m, 1.0 / m))

    def __getitem__(self, symbol) -> float:
        return float(self.probs[self.support.index(symbol)])

    def to_dict(self) -> dict:
        return {"support": list(self.support), "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Pmf":
        return cls(tuple(d["support"]), np.asarray(d["probs"], dtype=float))


@dataclass(frozen=True)
class JointPmf:
    """Joint law of a bit X and an observation.

    ``table[x, k]`` is P(X = x, obs = obs_alphabet[k]).
    """

    table: np.ndarray
    obs_alphabet: tuple = None
    x_alphabet: tuple = (0, 1)

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim != 2 or table.shape[0] != 2:
            raise ValueError("joint table must have shape (2, |obs|)")
        if np.any(table < 0):
            raise ValueError("negative probability")
        if abs(table.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"joint table sums to {table.sum()!r}, not 1")
        if tuple(self.x_alphabet) != (0, 1):
            raise ValueError("x alphabet must be {0, 1}")
        obs = self.obs_alphabet
        if obs is None:
            obs = tuple(range(table.shape[1]))
        if len(obs) != table.shape[1]:
            raise ValueError("obs alphabet does not match table width")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "obs_alphabet", tuple(obs))
        object.__setattr__(self, "x_alphabet", (0, 1))

    @classmethod
    def from_channel(cls, px: Sequence[float], channel: np.ndarray, obs_alphabet=None) -> "JointPmf":
        """Joint of X ~ px sent through ``channel[x, obs]`` = P(obs | x)."""
        channel = np.asarray(channel, dtype=float)
        return cls(np.asarray(px, dtype=float)[:, None] * channel, obs_alphabet)

    @classmethod
    def bsc(cls, p: float, px1: float = 0.5) -> "JointPmf":
        return cls.from_channel([1 - px1, px1], [[1 - p, p], [p, 1 - p]])

    @classmethod
    def unobserved(cls, px1: float) -> "JointPmf":
        """X with a constant (useless) observation."""
        return cls(np.array([[1.0 - px1], [px1]]))

    @property
    def n_obs(self) -> int:
        return self.table.shape[1]

    def x_marginal(self) -> Pmf:
        return Pmf((0, 1), self.table.sum(axis=1))

    def obs_marginal(self) -> Pmf:
        return Pmf(self.obs_alphabet, self.table.sum(axis=0))

    def to_dict(self) -> dict:
        return {
            "x_alphabet": [0, 1],
            "obs_alphabet": list(self.obs_alphabet),
            "table": self.table.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JointPmf":
        return cls(np.asarray(d["table"], dtype=float), tuple(d["obs_alphabet"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def entropy(p: Pmf) -> float:
    """Shannon entropy of ``p`` in bits (0 log 0 = 0)."""
    return entropy_of(p.probs)


def conditional_entropy(j: JointPmf) -> float:
    """H(X | obs) in bits."""
    return entropy_of(j.table) - entropy_of(j.table.sum(axis=0))


def mutual_information(j: JointPmf) -> float:
    """I(X; obs) = H(X) - H(X | obs), clipped at zero against rounding."""
    return max(entropy_of(j.table.sum(axis=1)) - conditional_entropy(j), 0.0)


def bhattacharyya(j: JointPmf) -> float:
    """Bhattacharyya parameter Z(X | obs) in [0, 1].

    Z = 2 * sum_obs sqrt(P(X=0, obs) P(X=1, obs)), which equals the
    posterior form 2 * sum_obs P(obs) sqrt(P(0|obs) P(1|obs)) and needs no
    special handling of zero-mass observations.
    """
    z = 2.0 * np.sqrt(j.table[0] * j.table[1]).sum()
    return float(min(max(z, 0.0), 1.0))


def binary_entropy(p: float) -> float:
    return entropy_of([p, 1.0 - p])


def mi_from_joint(pxy: np.ndarray) -> float:
    """I(A; B) for a 2-D joint table over arbitrary alphabets."""
    pxy = np.asarray(pxy, dtype=float)
    return entropy_of(pxy.sum(axis=1)) + entropy_of(pxy.sum(axis=0)) - entropy_of(pxy)


def as_jsonable(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
