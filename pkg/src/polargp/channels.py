"""
Two-receiver broadcast channels with an i.i.d. state known at the encoder.

Blocks passed to and returned from these functions hold alphabet *indices*
(``0 .. len(alphabet) - 1``), not the symbols themselves; for the binary
channels the two coincide.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

ROW_TOL = 1e-12
DEGRADED_TOL = 1e-9


@dataclass(frozen=True)
class StateChannel:
    """P(y1, y2 | x, s) together with the state law P_S.

    ``transition[x, s, y1, y2]`` indexes the alphabets positionally.
    """

    x_alphabet: tuple
    s_alphabet: tuple
    y1_alphabet: tuple
    y2_alphabet: tuple
    p_s: np.ndarray
    transition: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        p_s = np.asarray(self.p_s, dtype=float)
        t = np.asarray(self.transition, dtype=float)
        shape = (len(self.x_alphabet), len(self.s_alphabet), len(self.y1_alphabet), len(self.y2_alphabet))
        if t.shape != shape:
            raise ValueError(f"transition has shape {t.shape}, expected {shape}")
        if p_s.shape != (shape[1],) or np.any(p_s < 0) or abs(p_s.sum() - 1) > ROW_TOL:
            raise ValueError("state pmf is not a distribution over the state alphabet")
        if np.any(t < 0):
            raise ValueError("negative transition probability")
        rows = t.sum(axis=(2, 3))
        if np.max(np.abs(rows - 1.0)) > ROW_TOL:
            raise ValueError("each (x, s) row of the transition table must sum to 1")
        for arr in (p_s, t):
            arr.setflags(write=False)
        object.__setattr__(self, "p_s", p_s)
        object.__setattr__(self, "transition", t)
        for field in ("x_alphabet", "s_alphabet", "y1_alphabet", "y2_alphabet"):
            object.__setattr__(self, field, tuple(getattr(self, field)))

    @property
    def shape(self):
        return self.transition.shape

    def marginal(self, receiver: int) -> np.ndarray:
        """P(y_m | x, s) as an array indexed ``[x, s, y]``."""
        if receiver == 1:
            return self.transition.sum(axis=3)
        if receiver == 2:
            return self.transition.sum(axis=2)
        raise ValueError(f"receiver must be 1 or 2, got {receiver}")

    def output_alphabet(self, receiver: int) -> tuple:
        return self.y1_alphabet if receiver == 1 else self.y2_alphabet

    def swapped(self) -> "StateChannel":
        """The same channel with the receiver labels exchanged."""
        return StateChannel(
            self.x_alphabet,
            self.s_alphabet,
            self.y2_alphabet,
            self.y1_alphabet,
            self.p_s,
            np.swapaxes(self.transition, 2, 3),
            name=f"{self.name}-swapped",
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "x_alphabet": list(self.x_alphabet),
            "s_alphabet": list(self.s_alphabet),
            "y1_alphabet": list(self.y1_alphabet),
            "y2_alphabet": list(self.y2_alphabet),
            "p_s": self.p_s.tolist(),
            "transition": self.transition.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StateChannel":
        return cls(
            tuple(d["x_alphabet"]),
            tuple(d["s_alphabet"]),
            tuple(d["y1_alphabet"]),
            tuple(d["y2_alphabet"]),
            np.asarray(d["p_s"], dtype=float),
            np.asarray(d["transition"], dtype=float),
            name=d.get("name", "custom"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class DegradednessWitness:
    """``table[y1, y2]`` = P(y2 | y1) reproducing receiver 2 from receiver 1."""

    table: np.ndarray

    def to_dict(self) -> dict:
        return {"table": np.asarray(self.table).tolist()}


def _bern(p: float) -> np.ndarray:
    return np.array([1.0 - p, p])


def make_bsc_interference(p1: float, p2: float, q: float = 0.5) -> StateChannel:
    """Y_m = X xor Z_m xor S with Z_m ~ Bern(p_m) independent and S ~ Bern(q)."""
    for name, p in (("p1", p1), ("p2", p2)):
        if not 0.0 <= p <= 0.5:
            raise ValueError(f"{name} must lie in [0, 1/2], got {p}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    z1, z2 = _bern(p1), _bern(p2)
    t = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for s in range(2):
            for y1 in range(2):
                for y2 in range(2):
                    t[x, s, y1, y2] = z1[y1 ^ x ^ s] * z2[y2 ^ x ^ s]
    return StateChannel((0, 1), (0, 1), (0, 1), (0, 1), _bern(q), t, name="bsc-interference")


def make_stuck_memory(p: float) -> StateChannel:
    """Memory with stuck-at faults.

    X in {1, 2, 3, 4}; S = 0 with probability 1 - p and S = 1..4 with
    probability p/4 each. Y1 = S when the cell is stuck (S != 0) and Y1 = X
    otherwise; Y2 collapses Y1 into {0 for 1, 2} and {1 for 3, 4}.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    xs, ss, y1s, y2s = (1, 2, 3, 4), (0, 1, 2, 3, 4), (1, 2, 3, 4), (0, 1)
    p_s = np.array([1.0 - p] + [p / 4] * 4)
    t = np.zeros((4, 5, 4, 2))
    for xi, x in enumerate(xs):
        for si, s in enumerate(ss):
            y1 = x if s == 0 else s
            y2 = 0 if y1 in (1, 2) else 1
            t[xi, si, y1s.index(y1), y2] = 1.0
    return StateChannel(xs, ss, y1s, y2s, p_s, t, name="stuck-memory")


def make_noiseless_binary() -> StateChannel:
    """Both receivers see X exactly; the state is a constant."""
    t = np.zeros((2, 1, 2, 2))
    t[0, 0, 0, 0] = t[1, 0, 1, 1] = 1.0
    return StateChannel((0, 1), (0,), (0, 1), (0, 1), np.array([1.0]), t, name="noiseless")


def make_bsc(p: float) -> StateChannel:
    """Binary symmetric channel with crossover p seen identically by both receivers."""
    return dataclasses.replace(make_bsc_pair(p, p), name="bsc")


def make_bsc_pair(p1: float, p2: float) -> StateChannel:
    """Stateless broadcast pair of binary symmetric channels."""
    ch = make_bsc_interference(p1, p2, 0.0)
    return StateChannel(
        (0, 1), (0,), (0, 1), (0, 1), np.array([1.0]), ch.transition[:, :1], name="bsc-pair"
    )


PRESETS = {
    "bsc-interference": make_bsc_interference,
    "stuck-memory": make_stuck_memory,
    "bsc-pair": make_bsc_pair,
    "bsc": make_bsc,
    "noiseless": make_noiseless_binary,
}


def channel_from_config(cfg: dict) -> StateChannel:
    """Build a channel from ``{"preset": name, **params}`` or an inline table."""
    if "preset" in cfg:
        params = {k: v for k, v in cfg.items() if k != "preset"}
        try:
            factory = PRESETS[cfg["preset"]]
        except KeyError:
            raise ValueError(f"unknown channel preset {cfg['preset']!r}") from None
        return factory(**params)
    return StateChannel.from_dict(cfg)


def sample_from_uniforms(ch: StateChannel, x, s, uniforms):
    """Map uniforms in [0, 1) to channel outputs; the deterministic core of sampling."""
    x = np.asarray(x, dtype=np.intp)
    s = np.asarray(s, dtype=np.intp)
    nx, ns, n1, n2 = ch.shape
    if x.shape != s.shape:
        raise ValueError("input and state blocks differ in shape")
    if x.size and (x.min() < 0 or x.max() >= nx):
        raise ValueError("input symbol outside the channel input alphabet")
    if s.size and (s.min() < 0 or s.max() >= ns):
        raise ValueError("state symbol outside the state alphabet")
    cdf = np.cumsum(ch.transition.reshape(nx, ns, n1 * n2), axis=-1)
    rows = cdf[x, s]
    idx = (np.asarray(uniforms)[..., None] >= rows).sum(axis=-1)
    idx = np.minimum(idx, n1 * n2 - 1)
    return (idx // n2).astype(np.intp), (idx % n2).astype(np.intp)


def sample_transmission(ch: StateChannel, x, s, rng) -> tuple[np.ndarray, np.ndarray]:
    """Pass input and state blocks through the channel, i.i.d. per symbol.

    ``rng`` is a seed or a ``numpy.random.Generator``; identical seeds give
    identical noise realizations.
    """
    rng = np.random.default_rng(rng)
    return sample_from_uniforms(ch, x, s, rng.random(np.shape(x)))


def sample_states(ch: StateChannel, shape, rng) -> np.ndarray:
    rng = np.random.default_rng(rng)
    return rng.choice(len(ch.p_s), size=shape, p=ch.p_s).astype(np.intp)


def check_degraded(ch: StateChannel, tol: float = DEGRADED_TOL) -> Optional[DegradednessWitness]:
    """Look for P(y2 | y1) with sum_y1 P(y1|x,s) P(y2|y1) = P(y2|x,s) for all (x, s).

    Returns the witness, or None when no stochastic matrix satisfies the
    composition to within ``tol``.
    """
    nx, ns, n1, n2 = ch.shape
    p1 = ch.marginal(1).reshape(nx * ns, n1)
    p2 = ch.marginal(2).reshape(nx * ns, n2)
    # unknowns: W[y1, y2] flattened row-major
    a_comp = np.zeros((nx * ns * n2, n1 * n2))
    for r in range(nx * ns):
        for y2 in range(n2):
            a_comp[r * n2 + y2, np.arange(n1) * n2 + y2] = p1[r]
    a_rows = np.zeros((n1, n1 * n2))
    for y1 in range(n1):
        a_rows[y1, y1 * n2 : (y1 + 1) * n2] = 1.0
    a_eq = np.vstack([a_comp, a_rows])
    b_eq = np.concatenate([p2.reshape(-1), np.ones(n1)])
    res = linprog(np.zeros(n1 * n2), A_eq=a_eq, b_eq=b_eq, bounds=(0, 1), method="highs")
    if res.status != 0:
        return None
    w = np.clip(res.x.reshape(n1, n2), 0.0, 1.0)
    w /= w.sum(axis=1, keepdims=True)
    if np.max(np.abs(p1 @ w - p2)) > tol:
        return None
    return DegradednessWitness(w)
