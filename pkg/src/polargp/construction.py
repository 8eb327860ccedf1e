"""
Code construction: Bhattacharyya profiles, polarization sets, causal
capacity and block-chain planning.

Index sets are stored 0-based as sorted ``int`` arrays.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np

from .channels import StateChannel
from .polar import genie_probabilities, is_power_of_two, likelihoods, polar_transform
from .prob import JointPmf, conditional_entropy
from .region import AuxStrategy, full_joint, AXES, relevant_states

DEFAULT_BETA = 0.45
RATE_EPS = 1e-9


class InfeasiblePlan(ValueError):
    """Requested rates or sets cannot be realized by the chaining layout."""


# --------------------------------------------------------------------------
# Bhattacharyya profiles


@dataclass(frozen=True)
class ZProfile:
    n: int
    z: np.ndarray
    conditioning: str
    cond_entropy: float = float("nan")

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.shape != (self.n,):
            raise ValueError("profile length differs from n")
        if np.any(z < 0) or np.any(z > 1):
            raise ValueError("Bhattacharyya values must lie in [0, 1]")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "conditioning": self.conditioning,
            "cond_entropy": self.cond_entropy,
            "z": self.z.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ZProfile":
        return cls(int(d["n"]), np.asarray(d["z"]), d["conditioning"], float(d["cond_entropy"]))


def sample_joint(joint: JointPmf, shape, rng) -> tuple[np.ndarray, np.ndarray]:
    """Draw i.i.d. pairs (x, obs index) from a joint table."""
    flat = joint.table.reshape(-1)
    idx = rng.choice(flat.size, size=shape, p=flat / flat.sum())
    return (idx // joint.n_obs).astype(np.uint8), (idx % joint.n_obs).astype(np.intp)


def estimate_z_profile(
    joint: JointPmf,
    n: int,
    samples: int,
    seed=0,
    conditioning: str = "",
    batch: int = 500,
) -> ZProfile:
    """Monte Carlo estimate of Z(U^i | obs, U^{1:i-1}) for every index.

    Each draw samples an i.i.d. block from ``joint``, forms ``u = x G_n`` and
    evaluates the exact successive-cancellation posterior at every index with
    the true prefix. The per-index mean of ``2 sqrt(p0 p1)`` is returned.
    """
    if not is_power_of_two(n):
        raise ValueError(f"block length must be a power of 2, got {n}")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    total = np.zeros(n)
    done = 0
    while done < samples:
        b = min(batch, samples - done)
        x, obs = sample_joint(joint, (b, n), rng)
        p1 = genie_probabilities(likelihoods(joint, obs), polar_transform(x))
        p1 = np.nan_to_num(p1, nan=0.0)
        total += (2.0 * np.sqrt(np.clip(p1 * (1.0 - p1), 0.0, None))).sum(axis=0)
        done += b
    z = np.clip(total / samples, 0.0, 1.0)
    return ZProfile(n, z, conditioning, conditional_entropy(joint))


# --------------------------------------------------------------------------
# polarization sets


def _largest(z: np.ndarray, count: int) -> np.ndarray:
    order = np.argsort(-z, kind="stable")
    return np.sort(order[:count])


def _smallest(z: np.ndarray, count: int) -> np.ndarray:
    order = np.argsort(z, kind="stable")
    return np.sort(order[:count])


def high_set(profile: ZProfile, policy: str = "rate-target", beta: float = DEFAULT_BETA, size=None) -> np.ndarray:
    n = profile.n
    if size is None and policy == "threshold":
        delta = 2.0 ** (-(n**beta))
        return np.flatnonzero(profile.z >= 1.0 - delta)
    if size is None:
        size = math.ceil(n * profile.cond_entropy - RATE_EPS)
    if not 0 <= size <= n:
        raise ValueError(f"high-set size {size} outside [0, {n}]")
    return _largest(profile.z, size)


def low_set(profile: ZProfile, policy: str = "rate-target", beta: float = DEFAULT_BETA, size=None) -> np.ndarray:
    n = profile.n
    if size is None and policy == "threshold":
        delta = 2.0 ** (-(n**beta))
        return np.flatnonzero(profile.z <= delta)
    if size is None:
        size = math.ceil(n * (1.0 - profile.cond_entropy) - RATE_EPS)
    if not 0 <= size <= n:
        raise ValueError(f"low-set size {size} outside [0, {n}]")
    return _smallest(profile.z, size)


@dataclass(frozen=True)
class PolarSets:
    """One high-entropy set (encoder side) and one low-entropy set per receiver.

    ``high`` is H for the encoder-side conditioning (given the state, or given
    nothing for stateless codes); ``low[m]`` is L for receiver ``m``'s
    output-side conditioning. The four classes of receiver ``m`` are

    * ``info``   H and L       (message positions)
    * ``f_a``    H, not L      (uniform frozen)
    * ``f_r``    not H, not L  (frozen from the state, not decodable)
    * ``f_f``    not H, L      (frozen from the state, decodable)
    """

    n: int
    high: np.ndarray
    low: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "high", np.asarray(self.high, dtype=np.intp))
        object.__setattr__(self, "low", {int(m): np.asarray(v, dtype=np.intp) for m, v in self.low.items()})

    @property
    def receivers(self) -> list[int]:
        return sorted(self.low)

    def mask(self, idx) -> np.ndarray:
        out = np.zeros(self.n, dtype=bool)
        out[np.asarray(idx, dtype=np.intp)] = True
        return out

    def _classes(self, m: int):
        h = self.mask(self.high)
        lo = self.mask(self.low[m])
        return h & lo, h & ~lo, ~h & ~lo, ~h & lo

    def info(self, m: int) -> np.ndarray:
        return np.flatnonzero(self._classes(m)[0])

    def f_a(self, m: int) -> np.ndarray:
        return np.flatnonzero(self._classes(m)[1])

    def f_r(self, m: int) -> np.ndarray:
        return np.flatnonzero(self._classes(m)[2])

    def f_f(self, m: int) -> np.ndarray:
        return np.flatnonzero(self._classes(m)[3])

    def partition(self, m: int) -> dict:
        i, a, r, f = self._classes(m)
        return {"I": np.flatnonzero(i), "F_a": np.flatnonzero(a), "F_r": np.flatnonzero(r), "F_f": np.flatnonzero(f)}

    def to_dict(self) -> dict:
        d = {"n": self.n, "high": self.high.tolist(), "low": {str(m): v.tolist() for m, v in self.low.items()}}
        d["receivers"] = {str(m): {k: v.tolist() for k, v in self.partition(m).items()} for m in self.receivers}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PolarSets":
        return cls(int(d["n"]), np.asarray(d["high"]), {int(m): np.asarray(v) for m, v in d["low"].items()})


def build_polar_sets(
    state_profile: ZProfile,
    output_profiles: dict,
    policy: str = "rate-target",
    beta: float = DEFAULT_BETA,
    low_sizes: Optional[dict] = None,
    high_size: Optional[int] = None,
) -> PolarSets:
    """Partition indices from one encoder-side and per-receiver output-side profiles.

    ``policy`` is ``"rate-target"`` (sizes from the conditional entropies,
    ties to the lower index) or ``"threshold"`` (``delta = 2^{-n^beta}``).
    ``low_sizes`` overrides the L-set size per receiver, which is how a code
    is fitted to a requested rate.
    """
    if policy not in ("rate-target", "threshold"):
        raise ValueError(f"unknown set policy {policy!r}")
    n = state_profile.n
    for m, prof in output_profiles.items():
        if prof.n != n:
            raise ValueError(f"profile for receiver {m} has n={prof.n}, expected {n}")
    low_sizes = low_sizes or {}
    high = high_set(state_profile, policy, beta, high_size)
    low = {m: low_set(prof, policy, beta, low_sizes.get(m)) for m, prof in output_profiles.items()}
    return PolarSets(n, high, low)


# --------------------------------------------------------------------------
# joints induced by an auxiliary strategy


def aux_joint(ch: StateChannel, st: AuxStrategy, bit: str, given: Sequence[str]) -> JointPmf:
    """Per-symbol joint of a binary auxiliary and a fused observation.

    ``bit`` is ``"v1"`` or ``"v2"``; ``given`` lists observed variables
    (from ``s, v1, x, y1, y2``) fused row-major into one symbol index.
    """
    p = full_joint(ch, st)
    keep = [AXES[bit]] + [AXES[g] for g in given]
    drop = tuple(a for a in range(p.ndim) if a not in keep)
    q = p.sum(axis=drop)
    order = np.argsort(np.argsort(keep))  # axes of q follow increasing original order
    q = np.transpose(q, order)
    if q.shape[0] != 2:
        raise ValueError(f"auxiliary {bit} is not binary")
    table = q.reshape(2, -1)
    return JointPmf(table / table.sum())


def fuse_obs(blocks: Sequence[np.ndarray], sizes: Sequence[int]) -> np.ndarray:
    """Row-major fusion of several index blocks into one observation index."""
    out = np.zeros(np.shape(blocks[0]), dtype=np.intp)
    for b, size in zip(blocks, sizes):
        out = out * size + np.asarray(b, dtype=np.intp)
    return out


# --------------------------------------------------------------------------
# capacity


def blahut_arimoto(w: np.ndarray, tol: float = 1e-9, max_iter: int = 200000) -> tuple[float, np.ndarray]:
    """Capacity in bits of the DMC ``w[a, y]`` and a capacity-achieving input law.

    Iterates the alternating-maximization update until the gap between the
    upper bound max_a D(w_a || q) and the lower bound I(p; w) is below ``tol``.
    """
    w = np.asarray(w, dtype=float)
    na = w.shape[0]
    p = np.full(na, 1.0 / na)
    logw = np.where(w > 0, np.log2(np.where(w > 0, w, 1.0)), 0.0)
    for _ in range(max_iter):
        q = p @ w
        logq = np.log2(np.where(q > 0, q, 1.0))
        d = (w * (logw - logq[None, :])).sum(axis=1)
        lower = float(p @ d)
        upper = float(d.max())
        if upper - lower < tol:
            break
        p = p * np.exp2(d)
        p /= p.sum()
    return max(lower, 0.0), p


@dataclass(frozen=True)
class CausalStrategy:
    """x = f[v, s] with V ~ p_v independent of the state."""

    capacity: float
    f: np.ndarray
    p_v: np.ndarray

    @property
    def v_size(self) -> int:
        return len(self.p_v)

    def to_dict(self) -> dict:
        return {"capacity": self.capacity, "f": self.f.tolist(), "p_v": self.p_v.tolist()}


def _strategy_channel(ch: StateChannel, receiver: int, f: np.ndarray) -> np.ndarray:
    # W(y | v) = sum_s P(s) P(y | f(v, s), s)
    w = ch.marginal(receiver)
    ns = len(ch.p_s)
    return np.einsum("s,vsy->vy", ch.p_s, w[f, np.arange(ns)[None, :]])


def causal_capacity(
    ch: StateChannel,
    receiver: int = 1,
    v_size: Optional[int] = None,
    ignore_state: bool = False,
    budget: int = 100_000,
    tol: float = 1e-9,
) -> CausalStrategy:
    """max over P_V and f: V x S -> X of I(V; Y) with V independent of S.

    Maps are enumerated over the states where the input matters. With
    ``v_size=None`` the auxiliary ranges over all such maps at once (the
    Shannon-strategy alphabet) and one Blahut-Arimoto run gives the optimum;
    otherwise every choice of ``v_size`` distinct maps is tried. With
    ``ignore_state`` the maps are constant in the state.
    """
    nx, ns = ch.shape[:2]
    rel = relevant_states(ch)
    if ignore_state:
        strategies = [np.full(ns, x, dtype=np.intp) for x in range(nx)]
    else:
        strategies = []
        for values in itertools.product(range(nx), repeat=len(rel)):
            t = np.zeros(ns, dtype=np.intp)
            t[rel] = values
            strategies.append(t)
    strategies = np.array(strategies, dtype=np.intp)
    if v_size is None or v_size >= len(strategies):
        if len(strategies) > budget:
            raise ValueError(f"{len(strategies)} strategies exceed the budget {budget}")
        cap, p = blahut_arimoto(_strategy_channel(ch, receiver, strategies), tol)
        if v_size is not None and v_size > len(strategies):
            pad = v_size - len(strategies)
            strategies = np.vstack([strategies, np.repeat(strategies[:1], pad, axis=0)])
            p = np.concatenate([p, np.zeros(pad)])
        return CausalStrategy(cap, strategies, p)
    combos = list(itertools.combinations(range(len(strategies)), v_size))
    if len(combos) > budget:
        raise ValueError(f"{len(combos)} maps exceed the budget {budget}")
    best = None
    for combo in combos:
        f = strategies[list(combo)]
        cap, p = blahut_arimoto(_strategy_channel(ch, receiver, f), tol)
        if best is None or cap > best.capacity + 1e-12:
            best = CausalStrategy(cap, f, p)
    return best


# --------------------------------------------------------------------------
# chain planning


class Role(IntEnum):
    COMMON = 0   # equivalent common message M'0
    PRIVATE = 1  # private message stream (M101, M11 or the single-user message)
    CHAIN = 2    # copy of frozen content from a neighbouring block
    NETWORK = 3  # XOR of a private stream and chain content (overlap case)
    LAMBDA = 4   # frozen, drawn from the encoder-side conditional law
    GAMMA = 5    # frozen, uniform


def pre_phase_blocks(bits: int, per_block: int) -> int:
    """Blocks needed to pre-communicate ``bits`` at ``per_block`` bits each."""
    if bits == 0:
        return 0
    if per_block <= 0:
        raise InfeasiblePlan("pre-phase code carries no information")
    return math.ceil(bits / per_block)


def _top(idx: np.ndarray, count: int) -> np.ndarray:
    return np.sort(np.asarray(idx, dtype=np.intp)[::-1][:count]) if count else np.zeros(0, dtype=np.intp)


@dataclass
class ChainPlan:
    """Index layout shared by every block of a chained code.

    ``roles(b)`` gives the encoder role of each index in payload block ``b``
    (0-based, ``0 <= b < k``). Pre-phase blocks are not part of the role map.
    """

    scheme: str
    n: int
    k: int
    t: int
    high: np.ndarray
    common: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    d1: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    d2: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    d10: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    d11: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    r1: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    r2: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    overlap: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    fr1: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    fr2: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    case: str = "a"
    stateless: bool = False

    @property
    def overlap_bits(self) -> int:
        return len(self.overlap)

    def roles(self, b: int) -> np.ndarray:
        if not 0 <= b < self.k:
            raise IndexError(f"block {b} outside 0..{self.k - 1}")
        first, last = b == 0, b == self.k - 1
        r = np.full(self.n, Role.LAMBDA, dtype=np.int8)
        r[self.high] = Role.GAMMA
        if self.stateless:
            # every frozen position follows the (recomputable) unconditioned law
            r[:] = Role.LAMBDA
        r[self.common] = Role.COMMON
        if not last:
            r[self.d2] = Role.COMMON
        elif self.d2.size:
            r[self.d2] = Role.LAMBDA if self.stateless else Role.GAMMA
        frozen_first = Role.LAMBDA if self.stateless else Role.GAMMA
        if first:
            r[self.d10] = frozen_first
            r[self.d11] = frozen_first
            r[self.r1] = frozen_first
        else:
            r[self.d10] = Role.CHAIN
            r[self.d11] = Role.PRIVATE
            r[self.r1] = Role.CHAIN
        r2_plain = np.setdiff1d(self.r2, self.overlap)
        r[r2_plain] = frozen_first if last else Role.CHAIN
        r[self.overlap] = Role.NETWORK
        return r

    def common_slots(self) -> int:
        return self.k * len(self.common) + (self.k - 1) * len(self.d2)

    def private_slots(self) -> int:
        return (self.k - 1) * (len(self.d11) + len(self.overlap))

    def receiver_bits(self, m: int) -> int:
        """Message bits decodable by receiver m over the k payload blocks."""
        if m == 1:
            return self.common_slots() + self.private_slots()
        return self.common_slots()

    def summary(self) -> dict:
        keys = ("common", "d1", "d2", "d10", "d11", "r1", "r2", "overlap", "fr1", "fr2")
        d = {"scheme": self.scheme, "n": self.n, "k": self.k, "t": self.t, "case": self.case}
        d.update({key: getattr(self, key).tolist() for key in keys})
        return d


@dataclass
class SingleChainPlan:
    """One forward chain R <- F_r of the previous block (single user, or layer 2)."""

    n: int
    k: int
    t: int
    high: np.ndarray
    info: np.ndarray
    chain: np.ndarray
    f_r: np.ndarray

    @property
    def message(self) -> np.ndarray:
        return np.setdiff1d(self.info, self.chain)

    def roles(self, b: int) -> np.ndarray:
        if not 0 <= b < self.k:
            raise IndexError(f"block {b} outside 0..{self.k - 1}")
        r = np.full(self.n, Role.LAMBDA, dtype=np.int8)
        r[self.high] = Role.GAMMA
        r[self.message] = Role.PRIVATE
        r[self.chain] = Role.GAMMA if b == 0 else Role.CHAIN
        return r

    def message_slots(self) -> int:
        return self.k * len(self.message)

    def summary(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "t": self.t,
            "info": self.info.tolist(),
            "chain": self.chain.tolist(),
            "f_r": self.f_r.tolist(),
        }


def plan_single_chain(sets: PolarSets, k: int, receiver: int = 1, pre_bits_per_block: int = 0) -> SingleChainPlan:
    """Forward chain for one receiver: R is the top |F_r| indices of I."""
    if k < 1:
        raise ValueError("need at least one payload block")
    info, f_r = sets.info(receiver), sets.f_r(receiver)
    if len(f_r) > len(info):
        raise InfeasiblePlan(f"|F_r| = {len(f_r)} exceeds |I| = {len(info)}")
    t = pre_phase_blocks(len(f_r), pre_bits_per_block)
    return SingleChainPlan(sets.n, k, t, sets.high, info, _top(info, len(f_r)), f_r)


def plan_chain(
    sets: PolarSets,
    k: int,
    scheme: str = "bcsi-state",
    pre_bits_per_block: Optional[dict] = None,
    extra_rx1_pre_bits: int = 0,
) -> ChainPlan:
    """Lay out the dual chain and the network-coded D sets for two receivers.

    ``scheme`` is ``"bcsi-common"`` (no state: frozen bits are recomputable,
    no F_r chains) or ``"bcsi-state"``. Receiver 1 must be the stronger one
    (|D1| >= |D2|). ``pre_bits_per_block[m]`` is the information size of
    receiver m's pre-phase code; ``extra_rx1_pre_bits`` adds the layer-2
    F_r bits that share receiver 1's pre-phase.
    """
    if k < 2:
        raise ValueError("chaining needs k >= 2 blocks")
    if scheme not in ("bcsi-common", "bcsi-state"):
        raise ValueError(f"unknown scheme {scheme!r}")
    stateless = scheme == "bcsi-common"
    n = sets.n
    i1, i2 = sets.info(1), sets.info(2)
    only1, only2, both = np.setdiff1d(i1, i2), np.setdiff1d(i2, i1), np.intersect1d(i1, i2)
    empty = np.zeros(0, dtype=np.intp)
    if stateless:
        fr1 = fr2 = empty
    else:
        fr1, fr2 = sets.f_r(1), sets.f_r(2)
    if len(fr1) > len(only1):
        raise InfeasiblePlan(f"|F1r| = {len(fr1)} does not fit in I1 - I2 ({len(only1)})")
    if len(fr2) > len(i2):
        raise InfeasiblePlan(f"|F2r| = {len(fr2)} exceeds |I2| = {len(i2)}")
    r1 = _top(only1, len(fr1))
    spill = max(len(fr2) - len(only2), 0)
    overlap = _top(both, spill)
    r2 = np.union1d(_top(only2, len(fr2) - spill), overlap)
    case = "b" if spill else "a"
    common = np.setdiff1d(both, overlap)
    d2 = np.setdiff1d(only2, r2)
    free1 = np.setdiff1d(only1, r1)
    if len(free1) < len(d2):
        raise InfeasiblePlan(
            f"|D1| = {len(free1)} < |D2| = {len(d2)}: exchange the receiver roles"
        )
    d10 = free1[: len(d2)]
    d11 = free1[len(d2):]
    d1 = np.union1d(free1, overlap)

    pre = pre_bits_per_block or {}
    t = 0
    if len(fr2):
        t = max(t, pre_phase_blocks(len(fr2), pre.get(2, 0)))
    if len(fr1) + extra_rx1_pre_bits:
        t = max(t, pre_phase_blocks(len(fr1) + extra_rx1_pre_bits, pre.get(1, 0)))
    return ChainPlan(
        scheme, n, k, t, sets.high, common, d1, d2, d10, d11, r1, r2, overlap, fr1, fr2, case, stateless
    )


def save_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True)
        fh.write("\n")
