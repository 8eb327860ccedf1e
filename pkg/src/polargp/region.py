"""
Rate-region formulas for finite alphabets and a brute-force strategy search.

An :class:`AuxStrategy` fixes the auxiliary laws P(v1 | s), P(v2 | v1, s) and
the symbol map x = f(v1, v2, s); every region formula is then an exact
combination of mutual informations under the induced joint law.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .channels import StateChannel
from .prob import entropy_of

BOUNDARY_TOL = 1e-10


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class AuxStrategy:
    """Auxiliary variables for superposition Gelfand-Pinsker coding.

    Attributes
    ----------
    p_v1_s : ndarray (|S|, |V1|)
        Rows P(v1 | s).
    p_v2_v1s : ndarray (|V1|, |S|, |V2|)
        Rows P(v2 | v1, s).
    f : ndarray of int (|V1|, |V2|, |S|)
        Input-alphabet index sent for each (v1, v2, s).
    """

    p_v1_s: np.ndarray
    p_v2_v1s: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.p_v1_s, dtype=float)
        b = np.asarray(self.p_v2_v1s, dtype=float)
        f = np.asarray(self.f, dtype=np.intp)
        ns, nv1 = a.shape
        if b.shape[:2] != (nv1, ns):
            raise ValueError("P(v2 | v1, s) must be indexed [v1, s, v2]")
        if f.shape != (nv1, b.shape[2], ns):
            raise ValueError("f must be indexed [v1, v2, s]")
        for rows in (a, b):
            if np.any(rows < 0) or np.max(np.abs(rows.sum(axis=-1) - 1)) > 1e-12:
                raise ValueError("conditional law rows must be distributions")
        for arr in (a, b, f):
            arr.setflags(write=False)
        object.__setattr__(self, "p_v1_s", a)
        object.__setattr__(self, "p_v2_v1s", b)
        object.__setattr__(self, "f", f)

    @property
    def v1_size(self) -> int:
        return self.p_v1_s.shape[1]

    @property
    def v2_size(self) -> int:
        return self.p_v2_v1s.shape[2]

    @property
    def s_size(self) -> int:
        return self.p_v1_s.shape[0]

    @classmethod
    def single(cls, p_v_s, f_vs) -> "AuxStrategy":
        """A one-layer strategy (constant V2) from P(v | s) and x = f(v, s)."""
        p_v_s = np.asarray(p_v_s, dtype=float)
        f_vs = np.asarray(f_vs, dtype=np.intp)
        ns, nv = p_v_s.shape
        return cls(p_v_s, np.ones((nv, ns, 1)), f_vs[:, None, :])

    def to_dict(self) -> dict:
        return {
            "p_v1_s": self.p_v1_s.tolist(),
            "p_v2_v1s": self.p_v2_v1s.tolist(),
            "f": self.f.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuxStrategy":
        if "p_v_s" in d:
            return cls.single(d["p_v_s"], d["f"])
        return cls(np.asarray(d["p_v1_s"]), np.asarray(d["p_v2_v1s"]), np.asarray(d["f"]))


def full_joint(ch: StateChannel, st: AuxStrategy) -> np.ndarray:
    """P[s, v1, v2, x, y1, y2] induced by the channel and the strategy."""
    nx, ns, n1, n2 = ch.shape
    if st.s_size != ns:
        raise ValueError("strategy and channel disagree on the state alphabet")
    if st.f.size and (st.f.min() < 0 or st.f.max() >= nx):
        raise ValueError("strategy maps outside the input alphabet")
    p_sv1v2 = ch.p_s[:, None, None] * st.p_v1_s[:, :, None] * np.transpose(st.p_v2_v1s, (1, 0, 2))
    onehot = np.zeros((ns, st.v1_size, st.v2_size, nx))
    s_idx, v1_idx, v2_idx = np.meshgrid(
        np.arange(ns), np.arange(st.v1_size), np.arange(st.v2_size), indexing="ij"
    )
    onehot[s_idx, v1_idx, v2_idx, st.f[v1_idx, v2_idx, s_idx]] = 1.0
    t = np.transpose(ch.transition, (1, 0, 2, 3))  # [s, x, y1, y2]
    return np.einsum("sabx,sxyz->sabxyz", p_sv1v2[..., None] * onehot, t)


AXES = {"s": 0, "v1": 1, "v2": 2, "x": 3, "y1": 4, "y2": 5}


def _h(p: np.ndarray, keep: Iterable[str]) -> float:
    keep_axes = {AXES[k] for k in keep}
    drop = tuple(i for i in range(p.ndim) if i not in keep_axes)
    return entropy_of(p.sum(axis=drop))


def info(p: np.ndarray, a: Sequence[str], b: Sequence[str], given: Sequence[str] = ()) -> float:
    """I(A; B | C) in bits from the full joint, with variables named as in ``AXES``."""
    a, b, c = set(a), set(b), set(given)
    return _h(p, a | c) + _h(p, b | c) - _h(p, a | b | c) - _h(p, c)


def _flag(lhs: float, rhs: float) -> str:
    if abs(lhs - rhs) <= BOUNDARY_TOL:
        return "boundary"
    return "true" if lhs > rhs else "false"


@dataclass(frozen=True)
class RegionCorner:
    r1: float
    r2: float
    conditions: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return all(v == "true" for v in self.conditions.values())

    def as_tuple(self) -> tuple[float, float]:
        return (self.r1, self.r2)


def region_bcsi_common(ch: StateChannel, input_pmf) -> tuple[float, float]:
    """(I(X; Y1), I(X; Y2)) for a stateless channel and input law."""
    if len(ch.s_alphabet) != 1:
        raise ValueError("region_bcsi_common expects a constant-state channel")
    px = np.asarray(input_pmf, dtype=float)
    out = []
    for m in (1, 2):
        w = ch.marginal(m)[:, 0, :]
        out.append(max(entropy_of((px[:, None] * w).sum(0)) + entropy_of(px) - entropy_of(px[:, None] * w), 0.0))
    return tuple(out)


def region_gp(ch: StateChannel, receiver: int, p_u_s, f_us) -> float:
    """I(U; Y) - I(U; S) for the strategy P(u | s), x = f(u, s)."""
    p = full_joint(ch, AuxStrategy.single(p_u_s, f_us))
    y = "y1" if receiver == 1 else "y2"
    return info(p, ["v1"], [y]) - info(p, ["v1"], ["s"])


def region_bcsi_state(ch: StateChannel, st: AuxStrategy) -> RegionCorner:
    """Corner (I(V1,V2;Y1) - I(V1,V2;S), I(V1;Y2) - I(V1;S)) and condition flags."""
    p = full_joint(ch, st)
    r1 = info(p, ["v1", "v2"], ["y1"]) - info(p, ["v1", "v2"], ["s"])
    r2 = info(p, ["v1"], ["y2"]) - info(p, ["v1"], ["s"])
    markov1 = info(p, ["v1", "v2"], ["y1"], ["x", "s"])
    markov2 = info(p, ["v1", "v2"], ["y2"], ["x", "s"])
    v1_s = info(p, ["v1"], ["s"])
    conditions = {
        "markov_y1": "true" if markov1 <= BOUNDARY_TOL else "false",
        "markov_y2": "true" if markov2 <= BOUNDARY_TOL else "false",
        "layer2": _flag(info(p, ["v2"], ["y1"], ["v1"]), info(p, ["v2"], ["s"], ["v1"])),
        "layer1_rx1": _flag(info(p, ["v1"], ["y1"]), v1_s),
        "layer1_rx2": _flag(info(p, ["v1"], ["y2"]), v1_s),
    }
    return RegionCorner(r1, r2, conditions)


# --------------------------------------------------------------------------
# strategy search


def simplex_grid(size: int, resolution: int) -> np.ndarray:
    """All points of the probability simplex on ``size`` symbols with step 1/resolution."""
    pts = [
        np.diff(np.concatenate([[0], bars, [resolution + size]])) - 1
        for bars in itertools.combinations(range(1, resolution + size), size - 1)
    ] if size > 1 else [np.array([resolution])]
    return np.array(pts, dtype=float) / resolution


def relevant_states(ch: StateChannel) -> list[int]:
    """States in which the input actually influences the outputs."""
    t = ch.transition
    return [s for s in range(t.shape[1]) if not np.allclose(t[:, s], t[:1, s])]


@dataclass
class SearchResult:
    corner: RegionCorner
    strategy: Optional[AuxStrategy]
    objective: float
    evaluated: int


def _batch_corners(ch, p_v1_s, p_v2_v1s, f):
    """R1, R2 for a batch of strategies sharing one symbol map ``f``."""
    nx, ns, n1, n2 = ch.shape
    # p_v1_s: (N, S, V1); p_v2_v1s: (N, V1, S, V2)
    w = ch.transition[f.transpose(2, 0, 1), np.arange(ns)[:, None, None]]  # [s, v1, v2, y1, y2]
    p_sv = ch.p_s[None, :, None, None] * p_v1_s[:, :, :, None] * np.transpose(p_v2_v1s, (0, 2, 1, 3))
    p = p_sv[..., None, None] * w[None]  # (N, s, v1, v2, y1, y2)

    def h(keep):
        drop = tuple(i for i in range(1, 6) if i not in keep)
        q = p.sum(axis=drop).reshape(p.shape[0], -1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return -np.where(q > 0, q * np.log2(q), 0.0).sum(axis=1)

    S, V1, V2, Y1, Y2 = 1, 2, 3, 4, 5
    i_v_y1 = h({V1, V2}) + h({Y1}) - h({V1, V2, Y1})
    i_v_s = h({V1, V2}) + h({S}) - h({V1, V2, S})
    i_v1_y2 = h({V1}) + h({Y2}) - h({V1, Y2})
    i_v1_s = h({V1}) + h({S}) - h({V1, S})
    return i_v_y1 - i_v_s, i_v1_y2 - i_v1_s


def search_strategies(
    ch: StateChannel,
    v1_size: int = 2,
    v2_size: int = 1,
    resolution: int = 8,
    budget: int = 5_000_000,
    weights: tuple[float, float] = (1.0, 1.0),
    min_r2: Optional[float] = None,
    seeds: Sequence[AuxStrategy] = (),
    chunk: int = 20000,
) -> SearchResult:
    """Exhaustive grid search for the best corner under ``w1 R1 + w2 R2``.

    Conditional laws range over the simplex grid with step ``1/resolution``;
    symbol maps are enumerated over the states where the input matters (the
    map is fixed to input 0 elsewhere). ``v2_size=1`` searches the
    constant-V2 (single auxiliary) region. Corners with ``R2 < min_r2`` are
    discarded. ``seeds`` are evaluated in addition to the grid.
    """
    nx, ns, _, _ = ch.shape
    rel = relevant_states(ch)
    g1 = simplex_grid(v1_size, resolution)
    g2 = simplex_grid(v2_size, resolution)
    n_laws = len(g1) ** ns * len(g2) ** (v1_size * ns)
    n_maps = nx ** (v1_size * v2_size * len(rel))
    total = n_laws * n_maps
    if total > budget:
        raise BudgetExceeded(f"grid has {total} strategies, budget is {budget}")

    w1, w2 = weights
    best = (-np.inf, None, None)

    def consider(r1, r2, make):
        nonlocal best
        score = w1 * r1 + w2 * r2
        if min_r2 is not None:
            score = np.where(r2 >= min_r2 - BOUNDARY_TOL, score, -np.inf)
        k = int(np.argmax(score))
        # strict improvement keeps the earliest grid point on ties
        if score[k] > best[0] + 1e-12:
            best = (float(score[k]), make(k), (float(r1[k]), float(r2[k])))

    for st in seeds:
        r1, r2 = _batch_corners(ch, st.p_v1_s[None], st.p_v2_v1s[None], st.f)
        consider(r1, r2, lambda k, st=st: st)

    law_index = itertools.product(range(len(g1)), repeat=ns)
    v2_index = list(itertools.product(range(len(g2)), repeat=v1_size * ns))
    laws1 = np.array([[g1[i] for i in combo] for combo in law_index])  # (L1, S, V1)
    laws2 = np.array([[g2[i] for i in combo] for combo in v2_index]).reshape(-1, v1_size, ns, v2_size)
    # pair every V1 law with every V2 law
    pairs = np.array(list(itertools.product(range(len(laws1)), range(len(laws2)))), dtype=np.intp)

    for values in itertools.product(range(nx), repeat=v1_size * v2_size * len(rel)):
        f = np.zeros((v1_size, v2_size, ns), dtype=np.intp)
        if rel:
            f[:, :, rel] = np.array(values, dtype=np.intp).reshape(v1_size, v2_size, len(rel))
        for start in range(0, len(pairs), chunk):
            sel = pairs[start : start + chunk]
            a, b = laws1[sel[:, 0]], laws2[sel[:, 1]]
            r1, r2 = _batch_corners(ch, a, b, f)
            consider(r1, r2, lambda k, a=a, b=b, f=f.copy(): AuxStrategy(a[k], b[k], f))

    score, st, corner = best
    if st is None:
        return SearchResult(RegionCorner(float("nan"), float("nan")), None, -np.inf, total + len(seeds))
    return SearchResult(region_bcsi_state(ch, st), st, score, total + len(seeds))


def stuck_memory_strategy(ch: StateChannel) -> AuxStrategy:
    """The two-layer strategy for the stuck-at memory channel.

    V1 is the coarse half of the stored symbol ({1, 2} -> 0, {3, 4} -> 1) and
    V2 the bit selecting within that half, so X = 2 V1 + V2 + 1. When the cell
    is stuck both bits copy the stuck value; otherwise both are uniform.
    """
    if ch.x_alphabet != (1, 2, 3, 4) or ch.s_alphabet != (0, 1, 2, 3, 4):
        raise ValueError("strategy is defined for the stuck-at memory channel")
    ns = 5
    p_v1_s = np.zeros((ns, 2))
    p_v2_v1s = np.full((2, ns, 2), 0.5)
    p_v1_s[0] = 0.5
    for s in range(1, ns):
        hi, lo = divmod(s - 1, 2)
        p_v1_s[s, hi] = 1.0
        p_v2_v1s[hi, s] = [1.0 - lo, float(lo)]
    f = np.zeros((2, 2, ns), dtype=np.intp)
    f[:, :, :] = (2 * np.arange(2)[:, None] + np.arange(2)[None, :])[:, :, None]
    return AuxStrategy(p_v1_s, p_v2_v1s, f)


def interference_strategy(q_bias: float = 0.5) -> AuxStrategy:
    """Binary dirty-paper strategy for Y = X xor Z xor S: V ~ Bern(q_bias) independent of S, X = V xor S."""
    p_v_s = np.array([[1 - q_bias, q_bias], [1 - q_bias, q_bias]])
    f = np.array([[0, 1], [1, 0]])  # f[v, s] = v xor s
    return AuxStrategy.single(p_v_s, f)
