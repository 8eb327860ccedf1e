"""
Configuration-driven Monte Carlo experiments with CSV output.

Every rate point reuses one set of construction profiles; only the sizes of
the low-entropy sets are refitted, by bisection, so that the code carries
the requested number of message bits. Randomness is derived hierarchically
(master seed -> scheme -> trial -> block), so trial ``i`` sees the same
messages, states and noise at every rate point and regardless of how many
trials follow it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import time
from collections.abc import MutableMapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .bcsi import BcsiCode, BcsiMessages
from .channels import StateChannel, channel_from_config, sample_from_uniforms
from .codec import SharedRandomness
from .construction import InfeasiblePlan, ZProfile
from .gp import GpCode, PointToPointCode
from .polar import is_power_of_two
from .region import AuxStrategy, interference_strategy, search_strategies, stuck_memory_strategy

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SCHEMES = ("p2p", "gp", "bcsi-common", "bcsi-state")
CSV_HEADER = ("rate", "receiver", "fer", "ci95", "trials")
CACHE_ENV = "POLARGP_CACHE_DIR"
MAX_T_ROUNDS = 6


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    scheme: str
    channel: dict
    n: int
    rates: list
    k: int = 8
    trials: int = 100
    seed: str = "0"
    policy: str = "rate-target"
    samples: int = 1000
    strategy: object = None
    input_p1: float = 0.5
    receiver: int = 1
    pre_backoff: float = 0.5
    batch: int = 250
    output: Optional[str] = None
    schema: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema {self.schema!r} (expected {SCHEMA_VERSION})")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if not isinstance(self.n, int) or not is_power_of_two(self.n):
            raise ConfigError(f"n must be a power of two, got {self.n!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if self.k < (2 if self.scheme.startswith("bcsi") else 1):
            raise ConfigError("k is too small for this scheme")
        if self.policy not in ("rate-target", "threshold"):
            raise ConfigError(f"unknown construction policy {self.policy!r}")
        if self.receiver not in (1, 2):
            raise ConfigError("receiver must be 1 or 2")
        if self.batch < 1 or self.samples < 1:
            raise ConfigError("batch and samples must be positive")
        try:
            self.master = int(str(self.seed), 16)
        except ValueError:
            raise ConfigError(f"seed must be hexadecimal, got {self.seed!r}") from None
        self.rates = [_rate_triple(r) for r in self.rates]
        if not self.rates:
            raise ConfigError("at least one rate point is required")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        if "schema" not in d:
            raise ConfigError("config lacks the 'schema' field")
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d["rates"] = [list(r) for r in self.rates]
        return d

    def make_channel(self) -> StateChannel:
        try:
            return channel_from_config(self.channel)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"bad channel: {exc}") from None


def _rate_triple(r) -> tuple:
    if isinstance(r, (int, float)):
        r = (0.0, float(r), float(r))
    try:
        r0, r1, r2 = (float(v) for v in r)
    except (TypeError, ValueError):
        raise ConfigError(f"rate point {r!r} is not a number or an (R0, R1, R2) triple") from None
    if min(r0, r1, r2) < 0 or not all(map(math.isfinite, (r0, r1, r2))):
        raise ConfigError(f"rates must be finite and nonnegative, got {r!r}")
    return (r0, r1, r2)


def make_strategy(spec, ch: StateChannel) -> AuxStrategy:
    """Strategy from a config entry: a named strategy, a grid search or an inline table."""
    if spec is None or spec == "interference":
        return interference_strategy()
    if spec == "stuck-memory":
        return stuck_memory_strategy(ch)
    if isinstance(spec, dict) and "search" in spec:
        opts = dict(spec["search"])
        return search_strategies(ch, **opts).strategy
    if isinstance(spec, dict):
        return AuxStrategy.from_dict(spec)
    raise ConfigError(f"unknown strategy {spec!r}")


# ---------------------------------------------------------------- caching


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


class ProfileCache(MutableMapping):
    """In-memory construction cache, mirrored to ``$POLARGP_CACHE_DIR`` for Z profiles.

    Entries are keyed by conditioning label; the on-disk file name also folds
    in the channel, strategy, n, policy, sample count and seed.
    """

    def __init__(self, context: dict, directory: Optional[str] = None):
        self._mem: dict = {}
        self.prefix = _digest(context)
        directory = directory if directory is not None else os.environ.get(CACHE_ENV)
        self.directory = Path(directory) if directory else None

    def _path(self, key: str) -> Optional[Path]:
        if self.directory is None:
            return None
        return self.directory / f"z-{self.prefix}-{_digest(key)}.json"

    def __getitem__(self, key):
        if key in self._mem:
            return self._mem[key]
        path = self._path(key)
        if path is not None and path.exists():
            with open(path, encoding="utf-8") as fh:
                self._mem[key] = ZProfile.from_dict(json.load(fh))
            return self._mem[key]
        raise KeyError(key)

    def __contains__(self, key) -> bool:
        try:
            self[key]
        except KeyError:
            return False
        return True

    def __setitem__(self, key, value):
        self._mem[key] = value
        path = self._path(key)
        if path is not None and isinstance(value, ZProfile):
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(value.to_dict(), fh, sort_keys=True)
                fh.write("\n")
            os.replace(tmp, path)

    def __delitem__(self, key):
        del self._mem[key]

    def __iter__(self):
        return iter(self._mem)

    def __len__(self):
        return len(self._mem)


# ------------------------------------------------------------ rate fitting


def smallest_size(ok: Callable[[int], bool], n: int) -> Optional[int]:
    """Smallest ``l`` in ``0..n`` with ``ok(l)``, assuming ``ok`` is monotone; None if none."""
    if not ok(n):
        return None
    lo, hi = 0, n
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _try(fn):
    try:
        return fn()
    except InfeasiblePlan:
        return None


@dataclass
class RatePoint:
    r0: float
    r1: float
    r2: float
    bits: tuple = (0, 0, 0)
    code: object = None
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return self.code is not None


def message_bits(rate: float, symbols: int) -> int:
    return int(math.floor(rate * symbols + 1e-9))


class Experiment:
    """Build codes for each rate point of a config and simulate them."""

    def __init__(self, cfg: ExperimentConfig, cache_dir: Optional[str] = None):
        self.cfg = cfg
        self.channel = cfg.make_channel()
        self.strategy = None
        if cfg.scheme in ("gp", "bcsi-state"):
            self.strategy = make_strategy(cfg.strategy, self.channel)
        context = {
            "channel": self.channel.to_dict(),
            "strategy": None if self.strategy is None else self.strategy.to_dict(),
            "scheme": cfg.scheme,
            "input_p1": cfg.input_p1,
            "n": cfg.n,
            "policy": cfg.policy,
            "samples": cfg.samples,
            "seed": cfg.seed,
        }
        self.cache = ProfileCache(context, cache_dir)
        self.sr = SharedRandomness(int.from_bytes(hashlib.sha256(f"{cfg.master:x}/{cfg.scheme}/frozen".encode()).digest(), "big"))

    # -- construction ----------------------------------------------------

    def build(self, **sizes):
        cfg = self.cfg
        common = dict(samples=cfg.samples, seed=cfg.master, policy=cfg.policy, cache=self.cache)
        if cfg.scheme == "p2p":
            return PointToPointCode.build(self.channel, cfg.n, receiver=cfg.receiver, input_p1=cfg.input_p1,
                                          info_size=sizes.get("l1"), **common)
        if cfg.scheme == "gp":
            return GpCode.build(self.channel, self.strategy, cfg.n, cfg.k, receiver=cfg.receiver,
                                low_size=sizes.get("l1"), pre_backoff=cfg.pre_backoff, **common)
        low = None
        if "l1" in sizes or "l2" in sizes:
            low = {1: sizes.get("l1"), 2: sizes.get("l2")}
        if cfg.scheme == "bcsi-common":
            st = AuxStrategy.single([[1.0 - cfg.input_p1, cfg.input_p1]], [[0], [1]])
        else:
            st = self.strategy
        return BcsiCode.build(self.channel, st, cfg.n, cfg.k, scheme=cfg.scheme, low_sizes=low,
                              low_size2=sizes.get("l11"), pre_backoff=cfg.pre_backoff, **common)

    def fit(self, r0: float, r1: float, r2: float) -> RatePoint:
        """Smallest low-entropy sets carrying the requested rates, over all transmitted blocks."""
        cfg, n = self.cfg, self.cfg.n
        point = RatePoint(r0, r1, r2)
        if cfg.scheme == "p2p":
            bits = message_bits(r1, n)
            size = smallest_size(lambda l: self.build(l1=l).bits_per_block >= bits, n)
            point.bits = (0, bits, 0)
            if size is None:
                point.reason = f"{bits} bits exceed the largest information set"
            else:
                point.code = self.build(l1=size)
            return point
        t = 0
        for _ in range(MAX_T_ROUNDS):
            blocks = cfg.k + (t if cfg.scheme == "gp" else 2 * t)
            total = blocks * n
            if cfg.scheme == "gp":
                bits = (0, message_bits(r1, total), 0)
                size = smallest_size(lambda l: (_try(lambda: self.build(l1=l).message_bits) or 0) >= bits[1], n)
                code = None if size is None else self.build(l1=size)
            else:
                bits = tuple(message_bits(r, total) for r in (r0, r1, r2))
                code = self._fit_bcsi(*bits)
            point.bits = bits
            if code is None:
                point.reason = f"no set sizes carry {bits} message bits"
                return point
            if code.t <= t:
                point.code = code
                return point
            t = code.t
        point.reason = "pre-phase length did not settle"
        return point

    def _fit_bcsi(self, n0: int, n1: int, n2: int):
        n = self.cfg.n
        if n1 < n2:
            raise InfeasiblePlan("need R1 >= R2: exchange the receiver roles")

        def carries(code) -> bool:
            try:
                code.check_messages(n0, n1, n2)
            except InfeasiblePlan:
                return False
            return True

        def build(l1, l2):
            return _try(lambda: self.build(l1=l1, l2=l2))

        # receiver 2's set first, with receiver 1 unrestricted; then the
        # smallest receiver-1 set that carries everything. Indices of I2
        # outside I1 lose one common slot each, so l2 may have to grow.
        l2 = smallest_size(lambda l: (c := build(n, l)) is not None and c.common_slots() >= n0 + n2, n)
        while l2 is not None and l2 <= n:
            l1 = smallest_size(lambda l: (c := build(l, l2)) is not None and carries(c), n)
            if l1 is not None:
                return build(l1, l2)
            l2 += 1
        return None

    # -- simulation --------------------------------------------------------

    def _seq(self, *path) -> np.random.SeedSequence:
        label = int.from_bytes(hashlib.sha256(self.cfg.scheme.encode()).digest()[:8], "little")
        return np.random.SeedSequence(entropy=self.cfg.master, spawn_key=(label,) + tuple(path))

    def trial_inputs(self, trial: int, blocks: int, bits: tuple):
        """Messages, states and channel uniforms for one trial (independent of the rate point's code)."""
        rng = np.random.default_rng(self._seq(trial))
        msgs = [rng.integers(0, 2, b, dtype=np.uint8) for b in bits]
        n = self.cfg.n
        states = np.zeros((blocks, n), dtype=np.intp)
        unif = np.zeros((blocks, n))
        cdf = np.cumsum(self.channel.p_s)
        for j in range(blocks):
            brng = np.random.default_rng(self._seq(trial, j))
            states[j] = np.minimum(np.searchsorted(cdf, brng.random(n), side="right"), len(cdf) - 1)
            unif[j] = brng.random(n)
        return msgs, states, unif

    def simulate_point(self, point: RatePoint) -> list["ResultRow"]:
        cfg = self.cfg
        receivers = (cfg.receiver,) if cfg.scheme in ("p2p", "gp") else (1, 2)
        rates = {1: point.r1, 2: point.r2} if cfg.scheme.startswith("bcsi") else {cfg.receiver: point.r1}
        if not point.feasible:
            log.warning("rate point (%g, %g, %g) infeasible: %s", point.r0, point.r1, point.r2, point.reason)
            return [ResultRow(rates[m], m, float("nan"), float("nan"), 0) for m in receivers]
        start = time.perf_counter()
        errors = {m: 0 for m in receivers}
        for lo in range(0, cfg.trials, cfg.batch):
            ids = range(lo, min(lo + cfg.batch, cfg.trials))
            for m, e in self._run_batch(point, ids).items():
                errors[m] += int(e.sum())
        wall = time.perf_counter() - start
        return [ResultRow(rates[m], m, errors[m] / cfg.trials, ci95(errors[m] / cfg.trials, cfg.trials), cfg.trials, wall)
                for m in receivers]

    def _run_batch(self, point: RatePoint, ids) -> dict:
        cfg, code = self.cfg, point.code
        blocks = 1 if cfg.scheme == "p2p" else code.blocks
        inputs = [self.trial_inputs(i, blocks, point.bits) for i in ids]
        m0, m1, m2 = (np.stack([inp[0][c] for inp in inputs]) for c in range(3))
        states = np.stack([inp[1] for inp in inputs])
        unif = np.stack([inp[2] for inp in inputs])
        if cfg.scheme == "p2p":
            _, x = code.encode_block(m1, self.sr)
            y = self._outputs(x[:, None], states, unif)[cfg.receiver][:, 0]
            hat, _ = code.decode_block(m1.shape[1], y, self.sr)
            return {cfg.receiver: np.any(hat != m1, axis=1)}
        if cfg.scheme == "gp":
            frame = code.encode(m1, states, self.sr)
            y = self._outputs(frame.x, states, unif)[cfg.receiver]
            hat, _, _ = code.decode(y, self.sr, nbits=m1.shape[1])
            return {cfg.receiver: np.any(hat != m1, axis=1)}
        msgs = BcsiMessages(m0, m1, m2)
        frame = code.encode(msgs, states, self.sr)
        ys = self._outputs(frame.x, states, unif)
        d1 = code.decode(1, ys[1], m2, self.sr, m0.shape[1], m1.shape[1])
        d2 = code.decode(2, ys[2], m1, self.sr, m0.shape[1], m2.shape[1])
        return {
            1: np.any(d1.m0 != m0, axis=1) | np.any(d1.private != m1, axis=1),
            2: np.any(d2.m0 != m0, axis=1) | np.any(d2.private != m2, axis=1),
        }

    def feasible_point(self, index: int) -> RatePoint:
        point = self.fit(*self.cfg.rates[index])
        if not point.feasible:
            raise InfeasiblePlan(point.reason)
        return point

    def encode_frame(self, point: RatePoint, trial: int = 0) -> dict:
        """One trial's messages, states, channel inputs and both outputs, as JSON-ready lists."""
        cfg, code = self.cfg, point.code
        blocks = 1 if cfg.scheme == "p2p" else code.blocks
        (m0, m1, m2), states, unif = self.trial_inputs(trial, blocks, point.bits)
        trace = None
        if cfg.scheme == "p2p":
            _, v = code.encode_block(m1, self.sr)
            x = v[:, None]
        elif cfg.scheme == "gp":
            x = code.encode(m1, states[None], self.sr).x
        else:
            frame = code.encode(BcsiMessages(m0, m1, m2), states[None], self.sr)
            x, trace = frame.x, frame.trace(code)
        ys = self._outputs(x, states[None], unif[None])
        out = {
            "scheme": cfg.scheme,
            "rate": [point.r0, point.r1, point.r2],
            "trial": trial,
            "m0": m0.tolist(), "m1": m1.tolist(), "m2": m2.tolist(),
            "states": states.tolist(),
            "x": x[0].tolist(),
            "y1": ys[1][0].tolist(), "y2": ys[2][0].tolist(),
        }
        if trace is not None:
            out["trace"] = trace
        return out

    def decode_frame(self, point: RatePoint, frame: dict, receiver: int) -> dict:
        """Decode ``frame["y<receiver>"]``; side information comes from the frame's messages."""
        cfg, code = self.cfg, point.code
        y = np.asarray(frame[f"y{receiver}"], dtype=np.intp)[None]
        m0, m1, m2 = (np.asarray(frame[k], dtype=np.uint8)[None] for k in ("m0", "m1", "m2"))
        if cfg.scheme == "p2p":
            hat, failed = code.decode_block(m1.shape[1], y[:, 0], self.sr)
            got0, got, want = m0, hat, m1
        elif cfg.scheme == "gp":
            hat, _, failed = code.decode(y, self.sr, nbits=m1.shape[1])
            got0, got, want = m0, hat, m1
        else:
            side, own = (m2, m1) if receiver == 1 else (m1, m2)
            d = code.decode(receiver, y, side, self.sr, m0.shape[1], own.shape[1])
            got0, got, want, failed = d.m0, d.private, own, d.failed
        ok = bool(np.array_equal(got0, m0) and np.array_equal(got, want))
        return {"receiver": receiver, "m0": got0[0].tolist(), "private": got[0].tolist(),
                "correct": ok, "failed": bool(failed[0])}

    def _outputs(self, x, states, unif) -> dict:
        y1, y2 = sample_from_uniforms(self.channel, x, states, unif)
        return {1: y1, 2: y2}


@dataclass
class ResultRow:
    rate: float
    receiver: int
    fer: float
    ci95: float
    trials: int
    wall_time: float = field(default=0.0, compare=False)

    def csv_fields(self) -> list[str]:
        return [_fmt(self.rate), str(self.receiver), _fmt(self.fer), _fmt(self.ci95), str(self.trials)]


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else repr(float(v))


def ci95(p: float, trials: int) -> float:
    """Normal-approximation 95% half-width of a binomial proportion."""
    return 1.96 * math.sqrt(p * (1.0 - p) / trials)


def run_experiment(cfg: ExperimentConfig, threads: int = 1, cache_dir: Optional[str] = None) -> list[ResultRow]:
    """Fit, encode, transmit and decode every rate point; one row per (rate point, receiver)."""
    exp = Experiment(cfg, cache_dir)
    # profiles are estimated once, serially, so threads share a warm cache
    points = [exp.fit(*r) for r in cfg.rates]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(exp.simulate_point, points))
    else:
        chunks = [exp.simulate_point(p) for p in points]
    return [row for chunk in chunks for row in chunk]


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def write_csv(rows: Sequence[ResultRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_csv(path) -> list[ResultRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [
            ResultRow(float(r["rate"]), int(r["receiver"]), float(r["fer"]), float(r["ci95"]), int(r["trials"]))
            for r in csv.DictReader(fh)
        ]


def row_dicts(rows: Sequence[ResultRow]) -> list[dict]:
    return [asdict(r) for r in rows]
