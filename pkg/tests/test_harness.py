import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hst

from polargp.harness import (
    CSV_HEADER,
    ConfigError,
    Experiment,
    ExperimentConfig,
    ProfileCache,
    ResultRow,
    ci95,
    make_strategy,
    read_csv,
    rows_to_csv,
    run_experiment,
    smallest_size,
    write_csv,
)
from polargp.channels import make_stuck_memory


def cfg(**kw):
    d = dict(schema=1, scheme="p2p", channel={"preset": "noiseless"}, n=64, rates=[0.4], trials=4, seed="1", samples=100)
    d.update(kw)
    return ExperimentConfig.from_dict(d)


# ------------------------------------------------------------------ config


@pytest.mark.parametrize("bad", [
    dict(n=48), dict(trials=0), dict(scheme="ldpc"), dict(seed="xyz"), dict(rates=[]),
    dict(policy="median"), dict(schema=2), dict(rates=[[0.1, -0.2, 0.1]]), dict(color="red"),
    dict(scheme="bcsi-common", k=1),
])
def test_bad_configs_rejected(bad):
    with pytest.raises(ConfigError):
        cfg(**bad)


def test_rates_expand_to_triples_and_round_trip():
    c = cfg(rates=[0.3, [0.1, 0.5, 0.2]])
    assert c.rates == [(0.0, 0.3, 0.3), (0.1, 0.5, 0.2)]
    again = ExperimentConfig.from_dict(json.loads(json.dumps(c.to_dict())))
    assert again.rates == c.rates and again.master == 1


def test_missing_schema_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"scheme": "p2p", "channel": {"preset": "noiseless"}, "n": 8, "rates": [0.5]})


def test_bad_channel_is_a_config_error():
    with pytest.raises(ConfigError):
        cfg(channel={"preset": "nope"}).make_channel()


def test_strategy_specs():
    ch = make_stuck_memory(0.2)
    assert make_strategy("stuck-memory", ch).v2_size == 2
    inline = make_strategy({"p_v1_s": [[1.0]] * 5, "p_v2_v1s": [[[1.0]] * 5], "f": [[[0] * 5]]}, ch)
    assert inline.v1_size == 1
    with pytest.raises(ConfigError):
        make_strategy("best-guess", ch)


# --------------------------------------------------------------- statistics


@given(hst.floats(0.01, 0.99), hst.integers(10, 10_000))
def test_doubling_trials_shrinks_half_width_by_root_two(p, trials):
    ratio = ci95(p, 2 * trials) / ci95(p, trials)
    assert ratio == pytest.approx(1 / math.sqrt(2), rel=1e-12)


def test_ci_formula():
    assert ci95(0.1, 100) == pytest.approx(1.96 * 0.03)
    assert ci95(0.0, 50) == 0.0


def test_smallest_size_bisects():
    assert smallest_size(lambda l: l >= 37, 64) == 37
    assert smallest_size(lambda l: True, 64) == 0
    assert smallest_size(lambda l: False, 64) is None


# -------------------------------------------------------------- experiments


@pytest.mark.parametrize("scheme,extra", [
    ("p2p", {}),
    ("gp", {"channel": {"preset": "bsc-interference", "p1": 0.0, "p2": 0.0}, "strategy": "interference", "k": 2}),
    ("bcsi-common", {"rates": [[0.1, 0.5, 0.3]], "k": 3}),
])
def test_noiseless_single_trial_has_zero_error(scheme, extra):
    rows = run_experiment(cfg(scheme=scheme, trials=1, **extra))
    assert rows and all(r.fer == 0.0 and r.trials == 1 for r in rows)


def test_rows_cover_both_receivers_for_broadcast():
    rows = run_experiment(cfg(scheme="bcsi-common", rates=[[0, 0.5, 0.3]], k=3, trials=2))
    assert [(r.rate, r.receiver) for r in rows] == [(0.5, 1), (0.3, 2)]


def test_infeasible_point_reported_in_row():
    rows = run_experiment(cfg(rates=[0.4, 1.5], trials=2))
    assert rows[0].fer == 0.0
    assert math.isnan(rows[1].fer) and rows[1].trials == 0
    assert "nan" in rows_to_csv(rows).splitlines()[2]


def test_same_config_gives_identical_csv_bytes():
    c = cfg(channel={"preset": "bsc", "p": 0.1}, rates=[0.3, 0.5], trials=30, n=32)
    a = rows_to_csv(run_experiment(c))
    b = rows_to_csv(run_experiment(c, threads=2))
    assert a == b
    assert a.splitlines()[0] == ",".join(CSV_HEADER)
    assert "\r" not in a


def test_adding_trials_keeps_earlier_realizations():
    small = Experiment(cfg(trials=5))
    big = Experiment(cfg(trials=50))
    for t in (0, 3):
        a, b = small.trial_inputs(t, 2, (0, 7, 0)), big.trial_inputs(t, 2, (0, 7, 0))
        assert np.array_equal(a[0][1], b[0][1])
        assert np.array_equal(a[1], b[1]) and np.array_equal(a[2], b[2])
    # and trials differ from each other
    assert not np.array_equal(small.trial_inputs(0, 1, (0, 64, 0))[0][1], small.trial_inputs(1, 1, (0, 64, 0))[0][1])


def test_seed_changes_results():
    a = Experiment(cfg(seed="1")).trial_inputs(0, 1, (0, 32, 0))[0][1]
    b = Experiment(cfg(seed="2")).trial_inputs(0, 1, (0, 32, 0))[0][1]
    assert not np.array_equal(a, b)


def test_fit_respects_requested_rate():
    exp = Experiment(cfg(channel={"preset": "bsc", "p": 0.05}, n=128))
    point = exp.fit(0.0, 0.4, 0.4)
    assert point.feasible and point.bits[1] == math.floor(0.4 * 128)
    assert point.code.bits_per_block >= point.bits[1]


def test_profile_cache_on_disk(tmp_path):
    c = cfg(channel={"preset": "bsc", "p": 0.1})
    run_experiment(c, cache_dir=str(tmp_path))
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files and all(f.startswith("z-") and f.endswith(".json") for f in files)
    before = {f: (tmp_path / f).read_bytes() for f in files}
    run_experiment(c, cache_dir=str(tmp_path))
    assert {f: (tmp_path / f).read_bytes() for f in files} == before
    cache = ProfileCache({"ctx": 1}, str(tmp_path / "other"))
    assert "missing" not in cache and len(cache) == 0


def test_csv_round_trip(tmp_path):
    rows = [ResultRow(0.3, 1, 0.25, ci95(0.25, 8), 8, wall_time=1.5), ResultRow(0.3, 2, float("nan"), float("nan"), 0)]
    path = tmp_path / "r.csv"
    write_csv(rows, path)
    back = read_csv(path)
    assert back[0] == rows[0]
    assert math.isnan(back[1].fer) and back[1].trials == 0
    assert "wall" not in path.read_text()


def test_encode_decode_frame_round_trip():
    exp = Experiment(cfg(scheme="bcsi-common", rates=[[0, 0.5, 0.3]], k=3))
    point = exp.feasible_point(0)
    frame = json.loads(json.dumps(exp.encode_frame(point, trial=2)))
    assert "trace" in frame and len(frame["x"]) == point.code.blocks
    for m in (1, 2):
        out = exp.decode_frame(point, frame, m)
        assert out["correct"] and not out["failed"]
