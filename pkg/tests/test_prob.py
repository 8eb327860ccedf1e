import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hst
from hypothesis.extra.numpy import arrays

from polargp.prob import (
    JointPmf,
    Pmf,
    binary_entropy,
    bhattacharyya,
    conditional_entropy,
    entropy,
    mutual_information,
)


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def joints(max_obs=6):
    weights = hst.integers(1, max_obs).flatmap(
        lambda m: arrays(float, (2, m), elements=hst.floats(0, 1, allow_nan=False))
    )
    return weights.filter(lambda w: w.sum() > 1e-3).map(lambda w: JointPmf(w / w.sum()))


# ----------------------------------------------------------------- oracles


def test_entropy_oracles():
    assert entropy(Pmf.bernoulli(0.5)) == pytest.approx(1.0, abs=1e-12)
    assert entropy(Pmf.bernoulli(0.0)) == 0.0
    assert entropy(Pmf.bernoulli(1.0)) == 0.0
    assert entropy(Pmf.bernoulli(0.05)) == pytest.approx(0.28640, abs=5e-6)
    assert binary_entropy(0.05) == pytest.approx(h2(0.05), abs=1e-12)


def test_conditional_entropy_oracles():
    ident = JointPmf(np.diag([0.5, 0.5]))
    indep = JointPmf(np.full((2, 3), 1 / 6))
    assert conditional_entropy(ident) == pytest.approx(0.0, abs=1e-12)
    assert conditional_entropy(indep) == pytest.approx(1.0, abs=1e-12)
    assert conditional_entropy(JointPmf.bsc(0.1)) == pytest.approx(0.46900, abs=5e-6)


def test_mutual_information_oracles():
    assert mutual_information(JointPmf(np.full((2, 2), 0.25))) == pytest.approx(0.0, abs=1e-12)
    assert mutual_information(JointPmf.bsc(0.05)) == pytest.approx(0.71360, abs=5e-6)
    assert mutual_information(JointPmf(np.diag([0.5, 0.5]))) == pytest.approx(1.0, abs=1e-12)


def test_bhattacharyya_oracles():
    assert bhattacharyya(JointPmf(np.diag([0.5, 0.5]))) == pytest.approx(0.0, abs=1e-12)
    assert bhattacharyya(JointPmf(np.full((2, 4), 0.125))) == pytest.approx(1.0, abs=1e-12)
    assert bhattacharyya(JointPmf.bsc(0.1)) == pytest.approx(0.6, abs=1e-12)


def test_invalid_tables_rejected():
    with pytest.raises(ValueError):
        JointPmf(np.array([[0.5, 0.6], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        JointPmf(np.array([[-0.1, 0.6], [0.5, 0.0]]))
    with pytest.raises(ValueError):
        JointPmf(np.ones((3, 2)) / 6)
    with pytest.raises(ValueError):
        Pmf((0, 1), [0.2, 0.2])


def test_json_round_trip():
    j = JointPmf(np.array([[0.1, 0.2, 0.15], [0.3, 0.05, 0.2]]), obs_alphabet=("a", "b", "c"))
    back = JointPmf.from_dict(j.to_dict())
    assert back.obs_alphabet == ("a", "b", "c")
    assert np.array_equal(back.table, j.table)
    p = Pmf.bernoulli(0.3)
    assert Pmf.from_dict(p.to_dict())[1] == pytest.approx(0.3)


# -------------------------------------------------------------- properties


@given(joints())
def test_bhattacharyya_brackets_conditional_entropy(j):
    z, h = bhattacharyya(j), conditional_entropy(j)
    assert z * z <= h + 1e-10
    assert h <= math.log2(1 + z) + 1e-10


@given(joints())
def test_mutual_information_identity(j):
    mi = mutual_information(j)
    hx = entropy(j.x_marginal())
    hy = entropy(j.obs_marginal())
    hxy = -sum(p * math.log2(p) for p in j.table.ravel() if p > 0)
    assert mi >= -1e-12
    assert mi == pytest.approx(hx + hy - hxy, abs=1e-10)


@given(joints(), hst.randoms(use_true_random=False))
def test_bhattacharyya_ignores_observation_labels(j, rnd):
    perm = list(range(j.n_obs))
    rnd.shuffle(perm)
    relabeled = JointPmf(j.table[:, perm])
    assert bhattacharyya(relabeled) == pytest.approx(bhattacharyya(j), abs=1e-12)
    assert conditional_entropy(relabeled) == pytest.approx(conditional_entropy(j), abs=1e-12)


@given(hst.floats(0, 0.5))
def test_bsc_closed_forms(p):
    j = JointPmf.bsc(p)
    assert bhattacharyya(j) == pytest.approx(2 * math.sqrt(p * (1 - p)), abs=1e-12)
    assert mutual_information(j) == pytest.approx(1 - binary_entropy(p), abs=1e-12)
