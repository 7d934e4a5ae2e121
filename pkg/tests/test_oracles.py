import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from drwgeom.errors import SeedNotTransient, TooLarge
from drwgeom.graph import build_kernel, decompose_for_class
from drwgeom.oracles import (
    Rejected,
    enumerate_pmf,
    finite_diff,
    mc_drw_betweenness,
    mc_hitting_times,
    sample_drw,
)
from drwgeom.score import betweenness

from conftest import path_graph


def test_enumeration_examples(path3):
    g4 = path_graph(4, {0: 1, 3: 1})
    dec3 = decompose_for_class(build_kernel(path3, [0.0]), path3, 1)
    dec4 = decompose_for_class(build_kernel(g4, [0.0]), g4, 1)
    assert_allclose(enumerate_pmf(dec3, 1, 6), [1, 0, 0, 0, 0, 0])
    assert_allclose(enumerate_pmf(dec4, 1, 20), 0.5 ** np.arange(1, 21), rtol=1e-14)


def test_enumeration_limits():
    g = path_graph(15, {0: 1})
    dec = decompose_for_class(build_kernel(g, [0.0]), g, 1)
    with pytest.raises(TooLarge):
        enumerate_pmf(dec, 1, 5)


def test_sampler_path3(path3):
    k = build_kernel(path3, [0.0], order=0)
    for seed in range(20):
        w = sample_drw(k, path3.labels, 1, 1, L=3, seed=seed)
        assert w.length == 1
        assert w.passes[1] == 1
    with pytest.raises(SeedNotTransient):
        sample_drw(k, path3.labels, 1, 0, L=3)


def test_sampler_rejects_long_and_strict_walks():
    g = path_graph(5, {0: 1, 2: 2})
    k = build_kernel(g, [0.0], order=0)
    assert isinstance(sample_drw(k, g.labels, 1, 4, L=1, seed=0), Rejected)
    # from node 4 (0-based 3) any walk to class 1 crosses the class-2 node
    outs = [sample_drw(k, g.labels, 1, 3, L=40, seed=s, strict=True) for s in range(10)]
    assert not any(outs)


def test_sampler_is_deterministic(path4):
    k = build_kernel(path4, [0.3], order=0)
    a = mc_hitting_times(k, path4.labels, 1, 1, 200, seed=9)
    b = mc_hitting_times(k, path4.labels, 1, 1, 200, seed=9)
    assert_array_equal(a, b)


def test_mc_hitting_mean():
    g = path_graph(4, {0: 1, 3: 1})
    k = build_kernel(g, [0.0], order=0)
    t = mc_hitting_times(k, g.labels, 1, 1, 100_000, seed=0)
    assert abs(t.mean() - 2.0) < 0.02


def test_mc_betweenness_runs(path3):
    # every accepted walk from node 2 visits it exactly once
    k = build_kernel(path3, [0.0], order=0)
    est, acc, n = mc_drw_betweenness(k, path3.labels, 1, 1, 3, 500, seed=1)
    assert n == 500
    assert est == pytest.approx(1.0)
    assert 0 < acc <= 1
    assert betweenness(k, path3.labels, 1, 1, 2) == pytest.approx(2.0)


def test_finite_diff_examples():
    assert_allclose(finite_diff(lambda th: th @ th, [1.0, 2.0]), [2.0, 4.0], atol=1e-8)
    assert_allclose(finite_diff(lambda th: 3.0, [0.5, -0.5]), [0.0, 0.0], atol=1e-10)
    J = finite_diff(lambda th: np.outer(th, th), [1.0, 2.0])
    assert J.shape == (2, 2, 2)
    with pytest.raises(ValueError):
        finite_diff(lambda th: th, [1.0], h=0)
