import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from drwgeom.errors import (
    AllAbsorbing,
    DimensionMismatch,
    DisconnectedGraph,
    DuplicateEdge,
    EmptyClass,
    ExponentOverflow,
    FeatureDimMismatch,
    NonpositiveWeight,
    SelfLoop,
    TooLarge,
)
from drwgeom.graph import (
    LabeledGraph,
    build_graph,
    build_kernel,
    decompose_for_class,
    graph_to_json,
    kernel_derivatives,
    load_graph,
    spectral_radius,
)
from drwgeom.oracles import finite_diff, make_rng
from drwgeom.checks import random_graph

from conftest import path_graph


def _desc(edges, labels=None, p=1):
    return {
        "n": max(max(u, v) for u, v in edges),
        "p": p,
        "edges": [{"u": u, "v": v, "w0": 1.0, "phi": [0.0] * p} for u, v in edges],
        "labels": labels or {},
    }


def test_build_minimal_path():
    g = build_graph(_desc([(1, 2), (2, 3)]))
    assert g.n == 3
    assert g.p == 1
    assert_array_equal(g.edges, [[0, 1], [1, 2]])


def test_self_loop_rejected():
    with pytest.raises(SelfLoop):
        build_graph(_desc([(1, 2), (2, 3), (2, 2)]))


def test_disconnected_rejected():
    with pytest.raises(DisconnectedGraph):
        build_graph(_desc([(1, 2), (3, 4)]))


def test_other_validation_errors():
    with pytest.raises(DuplicateEdge):
        LabeledGraph(3, [(0, 1), (1, 0), (1, 2)], np.ones(3), np.zeros((3, 1)))
    with pytest.raises(NonpositiveWeight):
        LabeledGraph(2, [(0, 1)], [0.0], [[0.0]])
    with pytest.raises(FeatureDimMismatch):
        build_graph({"n": 2, "p": 2, "edges": [{"u": 1, "v": 2, "phi": [1.0]}]})


def test_edges_are_canonical_and_read_only():
    g = LabeledGraph(3, [(2, 1), (1, 0)], [1.0, 2.0], [[0.5], [0.1]])
    assert_array_equal(g.edges, [[0, 1], [1, 2]])
    assert_array_equal(g.base_weight, [2.0, 1.0])
    with pytest.raises(ValueError):
        g.edges[0, 0] = 1


def test_uniform_path_kernel(path3):
    k = build_kernel(path3, [0.4])
    assert_allclose(k.P[1], [0.5, 0.0, 0.5])
    assert_allclose(k.P.sum(axis=1), 1.0, atol=1e-15)


def test_constant_feature_cancels():
    g = path_graph(4, {}, phi=[0.3, 0.3, 0.3])
    assert_allclose(build_kernel(g, [0.7]).P, build_kernel(g, [0.0]).P, rtol=0, atol=1e-15)


def test_weight_derivative_is_feature_scaled(path4):
    d = kernel_derivatives(path4, [0.5], order=1)
    A = build_kernel(path4, [0.5], order=0).A
    assert_allclose(d["dA"][..., 0], A * path4.feature_tensor()[..., 0], rtol=1e-14)
    assert "ddP" not in d


def test_constant_feature_gives_zero_derivatives():
    g = path_graph(5, {}, phi=[0.3] * 4)
    k = build_kernel(g, [1.3])
    assert not np.any(k.dP)
    assert not np.any(k.ddP)


def test_star_example(bundled):
    g = bundled["star3"]
    k = build_kernel(g, [np.log(2.0)])
    assert_allclose(k.P[0, 1], 4 / 5, rtol=1e-14)
    assert_allclose(k.P[0, 2], 1 / 5, rtol=1e-14)


def test_exponent_overflow(path3):
    g = path_graph(3, {}, phi=[1.0, -1.0])
    with pytest.raises(ExponentOverflow):
        build_kernel(g, [701.0])


def test_dense_size_limit():
    g = path_graph(2049, {})
    with pytest.raises(TooLarge):
        build_kernel(g, [0.0], order=0)


def test_theta_dimension(path3):
    with pytest.raises(DimensionMismatch):
        build_kernel(path3, [0.1, 0.2])


@pytest.mark.parametrize("seed", range(5))
def test_kernel_derivatives_match_finite_differences(seed):
    g, theta = random_graph(make_rng(seed))
    k = build_kernel(g, theta)
    fd1 = finite_diff(lambda th: build_kernel(g, th, order=0).P, theta)
    fd2 = finite_diff(lambda th: build_kernel(g, th, order=1).dP, theta)
    assert_allclose(k.dP, fd1, rtol=1e-6, atol=1e-9)
    assert_allclose(k.ddP, fd2, rtol=1e-6, atol=1e-9)
    # rows of P sum to one, so derivative rows sum to zero
    assert_allclose(k.dP.sum(axis=1), 0.0, atol=1e-14)


def test_path4_decomposition(path4):
    g = path_graph(4, {0: 1, 3: 1})
    dec = decompose_for_class(build_kernel(g, [0.0]), g, 1)
    assert_allclose(dec.M, [[0, 0.5], [0.5, 0]])
    assert_allclose(dec.R, [0.5, 0.5])
    assert_array_equal(dec.transient, [1, 2])


def test_path3_decomposition(path3):
    dec = decompose_for_class(build_kernel(path3, [0.0]), path3, 1)
    assert_allclose(dec.M, [[0.0]])
    assert_allclose(dec.R, [1.0])


def test_all_absorbing_and_empty_class():
    g = path_graph(3, {0: 1, 1: 1, 2: 1})
    with pytest.raises(AllAbsorbing):
        decompose_for_class(build_kernel(g, [0.0]), g, 1)
    with pytest.raises(EmptyClass):
        decompose_for_class(build_kernel(g, [0.0]), g, 2)


def test_reassemble_is_stochastic(bundled):
    g = bundled["ring8"]
    k = build_kernel(g, [0.2, -0.1])
    dec = decompose_for_class(k, g, 1)
    full = dec.reassemble(k.P)
    assert_allclose(full.sum(axis=1), 1.0, atol=1e-14)


def test_spectral_radius_power_iteration_agrees():
    rng = make_rng(3)
    A = rng.random((40, 40))
    M = 0.9 * A / A.sum(axis=1, keepdims=True)
    rho_eig, _ = spectral_radius(M)
    rho_pow, bound = spectral_radius(M, power_iter_above=10)
    assert_allclose(rho_pow, rho_eig, rtol=1e-9)
    assert bound >= rho_eig - 1e-12


def test_json_roundtrip(tmp_path, bundled):
    g = bundled["ring8"]
    path = tmp_path / "g.json"
    path.write_text(json.dumps(graph_to_json(g)))
    h = load_graph(path)
    assert_array_equal(h.edges, g.edges)
    assert_array_equal(h.features, g.features)
    assert h.labels == g.labels


def test_edge_list_with_label_file(tmp_path):
    (tmp_path / "g.txt").write_text("# u v w0 phi\n1 2 1.0 0.5\n2 3 2.0 -0.5\n")
    (tmp_path / "g.labels").write_text("1 1\n3 2\n")
    g = load_graph(tmp_path / "g.txt")
    assert g.n == 3
    assert g.labels == {0: 1, 2: 2}
    assert_allclose(g.base_weight, [1.0, 2.0])


@given(seed=st.integers(0, 10_000), theta_scale=st.floats(0.0, 3.0))
def test_kernel_rows_are_distributions(seed, theta_scale):
    g, theta = random_graph(make_rng(seed))
    P = build_kernel(g, theta * theta_scale, order=0).P
    assert np.all(P >= 0)
    assert_allclose(P.sum(axis=1), 1.0, atol=1e-13)
    # the support of P is exactly the edge set
    assert_array_equal(P > 0, g.base_adjacency() > 0)


@given(seed=st.integers(0, 10_000))
def test_node_relabeling_permutes_kernel(seed):
    rng = make_rng(seed)
    g, theta = random_graph(rng)
    perm = rng.permutation(g.n)
    h = g.relabel_nodes(perm)
    P, Ph = build_kernel(g, theta, order=0).P, build_kernel(h, theta, order=0).P
    assert_allclose(Ph[np.ix_(perm, perm)], P, atol=1e-14)
