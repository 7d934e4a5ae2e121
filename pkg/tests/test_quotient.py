import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from drwgeom.checks import null_corpus, random_graph
from drwgeom.errors import EmptyField, RankDeficientBasis, ZeroRank
from drwgeom.graph import build_kernel, decompose_for_class
from drwgeom.hitting import hitting_law
from drwgeom.oracles import make_rng
from drwgeom.quotient import (
    aggregate_sigma,
    build_chart,
    chart_coordinates,
    gram_inverse,
    null_space,
    projector,
    quotient_metric,
    select_basis,
)
from drwgeom.sensitivity import SensitivityField, sensitivity_field


def make_field(zs, masses=None):
    zs = [np.asarray(z, dtype=float) for z in zs]
    p = len(zs[0]) if zs else 1
    masses = masses or [0.5] * len(zs)
    return SensitivityField(
        class_id=1,
        Xi=np.zeros((1, 1, p)),
        dZ=np.zeros((1, 1, p)),
        z={q: z for q, z in enumerate(zs)},
        fisher={q: np.outer(z, z) / m for q, (z, m) in enumerate(zip(zs, masses))},
        mass={q: m for q, m in enumerate(masses)},
    )


def test_zero_field_has_rank_zero():
    fld = make_field([np.zeros(2), np.zeros(2)])
    assert not np.any(aggregate_sigma(fld))
    with pytest.raises(ZeroRank):
        select_basis(fld)
    with pytest.raises(EmptyField):
        select_basis(make_field([]))


def test_scalar_field_picks_largest_seed():
    fld = make_field([[0.3], [-2.0], [1.1]])
    assert_allclose(aggregate_sigma(fld), [[0.09 + 4.0 + 1.21]])
    r, seeds, V = select_basis(fld)
    assert r == 1
    assert seeds == [1]
    assert_allclose(V, [[-2.0]])


def test_rank_threshold():
    r, _, _ = select_basis(make_field([[1.0, 0.0], [1.0, 1e-14]]), rank_tol=1e-8)
    assert r == 1


def test_two_independent_seeds_in_three_dims():
    rng = make_rng(4)
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    fld = make_field([a, b, 2 * a - b, 0.5 * b])
    assert np.linalg.matrix_rank(aggregate_sigma(fld)) == 2
    r, seeds, V = select_basis(fld)
    assert r == 2
    assert np.linalg.matrix_rank(V) == 2


def test_duplicate_seed_does_not_change_rank():
    z = [[1.0, 2.0, 0.0], [0.0, 1.0, 1.0]]
    r1, _, _ = select_basis(make_field(z + [z[1]]))
    r0, _, _ = select_basis(make_field(z))
    assert r0 == r1 == 2


def test_chart_coordinate_examples():
    V = np.array([[1.0], [0.0]])
    assert_allclose(chart_coordinates(V, [3.0, 7.0]), [3.0])
    assert_allclose(chart_coordinates(V, [0.0, 5.0]), [0.0], atol=1e-15)
    assert_allclose(projector(V), np.diag([1.0, 0.0]), atol=1e-15)
    W = np.array([[1.0, 2.0], [0.5, -1.0]])
    assert_allclose(projector(W), np.eye(2), atol=1e-14)
    with pytest.raises(RankDeficientBasis):
        projector(np.array([[1.0, 2.0], [1.0, 2.0]]))


def test_scalar_metric():
    z = np.array([3.0, -4.0])
    g, _ = quotient_metric(make_field([z]), z[:, None])
    assert_allclose(g, [[1 / 25]])


@given(V=arrays(np.float64, (4, 2), elements=st.floats(-5, 5)),
       theta=arrays(np.float64, (4,), elements=st.floats(-5, 5)),
       coef=arrays(np.float64, (2,), elements=st.floats(-5, 5)))
def test_projector_properties(V, theta, coef):
    s = np.linalg.svd(V, compute_uv=False)
    if s[-1] < 1e-3 * max(s[0], 1e-300):
        return
    Q = projector(V)
    assert_allclose(Q @ Q, Q, atol=1e-10)
    assert_allclose(Q, Q.T, atol=1e-12)
    assert_allclose(Q @ V, V, atol=1e-10 * max(1.0, np.abs(V).max()))
    assert_allclose(gram_inverse(V) @ (V.T @ V), np.eye(2), atol=1e-8)
    # shifting theta by a null-space vector leaves the chart unchanged
    N = np.linalg.svd(V.T)[2][2:].T
    n = N @ coef
    u0, u1 = chart_coordinates(V, theta), chart_coordinates(V, theta + n)
    assert_allclose(u1, u0, atol=1e-9 * max(1.0, np.abs(u0).max()))


def test_null_space_is_orthogonal_to_field():
    g, theta = null_corpus(1)[0]
    k = build_kernel(g, theta)
    fld = sensitivity_field(hitting_law(decompose_for_class(k, g, g.classes[0])))
    N = null_space(fld)
    assert N.shape[1] >= 1
    assert np.abs(fld.z_matrix() @ N).max() < 1e-12
    # duplicated coordinates 1 and 3 leave e_1 - e_3 unidentifiable
    v = np.array([1.0, 0.0, -1.0]) / np.sqrt(2)
    assert np.linalg.norm(N @ (N.T @ v) - v) < 1e-10


@given(seed=st.integers(0, 10_000))
def test_chart_on_random_graphs(seed):
    g, theta = random_graph(make_rng(seed))
    k = build_kernel(g, theta)
    for y in g.classes:
        fld = sensitivity_field(hitting_law(decompose_for_class(k, g, y)))
        try:
            ch = build_chart(fld)
        except (ZeroRank, EmptyField):
            continue
        assert ch.rank == np.trace(ch.Q).round()
        assert_allclose(ch.Q @ ch.Q, ch.Q, atol=1e-10)
        assert_allclose(ch.Q, ch.Q.T, atol=1e-10)
        assert ch.rank + null_space(fld).shape[1] == g.p
