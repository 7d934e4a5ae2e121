"""DRW betweenness, its parameter gradient and the sensitivity score zeta.

Betweenness is evaluated with the ordinary (non-absorbing) kernel ``P``:

    B_L(q, y) = sum_{l=1}^{L} sum_{i,j in L_y} sum_{t=1}^{l-1} P^t(i, q) P^(l-t)(q, j)

Both index sums factor, so only the row ``1_{L_y}^T P^t`` and the column
``P^k 1_{L_y}`` are propagated.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyField, LabeledQuery, ZeroRank
from .graph import build_kernel, decompose_for_class
from .hitting import hitting_law
from .quotient import DEFAULT_RANK_TOL, build_chart
from .sensitivity import fisher_series, sensitivity_field

__all__ = [
    "betweenness",
    "betweenness_gradient",
    "betweenness_profile",
    "riemannian_gradient",
    "gradient_norm",
    "proposition_check",
    "PropositionResult",
    "SensitivityReport",
    "default_horizon",
    "zeta",
    "rewire_candidates",
]

logger = logging.getLogger(__name__)

HORIZON_MASS_TOL = 1e-3
PARALLEL_TOL = 1e-8


def _indicator(n, nodes):
    v = np.zeros(n)
    v[np.asarray(nodes, dtype=np.int64)] = 1.0
    return v


def _check_query(labels, q, L):
    if q in labels:
        raise LabeledQuery(f"node {q} is labeled")
    if L < 1:
        raise ValueError("horizon L must be >= 1")


def _walk_profiles(P, dP, start, L):
    """Forward rows ``s^T P^t``, backward columns ``P^t s`` for t = 0..L-1, with derivatives."""
    n = P.shape[0]
    fwd = np.empty((L, n))
    bwd = np.empty((L, n))
    fwd[0] = bwd[0] = start
    dfwd = dbwd = None
    if dP is not None:
        p = dP.shape[2]
        dfwd = np.zeros((L, n, p))
        dbwd = np.zeros((L, n, p))
    for t in range(1, L):
        fwd[t] = fwd[t - 1] @ P
        bwd[t] = P @ bwd[t - 1]
        if dP is not None:
            dfwd[t] = np.einsum("jk,ja->ka", P, dfwd[t - 1]) + np.einsum("j,jka->ka", fwd[t - 1], dP)
            dbwd[t] = P @ dbwd[t - 1] + np.einsum("jka,k->ja", dP, bwd[t - 1])
    return fwd, bwd, dfwd, dbwd


def _pair_weights(L):
    """``W[t, k] = 1`` for ``t, k >= 1`` and ``t + k <= L``."""
    t = np.arange(L)
    return ((t[:, None] >= 1) & (t[None, :] >= 1) & (t[:, None] + t[None, :] <= L)).astype(float)


def betweenness_profile(kernel, labels, y, L, with_gradient=True):
    """Betweenness ``B_L(., y)`` for every node at once, and its gradient.

    Returns arrays of shape ``(n,)`` and ``(n, p)``; entries at labeled
    nodes are computed by the same formula but carry no meaning.
    """
    nodes = [i for i, c in labels.items() if c == y]
    start = _indicator(kernel.n, nodes)
    dP = kernel.dP if with_gradient else None
    fwd, bwd, dfwd, dbwd = _walk_profiles(kernel.P, dP, start, L + 1)
    W = _pair_weights(L)
    B = np.einsum("tk,tq,kq->q", W, fwd[:L], bwd[:L])
    if not with_gradient:
        return B, None
    G = np.einsum("tk,tqa,kq->qa", W, dfwd[:L], bwd[:L]) + np.einsum("tk,tq,kqa->qa", W, fwd[:L], dbwd[:L])
    return B, G


def betweenness(kernel, labels, y, q, L):
    """DRW betweenness ``B_L(q, y)`` of an unlabeled node ``q``."""
    _check_query(labels, q, L)
    return float(betweenness_profile(kernel, labels, y, L, with_gradient=False)[0][q])


def betweenness_gradient(kernel, labels, y, q, L):
    """Gradient of ``B_L(q, y)`` in theta via ``d(P^r) = sum_s P^s dP P^(r-s-1)``."""
    _check_query(labels, q, L)
    return betweenness_profile(kernel, labels, y, L)[1][q]


def riemannian_gradient(chart, grad_theta):
    """Contravariant gradient on the quotient in the seed-basis chart.

    Partials are taken along the lifts ``V (V^T V)^-1 e_i`` and raised with
    ``g_tilde^-1 = V^T V``, which gives ``V^T grad_theta``. Its
    ``g_tilde``-norm is ``sqrt(grad^T Q grad)``.
    """
    if chart.rank < 1:
        raise ZeroRank("chart has rank 0")
    return chart.V.T @ np.asarray(grad_theta, dtype=float)


def gradient_norm(chart, grad_theta):
    """``|| grad ||_g = sqrt(grad_theta^T Q grad_theta)``."""
    g = np.asarray(grad_theta, dtype=float)
    return float(np.sqrt(max(g @ chart.Q @ g, 0.0)))


def _g_norm(v, g):
    return float(np.sqrt(max(v @ g @ v, 0.0)))


@dataclass(frozen=True)
class PropositionResult:
    zeta: float
    delta_max: float
    attained: bool
    sampled_max: float
    sign_pattern: tuple


def proposition_check(grads, g_tilde, trials=1000, rng=None, tol=1e-9):
    """Check the directional-variation bounds for a set of class gradients.

    ``Delta(v) = sum_y |g(G_y, v)|`` is evaluated on ``trials`` random
    ``g``-unit directions and on every sign-pattern optimum
    ``G(sigma) / ||G(sigma)||``.

    Raises
    ------
    AssertionError
        If any sampled ``Delta(v)`` or ``delta_max`` exceeds ``zeta + tol``.
    """
    G = np.atleast_2d(np.asarray(grads, dtype=float))
    g = np.atleast_2d(np.asarray(g_tilde, dtype=float))
    if g.shape[0] < 1:
        raise ZeroRank("empty tangent space")
    rng = np.random.default_rng(rng)
    norms = np.array([_g_norm(v, g) for v in G])
    zeta_val = float(norms.sum())

    def delta(v):
        return float(np.abs(G @ g @ v).sum())

    best, best_sigma = 0.0, (1,) * len(G)
    for sigma in itertools.product((1, -1), repeat=len(G)):
        Gs = np.asarray(sigma, dtype=float) @ G
        ns = _g_norm(Gs, g)
        if ns > best:
            best, best_sigma = ns, sigma
        if ns > 0:
            d = delta(Gs / ns)
            assert d <= zeta_val + tol, f"Delta(v*) = {d} exceeds zeta = {zeta_val}"
    sampled = 0.0
    if trials:
        W = rng.standard_normal((trials, g.shape[0]))
        W /= np.sqrt(np.einsum("ti,ij,tj->t", W, g, W))[:, None]
        vals = np.abs(W @ g @ G.T).sum(axis=1)
        sampled = float(vals.max())
        assert sampled <= zeta_val + tol, f"sampled Delta = {sampled} exceeds zeta = {zeta_val}"
    assert best <= zeta_val + tol, f"delta_max = {best} exceeds zeta = {zeta_val}"

    nz = G[norms > 0]
    parallel = True
    for a, b in itertools.combinations(nz, 2):
        cos = abs(a @ g @ b) / (_g_norm(a, g) * _g_norm(b, g))
        if 1.0 - min(cos, 1.0) > PARALLEL_TOL:
            parallel = False
            break
    if parallel:
        assert abs(best - zeta_val) <= tol * max(1.0, zeta_val), "parallel gradients must attain zeta"
    return PropositionResult(zeta=zeta_val, delta_max=best, attained=parallel,
                             sampled_max=sampled, sign_pattern=best_sigma)


def default_horizon(kernel, graph, tol=HORIZON_MASS_TOL):
    """Smallest ``L`` with ``max_q ||e_q^T M^L||_1 < tol`` for every class, capped at ``2n``."""
    cap = 2 * graph.n
    best = 1
    for y in graph.classes:
        nodes = set(graph.class_nodes(y).tolist())
        S = [i for i in range(graph.n) if i not in nodes]
        if not S:
            continue
        M = kernel.P[np.ix_(S, S)]
        mass = np.ones(len(S))
        L = 0
        while L < cap:
            mass = M @ mass
            L += 1
            if mass.max() < tol:
                break
        best = max(best, L)
    return min(best, cap)


@dataclass
class SensitivityReport:
    """Per-node, per-class betweenness and sensitivity results.

    Arrays over classes are indexed in ``classes`` order; node keys are
    0-based node indices. ``grad_quotient[q][k]`` is class k's quotient
    gradient mapped isometrically into theta-space (``Q_y grad B``), so
    Euclidean norms there are the chart norms.
    """

    horizon: int
    theta: np.ndarray
    classes: tuple
    nodes: tuple
    betweenness: dict
    gradient: dict
    grad_quotient: dict
    grad_norm: dict
    zeta: dict
    zeta_normalized: dict | None
    predicted_class: dict
    delta_max: dict
    attained: dict
    rank_tol: float
    chart_info: dict = field(default_factory=dict)
    zero_mass: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node", "class", "B_L", "grad_norm", "zeta", "zeta_normalized", "predicted_class"])
        for q in self.nodes:
            zn = "" if self.zeta_normalized is None else repr(float(self.zeta_normalized[q]))
            for k, y in enumerate(self.classes):
                w.writerow([q + 1, y, repr(float(self.betweenness[q][k])), repr(float(self.grad_norm[q][k])),
                            repr(float(self.zeta[q])), zn, self.predicted_class[q]])
        return buf.getvalue()

    def to_json(self):
        doc = {
            "horizon": self.horizon,
            "theta": [float(x) for x in self.theta],
            "rank_tol": self.rank_tol,
            "classes": list(self.classes),
            "charts": self.chart_info,
            "zero_absorption_mass": {str(y): [q + 1 for q in v] for y, v in self.zero_mass.items()},
            "flags": self.flags,
            "nodes": [
                {
                    "node": q + 1,
                    "zeta": float(self.zeta[q]),
                    "zeta_normalized": None if self.zeta_normalized is None else float(self.zeta_normalized[q]),
                    "predicted_class": self.predicted_class[q],
                    "delta_max": float(self.delta_max[q]),
                    "attained": bool(self.attained[q]),
                    "betweenness": [float(b) for b in self.betweenness[q]],
                    "grad_norm": [float(g) for g in self.grad_norm[q]],
                }
                for q in self.nodes
            ],
        }
        return json.dumps(doc, indent=2)


def _class_geometry(kernel, graph, y, rank_tol, fisher_tol):
    dec = decompose_for_class(kernel, graph, y)
    law = hitting_law(dec)
    fld = sensitivity_field(law)
    info = {"excluded": [q + 1 for q in fld.excluded]}
    try:
        chart = build_chart(fld, rank_tol)
    except (ZeroRank, EmptyField) as exc:
        info.update(rank=0, reason=type(exc).__name__)
        return None, fld, info
    gaps = {}
    if fisher_tol is not None:
        for q in fld.seeds:
            Fs = fisher_series(dec, q, tol=fisher_tol)
            gaps[q + 1] = float(np.linalg.norm(Fs - fld.fisher[q]))
    info.update(
        rank=chart.rank,
        basis_seeds=[q + 1 for q in chart.basis_seeds],
        metric_gap=chart.metric_gap,
        fisher_closed_vs_series=gaps,
    )
    return chart, fld, info


def zeta(graph, theta, L=None, rank_tol=DEFAULT_RANK_TOL, trials=0, rng=None, fisher_tol=None):
    """Sensitivity report for every unlabeled node.

    ``zeta(q) = sum_y || grad beta_L(q, y) ||`` where each class's gradient
    norm is taken in that class's own quotient chart. Classes whose chart
    has rank 0 contribute zero and are flagged.

    Parameters
    ----------
    L : int or None
        Horizon; ``None`` selects :func:`default_horizon`.
    trials : int
        Random directions per node in the directional-variation bound check.
    fisher_tol : float or None
        When set, also compute the series Fisher per seed and record its
        Frobenius distance to the closed form in the chart diagnostics.
    """
    if not graph.classes:
        raise ValueError("graph has no labeled class")
    nodes = tuple(int(q) for q in graph.unlabeled)
    if not nodes:
        raise ValueError("graph has no unlabeled node")
    kernel = build_kernel(graph, theta, order=1)
    if L is None:
        L = default_horizon(kernel, graph)
    classes = graph.classes
    C, p = len(classes), graph.p

    Bmat = np.zeros((graph.n, C))
    Gmat = np.zeros((graph.n, C, p))
    lifted = np.zeros((graph.n, C, p))
    norms = np.zeros((graph.n, C))
    chart_info, zero_mass, flags = {}, {}, []
    for k, y in enumerate(classes):
        chart, fld, info = _class_geometry(kernel, graph, y, rank_tol, fisher_tol)
        chart_info[str(y)] = info
        zero_mass[y] = [q for q in fld.excluded if q not in graph.labels]
        B, G = betweenness_profile(kernel, graph.labels, y, L)
        Bmat[:, k], Gmat[:, k] = B, G
        if chart is None:
            flags.append(f"class {y}: rank-0 chart, contributes zero sensitivity")
            continue
        # isometric image of the chart gradient in theta-space is Q grad
        lifted[:, k] = G @ chart.Q
        norms[:, k] = np.sqrt(np.maximum(np.einsum("qa,qa->q", G, lifted[:, k]), 0.0))

    z = {q: float(norms[q].sum()) for q in nodes}
    total = sum(z.values())
    if total > 0:
        zn = {q: z[q] / total for q in nodes}
    else:
        zn = None
        flags.append("all zeta vanish; normalized scores undefined")
    pred = {q: int(classes[int(np.argmax(Bmat[q]))]) for q in nodes}
    dmax, attained = {}, {}
    rng = np.random.default_rng(rng)
    for q in nodes:
        res = proposition_check(lifted[q], np.eye(p), trials=trials, rng=rng)
        dmax[q], attained[q] = res.delta_max, res.attained
    return SensitivityReport(
        horizon=int(L), theta=np.atleast_1d(np.asarray(theta, dtype=float)), classes=classes, nodes=nodes,
        betweenness={q: Bmat[q] for q in nodes}, gradient={q: Gmat[q] for q in nodes},
        grad_quotient={q: lifted[q] for q in nodes},
        grad_norm={q: norms[q] for q in nodes}, zeta=z, zeta_normalized=zn,
        predicted_class=pred, delta_max=dmax, attained=attained, rank_tol=rank_tol,
        chart_info=chart_info, zero_mass=zero_mass, flags=flags,
    )


def rewire_candidates(graph, report, budget, add_weight=None):
    """Rank edges ``(q, k)`` with unlabeled ``q`` by ``zeta(q) * A0_qk``.

    By default existing edges are ranked (re-weighting). With
    ``add_weight`` set, absent pairs are ranked instead, each scored with
    the proposed base weight ``add_weight``.
    """
    A0 = graph.base_adjacency()
    rows = []
    for q in report.nodes:
        for k in range(graph.n):
            if k == q:
                continue
            if add_weight is None:
                if A0[q, k] > 0:
                    rows.append((report.zeta[q] * A0[q, k], q, k, A0[q, k]))
            elif A0[q, k] == 0:
                rows.append((report.zeta[q] * add_weight, q, k, add_weight))
    rows.sort(key=lambda r: (-r[0], r[1], r[2]))
    return rows[:budget]
