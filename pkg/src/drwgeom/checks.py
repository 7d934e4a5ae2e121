"""Cross-validation of the closed forms against the brute-force oracles.

Each ``measure_*`` function runs one comparison over a corpus of graphs and
returns the worst discrepancy found. :func:`run_checks` applies the default
thresholds and is what ``drwgeom check`` prints.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import NonDiagonalizable, ZeroRank
from .graph import LabeledGraph, build_graph, build_kernel, decompose_for_class
from .hitting import hitting_law, hitting_moments, pmf_sequence, second_moment_forms, spectral_pmf, tail_horizon
from .oracles import enumerate_pmf, finite_diff, make_rng, mc_hitting_times, neumann_series, truncated_xi
from .quotient import build_chart, chart_coordinates, null_space
from .score import betweenness_profile, proposition_check, zeta
from .sensitivity import (
    derivative_of_Z,
    fisher_closed,
    mean_gradient,
    score_function,
    score_moments,
    sensitivity_field,
    xi,
    xi_residual,
)

__all__ = ["random_graph", "random_corpus", "null_corpus", "bundled_graphs", "run_checks", "CheckResult"]

FD_H = 1e-5
FD_RTOL = 1e-5
FD_ATOL = 1e-8


def random_graph(rng, n=None, p=None, extra_edges=None, n_classes=2):
    """Random connected sparse labeled graph.

    A random spanning tree plus a few extra edges, base weights in
    ``[0.5, 2]``, features ``Unif[-1, 1]^p`` and one or two labeled nodes
    per class.
    """
    rng = make_rng(rng)
    n = int(rng.integers(5, 11)) if n is None else n
    p = int(rng.integers(1, 4)) if p is None else p
    extra = int(rng.integers(1, 4)) if extra_edges is None else extra_edges
    order = rng.permutation(n)
    edges = {tuple(sorted((int(order[k]), int(order[rng.integers(0, k)])))) for k in range(1, n)}
    tries = 0
    while len(edges) < n - 1 + extra and tries < 100:
        u, v = rng.choice(n, size=2, replace=False)
        edges.add((int(min(u, v)), int(max(u, v))))
        tries += 1
    edges = sorted(edges)
    w0 = rng.uniform(0.5, 2.0, size=len(edges))
    phi = rng.uniform(-1.0, 1.0, size=(len(edges), p))
    nodes = rng.permutation(n)
    labels, k = {}, 0
    for y in range(1, n_classes + 1):
        for _ in range(int(rng.integers(1, 3))):
            if k < n - 2:
                labels[int(nodes[k])] = y
                k += 1
    graph = LabeledGraph(n, np.array(edges), w0, phi, labels)
    theta = rng.uniform(-1.0, 1.0, size=p)
    return graph, theta


def random_corpus(count=20, seed=2024, **kw):
    rng = make_rng(seed)
    return [random_graph(rng, **kw) for _ in range(count)]


def null_corpus(count=10, seed=77):
    """Graphs with exact parameter symmetries, hence a nontrivial null space.

    Alternates between a duplicated feature coordinate (``phi_3 = phi_1``,
    so only ``theta_1 + theta_3`` matters) and a constant coordinate.
    """
    rng = make_rng(seed)
    out = []
    for k in range(count):
        g, th = random_graph(rng, p=3)
        phi = np.array(g.features)
        if k % 2 == 0:
            phi[:, 2] = phi[:, 0]
        else:
            phi[:, 1] = 0.4
        out.append((g.with_features(phi), th))
    return out


def bundled_graphs():
    """The small JSON graphs shipped with the package, keyed by file stem."""
    out = {}
    for entry in sorted(resources.files("drwgeom.data").iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out[entry.name[:-5]] = build_graph(json.loads(entry.read_text()))
    return out


def _fd_excess(est, ref, rtol=FD_RTOL, atol=FD_ATOL):
    """Worst ``|est - ref| / max(rtol * |ref|_inf, atol)``; <= 1 passes."""
    err = np.abs(np.asarray(est) - np.asarray(ref)).max()
    scale = max(rtol * np.abs(ref).max(), atol)
    return float(err / scale)


def _decs(graph, theta, order=1):
    k = build_kernel(graph, theta, order=order)
    return k, [decompose_for_class(k, graph, y) for y in graph.classes]


def measure_pmf_enumeration(corpus, T=12):
    worst = 0.0
    for graph, theta in corpus:
        _, decs = _decs(graph, theta, order=0)
        for dec in decs:
            law = hitting_law(dec)
            for q in dec.transient.tolist():
                direct, _ = pmf_sequence(law, q, T)
                worst = max(worst, float(np.abs(direct - enumerate_pmf(dec, q, T)).max()))
    return worst


def measure_moments(corpus, tol=1e-14):
    """Worst error of (mu, var) vs truncated sums, and of the m2 closed forms."""
    worst_sum, worst_forms = 0.0, 0.0
    for graph, theta in corpus:
        _, decs = _decs(graph, theta, order=0)
        for dec in decs:
            law = hitting_law(dec)
            T = tail_horizon(dec.spectral_radius_bound, tol)
            t = np.arange(1, T + 1)
            for q in dec.transient.tolist():
                pmf, _ = pmf_sequence(law, q, T)
                mu_s = np.sum(t * pmf)
                var_s = np.sum(t * t * pmf) - mu_s ** 2
                mom = hitting_moments(law, q)
                worst_sum = max(worst_sum, abs(mom.mean - mu_s), abs(mom.variance - var_s))
                f = second_moment_forms(law, q)
                worst_forms = max(
                    worst_forms,
                    abs(f["m2_compact"] - f["m2_cubic"]),
                    abs(f["mean_Z1"] - f["mean_Z2R"]),
                    abs(f["factorial_W"] - (f["m2_cubic"] + f["mean_Z1"])),
                )
    return worst_sum, worst_forms


def measure_neumann(corpus, tol=1e-12):
    worst = 0.0
    for graph, theta in corpus:
        _, decs = _decs(graph, theta, order=0)
        for dec in decs:
            K = tail_horizon(dec.spectral_radius_bound, tol)
            worst = max(worst, float(np.abs(hitting_law(dec).Z - neumann_series(dec.M, K)).max()))
    return worst


def measure_derivatives(corpus, L=5, t_max=10):
    """Finite-difference excess ratios for dZ, dmu, score and grad B (<= 1 passes)."""
    out = {"dZ": 0.0, "dmu": 0.0, "score": 0.0, "dB": 0.0, "score_mean": 0.0}
    for graph, theta in corpus:
        kernel, decs = _decs(graph, theta)
        for k, dec in enumerate(decs):
            y = dec.class_id
            law = hitting_law(dec)
            dZ = derivative_of_Z(dec, law.Z)

            def Z_at(th, y=y):
                return hitting_law(decompose_for_class(build_kernel(graph, th, order=0), graph, y)).Z

            out["dZ"] = max(out["dZ"], _fd_excess(dZ, finite_diff(Z_at, theta, FD_H)))
            for q in dec.transient.tolist():
                def mu_at(th, q=q, y=y):
                    d = decompose_for_class(build_kernel(graph, th, order=0), graph, y)
                    return hitting_moments(hitting_law(d), q).mean

                out["dmu"] = max(out["dmu"], _fd_excess(mean_gradient(dec, law.Z, q), finite_diff(mu_at, theta, FD_H)))

                def logpmf_at(th, q=q, y=y):
                    d = decompose_for_class(build_kernel(graph, th, order=0), graph, y)
                    seq, _ = pmf_sequence(hitting_law(d), q, t_max)
                    with np.errstate(divide="ignore"):
                        return np.log(seq)

                pmf, _ = pmf_sequence(law, q, t_max)
                with np.errstate(invalid="ignore"):
                    fd = finite_diff(logpmf_at, theta, FD_H)
                for t in range(1, t_max + 1):
                    if pmf[t - 1] > 1e-12:
                        out["score"] = max(out["score"], _fd_excess(score_function(dec, q, t), fd[t - 1]))
                mean, _, _ = score_moments(dec, q, tol=1e-14)
                out["score_mean"] = max(out["score_mean"], float(np.abs(mean).max()))
            B, G = betweenness_profile(kernel, graph.labels, y, L)

            def B_at(th, y=y):
                return betweenness_profile(build_kernel(graph, th, order=0), graph.labels, y, L, with_gradient=False)[0]

            unl = graph.unlabeled
            out["dB"] = max(out["dB"], _fd_excess(G[unl], finite_diff(B_at, theta, FD_H)[unl]))
    return out


def measure_kernel_derivatives(corpus):
    worst1, worst2 = 0.0, 0.0
    for graph, theta in corpus:
        k = build_kernel(graph, theta, order=2)
        fd1 = finite_diff(lambda th: build_kernel(graph, th, order=0).P, theta, FD_H)
        fd2 = finite_diff(lambda th: build_kernel(graph, th, order=1).dP, theta, FD_H)
        worst1 = max(worst1, _fd_excess(k.dP, fd1))
        worst2 = max(worst2, _fd_excess(k.ddP, fd2))
    return worst1, worst2


def measure_xi(corpus, tol=1e-12):
    """Worst |Xi - truncated double series| and worst telescoping residual."""
    worst_series, worst_resid = 0.0, 0.0
    for graph, theta in corpus:
        _, decs = _decs(graph, theta)
        for dec in decs:
            Xi = xi(hitting_law(dec))
            K = tail_horizon(dec.spectral_radius_bound, tol)
            worst_series = max(worst_series, float(np.abs(Xi - truncated_xi(dec, K)).max()))
            worst_resid = max(worst_resid, xi_residual(dec, Xi))
    return worst_series, worst_resid


def measure_fisher_rank(corpus):
    """Worst ratio of second to first singular value of the closed-form Fisher."""
    worst = 0.0
    for graph, theta in corpus:
        _, decs = _decs(graph, theta)
        for dec in decs:
            law = hitting_law(dec)
            Xi = xi(law)
            for q in dec.transient.tolist():
                if not dec.R[dec.local_index(q)] > 0:
                    continue
                F, _ = fisher_closed(law, q, Xi)
                if F.shape[0] < 2:
                    continue
                s = np.linalg.svd(F, compute_uv=False)
                if s[0] > 1e-12:
                    worst = max(worst, float(s[1] / s[0]))
                elif s[1] > 1e-12:
                    worst = np.inf
    return worst


def measure_quotient(corpus, seed=0):
    """Projector identities and invariance of chart and zeta under null shifts."""
    rng = make_rng(seed)
    proj, chart_shift, zeta_shift = 0.0, 0.0, 0.0
    checked = 0
    for graph, theta in corpus:
        kernel, decs = _decs(graph, theta)
        null_common = None
        for dec in decs:
            fld = sensitivity_field(hitting_law(dec))
            try:
                ch = build_chart(fld)
            except ZeroRank:
                continue
            Q = ch.Q
            proj = max(proj, float(np.abs(Q @ Q - Q).max()), float(np.abs(Q - Q.T).max()),
                       float(np.abs(Q @ ch.V - ch.V).max()), abs(np.trace(Q) - ch.rank) * 1e-2)
            N = null_space(fld)
            if N.shape[1]:
                nvec = N @ rng.standard_normal(N.shape[1])
                chart_shift = max(chart_shift, float(np.abs(
                    chart_coordinates(ch.V, theta + nvec) - chart_coordinates(ch.V, theta)).max()))
            null_common = N if null_common is None else _intersect(null_common, N)
        if null_common is not None and null_common.shape[1]:
            checked += 1
            nvec = null_common @ rng.standard_normal(null_common.shape[1]) * 0.5
            r0 = zeta(graph, theta, L=6)
            r1 = zeta(graph, theta + nvec, L=6)
            zeta_shift = max(zeta_shift, max(abs(r0.zeta[q] - r1.zeta[q]) for q in r0.nodes))
    return proj, chart_shift, zeta_shift, checked


def _intersect(A, B, tol=1e-10):
    """Orthonormal basis of span(A) intersected with span(B)."""
    if A.shape[1] == 0 or B.shape[1] == 0:
        return np.zeros((A.shape[0], 0))
    M = np.hstack([A, -B])
    _, s, Vt = np.linalg.svd(M)
    s = np.concatenate([s, np.zeros(M.shape[1] - len(s))])
    ker = Vt[s <= tol].T
    if ker.shape[1] == 0:
        return np.zeros((A.shape[0], 0))
    X = A @ ker[: A.shape[1]]
    q, r = np.linalg.qr(X)
    return q[:, np.abs(np.diag(r)) > tol]


def measure_proposition(corpus, trials=1000, seed=0):
    """Worst ``Delta(v) - zeta`` and ``delta_max - zeta`` over sampled nodes."""
    rng = make_rng(seed)
    worst_sampled, worst_max = -np.inf, -np.inf
    for graph, theta in corpus:
        rep = zeta(graph, theta, L=6, trials=0)
        for q in rep.nodes:
            res = proposition_check(rep.grad_quotient[q], np.eye(graph.p), trials=trials, rng=rng)
            worst_sampled = max(worst_sampled, res.sampled_max - res.zeta)
            worst_max = max(worst_max, res.delta_max - res.zeta)
    return worst_sampled, worst_max


def measure_spectral(corpus, T=30):
    worst = 0.0
    for graph, theta in corpus:
        _, decs = _decs(graph, theta, order=0)
        for dec in decs:
            law = hitting_law(dec)
            for q in dec.transient.tolist():
                direct, _ = pmf_sequence(law, q, T)
                try:
                    spectral = np.array([spectral_pmf(law, q, t)[0] for t in range(1, T + 1)])
                except NonDiagonalizable:
                    continue
                worst = max(worst, float(np.abs(spectral - direct).max()))
    return worst


def measure_mc_path4(n_samples=100_000, seed=0):
    g = bundled_graphs()["path4"]
    k = build_kernel(g, np.zeros(1), order=0)
    times = mc_hitting_times(k, g.labels, 1, 1, n_samples, seed=seed)
    return float(times.mean())


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_checks(fast=False):
    """Run every cross-validation check with its default threshold."""
    corpus = list(bundled_graph_pairs()) + random_corpus(count=4 if fast else 20)
    res = []

    def add(name, ok, detail):
        res.append(CheckResult(name, bool(ok), detail))

    w = measure_pmf_enumeration(corpus)
    add("pmf == path enumeration", w < 1e-12, f"max err {w:.2e} (tol 1e-12)")
    ws, wf = measure_moments(corpus)
    add("moments == truncated sums", ws < 1e-8, f"max err {ws:.2e} (tol 1e-8)")
    add("second-moment closed forms agree", wf < 1e-10, f"max err {wf:.2e} (tol 1e-10)")
    w = measure_neumann(corpus)
    add("Z == Neumann series", w < 1e-10, f"max err {w:.2e} (tol 1e-10)")
    w1, w2 = measure_kernel_derivatives(corpus)
    add("dP, ddP == finite differences", max(w1, w2) <= 1, f"excess ratios {w1:.2f}, {w2:.2f} (<= 1)")
    d = measure_derivatives(corpus)
    for key in ("dZ", "dmu", "score", "dB"):
        add(f"{key} == finite differences", d[key] <= 1, f"excess ratio {d[key]:.3f} (<= 1)")
    add("score has mean zero", d["score_mean"] < 1e-8, f"max |E score| {d['score_mean']:.2e} (tol 1e-8)")
    ws, wr = measure_xi(corpus)
    add("Xi == truncated double series", ws < 1e-8, f"max err {ws:.2e} (tol 1e-8)")
    add("(I-M) Xi (I-M) == dM", wr < 1e-10, f"residual {wr:.2e} (tol 1e-10)")
    w = measure_fisher_rank(corpus)
    add("closed-form Fisher is rank one", w < 1e-10, f"max s2/s1 {w:.2e} (tol 1e-10)")
    wp, wc, wz, nchk = measure_quotient(corpus + null_corpus(4 if fast else 10))
    add("projector identities", wp < 1e-10, f"max err {wp:.2e} (tol 1e-10)")
    add("chart invariant under null shifts", wc < 1e-9, f"max shift {wc:.2e} (tol 1e-9)")
    add("zeta invariant under null shifts", wz < 1e-9, f"max shift {wz:.2e} over {nchk} graphs (tol 1e-9)")
    ws, wm = measure_proposition(corpus, trials=200 if fast else 1000)
    add("Delta(v) <= zeta", ws <= 1e-9, f"max Delta - zeta {ws:.2e}")
    add("delta_max <= zeta", wm <= 1e-9, f"max delta_max - zeta {wm:.2e}")
    w = measure_spectral(corpus)
    add("spectral pmf == direct pmf", w < 1e-9, f"max err {w:.2e} (tol 1e-9)")
    mu = measure_mc_path4(n_samples=20_000 if fast else 100_000)
    tol = 0.07 if fast else 0.03
    add("MC mean hitting time on path4", abs(mu - 2.0) < tol, f"mean {mu:.4f} (2 +- {tol})")
    return res


def bundled_graph_pairs():
    for g in bundled_graphs().values():
        yield g, np.full(g.p, 0.3)
