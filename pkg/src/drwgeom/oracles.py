"""Brute-force reference computations.

Nothing here calls into the linear-solve paths it is used to check: the
pmf is summed path by path, series are truncated power sums, derivatives are
central differences and walks are simulated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SeedNotTransient, TooLarge
from .hitting import tail_horizon

__all__ = [
    "WalkSample",
    "Rejected",
    "make_rng",
    "enumerate_pmf",
    "sample_drw",
    "mc_hitting_times",
    "mc_drw_betweenness",
    "finite_diff",
    "neumann_series",
    "truncated_xi",
    "dense_betweenness",
]

ENUM_MAX_M = 12
ENUM_MAX_T = 20
ENUM_PATH_BUDGET = 10 ** 8
MC_MAX_ATTEMPTS = 10 ** 7
SERIES_BUDGET = 10 ** 9


def make_rng(seed):
    """Counter-based (Philox) generator; identical streams on every platform."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def enumerate_pmf(dec, q, T_max):
    """Exact ``p(1..T_max)`` by summing the probability of every transient path.

    A path ``q = s_0, ..., s_(t-1)`` stays in the transient set and its
    final step lands in the absorbing set, contributing
    ``P(s_0, s_1) ... P(s_(t-2), s_(t-1)) * R(s_(t-1))`` to ``p(t)``.
    Depth-first over the nonzero entries of ``M``.

    Raises
    ------
    TooLarge
        If ``m > 12``, ``T_max > 20`` or the walk count exceeds 1e8.
    """
    m = dec.m
    if m > ENUM_MAX_M or T_max > ENUM_MAX_T:
        raise TooLarge(f"enumeration limited to m <= {ENUM_MAX_M}, T <= {ENUM_MAX_T} (got {m}, {T_max})")
    i0 = dec.local_index(q)
    M, R = dec.M, dec.R
    succ = [[(j, M[i, j]) for j in range(m) if M[i, j] > 0] for i in range(m)]

    # count walks before enumerating them
    counts = np.zeros(m)
    counts[i0] = 1
    total = 1
    adj = (M > 0).astype(float)
    for _ in range(T_max - 1):
        counts = counts @ adj
        total += counts.sum()
    if total > ENUM_PATH_BUDGET:
        raise TooLarge(f"{total:.3g} transient walks exceed the enumeration budget")

    out = [0.0] * T_max
    stack = [(i0, 1.0, 1)]
    while stack:
        node, prob, depth = stack.pop()
        out[depth - 1] += prob * R[node]
        if depth < T_max:
            for j, pij in succ[node]:
                stack.append((j, prob * pij, depth + 1))
    return np.array(out)


class Rejected:
    """Marker value for a walk that is not a DRW within the horizon."""

    __slots__ = ("reason", "length")

    def __init__(self, reason, length):
        self.reason = reason
        self.length = length

    def __bool__(self):
        return False

    def __repr__(self):
        return f"Rejected({self.reason!r}, length={self.length})"


@dataclass(frozen=True)
class WalkSample:
    path: tuple
    absorbed_at: int
    passes: dict = field(default_factory=dict)

    @property
    def length(self):
        return len(self.path) - 1


def _cumulative(P):
    C = np.cumsum(P, axis=1)
    C[:, -1] = 1.0
    return C


def sample_drw(kernel, labels, y, start, L, seed=None, strict=False, _cum=None):
    """Simulate one walk under ``P`` from ``start`` until it hits class ``y``.

    The walk is accepted as a class-``y`` DRW if it is absorbed into
    ``L_y`` within ``L`` steps. Interior visits to ``L_y`` are impossible by
    construction (absorption stops the walk). With ``strict=True`` interior
    visits to labeled nodes of other classes also reject the walk.

    Returns
    -------
    WalkSample or Rejected
    """
    if labels.get(start) == y:
        raise SeedNotTransient(f"start node {start} is labeled {y}")
    rng = make_rng(seed)
    C = _cumulative(kernel.P) if _cum is None else _cum
    path = [start]
    v = start
    for _ in range(L):
        v = int(np.searchsorted(C[v], rng.random(), side="right"))
        path.append(v)
        c = labels.get(v)
        if c == y:
            passes = {}
            for u in path:
                passes[u] = passes.get(u, 0) + 1
            return WalkSample(path=tuple(path), absorbed_at=v, passes=passes)
        if strict and c is not None:
            return Rejected("interior visit to another class", len(path) - 1)
    return Rejected("not absorbed within horizon", L)


def mc_hitting_times(kernel, labels, y, start, n_samples, seed=0, max_steps=10 ** 6):
    """Monte-Carlo hitting times of ``L_y`` from ``start`` (unconditioned)."""
    rng = make_rng(seed)
    C = _cumulative(kernel.P)
    target = np.zeros(kernel.n, dtype=bool)
    target[[i for i, c in labels.items() if c == y]] = True
    out = np.empty(n_samples, dtype=np.int64)
    for k in range(n_samples):
        v, t = start, 0
        while True:
            v = int(np.searchsorted(C[v], rng.random(), side="right"))
            t += 1
            if target[v] or t >= max_steps:
                break
        out[k] = t
    return out


def mc_drw_betweenness(kernel, labels, y, q, L, n_accept, seed=0, strict=False, max_attempts=MC_MAX_ATTEMPTS):
    """Conditional expected visit count to ``q`` over class-``y`` DRWs of length <= L.

    Start nodes are drawn from the stationary law ``pi_i ~ d_i`` (paths
    weighted by ``pi_(v_0) prod P``); draws landing in ``L_y`` or walks not
    absorbed within ``L`` are rejected.

    Returns
    -------
    estimate : float
        Mean of ``#{t : v_t = q}`` over accepted walks (nan if none).
    acceptance : float
        Accepted fraction of attempts.
    accepted : int
    """
    rng = make_rng(seed)
    C = _cumulative(kernel.P)
    pi = kernel.D / kernel.D.sum()
    cpi = np.cumsum(pi)
    cpi[-1] = 1.0
    visits, accepted, attempts = 0, 0, 0
    while accepted < n_accept and attempts < max_attempts:
        attempts += 1
        v0 = int(np.searchsorted(cpi, rng.random(), side="right"))
        if labels.get(v0) == y:
            continue
        w = sample_drw(kernel, labels, y, v0, L, seed=rng, strict=strict, _cum=C)
        if not w:
            continue
        accepted += 1
        visits += w.passes.get(q, 0)
    est = visits / accepted if accepted else float("nan")
    return est, accepted / max(attempts, 1), accepted


def finite_diff(f, theta, h=1e-5):
    """Central differences ``(f(theta + h e_a) - f(theta - h e_a)) / 2h``.

    ``f`` may return a scalar or an array; the parameter axis is appended
    last, so the result has shape ``np.shape(f(theta)) + (p,)``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    cols = []
    for a in range(theta.size):
        e = np.zeros_like(theta)
        e[a] = h
        cols.append((np.asarray(f(theta + e), dtype=float) - np.asarray(f(theta - e), dtype=float)) / (2 * h))
    return np.stack(cols, axis=-1)


def neumann_series(M, K):
    """``sum_{k=0}^{K} M^k`` by repeated multiplication."""
    m = M.shape[0]
    S = np.eye(m)
    term = np.eye(m)
    for _ in range(K):
        term = term @ M
        S = S + term
    return S


def series_horizon(dec, tol=1e-12):
    return tail_horizon(dec.spectral_radius_bound, tol)


def truncated_xi(dec, K):
    """``sum_{k, l <= K} M^k dM_a M^l`` for each parameter slice.

    The double sum is accumulated as ``S_K dM_a S_K`` with ``S_K`` the
    truncated power sum, which is the same finite sum regrouped.
    """
    m, p = dec.m, dec.dM.shape[2]
    if K * m * m * m > SERIES_BUDGET:
        raise TooLarge(f"K={K} with m={m} exceeds the series budget")
    S = neumann_series(dec.M, K)
    return np.stack([S @ dec.dM[:, :, a] @ S for a in range(p)], axis=-1)


def dense_betweenness(P, nodes, q, L):
    """Triple loop over explicitly formed matrix powers."""
    powers = [np.eye(P.shape[0])]
    for _ in range(L):
        powers.append(powers[-1] @ P)
    total = 0.0
    for ell in range(1, L + 1):
        for i in nodes:
            for j in nodes:
                for t in range(1, ell):
                    total += powers[t][i, q] * powers[ell - t][q, j]
    return total
