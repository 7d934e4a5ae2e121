"""Identifiable subspace, seed-basis chart and quotient metric."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import EmptyField, RankDeficientBasis, ZeroRank

__all__ = [
    "QuotientChart",
    "aggregate_sigma",
    "select_basis",
    "chart_coordinates",
    "projector",
    "quotient_metric",
    "aggregated_metric",
    "null_space",
    "build_chart",
    "DEFAULT_RANK_TOL",
]

logger = logging.getLogger(__name__)

DEFAULT_RANK_TOL = 1e-8


def aggregate_sigma(field):
    """``Sigma = sum_q z(q) z(q)^T`` over seeds with positive absorption mass."""
    Zm = field.z_matrix()
    if Zm.shape[0] == 0:
        raise EmptyField(f"class {field.class_id}: no seed has positive absorption mass")
    S = Zm.T @ Zm
    return 0.5 * (S + S.T)


def _numerical_rank(Zm, rank_tol):
    if Zm.size == 0:
        return 0
    s = np.linalg.svd(Zm, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def select_basis(field, rank_tol=DEFAULT_RANK_TOL):
    """Choose ``r`` seeds whose ``z(q)`` span the identifiable subspace.

    ``r`` counts singular values of the stacked z-matrix above
    ``rank_tol`` times the largest. Seeds are picked by column-pivoted QR on
    the columns ``z(q)``, i.e. greedy maximum-residual pivoting.

    Returns
    -------
    r : int
    seeds : list of int
    V : ndarray, shape (p, r)
    """
    if not rank_tol > 0:
        raise ValueError("rank_tol must be positive")
    Zm = field.z_matrix()
    if Zm.shape[0] == 0:
        raise EmptyField(f"class {field.class_id}: no seed has positive absorption mass")
    r = _numerical_rank(Zm, rank_tol)
    if r == 0:
        raise ZeroRank(f"class {field.class_id}: every z(q) vanishes")
    _, _, piv = sla.qr(Zm.T, mode="economic", pivoting=True)
    seeds = [field.seeds[k] for k in piv[:r]]
    V = np.column_stack([field.z[q] for q in seeds])
    return r, seeds, V


def _qr_basis(V, tol=1e-12):
    V = np.atleast_2d(np.asarray(V, dtype=float))
    Qt, Rt = np.linalg.qr(V, mode="reduced")
    d = np.abs(np.diag(Rt))
    if V.shape[1] == 0 or V.shape[1] > V.shape[0] or d.min() <= tol * max(d.max(), np.finfo(float).tiny):
        raise RankDeficientBasis("basis matrix V is not of full column rank")
    return Qt, Rt


def chart_coordinates(V, theta):
    """Chart map ``u = (V^T V)^-1 V^T theta``, via a thin QR of ``V``."""
    Qt, Rt = _qr_basis(V)
    return sla.solve_triangular(Rt, Qt.T @ np.asarray(theta, dtype=float))


def projector(V):
    """Orthogonal projector ``V (V^T V)^-1 V^T`` onto ``span(V)``."""
    Qt, _ = _qr_basis(V)
    Q = Qt @ Qt.T
    return 0.5 * (Q + Q.T)


def gram_inverse(V):
    """``(V^T V)^-1 = R^-1 R^-T`` from the thin QR factor."""
    _, Rt = _qr_basis(V)
    Rinv = sla.solve_triangular(Rt, np.eye(Rt.shape[0]))
    G = Rinv @ Rinv.T
    return 0.5 * (G + G.T)


def quotient_metric(field, V):
    """Quotient metric in the seed-basis chart.

    Returns
    -------
    g_tilde : ndarray, shape (r, r)
        ``(V^T V)^-1``, the pushforward metric used downstream.
    g_tilde_summed : ndarray, shape (r, r)
        ``sum_q (u_i^T z(q)) (u_j^T z(q)) / (e_q^T R)`` evaluated on the lifts
        ``u_i = V (V^T V)^-1 e_i``. Kept as a diagnostic; it does not in
        general coincide with ``g_tilde``.
    """
    g = gram_inverse(V)
    lifts = V @ g
    S_w = sum(np.outer(field.z[q], field.z[q]) / field.mass[q] for q in field.seeds)
    g_sum = lifts.T @ S_w @ lifts
    g_sum = 0.5 * (g_sum + g_sum.T)
    dist = np.linalg.norm(g_sum - g) / max(np.linalg.norm(g), np.finfo(float).tiny)
    logger.debug("class %s: ||g_summed - g|| / ||g|| = %.3e", field.class_id, dist)
    return g, g_sum


def aggregated_metric(field):
    """Mean closed-form Fisher matrix over the included seeds (diagnostic)."""
    if not field.fisher:
        raise EmptyField(f"class {field.class_id}: no seeds")
    return sum(field.fisher.values()) / len(field.fisher)


def null_space(field, rank_tol=DEFAULT_RANK_TOL):
    """Orthonormal basis (columns) of the directions orthogonal to every ``z(q)``."""
    Zm = field.z_matrix()
    p = field.Xi.shape[2]
    if Zm.shape[0] == 0:
        return np.eye(p)
    _, s, Vt = np.linalg.svd(Zm, full_matrices=True)
    r = 0 if s.size == 0 or s[0] == 0 else int(np.sum(s > rank_tol * s[0]))
    return Vt[r:].T


@dataclass(frozen=True)
class QuotientChart:
    class_id: int
    Sigma: np.ndarray
    rank: int
    rank_tol: float
    basis_seeds: tuple
    V: np.ndarray
    Q: np.ndarray
    g_tilde: np.ndarray
    g_tilde_summed: np.ndarray
    g_bar: np.ndarray

    @property
    def metric_gap(self):
        """Relative Frobenius distance between the two metric forms."""
        return float(np.linalg.norm(self.g_tilde_summed - self.g_tilde) / np.linalg.norm(self.g_tilde))


def build_chart(field, rank_tol=DEFAULT_RANK_TOL):
    """Assemble ``Sigma``, the seed basis, projector and metrics for one class."""
    Sigma = aggregate_sigma(field)
    r, seeds, V = select_basis(field, rank_tol)
    g, g_sum = quotient_metric(field, V)
    return QuotientChart(
        class_id=field.class_id,
        Sigma=Sigma,
        rank=r,
        rank_tol=rank_tol,
        basis_seeds=tuple(seeds),
        V=V,
        Q=projector(V),
        g_tilde=g,
        g_tilde_summed=g_sum,
        g_bar=aggregated_metric(field),
    )
