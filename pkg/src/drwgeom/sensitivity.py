"""Parameter sensitivities of the hitting-time law.

Covers the derivative of the fundamental matrix, the accumulated
sensitivity matrix ``Xi``, per-outcome score functions and the two Fisher
information forms (outcome series and rank-one closed form).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroAbsorptionMass, ZeroProbability

__all__ = [
    "SensitivityField",
    "derivative_of_Z",
    "xi",
    "xi_residual",
    "score_function",
    "score_moments",
    "fisher_series",
    "fisher_closed",
    "mean_gradient",
    "sensitivity_field",
]

logger = logging.getLogger(__name__)


def derivative_of_Z(dec, Z):
    """``dZ_a = Z dM_a Z`` for every parameter direction; shape ``(m, m, p)``."""
    return np.einsum("ij,jka,kl->ila", Z, dec.dM, Z)


def xi(law):
    """Accumulated sensitivity ``Xi_a = sum_{k,l} M^k dM_a M^l``.

    The double series factors as ``Z dM_a Z``; each slice is obtained from
    two triangular solves against the LU factors of ``I - M`` (left, then
    right), so ``Z`` itself is never multiplied in.
    """
    dM = law.dec.dM
    m, _, p = dM.shape
    out = np.empty((m, m, p))
    for a in range(p):
        left = law.solve(dM[:, :, a])
        out[:, :, a] = law.solve_left(left)
    return out


def xi_residual(dec, Xi):
    """``max_a ||(I - M) Xi_a (I - M) - dM_a||_inf`` (row-sum norm)."""
    I_M = np.eye(dec.m) - dec.M
    worst = 0.0
    for a in range(Xi.shape[2]):
        r = I_M @ Xi[:, :, a] @ I_M - dec.dM[:, :, a]
        worst = max(worst, float(np.abs(r).sum(axis=1).max()))
    return worst


def score_function(dec, q, t):
    """Gradient of ``log p(t | q)`` in theta.

    Evaluates the power-sum form

        (sum_{s=0}^{t-2} e_q^T M^s dM M^(t-s-2) R + e_q^T M^(t-1) dR)
        / e_q^T M^(t-1) R

    from cached forward rows ``e_q^T M^s`` and backward columns ``M^k R``.
    """
    t = int(t)
    if t < 1:
        raise ValueError("t must be >= 1")
    i = dec.local_index(q)
    M, R, dM, dR = dec.M, dec.R, dec.dM, dec.dR
    fwd = [np.zeros(dec.m)]
    fwd[0][i] = 1.0
    for _ in range(t - 1):
        fwd.append(fwd[-1] @ M)
    bwd = [R]
    for _ in range(t - 2):
        bwd.append(M @ bwd[-1])
    prob = fwd[t - 1] @ R
    if not prob > 0.0:
        raise ZeroProbability(f"p({t} | {q}) = {prob!r}")
    num = fwd[t - 1] @ dR
    for s in range(t - 1):
        num = num + np.einsum("i,ija,j->a", fwd[s], dM, bwd[t - s - 2])
    return num / prob


def score_moments(dec, q, tol=1e-12, max_terms=1_000_000):
    """Accumulate ``sum_t p(t) s(t)`` and ``sum_t p(t) s(t) s(t)^T``.

    Runs the recursion ``g_(t+1) = g_t M + x_t dM`` for the derivative
    ``g_t`` of the row ``x_t = e_q^T M^(t-1)``, stopping once the residual
    transient mass ``||x_t||_1`` drops below ``tol``. Outcomes with zero
    probability carry zero derivative and are skipped.

    Returns
    -------
    mean_score : ndarray, shape (p,)
    fisher : ndarray, shape (p, p)
    horizon : int
        Number of outcomes summed.
    """
    i = dec.local_index(q)
    M, R, dM, dR = dec.M, dec.R, dec.dM, dec.dR
    p = dM.shape[2]
    x = np.zeros(dec.m)
    x[i] = 1.0
    g = np.zeros((p, dec.m))
    mean = np.zeros(p)
    fisher = np.zeros((p, p))
    t = 0
    while True:
        t += 1
        prob = x @ R
        dprob = g @ R + x @ dR
        if prob > 0.0:
            mean += dprob
            fisher += np.outer(dprob, dprob) / prob
        g = g @ M + np.einsum("i,ija->aj", x, dM)
        x = x @ M
        if x.sum() < tol or t >= max_terms:
            break
    return mean, 0.5 * (fisher + fisher.T), t


def fisher_series(dec, q, tol=1e-12):
    """Observed Fisher information ``sum_t p(t) s(t) s(t)^T`` of the law.

    Terms are added until the neglected probability mass is below ``tol``.
    """
    return score_moments(dec, q, tol=tol)[1]


def _z_vector(law, Xi, i):
    return np.einsum("ja,j->a", Xi[i], law.R) + law.dec.dR[i]


def fisher_closed(law, q, Xi=None):
    """Rank-one closed form ``F(q) = z z^T / (e_q^T R)``.

    ``z(q)_a = e_q^T Xi_a R + e_q^T dR_a``.

    Returns
    -------
    F : ndarray, shape (p, p)
    z : ndarray, shape (p,)

    Raises
    ------
    ZeroAbsorptionMass
        When ``e_q^T R == 0`` (no labeled neighbour of class y).
    """
    i = law.dec.local_index(q)
    mass = law.R[i]
    if not mass > 0.0:
        raise ZeroAbsorptionMass(f"node {q} has no one-step absorption mass for class {law.dec.class_id}")
    if Xi is None:
        Xi = xi(law)
    z = _z_vector(law, Xi, i)
    return np.outer(z, z) / mass, z


def mean_gradient(dec, Z, q):
    """``d mu / d theta_a = e_q^T Z dM_a Z 1``."""
    i = dec.local_index(q)
    Z1 = Z.sum(axis=1)
    return np.einsum("j,jka,k->a", Z[i], dec.dM, Z1)


@dataclass(frozen=True)
class SensitivityField:
    """Per-class sensitivity data over the transient seeds.

    ``z``, ``fisher`` and ``mass`` are keyed by node index and contain only
    seeds with positive absorption mass; the others are listed in
    ``excluded``.
    """

    class_id: int
    Xi: np.ndarray
    dZ: np.ndarray
    z: dict = field(default_factory=dict)
    fisher: dict = field(default_factory=dict)
    mass: dict = field(default_factory=dict)
    excluded: tuple = ()

    @property
    def seeds(self):
        return sorted(self.z)

    def z_matrix(self):
        """Rows ``z(q)^T`` in seed order; shape ``(k, p)``."""
        p = self.Xi.shape[2]
        if not self.z:
            return np.zeros((0, p))
        return np.array([self.z[q] for q in self.seeds])


def sensitivity_field(law):
    """Compute ``Xi``, ``dZ`` and every seed's ``z(q)`` and closed-form Fisher."""
    dec = law.dec
    Xi = xi(law)
    dZ = derivative_of_Z(dec, law.Z)
    zs, fish, mass, excluded = {}, {}, {}, []
    for q in dec.transient.tolist():
        try:
            F, z = fisher_closed(law, q, Xi)
        except ZeroAbsorptionMass:
            excluded.append(q)
            continue
        zs[q], fish[q], mass[q] = z, F, float(law.R[dec.local_index(q)])
    if excluded:
        # interior nodes routinely have no absorbing neighbour; not a fault
        logger.info("class %s: %d seeds without absorption mass excluded", dec.class_id, len(excluded))
    return SensitivityField(class_id=dec.class_id, Xi=Xi, dZ=dZ, z=zs, fisher=fish,
                            mass=mass, excluded=tuple(excluded))
