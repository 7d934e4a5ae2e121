"""First-passage law of class-y absorption from a transient seed."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import NonDiagonalizable, RadiusExceeded, SingularSystem

__all__ = [
    "HittingLaw",
    "MomentSummary",
    "fundamental_matrix",
    "hitting_law",
    "hitting_pmf",
    "pmf_sequence",
    "hitting_pgf",
    "hitting_moments",
    "second_moment_forms",
    "spectral_pmf",
    "spectral_data",
    "tail_horizon",
]

RESIDUAL_TOL = 1e-10
EIGVEC_COND_LIMIT = 1e8


def tail_horizon(rho_hat, tol=1e-12, max_terms=1_000_000):
    """Smallest ``T`` with ``rho_hat**T / (1 - rho_hat) < tol``."""
    if rho_hat <= 0.0:
        return 1
    if rho_hat >= 1.0:
        raise ValueError("rho_hat must be < 1")
    T = int(np.ceil(np.log(tol * (1.0 - rho_hat)) / np.log(rho_hat)))
    T = max(T, 1)
    while rho_hat ** T / (1.0 - rho_hat) >= tol:
        T += 1
    if T > max_terms:
        raise ValueError(f"tail horizon {T} exceeds {max_terms}")
    return T


def _factor(dec):
    m = dec.m
    I_M = np.eye(m) - dec.M
    lu = sla.lu_factor(I_M, check_finite=True)
    if np.any(np.abs(np.diag(lu[0])) == 0.0):
        raise SingularSystem("I - M is singular")
    return lu


def fundamental_matrix(dec):
    """``Z = (I - M)^-1`` by LU factorization.

    Raises
    ------
    SingularSystem
        If the factorization is singular or the residual exceeds 1e-10.
    """
    lu = _factor(dec)
    Z = sla.lu_solve(lu, np.eye(dec.m))
    resid = np.abs((np.eye(dec.m) - dec.M) @ Z - np.eye(dec.m)).sum(axis=1).max()
    if not resid < RESIDUAL_TOL:
        raise SingularSystem(f"residual of (I - M) Z - I is {resid:.3e}")
    return Z


@dataclass(frozen=True)
class HittingLaw:
    """Hitting-time law for one class decomposition.

    Holds the decomposition, its fundamental matrix ``Z`` and the LU
    factors of ``I - M``. Spectral data are computed lazily on first use.
    """

    dec: object
    Z: np.ndarray
    lu: tuple = field(repr=False)

    @property
    def M(self):
        return self.dec.M

    @property
    def R(self):
        return self.dec.R

    def solve(self, b):
        """``(I - M)^-1 b``."""
        return sla.lu_solve(self.lu, b)

    def solve_left(self, b):
        """``b (I - M)^-1`` for row vector(s) ``b``."""
        return sla.lu_solve(self.lu, np.asarray(b).T, trans=1).T

    @cached_property
    def eig(self):
        return spectral_data(self.dec.M)


def hitting_law(dec):
    lu = _factor(dec)
    Z = fundamental_matrix(dec)
    Z.setflags(write=False)
    return HittingLaw(dec=dec, Z=Z, lu=lu)


def _seed_vector(law, q):
    e = np.zeros(law.dec.m)
    e[law.dec.local_index(q)] = 1.0
    return e


def pmf_sequence(law, q, T):
    """``p(1), ..., p(T)`` by repeated row-vector products ``e_q^T M^(t-1) R``.

    Also returns the residual transient mass ``||e_q^T M^T||_1`` which bounds
    the probability of ``T_y > T``.
    """
    x = _seed_vector(law, q)
    out = np.empty(T)
    M, R = law.M, law.R
    for t in range(T):
        out[t] = x @ R
        x = x @ M
    return out, float(np.abs(x).sum())


def hitting_pmf(law, q, t):
    """``P(T_y = t | v_0 = q)`` for a transient seed ``q`` and ``t >= 1``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return float(pmf_sequence(law, q, int(t))[0][-1])


def hitting_pgf(law, q, z):
    """``sum_t p(t | q) z^(t-1) = e_q^T (I - zM)^-1 R`` for ``|z| < 1/rho``."""
    rho_hat = law.dec.spectral_radius_bound
    if abs(z) * rho_hat >= 1.0:
        raise RadiusExceeded(f"|z| = {abs(z)} is outside the radius 1/rho = {1 / rho_hat if rho_hat else np.inf}")
    i = law.dec.local_index(q)
    x = np.linalg.solve(np.eye(law.dec.m) - z * law.M, law.R)
    return float(x[i])


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    second_moment: float
    variance: float


def hitting_moments(law, q):
    """Mean, second moment and variance of the hitting time from ``q``.

    ``mu = e_q^T Z 1``, ``m2 = e_q^T (2 Z^2 - Z) 1`` and
    ``var = e_q^T (2Z - I) Z 1 - mu^2``.
    """
    i = law.dec.local_index(q)
    Z1 = law.Z.sum(axis=1)
    ZZ1 = law.Z @ Z1
    mu = Z1[i]
    m2 = 2.0 * ZZ1[i] - Z1[i]
    var = (2.0 * ZZ1 - Z1)[i] - mu ** 2
    return MomentSummary(mean=float(mu), second_moment=float(m2), variance=float(max(var, 0.0)))


def second_moment_forms(law, q):
    """All closed forms for the first two moments, for cross-checking.

    Returns a dict with

    ``mean_Z1``       ``e_q^T Z 1``
    ``mean_Z2R``      ``e_q^T Z^2 R``
    ``m2_compact``    ``e_q^T (2 Z^2 - Z) 1``
    ``m2_cubic``      ``e_q^T (I + M) Z^3 R``
    ``factorial_W``   ``e_q^T W R`` with ``W = 2 (I - M)^-3``; this is
                      ``E[T (T + 1)]``, i.e. ``m2 + mu``.
    """
    i = law.dec.local_index(q)
    Z, M, R = law.Z, law.M, law.R
    one = np.ones(law.dec.m)
    ZR = Z @ R
    Z2R = Z @ ZR
    Z3R = Z @ Z2R
    return {
        "mean_Z1": float((Z @ one)[i]),
        "mean_Z2R": float(Z2R[i]),
        "m2_compact": float((2.0 * Z @ (Z @ one) - Z @ one)[i]),
        "m2_cubic": float((Z3R + M @ Z3R)[i]),
        "factorial_W": float(2.0 * Z3R[i]),
    }


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition: float


def spectral_data(M, cond_limit=EIGVEC_COND_LIMIT):
    """Eigen-decomposition ``M = U diag(lam) U^-1``.

    Rows of ``left`` are the left eigenvectors ``w_k^T`` normalized so that
    ``left @ right == I``.

    Raises
    ------
    NonDiagonalizable
        If the eigenvector matrix has condition number above ``cond_limit``.
    """
    lam, U = np.linalg.eig(M)
    cond = np.linalg.cond(U)
    if not np.isfinite(cond) or cond > cond_limit:
        raise NonDiagonalizable(f"eigenvector condition number {cond:.3e}")
    W = np.linalg.inv(U)
    return SpectralData(eigenvalues=lam, right=U, left=W, condition=float(cond))


def spectral_pmf(law, q, t, imag_tol=1e-9):
    """Spectral evaluation ``sum_k c_k(q) lam_k^(t-1)`` of the pmf.

    Expanding ``e_q^T U diag(lam)^(t-1) U^-1 R`` gives
    ``c_k(q) = (w_k^T R)(e_q^T u_k)``: the seed picks a component of the
    right eigenvector. (Using ``w_k^T e_q`` instead is only correct when
    ``M`` is symmetric.)

    Returns
    -------
    value : float
    coefficients : ndarray
        ``c_k(q)``, possibly complex.
    """
    sd = law.eig
    i = law.dec.local_index(q)
    c = (sd.left @ law.R) * sd.right[i, :]
    val = np.sum(c * sd.eigenvalues ** (t - 1))
    if abs(val.imag) > imag_tol:
        raise NonDiagonalizable(f"imaginary residue {abs(val.imag):.3e} in spectral pmf")
    return float(val.real), c
