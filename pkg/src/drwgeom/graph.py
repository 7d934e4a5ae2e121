"""Labeled graphs, the log-linear transition kernel and per-class blocks.

Node indices are 0-based everywhere inside the library. The on-disk formats
(JSON and edge-list text) use 1-based ids; conversion happens only in the
loaders and writers at the bottom of this module.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    AllAbsorbing,
    DimensionMismatch,
    DisconnectedGraph,
    DuplicateEdge,
    EmptyClass,
    ExponentOverflow,
    FeatureDimMismatch,
    GraphError,
    NonpositiveWeight,
    SelfLoop,
    SeedNotTransient,
    SpectralRadiusNotSubunit,
    TooLarge,
)

__all__ = [
    "LabeledGraph",
    "WeightedKernel",
    "ClassDecomposition",
    "build_graph",
    "build_kernel",
    "kernel_derivatives",
    "decompose_for_class",
    "spectral_radius",
    "load_graph",
    "load_graph_json",
    "load_edge_list",
    "graph_to_json",
]

MAX_EXPONENT = 700.0
DENSE_EIG_LIMIT = 512
DENSE_NODE_LIMIT = 2048
RHO_MARGIN = 1e-10


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LabeledGraph:
    """Undirected weighted graph with edge features and partial labels.

    Parameters
    ----------
    n : int
        Number of nodes.
    edges : array_like, shape (E, 2)
        Unordered node pairs, 0-based. Stored canonically with ``u < v``,
        sorted lexicographically.
    base_weight : array_like, shape (E,)
        Strictly positive base weights ``A0_ij``.
    features : array_like, shape (E, p)
        Edge feature vectors ``phi_ij``.
    labels : dict
        Partial map ``node -> class id``.
    """

    n: int
    edges: np.ndarray
    base_weight: np.ndarray
    features: np.ndarray
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise GraphError(f"node count must be positive, got {n}")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        w0 = np.asarray(self.base_weight, dtype=float).reshape(-1)
        phi = np.asarray(self.features, dtype=float)
        if phi.ndim == 1:
            phi = phi.reshape(-1, 1)
        if len(w0) != len(edges) or len(phi) != len(edges):
            raise FeatureDimMismatch("edges, base weights and features differ in length")
        if len(edges) and (edges.min() < 0 or edges.max() >= n):
            raise GraphError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            i = int(edges[edges[:, 0] == edges[:, 1]][0, 0])
            raise SelfLoop(f"self-loop at node {i}")
        if not np.all(np.isfinite(w0)) or np.any(w0 <= 0):
            raise NonpositiveWeight("base weights must be strictly positive")
        if not np.all(np.isfinite(phi)):
            raise GraphError("edge features must be finite")

        canon = np.sort(edges, axis=1)
        order = np.lexsort((canon[:, 1], canon[:, 0]))
        canon, w0, phi = canon[order], w0[order], phi[order]
        if len(canon) > 1:
            dup = np.all(canon[1:] == canon[:-1], axis=1)
            if dup.any():
                u, v = canon[1:][dup][0]
                raise DuplicateEdge(f"edge ({u}, {v}) given more than once")

        adj = coo_matrix((np.ones(len(canon)), (canon[:, 0], canon[:, 1])), shape=(n, n))
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp != 1:
            raise DisconnectedGraph(f"graph has {ncomp} connected components")

        labels = {int(k): int(v) for k, v in dict(self.labels).items()}
        for node in labels:
            if not 0 <= node < n:
                raise GraphError(f"label on unknown node {node}")

        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", _frozen(canon, np.int64))
        object.__setattr__(self, "base_weight", _frozen(w0))
        object.__setattr__(self, "features", _frozen(phi))
        object.__setattr__(self, "labels", labels)

    @property
    def p(self):
        return self.features.shape[1]

    @property
    def feature_dim(self):
        return self.p

    @property
    def classes(self):
        return tuple(sorted(set(self.labels.values())))

    @property
    def labeled(self):
        return np.array(sorted(self.labels), dtype=np.int64)

    @property
    def unlabeled(self):
        return np.array([i for i in range(self.n) if i not in self.labels], dtype=np.int64)

    def class_nodes(self, y):
        """Sorted node indices carrying label ``y``."""
        return np.array(sorted(i for i, c in self.labels.items() if c == y), dtype=np.int64)

    def base_adjacency(self):
        """Dense symmetric ``A0``."""
        A0 = np.zeros((self.n, self.n))
        u, v = self.edges.T
        A0[u, v] = self.base_weight
        A0[v, u] = self.base_weight
        return A0

    def feature_tensor(self):
        """Dense ``(n, n, p)`` tensor holding ``phi_ij`` on edges, 0 elsewhere."""
        F = np.zeros((self.n, self.n, self.p))
        u, v = self.edges.T
        F[u, v] = self.features
        F[v, u] = self.features
        return F

    def with_features(self, features):
        """Copy of the graph with the edge features replaced."""
        return LabeledGraph(self.n, self.edges, self.base_weight, features, self.labels)

    def with_labels(self, labels):
        return LabeledGraph(self.n, self.edges, self.base_weight, self.features, labels)

    def relabel_nodes(self, perm):
        """Copy of the graph with node ``i`` renamed ``perm[i]``."""
        perm = np.asarray(perm)
        return LabeledGraph(
            self.n,
            perm[self.edges],
            self.base_weight,
            self.features,
            {int(perm[i]): c for i, c in self.labels.items()},
        )


@dataclass(frozen=True)
class WeightedKernel:
    """Transition kernel ``P = D^-1 A`` at a parameter point, with derivatives.

    Derivative tensors put the parameter axes last: ``dP[i, j, a]`` is
    ``d P_ij / d theta_a`` and ``ddP[i, j, a, b]`` the mixed second
    derivative. Degree derivatives are stored by their diagonals, ``dD``
    with shape ``(n, p)`` and ``ddD`` with shape ``(n, p, p)``. Second-order
    fields are ``None`` when the kernel was built with ``order=1``.
    """

    theta: np.ndarray
    A: np.ndarray
    D: np.ndarray
    P: np.ndarray
    dA: np.ndarray | None = None
    dD: np.ndarray | None = None
    dP: np.ndarray | None = None
    ddA: np.ndarray | None = None
    ddD: np.ndarray | None = None
    ddP: np.ndarray | None = None

    @property
    def n(self):
        return self.P.shape[0]

    @property
    def p(self):
        return self.theta.shape[0]


def build_graph(desc):
    """Validate a parsed JSON graph description and return a graph.

    ``desc`` follows the on-disk schema: ``{"n", "p", "edges": [{"u", "v",
    "w0", "phi"}], "labels": {"node": class}}`` with 1-based node ids.
    """
    try:
        n = int(desc["n"])
        p = int(desc["p"])
        raw = list(desc["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError(f"malformed graph description: {exc}") from None
    edges, w0, phi = [], [], []
    for k, e in enumerate(raw):
        f = np.atleast_1d(np.asarray(e.get("phi", []), dtype=float))
        if f.shape != (p,):
            raise FeatureDimMismatch(f"edge {k}: phi has length {f.size}, expected p={p}")
        edges.append((int(e["u"]) - 1, int(e["v"]) - 1))
        w0.append(float(e.get("w0", 1.0)))
        phi.append(f)
    labels = {int(k) - 1: int(v) for k, v in dict(desc.get("labels", {})).items()}
    return LabeledGraph(n, np.array(edges, dtype=np.int64).reshape(-1, 2), w0,
                        np.array(phi).reshape(-1, p), labels)


def _check_theta(graph, theta):
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (graph.p,):
        raise DimensionMismatch(f"theta has shape {theta.shape}, expected ({graph.p},)")
    return theta


def _weights(graph, theta):
    expo = graph.features @ theta
    if np.any(np.abs(expo) > MAX_EXPONENT):
        raise ExponentOverflow(f"|theta^T phi| reaches {np.abs(expo).max():.1f} > {MAX_EXPONENT}")
    return graph.base_weight * np.exp(expo)


def kernel_derivatives(graph, theta, order=2):
    """First (and optionally second) derivative tensors of ``A``, ``D``, ``P``.

    The transition derivatives use centered features,
    ``dP_ij = P_ij (phi_ij - phibar_i)`` with ``phibar_i = sum_k P_ik phi_ik``,
    which is the quotient rule rearranged. The row means are taken relative
    to a per-row reference feature so that a coordinate in which all edge
    features coincide yields an exactly zero slice.

    Returns
    -------
    dict
        Keys ``dA, dD, dP`` and, if ``order >= 2``, ``ddA, ddD, ddP``.
    """
    theta = _check_theta(graph, theta)
    n, p = graph.n, graph.p
    w = _weights(graph, theta)
    u, v = graph.edges.T

    A = np.zeros((n, n))
    A[u, v] = w
    A[v, u] = w
    d = A.sum(axis=1)
    P = A / d[:, None]
    F = graph.feature_tensor()
    mask = A > 0

    dA = A[:, :, None] * F
    dD = dA.sum(axis=1)

    # reference = smallest incident feature per row and coordinate
    ref = np.where(mask[:, :, None], F, np.inf).min(axis=1)
    shifted = np.where(mask[:, :, None], F - ref[:, None, :], 0.0)
    centered = shifted - np.einsum("ik,ika->ia", P, shifted)[:, None, :]
    centered = np.where(mask[:, :, None], centered, 0.0)
    dP = P[:, :, None] * centered
    out = {"dA": dA, "dD": dD, "dP": dP}
    if order >= 2:
        ddA = A[:, :, None, None] * F[:, :, :, None] * F[:, :, None, :]
        ddD = ddA.sum(axis=1)
        outer = centered[:, :, :, None] * centered[:, :, None, :]
        cov = np.einsum("ik,ikab->iab", P, outer)
        ddP = P[:, :, None, None] * (outer - cov[:, None, :, :])
        ddP = np.where(mask[:, :, None, None], ddP, 0.0)
        out.update(ddA=ddA, ddD=ddD, ddP=ddP)
    return out


def build_kernel(graph, theta, order=2):
    """Evaluate ``A(theta) = A0 * exp(theta^T phi)`` and ``P = D^-1 A``.

    ``order`` selects how many derivative orders to attach (0, 1 or 2).
    Matrices are dense, so graphs above 2048 nodes are refused.
    """
    if graph.n > DENSE_NODE_LIMIT:
        raise TooLarge(f"n = {graph.n} exceeds the dense limit of {DENSE_NODE_LIMIT} nodes")
    theta = _check_theta(graph, theta)
    w = _weights(graph, theta)
    u, v = graph.edges.T
    A = np.zeros((graph.n, graph.n))
    A[u, v] = w
    A[v, u] = w
    d = A.sum(axis=1)
    P = A / d[:, None]
    derivs = kernel_derivatives(graph, theta, order=order) if order >= 1 else {}
    fields = {k: _frozen(val) for k, val in derivs.items()}
    return WeightedKernel(theta=_frozen(theta), A=_frozen(A), D=_frozen(d), P=_frozen(P), **fields)


def spectral_radius(M, power_iter_above=DENSE_EIG_LIMIT, maxiter=100_000, tol=1e-13):
    """Return ``(rho, rho_hat)`` for a nonnegative square matrix.

    Small matrices use dense eigenvalues and ``rho_hat == rho``. Above
    ``power_iter_above`` a power iteration is run and ``rho_hat`` is the
    Collatz-Wielandt bound ``max_i (Mx)_i / x_i``, which always dominates
    the spectral radius for positive ``x``.
    """
    m = M.shape[0]
    if m == 0:
        return 0.0, 0.0
    if m <= power_iter_above:
        rho = float(np.abs(np.linalg.eigvals(M)).max())
        return rho, rho
    x = np.ones(m) / m
    lam = 0.0
    for _ in range(maxiter):
        y = M @ x + 1e-300
        lam_new = np.linalg.norm(y, 1) / np.linalg.norm(x, 1)
        x = y / np.linalg.norm(y, 1)
        if abs(lam_new - lam) < tol:
            lam = lam_new
            break
        lam = lam_new
    upper = float(np.max((M @ x + 1e-300) / x))
    return float(lam), max(upper, float(lam))


@dataclass(frozen=True)
class ClassDecomposition:
    """Absorbing/transient blocks of ``P`` for one class ``y``.

    ``M`` is the transient-to-transient block, ``R = P_SA 1`` the one-step
    absorption mass, ``dM`` (m, m, p) and ``dR`` (m, p) their derivatives.
    """

    class_id: int
    absorbing: np.ndarray
    transient: np.ndarray
    M: np.ndarray
    R: np.ndarray
    dM: np.ndarray | None
    dR: np.ndarray | None
    spectral_radius: float
    spectral_radius_bound: float

    @property
    def m(self):
        return len(self.transient)

    @property
    def p(self):
        return None if self.dM is None else self.dM.shape[2]

    def local_index(self, q):
        """Position of node ``q`` inside the transient block."""
        pos = np.flatnonzero(self.transient == q)
        if len(pos) == 0:
            raise SeedNotTransient(f"node {q} is not transient for class {self.class_id}")
        return int(pos[0])

    def reassemble(self, P):
        """Absorbing-form kernel, ``[[I, 0], [P_SA, M]]``, in block order."""
        a, s = self.absorbing, self.transient
        k = len(a)
        out = np.zeros((k + len(s), k + len(s)))
        out[:k, :k] = np.eye(k)
        out[k:, :k] = P[np.ix_(s, a)]
        out[k:, k:] = self.M
        return out


def decompose_for_class(kernel, graph, y):
    """Split the kernel into absorbing ``L_y`` and transient ``V \\ L_y`` blocks."""
    absorbing = graph.class_nodes(y)
    if len(absorbing) == 0:
        raise EmptyClass(f"class {y} has no labeled nodes")
    transient = np.array([i for i in range(graph.n) if i not in set(absorbing.tolist())], dtype=np.int64)
    if len(transient) == 0:
        raise AllAbsorbing(f"every node is labeled {y}; no transient states")
    P = kernel.P
    M = P[np.ix_(transient, transient)]
    R = P[np.ix_(transient, absorbing)].sum(axis=1)
    dM = dR = None
    if kernel.dP is not None:
        dM = kernel.dP[np.ix_(transient, transient)]
        dR = kernel.dP[np.ix_(transient, absorbing)].sum(axis=1)
    rho, rho_hat = spectral_radius(M)
    if not rho_hat < 1.0 - RHO_MARGIN:
        raise SpectralRadiusNotSubunit(f"rho(M) = {rho_hat!r} for class {y}")
    return ClassDecomposition(
        class_id=int(y),
        absorbing=_frozen(absorbing, np.int64),
        transient=_frozen(transient, np.int64),
        M=_frozen(M),
        R=_frozen(R),
        dM=None if dM is None else _frozen(dM),
        dR=None if dR is None else _frozen(dR),
        spectral_radius=rho,
        spectral_radius_bound=rho_hat,
    )


# --- file formats ---------------------------------------------------------

def load_graph_json(path):
    with open(path) as fh:
        return build_graph(json.load(fh))


def load_edge_list(path, labels_path=None):
    """Read ``u v w0 phi_1 ... phi_p`` lines plus an optional ``node class`` file.

    Lines starting with ``#`` are ignored. ``n`` is the largest node id seen
    in either file.
    """
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows:
        raise GraphError(f"{path}: no edges")
    widths = {len(r) for r in rows}
    if len(widths) != 1 or widths.pop() < 3:
        raise FeatureDimMismatch(f"{path}: rows must all have the form 'u v w0 phi...'")
    data = np.array(rows, dtype=float)
    edges = data[:, :2].astype(np.int64) - 1
    labels = {}
    if labels_path is not None:
        for line in Path(labels_path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                node, cls = line.split()[:2]
                labels[int(node) - 1] = int(cls)
    n = int(max(edges.max() + 1, max(labels, default=-1) + 1))
    phi = data[:, 3:]
    if phi.shape[1] == 0:
        phi = np.zeros((len(data), 1))
    return LabeledGraph(n, edges, data[:, 2], phi, labels)


def load_graph(path, labels_path=None):
    """Load a graph from JSON (``.json``) or whitespace edge-list text."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return load_graph_json(path)
    if labels_path is None:
        guess = path.with_suffix(".labels")
        labels_path = guess if guess.exists() else None
    return load_edge_list(path, labels_path)


def graph_to_json(graph):
    """Inverse of :func:`build_graph` (1-based ids)."""
    return {
        "n": graph.n,
        "p": graph.p,
        "edges": [
            {"u": int(u) + 1, "v": int(v) + 1, "w0": float(w), "phi": [float(x) for x in f]}
            for (u, v), w, f in zip(graph.edges, graph.base_weight, graph.features)
        ],
        "labels": {str(k + 1): int(c) for k, c in sorted(graph.labels.items())},
    }
