"""Synthetic graph generators and the sensitivity-table reproduction."""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import GenerationFailed
from .graph import LabeledGraph
from .oracles import make_rng
from .quotient import DEFAULT_RANK_TOL
from .score import zeta

__all__ = [
    "ExperimentConfig",
    "TopologyResult",
    "generate",
    "run_realization",
    "run_topology",
    "reproduce_table1",
    "results_to_csv",
    "format_table",
    "TOPOLOGIES",
    "REPORTED_TABLE",
]

TOPOLOGIES = ("line", "star", "sbm")
SBM_MAX_TRIES = 1000
THREADS_ENV = "DRWGEOM_THREADS"

# reported mean normalized scores for unlabeled nodes 2..9 (1-based)
REPORTED_TABLE = {
    "line": (0.070, 0.110, 0.145, 0.175, 0.175, 0.145, 0.110, 0.070),
    "star": (0.449, 0.078, 0.078, 0.078, 0.078, 0.078, 0.078, 0.078),
    "sbm": (0.100, 0.110, 0.130, 0.160, 0.160, 0.130, 0.110, 0.100),
}


@dataclass(frozen=True)
class ExperimentConfig:
    topology: str = "line"
    n: int = 10
    p: int = 1
    theta_range: tuple = (-1.0, 1.0)
    fixed_theta: tuple | None = None
    realizations: int = 100
    L: int | None = None
    rng_seed: int = 0
    sbm_blocks: tuple = (5, 5)
    p_in: float = 0.8
    p_out: float = 0.2
    rank_tol: float = DEFAULT_RANK_TOL
    workers: int | None = None

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.n < 3:
            raise ValueError("n must be >= 3")
        if not (0 < self.p_in <= 1 and 0 < self.p_out <= 1):
            raise ValueError("p_in and p_out must lie in (0, 1]")
        if self.topology == "sbm" and sum(self.sbm_blocks) != self.n:
            raise ValueError("SBM block sizes must sum to n")
        if self.fixed_theta is not None and len(self.fixed_theta) != self.p:
            raise ValueError("fixed_theta must have length p")


def _structure(config, rng):
    n = config.n
    if config.topology == "line":
        return [(i, i + 1) for i in range(n - 1)], {0: 1, n - 1: 2}
    if config.topology == "star":
        return [(0, i) for i in range(1, n)], {1: 1, n - 1: 2}
    block = np.repeat(np.arange(len(config.sbm_blocks)), config.sbm_blocks)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(block[iu] == block[ju], config.p_in, config.p_out)
    for _ in range(SBM_MAX_TRIES):
        keep = rng.random(len(iu)) < prob
        edges = np.column_stack([iu[keep], ju[keep]])
        if len(edges) == 0:
            continue
        adj = np.zeros((n, n))
        adj[edges[:, 0], edges[:, 1]] = 1
        if connected_components(adj, directed=False)[0] == 1:
            return [tuple(e) for e in edges.tolist()], {0: 1, n - 1: 2}
    raise GenerationFailed(f"no connected SBM sample in {SBM_MAX_TRIES} tries")


def generate(config, rng):
    """Draw one labeled graph and parameter point.

    Returns
    -------
    graph : LabeledGraph
        Unit base weights and features ``phi_ij ~ Unif[-1, 1]^p``.
    theta : ndarray
        Uniform over ``theta_range`` per coordinate, unless fixed.
    """
    rng = make_rng(rng)
    edges, labels = _structure(config, rng)
    phi = rng.uniform(-1.0, 1.0, size=(len(edges), config.p))
    if config.fixed_theta is not None:
        theta = np.asarray(config.fixed_theta, dtype=float)
    else:
        lo, hi = config.theta_range
        theta = rng.uniform(lo, hi, size=config.p)
    graph = LabeledGraph(config.n, np.array(edges, dtype=np.int64), np.ones(len(edges)), phi, labels)
    return graph, theta


def sbm_block_of(config):
    return np.repeat(np.arange(len(config.sbm_blocks)), config.sbm_blocks)


@dataclass
class Realization:
    index: int
    nodes: tuple
    zeta: np.ndarray
    zeta_normalized: np.ndarray | None
    horizon: int
    boundary: np.ndarray | None = None


def run_realization(config, index, seed_seq):
    graph, theta = generate(config, np.random.Generator(np.random.Philox(seed_seq)))
    rep = zeta(graph, theta, L=config.L, rank_tol=config.rank_tol)
    nodes = rep.nodes
    z = np.array([rep.zeta[q] for q in nodes])
    zn = None if rep.zeta_normalized is None else np.array([rep.zeta_normalized[q] for q in nodes])
    boundary = None
    if config.topology == "sbm":
        block = sbm_block_of(config)
        A0 = graph.base_adjacency() > 0
        boundary = np.array([bool(np.any(A0[q] & (block != block[q]))) for q in nodes])
    return Realization(index, nodes, z, zn, rep.horizon, boundary)


@dataclass
class TopologyResult:
    config: ExperimentConfig
    nodes: tuple
    mean: np.ndarray
    stderr: np.ndarray
    argmax_freq: np.ndarray
    realizations: list = field(repr=False)
    skipped: int = 0

    @property
    def argmax_nodes(self):
        top = self.mean.max()
        return [q for q, v in zip(self.nodes, self.mean) if np.isclose(v, top, rtol=0, atol=1e-12)]

    def boundary_elevation(self):
        """Per realization: boundary-adjacent mean zeta > interior mean zeta.

        Realizations lacking either group are returned as ``None``.
        """
        out = []
        for r in self.realizations:
            if r.boundary is None or r.zeta_normalized is None or r.boundary.all() or not r.boundary.any():
                out.append(None)
                continue
            zn = r.zeta_normalized
            out.append(bool(zn[r.boundary].mean() > zn[~r.boundary].mean()))
        return out


def _workers(config):
    if config.workers is not None:
        return max(1, int(config.workers))
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def run_topology(config):
    """All realizations of one topology, reduced in realization order."""
    topo_id = TOPOLOGIES.index(config.topology)
    children = np.random.SeedSequence([config.rng_seed, topo_id]).spawn(config.realizations)
    workers = _workers(config)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            reals = list(ex.map(run_realization, [config] * len(children), range(len(children)), children))
    else:
        reals = [run_realization(config, k, c) for k, c in enumerate(children)]
    reals.sort(key=lambda r: r.index)
    nodes = reals[0].nodes
    usable = [r for r in reals if r.zeta_normalized is not None]
    Zn = np.array([r.zeta_normalized for r in usable]) if usable else np.zeros((0, len(nodes)))
    mean = Zn.mean(axis=0) if len(Zn) else np.full(len(nodes), np.nan)
    if len(Zn) > 1:
        stderr = Zn.std(axis=0, ddof=1) / np.sqrt(len(Zn))
    else:
        stderr = np.zeros(len(nodes))
    freq = np.zeros(len(nodes))
    for row in Zn:
        freq[np.argmax(row)] += 1
    if len(Zn):
        freq /= len(Zn)
    return TopologyResult(config, nodes, mean, stderr, freq, reals, skipped=len(reals) - len(usable))


def reproduce_table1(config, topologies=TOPOLOGIES):
    """Run the synthetic sensitivity experiment for each requested topology."""
    return {t: run_topology(replace(config, topology=t)) for t in topologies}


def results_to_csv(results):
    """CSV with one row per (topology, unlabeled node); floats in ``repr`` form."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["topology", "node", "mean_zeta_normalized", "std_err", "argmax_freq"])
    for topo, res in results.items():
        for q, m, s, f in zip(res.nodes, res.mean, res.stderr, res.argmax_freq):
            w.writerow([topo, q + 1, repr(float(m)), repr(float(s)), repr(float(f))])
    return buf.getvalue()


def format_table(results, reference=REPORTED_TABLE):
    """Fixed-width text table of mean normalized scores, with reported rows."""
    lines = []
    for topo, res in results.items():
        head = "node      " + "".join(f"{q + 1:>8d}" for q in res.nodes) + "   max"
        lines.append(f"[{topo}]  realizations={res.config.realizations} seed={res.config.rng_seed}")
        lines.append(head)
        lines.append("mean      " + "".join(f"{v:8.3f}" for v in res.mean)
                     + "   " + ",".join(str(q + 1) for q in res.argmax_nodes))
        lines.append("stderr    " + "".join(f"{v:8.3f}" for v in res.stderr))
        ref = reference.get(topo)
        if ref is not None and len(ref) == len(res.nodes):
            lines.append("reported  " + "".join(f"{v:8.3f}" for v in ref))
        lines.append("")
    return "\n".join(lines)
