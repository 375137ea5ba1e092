"""Reduced Google matrix over a node subset and its strongest-links network.

With the full operator partitioned over subset rows/columns (r) and the
complement (s), the reduction

    G_R = G_rr + G_rs (1 - G_ss)^{-1} G_sr

keeps every direct and indirect pathway between the chosen nodes and stays
column-stochastic. Its stationary vector equals the normalized restriction
of the full PageRank, which the test suite uses as the exactness oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._text import fmt, write_lines
from .gmatrix import GoogleMatrix

#: Complement sizes up to this use one dense LU solve; larger ones fall back
#: to a truncated Neumann series against the implicit operator.
DENSE_SOLVE_THRESHOLD = 4096

NEUMANN_TOL = 1e-12
_NEUMANN_MAX_TERMS = 100_000

#: Column-sum tolerance of the reduced matrix.
REDUCED_SUM_TOL = 1e-10

FRIEND_MODES = ("column", "row")


@dataclass(frozen=True)
class NodeSubset:
    """Ordered node ids to keep; the complement must stay non-empty."""

    node_ids: tuple[int, ...]
    size_total: int

    def __post_init__(self):
        if len(set(self.node_ids)) != len(self.node_ids):
            raise ValueError("subset contains duplicate node ids")
        if not 1 <= len(self.node_ids) < self.size_total:
            raise ValueError("subset must keep at least one node and leave a non-empty complement")
        for node in self.node_ids:
            if not 0 <= node < self.size_total:
                raise ValueError(f"node id {node} outside [0, {self.size_total})")

    @property
    def n_kept(self) -> int:
        return len(self.node_ids)

    def complement(self) -> np.ndarray:
        mask = np.ones(self.size_total, dtype=bool)
        mask[list(self.node_ids)] = False
        return np.flatnonzero(mask)


def subset_from_countries(
    G: GoogleMatrix,
    countries: Sequence[str],
) -> tuple[NodeSubset, tuple[str, ...]]:
    """All products of the named countries, country-major, with node labels."""
    registry = G.registry
    space = G.space
    ids = []
    labels = []
    for code in countries:
        c = registry.index_of(code)
        for p in range(space.n_products):
            ids.append(space.node_id(c, p))
            labels.append(f"{code}_{p}")
    return NodeSubset(tuple(ids), space.size), tuple(labels)


@dataclass(frozen=True)
class ReducedGoogleMatrix:
    """Dense column-stochastic matrix over the kept nodes."""

    matrix: np.ndarray
    subset: NodeSubset
    direction: str

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def validate(self, tol: float = REDUCED_SUM_TOL) -> None:
        if np.any(self.matrix < 0):
            raise ValueError("reduced matrix entries must be non-negative")
        if np.max(np.abs(self.matrix.sum(axis=0) - 1.0)) >= tol:
            raise ValueError("reduced matrix columns must sum to 1")


@dataclass(frozen=True)
class FriendsNetwork:
    """Top-k strongest outgoing transitions per node of a reduced matrix."""

    edges: tuple[tuple[int, int, float], ...]   # (source, target, weight)
    k: int
    mode: str


def _dense_block(G: GoogleMatrix, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Densify G[rows, cols]: sparse links + dangling repair + teleport."""
    S = G.S.matrix[rows][:, cols].toarray()
    dangling_cols = G.S.dangling[cols]
    if dangling_cols.any():
        S[:, dangling_cols] = 1.0 / G.size
    return G.alpha * S + (1.0 - G.alpha) * np.outer(G.v.values[rows], np.ones(len(cols)))


def _neumann_solve(G: GoogleMatrix, s_ids: np.ndarray, rhs: np.ndarray, tol: float) -> np.ndarray:
    """Sum_m G_ss^m rhs without densifying G_ss (teleport handled as rank-one)."""
    S_ss = G.S.matrix[s_ids][:, s_ids].tocsc()
    dangling_s = np.flatnonzero(G.S.dangling[s_ids])
    v_s = G.v.values[s_ids]
    alpha, n = G.alpha, G.size

    def apply_ss(X):
        out = alpha * (S_ss @ X)
        if dangling_s.size:
            out += (alpha / n) * X[dangling_s].sum(axis=0)
        out += (1.0 - alpha) * np.outer(v_s, X.sum(axis=0))
        return out

    total = rhs.copy()
    term = rhs
    for _ in range(_NEUMANN_MAX_TERMS):
        term = apply_ss(term)
        total += term
        if np.abs(term).sum(axis=0).max() <= tol:
            return total
    raise np.linalg.LinAlgError("Neumann series for (1 - G_ss)^{-1} did not converge")


def reduced_google_matrix(
    G: GoogleMatrix,
    subset: NodeSubset,
    dense_threshold: int = DENSE_SOLVE_THRESHOLD,
    neumann_tol: float = NEUMANN_TOL,
) -> ReducedGoogleMatrix:
    """Compute G_R = G_rr + G_rs (1 - G_ss)^{-1} G_sr for the subset.

    The inverse is never formed: for complements up to ``dense_threshold``
    the n_kept right-hand sides are solved against a dense factorization of
    (1 - G_ss); beyond that a truncated Neumann series against the implicit
    operator is used. Column stochasticity of the result is asserted.
    """
    if subset.size_total != G.size:
        raise ValueError("subset was built for a different node space")
    r_ids = np.asarray(subset.node_ids, dtype=np.int64)
    s_ids = subset.complement()
    G_rr = _dense_block(G, r_ids, r_ids)
    G_sr = _dense_block(G, s_ids, r_ids)
    G_rs = _dense_block(G, r_ids, s_ids)
    if len(s_ids) <= dense_threshold:
        G_ss = _dense_block(G, s_ids, s_ids)
        try:
            X = np.linalg.solve(np.eye(len(s_ids)) - G_ss, G_sr)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"(1 - G_ss) is singular: {exc}") from exc
    else:
        X = _neumann_solve(G, s_ids, G_sr, neumann_tol)
    reduced = ReducedGoogleMatrix(G_rr + G_rs @ X, subset, G.direction)
    reduced.validate()
    return reduced


def friends_network(GR: ReducedGoogleMatrix, k: int = 4, mode: str = "column") -> FriendsNetwork:
    """Per node, the k largest off-diagonal transitions out of it.

    Column mode (default) reads column j as the outgoing transitions of node
    j and emits edges j -> i; row mode treats rows as outgoing instead. Ties
    break by ascending node index.
    """
    n = GR.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")
    if mode not in FRIEND_MODES:
        raise ValueError(f"mode must be one of {FRIEND_MODES}")
    edges = []
    for source in range(n):
        column = GR.matrix[:, source] if mode == "column" else GR.matrix[source, :]
        targets = [i for i in range(n) if i != source]
        targets.sort(key=lambda i: (-column[i], i))
        for target in targets[:k]:
            edges.append((source, target, float(column[target])))
    return FriendsNetwork(tuple(edges), k, mode)


def write_reduced_matrix(GR: ReducedGoogleMatrix, labels: Sequence[str], path) -> Path:
    """Write G_R as dense delimited text; the header row holds node labels.

    Row i and column i both correspond to labels[i]; columns sum to 1.
    """
    if len(labels) != GR.n:
        raise ValueError("one label per kept node required")
    lines = [",".join(labels)]
    for row in GR.matrix:
        lines.append(",".join(fmt(value) for value in row))
    return write_lines(path, lines)


def write_edge_list(net: FriendsNetwork, labels: Sequence[str], path) -> Path:
    """Write the friends network as a ``source,target,weight`` edge list."""
    needed = 1 + max((max(s, t) for s, t, _ in net.edges), default=0)
    if len(labels) < needed:
        raise ValueError("edge list references a node without a label")
    lines = ["source,target,weight"]
    for source, target, weight in net.edges:
        lines.append(f"{labels[source]},{labels[target]},{fmt(weight)}")
    return write_lines(path, lines)
