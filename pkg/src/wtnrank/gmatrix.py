"""Google-matrix construction over (country, product) nodes.

Trade links connect nodes of the same product only: the node space is laid
out product-major (node = p * n_countries + c) and the stochastic matrix is
block diagonal over products. Cross-product coupling enters only through the
personalization vector and the dangling-node repair. The damped operator

    G = alpha * S' + (1 - alpha) * v 1^T

is never densified; consumers go through :meth:`GoogleMatrix.apply`, which
evaluates the three terms (sparse links, uniform dangling columns, teleport)
against the CSC arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from . import _kernels
from ._text import fmt, write_lines
from .errors import EmptyNetworkError
from .ingest import CountryRegistry, MoneyMatrix

DIRECTIONS = ("direct", "inverted")

PERSONALIZATION_MODES = ("uniform-by-product", "volume-by-country")

#: Unit tolerance on column sums of S and of the implied G.
COLUMN_SUM_TOL = 1e-12


@dataclass(frozen=True)
class NodeSpace:
    """Bijection node id <-> (country c, product p) with id = p * n_countries + c."""

    n_countries: int
    n_products: int

    def __post_init__(self):
        if self.n_countries < 1 or self.n_products < 1:
            raise ValueError("node space needs at least one country and one product")

    @property
    def size(self) -> int:
        return self.n_countries * self.n_products

    def node_id(self, country: int, product: int) -> int:
        if not 0 <= country < self.n_countries:
            raise ValueError(f"country index {country} out of range")
        if not 0 <= product < self.n_products:
            raise ValueError(f"product index {product} out of range")
        return product * self.n_countries + country

    def country_of(self, node: int) -> int:
        return node % self.n_countries

    def product_of(self, node: int) -> int:
        return node // self.n_countries


@dataclass
class StochasticMatrix:
    """Column-stochastic link matrix S with the dangling columns kept implicit.

    ``matrix`` stores the normalized trade links (dangling columns are empty);
    ``dangling`` marks columns with zero outflow, each standing for a uniform
    1/N column. The ``kernel_*`` views are int64/float64 buffers handed to the
    compiled apply kernel.
    """

    matrix: sparse.csc_matrix
    dangling: np.ndarray
    space: NodeSpace
    registry: CountryRegistry
    direction: str
    kernel_indptr: np.ndarray = field(init=False, repr=False)
    kernel_indices: np.ndarray = field(init=False, repr=False)
    kernel_data: np.ndarray = field(init=False, repr=False)
    kernel_dangling_ids: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        n = self.space.size
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match node space {n}")
        self.kernel_indptr = np.ascontiguousarray(self.matrix.indptr, dtype=np.int64)
        self.kernel_indices = np.ascontiguousarray(self.matrix.indices, dtype=np.int64)
        self.kernel_data = np.ascontiguousarray(self.matrix.data, dtype=np.float64)
        self.kernel_dangling_ids = np.flatnonzero(self.dangling).astype(np.int64)

    @property
    def size(self) -> int:
        return self.space.size

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()

    def validate(self, tol: float = COLUMN_SUM_TOL) -> None:
        sums = self.column_sums()
        if np.any(sums[self.dangling] != 0.0):
            raise ValueError("dangling columns must hold no explicit entries")
        live = ~self.dangling
        if live.any() and np.max(np.abs(sums[live] - 1.0)) >= tol:
            raise ValueError("non-dangling column sums deviate from 1")
        if self.matrix.nnz and self.kernel_data.min() < 0:
            raise ValueError("negative transition weight")


@dataclass(frozen=True)
class PersonalizationVector:
    """Teleportation distribution over nodes; sums to 1."""

    values: np.ndarray
    mode: str

    def __post_init__(self):
        if self.mode not in PERSONALIZATION_MODES:
            raise ValueError(f"mode must be one of {PERSONALIZATION_MODES}")

    def validate(self, tol: float = COLUMN_SUM_TOL) -> None:
        if np.any(self.values < 0):
            raise ValueError("personalization entries must be non-negative")
        if abs(self.values.sum() - 1.0) >= tol:
            raise ValueError("personalization must sum to 1")


@dataclass
class GoogleMatrix:
    """Damped operator alpha*S' + (1-alpha)*v 1^T, applied without densifying."""

    S: StochasticMatrix
    v: PersonalizationVector
    alpha: float

    @property
    def direction(self) -> str:
        return self.S.direction

    @property
    def size(self) -> int:
        return self.S.size

    @property
    def space(self) -> NodeSpace:
        return self.S.space

    @property
    def registry(self) -> CountryRegistry:
        return self.S.registry

    def apply(self, x: np.ndarray, backend: str | None = None) -> np.ndarray:
        """Return G @ x; preserves the total mass of x up to rounding."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape != (self.size,):
            raise ValueError(f"vector length {x.shape} does not match N={self.size}")
        return _kernels.apply_google(self.S, self.v.values, self.alpha, x, backend=backend)


def build_stochastic(money: MoneyMatrix, direction: str = "direct") -> StochasticMatrix:
    """Normalize the money tensor into the column-stochastic link matrix.

    direction="direct" sends mass from exporter to importer columns
    (block p holds M^p column-normalized); "inverted" uses the transposed
    flows. Columns with zero outflow are flagged dangling.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    dense = money.to_dense()
    if not dense.any():
        raise EmptyNetworkError("money matrix has no flows; no network to build")
    space = NodeSpace(money.n_countries, money.n_products)
    blocks = []
    for p in range(money.n_products):
        block = dense[p] if direction == "direct" else dense[p].T
        blocks.append(sparse.csc_matrix(block))
    matrix = sparse.block_diag(blocks, format="csc")
    sums = np.asarray(matrix.sum(axis=0)).ravel()
    dangling = sums == 0.0
    scale = np.where(dangling, 1.0, sums)
    counts = np.diff(matrix.indptr)
    matrix.data = matrix.data / np.repeat(scale, counts)
    return StochasticMatrix(matrix, dangling, space, money.registry, direction)


def build_personalization(money: MoneyMatrix, mode: str = "uniform-by-product") -> PersonalizationVector:
    """Teleport vector weighting each product by its share of global volume.

    uniform-by-product spreads a product's weight evenly over countries:
    v_(c,p) = V_p / (n_countries * V). volume-by-country spreads it in
    proportion to each country's traded volume (imports + exports) of that
    product. Zero-volume products contribute zero weight either way.
    """
    if mode not in PERSONALIZATION_MODES:
        raise ValueError(f"mode must be one of {PERSONALIZATION_MODES}")
    dense = money.to_dense()
    product_volume = dense.sum(axis=(1, 2))
    total = product_volume.sum()
    if total == 0.0:
        raise EmptyNetworkError("money matrix has zero total volume")
    if mode == "uniform-by-product":
        weights = product_volume / (money.n_countries * total)
        values = np.repeat(weights, money.n_countries)
    else:
        values = np.zeros(money.n_countries * money.n_products)
        for p in range(money.n_products):
            if product_volume[p] == 0.0:
                continue
            country_volume = dense[p].sum(axis=1) + dense[p].sum(axis=0)
            # within-product shares sum to 1; the block carries V_p / V
            block = (product_volume[p] / total) * (country_volume / country_volume.sum())
            values[p * money.n_countries:(p + 1) * money.n_countries] = block
    return PersonalizationVector(values, mode)


def make_google(S: StochasticMatrix, v: PersonalizationVector, alpha: float = 0.5) -> GoogleMatrix:
    """Assemble the damped operator; alpha must lie strictly inside (0, 1)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"damping alpha must lie in (0, 1), got {alpha}")
    if v.values.shape != (S.size,):
        raise ValueError("personalization length does not match node space")
    return GoogleMatrix(S, v, alpha)


def build_google(
    money: MoneyMatrix,
    direction: str = "direct",
    alpha: float = 0.5,
    personalization: str = "uniform-by-product",
) -> GoogleMatrix:
    """Money tensor -> GoogleMatrix in one step (shared v formula per direction)."""
    S = build_stochastic(money, direction)
    v = build_personalization(money, personalization)
    return make_google(S, v, alpha)


def write_matrix_dump(G: GoogleMatrix, path, sidecar=None) -> tuple[Path, Path]:
    """Dump the link matrix as ``row,col,value`` triplets for cross-checking.

    The triplets cover the sparse part of S only; the sidecar file carries
    everything else another implementation needs to rebuild G bit-for-bit:
    an ``alpha=`` line, the dangling column ids and the dense v vector.
    """
    path = Path(path)
    if sidecar is None:
        sidecar = path.with_suffix(".meta")
    coo = G.S.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = ["row,col,value"]
    for i in order:
        lines.append(f"{coo.row[i]},{coo.col[i]},{fmt(coo.data[i])}")
    write_lines(path, lines)
    meta = [
        f"alpha={fmt(G.alpha)}",
        "dangling=" + ",".join(str(int(i)) for i in np.flatnonzero(G.S.dangling)),
        "v=" + ",".join(fmt(value) for value in G.v.values),
    ]
    write_lines(sidecar, meta)
    return path, Path(sidecar)
