"""Point-cloud discretization: uniform grids, horizon pairs, and discrete pairings.

Every integral in the nonlocal calculus becomes a midpoint sum over the nodes
of a :class:`Grid`, weighted by the cell volume.  One-point fields are arrays
whose leading axis runs over nodes; two-point fields have two leading node
axes (dense storage) or one leading axis over horizon pairs (sparse storage).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError

# Relative slack on the horizon test so that lattice distances equal to the
# horizon in exact arithmetic are not lost to roundoff.
HORIZON_SLACK = 1e-12
_CHUNK = 512


@dataclass(frozen=True, eq=False)
class Grid:
    """Nodes, quadrature weights, and horizon-limited neighbor structure.

    Neighbor data is computed lazily by an exhaustive distance check and
    cached; the grid is otherwise immutable.
    """

    nodes: np.ndarray
    weights: np.ndarray
    horizon: float
    spacing: float | None = None

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        weights = np.ascontiguousarray(self.weights, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] not in (1, 2, 3):
            raise ConfigurationError("nodes must have shape (N, dim) with dim in {1, 2, 3}")
        if weights.shape != (nodes.shape[0],):
            raise ConfigurationError("one weight per node is required")
        if np.any(weights <= 0):
            raise ConfigurationError("quadrature weights must be strictly positive")
        if not self.horizon > 0:
            raise ConfigurationError("horizon must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    def __len__(self) -> int:
        return self.n

    @cached_property
    def _pair_arrays(self):
        cutoff = self.horizon * (1.0 + HORIZON_SLACK)
        rows, cols = [], []
        for start in range(0, self.n, _CHUNK):
            block = self.nodes[start:start + _CHUNK]
            d = np.linalg.norm(block[:, None, :] - self.nodes[None, :, :], axis=-1)
            i, j = np.nonzero(d <= cutoff)
            i = i + start
            keep = i != j
            rows.append(i[keep])
            cols.append(j[keep])
        pi = np.concatenate(rows) if rows else np.zeros(0, dtype=np.intp)
        pj = np.concatenate(cols) if cols else np.zeros(0, dtype=np.intp)
        # np.nonzero already yields row-major order: ascending i, then j.
        order = np.lexsort((pj, pi))
        pi, pj = pi[order].astype(np.intp), pj[order].astype(np.intp)
        offsets = np.zeros(self.n + 1, dtype=np.intp)
        np.cumsum(np.bincount(pi, minlength=self.n), out=offsets[1:])
        key = pi * self.n + pj
        rev = np.searchsorted(key, pj * self.n + pi)
        for arr in (pi, pj, offsets, rev):
            arr.setflags(write=False)
        return pi, pj, offsets, rev

    @property
    def pair_i(self) -> np.ndarray:
        """Source node of every horizon pair, ascending."""
        return self._pair_arrays[0]

    @property
    def pair_j(self) -> np.ndarray:
        """Target node of every horizon pair, ascending within each source."""
        return self._pair_arrays[1]

    @property
    def reverse(self) -> np.ndarray:
        """Index of the pair (j, i) for each pair (i, j)."""
        return self._pair_arrays[3]

    @property
    def n_pairs(self) -> int:
        return len(self.pair_i)

    def neighbors(self, i: int) -> np.ndarray:
        offsets = self._pair_arrays[2]
        return self.pair_j[offsets[i]:offsets[i + 1]]

    def neighbor_slice(self, i: int) -> slice:
        offsets = self._pair_arrays[2]
        return slice(int(offsets[i]), int(offsets[i + 1]))

    @cached_property
    def closed_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Horizon pairs including the diagonal, sorted by (i, j)."""
        diag = np.arange(self.n, dtype=np.intp)
        pi = np.concatenate([self.pair_i, diag])
        pj = np.concatenate([self.pair_j, diag])
        order = np.lexsort((pj, pi))
        return pi[order], pj[order]

    @cached_property
    def bond_vectors(self) -> np.ndarray:
        """x_j - x_i for every horizon pair."""
        return self.nodes[self.pair_j] - self.nodes[self.pair_i]

    @cached_property
    def bond_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.bond_vectors, axis=1)

    @property
    def pair_weights(self) -> np.ndarray:
        """Quadrature weight of the target node of each pair."""
        return self.weights[self.pair_j]

    def scatter(self, pair_values: np.ndarray) -> np.ndarray:
        """Sum per-pair values into their source node, in ascending target order."""
        pair_values = np.asarray(pair_values)
        out = np.zeros((self.n,) + pair_values.shape[1:])
        if pair_values.ndim == 1:
            return np.bincount(self.pair_i, weights=pair_values, minlength=self.n)
        flat = pair_values.reshape(len(pair_values), -1)
        res = out.reshape(self.n, -1)
        for c in range(flat.shape[1]):
            res[:, c] = np.bincount(self.pair_i, weights=flat[:, c], minlength=self.n)
        return out

    def to_dense(self, pair_values: np.ndarray) -> np.ndarray:
        """Dense (N, N, ...) array that is zero off the horizon pairs."""
        pair_values = np.asarray(pair_values)
        out = np.zeros((self.n, self.n) + pair_values.shape[1:], dtype=pair_values.dtype)
        out[self.pair_i, self.pair_j] = pair_values
        return out


def build_uniform_grid(bounds: Sequence[Sequence[float]], spacing: float, horizon: float,
                       padding: float = 0.0) -> Grid:
    """Cell-centered lattice on a box with weights ``spacing**dim``.

    ``bounds`` is one ``[lo, hi]`` per axis; each extent must be an integer
    multiple of ``spacing``.  ``padding`` grows every side of the box by the
    smallest whole number of cells covering it.
    """
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim == 1:
        bounds = bounds[None, :]
    if bounds.ndim != 2 or bounds.shape[1] != 2 or not 1 <= bounds.shape[0] <= 3:
        raise ConfigurationError("bounds must be a list of [lo, hi] pairs, one per axis (1 to 3 axes)")
    if not spacing > 0:
        raise ConfigurationError(f"spacing must be positive, got {spacing}")
    if not horizon >= spacing * (1 - 1e-12):
        raise ConfigurationError(
            f"horizon {horizon} is smaller than the spacing {spacing}; neighbor lists would be empty")
    if padding < 0:
        raise ConfigurationError("padding must be non-negative")
    pad_cells = math.ceil(padding / spacing - 1e-9) if padding > 0 else 0
    axes = []
    for lo, hi in bounds:
        if not hi > lo:
            raise ConfigurationError(f"empty axis extent [{lo}, {hi}]")
        cells = (hi - lo) / spacing
        count = int(round(cells))
        if count < 1 or abs(cells - count) > 1e-9 * max(1.0, cells):
            raise ConfigurationError(f"extent {hi - lo} is not a multiple of spacing {spacing}")
        idx = np.arange(-pad_cells, count + pad_cells)
        axes.append(lo + (idx + 0.5) * spacing)
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    weights = np.full(len(nodes), spacing ** len(axes))
    return Grid(nodes, weights, float(horizon), float(spacing))


def _rank_of(trailing: tuple[int, ...]) -> str:
    if trailing == ():
        return "scalar"
    if len(trailing) == 1:
        return f"vector({trailing[0]})"
    if len(trailing) == 2 and trailing[0] == trailing[1]:
        return f"tensor({trailing[0]}x{trailing[1]})"
    raise DimensionError(f"unsupported value shape {trailing}")


@dataclass(frozen=True, eq=False)
class OnePointField:
    """Scalar, vector, or tensor values at the nodes of a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape[:1] != (self.grid.n,):
            raise DimensionError(f"expected {self.grid.n} node values, got shape {values.shape}")
        _rank_of(values.shape[1:])
        object.__setattr__(self, "values", values)

    @property
    def rank(self) -> str:
        return _rank_of(self.values.shape[1:])


@dataclass(frozen=True, eq=False)
class TwoPointField:
    """Values on ordered node pairs.

    Dense storage holds an (N, N, ...) array.  Sparse storage holds one value
    per pair in ``grid.closed_pairs`` (all pairs within the horizon, diagonal
    included) and treats every other pair as zero.
    """

    grid: Grid
    values: np.ndarray
    sparse: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        n = self.grid.n
        lead = (len(self.grid.closed_pairs[0]),) if self.sparse else (n, n)
        if values.shape[:len(lead)] != lead:
            raise DimensionError(f"expected leading shape {lead}, got {values.shape}")
        _rank_of(values.shape[len(lead):])
        object.__setattr__(self, "values", values)

    @property
    def trailing_shape(self) -> tuple[int, ...]:
        return self.values.shape[1:] if self.sparse else self.values.shape[2:]

    @property
    def rank(self) -> str:
        return _rank_of(self.trailing_shape)

    @classmethod
    def from_dense(cls, grid: Grid, values: np.ndarray, sparse: bool = False) -> "TwoPointField":
        """Wrap a dense array, optionally restricting it to the horizon pairs."""
        values = np.asarray(values, dtype=float)
        if sparse:
            pi, pj = grid.closed_pairs
            return cls(grid, values[pi, pj], sparse=True)
        return cls(grid, values)

    def dense(self) -> np.ndarray:
        if not self.sparse:
            return self.values
        pi, pj = self.grid.closed_pairs
        out = np.zeros((self.grid.n, self.grid.n) + self.trailing_shape)
        out[pi, pj] = self.values
        return out


@dataclass(frozen=True, eq=False)
class Subdomain:
    """Membership flags splitting the nodes into a region and its complement."""

    grid: Grid
    members: np.ndarray

    def __post_init__(self):
        members = np.asarray(self.members, dtype=bool)
        if members.shape != (self.grid.n,):
            raise DimensionError("one membership flag per node is required")
        object.__setattr__(self, "members", members)

    def complement(self) -> "Subdomain":
        return Subdomain(self.grid, ~self.members)

    @classmethod
    def random(cls, grid: Grid, rng: np.random.Generator) -> "Subdomain":
        return cls(grid, rng.random(grid.n) < 0.5)


def _contract(a: np.ndarray, b: np.ndarray, lead: int) -> np.ndarray:
    """Pointwise dot/Frobenius product over the trailing axes."""
    if a.ndim == lead:
        return a * b
    axes = tuple(range(lead, a.ndim))
    return np.sum(a * b, axis=axes)


def dot1(grid: Grid, u: np.ndarray, v: np.ndarray) -> float:
    """Weighted pairing sum_i w_i u_i . v_i of two one-point arrays."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.shape[:1] != (grid.n,):
        raise DimensionError(f"one-point shapes {u.shape} and {v.shape} do not match the grid")
    return float(np.dot(grid.weights, _contract(u, v, 1)))


def dot2(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    """Weighted pairing sum_ij w_i w_j a_ij . b_ij of two dense two-point arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.shape[:2] != (grid.n, grid.n):
        raise DimensionError(f"two-point shapes {a.shape} and {b.shape} do not match the grid")
    w = grid.weights
    return float(w @ _contract(a, b, 2) @ w)


def inner_product_one_point(u: OnePointField, v: OnePointField) -> float:
    if u.grid is not v.grid:
        raise DimensionError("fields live on different grids")
    if u.rank != v.rank:
        raise DimensionError(f"rank mismatch: {u.rank} vs {v.rank}")
    return dot1(u.grid, u.values, v.values)


def inner_product_two_point(nu: TwoPointField, gamma: TwoPointField) -> float:
    if nu.grid is not gamma.grid:
        raise DimensionError("fields live on different grids")
    if nu.rank != gamma.rank:
        raise DimensionError(f"rank mismatch: {nu.rank} vs {gamma.rank}")
    grid = nu.grid
    if not nu.sparse and not gamma.sparse:
        return dot2(grid, nu.values, gamma.values)
    pi, pj = grid.closed_pairs
    a = nu.values if nu.sparse else nu.values[pi, pj]
    b = gamma.values if gamma.sparse else gamma.values[pi, pj]
    ww = grid.weights[pi] * grid.weights[pj]
    return float(np.dot(ww, _contract(a, b, 1)))
