"""State-based linear peridynamics on a point cloud.

The linear operator is available in three forms that agree to roundoff:

* :func:`apply_L_direct` evaluates the single and double neighbor sums of
  the linearized force difference literally.
* :func:`assemble_C` builds the two-point kernel ``C = K + S`` as a sparse
  block operator applied to relative displacements.
* :func:`apply_L_operator` composes the antisymmetric-kernel nonlocal
  operators with ``alpha(x, y) = (y - x) w(|y - x|)``.

Per-node constants: ``c1 = 15 mu / m`` and ``c2 = 9 (k - 5 mu / 3) / m**2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import sparse

from . import operators as op
from .discretization import Grid
from .errors import ConfigurationError, DimensionError, SingularConfigurationError
from .kernels import AlphaKernel

WEIGHTED_VOLUME_MODES = ("analytic", "discrete")


def _node_field(grid: Grid, value, name: str) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (grid.n,)).copy()
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ConfigurationError(f"{name} must be positive at every node")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PeridynamicMaterial:
    """Material fields on a 3D grid plus the influence function parameters.

    ``radius`` is the cutoff of the influence function and defaults to the
    grid horizon.  ``weighted_volume_mode`` selects the closed-form weighted
    volume or its per-node quadrature sum; the latter makes the undeformed
    dilatation vanish exactly on the grid.
    """

    grid: Grid
    bulk: np.ndarray
    shear: np.ndarray
    density: np.ndarray
    exponent: float = 2.0
    radius: float | None = None
    weighted_volume_mode: str = "analytic"

    def __post_init__(self):
        if self.grid.dim != 3:
            raise ConfigurationError("peridynamics requires a 3D grid")
        object.__setattr__(self, "bulk", _node_field(self.grid, self.bulk, "bulk modulus"))
        object.__setattr__(self, "shear", _node_field(self.grid, self.shear, "shear modulus"))
        object.__setattr__(self, "density", _node_field(self.grid, self.density, "density"))
        if not self.exponent < 5:
            raise ConfigurationError(f"influence exponent r = {self.exponent} must be < 5 for a finite weighted volume")
        radius = self.grid.horizon if self.radius is None else float(self.radius)
        if not radius > 0:
            raise ConfigurationError("influence radius must be positive")
        object.__setattr__(self, "radius", radius)
        if self.weighted_volume_mode not in WEIGHTED_VOLUME_MODES:
            raise ConfigurationError(f"weighted_volume_mode must be one of {WEIGHTED_VOLUME_MODES}")

    @property
    def horizon(self) -> float:
        return self.grid.horizon

    @cached_property
    def bond_weights(self) -> np.ndarray:
        """w(|x_j - x_i|) on every horizon pair."""
        return influence_weight(self.grid.bond_lengths, self)

    @cached_property
    def m(self) -> np.ndarray:
        """Weighted volume at each node."""
        if self.weighted_volume_mode == "discrete":
            return discrete_weighted_volume(self.grid, self)
        return np.full(self.grid.n, weighted_volume(self))

    @cached_property
    def c1(self) -> np.ndarray:
        return 15.0 * self.shear / self.m

    @cached_property
    def c2(self) -> np.ndarray:
        return 9.0 / self.m ** 2 * (self.bulk - 5.0 / 3.0 * self.shear)

    @cached_property
    def alpha(self) -> AlphaKernel:
        """(x_j - x_i) w(|x_j - x_i|) on horizon pairs."""
        return AlphaKernel(self.grid, self.grid.bond_vectors * self.bond_weights[:, None])


def influence_weight(distance, mat: PeridynamicMaterial) -> np.ndarray:
    """w = 1/d^r for d < radius, else 0."""
    d = np.asarray(distance, dtype=float)
    inside = d < mat.radius
    safe = np.where(inside, d, 1.0)
    return np.where(inside, safe ** (-mat.exponent), 0.0)


def analytic_weighted_volume(radius: float, exponent: float) -> float:
    """4 pi radius^(5 - r) / (5 - r)."""
    if not exponent < 5:
        raise ConfigurationError(f"weighted volume diverges for r = {exponent} >= 5")
    return 4.0 * math.pi * radius ** (5.0 - exponent) / (5.0 - exponent)


def weighted_volume(mat: PeridynamicMaterial) -> float:
    return analytic_weighted_volume(mat.radius, mat.exponent)


def discrete_weighted_volume(grid: Grid, mat: PeridynamicMaterial) -> np.ndarray:
    """sum_j w_j w(|xi|) |xi|^2 over the horizon of every node."""
    d = grid.bond_lengths
    return grid.scatter(grid.pair_weights * influence_weight(d, mat) * d * d)


def lattice_weighted_volume(spacing: float, radius: float, exponent: float) -> float:
    """Quadrature weighted volume at a node of an unbounded cubic lattice."""
    n = int(math.ceil(radius / spacing))
    k = np.arange(-n, n + 1, dtype=float) * spacing
    x, y, z = np.meshgrid(k, k, k, indexing="ij")
    d = np.sqrt(x * x + y * y + z * z).ravel()
    d = d[(d > 0) & (d < radius)]
    return float(np.sum(spacing ** 3 * d ** (2.0 - exponent)))


def material_constants(mat: PeridynamicMaterial, i: int) -> tuple[float, float]:
    return float(mat.c1[i]), float(mat.c2[i])


def _check_u(grid: Grid, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.n, 3):
        raise DimensionError(f"displacement must have shape {(grid.n, 3)}, got {u.shape}")
    return u


# ----------------------------------------------------------------- nonlinear model

class ForceState(NamedTuple):
    sigma: np.ndarray
    gamma: np.ndarray
    T: np.ndarray


def _deformed(mat: PeridynamicMaterial, u: np.ndarray):
    grid = mat.grid
    zeta = grid.bond_vectors + u[grid.pair_j] - u[grid.pair_i]
    length = np.linalg.norm(zeta, axis=1)
    if np.any(length == 0):
        bad = int(np.flatnonzero(length == 0)[0])
        raise SingularConfigurationError(
            f"deformed bond ({grid.pair_i[bad]}, {grid.pair_j[bad]}) has zero length")
    return zeta, length


def dilatation_all(u, mat: PeridynamicMaterial) -> np.ndarray:
    """theta_i = (3/m)(sum_j w_j w |xi| |xi + eta| - m)."""
    grid = mat.grid
    u = _check_u(grid, u)
    _, length = _deformed(mat, u)
    s = grid.scatter(grid.pair_weights * mat.bond_weights * grid.bond_lengths * length)
    return 3.0 / mat.m * (s - mat.m)


def dilatation(u, i: int, mat: PeridynamicMaterial) -> float:
    return float(dilatation_all(u, mat)[i])


def force_states(u, mat: PeridynamicMaterial) -> ForceState:
    """sigma, gamma and T = sigma gamma on every horizon pair."""
    grid = mat.grid
    u = _check_u(grid, u)
    zeta, length = _deformed(mat, u)
    theta = dilatation_all(u, mat)[grid.pair_i]
    pi = grid.pair_i
    d = grid.bond_lengths
    wb = mat.bond_weights
    m = mat.m[pi]
    sigma = (3.0 * mat.bulk[pi] / m * wb * d * theta
             + 15.0 * mat.shear[pi] / m * wb * (length - d - d * theta / 3.0))
    gamma = zeta / length[:, None]
    return ForceState(sigma, gamma, sigma[:, None] * gamma)


def _pair_index(grid: Grid, i: int, j: int) -> int:
    sl = grid.neighbor_slice(i)
    pos = np.searchsorted(grid.pair_j[sl], j)
    if pos >= sl.stop - sl.start or grid.pair_j[sl.start + pos] != j:
        raise DimensionError(f"nodes {i} and {j} are not within the horizon")
    return sl.start + int(pos)


def force_state(u, i: int, j: int, mat: PeridynamicMaterial) -> ForceState:
    p = _pair_index(mat.grid, i, j)
    fs = force_states(u, mat)
    return ForceState(fs.sigma[p], fs.gamma[p], fs.T[p])


def nonlinear_rhs(u, b, mat: PeridynamicMaterial) -> np.ndarray:
    """sum_j w_j (T(x_i, x_j - x_i) - T(x_j, x_i - x_j)) + b_i."""
    grid = mat.grid
    T = force_states(u, mat).T
    diff = (T - T[grid.reverse]) * grid.pair_weights[:, None]
    b = np.broadcast_to(np.asarray(b, dtype=float), (grid.n, 3))
    return grid.scatter(diff) + b


# ------------------------------------------------------------------- linearization

def theta_lin_all(u, mat: PeridynamicMaterial) -> np.ndarray:
    """(3/m) sum_z w_z w (z - x) . (u_z - u_x)."""
    return 3.0 / mat.m * _bond_projection(mat, _check_u(mat.grid, u))


def _bond_projection(mat: PeridynamicMaterial, u: np.ndarray) -> np.ndarray:
    """g_i = sum_z w_z w(|xi|) xi . (u_z - u_i)."""
    grid = mat.grid
    eta = u[grid.pair_j] - u[grid.pair_i]
    return grid.scatter(grid.pair_weights * mat.bond_weights * np.sum(grid.bond_vectors * eta, axis=1))


def linearized_forces(u, mat: PeridynamicMaterial) -> np.ndarray:
    """T_lin on every horizon pair (P, 3)."""
    grid = mat.grid
    u = _check_u(grid, u)
    pi = grid.pair_i
    xi = grid.bond_vectors
    d2 = grid.bond_lengths ** 2
    wb = mat.bond_weights
    eta = u[grid.pair_j] - u[pi]
    bond = (15.0 * mat.shear[pi] / mat.m[pi] * wb / d2 * np.sum(xi * eta, axis=1))[:, None] * xi
    g = _bond_projection(mat, u)
    dil = (9.0 / mat.m[pi] ** 2 * wb * (mat.bulk[pi] - 5.0 / 3.0 * mat.shear[pi]) * g[pi])[:, None] * xi
    return bond + dil


def linearized_force(u, i: int, j: int, mat: PeridynamicMaterial) -> np.ndarray:
    return linearized_forces(u, mat)[_pair_index(mat.grid, i, j)]


# ---------------------------------------------------------------- linear operator

def apply_L_direct(u, mat: PeridynamicMaterial) -> np.ndarray:
    """Literal evaluation of the bond sum and the two double sums, node by node."""
    grid = mat.grid
    u = _check_u(grid, u)
    c1, c2 = mat.c1, mat.c2
    xi_all = grid.bond_vectors
    wb_all = mat.bond_weights
    wj_all = grid.pair_weights
    pj_all = grid.pair_j
    out = np.zeros((grid.n, 3))
    for i in range(grid.n):
        sl = grid.neighbor_slice(i)
        ys = pj_all[sl]
        xi, wb, wy = xi_all[sl], wb_all[sl], wj_all[sl]
        d2 = np.sum(xi * xi, axis=1)
        du = u[ys] - u[i]
        # (c1_x + c1_y) w xi xi^T / |xi|^2 (u_y - u_x)
        t1 = ((wy * (c1[i] + c1[ys]) * wb / d2 * np.sum(xi * du, axis=1))[:, None] * xi).sum(axis=0)
        # c2_x w(y) w(z) (y - x) (z - x).(u_z - u_x), all (y, z) in the horizon of x
        inner_z = wy * wb * np.sum(xi * du, axis=1)
        t2 = c2[i] * np.sum((wy * wb)[:, None, None] * xi[:, None, :] * inner_z[None, :, None], axis=(0, 1))
        # c2_y w(|y-x|) w(|z-y|) (y - x) (z - y).(u_z - u_y), z in the horizon of y
        t3 = np.zeros(3)
        for y, xy, wxy, w_y in zip(ys, xi, wb, wy):
            sy = grid.neighbor_slice(y)
            zs = pj_all[sy]
            proj = np.sum(wj_all[sy] * wb_all[sy] * np.sum(xi_all[sy] * (u[zs] - u[y]), axis=1))
            t3 += w_y * c2[y] * wxy * proj * xy
        out[i] = t1 + t2 + t3
    return out


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Block two-point kernel C applied as (Lu)_i = sum_j w_j C_ij (u_j - u_i).

    ``rows``/``cols`` list the off-diagonal pairs with a stored block, sorted
    by row then column.  ``diag`` holds ``D_i = -sum_j w_j C_ij``.
    """

    grid: Grid
    rows: np.ndarray
    cols: np.ndarray
    blocks: np.ndarray
    diag: np.ndarray

    @property
    def k(self) -> int:
        return self.blocks.shape[-1]

    @property
    def nnz_blocks(self) -> int:
        return len(self.rows)

    def apply(self, u) -> np.ndarray:
        u = _check_u(self.grid, u)
        diff = u[self.cols] - u[self.rows]
        terms = np.einsum("pab,pb->pa", self.blocks, diff) * self.grid.weights[self.cols][:, None]
        out = np.zeros((self.grid.n, self.k))
        for a in range(self.k):
            out[:, a] = np.bincount(self.rows, weights=terms[:, a], minlength=self.grid.n)
        return out

    def to_scipy(self) -> sparse.csr_matrix:
        """The (3N, 3N) matrix of u -> Lu."""
        n, k = self.grid.n, self.k
        wb = self.blocks * self.grid.weights[self.cols][:, None, None]
        comp = np.arange(k)
        shape = (len(self.rows), k, k)
        r = np.broadcast_to(self.rows[:, None, None] * k + comp[None, :, None], shape)
        c = np.broadcast_to(self.cols[:, None, None] * k + comp[None, None, :], shape)
        dr = np.broadcast_to(np.arange(n)[:, None, None] * k + comp[None, :, None], (n, k, k))
        dc = np.broadcast_to(np.arange(n)[:, None, None] * k + comp[None, None, :], (n, k, k))
        data = np.concatenate([wb.ravel(), self.diag.ravel()])
        ri = np.concatenate([r.ravel(), dr.ravel()])
        ci = np.concatenate([c.ravel(), dc.ravel()])
        return sparse.csr_matrix((data, (ri, ci)), shape=(n * k, n * k))

    def row_bounds(self) -> np.ndarray:
        """sum_j w_j ||C_ij||_F + ||D_i||_F per node."""
        fro = np.linalg.norm(self.blocks, axis=(1, 2)) * self.grid.weights[self.cols]
        off = np.bincount(self.rows, weights=fro, minlength=self.grid.n)
        return off + np.linalg.norm(self.diag, axis=(1, 2))

    def scaled(self, factor: float) -> "SparseOperator":
        return SparseOperator(self.grid, self.rows, self.cols, self.blocks * factor, self.diag * factor)

    def write_csv(self, path) -> None:
        """One line per stored block: i, j and the nine entries in row-major order."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["i", "j"] + [f"c{a + 1}{b + 1}" for a in range(3) for b in range(3)])
            for i, j, blk in zip(self.rows, self.cols, self.blocks):
                writer.writerow([int(i), int(j)] + [f"{v:.17g}" for v in blk.ravel()])


def _component_matrices(grid: Grid, pair_values: np.ndarray) -> list[sparse.csr_matrix]:
    n = grid.n
    return [sparse.csr_matrix((pair_values[:, a], (grid.pair_i, grid.pair_j)), shape=(n, n))
            for a in range(pair_values.shape[1])]


def assemble_C(mat: PeridynamicMaterial) -> SparseOperator:
    """C = K + S.

    K_ij = (c1_i + c1_j) w xi xi^T / |xi|^2 on horizon pairs, and with
    alpha = xi w and a_i = sum_l w_l alpha_il::

        S_ij = sum_l w_l c2_l alpha_il (x) alpha_lj - c2_j alpha_ij (x) a_j + c2_i a_i (x) alpha_ij

    The first term couples nodes up to two horizons apart.
    """
    grid = mat.grid
    n = grid.n
    pi, pj = grid.pair_i, grid.pair_j
    xi = grid.bond_vectors
    wb = mat.bond_weights
    c1, c2 = mat.c1, mat.c2
    alpha = xi * wb[:, None]
    a_node = grid.scatter(alpha * grid.pair_weights[:, None])

    kfac = (c1[pi] + c1[pj]) * wb / grid.bond_lengths ** 2
    near = (kfac[:, None, None] * xi[:, :, None] * xi[:, None, :]
            - c2[pj][:, None, None] * alpha[:, :, None] * a_node[pj][:, None, :]
            + c2[pi][:, None, None] * a_node[pi][:, :, None] * alpha[:, None, :])

    A = _component_matrices(grid, alpha)
    mid = sparse.diags(grid.weights * c2)
    ones = sparse.csr_matrix((np.ones(grid.n_pairs), (pi, pj)), shape=(n, n))
    pattern = (ones @ ones + ones).tocoo()
    keep = pattern.row != pattern.col
    order = np.lexsort((pattern.col[keep], pattern.row[keep]))
    rows = pattern.row[keep][order].astype(np.intp)
    cols = pattern.col[keep][order].astype(np.intp)

    blocks = np.zeros((len(rows), 3, 3))
    for a in range(3):
        left = (A[a] @ mid).tocsr()
        for b in range(3):
            two_hop = (left @ A[b]).tocsr()
            blocks[:, a, b] = np.asarray(two_hop[rows, cols]).ravel()
    # Horizon pairs are a subset of the pattern.
    key = rows * n + cols
    where = np.searchsorted(key, pi * n + pj)
    blocks[where] += near

    diag = -np.einsum("p,pab->pab", grid.weights[cols], blocks)
    diag_sum = np.zeros((n, 3, 3))
    np.add.at(diag_sum, rows, diag)
    return SparseOperator(grid, rows, cols, blocks, diag_sum)


def apply_L_kernel(C: SparseOperator, u) -> np.ndarray:
    return C.apply(u)


def apply_L_operator(u, mat: PeridynamicMaterial, form: str = "gradient") -> np.ndarray:
    """Composition of nonlocal operators, returning -Lu.

    ``form="gradient"``: G(c1 G* u) + G(c2 Gbar* u).
    ``form="tensor"``:   D(c1 (D* u)^T) + G(c2 Gbar* u), with D the tensor divergence.
    A one-point coefficient c multiplies the first argument of the two-point field.
    """
    if mat.exponent != 2:
        raise ConfigurationError("the operator form requires the influence exponent r = 2")
    grid = mat.grid
    u = _check_u(grid, u)
    alpha = mat.alpha
    c1, c2 = mat.c1, mat.c2
    if form == "gradient":
        first = op.apply(op.GRADIENT, alpha, c1[:, None] * op.apply_adjoint(op.GRADIENT, alpha, u))
    elif form == "tensor":
        ds = op.apply_adjoint(op.TENSOR_DIVERGENCE, alpha, u)
        first = op.apply(op.TENSOR_DIVERGENCE, alpha, c1[:, None, None, None] * np.swapaxes(ds, -1, -2))
    else:
        raise ConfigurationError(f"unknown operator form {form!r}; use 'gradient' or 'tensor'")
    avg = c2 * op.averaging_adjoint(alpha, u)
    second = op.apply(op.GRADIENT, alpha, np.broadcast_to(avg[:, None], (grid.n, grid.n)))
    return first + second


def relative_discrepancy(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b))) / scale
