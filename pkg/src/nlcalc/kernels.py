"""Three-point divergence kernels and the specialized two-point families.

A general kernel is any vector function kappa(x_i, x_j, x_l).  The
specialized families are generated from a two-point vector function through
a discrete delta ``delta_il / w_i``:

* alpha (antisymmetric):  Delta(i,l) a_ij + Delta(i,j) a_il
* beta (symmetric):      -Delta(i,l) b_ij + Delta(i,j) b_il
* lambda-alpha:           lam_il a_ij + lam_ij a_il
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .discretization import Grid
from .errors import ConfigurationError, DimensionError

DEFAULT_TOL = 1e-12

SlabRule = Callable[[int], np.ndarray]


class CheckResult(NamedTuple):
    max_residual: float
    passed: bool


def _check(residual: float, tol: float) -> CheckResult:
    return CheckResult(float(residual), bool(residual <= tol))


@dataclass(frozen=True, eq=False)
class GeneralKernel:
    """kappa(x_i, x_j, x_l) in R^k on a grid.

    Either ``values`` holds the dense (N, N, N, k) array or ``rule(i)`` returns
    the slab kappa(x_i, ., .) of shape (N, N, k) on demand.
    """

    grid: Grid
    k: int
    values: np.ndarray | None = None
    rule: SlabRule | None = None

    def __post_init__(self):
        if self.k not in (1, 2, 3):
            raise ConfigurationError(f"codomain dimension must be 1, 2 or 3, got {self.k}")
        if (self.values is None) == (self.rule is None):
            raise ConfigurationError("give exactly one of values or rule")
        if self.values is not None:
            values = np.asarray(self.values, dtype=float)
            n = self.grid.n
            if values.shape != (n, n, n, self.k):
                raise DimensionError(f"expected shape {(n, n, n, self.k)}, got {values.shape}")
            object.__setattr__(self, "values", values)

    def slab(self, i: int) -> np.ndarray:
        if self.values is not None:
            return self.values[i]
        return self.rule(i)

    def slabs(self):
        """Yield (i, kappa(x_i, ., .)) in ascending i."""
        for i in range(self.grid.n):
            yield i, self.slab(i)

    def dense(self) -> np.ndarray:
        if self.values is not None:
            return self.values
        return np.stack([self.slab(i) for i in range(self.grid.n)])

    def materialized(self) -> "GeneralKernel":
        return self if self.values is not None else GeneralKernel(self.grid, self.k, values=self.dense())

    def weighted_norm(self) -> float:
        """sqrt(sum_ijl w_i w_j w_l |kappa_ijl|^2)."""
        w = self.grid.weights
        total = 0.0
        for i, s in self.slabs():
            total += w[i] * float(w @ np.sum(s * s, axis=-1) @ w)
        return float(np.sqrt(total))

    @classmethod
    def zeros(cls, grid: Grid, k: int) -> "GeneralKernel":
        return cls(grid, k, values=np.zeros((grid.n,) * 3 + (k,)))

    @classmethod
    def random(cls, grid: Grid, k: int, rng: np.random.Generator) -> "GeneralKernel":
        """Uniform[-1, 1] entries; not a divergence kernel."""
        return cls(grid, k, values=rng.uniform(-1.0, 1.0, (grid.n,) * 3 + (k,)))

    @classmethod
    def random_divergence(cls, grid: Grid, k: int, rng: np.random.Generator) -> "GeneralKernel":
        """Random kernel projected so that sum_i w_i kappa_ijl = 0 for every (j, l)."""
        vals = rng.uniform(-1.0, 1.0, (grid.n,) * 3 + (k,))
        w = grid.weights
        mean = np.einsum("i,ijlc->jlc", w, vals) / w.sum()
        return cls(grid, k, values=vals - mean[None])


def _pair_values(grid: Grid, values: np.ndarray, k: int | None) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] != grid.n_pairs:
        raise DimensionError(f"expected {grid.n_pairs} pair values, got {values.shape[0]}")
    if k is not None and values.shape[1] != k:
        raise DimensionError(f"expected {k} components, got {values.shape[1]}")
    if values.shape[1] not in (1, 2, 3):
        raise ConfigurationError("codomain dimension must be 1, 2 or 3")
    return values


@dataclass(frozen=True, eq=False)
class TwoPointKernel:
    """Vector values on the horizon pairs of a grid, zero elsewhere and on the diagonal."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _pair_values(self.grid, self.values, None))

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def dense(self) -> np.ndarray:
        return self.grid.to_dense(self.values)

    def parity_residual(self, sign: float) -> float:
        """max |v_ij - sign * v_ji| over pairs."""
        if self.grid.n_pairs == 0:
            return 0.0
        diff = self.values - sign * self.values[self.grid.reverse]
        return float(np.max(np.linalg.norm(diff, axis=1)))

    @classmethod
    def _with_parity(cls, grid: Grid, half: np.ndarray, sign: float):
        # Keep the i < j orientation and mirror it, so parity is exact.
        upper = grid.pair_i < grid.pair_j
        vals = np.where(upper[:, None], half, sign * half[grid.reverse])
        return cls(grid, vals)


class AlphaKernel(TwoPointKernel):
    """Antisymmetric two-point kernel alpha(x_i, x_j)."""

    def is_antisymmetric(self, tol: float = 0.0) -> bool:
        return self.parity_residual(-1.0) <= tol

    @classmethod
    def from_upper(cls, grid: Grid, values: np.ndarray) -> "AlphaKernel":
        """Antisymmetric kernel taking the i < j entries of ``values`` (P, k)."""
        return cls._with_parity(grid, _pair_values(grid, values, None), -1.0)

    @classmethod
    def random(cls, grid: Grid, k: int, rng: np.random.Generator) -> "AlphaKernel":
        return cls.from_upper(grid, rng.uniform(-1.0, 1.0, (grid.n_pairs, k)))


class BetaKernel(TwoPointKernel):
    """Symmetric two-point kernel beta(x_i, x_j)."""

    def is_symmetric(self, tol: float = 0.0) -> bool:
        return self.parity_residual(1.0) <= tol

    @classmethod
    def from_upper(cls, grid: Grid, values: np.ndarray) -> "BetaKernel":
        """Symmetric kernel taking the i < j entries of ``values`` (P, k)."""
        return cls._with_parity(grid, _pair_values(grid, values, None), 1.0)

    @classmethod
    def random(cls, grid: Grid, k: int, rng: np.random.Generator) -> "BetaKernel":
        return cls.from_upper(grid, rng.uniform(-1.0, 1.0, (grid.n_pairs, k)))


@dataclass(frozen=True, eq=False)
class LambdaAlphaKernel:
    """Composite kernel lam(x_i, x_l) alpha(x_i, x_j) + lam(x_i, x_j) alpha(x_i, x_l)."""

    lam: np.ndarray
    alpha: AlphaKernel

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        n = self.alpha.grid.n
        if lam.shape != (n, n):
            raise DimensionError(f"lambda must have shape {(n, n)}, got {lam.shape}")
        object.__setattr__(self, "lam", lam)

    @property
    def grid(self) -> Grid:
        return self.alpha.grid

    @property
    def k(self) -> int:
        return self.alpha.k

    @staticmethod
    def discrete_delta(grid: Grid) -> np.ndarray:
        return np.diag(1.0 / grid.weights)

    @staticmethod
    def gaussian_bump(grid: Grid, radius: float) -> np.ndarray:
        """Symmetric bump supported on |x_j - x_i| <= radius, unit mass at interior nodes."""
        d = np.linalg.norm(grid.nodes[:, None, :] - grid.nodes[None, :, :], axis=-1)
        sigma = radius / 2.0
        lam = np.exp(-0.5 * (d / sigma) ** 2) * (d <= radius * (1 + 1e-12))
        return lam / (lam @ grid.weights).max()


def _delta_pair_slab(grid: Grid, dense_pairs: np.ndarray, i: int, sign: float) -> np.ndarray:
    """Slab sign*Delta(i,l) v_ij + Delta(i,j) v_il."""
    n = grid.n
    slab = np.zeros((n, n, dense_pairs.shape[-1]))
    row = dense_pairs[i] / grid.weights[i]
    slab[:, i] += sign * row
    slab[i, :] += row
    return slab


def _embed_two_point(kernel: TwoPointKernel, sign: float) -> GeneralKernel:
    dense = kernel.dense()
    grid = kernel.grid
    return GeneralKernel(grid, kernel.k, rule=lambda i: _delta_pair_slab(grid, dense, i, sign))


def alpha_embed(alpha: AlphaKernel) -> GeneralKernel:
    """Three-point kernel Delta(i,l) alpha_ij + Delta(i,j) alpha_il."""
    return _embed_two_point(alpha, 1.0)


def beta_embed(beta: BetaKernel) -> GeneralKernel:
    """Three-point kernel -Delta(i,l) beta_ij + Delta(i,j) beta_il."""
    return _embed_two_point(beta, -1.0)


def lambda_alpha_embed(kl: LambdaAlphaKernel) -> GeneralKernel:
    """Three-point kernel lam_il alpha_ij + lam_ij alpha_il."""
    a = kl.alpha.dense()
    lam = kl.lam

    def rule(i):
        return lam[i][None, :, None] * a[i][:, None, :] + lam[i][:, None, None] * a[i][None, :, :]

    return GeneralKernel(kl.grid, kl.k, rule=rule)


def divergence_kernel_residual(kappa: GeneralKernel) -> np.ndarray:
    """sum_i w_i kappa(x_i, ., .), shape (N, N, k)."""
    acc = np.zeros((kappa.grid.n, kappa.grid.n, kappa.k))
    for i, s in kappa.slabs():
        acc += kappa.grid.weights[i] * s
    return acc


def check_divergence_kernel(kappa: GeneralKernel, tol: float = DEFAULT_TOL) -> CheckResult:
    """Largest |sum_i w_i kappa(x_i, x_j, x_l)| over (j, l)."""
    res = divergence_kernel_residual(kappa)
    return _check(np.max(np.linalg.norm(res, axis=-1)) if res.size else 0.0, tol)


def check_constant_kernel_condition(kappa: GeneralKernel, tol: float = DEFAULT_TOL) -> CheckResult:
    """Largest |sum_jl w_j w_l kappa(x_i, x_j, x_l)| over i."""
    w = kappa.grid.weights
    worst = 0.0
    for _, s in kappa.slabs():
        worst = max(worst, float(np.linalg.norm(np.einsum("j,l,jlc->c", w, w, s))))
    return _check(worst, tol)


def check_lambda_alpha_admissibility(kl: LambdaAlphaKernel, tol: float = DEFAULT_TOL) -> CheckResult:
    return check_divergence_kernel(lambda_alpha_embed(kl), tol)


def peridynamic_alpha(grid: Grid, weight: Callable[[np.ndarray], np.ndarray] | None = None) -> AlphaKernel:
    """alpha(x_i, x_j) = (x_j - x_i) w(|x_j - x_i|) on horizon pairs.

    The default radial weight is 1/d^2, giving (x_j - x_i)/|x_j - x_i|^2.
    """
    d = grid.bond_lengths
    wd = 1.0 / d ** 2 if weight is None else np.asarray(weight(d), dtype=float)
    return AlphaKernel(grid, grid.bond_vectors * wd[:, None])
