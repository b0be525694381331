"""Nonlocal operators and their adjoints for every kernel family.

Each operator family is fixed by a bilinear pairing between a two-point
argument and a kernel value (``forward``) and between a one-point argument
and a kernel value (``backward``):

================  ===================  ==================
family            forward(arg, k)      backward(u, k)
================  ===================  ==================
divergence        nu . k               u k
gradient          eta k                v . k
curl              eta x k              k x u
tensor_div        Psi k                u (x) k
vector_grad       nu (x) k             U k
================  ===================  ==================

With a general kernel the operator is ``sum_jl w_j w_l forward(arg_jl, kappa_ijl)``
and the adjoint is ``sum_i w_i backward(u_i, kappa_ijl)``.  The two-point
families collapse these to single sums over horizon pairs.  For the
antisymmetric family (parity ``s = +1``) and the symmetric family (``s = -1``)::

    (Op arg)_i    = sum_j w_j forward(arg_ij + s arg_ji, phi_ij)
    (Op* u)_ij    = backward(u_i - u_j, phi_ij)

Arrays are plain numpy: one-point values have shape (N,), (N, k) or (N, k, k);
dense two-point values have shape (N, N), (N, N, k) or (N, N, k, k).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .discretization import Grid
from .errors import DimensionError
from .kernels import AlphaKernel, BetaKernel, GeneralKernel, LambdaAlphaKernel, TwoPointKernel


@dataclass(frozen=True)
class OperatorFamily:
    name: str
    forward: Callable[[np.ndarray, np.ndarray], np.ndarray]
    backward: Callable[[np.ndarray, np.ndarray], np.ndarray]
    arg_rank: int  # trailing rank of the two-point argument: 0 scalar, 1 vector, 2 tensor
    u_rank: int  # trailing rank of the one-point adjoint argument


def _mv(a, b):
    return np.einsum("...ab,...b->...a", a, b)


DIVERGENCE = OperatorFamily("divergence", lambda a, k: np.sum(a * k, axis=-1),
                            lambda u, k: u[..., None] * k, 1, 0)
GRADIENT = OperatorFamily("gradient", lambda a, k: a[..., None] * k,
                          lambda u, k: np.sum(u * k, axis=-1), 0, 1)
CURL = OperatorFamily("curl", lambda a, k: np.cross(a, k),
                      lambda u, k: np.cross(k, u), 1, 1)
TENSOR_DIVERGENCE = OperatorFamily("tensor_divergence", _mv,
                                   lambda u, k: u[..., :, None] * k[..., None, :], 2, 1)
VECTOR_GRADIENT = OperatorFamily("vector_gradient", lambda a, k: a[..., :, None] * k[..., None, :],
                                 _mv, 1, 2)

FAMILIES = {f.name: f for f in (DIVERGENCE, GRADIENT, CURL, TENSOR_DIVERGENCE, VECTOR_GRADIENT)}

Kernel = GeneralKernel | AlphaKernel | BetaKernel | LambdaAlphaKernel


def _trailing(k: int, rank: int) -> tuple[int, ...]:
    return (k,) * rank


def _check_two_point(fam: OperatorFamily, grid: Grid, k: int, arg: np.ndarray) -> np.ndarray:
    arg = np.asarray(arg, dtype=float)
    want = (grid.n, grid.n) + _trailing(k, fam.arg_rank)
    if arg.shape != want:
        raise DimensionError(f"{fam.name}: two-point argument must have shape {want}, got {arg.shape}")
    return arg


def _check_one_point(fam: OperatorFamily, grid: Grid, k: int, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    want = (grid.n,) + _trailing(k, fam.u_rank)
    if u.shape != want:
        raise DimensionError(f"{fam.name}: one-point argument must have shape {want}, got {u.shape}")
    return u


def _check_curl(fam: OperatorFamily, grid: Grid, k: int):
    if fam is CURL and (k != 3 or grid.dim != 3):
        raise DimensionError(f"curl needs k = 3 and dim = 3, got k = {k}, dim = {grid.dim}")


def _parity(kernel: TwoPointKernel) -> float:
    return -1.0 if isinstance(kernel, BetaKernel) else 1.0


# ---------------------------------------------------------------- general kernels

def apply_general(fam: OperatorFamily, kappa: GeneralKernel, arg: np.ndarray) -> np.ndarray:
    """(Op arg)_i = sum_j sum_l w_j w_l forward(arg_jl, kappa_ijl)."""
    grid = kappa.grid
    _check_curl(fam, grid, kappa.k)
    arg = _check_two_point(fam, grid, kappa.k, arg)
    w = grid.weights
    out = np.zeros((grid.n,) + _trailing(kappa.k, fam.u_rank))
    for i, s in kappa.slabs():
        out[i] = np.einsum("j,l,jl...->...", w, w, fam.forward(arg, s))
    return out


def apply_adjoint_general(fam: OperatorFamily, kappa: GeneralKernel, u: np.ndarray) -> np.ndarray:
    """(Op* u)_jl = sum_i w_i backward(u_i, kappa_ijl)."""
    grid = kappa.grid
    _check_curl(fam, grid, kappa.k)
    u = _check_one_point(fam, grid, kappa.k, u)
    out = np.zeros((grid.n, grid.n) + _trailing(kappa.k, fam.arg_rank))
    for i, s in kappa.slabs():
        out += grid.weights[i] * fam.backward(np.broadcast_to(u[i], s.shape[:2] + u.shape[1:]), s)
    return out


# ---------------------------------------------------------- two-point families

def apply_pair(fam: OperatorFamily, kernel: TwoPointKernel, arg: np.ndarray) -> np.ndarray:
    """Closed form sum_j w_j forward(arg_ij + s arg_ji, phi_ij) over horizon pairs."""
    grid = kernel.grid
    _check_curl(fam, grid, kernel.k)
    arg = _check_two_point(fam, grid, kernel.k, arg)
    pi, pj = grid.pair_i, grid.pair_j
    sym = arg[pi, pj] + _parity(kernel) * arg[pj, pi]
    terms = fam.forward(sym, kernel.values)
    terms = terms * grid.weights[pj].reshape((-1,) + (1,) * (terms.ndim - 1))
    return grid.scatter(terms)


def apply_adjoint_pair(fam: OperatorFamily, kernel: TwoPointKernel, u: np.ndarray) -> np.ndarray:
    """Closed form backward(u_i - u_j, phi_ij), zero off the horizon pairs."""
    grid = kernel.grid
    _check_curl(fam, grid, kernel.k)
    u = _check_one_point(fam, grid, kernel.k, u)
    pi, pj = grid.pair_i, grid.pair_j
    out = np.zeros((grid.n, grid.n) + _trailing(kernel.k, fam.arg_rank))
    out[pi, pj] = fam.backward(u[pi] - u[pj], kernel.values)
    return out


# ------------------------------------------------------------- lambda-alpha

def _lambda_symmetrize(kl: LambdaAlphaKernel, arg: np.ndarray) -> np.ndarray:
    """S_ij = sum_l w_l lam_il (arg_jl + arg_lj), summed in ascending l."""
    lw = kl.lam * kl.grid.weights[None, :]
    sym = arg + np.swapaxes(arg, 0, 1)
    return np.einsum("il,jl...->ij...", lw, sym)


def apply_lambda_alpha(fam: OperatorFamily, kl: LambdaAlphaKernel, arg: np.ndarray) -> np.ndarray:
    """sum_j w_j forward(S_ij, alpha_ij) with the lambda-weighted symmetrization S."""
    grid = kl.grid
    _check_curl(fam, grid, kl.k)
    arg = _check_two_point(fam, grid, kl.k, arg)
    terms = fam.forward(_lambda_symmetrize(kl, arg), kl.alpha.dense())
    return np.einsum("j,ij...->i...", grid.weights, terms)


def apply_adjoint_lambda_alpha(fam: OperatorFamily, kl: LambdaAlphaKernel, u: np.ndarray) -> np.ndarray:
    """sum_i w_i (lam_il backward(u_i, alpha_ij) + lam_ij backward(u_i, alpha_il))."""
    grid = kl.grid
    _check_curl(fam, grid, kl.k)
    u = _check_one_point(fam, grid, kl.k, u)
    a = kl.alpha.dense()
    half = np.zeros((grid.n, grid.n) + _trailing(kl.k, fam.arg_rank))
    pad = (1,) * fam.arg_rank
    for i in range(grid.n):
        q = fam.backward(np.broadcast_to(u[i], (grid.n,) + u.shape[1:]), a[i])
        half += grid.weights[i] * q[:, None] * kl.lam[i].reshape((1, grid.n) + pad)
    return half + np.swapaxes(half, 0, 1)


# ------------------------------------------------------------------ dispatch

def apply(fam: OperatorFamily | str, kernel: Kernel, arg: np.ndarray) -> np.ndarray:
    """Apply an operator family with any kernel type."""
    fam = FAMILIES[fam] if isinstance(fam, str) else fam
    if isinstance(kernel, GeneralKernel):
        return apply_general(fam, kernel, arg)
    if isinstance(kernel, LambdaAlphaKernel):
        return apply_lambda_alpha(fam, kernel, arg)
    return apply_pair(fam, kernel, arg)


def apply_adjoint(fam: OperatorFamily | str, kernel: Kernel, u: np.ndarray) -> np.ndarray:
    """Apply the adjoint of an operator family with any kernel type."""
    fam = FAMILIES[fam] if isinstance(fam, str) else fam
    if isinstance(kernel, GeneralKernel):
        return apply_adjoint_general(fam, kernel, u)
    if isinstance(kernel, LambdaAlphaKernel):
        return apply_adjoint_lambda_alpha(fam, kernel, u)
    return apply_adjoint_pair(fam, kernel, u)


def laplacian(kernel: Kernel, u: np.ndarray) -> np.ndarray:
    """DD*u by composition; tensor divergence of the tensor adjoint for vector u."""
    u = np.asarray(u, dtype=float)
    fam = DIVERGENCE if u.ndim == 1 else TENSOR_DIVERGENCE
    return apply(fam, kernel, apply_adjoint(fam, kernel, u))


def averaging_adjoint(kernel: Kernel, u: np.ndarray) -> np.ndarray:
    """(Gbar* u)_i = sum_l w_l (G* u)_il."""
    if isinstance(kernel, TwoPointKernel):
        grid = kernel.grid
        u = _check_one_point(GRADIENT, grid, kernel.k, u)
        pi, pj = grid.pair_i, grid.pair_j
        terms = np.sum((u[pi] - u[pj]) * kernel.values, axis=-1) * grid.weights[pj]
        return grid.scatter(terms)
    return apply_adjoint(GRADIENT, kernel, u) @ kernel.grid.weights


# ------------------------------------------------------ named general forms

def div_general(kappa, nu):
    return apply_general(DIVERGENCE, kappa, nu)


def div_adjoint_general(kappa, u):
    return apply_adjoint_general(DIVERGENCE, kappa, u)


def grad_general(kappa, eta):
    return apply_general(GRADIENT, kappa, eta)


def grad_adjoint_general(kappa, v):
    return apply_adjoint_general(GRADIENT, kappa, v)


def curl_general(kappa, eta):
    return apply_general(CURL, kappa, eta)


def curl_adjoint_general(kappa, u):
    return apply_adjoint_general(CURL, kappa, u)


def div_tensor_general(kappa, psi):
    return apply_general(TENSOR_DIVERGENCE, kappa, psi)


def div_tensor_adjoint_general(kappa, u):
    return apply_adjoint_general(TENSOR_DIVERGENCE, kappa, u)


def grad_vector_general(kappa, nu):
    return apply_general(VECTOR_GRADIENT, kappa, nu)


def grad_vector_adjoint_general(kappa, U):
    return apply_adjoint_general(VECTOR_GRADIENT, kappa, U)


def laplacian_general(kappa, u):
    return laplacian(kappa, u)


# ------------------------------------------------- named antisymmetric forms

def _require(kernel, cls):
    if not isinstance(kernel, cls):
        raise TypeError(f"expected {cls.__name__}, got {type(kernel).__name__}")
    return kernel


def div_alpha(alpha, nu):
    """(D nu)_i = sum_j w_j (nu_ij + nu_ji) . alpha_ij"""
    return apply_pair(DIVERGENCE, _require(alpha, AlphaKernel), nu)


def div_adjoint_alpha(alpha, u):
    """(D* u)_ij = -(u_j - u_i) alpha_ij"""
    return apply_adjoint_pair(DIVERGENCE, _require(alpha, AlphaKernel), u)


def grad_alpha(alpha, eta):
    return apply_pair(GRADIENT, _require(alpha, AlphaKernel), eta)


def grad_adjoint_alpha(alpha, v):
    return apply_adjoint_pair(GRADIENT, _require(alpha, AlphaKernel), v)


def curl_alpha(alpha, eta):
    """(C eta)_i = sum_j w_j (eta_ij + eta_ji) x alpha_ij"""
    return apply_pair(CURL, _require(alpha, AlphaKernel), eta)


def curl_adjoint_alpha(alpha, u):
    """(C* u)_ij = (u_j - u_i) x alpha_ij"""
    return apply_adjoint_pair(CURL, _require(alpha, AlphaKernel), u)


def div_tensor_alpha(alpha, psi):
    return apply_pair(TENSOR_DIVERGENCE, _require(alpha, AlphaKernel), psi)


def div_tensor_adjoint_alpha(alpha, u):
    return apply_adjoint_pair(TENSOR_DIVERGENCE, _require(alpha, AlphaKernel), u)


def grad_vector_alpha(alpha, nu):
    return apply_pair(VECTOR_GRADIENT, _require(alpha, AlphaKernel), nu)


def grad_vector_adjoint_alpha(alpha, U):
    return apply_adjoint_pair(VECTOR_GRADIENT, _require(alpha, AlphaKernel), U)


def _pair_laplacian(kernel: TwoPointKernel, u: np.ndarray) -> np.ndarray:
    grid = kernel.grid
    u = np.asarray(u, dtype=float)
    if u.shape[:1] != (grid.n,):
        raise DimensionError(f"expected {grid.n} node values, got shape {u.shape}")
    pi, pj = grid.pair_i, grid.pair_j
    coef = -2.0 * grid.weights[pj] * np.sum(kernel.values ** 2, axis=1)
    diff = u[pj] - u[pi]
    return grid.scatter(coef.reshape((-1,) + (1,) * (diff.ndim - 1)) * diff)


def laplacian_alpha(alpha, u):
    """(DD* u)_i = -2 sum_j w_j (u_j - u_i) |alpha_ij|^2"""
    return _pair_laplacian(_require(alpha, AlphaKernel), u)


# ---------------------------------------------------- named symmetric forms

def div_beta(beta, nu):
    """(D nu)_i = sum_j w_j (nu_ij - nu_ji) . beta_ij"""
    return apply_pair(DIVERGENCE, _require(beta, BetaKernel), nu)


def div_adjoint_beta(beta, u):
    """(D* u)_ij = -(u_j - u_i) beta_ij"""
    return apply_adjoint_pair(DIVERGENCE, _require(beta, BetaKernel), u)


def laplacian_beta(beta, u):
    """(DD* u)_i = -2 sum_j w_j (u_j - u_i) |beta_ij|^2"""
    return _pair_laplacian(_require(beta, BetaKernel), u)


def _direction(kernel: TwoPointKernel, a) -> np.ndarray:
    if a is None:
        a = np.eye(kernel.k)[0]
    a = np.asarray(a, dtype=float)
    if a.shape != (kernel.k,):
        raise DimensionError(f"direction must have {kernel.k} components")
    return a


def div_beta_scalar(beta, u, a=None):
    """sum_j w_j (u_j - u_i) bhat_ij with bhat = a . beta (default a = e_1)."""
    beta = _require(beta, BetaKernel)
    grid = beta.grid
    bhat = beta.values @ _direction(beta, a)
    u = np.asarray(u, dtype=float)
    pi, pj = grid.pair_i, grid.pair_j
    return grid.scatter(grid.weights[pj] * (u[pj] - u[pi]) * bhat)


def div_alpha_scalar(alpha, u, a=None):
    """sum_j w_j (u_j + u_i) ahat_ij with ahat = a . alpha (default a = e_1)."""
    alpha = _require(alpha, AlphaKernel)
    grid = alpha.grid
    ahat = alpha.values @ _direction(alpha, a)
    u = np.asarray(u, dtype=float)
    pi, pj = grid.pair_i, grid.pair_j
    return grid.scatter(grid.weights[pj] * (u[pj] + u[pi]) * ahat)


# ------------------------------------------------ named lambda-alpha forms

def div_lambda_alpha(kl, nu):
    """sum_j w_j alpha_ij . sum_l w_l lam_il (nu_jl + nu_lj)"""
    return apply_lambda_alpha(DIVERGENCE, _require(kl, LambdaAlphaKernel), nu)


def div_adjoint_lambda_alpha(kl, u):
    """(D* u)_jl = sum_i w_i u_i (lam_il alpha_ij + lam_ij alpha_il)"""
    return apply_adjoint_lambda_alpha(DIVERGENCE, _require(kl, LambdaAlphaKernel), u)


def flux_into(kl, nu, i: int) -> float:
    """Total flux of nu into node i: the i-th entry of the lambda-alpha divergence."""
    kl = _require(kl, LambdaAlphaKernel)
    grid = kl.grid
    nu = _check_two_point(DIVERGENCE, grid, kl.k, nu)
    lw = kl.lam[i] * grid.weights
    inner = np.einsum("l,jlc->jc", lw, nu + np.swapaxes(nu, 0, 1))
    a = kl.alpha.dense()[i]
    return float(grid.weights @ np.sum(a * inner, axis=1))


# ---------------------------------------------------------------- norms

def one_point_norm(grid: Grid, u: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    return float(np.sqrt(grid.weights @ np.sum(u.reshape(grid.n, -1) ** 2, axis=1)))


def two_point_norm(grid: Grid, nu: np.ndarray) -> float:
    nu = np.asarray(nu, dtype=float)
    sq = np.sum(nu.reshape(grid.n, grid.n, -1) ** 2, axis=2)
    return float(np.sqrt(grid.weights @ sq @ grid.weights))
