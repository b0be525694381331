"""Central-difference time integration of rho u'' = L u + b."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .discretization import dot1
from .errors import ConfigurationError
from .peridyn import SparseOperator

Prescribed = Callable[[float], np.ndarray]


class SimulationDiverged(RuntimeError):
    """A non-finite displacement appeared during time stepping."""


@dataclass(frozen=True)
class Constraints:
    """Nodes whose displacement is prescribed as a function of time.

    ``displacement(t)`` returns an array of shape (len(nodes), 3).
    """

    nodes: np.ndarray
    displacement: Prescribed

    @classmethod
    def none(cls) -> "Constraints":
        return cls(np.zeros(0, dtype=np.intp), lambda t: np.zeros((0, 3)))

    def apply(self, u: np.ndarray, t: float) -> np.ndarray:
        if len(self.nodes):
            u[self.nodes] = self.displacement(t)
        return u


@dataclass(frozen=True)
class SimulationState:
    step: int
    time: float
    u: np.ndarray
    u_prev: np.ndarray
    dt: float
    rho: np.ndarray
    constraints: Constraints = field(default_factory=Constraints.none)

    @property
    def velocity(self) -> np.ndarray:
        """Backward-difference velocity (u^n - u^{n-1}) / dt."""
        return (self.u - self.u_prev) / self.dt


def stable_dt(Lop: SparseOperator, rho, safety: float = 0.5) -> float:
    """safety * sqrt(2 min(rho) / max_i(sum_j w_j |C_ij|_F + |D_i|_F))."""
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (Lop.grid.n,))
    if np.any(rho <= 0):
        raise ConfigurationError("density must be positive at every node")
    bound = float(np.max(Lop.row_bounds()))
    if bound == 0:
        raise ConfigurationError("operator is identically zero; no stability limit")
    return safety * math.sqrt(2.0 * float(rho.min()) / bound)


def _body(b, n: int, t: float) -> np.ndarray:
    val = b(t) if callable(b) else b
    return np.broadcast_to(np.asarray(val, dtype=float), (n, 3))


def initial_state(Lop: SparseOperator, rho, u0, v0, b, dt: float,
                  constraints: Constraints | None = None) -> SimulationState:
    """Start-up with u^{-1} = u^0 - dt v^0 + dt^2/2 rho^{-1}(L u^0 + b^0)."""
    if not dt > 0:
        raise ConfigurationError("time step must be positive")
    n = Lop.grid.n
    constraints = constraints or Constraints.none()
    u0 = constraints.apply(np.array(u0, dtype=float).reshape(n, 3), 0.0)
    v0 = np.broadcast_to(np.asarray(v0, dtype=float), (n, 3))
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (n,)).copy()
    if np.any(rho <= 0):
        raise ConfigurationError("density must be positive at every node")
    acc = (Lop.apply(u0) + _body(b, n, 0.0)) / rho[:, None]
    u_prev = u0 - dt * v0 + 0.5 * dt * dt * acc
    return SimulationState(0, 0.0, u0, constraints.apply(u_prev, -dt), dt, rho, constraints)


def step(state: SimulationState, Lop: SparseOperator, b=0.0, dt: float | None = None) -> SimulationState:
    """u^{n+1} = 2u^n - u^{n-1} + dt^2 rho^{-1}(L u^n + b^n); constrained nodes overwritten.

    ``dt`` defaults to the step the state was started with; a different value
    is only meaningful on the first step since u^{n-1} encodes the old step.
    """
    dt = state.dt if dt is None else float(dt)
    if not dt > 0:
        raise ConfigurationError("time step must be positive")
    n = Lop.grid.n
    acc = (Lop.apply(state.u) + _body(b, n, state.time)) / state.rho[:, None]
    u_next = 2.0 * state.u - state.u_prev + dt * dt * acc
    t_next = state.time + dt
    u_next = state.constraints.apply(u_next, t_next)
    if not np.all(np.isfinite(u_next)):
        raise SimulationDiverged(f"non-finite displacement at step {state.step + 1} (t = {t_next:.6g})")
    return replace(state, step=state.step + 1, time=t_next, u=u_next, u_prev=state.u, dt=dt)


def elastic_energy(Lop: SparseOperator, u) -> float:
    """1/2 <u, -L u> in the weighted pairing."""
    return 0.5 * dot1(Lop.grid, u, -Lop.apply(u))


def kinetic_energy(Lop: SparseOperator, rho, v) -> float:
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (Lop.grid.n,))
    return 0.5 * float(np.sum(Lop.grid.weights * rho * np.sum(np.asarray(v) ** 2, axis=1)))


def energy(state: SimulationState, Lop: SparseOperator) -> dict:
    """Energy of the leapfrog pair (u^{n-1}, u^n).

    Kinetic energy uses the half-step velocity (u^n - u^{n-1})/dt and elastic
    energy the mixed form 1/2 <u^{n-1}, -L u^n>.  With a symmetric L and no
    forcing this sum is conserved exactly by the central-difference scheme.
    """
    kinetic = kinetic_energy(Lop, state.rho, state.velocity)
    elastic = 0.5 * dot1(Lop.grid, state.u_prev, -Lop.apply(state.u))
    return {"kinetic": kinetic, "elastic": elastic, "total": kinetic + elastic}


def energy_central(state: SimulationState, Lop: SparseOperator, b=0.0) -> dict:
    """Energy at u^n with the central velocity (u^{n+1} - u^{n-1}) / (2 dt).

    Not conserved by the scheme: it oscillates with relative amplitude of
    order (omega dt)^2 about the conserved staggered value.
    """
    nxt = step(state, Lop, b)
    v = (nxt.u - state.u_prev) / (2.0 * state.dt)
    kinetic = kinetic_energy(Lop, state.rho, v)
    elastic = elastic_energy(Lop, state.u)
    return {"kinetic": kinetic, "elastic": elastic, "total": kinetic + elastic}


@dataclass
class Trajectory:
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    displacements: list = field(default_factory=list)
    energies: list = field(default_factory=list)

    def write_csv(self, path, grid) -> None:
        """Long format: one row per (sample, node)."""
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["step", "time", "node", "x1", "x2", "x3", "u1", "u2", "u3"])
            for s, t, u in zip(self.steps, self.times, self.displacements):
                for i in range(grid.n):
                    out.writerow([s, f"{t:.17g}", i] + [f"{v:.17g}" for v in grid.nodes[i]]
                                 + [f"{v:.17g}" for v in u[i]])

    def write_energy_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["step", "time", "kinetic", "elastic", "total"])
            for s, t, e in zip(self.steps, self.times, self.energies):
                out.writerow([s, f"{t:.17g}"] + [f"{e[k]:.17g}" for k in ("kinetic", "elastic", "total")])

    def relative_energy_drift(self) -> float:
        """max_n |E_n - E_0| / |E_0|; 0 for an identically zero trajectory."""
        total = np.array([e["total"] for e in self.energies])
        if total[0] == 0:
            return 0.0 if np.all(total == 0) else math.inf
        return float(np.max(np.abs(total - total[0])) / abs(total[0]))


def simulate(Lop: SparseOperator, rho, u0, v0=0.0, b=0.0, dt: float | None = None, steps: int = 1000,
             stride: int = 1, constraints: Constraints | None = None, safety: float = 0.5) -> Trajectory:
    """Run ``steps`` central-difference steps, sampling every ``stride`` steps (and the last)."""
    if steps < 0 or stride < 1:
        raise ConfigurationError("steps must be >= 0 and stride >= 1")
    dt = stable_dt(Lop, rho, safety) if dt is None else float(dt)
    state = initial_state(Lop, rho, u0, v0, b, dt, constraints)
    traj = Trajectory()

    def sample(s):
        traj.steps.append(s.step)
        traj.times.append(s.time)
        traj.displacements.append(s.u.copy())
        traj.energies.append(energy(s, Lop))

    sample(state)
    for _ in range(steps):
        state = step(state, Lop, b)
        if state.step % stride == 0 or state.step == steps:
            sample(state)
    return traj
