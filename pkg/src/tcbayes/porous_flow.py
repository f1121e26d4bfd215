"""Deterministic forward model for a single porous strip.

Two coupled temperature ODEs (fluid and solid) plus an algebraic density
closure are marched in the normalized coordinate x in [0, 1] with explicit
Euler. The observable exposed to the inverse problem is the interface
pressure p = T_f(1) * rho_f(1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "StripTrajectory",
    "SingularDenominatorError",
    "NonFiniteStateError",
    "integrate_strip",
    "interface_state_batch",
    "interface_pressure",
    "forward_pressure_at_mean",
]

DEFAULT_N_STEPS = 1000
DEFAULT_SINGULAR_EPS = 1e-12


class SingularDenominatorError(ArithmeticError):
    """Density-equation denominator phi^-2 - rho^2*T_f dropped below the epsilon guard."""


class NonFiniteStateError(ArithmeticError):
    """A state variable became NaN or infinite during integration."""


@dataclass(frozen=True)
class ModelParams:
    """Deterministic strip-model parameters.

    Defaults are the reference values of the phi = 0.111 section; scenario
    configs override individual fields (porosity for the second section,
    pre-scaled heat flux, and so on).
    """

    reynolds_nominal: float = 405.0
    prandtl: float = 0.64
    nusselt: float = 7500.0
    heat_flux_nominal: float = 30845.0
    hot_gas_temp: float = 347.0
    porosity: float = 0.111
    kappa_fluid: float = 0.03
    kappa_solid: float = 15.2
    permeability_darcy: float = 3.57e-13
    forchheimer: float = 5.17e-8
    coolant_temp: float = 304.2
    solid_temp: float = 321.9
    reservoir_pressure: float = 600000.0
    length: float = 0.015

    def __post_init__(self) -> None:
        if not 0.0 < self.porosity < 1.0:
            raise ValueError(f"porosity must lie in (0, 1), got {self.porosity}")
        if self.reynolds_nominal <= 0.0:
            raise ValueError("reynolds_nominal must be positive")
        for name in (
            "prandtl",
            "nusselt",
            "hot_gas_temp",
            "kappa_fluid",
            "kappa_solid",
            "permeability_darcy",
            "forchheimer",
            "coolant_temp",
            "solid_temp",
            "reservoir_pressure",
            "length",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class StripTrajectory:
    """Euler trajectory of one strip on the normalized coordinate x."""

    x_grid: np.ndarray
    t_fluid: np.ndarray
    t_solid: np.ndarray
    density: np.ndarray
    velocity: np.ndarray

    def __post_init__(self) -> None:
        n = self.x_grid.shape[0]
        for name in ("t_fluid", "t_solid", "density", "velocity"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have the same length as x_grid")
        if n < 2 or self.x_grid[0] != 0.0 or self.x_grid[-1] != 1.0:
            raise ValueError("x_grid must run from 0 to 1")
        if np.any(np.diff(self.x_grid) <= 0.0):
            raise ValueError("x_grid must be strictly increasing")
        if np.any(self.density <= 0.0):
            raise ValueError("density must be positive everywhere")


def _rhs_coefficients(params: ModelParams, q: float, phi: float, re: float):
    """Scalar coefficients of the right-hand sides at fixed (q, phi, re)."""
    solid_cap = (1.0 - phi) * params.kappa_solid
    a_fluid = params.nusselt / (params.prandtl * re)
    a_solid = params.kappa_fluid / solid_cap * re * params.prandtl
    source = q / solid_cap
    darcy = params.length**2 / (re * params.permeability_darcy)
    forch = params.length / params.forchheimer
    return a_fluid, a_solid, source, darcy, forch


def integrate_strip(
    params: ModelParams,
    q: float,
    phi: float,
    re: float,
    n_steps: int = DEFAULT_N_STEPS,
    singular_eps: float = DEFAULT_SINGULAR_EPS,
) -> StripTrajectory:
    """Integrate one strip with explicit Euler and return the full trajectory.

    Parameters
    ----------
    params : ModelParams
        Deterministic parameter set; ``q`` and ``phi`` override the nominal
        heat flux and porosity so the caller can substitute germ realizations.
    q, phi, re : float
        Heat flux, porosity and Reynolds number for this run.
    n_steps : int
        Number of Euler steps on [0, 1].
    singular_eps : float
        Guard on |phi^-2 - rho^2*T_f|; crossing it raises
        SingularDenominatorError.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if not 0.0 < phi < 1.0:
        raise ValueError(f"phi must lie in (0, 1), got {phi}")
    if re <= 0.0:
        raise ValueError(f"re must be positive, got {re}")

    a_fluid, a_solid, source, darcy, forch = _rhs_coefficients(params, q, phi, re)
    t_hg = params.hot_gas_temp
    phi_inv2 = phi**-2
    dx = 1.0 / n_steps

    tf = params.coolant_temp
    ts = params.solid_temp
    rho = params.reservoir_pressure / params.coolant_temp

    t_fluid = np.empty(n_steps + 1)
    t_solid = np.empty(n_steps + 1)
    density = np.empty(n_steps + 1)
    t_fluid[0], t_solid[0], density[0] = tf, ts, rho

    for i in range(n_steps):
        denom = phi_inv2 - rho * rho * tf
        if abs(denom) < singular_eps:
            raise SingularDenominatorError(
                f"density denominator {denom!r} below epsilon at x={i * dx:.6f}"
            )
        growth = (a_fluid * rho * rho * (ts - tf) + darcy + forch) / denom
        tf_new = tf + dx * a_fluid * (ts - tf)
        ts_new = ts + dx * (a_solid * (tf - t_hg) + source)
        rho_new = rho + dx * growth * rho
        if not (
            math.isfinite(tf_new) and math.isfinite(ts_new) and math.isfinite(rho_new)
        ):
            raise NonFiniteStateError(f"non-finite state at x={(i + 1) * dx:.6f}")
        tf, ts, rho = tf_new, ts_new, rho_new
        t_fluid[i + 1], t_solid[i + 1], density[i + 1] = tf, ts, rho

    x_grid = np.linspace(0.0, 1.0, n_steps + 1)
    return StripTrajectory(
        x_grid=x_grid,
        t_fluid=t_fluid,
        t_solid=t_solid,
        density=density,
        velocity=1.0 / density,
    )


def interface_state_batch(
    params: ModelParams,
    q: np.ndarray,
    phi: np.ndarray,
    re: float,
    n_steps: int = DEFAULT_N_STEPS,
    singular_eps: float = DEFAULT_SINGULAR_EPS,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Terminal states (T_f, T_s, rho_f at x=1) for a batch of (q, phi) draws.

    Vectorized Euler march used by Monte Carlo oracles; returns only the
    interface values, not the trajectories. Broadcasts q against phi.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    q = np.asarray(q, dtype=float)
    phi = np.asarray(phi, dtype=float)
    q, phi = np.broadcast_arrays(q, phi)
    if np.any(phi <= 0.0) or np.any(phi >= 1.0):
        raise ValueError("phi draws must lie in (0, 1)")

    solid_cap = (1.0 - phi) * params.kappa_solid
    a_fluid = params.nusselt / (params.prandtl * re)
    a_solid = params.kappa_fluid / solid_cap * re * params.prandtl
    source = q / solid_cap
    darcy = params.length**2 / (re * params.permeability_darcy)
    forch = params.length / params.forchheimer
    t_hg = params.hot_gas_temp
    phi_inv2 = phi**-2
    dx = 1.0 / n_steps

    tf = np.full(q.shape, params.coolant_temp)
    ts = np.full(q.shape, params.solid_temp)
    rho = np.full(q.shape, params.reservoir_pressure / params.coolant_temp)

    for _ in range(n_steps):
        denom = phi_inv2 - rho * rho * tf
        if np.any(np.abs(denom) < singular_eps):
            raise SingularDenominatorError("density denominator below epsilon in batch")
        growth = (a_fluid * rho * rho * (ts - tf) + darcy + forch) / denom
        tf, ts, rho = (
            tf + dx * a_fluid * (ts - tf),
            ts + dx * (a_solid * (tf - t_hg) + source),
            rho + dx * growth * rho,
        )
    if not (np.all(np.isfinite(tf)) and np.all(np.isfinite(ts)) and np.all(np.isfinite(rho))):
        raise NonFiniteStateError("non-finite state in batch integration")
    return tf, ts, rho


def interface_pressure(traj: StripTrajectory) -> float:
    """Interface pressure p = T_f(1) * rho_f(1)."""
    return float(traj.t_fluid[-1] * traj.density[-1])


def forward_pressure_at_mean(
    params: ModelParams,
    xi_mean: tuple[float, float],
    re: float,
    n_steps: int = DEFAULT_N_STEPS,
    singular_eps: float = DEFAULT_SINGULAR_EPS,
) -> float:
    """Pressure observable F(re) with the germ frozen at its mean.

    This is the likelihood evaluation point: integrate the strip at the mean
    heat flux and porosity, then read off the interface pressure. Implemented
    with plain floats; this sits on the hot path of every posterior call.
    """
    q, phi = xi_mean
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if not 0.0 < phi < 1.0:
        raise ValueError(f"phi must lie in (0, 1), got {phi}")
    if re <= 0.0:
        raise ValueError(f"re must be positive, got {re}")

    a_fluid, a_solid, source, darcy, forch = _rhs_coefficients(params, q, phi, re)
    t_hg = params.hot_gas_temp
    phi_inv2 = phi**-2
    dx = 1.0 / n_steps

    tf = params.coolant_temp
    ts = params.solid_temp
    rho = params.reservoir_pressure / params.coolant_temp
    for i in range(n_steps):
        denom = phi_inv2 - rho * rho * tf
        if abs(denom) < singular_eps:
            raise SingularDenominatorError(
                f"density denominator {denom!r} below epsilon at x={i * dx:.6f}"
            )
        growth = (a_fluid * rho * rho * (ts - tf) + darcy + forch) / denom
        tf, ts, rho = (
            tf + dx * a_fluid * (ts - tf),
            ts + dx * (a_solid * (tf - t_hg) + source),
            rho + dx * growth * rho,
        )
    if not (math.isfinite(tf) and math.isfinite(ts) and math.isfinite(rho)):
        raise NonFiniteStateError("non-finite state during pressure evaluation")
    return tf * rho
