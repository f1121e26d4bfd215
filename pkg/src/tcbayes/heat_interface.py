"""Interface temperature field: assembly from strip solutions and 1D diffusion.

The interface coordinate z in [0, 1] carries solid walls outside a porous
window (d1, d2); the window is tiled by pore footprints that take the strip
exit temperatures. The field then relaxes under the linear heat equation
with zero-flux boundaries, marched by the explicit central scheme with a
mirror-ghost Neumann closure. For chaos-expanded strip temperatures every
coefficient field diffuses independently (linearity), which is how the
models with random heat flux propagate uncertainty to the constraint time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gpc import GermSpec, StripSurrogate, hermite_design

__all__ = [
    "InterfaceGeometry",
    "InterfaceField",
    "InterfaceSurrogate",
    "assemble_initial_field",
    "diffuse_field",
    "build_interface_surrogate",
    "assemble_interface_from_coeffs",
    "evaluate_interface_temperature",
    "evaluate_interface_batch",
]

DEFAULT_CFL = 0.4
DEFAULT_N_Z = 600


@dataclass(frozen=True)
class InterfaceGeometry:
    """Porous window layout, wall temperature and diffusion constants."""

    d1: float = 0.25
    d2: float = 0.75
    n_strips: int = 60
    section_porosities: tuple[tuple[float, float, float], ...] = (
        (0.25, 0.5, 0.111),
        (0.5, 0.75, 0.4),
    )
    wall_temp: float = 400.0
    delta_z: float | None = None
    diffusivity: float = 1e-3
    t_constraint: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.d1 < self.d2 <= 1.0:
            raise ValueError("need 0 <= d1 < d2 <= 1")
        if self.n_strips < 1:
            raise ValueError("n_strips must be >= 1")
        if self.wall_temp <= 0.0 or self.diffusivity <= 0.0 or self.t_constraint <= 0.0:
            raise ValueError("wall_temp, diffusivity and t_constraint must be positive")
        if self.delta_z is None:
            object.__setattr__(self, "delta_z", (self.d2 - self.d1) / (2 * self.n_strips))
        if self.delta_z <= 0.0:
            raise ValueError("delta_z must be positive")
        if 2.0 * self.delta_z * self.n_strips > (self.d2 - self.d1) * (1.0 + 1e-12):
            raise ValueError("strip footprints must tile (d1, d2) without overlap")
        for lo, hi, phi in self.section_porosities:
            if not (self.d1 - 1e-12 <= lo < hi <= self.d2 + 1e-12):
                raise ValueError("porosity sections must lie inside (d1, d2)")
            if not 0.0 < phi < 1.0:
                raise ValueError("section porosity must lie in (0, 1)")

    @property
    def strip_centers(self) -> np.ndarray:
        return self.d1 + self.delta_z * (2 * np.arange(self.n_strips) + 1)

    def strip_porosities(self) -> np.ndarray:
        """Porosity per strip, looked up by which section contains its center."""
        centers = self.strip_centers
        out = np.empty(self.n_strips)
        for s, center in enumerate(centers):
            for lo, hi, phi in self.section_porosities:
                if lo <= center < hi or (center == hi == self.d2):
                    out[s] = phi
                    break
            else:
                raise ValueError(f"strip center {center} not covered by any porosity section")
        return out


@dataclass(frozen=True)
class InterfaceField:
    """One realization (or one chaos coefficient) of the interface temperature."""

    z_grid: np.ndarray
    values: np.ndarray
    time: float

    def __post_init__(self) -> None:
        if self.values.shape != self.z_grid.shape:
            raise ValueError("values and z_grid must have the same shape")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        dz = np.diff(self.z_grid)
        if np.any(dz <= 0.0) or not np.allclose(dz, dz[0], rtol=1e-9):
            raise ValueError("z_grid must be uniform and strictly increasing")


def _footprint_index(geometry: InterfaceGeometry, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Strip index per node and the mask of nodes covered by any footprint.

    Membership is decided by index arithmetic on the tiling, so a node on a
    shared footprint edge belongs to exactly one strip.
    """
    idx = np.floor((z - geometry.d1) / (2.0 * geometry.delta_z)).astype(int)
    idx = np.clip(idx, 0, geometry.n_strips - 1)
    covered = np.abs(z - geometry.strip_centers[idx]) <= geometry.delta_z * (1.0 + 1e-12)
    covered &= (z >= geometry.d1) & (z <= geometry.d2)
    return idx, covered


def assemble_initial_field(
    geometry: InterfaceGeometry, strip_values: np.ndarray, n_z: int = DEFAULT_N_Z
) -> InterfaceField:
    """Piecewise-constant initial field: walls at T0, footprints at strip values."""
    strip_values = np.asarray(strip_values, dtype=float)
    if strip_values.shape != (geometry.n_strips,):
        raise ValueError(f"need exactly {geometry.n_strips} strip values")
    if n_z < 2:
        raise ValueError("n_z must be >= 2")
    z = np.linspace(0.0, 1.0, n_z)
    idx, covered = _footprint_index(geometry, z)
    per_strip = np.bincount(idx[covered], minlength=geometry.n_strips)
    if np.any(per_strip == 0):
        raise ValueError(
            f"grid with n_z={n_z} leaves some pore footprint without a node; refine the grid"
        )
    values = np.full(n_z, geometry.wall_temp)
    values[covered] = strip_values[idx[covered]]
    return InterfaceField(z_grid=z, values=values, time=0.0)


def _diffuse_rows(rows: np.ndarray, r: float, n_full: int, r_rem: float) -> np.ndarray:
    """March stacked fields with the explicit scheme; mirror-ghost ends.

    ``rows`` has shape (n_fields, n_z). The update with ratio r keeps every
    node a convex combination of its neighbors for r <= 1/2, so the discrete
    maximum principle holds exactly; the trapezoid-weighted spatial mean is
    conserved exactly by the ghost closure.
    """
    u = np.array(rows, dtype=float)
    lap = np.empty_like(u)
    for _ in range(n_full):
        _ghost_step(u, lap, r)
    if r_rem > 0.0:
        _ghost_step(u, lap, r_rem)
    return u


def _ghost_step(u: np.ndarray, lap: np.ndarray, ratio: float) -> None:
    lap[:, 1:-1] = u[:, :-2] - 2.0 * u[:, 1:-1] + u[:, 2:]
    lap[:, 0] = 2.0 * (u[:, 1] - u[:, 0])
    lap[:, -1] = 2.0 * (u[:, -2] - u[:, -1])
    u += ratio * lap


def _spectral_propagate(rows: np.ndarray, r: float, n_full: int, r_rem: float) -> np.ndarray:
    """Apply the exact same marching map through the operator's eigenbasis.

    The mirror-ghost update matrix has eigenvectors cos(k*pi*i/(n-1)) with
    per-step factors 1 + r*mu_k, mu_k = -2(1 - cos(k*pi/(n-1))). Diagonalizing
    replaces n_full sweeps with one change of basis; results agree with the
    sweeps to roundoff. Used for long marches of large coefficient stacks.
    """
    n = rows.shape[1]
    i = np.arange(n)
    basis = np.cos(np.pi * np.outer(i, i) / (n - 1))
    mu = -2.0 * (1.0 - np.cos(np.pi * i / (n - 1)))
    growth = (1.0 + r * mu) ** n_full * (1.0 + r_rem * mu)
    coeffs = np.linalg.solve(basis, rows.T)
    return (basis @ (growth[:, None] * coeffs)).T


def _diffuse_stack(rows: np.ndarray, r: float, n_full: int, r_rem: float) -> np.ndarray:
    if n_full * rows.size > 4e7:
        return _spectral_propagate(rows, r, n_full, r_rem)
    return _diffuse_rows(rows, r, n_full, r_rem)


def _march_plan(z_grid: np.ndarray, lam: float, elapsed: float, cfl: float):
    dz = z_grid[1] - z_grid[0]
    dt = cfl * dz * dz / lam
    n_full = int(elapsed // dt)
    rem = elapsed - n_full * dt
    r_rem = lam * rem / (dz * dz)
    return n_full, r_rem


def diffuse_field(
    field: InterfaceField, lam: float, t_end: float, cfl: float = DEFAULT_CFL
) -> InterfaceField:
    """Evolve a field to t_end under the heat equation with zero-flux ends."""
    if not 0.0 < cfl <= 0.5:
        raise ValueError("cfl must lie in (0, 0.5] for stability")
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if t_end < field.time:
        raise ValueError("t_end must not precede the field time")
    if t_end == field.time:
        return InterfaceField(field.z_grid.copy(), field.values.copy(), t_end)
    n_full, r_rem = _march_plan(field.z_grid, lam, t_end - field.time, cfl)
    values = _diffuse_rows(field.values[None, :], cfl, n_full, r_rem)[0]
    return InterfaceField(z_grid=field.z_grid.copy(), values=values, time=t_end)


@dataclass(frozen=True)
class InterfaceSurrogate:
    """Chaos coefficient fields of the interface temperature at one time.

    ``base_field`` is the order-zero coefficient (walls included). For a
    shared germ the higher modes have shape (order, n_z); for independent
    per-strip germs they have shape (n_strips, order, n_z), one block per
    strip variable in germ order.
    """

    order: int
    germ: GermSpec
    shared: bool
    z_grid: np.ndarray
    time: float
    base_field: np.ndarray
    mode_fields: np.ndarray

    def __post_init__(self) -> None:
        n_z = self.z_grid.shape[0]
        if self.base_field.shape != (n_z,):
            raise ValueError("base_field must match the grid")
        expected = (self.order, n_z) if self.shared else (self.germ.dim, self.order, n_z)
        if self.order > 0 and self.mode_fields.shape != expected:
            raise ValueError(f"mode_fields must have shape {expected}")


def assemble_interface_from_coeffs(
    geometry: InterfaceGeometry,
    coeffs: np.ndarray,
    germ: GermSpec,
    shared: bool,
    lam: float,
    t_end: float,
    n_z: int = DEFAULT_N_Z,
    cfl: float = DEFAULT_CFL,
) -> InterfaceSurrogate:
    """Diffuse the coefficient stack built from per-strip expansions.

    ``coeffs`` has shape (n_strips, order+1): the interface-exit expansion of
    each strip's fluid temperature. All coefficient fields are diffused in
    one vectorized march.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 2 or coeffs.shape[0] != geometry.n_strips:
        raise ValueError("coeffs must have shape (n_strips, order+1)")
    if t_end < 0.0:
        raise ValueError("t_end must be >= 0")
    order = coeffs.shape[1] - 1

    base0 = assemble_initial_field(geometry, coeffs[:, 0], n_z)
    z = base0.z_grid
    idx, covered = _footprint_index(geometry, z)
    rows = np.zeros((1 + (order if shared else geometry.n_strips * order), n_z))
    rows[0] = base0.values
    if shared:
        # one field per mode: all strips share the germ variable
        for k in range(1, order + 1):
            rows[k, covered] = coeffs[idx[covered], k]
    else:
        if germ.dim != geometry.n_strips:
            raise ValueError("independent germ must have one variable per strip")
        # one field per (strip, mode): nonzero only on that strip's footprint
        for k in range(1, order + 1):
            rows[1 + idx[covered] * order + (k - 1), covered] = coeffs[idx[covered], k]

    n_full, r_rem = _march_plan(z, lam, t_end, cfl) if t_end > 0 else (0, 0.0)
    diffused = _diffuse_stack(rows, cfl, n_full, r_rem)
    base = diffused[0]
    if shared:
        modes = diffused[1:].reshape(order, n_z) if order > 0 else np.zeros((0, n_z))
    else:
        modes = (
            diffused[1:].reshape(geometry.n_strips, order, n_z)
            if order > 0
            else np.zeros((geometry.n_strips, 0, n_z))
        )
    return InterfaceSurrogate(
        order=order,
        germ=germ,
        shared=shared,
        z_grid=z,
        time=t_end,
        base_field=base,
        mode_fields=modes,
    )


def build_interface_surrogate(
    geometry: InterfaceGeometry,
    per_strip_surrogates: list[StripSurrogate],
    lam: float,
    t_end: float,
    n_z: int = DEFAULT_N_Z,
    cfl: float = DEFAULT_CFL,
) -> InterfaceSurrogate:
    """Assemble and diffuse coefficient fields from univariate strip surrogates.

    Strips either share one germ variable (identical specs) or carry one
    private variable each (all names distinct).
    """
    if len(per_strip_surrogates) != geometry.n_strips:
        raise ValueError(f"need exactly {geometry.n_strips} strip surrogates")
    orders = {s.order for s in per_strip_surrogates}
    if len(orders) != 1:
        raise ValueError("strip surrogates must share the truncation order")
    if any(s.germ.dim != 1 for s in per_strip_surrogates):
        raise ValueError("interface assembly expects univariate strip germs")

    germs = [s.germ for s in per_strip_surrogates]
    names = [g.variables[0].name for g in germs]
    if all(g == germs[0] for g in germs):
        shared = True
        combined = germs[0]
    elif len(set(names)) == len(names):
        shared = False
        combined = GermSpec(tuple(g.variables[0] for g in germs))
    else:
        raise ValueError("strip germs must be all identical or all distinct by name")

    coeffs = np.stack([s.coeff_t_fluid[:, -1] for s in per_strip_surrogates])
    return assemble_interface_from_coeffs(
        geometry, coeffs, combined, shared, lam, t_end, n_z, cfl
    )


def evaluate_interface_batch(isurr: InterfaceSurrogate, xi: np.ndarray) -> np.ndarray:
    """Realized fields for standardized germ draws; shape (n_draws, n_z).

    ``xi`` has shape (n,) for a shared germ and (n, n_strips) for
    independent germs.
    """
    xi = np.asarray(xi, dtype=float)
    if isurr.order == 0:
        n = xi.shape[0]
        return np.broadcast_to(isurr.base_field, (n, isurr.base_field.shape[0])).copy()
    if isurr.shared:
        if xi.ndim != 1:
            raise ValueError("shared-germ surrogate expects xi of shape (n,)")
        design = hermite_design(isurr.order, xi)[:, 1:]  # (n, K)
        return isurr.base_field + design @ isurr.mode_fields
    if xi.ndim != 2 or xi.shape[1] != isurr.germ.dim:
        raise ValueError(f"expected xi of shape (n, {isurr.germ.dim})")
    n, n_strips = xi.shape
    order = isurr.order
    design = hermite_design(order, xi.ravel())[:, 1:].reshape(n, n_strips * order)
    modes = isurr.mode_fields.reshape(n_strips * order, -1)
    return isurr.base_field + design @ modes


def evaluate_interface_temperature(isurr: InterfaceSurrogate, xi) -> InterfaceField:
    """Realized T_h(., time) for a single standardized germ draw."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if isurr.shared:
        values = evaluate_interface_batch(isurr, xi[:1])[0]
    else:
        values = evaluate_interface_batch(isurr, xi[None, :])[0]
    return InterfaceField(z_grid=isurr.z_grid.copy(), values=values, time=isurr.time)
