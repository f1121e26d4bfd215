"""Priors, synthetic observations, likelihood, posterior, and gradients.

The observable is the interface pressure F(theta) = p(x=1; Re=theta)
evaluated with the uncertain inputs frozen at their means. Observations may
come in several groups (e.g. sensors over sections with different porosity);
each group carries its own evaluation point and noise level, and the log
likelihood is additive across groups.

The per-group log likelihood is

    -log(sqrt(2*pi)*sigma) - 1/(2*N*sigma^2) * sum_i (f_i - F(theta))^2

with the 1/N inside the exponent, which tempers the data misfit by the group
size. ``classic_iid=True`` switches to the standard product-of-Gaussians form
-N*log(sqrt(2*pi)*sigma) - 1/(2*sigma^2) * sum_i (...)^2.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .porous_flow import (
    ModelParams,
    NonFiniteStateError,
    SingularDenominatorError,
    forward_pressure_at_mean,
)

_FORWARD_FAILURES = (SingularDenominatorError, NonFiniteStateError)

DEFAULT_UNIFORM_FLOOR = 1e-300
DEFAULT_FD_STEP = 1e-3


@dataclass(frozen=True)
class PriorSpec:
    """Scalar prior over theta: gaussian(mean, std) or uniform(low, high).

    The uniform density outside [low, high] is not zero but a tiny floor
    ``floor`` so that log-domain arithmetic stays finite and out-of-support
    proposals are rejected by magnitude rather than by NaN.
    """

    kind: str
    mean: float = 0.0
    std: float = 1.0
    low: float = 0.0
    high: float = 1.0
    floor: float = DEFAULT_UNIFORM_FLOOR

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "uniform"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kind == "gaussian" and not self.std > 0.0:
            raise ValueError("gaussian prior requires std > 0")
        if self.kind == "uniform" and not self.low < self.high:
            raise ValueError("uniform prior requires low < high")
        if not 0.0 < self.floor < 1.0:
            raise ValueError("floor must be in (0, 1)")

    def to_json(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "mean": self.mean, "std": self.std}
        return {"kind": "uniform", "low": self.low, "high": self.high, "floor": self.floor}

    @staticmethod
    def from_json(data: dict) -> "PriorSpec":
        kind = data["kind"]
        if kind == "gaussian":
            return PriorSpec("gaussian", mean=float(data["mean"]), std=float(data["std"]))
        return PriorSpec(
            "uniform",
            low=float(data["low"]),
            high=float(data["high"]),
            floor=float(data.get("floor", DEFAULT_UNIFORM_FLOOR)),
        )


@dataclass(frozen=True)
class ObservationGroup:
    """One batch of pressure observations sharing a forward evaluation point.

    ``heat_flux`` and ``porosity`` pin the non-inferred inputs for this group
    (germ means in the scenarios); None falls back to the model defaults.
    """

    label: str
    values: np.ndarray
    noise_std: float
    heat_flux: float | None = None
    porosity: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.atleast_1d(np.asarray(self.values, dtype=float)))
        if self.values.size == 0:
            raise ValueError("observation group must be nonempty")
        if not self.noise_std > 0.0:
            raise ValueError("noise_std must be positive")

    def evaluation_point(self, params: ModelParams) -> tuple[float, float]:
        q = params.heat_flux_nominal if self.heat_flux is None else self.heat_flux
        phi = params.porosity if self.porosity is None else self.porosity
        return (q, phi)


@dataclass(frozen=True)
class ObservationSet:
    groups: tuple[ObservationGroup, ...]
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "groups", tuple(self.groups))
        if not self.groups:
            raise ValueError("observation set must contain at least one group")
        labels = [g.label for g in self.groups]
        if len(set(labels)) != len(labels):
            raise ValueError("group labels must be unique")

    @property
    def n_total(self) -> int:
        return sum(g.values.size for g in self.groups)

    def merge(self, other: "ObservationSet") -> "ObservationSet":
        prov = {**self.provenance, **other.provenance}
        return ObservationSet(self.groups + other.groups, provenance=prov)

    def to_csv(self, path: str) -> None:
        lines = ["group,value"]
        for g in self.groups:
            lines.extend(f"{g.label},{float(v)!r}" for v in g.values)
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def save_provenance(self, path: str) -> None:
        meta = dict(self.provenance)
        meta["groups"] = [
            {
                "label": g.label,
                "n_obs": int(g.values.size),
                "noise_std": g.noise_std,
                "heat_flux": g.heat_flux,
                "porosity": g.porosity,
            }
            for g in self.groups
        ]
        with open(path, "w") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")


def generate_observations(
    params: ModelParams,
    theta_true: float,
    xi_true: tuple[float, float],
    noise_std: float,
    n_obs: int,
    seed: int,
    label: str = "obs",
    heat_flux: float | None = None,
    porosity: float | None = None,
) -> ObservationSet:
    """Synthetic pressures: one forward run at (theta*, xi*) plus white noise.

    ``xi_true`` is the (heat flux, porosity) pair the data are generated at;
    ``heat_flux``/``porosity`` are the evaluation point stored on the group
    for later likelihood calls (default: same as xi_true).
    """
    if n_obs < 1:
        raise ValueError("n_obs must be >= 1")
    truth = forward_pressure_at_mean(params, xi_true, theta_true)
    rng = np.random.default_rng(seed)
    values = truth + noise_std * rng.standard_normal(n_obs)
    group = ObservationGroup(
        label,
        values,
        noise_std,
        heat_flux=xi_true[0] if heat_flux is None else heat_flux,
        porosity=xi_true[1] if porosity is None else porosity,
    )
    provenance = {
        "theta_true": theta_true,
        "xi_true": list(xi_true),
        "noise_std": noise_std,
        "n_obs": n_obs,
        "seed": seed,
        "pressure_true": truth,
    }
    return ObservationSet((group,), provenance=provenance)


def _group_log_likelihood(
    group: ObservationGroup,
    theta: float,
    params: ModelParams,
    classic_iid: bool,
) -> float:
    pressure = forward_pressure_at_mean(params, group.evaluation_point(params), theta)
    residual_sq = float(np.sum((group.values - pressure) ** 2))
    n = group.values.size
    sigma = group.noise_std
    if classic_iid:
        return -n * math.log(math.sqrt(2.0 * math.pi) * sigma) - residual_sq / (2.0 * sigma**2)
    return -math.log(math.sqrt(2.0 * math.pi) * sigma) - residual_sq / (2.0 * n * sigma**2)


def log_likelihood(
    obs: ObservationSet,
    theta: float,
    params: ModelParams,
    classic_iid: bool = False,
) -> float:
    """Sum of per-group tempered Gaussian log likelihoods; -inf on forward failure."""
    if not theta > 0.0:  # also rejects NaN from diverged trajectories
        return -math.inf
    total = 0.0
    for group in obs.groups:
        try:
            total += _group_log_likelihood(group, theta, params, classic_iid)
        except _FORWARD_FAILURES:
            return -math.inf
    return total


def log_prior(theta: float, prior: PriorSpec) -> float:
    if prior.kind == "gaussian":
        z = (theta - prior.mean) / prior.std
        return -math.log(math.sqrt(2.0 * math.pi) * prior.std) - 0.5 * z * z
    if prior.low <= theta <= prior.high:
        return -math.log(prior.high - prior.low)
    return math.log(prior.floor)


def log_unconstrained_posterior(
    theta: float,
    obs: ObservationSet,
    prior: PriorSpec,
    params: ModelParams,
    classic_iid: bool = False,
) -> float:
    """Unnormalized log posterior without the feasibility indicator."""
    lp = log_prior(theta, prior)
    ll = log_likelihood(obs, theta, params, classic_iid=classic_iid)
    return lp + ll


def grad_log_posterior(
    theta: float,
    obs: ObservationSet,
    prior: PriorSpec,
    params: ModelParams,
    fd_step: float = DEFAULT_FD_STEP,
    classic_iid: bool = False,
) -> float:
    """d/dtheta of the unconstrained log posterior.

    The chain rule is applied analytically; only the pressure sensitivity
    dF/dtheta is numerical, via the one-sided difference (F(theta+h)-F(theta))/h
    computed per group at that group's evaluation point. Outside the physical
    domain (theta <= 0) or on forward failure the gradient is NaN, which a
    trajectory-based sampler treats as a divergence.
    """
    if not theta > 0.0:
        return math.nan
    if prior.kind == "gaussian":
        grad = -(theta - prior.mean) / prior.std**2
    else:
        grad = 0.0  # flat inside the support; the floor outside is flat too
    try:
        for group in obs.groups:
            point = group.evaluation_point(params)
            pressure = forward_pressure_at_mean(params, point, theta)
            pressure_h = forward_pressure_at_mean(params, point, theta + fd_step)
            dpressure = (pressure_h - pressure) / fd_step
            residual_sum = float(np.sum(group.values - pressure))
            n = group.values.size
            sigma = group.noise_std
            if classic_iid:
                grad += residual_sum * dpressure / sigma**2
            else:
                grad += residual_sum * dpressure / (n * sigma**2)
    except _FORWARD_FAILURES:
        return math.nan
    return grad


def feasible_direction(
    theta: float,
    intervals: tuple[tuple[float, float], ...] | None = None,
    probability_fn=None,
    probe_step: float = 1.0,
) -> float:
    """Sign (+1/-1) pointing from theta toward the feasible set.

    With interval-form S the direction is exact: toward the nearest interval.
    Otherwise the sign of a one-sided difference of the satisfaction
    probability is used. Returns 0.0 inside S or when no information is
    available.
    """
    if intervals:
        best = None
        for lo, hi in intervals:
            if lo <= theta <= hi:
                return 0.0
            dist = lo - theta if theta < lo else theta - hi
            if best is None or dist < best[0]:
                best = (dist, 1.0 if theta < lo else -1.0)
        return best[1]
    if probability_fn is not None:
        delta = probability_fn(theta + probe_step) - probability_fn(theta)
        if delta > 0.0:
            return 1.0
        if delta < 0.0:
            return -1.0
    return 0.0


def penalized_gradient(
    theta: float,
    base_gradient: float,
    feasible: bool,
    delta: float,
    direction: float = 1.0,
) -> float:
    """Gradient used by penalty samplers: unchanged in S, nudged toward S outside."""
    if feasible or delta == 0.0:
        return base_gradient
    return base_gradient + delta * direction
