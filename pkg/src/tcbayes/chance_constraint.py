"""Probabilistic feasibility of a parameter value through cheap surrogates.

The constraint P(f2(xi; theta) <= beta) >= alpha is estimated by plain Monte
Carlo over a chaos surrogate of f2 built at the given theta. Every
probability call redraws the same seeded germ sample, so probabilities are
deterministic and smooth in theta (common random numbers), which keeps the
bisection on the feasible boundary well behaved.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .gpc import GermSpec, StripSurrogate, hermite_design
from .heat_interface import InterfaceSurrogate, evaluate_interface_batch
from .porous_flow import NonFiniteStateError, SingularDenominatorError

__all__ = [
    "ChanceConstraintSpec",
    "F2Surrogate",
    "StripExitConstraint",
    "InterfaceMaxConstraint",
    "ChanceConstraintOracle",
    "FeasibilityScan",
    "satisfaction_probability",
    "is_feasible",
    "scan_feasible_boundary",
]

logger = logging.getLogger(__name__)

BUILD_FAILURES = (SingularDenominatorError, NonFiniteStateError)
DEFAULT_CACHE_QUANTUM = 1e-6
_EVAL_CHUNK = 8192


@dataclass(frozen=True)
class ChanceConstraintSpec:
    """Threshold beta, required probability alpha, and the MC budget."""

    beta: float
    alpha: float
    n_prob_samples: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.n_prob_samples < 1:
            raise ValueError("n_prob_samples must be >= 1")


class F2Surrogate:
    """Evaluable constraint functional at a fixed theta.

    Subclasses provide ``germ`` and ``f2_values``; ``probability`` is the
    fraction of draws satisfying f2 <= beta and may be overridden when the
    constraint aggregates differently (pointwise-per-z mode).
    """

    germ: GermSpec

    def f2_values(self, xi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def probability(self, xi: np.ndarray, beta: float) -> float:
        return float(np.mean(self.f2_values(xi) <= beta))


class StripExitConstraint(F2Surrogate):
    """f2 = fluid exit temperature T_f(x=1) of one strip surrogate."""

    def __init__(self, surrogate: StripSurrogate):
        self.surrogate = surrogate
        self.germ = surrogate.germ
        self._coeff = surrogate.coeff_t_fluid[..., -1]

    def f2_values(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        order = self.surrogate.order
        if self.germ.dim == 1:
            return hermite_design(order, xi[:, 0]) @ self._coeff
        d0 = hermite_design(order, xi[:, 0])
        d1 = hermite_design(order, xi[:, 1])
        return np.einsum("ni,ij,nj->n", d0, self._coeff, d1)


class InterfaceMaxConstraint(F2Surrogate):
    """f2 = max over z of the interface temperature at the constraint time.

    With ``pointwise=True`` the probability is instead the worst per-node
    satisfaction fraction min_z P(T(z) <= beta), the per-z reading of the
    constraint.
    """

    def __init__(self, isurr: InterfaceSurrogate, pointwise: bool = False):
        self.isurr = isurr
        self.germ = isurr.germ
        self.pointwise = pointwise

    def _draws(self, xi: np.ndarray) -> np.ndarray:
        if self.isurr.shared:
            return np.asarray(xi, dtype=float)[:, 0]
        return np.asarray(xi, dtype=float)

    def f2_values(self, xi: np.ndarray) -> np.ndarray:
        draws = self._draws(xi)
        n = draws.shape[0]
        out = np.empty(n)
        for lo in range(0, n, _EVAL_CHUNK):
            hi = min(lo + _EVAL_CHUNK, n)
            out[lo:hi] = evaluate_interface_batch(self.isurr, draws[lo:hi]).max(axis=1)
        return out

    def probability(self, xi: np.ndarray, beta: float) -> float:
        if not self.pointwise:
            return super().probability(xi, beta)
        draws = self._draws(xi)
        n = draws.shape[0]
        satisfied = np.zeros(self.isurr.z_grid.shape[0], dtype=np.int64)
        for lo in range(0, n, _EVAL_CHUNK):
            hi = min(lo + _EVAL_CHUNK, n)
            fields = evaluate_interface_batch(self.isurr, draws[lo:hi])
            satisfied += np.count_nonzero(fields <= beta, axis=0)
        return float(satisfied.min() / n)


def _germ_draws(germ: GermSpec, spec: ChanceConstraintSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    return rng.standard_normal((spec.n_prob_samples, germ.dim))


def satisfaction_probability(surrogate_f2: F2Surrogate, spec: ChanceConstraintSpec) -> float:
    """Fraction of seeded germ draws with f2 <= beta; deterministic per spec."""
    xi = _germ_draws(surrogate_f2.germ, spec)
    return surrogate_f2.probability(xi, spec.beta)


def is_feasible(theta: float, spec: ChanceConstraintSpec, surrogate_factory) -> bool:
    """Whether P(f2 <= beta) >= alpha at theta; build failures mean infeasible."""
    try:
        surrogate = surrogate_factory(theta)
    except BUILD_FAILURES as exc:
        logger.warning("surrogate build failed at theta=%s (%s); treating as infeasible", theta, exc)
        return False
    return satisfaction_probability(surrogate, spec) >= spec.alpha


class ChanceConstraintOracle:
    """Callable feasibility oracle with a quantized per-theta probability cache.

    Repeated chain visits to (nearly) the same theta reuse the cached
    probability; cache keys quantize theta so entries for equal keys are
    identical by determinism, making concurrent last-writer-wins insertion
    harmless. Build failures are cached as NaN (infeasible) and counted.
    """

    def __init__(
        self,
        spec: ChanceConstraintSpec,
        surrogate_factory,
        cache_quantum: float = DEFAULT_CACHE_QUANTUM,
    ):
        self.spec = spec
        self.surrogate_factory = surrogate_factory
        self.cache_quantum = cache_quantum
        self._probabilities: dict[int, float] = {}
        self.build_failures = 0
        self.evaluations = 0

    def _key(self, theta: float) -> int:
        return int(round(theta / self.cache_quantum))

    def probability(self, theta: float) -> float:
        key = self._key(theta)
        cached = self._probabilities.get(key)
        if cached is not None:
            return cached
        self.evaluations += 1
        try:
            surrogate = self.surrogate_factory(theta)
            prob = satisfaction_probability(surrogate, self.spec)
        except BUILD_FAILURES as exc:
            self.build_failures += 1
            logger.warning(
                "surrogate build failed at theta=%s (%s); treating as infeasible", theta, exc
            )
            prob = float("nan")
        self._probabilities[key] = prob
        return prob

    def __call__(self, theta: float) -> bool:
        return bool(self.probability(theta) >= self.spec.alpha)


@dataclass(frozen=True)
class FeasibilityScan:
    """Feasible set estimate plus the probability table behind it."""

    intervals: tuple[tuple[float, float], ...]
    thetas: np.ndarray
    probabilities: np.ndarray
    feasible: np.ndarray
    tol: float

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["theta", "probability", "feasible"])
            for theta, prob, feas in zip(self.thetas, self.probabilities, self.feasible):
                writer.writerow([repr(float(theta)), repr(float(prob)), int(feas)])


def scan_feasible_boundary(
    theta_range: tuple[float, float],
    spec: ChanceConstraintSpec,
    surrogate_factory,
    tol: float = 0.5,
    n_coarse: int = 33,
) -> FeasibilityScan:
    """Locate the feasible set on a range by coarse scan plus bisection.

    Each feasibility transition detected on the coarse grid is bisected to
    width ``tol``; interval endpoints are taken on the feasible side of the
    final bracket, so membership in a returned interval implies feasibility
    up to the scan resolution. A non-interval coarse pattern simply yields
    several intervals.
    """
    lo, hi = theta_range
    if not lo < hi:
        raise ValueError("theta_range must be an increasing pair")
    if n_coarse < 2:
        raise ValueError("n_coarse must be >= 2")
    oracle = (
        surrogate_factory
        if isinstance(surrogate_factory, ChanceConstraintOracle)
        else ChanceConstraintOracle(spec, surrogate_factory)
    )
    thetas = np.linspace(lo, hi, n_coarse)
    probs = np.array([oracle.probability(t) for t in thetas])
    feas = np.array([p >= spec.alpha for p in probs])

    def bisect(a: float, b: float) -> tuple[float, float]:
        # invariant: feasibility differs between a and b
        fa = oracle(a)
        while abs(b - a) > tol:
            mid = 0.5 * (a + b)
            if oracle(mid) == fa:
                a = mid
            else:
                b = mid
        return (a, b) if fa else (b, a)  # (feasible end, infeasible end)

    intervals: list[tuple[float, float]] = []
    start: float | None = thetas[0] if feas[0] else None
    for i in range(len(thetas) - 1):
        if feas[i] == feas[i + 1]:
            continue
        feasible_end, _ = bisect(thetas[i], thetas[i + 1])
        if feas[i]:
            intervals.append((start, feasible_end))
            start = None
        else:
            start = feasible_end
    if start is not None:
        intervals.append((start, thetas[-1]))
    return FeasibilityScan(
        intervals=tuple(intervals),
        thetas=thetas,
        probabilities=probs,
        feasible=feas,
        tol=tol,
    )
