"""Constrained samplers over a scalar parameter.

Four strategies for sampling a posterior restricted to a feasible set S:

* ``run_crw``: random-walk Metropolis with a hard feasibility indicator in
  the acceptance probability; every stored sample lies in S.
* ``run_chmc``: Hamiltonian Monte Carlo driven by a penalty-modified
  gradient; feasibility is recorded per sample but never enforced, so the
  chain may leave S (the penalty only discourages it).
* ``run_csvgd``: Stein variational gradient descent with an RBF kernel
  (median-bandwidth heuristic) and an AdaGrad-style step adaption; the
  penalty enters through the supplied gradient, particles are never
  rejected.
* ``run_projected_svgd``: gradient-step particles whose proposed positions
  are projected onto S each generation, so the ensemble is feasible at all
  times.

``postprocess_feasible`` filters a finished chain through a feasibility
oracle; the result keeps only feasible samples and is explicitly flagged as
no longer being a Markov chain.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MarkovChain",
    "ParticleHistory",
    "run_crw",
    "run_chmc",
    "run_csvgd",
    "run_projected_svgd",
    "postprocess_feasible",
    "interval_projection",
]


@dataclass(frozen=True)
class MarkovChain:
    """A finished chain plus per-sample bookkeeping.

    A rejected step stores the repeated previous sample with accepted=False.
    ``is_markov`` is False for post-processed (filtered) chains, which no
    longer have the Markov property.
    """

    samples: np.ndarray
    accepted: np.ndarray
    feasible: np.ndarray
    log_post: np.ndarray
    cumulative_seconds: np.ndarray
    seed: int
    config_snapshot: dict = field(default_factory=dict, compare=False)
    divergences: int = 0
    is_markov: bool = True
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        object.__setattr__(self, "accepted", np.asarray(self.accepted, dtype=bool))
        object.__setattr__(self, "feasible", np.asarray(self.feasible, dtype=bool))
        object.__setattr__(self, "log_post", np.asarray(self.log_post, dtype=float))
        object.__setattr__(
            self, "cumulative_seconds", np.asarray(self.cumulative_seconds, dtype=float)
        )
        n = self.samples.shape[0]
        for name in ("accepted", "feasible", "log_post", "cumulative_seconds"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} length does not match samples")

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted)) if len(self) else 0.0

    @property
    def feasible_fraction(self) -> float:
        return float(np.mean(self.feasible)) if len(self) else 0.0

    def to_csv(self, path: str) -> None:
        lines = ["index,theta,accepted,feasible,log_post,cumulative_seconds"]
        for i in range(len(self)):
            lines.append(
                f"{i},{float(self.samples[i])!r},{int(self.accepted[i])},"
                f"{int(self.feasible[i])},{float(self.log_post[i])!r},"
                f"{float(self.cumulative_seconds[i])!r}"
            )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class ParticleHistory:
    """Particle trajectories of an SVGD-style run.

    ``generations`` has shape (n_generations + 1, n_particles); row 0 is the
    initial ensemble. ``step_sizes`` records the base step per update.
    """

    generations: np.ndarray
    step_sizes: np.ndarray
    seed: int
    config_snapshot: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        gens = np.asarray(self.generations, dtype=float)
        if gens.ndim != 2:
            raise ValueError("generations must be a 2-d array (generation, particle)")
        object.__setattr__(self, "generations", gens)
        steps = np.asarray(self.step_sizes, dtype=float)
        if steps.shape[0] != gens.shape[0] - 1:
            raise ValueError("need one step size per update")
        object.__setattr__(self, "step_sizes", steps)

    @property
    def n_particles(self) -> int:
        return int(self.generations.shape[1])

    @property
    def n_generations(self) -> int:
        return int(self.generations.shape[0] - 1)

    @property
    def final(self) -> np.ndarray:
        return self.generations[-1]

    def flatten(self, discard_fraction: float = 0.0) -> np.ndarray:
        """All particle positions after discarding an initial fraction of updates."""
        if not 0.0 <= discard_fraction < 1.0:
            raise ValueError("discard_fraction must be in [0, 1)")
        start = int(math.floor(discard_fraction * self.generations.shape[0]))
        return self.generations[start:].ravel()

    def to_csv(self, path: str) -> None:
        lines = ["generation,particle_index,theta"]
        for g in range(self.generations.shape[0]):
            for k in range(self.n_particles):
                lines.append(f"{g},{k},{float(self.generations[g, k])!r}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def run_crw(
    posterior,
    feasibility_oracle,
    proposal_std: float,
    n_samples: int,
    theta_init: float,
    seed: int,
) -> MarkovChain:
    """Random-walk Metropolis with acceptance chi_S(theta*) * min(1, ratio).

    A proposal outside S is rejected outright (the indicator factor), so
    every stored sample is feasible. Requires a feasible starting point.
    """
    if not proposal_std > 0.0:
        raise ValueError("proposal_std must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not feasibility_oracle(theta_init):
        raise ValueError(
            "theta_init is infeasible; run scan_feasible_boundary to locate "
            "the feasible set and pick a starting point inside it"
        )
    rng = np.random.default_rng(seed)
    theta = float(theta_init)
    lp = float(posterior(theta))

    samples = np.empty(n_samples)
    accepted = np.zeros(n_samples, dtype=bool)
    log_post = np.empty(n_samples)
    seconds = np.empty(n_samples)
    t0 = time.perf_counter()
    for i in range(n_samples):
        proposal = theta + proposal_std * rng.standard_normal()
        if feasibility_oracle(proposal):
            lp_prop = float(posterior(proposal))
            if math.log(rng.random()) < lp_prop - lp:
                theta, lp = proposal, lp_prop
                accepted[i] = True
        samples[i] = theta
        log_post[i] = lp
        seconds[i] = time.perf_counter() - t0
    return MarkovChain(
        samples,
        accepted,
        np.ones(n_samples, dtype=bool),
        log_post,
        seconds,
        seed,
        config_snapshot={
            "sampler": "crw",
            "proposal_std": proposal_std,
            "n_samples": n_samples,
            "theta_init": theta_init,
            "seed": seed,
        },
    )


def _leapfrog(theta, momentum, grad, step, n_steps, mass):
    g = grad(theta)
    momentum = momentum + 0.5 * step * g
    for k in range(n_steps):
        theta = theta + step * momentum / mass
        g = grad(theta)
        if k < n_steps - 1:
            momentum = momentum + step * g
    momentum = momentum + 0.5 * step * g
    return theta, momentum


def run_chmc(
    posterior,
    penalized_grad,
    mass: float,
    step: float,
    max_leapfrog: int,
    n_samples: int,
    theta_init: float,
    seed: int,
    feasibility_oracle=None,
) -> MarkovChain:
    """HMC with a penalty-modified gradient; feasibility recorded, not enforced.

    Momentum is drawn from N(0, mass) and the leapfrog length uniformly from
    {1..max_leapfrog} each iteration. A non-finite Hamiltonian rejects the
    proposal and increments the divergence counter.
    """
    if not (mass > 0.0 and step > 0.0):
        raise ValueError("mass and step must be positive")
    if max_leapfrog < 1:
        raise ValueError("max_leapfrog must be >= 1")
    rng = np.random.default_rng(seed)
    theta = float(theta_init)
    lp = float(posterior(theta))
    mom_std = math.sqrt(mass)

    samples = np.empty(n_samples)
    accepted = np.zeros(n_samples, dtype=bool)
    log_post = np.empty(n_samples)
    seconds = np.empty(n_samples)
    divergences = 0
    t0 = time.perf_counter()
    for i in range(n_samples):
        momentum = mom_std * rng.standard_normal()
        n_leap = int(rng.integers(1, max_leapfrog + 1))
        h_old = -lp + momentum**2 / (2.0 * mass)
        theta_new, mom_new = _leapfrog(theta, momentum, penalized_grad, step, n_leap, mass)
        if math.isfinite(theta_new) and math.isfinite(mom_new):
            lp_new = float(posterior(theta_new))
            h_new = -lp_new + mom_new**2 / (2.0 * mass)
        else:
            h_new = math.inf
        if not math.isfinite(h_new):
            divergences += 1
        elif math.log(rng.random()) < h_old - h_new:
            theta, lp = theta_new, lp_new
            accepted[i] = True
        samples[i] = theta
        log_post[i] = lp
        seconds[i] = time.perf_counter() - t0

    if feasibility_oracle is None:
        feasible = np.ones(n_samples, dtype=bool)
    else:
        feasible = np.fromiter(
            (bool(feasibility_oracle(t)) for t in samples), dtype=bool, count=n_samples
        )
    return MarkovChain(
        samples,
        accepted,
        feasible,
        log_post,
        seconds,
        seed,
        config_snapshot={
            "sampler": "chmc",
            "mass": mass,
            "step": step,
            "max_leapfrog": max_leapfrog,
            "n_samples": n_samples,
            "theta_init": theta_init,
            "seed": seed,
        },
        divergences=divergences,
    )


def _stein_direction(particles: np.ndarray, grads: np.ndarray, bandwidth_mode) -> np.ndarray:
    sq_dists = (particles[:, None] - particles[None, :]) ** 2
    if bandwidth_mode == "median":
        h = float(np.median(sq_dists)) / math.log(particles.size + 1)
        if h <= 0.0:
            h = 1.0
    else:
        h = float(bandwidth_mode)
        if h <= 0.0:
            raise ValueError("kernel bandwidth must be positive")
    kernel = np.exp(-sq_dists / h)
    attraction = kernel @ grads
    repulsion = (2.0 / h) * (particles * kernel.sum(axis=1) - kernel @ particles)
    return (attraction + repulsion) / particles.size


def run_csvgd(
    log_post_gradient_penalized,
    n_particles: int,
    n_generations: int,
    initial_particles=None,
    kernel_bandwidth_mode="median",
    step_schedule=0.1,
    seed: int = 0,
    adagrad_decay: float = 0.9,
    adagrad_fudge: float = 1e-6,
) -> ParticleHistory:
    """Stein variational descent with penalized gradients.

    The gradient callable receives the whole particle array and returns the
    per-particle gradient array. All kernel terms are computed from the
    frozen generation state and the update is applied synchronously. Step
    adaption follows the AdaGrad-with-momentum rule of the reference SVGD
    implementation: the first generation seeds the accumulator with the
    squared direction, later generations decay it.
    """
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    if n_generations < 1:
        raise ValueError("n_generations must be >= 1")
    rng = np.random.default_rng(seed)
    if initial_particles is None:
        particles = rng.standard_normal(n_particles)
    else:
        particles = np.asarray(initial_particles, dtype=float).copy()
        if particles.shape != (n_particles,):
            raise ValueError("initial_particles must have shape (n_particles,)")

    generations = np.empty((n_generations + 1, n_particles))
    generations[0] = particles
    steps = np.empty(n_generations)
    accumulator = None
    for gen in range(n_generations):
        base = float(step_schedule(gen)) if callable(step_schedule) else float(step_schedule)
        grads = np.asarray(log_post_gradient_penalized(particles), dtype=float)
        direction = _stein_direction(particles, grads, kernel_bandwidth_mode)
        if accumulator is None:
            accumulator = direction**2
        else:
            accumulator = adagrad_decay * accumulator + (1.0 - adagrad_decay) * direction**2
        particles = particles + base * direction / (adagrad_fudge + np.sqrt(accumulator))
        generations[gen + 1] = particles
        steps[gen] = base
    return ParticleHistory(
        generations,
        steps,
        seed,
        config_snapshot={
            "sampler": "csvgd",
            "n_particles": n_particles,
            "n_generations": n_generations,
            "kernel_bandwidth_mode": str(kernel_bandwidth_mode),
            "seed": seed,
        },
    )


def interval_projection(intervals):
    """Clamp projector onto a union of closed intervals (nearest point).

    Returns a callable mapping scalars or arrays onto the feasible set.
    """
    spans = tuple((float(lo), float(hi)) for lo, hi in intervals)
    if not spans:
        raise ValueError("cannot project onto an empty feasible set")
    for lo, hi in spans:
        if not lo <= hi:
            raise ValueError("interval endpoints must satisfy lo <= hi")

    def project(theta):
        arr = np.asarray(theta, dtype=float)
        candidates = np.stack([np.clip(arr, lo, hi) for lo, hi in spans])
        best = np.argmin(np.abs(candidates - arr), axis=0)
        out = np.take_along_axis(candidates, best[None, ...], axis=0)[0]
        if np.isscalar(theta) or getattr(theta, "ndim", 1) == 0:
            return float(out)
        return out

    return project


def run_projected_svgd(
    log_post_gradient,
    projection_onto_S,
    n_particles: int,
    n_generations: int,
    initial_particles=None,
    step_size: float = 0.1,
    seed: int = 0,
) -> ParticleHistory:
    """Particles take gradient steps whose targets are projected onto S.

    Per particle: y = theta + grad log pi(theta), d = Pr(y) - theta, then
    theta <- theta + step * d. Initial particles are projected first, and
    the update is re-projected as a safeguard for non-convex S, so every
    recorded generation is feasible.
    """
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    if n_generations < 1:
        raise ValueError("n_generations must be >= 1")
    rng = np.random.default_rng(seed)
    if initial_particles is None:
        particles = rng.standard_normal(n_particles)
    else:
        particles = np.asarray(initial_particles, dtype=float).copy()
        if particles.shape != (n_particles,):
            raise ValueError("initial_particles must have shape (n_particles,)")
    particles = np.asarray(projection_onto_S(particles), dtype=float)

    generations = np.empty((n_generations + 1, n_particles))
    generations[0] = particles
    steps = np.full(n_generations, float(step_size))
    for gen in range(n_generations):
        grads = np.asarray(log_post_gradient(particles), dtype=float)
        targets = np.asarray(projection_onto_S(particles + grads), dtype=float)
        particles = particles + step_size * (targets - particles)
        particles = np.asarray(projection_onto_S(particles), dtype=float)
        generations[gen + 1] = particles
    return ParticleHistory(
        generations,
        steps,
        seed,
        config_snapshot={
            "sampler": "projected_svgd",
            "n_particles": n_particles,
            "n_generations": n_generations,
            "step_size": step_size,
            "seed": seed,
        },
    )


def postprocess_feasible(chain: MarkovChain, feasibility_oracle) -> MarkovChain:
    """Keep only feasible samples; the result is flagged as not a Markov chain."""
    mask = np.fromiter(
        (bool(feasibility_oracle(t)) for t in chain.samples), dtype=bool, count=len(chain)
    )
    kept = int(mask.sum())
    metadata = dict(chain.metadata)
    metadata.update(
        {
            "postprocessed": True,
            "original_length": len(chain),
            "removed": len(chain) - kept,
        }
    )
    return MarkovChain(
        chain.samples[mask],
        chain.accepted[mask],
        np.ones(kept, dtype=bool),
        chain.log_post[mask],
        chain.cumulative_seconds[mask],
        chain.seed,
        config_snapshot=dict(chain.config_snapshot),
        divergences=chain.divergences,
        is_markov=False,
        metadata=metadata,
    )
