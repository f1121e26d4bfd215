"""Scenario assembly: parse a config file and wire the full pipeline.

A scenario bundles the porous-strip physics, the uncertain-input germ, the
chance constraint, the prior/data model, and one sampler configuration. The
three shipped setups are

* model 1: one strip, bivariate germ (heat flux, porosity), pressure data
  from a single sensor group;
* model 2: a strip array over two porosity sections with one shared
  heat-flux germ, two sensor groups, and the transient interface
  temperature constraint;
* model 3: sixty strips with independent per-strip heat-flux germs.

Configuration is a single strict-schema JSON document; keys starting with
an underscore are ignored everywhere (notes). ``Scenario`` lazily builds
observations, constraint oracles, boundary scans, posterior closures, and
sampler runs from a validated ``ScenarioConfig``.
"""
from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass
from importlib import resources

import jsonschema
import numpy as np

from .bayes import (
    ObservationSet,
    PriorSpec,
    feasible_direction,
    generate_observations,
    grad_log_posterior,
    log_unconstrained_posterior,
    penalized_gradient,
)
from .chance_constraint import (
    ChanceConstraintOracle,
    ChanceConstraintSpec,
    FeasibilityScan,
    InterfaceMaxConstraint,
    StripExitConstraint,
    scan_feasible_boundary,
)
from .diagnostics import ReferenceDensity, reference_posterior
from .gpc import (
    DEFAULT_N_QUAD,
    DEFAULT_ORDER,
    GermSpec,
    GermVariable,
    build_strip_surrogate,
    build_strip_surrogate_batch,
)
from .heat_interface import (
    DEFAULT_CFL,
    DEFAULT_N_Z,
    InterfaceField,
    InterfaceGeometry,
    InterfaceSurrogate,
    assemble_interface_from_coeffs,
)
from .porous_flow import DEFAULT_N_STEPS, ModelParams
from .samplers import (
    interval_projection,
    run_chmc,
    run_crw,
    run_csvgd,
    run_projected_svgd,
)


class ConfigError(ValueError):
    """Raised when a scenario configuration fails schema or semantic checks."""


def _strip_notes(obj):
    if isinstance(obj, dict):
        return {k: _strip_notes(v) for k, v in obj.items() if not k.startswith("_")}
    if isinstance(obj, list):
        return [_strip_notes(v) for v in obj]
    return obj


def _load_schema() -> dict:
    text = resources.files("tcbayes").joinpath("config_schema.json").read_text()
    return json.loads(text)


def strip_flux_profile(rule: dict, n_strips: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-strip heat-flux germ means and stds from a generator rule.

    The sinusoidal rule modulates a base flux along the strip array:
    mean_i = base * (1 + amplitude * sin(2*pi*periods*(i+1/2)/n)).
    """
    if rule.get("rule") != "sinusoidal":
        raise ConfigError(f"unknown strip rule {rule.get('rule')!r}")
    base = float(rule["base_mean"])
    amplitude = float(rule["amplitude"])
    periods = float(rule.get("periods", 1.0))
    rel_std = float(rule["relative_std"])
    centers = (np.arange(n_strips) + 0.5) / n_strips
    means = base * (1.0 + amplitude * np.sin(2.0 * math.pi * periods * centers))
    if np.any(means <= 0.0):
        raise ConfigError("sinusoidal rule produced a nonpositive mean flux")
    return means, rel_std * means


@dataclass(frozen=True)
class DataConfig:
    theta_true: float | None
    noise_std: float | None
    n_obs: int
    seed: int
    groups: tuple[dict, ...]
    path: str | None


@dataclass(frozen=True)
class ScanConfig:
    theta_range: tuple[float, float] | None
    n_coarse: int = 33
    tol: float = 0.5


@dataclass(frozen=True)
class DiagnosticsConfig:
    n_bins: int = 50
    confidence: float = 0.95
    reference_nodes: int = 2000
    checkpoints: tuple[int, ...] | None = None


_SAMPLER_REQUIRED = {
    "crw": ("proposal_std", "n_samples"),
    "chmc": ("mass", "step", "max_leapfrog", "n_samples"),
    "csvgd": ("n_particles", "n_generations", "step_size"),
    "projected_svgd": ("n_particles", "n_generations", "step_size"),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario settings; ``raw`` keeps the original document."""

    model: int
    params: ModelParams
    germ: GermSpec
    strip_means: np.ndarray | None
    strip_stds: np.ndarray | None
    geometry: InterfaceGeometry | None
    n_z: int
    cfl: float
    order: int
    n_quad: int
    n_steps: int
    constraint: ChanceConstraintSpec
    oracle_mode: str
    pointwise: bool
    prior: PriorSpec
    data: DataConfig
    sampler: dict
    scan: ScanConfig
    diagnostics: DiagnosticsConfig
    seed: int
    output_dir: str
    classic_iid: bool
    raw: dict = dataclasses.field(compare=False, default_factory=dict)

    @staticmethod
    def load(path: str) -> "ScenarioConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return ScenarioConfig.from_dict(raw)

    @staticmethod
    def from_dict(raw: dict) -> "ScenarioConfig":
        validator = jsonschema.Draft7Validator(_load_schema())
        errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
        if errors:
            where = "/".join(str(p) for p in errors[0].absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {where}: {errors[0].message}")
        cfg = _strip_notes(raw)

        model = cfg["model"]
        params = ModelParams(**cfg.get("model_params", {}))

        germ_cfg = cfg["germ"]
        geometry = _parse_geometry(cfg.get("geometry"), model)
        germ, strip_means, strip_stds = _parse_germ(germ_cfg, model, geometry)

        surr = cfg.get("surrogate", {})
        order = int(surr.get("order", DEFAULT_ORDER))
        n_quad = int(surr.get("n_quad", DEFAULT_N_QUAD))
        n_steps = int(surr.get("n_steps", DEFAULT_N_STEPS))
        if n_quad < order + 1:
            raise ConfigError("surrogate n_quad must be at least order + 1")

        con = cfg["constraint"]
        constraint = ChanceConstraintSpec(
            beta=float(con["t_max"]),
            alpha=float(con["alpha"]),
            n_prob_samples=int(con.get("n_prob_samples", 100_000)),
            seed=int(con.get("seed", 0)),
        )
        oracle_mode = con.get("oracle", "interval")
        pointwise = bool(con.get("pointwise", False))

        prior = PriorSpec.from_json(cfg["prior"])
        data = _parse_data(cfg["data"])
        sampler = _parse_sampler(cfg["sampler"])

        scan_cfg = cfg.get("scan", {})
        theta_range = scan_cfg.get("theta_range")
        scan = ScanConfig(
            theta_range=tuple(theta_range) if theta_range is not None else None,
            n_coarse=int(scan_cfg.get("n_coarse", 33)),
            tol=float(scan_cfg.get("tol", 0.5)),
        )
        diag_cfg = cfg.get("diagnostics", {})
        checkpoints = diag_cfg.get("checkpoints")
        diagnostics = DiagnosticsConfig(
            n_bins=int(diag_cfg.get("n_bins", 50)),
            confidence=float(diag_cfg.get("confidence", 0.95)),
            reference_nodes=int(diag_cfg.get("reference_nodes", 2000)),
            checkpoints=tuple(checkpoints) if checkpoints is not None else None,
        )

        geo_cfg = cfg.get("geometry") or {}
        return ScenarioConfig(
            model=model,
            params=params,
            germ=germ,
            strip_means=strip_means,
            strip_stds=strip_stds,
            geometry=geometry,
            n_z=int(geo_cfg.get("n_z", DEFAULT_N_Z)),
            cfl=float(geo_cfg.get("cfl", DEFAULT_CFL)),
            order=order,
            n_quad=n_quad,
            n_steps=n_steps,
            constraint=constraint,
            oracle_mode=oracle_mode,
            pointwise=pointwise,
            prior=prior,
            data=data,
            sampler=sampler,
            scan=scan,
            diagnostics=diagnostics,
            seed=int(cfg.get("seed", 0)),
            output_dir=cfg.get("output_dir", f"runs/model{model}"),
            classic_iid=bool(cfg.get("classic_iid", False)),
            raw=raw,
        )

    def theta_range(self) -> tuple[float, float]:
        if self.scan.theta_range is not None:
            return self.scan.theta_range
        if self.prior.kind == "uniform":
            return (self.prior.low, self.prior.high)
        lo = self.prior.mean - 4.0 * self.prior.std
        hi = self.prior.mean + 4.0 * self.prior.std
        # Reynolds number is positive; a wide gaussian prior can reach below
        return (max(lo, 1.0), hi)


def _parse_geometry(geo_cfg: dict | None, model: int) -> InterfaceGeometry | None:
    if model == 1:
        if geo_cfg:
            raise ConfigError("model-1 configs must not carry geometry")
        return None
    if geo_cfg is None:
        geo_cfg = {}
    kwargs = {}
    for key in ("d1", "d2", "n_strips", "wall_temp", "diffusivity", "t_constraint"):
        if key in geo_cfg:
            kwargs[key] = geo_cfg[key]
    if "sections" in geo_cfg:
        kwargs["section_porosities"] = tuple(tuple(sec) for sec in geo_cfg["sections"])
    try:
        return InterfaceGeometry(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid geometry: {exc}") from exc


def _parse_germ(germ_cfg, model, geometry):
    has_q = "q" in germ_cfg
    has_phi = "phi" in germ_cfg
    has_strips = "strips" in germ_cfg
    if model == 1:
        if not (has_q and has_phi) or has_strips:
            raise ConfigError("model 1 requires germ variables 'q' and 'phi'")
        germ = GermSpec(
            (
                GermVariable("q", float(germ_cfg["q"]["mean"]), float(germ_cfg["q"]["std"])),
                GermVariable(
                    "phi", float(germ_cfg["phi"]["mean"]), float(germ_cfg["phi"]["std"])
                ),
            )
        )
        return germ, None, None
    if model == 2:
        if not has_q or has_phi or has_strips:
            raise ConfigError("model 2 requires exactly one shared germ variable 'q'")
        germ = GermSpec(
            (GermVariable("q", float(germ_cfg["q"]["mean"]), float(germ_cfg["q"]["std"])),)
        )
        return germ, None, None
    if not has_strips or has_q or has_phi:
        raise ConfigError("model 3 requires per-strip germ distributions under 'strips'")
    strips = germ_cfg["strips"]
    if isinstance(strips, dict):
        means, stds = strip_flux_profile(strips, geometry.n_strips)
    else:
        if len(strips) != geometry.n_strips:
            raise ConfigError(
                f"model 3 needs {geometry.n_strips} strip distributions, got {len(strips)}"
            )
        means = np.array([float(s["mean"]) for s in strips])
        stds = np.array([float(s["std"]) for s in strips])
    germ = GermSpec(
        tuple(
            GermVariable(f"q_{i:02d}", float(means[i]), float(stds[i]))
            for i in range(geometry.n_strips)
        )
    )
    return germ, means, stds


def _parse_data(data_cfg: dict) -> DataConfig:
    path = data_cfg.get("path")
    theta_true = data_cfg.get("theta_true")
    noise_std = data_cfg.get("noise_std")
    if path is None:
        missing = [k for k in ("theta_true", "noise_std") if data_cfg.get(k) is None]
        if missing:
            raise ConfigError(f"data block needs {missing} (or a 'path' to existing data)")
    groups = tuple(data_cfg.get("groups", ()))
    labels = [g["label"] for g in groups]
    if len(set(labels)) != len(labels):
        raise ConfigError("data group labels must be unique")
    return DataConfig(
        theta_true=float(theta_true) if theta_true is not None else None,
        noise_std=float(noise_std) if noise_std is not None else None,
        n_obs=int(data_cfg.get("n_obs", 10)),
        seed=int(data_cfg.get("seed", 0)),
        groups=groups,
        path=path,
    )


def _parse_sampler(sampler_cfg: dict) -> dict:
    kind = sampler_cfg["kind"]
    missing = [k for k in _SAMPLER_REQUIRED[kind] if k not in sampler_cfg]
    if missing:
        raise ConfigError(f"sampler '{kind}' requires {missing}")
    out = dict(sampler_cfg)
    out.setdefault("n_chains", 1)
    out.setdefault("burn_in_fraction", 0.1)
    out.setdefault("delta", 0.0)
    return out


def load_observations(csv_path: str, provenance_path: str | None = None) -> ObservationSet:
    """Read an observation CSV (group,value) with its provenance sidecar."""
    if provenance_path is None:
        provenance_path = csv_path.rsplit(".", 1)[0] + ".json"
    with open(provenance_path) as fh:
        meta = json.load(fh)
    values: dict[str, list[float]] = {}
    order: list[str] = []
    with open(csv_path) as fh:
        header = fh.readline().strip()
        if header != "group,value":
            raise ConfigError(f"unexpected observation CSV header: {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            label, value = line.split(",", 1)
            if label not in values:
                values[label] = []
                order.append(label)
            values[label].append(float(value))
    from .bayes import ObservationGroup

    groups = []
    group_meta = {g["label"]: g for g in meta.get("groups", [])}
    for label in order:
        info = group_meta.get(label)
        if info is None:
            raise ConfigError(f"observation group {label!r} missing from provenance")
        groups.append(
            ObservationGroup(
                label,
                np.array(values[label]),
                float(info["noise_std"]),
                heat_flux=info.get("heat_flux"),
                porosity=info.get("porosity"),
            )
        )
    provenance = {k: v for k, v in meta.items() if k != "groups"}
    return ObservationSet(tuple(groups), provenance=provenance)


class _TimeMarks:
    """Perf-counter marks taken once per particle generation."""

    def __init__(self):
        self.start = time.perf_counter()
        self.marks: list[float] = []

    def record(self):
        self.marks.append(time.perf_counter())

    def cumulative(self) -> list[float]:
        return [m - self.start for m in self.marks]


def _timed(grad):
    """Wrap a batched gradient so each call (one per generation) is timed."""
    marks = _TimeMarks()

    def wrapped(thetas):
        out = grad(thetas)
        marks.record()
        return out

    return wrapped, marks


class Scenario:
    """Lazily wired pipeline pieces for one validated configuration."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self._oracle: ChanceConstraintOracle | None = None
        self._scan: FeasibilityScan | None = None
        self._observations: ObservationSet | None = None
        self._reference: ReferenceDensity | None = None

    def with_sampler(self, sampler: dict) -> "Scenario":
        """Clone with a different sampler block, sharing the built caches."""
        clone = Scenario(dataclasses.replace(self.config, sampler=_parse_sampler(sampler)))
        clone._oracle = self._oracle
        clone._scan = self._scan
        clone._observations = self._observations
        clone._reference = self._reference
        return clone

    # constraint side ------------------------------------------------------

    def default_flux(self) -> float:
        cfg = self.config
        if cfg.model in (1, 2):
            return cfg.germ.variables[0].mean
        return cfg.params.heat_flux_nominal

    def surrogate_factory(self):
        """theta -> F2Surrogate for the configured model."""
        cfg = self.config
        if cfg.model == 1:
            def factory(theta: float) -> StripExitConstraint:
                surrogate = build_strip_surrogate(
                    cfg.params, cfg.germ, float(theta), cfg.order, cfg.n_quad, cfg.n_steps
                )
                return StripExitConstraint(surrogate)

            return factory

        geometry = cfg.geometry
        porosities = geometry.strip_porosities()
        if cfg.model == 2:
            qvar = cfg.germ.variables[0]
            distinct, inverse = np.unique(porosities, return_inverse=True)
            q_means = np.full(distinct.size, qvar.mean)
            q_stds = np.full(distinct.size, qvar.std)

            def factory(theta: float) -> InterfaceMaxConstraint:
                coeffs, _ = build_strip_surrogate_batch(
                    cfg.params, q_means, q_stds, distinct, float(theta),
                    cfg.order, cfg.n_quad, cfg.n_steps,
                )
                isurr = assemble_interface_from_coeffs(
                    geometry, coeffs[inverse], cfg.germ, True,
                    geometry.diffusivity, geometry.t_constraint, cfg.n_z, cfg.cfl,
                )
                return InterfaceMaxConstraint(isurr, cfg.pointwise)

            return factory

        def factory(theta: float) -> InterfaceMaxConstraint:
            coeffs, _ = build_strip_surrogate_batch(
                cfg.params, cfg.strip_means, cfg.strip_stds, porosities, float(theta),
                cfg.order, cfg.n_quad, cfg.n_steps,
            )
            isurr = assemble_interface_from_coeffs(
                geometry, coeffs, cfg.germ, False,
                geometry.diffusivity, geometry.t_constraint, cfg.n_z, cfg.cfl,
            )
            return InterfaceMaxConstraint(isurr, cfg.pointwise)

        return factory

    def oracle(self) -> ChanceConstraintOracle:
        if self._oracle is None:
            self._oracle = ChanceConstraintOracle(self.config.constraint, self.surrogate_factory())
        return self._oracle

    def scan(self) -> FeasibilityScan:
        if self._scan is None:
            self._scan = scan_feasible_boundary(
                self.config.theta_range(),
                self.config.constraint,
                self.oracle(),
                tol=self.config.scan.tol,
                n_coarse=self.config.scan.n_coarse,
            )
        return self._scan

    def intervals(self) -> tuple[tuple[float, float], ...]:
        return self.scan().intervals

    def feasibility(self):
        """In-chain feasibility test per the configured oracle mode.

        "surrogate" queries the probability oracle at every theta (cached by
        quantized value); "interval" freezes the scanned boundary and tests
        membership, which keeps samplers cheap.
        """
        if self.config.oracle_mode == "surrogate":
            return self.oracle()
        intervals = self.intervals()

        def member(theta: float) -> bool:
            return any(lo <= theta <= hi for lo, hi in intervals)

        return member

    # data and posterior ---------------------------------------------------

    def observations(self) -> ObservationSet:
        if self._observations is not None:
            return self._observations
        cfg = self.config
        data = cfg.data
        if data.path is not None:
            self._observations = load_observations(data.path)
            return self._observations
        groups = data.groups or ({"label": "obs"},)
        merged: ObservationSet | None = None
        for i, group in enumerate(groups):
            flux = float(group.get("heat_flux", self.default_flux()))
            porosity = float(group.get("porosity", cfg.params.porosity))
            obs = generate_observations(
                cfg.params,
                data.theta_true,
                (flux, porosity),
                float(group.get("noise_std", data.noise_std)),
                int(group.get("n_obs", data.n_obs)),
                data.seed + i,
                label=group["label"],
            )
            merged = obs if merged is None else merged.merge(obs)
        self._observations = merged
        return merged

    def log_posterior(self, theta: float) -> float:
        cfg = self.config
        return log_unconstrained_posterior(
            float(theta), self.observations(), cfg.prior, cfg.params, classic_iid=cfg.classic_iid
        )

    def grad_log_posterior(self, theta: float) -> float:
        cfg = self.config
        return grad_log_posterior(
            float(theta), self.observations(), cfg.prior, cfg.params, classic_iid=cfg.classic_iid
        )

    def penalized_grad(self, delta: float):
        """Scalar gradient with the feasibility penalty and prior-support guard."""
        feasibility = self.feasibility()
        intervals = self.intervals()
        prior = self.config.prior

        def grad(theta: float) -> float:
            base = self.grad_log_posterior(theta)
            direction = feasible_direction(theta, intervals=intervals)
            value = penalized_gradient(theta, base, bool(feasibility(theta)), delta, direction)
            if prior.kind == "uniform" and delta > 0.0:
                # keep penalty-driven particles from drifting past the support
                if theta > prior.high:
                    value -= delta
                elif theta < prior.low:
                    value += delta
            return value

        return grad

    def batched_grad(self, delta: float):
        grad = self.penalized_grad(delta) if delta > 0.0 else self.grad_log_posterior

        def batched(thetas: np.ndarray) -> np.ndarray:
            return np.array([grad(float(t)) for t in thetas])

        return batched

    def initial_particles(self, n: int, seed: int) -> np.ndarray:
        prior = self.config.prior
        rng = np.random.default_rng(seed)
        if prior.kind == "gaussian":
            return prior.mean + prior.std * rng.standard_normal(n)
        return rng.uniform(prior.low, prior.high, n)

    def reference(self) -> ReferenceDensity:
        if self._reference is None:
            lo, hi = self.config.theta_range()
            grid = np.linspace(lo, hi, self.config.diagnostics.reference_nodes)
            self._reference = reference_posterior(grid, self.log_posterior, self.feasibility())
        return self._reference

    # samplers ------------------------------------------------------------

    def theta_init(self) -> float:
        cfg = self.config
        if "theta_init" in cfg.sampler:
            return float(cfg.sampler["theta_init"])
        if cfg.data.theta_true is not None:
            return cfg.data.theta_true
        raise ConfigError("sampler needs theta_init (no data.theta_true to fall back on)")

    def run_chain(self, seed: int):
        """One sampler run with the given seed; chain or particle history."""
        cfg = self.config
        sampler = cfg.sampler
        kind = sampler["kind"]
        if kind == "crw":
            return run_crw(
                self.log_posterior,
                self.feasibility(),
                float(sampler["proposal_std"]),
                int(sampler["n_samples"]),
                self.theta_init(),
                seed,
            )
        if kind == "chmc":
            return run_chmc(
                self.log_posterior,
                self.penalized_grad(float(sampler["delta"])),
                float(sampler["mass"]),
                float(sampler["step"]),
                int(sampler["max_leapfrog"]),
                int(sampler["n_samples"]),
                self.theta_init(),
                seed,
                feasibility_oracle=self.feasibility(),
            )
        n_particles = int(sampler["n_particles"])
        initial = self.initial_particles(n_particles, seed)
        if kind == "csvgd":
            grad, marks = _timed(self.batched_grad(float(sampler["delta"])))
            history = run_csvgd(
                grad,
                n_particles,
                int(sampler["n_generations"]),
                initial_particles=initial,
                step_schedule=float(sampler["step_size"]),
                seed=seed,
            )
        else:
            grad, marks = _timed(self.batched_grad(0.0))
            history = run_projected_svgd(
                grad,
                interval_projection(self.intervals()),
                n_particles,
                int(sampler["n_generations"]),
                initial_particles=initial,
                step_size=float(sampler["step_size"]),
                seed=seed,
            )
        history.config_snapshot["generation_seconds"] = marks.cumulative()
        return history

    def chain_seeds(self) -> list[int]:
        n_chains = int(self.config.sampler["n_chains"])
        return [self.config.seed + i for i in range(n_chains)]

    def run_all_chains(self, jobs: int = 1):
        seeds = self.chain_seeds()
        if jobs <= 1 or len(seeds) == 1:
            return [self.run_chain(s) for s in seeds]
        from concurrent.futures import ThreadPoolExecutor

        # warm the lazy caches once so worker threads only read shared state
        self.observations()
        self.feasibility()
        with ThreadPoolExecutor(max_workers=min(jobs, len(seeds))) as pool:
            return list(pool.map(self.run_chain, seeds))

    # interface snapshots ---------------------------------------------------

    def interface_surrogate(self, theta: float, t_end: float | None = None) -> InterfaceSurrogate:
        """Interface expansion at one theta, diffused to t_end (models 2-3)."""
        cfg = self.config
        if cfg.model == 1:
            raise ConfigError("model 1 has no interface field")
        geometry = cfg.geometry
        if t_end is None:
            t_end = geometry.t_constraint
        porosities = geometry.strip_porosities()
        if cfg.model == 2:
            qvar = cfg.germ.variables[0]
            distinct, inverse = np.unique(porosities, return_inverse=True)
            coeffs, _ = build_strip_surrogate_batch(
                cfg.params,
                np.full(distinct.size, qvar.mean),
                np.full(distinct.size, qvar.std),
                distinct,
                float(theta),
                cfg.order,
                cfg.n_quad,
                cfg.n_steps,
            )
            coeffs = coeffs[inverse]
            shared = True
        else:
            coeffs, _ = build_strip_surrogate_batch(
                cfg.params, cfg.strip_means, cfg.strip_stds, porosities, float(theta),
                cfg.order, cfg.n_quad, cfg.n_steps,
            )
            shared = False
        return assemble_interface_from_coeffs(
            geometry, coeffs, cfg.germ, shared,
            geometry.diffusivity, t_end, cfg.n_z, cfg.cfl,
        )

    def mean_field_snapshot(self, theta: float, t_end: float | None = None) -> InterfaceField:
        """Interface temperature at the germ mean (all modes drop out)."""
        isurr = self.interface_surrogate(theta, t_end)
        return InterfaceField(isurr.z_grid, isurr.base_field.copy(), isurr.time)
