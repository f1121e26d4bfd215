"""Command-line front end: configure a scenario, run pipelines, emit artifacts.

Subcommands
-----------
run               full pipeline: data, scan, chains, diagnostics, artifacts
simulate-forward  integrate one strip and write the trajectory CSV
build-surrogate   build (and cache) the surrogate at one Reynolds number
scan-feasible     locate the feasible Reynolds set and write the scan CSV
sample            run the configured sampler(s) and write chain CSVs
diagnose          recompute L2/Brooks-Gelman series from existing chain CSVs
compare           sampler-by-checkpoint table of L2 error and CPU seconds

Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or
arguments, 3 infeasible chain start (with a boundary hint). Configs are
strict JSON documents validated against the packaged schema; bare names
``model1``/``model2``/``model3`` resolve to the shipped scenario files.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from importlib import resources

import numpy as np

from . import __version__
from .diagnostics import (
    Histogram,
    ReferenceDensity,
    chain_histogram,
    default_checkpoints,
    diagnostics_summary,
    relative_l2_error,
)
from .gpc import SurrogateCache, build_strip_surrogate
from .porous_flow import integrate_strip
from .samplers import MarkovChain, ParticleHistory
from .scenario import ConfigError, Scenario, ScenarioConfig

CACHE_ENV = "TCBAYES_CACHE_DIR"
DEFAULT_CACHE_DIR = ".tcbayes-cache"
PACKAGED_SCENARIOS = ("model1", "model2", "model3")


class InfeasibleStartError(RuntimeError):
    """Chain started outside the feasible set; carries the scanned boundary."""


def packaged_config_text(name: str) -> str:
    return resources.files("tcbayes").joinpath("configs", f"{name}.json").read_text()


def resolve_config(path_or_name: str) -> ScenarioConfig:
    """Load a config from a file path or a shipped scenario name."""
    if os.path.exists(path_or_name):
        return ScenarioConfig.load(path_or_name)
    name = path_or_name[:-5] if path_or_name.endswith(".json") else path_or_name
    if name in PACKAGED_SCENARIOS:
        return ScenarioConfig.from_dict(json.loads(packaged_config_text(name)))
    raise ConfigError(
        f"config {path_or_name!r} is neither a file nor one of {PACKAGED_SCENARIOS}"
    )


def _apply_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    replacements = {}
    if getattr(args, "seed", None) is not None:
        replacements["seed"] = args.seed
    if getattr(args, "output", None) is not None:
        replacements["output_dir"] = args.output
    return dataclasses.replace(config, **replacements) if replacements else config


# ---------------------------------------------------------------------------
# artifact writers

def _write_json(payload: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_rows(path: str, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def write_trajectory_csv(trajectory, path: str) -> None:
    _write_rows(
        path,
        "x,t_fluid,t_solid,density,velocity",
        zip(
            trajectory.x_grid,
            trajectory.t_fluid,
            trajectory.t_solid,
            trajectory.density,
            trajectory.velocity,
        ),
    )


def write_field_csv(field, path: str) -> None:
    _write_rows(path, "z,temperature", zip(field.z_grid, field.values))


def _versions() -> dict:
    from importlib import metadata

    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "jsonschema": metadata.version("jsonschema"),
        "tcbayes": __version__,
    }


def load_chain_csv(path: str):
    """Read a chain or particle-history CSV back into its run type."""
    with open(path) as fh:
        header = fh.readline().strip()
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header == "index,theta,accepted,feasible,log_post,cumulative_seconds":
        return MarkovChain(
            samples=body[:, 1],
            accepted=body[:, 2].astype(bool),
            feasible=body[:, 3].astype(bool),
            log_post=body[:, 4],
            cumulative_seconds=body[:, 5],
            seed=-1,
            config_snapshot={"loaded_from": path},
        )
    if header == "generation,particle_index,theta":
        gens = body[:, 0].astype(int)
        n_gen = gens.max()
        n_particles = int((gens == 0).sum())
        generations = body[:, 2].reshape(n_gen + 1, n_particles)
        return ParticleHistory(
            generations=generations,
            step_sizes=np.zeros(n_gen),
            seed=-1,
            config_snapshot={"loaded_from": path},
        )
    raise ConfigError(f"unrecognized chain CSV header in {path}: {header!r}")


# ---------------------------------------------------------------------------
# diagnostics assembly

def _membership(intervals):
    def member(values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        ok = np.zeros(values.shape, dtype=bool)
        for lo, hi in intervals:
            ok |= (values >= lo) & (values <= hi)
        return ok

    return member


def _prefix_histogram(samples: np.ndarray, burn_in: float, n_bins, value_range) -> Histogram:
    drop = int(burn_in * samples.size)
    kept = samples[drop:]
    heights, edges = np.histogram(kept, bins=n_bins, range=value_range, density=True)
    return Histogram(edges, heights)


def particle_diagnostics(
    history: ParticleHistory,
    reference: ReferenceDensity | None,
    intervals,
    checkpoints=None,
    n_bins: int = 50,
    value_range=None,
    burn_in: float = 0.1,
) -> dict:
    """L2 series over generation checkpoints; sample count is particles x generations."""
    n_particles = history.n_particles
    total = n_particles * history.n_generations
    if checkpoints is None:
        checkpoints = default_checkpoints(total, start=n_particles)
    gen_seconds = history.config_snapshot.get("generation_seconds")
    l2_series = []
    for n in checkpoints:
        gen = max(1, int(round(n / n_particles)))
        if gen > history.n_generations:
            raise ConfigError(f"checkpoint {n} exceeds {total} recorded particle samples")
        prefix = history.generations[1 : gen + 1].ravel()
        error = None
        if reference is not None:
            error = relative_l2_error(
                _prefix_histogram(prefix, burn_in, n_bins, value_range), reference
            )
        cpu = gen_seconds[gen - 1] if gen_seconds is not None else None
        l2_series.append((gen * n_particles, error, cpu))
    recorded = history.generations[1:].ravel()
    feasible = _membership(intervals)(recorded)
    return {
        "l2_series": l2_series,
        "bg_series": None,
        "acceptance_rate": None,
        "infeasible_fraction": float(1.0 - feasible.mean()),
        "n_chains": 1,
        "n_samples": int(total),
    }


def _diagnostics_payload(scenario: Scenario, results, reference) -> dict:
    cfg = scenario.config
    burn = float(cfg.sampler["burn_in_fraction"])
    if isinstance(results[0], MarkovChain):
        return diagnostics_summary(
            results,
            reference=reference,
            checkpoints=cfg.diagnostics.checkpoints,
            n_bins=cfg.diagnostics.n_bins,
            value_range=cfg.theta_range(),
            burn_in=burn,
            confidence=cfg.diagnostics.confidence,
        )
    return particle_diagnostics(
        results[0],
        reference,
        scenario.intervals(),
        checkpoints=cfg.diagnostics.checkpoints,
        n_bins=cfg.diagnostics.n_bins,
        value_range=cfg.theta_range(),
        burn_in=burn,
    )


def _write_diagnostics(payload: dict, out_dir: str, artifacts: dict) -> None:
    path = os.path.join(out_dir, "diagnostics.json")
    _write_json(payload, path)
    artifacts["diagnostics"] = path
    if payload.get("l2_series"):
        l2_path = os.path.join(out_dir, "l2_series.csv")
        _write_rows(l2_path, "n_samples,l2_error,cpu_seconds", payload["l2_series"])
        artifacts["l2_series"] = l2_path
    if payload.get("bg_series"):
        bg_path = os.path.join(out_dir, "bg_series.csv")
        _write_rows(bg_path, "n_samples,ratio", payload["bg_series"])
        artifacts["bg_series"] = bg_path


def _point_estimate(result, burn_in: float) -> float:
    if isinstance(result, MarkovChain):
        drop = int(burn_in * len(result))
        return float(result.samples[drop:].mean())
    return float(result.flatten(burn_in).mean())


def _provenance(scenario: Scenario, command: str, jobs: int, artifacts: dict) -> dict:
    cfg = scenario.config
    return {
        "command": command,
        "config": cfg.raw,
        "master_seed": cfg.seed,
        "chain_seeds": scenario.chain_seeds(),
        "data_seed": cfg.data.seed,
        "constraint_seed": cfg.constraint.seed,
        "oracle_mode": cfg.oracle_mode,
        "theta_range": list(cfg.theta_range()),
        "feasible_intervals": [[float(a), float(b)] for a, b in scenario.intervals()],
        "jobs": jobs,
        "versions": _versions(),
        "artifacts": {
            k: [os.path.basename(p) for p in v] if isinstance(v, list) else os.path.basename(v)
            for k, v in artifacts.items()
        },
    }


def _render_plots(out_dir: str, artifacts: dict) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("plots skipped: matplotlib is not installed", file=sys.stderr)
        return
    hist = np.loadtxt(artifacts["histogram"], delimiter=",", skiprows=1, ndmin=2)
    ref = np.loadtxt(artifacts["reference"], delimiter=",", skiprows=1, ndmin=2)
    fig, ax = plt.subplots(figsize=(7, 4))
    widths = np.diff(hist[:, 0])
    width = widths[0] if widths.size else 1.0
    ax.bar(hist[:, 0], hist[:, 1], width=width, align="center", alpha=0.6, label="samples")
    ax.plot(ref[:, 0], ref[:, 1], color="k", lw=1.5, label="reference")
    ax.set_xlabel("Reynolds number")
    ax.set_ylabel("density")
    ax.legend()
    path = os.path.join(out_dir, "posterior.svg")
    fig.savefig(path)
    plt.close(fig)
    artifacts["posterior_plot"] = path
    if "field_constraint" in artifacts:
        fig, ax = plt.subplots(figsize=(7, 4))
        for key, label in (("field_initial", "t = 0"), ("field_constraint", "t = t_c")):
            data = np.loadtxt(artifacts[key], delimiter=",", skiprows=1, ndmin=2)
            ax.plot(data[:, 0], data[:, 1], label=label)
        ax.set_xlabel("z")
        ax.set_ylabel("temperature")
        ax.legend()
        path = os.path.join(out_dir, "field.svg")
        fig.savefig(path)
        plt.close(fig)
        artifacts["field_plot"] = path


# ---------------------------------------------------------------------------
# the full pipeline

def run_scenario(
    config_path: str,
    seed: int | None = None,
    jobs: int = 1,
    output_dir: str | None = None,
    plots: bool = False,
) -> dict:
    """Execute generate/build/sample/diagnose and write the artifact bundle.

    Returns a dict mapping artifact names to paths.
    """
    config = resolve_config(config_path)
    if seed is not None:
        config = dataclasses.replace(config, seed=seed)
    if output_dir is not None:
        config = dataclasses.replace(config, output_dir=output_dir)
    scenario = Scenario(config)
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    artifacts: dict[str, str] = {}

    obs = scenario.observations()
    obs.to_csv(os.path.join(out, "observations.csv"))
    obs.save_provenance(os.path.join(out, "observations.json"))
    artifacts["observations"] = os.path.join(out, "observations.csv")
    artifacts["observations_meta"] = os.path.join(out, "observations.json")

    scan = scenario.scan()
    scan.to_csv(os.path.join(out, "feasible_scan.csv"))
    artifacts["feasible_scan"] = os.path.join(out, "feasible_scan.csv")
    if not scan.intervals:
        raise RuntimeError("feasibility scan found no feasible Reynolds interval")

    results = _run_chains(scenario, jobs)
    if isinstance(results[0], MarkovChain):
        if len(results) == 1:
            paths = [os.path.join(out, "chain.csv")]
        else:
            paths = [os.path.join(out, f"chain_{i:02d}.csv") for i in range(len(results))]
        for result, path in zip(results, paths):
            result.to_csv(path)
        artifacts["chains"] = paths[0] if len(paths) == 1 else paths
    else:
        path = os.path.join(out, "particles.csv")
        results[0].to_csv(path)
        artifacts["chains"] = path

    reference = scenario.reference()
    reference.to_csv(os.path.join(out, "reference.csv"))
    artifacts["reference"] = os.path.join(out, "reference.csv")

    burn = float(config.sampler["burn_in_fraction"])
    histogram = chain_histogram(
        results[0],
        n_bins=config.diagnostics.n_bins,
        value_range=config.theta_range(),
        burn_in=burn,
    )
    histogram.to_csv(os.path.join(out, "histogram.csv"))
    artifacts["histogram"] = os.path.join(out, "histogram.csv")

    _write_diagnostics(_diagnostics_payload(scenario, results, reference), out, artifacts)

    if config.model in (2, 3):
        theta_hat = _point_estimate(results[0], burn)
        initial = scenario.mean_field_snapshot(theta_hat, t_end=0.0)
        constraint_time = scenario.mean_field_snapshot(theta_hat)
        write_field_csv(initial, os.path.join(out, "field_initial.csv"))
        write_field_csv(constraint_time, os.path.join(out, "field_constraint.csv"))
        artifacts["field_initial"] = os.path.join(out, "field_initial.csv")
        artifacts["field_constraint"] = os.path.join(out, "field_constraint.csv")

    if plots:
        _render_plots(out, artifacts)

    _write_json(_provenance(scenario, "run", jobs, artifacts), os.path.join(out, "provenance.json"))
    artifacts["provenance"] = os.path.join(out, "provenance.json")
    return artifacts


def _run_chains(scenario: Scenario, jobs: int):
    try:
        return scenario.run_all_chains(jobs=jobs)
    except ValueError as exc:
        if "scan_feasible_boundary" not in str(exc):
            raise
        intervals = ", ".join(f"[{a:.1f}, {b:.1f}]" for a, b in scenario.intervals())
        raise InfeasibleStartError(
            f"{exc} (scanned feasible interval(s): {intervals or 'none'}; "
            "set sampler.theta_init inside one)"
        ) from exc


# ---------------------------------------------------------------------------
# subcommand handlers

def _cmd_run(args) -> int:
    artifacts = run_scenario(
        args.config, seed=args.seed, jobs=args.jobs, output_dir=args.output, plots=args.plots
    )
    for name, path in sorted(artifacts.items()):
        print(f"{name}: {path}")
    return 0


def _cmd_simulate_forward(args) -> int:
    config = _apply_overrides(resolve_config(args.config), args)
    scenario = Scenario(config)
    theta = args.theta if args.theta is not None else scenario.theta_init()
    q = args.q if args.q is not None else scenario.default_flux()
    phi = args.phi if args.phi is not None else config.params.porosity
    trajectory = integrate_strip(config.params, q, phi, theta, n_steps=config.n_steps)
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "trajectory.csv")
    write_trajectory_csv(trajectory, path)
    pressure = trajectory.t_fluid[-1] * trajectory.density[-1]
    print(f"trajectory: {path}")
    print(
        f"exit state at Re={theta:g}: t_fluid={trajectory.t_fluid[-1]:.6f} "
        f"t_solid={trajectory.t_solid[-1]:.6f} pressure={pressure:.6f}"
    )
    return 0


def _cmd_build_surrogate(args) -> int:
    config = _apply_overrides(resolve_config(args.config), args)
    scenario = Scenario(config)
    theta = args.theta if args.theta is not None else scenario.theta_init()
    cache_dir = args.output or os.environ.get(CACHE_ENV, DEFAULT_CACHE_DIR)
    started = time.perf_counter()
    if config.model == 1:
        cache = SurrogateCache(cache_dir)
        key = SurrogateCache.key(
            config.params, config.germ, theta, config.order, config.n_quad, config.n_steps
        )
        cache.load_or_build(
            key,
            lambda: build_strip_surrogate(
                config.params, config.germ, theta, config.order, config.n_quad, config.n_steps
            ),
        )
        path = cache.path_for(key)
    else:
        isurr = scenario.interface_surrogate(theta)
        key = SurrogateCache.key(
            config.params, config.germ, theta, config.order, config.n_quad, config.n_steps
        )
        os.makedirs(cache_dir, exist_ok=True)
        path = os.path.join(cache_dir, f"interface_{key}.npz")
        np.savez(
            path,
            z_grid=isurr.z_grid,
            base_field=isurr.base_field,
            mode_fields=isurr.mode_fields,
            time=isurr.time,
            order=isurr.order,
            shared=isurr.shared,
            germ=json.dumps(config.germ.to_json()),
        )
    print(f"surrogate: {path} (built or reused in {time.perf_counter() - started:.2f}s)")
    return 0


def _cmd_scan_feasible(args) -> int:
    config = _apply_overrides(resolve_config(args.config), args)
    scenario = Scenario(config)
    scan = scenario.scan()
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "feasible_scan.csv")
    scan.to_csv(path)
    print(f"scan: {path}")
    if scan.intervals:
        text = ", ".join(f"[{a:.3f}, {b:.3f}]" for a, b in scan.intervals)
        print(f"feasible interval(s) within tolerance {scan.tol:g}: {text}")
    else:
        print("no feasible interval found in the scanned range")
    return 0


def _cmd_sample(args) -> int:
    config = _apply_overrides(resolve_config(args.config), args)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    scenario = Scenario(config)
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    results = _run_chains(scenario, args.jobs)
    artifacts: dict[str, str] = {}
    if isinstance(results[0], MarkovChain):
        for i, result in enumerate(results):
            name = "chain.csv" if len(results) == 1 else f"chain_{i:02d}.csv"
            path = os.path.join(out, name)
            result.to_csv(path)
            artifacts[f"chain_{i}"] = path
            print(
                f"{name}: {len(result)} samples, acceptance {result.acceptance_rate:.3f}, "
                f"feasible fraction {result.feasible_fraction:.3f}"
            )
    else:
        path = os.path.join(out, "particles.csv")
        results[0].to_csv(path)
        artifacts["particles"] = path
        print(
            f"particles.csv: {results[0].n_particles} particles x "
            f"{results[0].n_generations} generations"
        )
    _write_json(
        _provenance(scenario, "sample", args.jobs, artifacts),
        os.path.join(out, "provenance.json"),
    )
    return 0


def _cmd_diagnose(args) -> int:
    config = _apply_overrides(resolve_config(args.config), args)
    scenario = Scenario(config)
    runs = [load_chain_csv(p) for p in args.chains]
    reference = scenario.reference()
    burn = float(config.sampler["burn_in_fraction"])
    if all(isinstance(r, MarkovChain) for r in runs):
        try:
            payload = diagnostics_summary(
                runs,
                reference=reference,
                checkpoints=config.diagnostics.checkpoints,
                n_bins=config.diagnostics.n_bins,
                value_range=config.theta_range(),
                burn_in=burn,
                confidence=config.diagnostics.confidence,
            )
        except ValueError as exc:
            if "checkpoint" not in str(exc):
                raise
            # config checkpoints do not fit the loaded run: a usage error
            raise ConfigError(f"{exc} (chains have {min(len(r) for r in runs)} samples)")
    elif len(runs) == 1 and isinstance(runs[0], ParticleHistory):
        payload = particle_diagnostics(
            runs[0],
            reference,
            scenario.intervals(),
            checkpoints=config.diagnostics.checkpoints,
            n_bins=config.diagnostics.n_bins,
            value_range=config.theta_range(),
            burn_in=burn,
        )
    else:
        raise ConfigError("diagnose needs either chain CSVs or a single particle CSV")
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    artifacts: dict[str, str] = {}
    _write_diagnostics(payload, out, artifacts)
    for name, path in sorted(artifacts.items()):
        print(f"{name}: {path}")
    return 0


def _compare_sampler_blocks(config: ScenarioConfig, requested: list[str]) -> dict:
    compare_cfg = config.raw.get("compare", {})
    blocks = {
        kind: dict(block)
        for kind, block in compare_cfg.get("samplers", {}).items()
        if not kind.startswith("_")
    }
    own = dict(config.sampler)
    blocks.setdefault(own["kind"], own)
    out = {}
    for kind in requested:
        if kind not in blocks:
            raise ConfigError(
                f"no hyperparameters for sampler {kind!r}; add them under compare.samplers"
            )
        block = dict(blocks[kind])
        block["kind"] = kind
        out[kind] = block
    return out


def _compare_row(scenario: Scenario, result, checkpoint: int, reference) -> tuple:
    cfg = scenario.config
    burn = float(cfg.sampler["burn_in_fraction"])
    n_bins = cfg.diagnostics.n_bins
    value_range = cfg.theta_range()
    if isinstance(result, MarkovChain):
        if checkpoint > len(result):
            raise ConfigError(
                f"checkpoint {checkpoint} exceeds the {len(result)}-sample chain"
            )
        hist = _prefix_histogram(result.samples[:checkpoint], burn, n_bins, value_range)
        cpu = float(result.cumulative_seconds[checkpoint - 1])
        return (checkpoint, relative_l2_error(hist, reference), cpu)
    gen = max(1, int(round(checkpoint / result.n_particles)))
    if gen > result.n_generations:
        raise ConfigError(
            f"checkpoint {checkpoint} exceeds {result.n_particles * result.n_generations} "
            "recorded particle samples"
        )
    prefix = result.generations[1 : gen + 1].ravel()
    hist = _prefix_histogram(prefix, burn, n_bins, value_range)
    seconds = result.config_snapshot.get("generation_seconds")
    cpu = float(seconds[gen - 1]) if seconds is not None else None
    return (checkpoint, relative_l2_error(hist, reference), cpu)


def _cmd_compare(args) -> int:
    config = _apply_overrides(resolve_config(args.config), args)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    requested = [s.strip() for s in args.samplers.split(",") if s.strip()]
    if not requested:
        raise ConfigError("--samplers must name at least one sampler")
    blocks = _compare_sampler_blocks(config, requested)
    if args.checkpoints:
        checkpoints = [int(c) for c in args.checkpoints.split(",")]
    else:
        configured = config.raw.get("compare", {}).get("checkpoints")
        checkpoints = list(configured or config.diagnostics.checkpoints or ())
    if not checkpoints:
        raise ConfigError("no checkpoints: pass --checkpoints or set diagnostics.checkpoints")
    if sorted(checkpoints) != checkpoints or len(set(checkpoints)) != len(checkpoints):
        raise ConfigError("checkpoints must be strictly increasing")

    base = Scenario(config)
    reference = base.reference()
    rows = []
    for kind in requested:
        runner = base.with_sampler(blocks[kind])
        result = runner.run_chain(config.seed)
        for checkpoint in checkpoints:
            n, err, cpu = _compare_row(runner, result, checkpoint, reference)
            rows.append((kind, n, err, cpu))
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "compare.csv")
    with open(path, "w") as fh:
        fh.write("sampler,n_samples,l2_error,cpu_seconds\n")
        for kind, n, err, cpu in rows:
            cpu_text = "" if cpu is None else repr(float(cpu))
            fh.write(f"{kind},{n},{float(err)!r},{cpu_text}\n")
    print(f"compare: {path}")
    print(f"{'sampler':<16}{'n_samples':>10}{'l2_error':>12}{'cpu_s':>10}")
    for kind, n, err, cpu in rows:
        cpu_text = "-" if cpu is None else f"{cpu:.2f}"
        print(f"{kind:<16}{n:>10}{err:>12.4f}{cpu_text:>10}")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcbayes",
        description="Chance-constrained Bayesian inversion of a transpiration-cooling model.",
    )
    parser.add_argument("--version", action="version", version=f"tcbayes {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text, seed=True, jobs=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="config path or shipped scenario name")
        p.add_argument("--output", help="output directory (overrides config output_dir)")
        if seed:
            p.add_argument("--seed", type=int, help="master seed (overrides config seed)")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, help="concurrent chains")
        p.set_defaults(handler=handler)
        return p

    p = add("run", _cmd_run, "full pipeline with all artifacts", jobs=True)
    p.add_argument("--plots", action="store_true", help="also render SVG plots")

    p = add("simulate-forward", _cmd_simulate_forward, "integrate one strip", seed=False)
    p.add_argument("--theta", type=float, help="Reynolds number (default: sampler start)")
    p.add_argument("--q", type=float, help="heat flux (default: scenario flux)")
    p.add_argument("--phi", type=float, help="porosity (default: model porosity)")

    p = add("build-surrogate", _cmd_build_surrogate, "build and cache a surrogate", seed=False)
    p.add_argument("--theta", type=float, help="Reynolds number (default: sampler start)")

    add("scan-feasible", _cmd_scan_feasible, "scan the feasible Reynolds set", seed=False)
    add("sample", _cmd_sample, "run the configured sampler", jobs=True)

    p = add("diagnose", _cmd_diagnose, "recompute diagnostics from chain CSVs", seed=False)
    p.add_argument("--chains", nargs="+", required=True, help="chain or particle CSV paths")

    p = add("compare", _cmd_compare, "sampler x checkpoint L2/CPU table")
    p.add_argument(
        "--samplers",
        default="crw,chmc,csvgd,projected_svgd",
        help="comma-separated sampler kinds",
    )
    p.add_argument("--checkpoints", help="comma-separated sample counts")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleStartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
