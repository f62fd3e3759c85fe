"""Batch front end: one subcommand per experiment family.

Grammar::

    stochlab <experiment> [--config FILE] [--seed U64] [--out DIR]
             [--replicas K] [key=value ...]

Every run resolves its configuration (defaults < config-file section <
command-line overrides), validates it, dispatches to the owning module,
and writes three kinds of artifact into the output directory: a CSV table
of result rows, a JSON scalar summary with stable key order, and a
``manifest.json`` echoing the full resolved configuration together with
SHA-256 digests of every emitted data file.  Reruns from a manifest's
echoed configuration reproduce the data files byte for byte — timestamps
live only in the manifest itself.

Exit codes: 0 success, 2 invalid configuration or usage, 3 runtime
failure (e.g. integrator blow-up), with a diagnostic on stderr.

``--replicas K`` fans the experiment out over K independent substreams of
the seed; rows gain a leading ``replica`` column and are merged in replica
order, and the JSON summary becomes a per-replica list.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .core import (RngStream, clt_scaling, fit_power_law, mc_integrate,
                   periodogram)
from .diffusion import WalkSpec, convergence_scan
from .memory import (AnnealSchedule, SpinConfig, flip_spins,
                     ground_state_bruteforce, hebbian_couplings, overlap,
                     simulated_annealing, sk_couplings, zero_t_dynamics)
from .networks import (barabasi_albert, edge_list_text, small_world_scan,
                       watts_strogatz)
from .paths import (EuclideanAction, Lattice, hausdorff_scan,
                    metropolis_sample, resolution_ladder)
from .quantum import (ComplexAmplitude, DecayModel, Grid1D, WaveState,
                      decay_sample, spectrum_gaps, superpose,
                      uncertainty_product)
from .resonance import DoubleWellSpec, resonance_scan
from .sandpile import SandGrid, abelian_check, avalanche_ccdf, drive
from .search import strategy_tournament

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunManifest",
    "EXPERIMENTS",
    "validate",
    "run",
    "rerun",
    "main",
]


class ConfigError(ValueError):
    """Raised by :func:`run` when the configuration fails validation."""


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully-specified run request.

    ``parameters`` may hold raw strings (from the command line or a config
    file) or typed values (from the API or a manifest echo); resolution
    applies the per-experiment schema either way.
    """

    experiment: str
    parameters: dict
    seed: int = 0
    output_dir: str = "."
    replicas: int = 1


@dataclass(frozen=True)
class RunManifest:
    experiment: str
    parameters: dict
    seed: int
    replicas: int
    output_dir: str
    artifact_version: str
    started: str
    finished: str
    outputs: tuple
    path: str


@dataclass(frozen=True)
class _RunOutput:
    header: tuple
    rows: list
    summary: dict
    extra_files: dict


# --------------------------------------------------------------------------
# parameter schema machinery


@dataclass(frozen=True)
class _Param:
    convert: Callable
    default: object
    check: Callable
    constraint: str


def _to_int(value) -> int:
    if isinstance(value, bool):
        raise ValueError("expected an integer")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if value.is_integer():
            return int(value)
        raise ValueError("expected an integer")
    return int(str(value).strip())


def _to_float(value) -> float:
    if isinstance(value, bool):
        raise ValueError("expected a number")
    return float(value)


def _to_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "1", "yes", "on"):
        return True
    if text in ("false", "0", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _to_floats(value) -> tuple:
    if isinstance(value, str):
        parts = [part for part in value.split(",") if part.strip()]
        return tuple(float(part) for part in parts)
    return tuple(float(v) for v in value)


def _to_ints(value) -> tuple:
    if isinstance(value, str):
        parts = [part for part in value.split(",") if part.strip()]
        return tuple(_to_int(part) for part in parts)
    return tuple(_to_int(v) for v in value)


def _to_str(value) -> str:
    return str(value)


def _finite(v) -> bool:
    return math.isfinite(v)


def _positive(v) -> bool:
    return math.isfinite(v) and v > 0


def _choice(*names):
    return lambda v: v in names


_TRUE = lambda v: True  # noqa: E731 - trivially-true check reads best inline


def _f(default, check=_finite, constraint="must be a finite number"):
    return _Param(_to_float, default, check, constraint)


def _i(default, check, constraint):
    return _Param(_to_int, default, check, constraint)


EXPERIMENTS: dict = {
    "interfere": {
        "a_re": _f(1.0), "a_im": _f(0.0), "b_re": _f(1.0), "b_im": _f(0.0),
    },
    "decay": {
        "rate_lambda": _f(1.0, _positive, "must be positive"),
        "n_atoms": _i(10_000, lambda v: v >= 1, "must be at least 1"),
        "t_max": _f(5.0, _positive, "must be positive"),
        "bins": _i(50, lambda v: v >= 2, "must be at least 2"),
    },
    "uncertainty": {
        "n_states": _i(1000, lambda v: v >= 1, "must be at least 1"),
        "n_points": _i(64, lambda v: v >= 2, "must be at least 2"),
        "x_min": _f(-8.0), "x_max": _f(8.0),
        "sigma0": _f(1.0, _positive, "must be positive (Gaussian width)"),
    },
    "spectrum": {
        "potential": _Param(_to_str, "harmonic",
                            _choice("harmonic", "quartic", "box"),
                            "must be one of: harmonic, quartic, box"),
        "n_levels": _i(6, lambda v: v >= 2, "must be at least 2"),
        "n_points": _i(400, lambda v: v >= 2, "must be at least 2"),
        "x_min": _f(-8.0), "x_max": _f(8.0),
        "commuting": _Param(_to_bool, False, _TRUE, ""),
    },
    "paths": {
        "potential": _Param(_to_str, "free", _choice("free", "harmonic"),
                            "must be one of: free, harmonic"),
        "n_t": _i(256, lambda v: v >= 3, "must be at least 3"),
        "a_t": _f(0.05, _positive, "must be positive"),
        "sweeps": _i(10_000, lambda v: v >= 2, "must be at least 2"),
        "thermalization": _i(1000, lambda v: v >= 0, "must be nonnegative"),
        "chains": _i(16, lambda v: v >= 1, "must be at least 1"),
    },
    "diffuse": {
        "dim": _i(1, lambda v: 1 <= v <= 3, "must be 1, 2, or 3"),
        "a_s": _f(0.5, _positive, "must be positive"),
        "a_t": _f(0.125, _positive, "must be positive"),
        "n_walkers": _i(1_000_000, lambda v: v >= 1, "must be at least 1"),
        "n_steps": _i(8, lambda v: v >= 1, "must be at least 1"),
        "refinements": _i(2, lambda v: v >= 2, "must be at least 2"),
    },
    "sandpile": {
        "width": _i(16, lambda v: v >= 1, "must be at least 1"),
        "height": _i(16, lambda v: v >= 1, "must be at least 1"),
        "warmup": _i(4000, lambda v: v >= 0, "must be nonnegative"),
        "n_drops": _i(20_000, lambda v: v >= 1, "must be at least 1"),
        "site_policy": _Param(_to_str, "uniform-random",
                              _choice("uniform-random", "center"),
                              "must be one of: uniform-random, center"),
    },
    "resonance": {
        "amplitude": _f(0.3),
        "omega": _f(0.1, _positive, "must be positive"),
        "dt": _f(0.01, _positive, "must be positive"),
        "t_total": _f(100.0 * 2.0 * math.pi / 0.1, _positive,
                      "must be positive"),
        "noise_levels": _Param(
            _to_floats, (0.02, 0.05, 0.1, 0.2, 0.4, 0.8),
            lambda v: len(v) >= 5 and all(x > 0 for x in v),
            "needs at least 5 positive comma-separated values"),
        "replicas_per_level": _i(4, lambda v: v >= 4, "must be at least 4"),
    },
    "memory": {
        "task": _Param(_to_str, "retrieve", _choice("retrieve", "anneal"),
                       "must be one of: retrieve, anneal"),
        "n": _i(50, lambda v: v >= 2, "must be at least 2"),
        "patterns": _i(2, lambda v: v >= 1, "must be at least 1"),
        "corrupt_flips": _i(5, lambda v: v >= 0, "must be nonnegative"),
        "trials": _i(200, lambda v: v >= 1, "must be at least 1"),
        "instances": _i(20, lambda v: v >= 1, "must be at least 1"),
        "t_initial": _f(2.0, _positive, "must be positive"),
        "ratio": _f(0.95, lambda v: 0.0 < v < 1.0,
                    "must lie strictly between 0 and 1"),
        "levels": _i(120, lambda v: v >= 1, "must be at least 1"),
        "sweeps_per_level": _i(50, lambda v: v >= 1, "must be at least 1"),
    },
    "network": {
        "n": _i(300, lambda v: v >= 3, "must be at least 3"),
        "k": _i(8, lambda v: v >= 2 and v % 2 == 0,
                "must be an even count >= 2"),
        "p_values": _Param(
            _to_floats, (0.0, 0.02, 0.1, 0.5),
            lambda v: len(v) >= 1 and all(0.0 <= x <= 1.0 for x in v),
            "entries must lie in [0, 1]"),
        "seeds": _i(10, lambda v: v >= 10, "must be at least 10"),
        "ba_n": _i(10_000, lambda v: v >= 2, "must be at least 2"),
        "ba_m": _i(2, lambda v: v >= 1, "must be at least 1"),
    },
    "search": {
        "sides": _Param(_to_ints, (8, 16),
                        lambda v: len(v) >= 1 and all(s >= 1 for s in v),
                        "needs at least one side >= 1"),
        "target_counts": _Param(_to_ints, (1, 4),
                                lambda v: len(v) >= 1
                                and all(c >= 1 for c in v),
                                "needs at least one count >= 1"),
        "radii": _Param(_to_floats, (0.0, 1.0),
                        lambda v: len(v) >= 1 and all(r >= 0 for r in v),
                        "entries must be nonnegative"),
        "replicas_per_cell": _i(100, lambda v: v >= 100,
                                "must be at least 100"),
        "step_budget": _i(0, lambda v: v >= 0,
                          "must be nonnegative (0 = 10 * side^2)"),
    },
    "mcint": {
        "integrand": _Param(_to_str, "ball", _choice("ball", "polyprod"),
                            "must be one of: ball, polyprod"),
        "dim": _i(2, lambda v: v >= 1, "must be at least 1"),
        "samples": _i(100_000, lambda v: v >= 2, "must be at least 2"),
    },
    "clt": {
        "n_values": _Param(_to_ints, (4, 8, 16, 32, 64, 128, 256, 512, 1024),
                           lambda v: len(v) >= 2 and all(n >= 2 for n in v),
                           "needs at least two entries, each >= 2"),
        "replicas": _i(300, lambda v: v >= 2, "must be at least 2"),
        "sampler": _Param(_to_str, "normal", _choice("normal", "uniform"),
                          "must be one of: normal, uniform"),
    },
}


def _cross_uncertainty(p) -> list:
    return (["x_max: must exceed x_min"] if p["x_max"] <= p["x_min"] else [])


def _cross_spectrum(p) -> list:
    out = _cross_uncertainty(p)
    if p["commuting"] and p["n_levels"] > p["n_points"]:
        out.append("n_levels: cannot exceed n_points in commuting mode")
    return out


def _cross_paths(p) -> list:
    if p["sweeps"] <= p["thermalization"]:
        return ["sweeps: must exceed thermalization"]
    return []


def _cross_diffuse(p) -> list:
    if not math.isclose(p["a_s"] ** 2 / p["a_t"], 2.0 * p["dim"],
                        rel_tol=1e-12):
        return ["a_t: must satisfy a_s^2 / a_t = 2 * dim "
                "(diffusion-constant pinning)"]
    return []


def _cross_resonance(p) -> list:
    out = []
    levels = sorted(p["noise_levels"])
    if levels and levels[0] > 0 and levels[-1] / levels[0] < 10.0 * (1 - 1e-12):
        out.append("noise_levels: must span at least a decade")
    if p["t_total"] * p["omega"] < 100.0 * 2.0 * math.pi:
        out.append("t_total: must cover at least 100 drive periods")
    try:
        DoubleWellSpec(amplitude=p["amplitude"], omega=p["omega"],
                       noise_d=levels[0] if levels else 0.0, dt=p["dt"],
                       t_total=p["t_total"])
    except ValueError as exc:
        out.append(f"dt: {exc}")
    return out


def _cross_memory(p) -> list:
    out = []
    if p["corrupt_flips"] > p["n"]:
        out.append("corrupt_flips: cannot exceed n")
    if p["task"] == "anneal" and p["n"] > 24:
        out.append("n: anneal task needs n <= 24 (exhaustive oracle bound)")
    return out


def _cross_network(p) -> list:
    out = []
    if p["k"] >= p["n"]:
        out.append("k: must be smaller than n")
    values = tuple(p["p_values"])
    if 0.0 not in values:
        out.append("p_values: must include 0 (the lattice baseline)")
    if len(set(values)) != len(values):
        out.append("p_values: must be distinct")
    if p["ba_m"] >= p["ba_n"]:
        out.append("ba_m: must be smaller than ba_n")
    return out


def _cross_search(p) -> list:
    limit = min(p["sides"]) ** 2
    if any(c > limit for c in p["target_counts"]):
        return [f"target_counts: each entry must fit the smallest torus "
                f"({limit} cells)"]
    return []


_CROSS_CHECKS: dict = {
    "uncertainty": _cross_uncertainty,
    "spectrum": _cross_spectrum,
    "paths": _cross_paths,
    "diffuse": _cross_diffuse,
    "resonance": _cross_resonance,
    "memory": _cross_memory,
    "network": _cross_network,
    "search": _cross_search,
}


def _resolve(config: ExperimentConfig) -> tuple:
    """Apply the schema: defaults, conversions, checks.

    Returns (resolved parameter dict, violation list); never raises.
    """
    violations = []
    if config.experiment not in EXPERIMENTS:
        supported = ", ".join(sorted(EXPERIMENTS))
        return {}, [f"experiment: unknown name {config.experiment!r}; "
                    f"supported: {supported}"]
    try:
        seed = _to_int(config.seed)
        if not 0 <= seed < 2**64:
            raise ValueError
    except (ValueError, TypeError):
        violations.append("seed: must be an integer in [0, 2^64)")
    try:
        if _to_int(config.replicas) < 1:
            raise ValueError
    except (ValueError, TypeError):
        violations.append("replicas: must be a positive integer")

    schema = EXPERIMENTS[config.experiment]
    for key in config.parameters:
        if key not in schema:
            violations.append(
                f"{key}: unknown parameter for {config.experiment!r} "
                f"(known: {', '.join(sorted(schema))})")
    resolved = {}
    for name, param in schema.items():
        if name in config.parameters:
            try:
                value = param.convert(config.parameters[name])
            except (ValueError, TypeError):
                violations.append(f"{name}: could not parse "
                                  f"{config.parameters[name]!r}")
                continue
        else:
            value = param.default
        try:
            ok = bool(param.check(value))
        except Exception:
            ok = False
        if not ok:
            violations.append(f"{name}: {param.constraint}")
            continue
        resolved[name] = value

    cross = _CROSS_CHECKS.get(config.experiment)
    if cross is not None and not violations:
        violations.extend(cross(resolved))
    return resolved, violations


def validate(config: ExperimentConfig) -> list:
    """List of violations; empty iff :func:`run` would accept the config."""
    _, violations = _resolve(config)
    return violations


# --------------------------------------------------------------------------
# experiment runners


def _run_interfere(p, rng) -> _RunOutput:
    result = superpose(ComplexAmplitude(re=p["a_re"], im=p["a_im"]),
                       ComplexAmplitude(re=p["b_re"], im=p["b_im"]))
    row = (p["a_re"], p["a_im"], p["b_re"], p["b_im"],
           result.p_quantum, result.p_classical, result.interference)
    summary = {
        "p_quantum": result.p_quantum,
        "p_classical": result.p_classical,
        "interference": result.interference,
        "destructive": result.p_quantum == 0.0,
    }
    return _RunOutput(
        ("a_re", "a_im", "b_re", "b_im",
         "p_quantum", "p_classical", "interference"),
        [row], summary, {})


def _run_decay(p, rng) -> _RunOutput:
    model = DecayModel(rate_lambda=p["rate_lambda"], n_atoms=p["n_atoms"])
    result = decay_sample(model, rng, p["t_max"], p["bins"])
    rows = list(zip(result.times.tolist(), result.survival.tolist()))
    summary = {
        "fitted_rate": result.fitted_rate,
        "mean_lifetime": result.mean_lifetime,
        "relative_rate_error":
            abs(result.fitted_rate - p["rate_lambda"]) / p["rate_lambda"],
    }
    return _RunOutput(("time", "survival"), rows, summary, {})


def _run_uncertainty(p, rng) -> _RunOutput:
    grid = Grid1D(p["x_min"], p["x_max"], p["n_points"])
    gen = rng.gen
    rows = []
    products = []
    for index in range(p["n_states"]):
        raw = (gen.standard_normal(p["n_points"])
               + 1j * gen.standard_normal(p["n_points"]))
        result = uncertainty_product(WaveState.from_samples(grid, raw))
        rows.append((index, result.dx, result.dp, result.product))
        products.append(result.product)
    reference = uncertainty_product(
        WaveState.gaussian_packet(grid, sigma0=p["sigma0"]))
    products = np.array(products)
    summary = {
        "min_product": float(products.min()),
        "bound_violations": int((products < 0.5 - 1e-3).sum()),
        "gaussian_product": reference.product,
    }
    return _RunOutput(("state", "dx", "dp", "product"), rows, summary, {})


_POTENTIALS = {
    "harmonic": lambda x: 0.5 * x**2,
    "quartic": lambda x: 0.25 * x**4,
    "box": lambda x: np.zeros_like(x),
    "free": lambda x: np.zeros_like(x),
}


def _run_spectrum(p, rng) -> _RunOutput:
    grid = Grid1D(p["x_min"], p["x_max"], p["n_points"])
    result = spectrum_gaps(_POTENTIALS[p["potential"]], grid, p["n_levels"],
                           commuting_mode=p["commuting"])
    gaps = list(result.gaps) + [float("nan")]
    rows = [(i, e, g) for i, (e, g) in enumerate(zip(result.energies, gaps))]
    summary = {
        "ground_energy": float(result.energies[0]),
        "first_gap": float(result.gaps[0]),
        "gap_mean": float(result.gaps.mean()),
        "gap_std": float(result.gaps.std()),
    }
    return _RunOutput(("level", "energy", "gap_above"), rows, summary, {})


def _run_paths(p, rng) -> _RunOutput:
    dynamics = EuclideanAction(mass=1.0, potential=_POTENTIALS[p["potential"]],
                               a_t=p["a_t"])
    lattice = Lattice(n_t=p["n_t"], a_t=p["a_t"])
    pooled = [
        metropolis_sample(dynamics, lattice, rng.substream(chain),
                          sweeps=p["sweeps"],
                          thermalization=p["thermalization"]).paths
        for chain in range(p["chains"])
    ]
    ensemble = np.vstack(pooled)
    scan = hausdorff_scan(ensemble, resolution_ladder(ensemble))
    rows = list(zip(scan.block_sizes.tolist(), scan.resolutions.tolist(),
                    scan.mean_lengths.tolist()))
    summary = {
        "d_h": scan.d_h,
        "length_exponent": scan.alpha,
        "pooled_paths": int(ensemble.shape[0]),
    }
    return _RunOutput(("block_size", "resolution", "mean_length"),
                      rows, summary, {})


def _run_diffuse(p, rng) -> _RunOutput:
    base = WalkSpec(dim=p["dim"], a_s=p["a_s"], a_t=p["a_t"],
                    n_walkers=p["n_walkers"], n_steps=p["n_steps"])
    levels = convergence_scan(base, p["refinements"], rng)
    rows = [(lv.a_s, lv.a_t, lv.n_steps, lv.sup_error, lv.sampling_limited)
            for lv in levels]
    errors = [lv.sup_error for lv in levels]
    peak = (4.0 * math.pi * base.duration) ** (-base.dim / 2.0)
    summary = {
        "final_sup_error": errors[-1],
        "final_error_over_peak": errors[-1] / peak,
        "monotone_decreasing": bool(np.all(np.diff(errors) < 0)),
        "any_sampling_limited": bool(any(lv.sampling_limited
                                         for lv in levels)),
    }
    return _RunOutput(("a_s", "a_t", "n_steps", "sup_error",
                       "sampling_limited"), rows, summary, {})


def _decile_power_ratio(signal, segments: int = 8) -> float:
    signal = np.asarray(signal, dtype=float)
    if signal.size < 4 * segments:
        return float("nan")
    spectrum = periodogram(signal, 1.0, segments)
    power = spectrum.power[spectrum.frequencies > 0]
    k = max(1, power.size // 10)
    high = float(power[-k:].mean())
    return float(power[:k].mean() / high) if high > 0 else float("inf")


def _run_sandpile(p, rng) -> _RunOutput:
    grid = SandGrid.zeros(p["width"], p["height"])
    if p["warmup"]:
        drive(grid, rng.substream(0), p["warmup"], p["site_policy"])
    record = drive(grid, rng.substream(1), p["n_drops"], p["site_policy"])
    rows = list(zip(range(record.n_drops), record.sizes.tolist(),
                    record.areas.tolist(), record.durations.tolist(),
                    record.dissipated.tolist()))
    slope = stderr = float("nan")
    positive = record.sizes[record.sizes > 0]
    if positive.size:
        values, tail = avalanche_ccdf(positive)
        window = (values >= 10) & (values <= 1000)
        if window.sum() >= 3:
            fit = fit_power_law(values[window], tail[window])
            slope, stderr = fit.exponent, fit.stderr
    sites = [(int(a), int(b)) for a, b in
             rng.substream(2).gen.integers(0, [p["height"], p["width"]],
                                           size=(10, 2))]
    summary = {
        "mean_height": grid.mean_height,
        "ccdf_slope": slope,
        "ccdf_stderr": stderr,
        "round_activity_low_high_ratio":
            _decile_power_ratio(record.round_activity),
        "abelian_ok": bool(abelian_check(grid, sites, rng.substream(3),
                                         permutations=3)),
    }
    return _RunOutput(("drop", "size", "area", "duration", "dissipated"),
                      rows, summary, {})


def _run_resonance(p, rng) -> _RunOutput:
    levels = sorted(p["noise_levels"])
    base = DoubleWellSpec(amplitude=p["amplitude"], omega=p["omega"],
                          noise_d=levels[0], dt=p["dt"],
                          t_total=p["t_total"])
    curve = resonance_scan(base, levels, p["replicas_per_level"], rng)
    rows = list(zip(curve.noise_levels.tolist(), curve.snr_db.tolist(),
                    curve.snr_stderr.tolist()))
    summary = {
        "peak_d": curve.peak_d,
        "interior_peak": bool(curve.interior_peak),
        "peak_snr_db": float(curve.snr_db.max()),
    }
    return _RunOutput(("noise_d", "snr_db", "snr_stderr"),
                      rows, summary, {})


def _run_memory(p, rng) -> _RunOutput:
    if p["task"] == "retrieve":
        rows = []
        hits = 0
        for trial in range(p["trials"]):
            sub = rng.substream(trial)
            patterns = [SpinConfig.random(p["n"], sub)
                        for _ in range(p["patterns"])]
            couplings = hebbian_couplings(patterns)
            cue = flip_spins(patterns[0], p["corrupt_flips"], sub)
            result = zero_t_dynamics(cue, couplings, sub)
            m = overlap(result.config, patterns[0])
            hits += m >= 0.95
            rows.append((trial, m, result.converged, result.sweeps_used))
        summary = {
            "success_rate": hits / p["trials"],
            "mean_overlap": float(np.mean([r[1] for r in rows])),
        }
        return _RunOutput(("trial", "overlap", "converged", "sweeps"),
                          rows, summary, {})

    schedule = AnnealSchedule(t_initial=p["t_initial"], ratio=p["ratio"],
                              levels=p["levels"],
                              sweeps_per_level=p["sweeps_per_level"])
    rows = []
    matches = 0
    for instance in range(p["instances"]):
        couplings = sk_couplings(p["n"], rng.substream(2 * instance))
        _, ground = ground_state_bruteforce(couplings)
        best = simulated_annealing(couplings, schedule,
                                   rng.substream(2 * instance + 1))
        matched = bool(best.energy <= ground + 1e-9)
        matches += matched
        rows.append((instance, best.energy, ground, matched))
    summary = {"match_rate": matches / p["instances"]}
    return _RunOutput(("instance", "annealed_energy", "ground_energy",
                       "matched"), rows, summary, {})


def _run_network(p, rng) -> _RunOutput:
    scan = small_world_scan(p["n"], p["k"], p["p_values"], p["seeds"],
                            rng.substream(0))
    rows = [(pt.p, pt.clustering_ratio, pt.path_length_ratio)
            for pt in scan.points]
    ba = barabasi_albert(p["ba_n"], p["ba_m"], rng.substream(1))
    degrees = ba.degrees
    ds = np.arange(4, 101)
    ccdf = np.array([(degrees >= d).mean() for d in ds])
    keep = ccdf > 0
    fit = fit_power_law(ds[keep], ccdf[keep])
    sample_p = sorted(p["p_values"])[len(p["p_values"]) // 2]
    sample = watts_strogatz(p["n"], p["k"], sample_p, rng.substream(2))
    summary = {
        "has_window": bool(scan.has_window),
        "clustering_base": scan.clustering_base,
        "path_length_base": scan.path_length_base,
        "ba_ccdf_slope": fit.exponent,
        "ba_ccdf_stderr": fit.stderr,
    }
    extras = {"network_sample.edges": edge_list_text(sample)}
    return _RunOutput(("p", "clustering_ratio", "path_length_ratio"),
                      rows, summary, extras)


def _run_search(p, rng) -> _RunOutput:
    budget = p["step_budget"] if p["step_budget"] > 0 else None
    table = strategy_tournament(p["sides"], p["target_counts"], p["radii"],
                                p["replicas_per_cell"], rng,
                                step_budget=budget)
    rows = [tuple(row) for row in table]
    wins: dict = {}
    for row in table:
        if row.rank == 1:
            wins[row.strategy] = wins.get(row.strategy, 0) + 1
    summary = {
        "cells": len(table) // 2,
        "wins": wins,
    }
    return _RunOutput(
        ("side", "n_targets", "capture_radius", "strategy", "success_rate",
         "mean_steps", "median_steps", "rank"), rows, summary, {})


def _run_mcint(p, rng) -> _RunOutput:
    dim = p["dim"]
    if p["integrand"] == "ball":
        f = lambda x: ((x**2).sum(axis=1) <= 1.0).astype(float)  # noqa: E731
        exact = math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0) / 2**dim
    else:
        f = lambda x: (4.0 * x * (1.0 - x)).prod(axis=1)  # noqa: E731
        exact = (2.0 / 3.0) ** dim
    stats = mc_integrate(rng, f, dim, p["samples"])
    error = stats.mean - exact
    rows = [(stats.n, stats.mean, stats.std_error, exact, error)]
    summary = {
        "estimate": stats.mean,
        "std_error": stats.std_error,
        "exact": exact,
        "z_score": error / stats.std_error if stats.std_error else float("inf"),
    }
    return _RunOutput(("samples", "estimate", "std_error", "exact", "error"),
                      rows, summary, {})


def _run_clt(p, rng) -> _RunOutput:
    sampler = None
    if p["sampler"] == "uniform":
        sampler = lambda s, size: ((s.gen.random(size) - 0.5)  # noqa: E731
                                   * math.sqrt(12.0))
    scaling = clt_scaling(rng, p["n_values"], p["replicas"], sampler)
    rows = [(pt.n, pt.std_error) for pt in scaling.points]
    summary = {"slope": scaling.slope}
    return _RunOutput(("n", "std_error"), rows, summary, {})


_RUNNERS: dict = {
    "interfere": _run_interfere,
    "decay": _run_decay,
    "uncertainty": _run_uncertainty,
    "spectrum": _run_spectrum,
    "paths": _run_paths,
    "diffuse": _run_diffuse,
    "sandpile": _run_sandpile,
    "resonance": _run_resonance,
    "memory": _run_memory,
    "network": _run_network,
    "search": _run_search,
    "mcint": _run_mcint,
    "clt": _run_clt,
}


# --------------------------------------------------------------------------
# emission


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(_jsonable(payload), sort_keys=True, indent=2)
                    + "\n", encoding="utf-8")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(config: ExperimentConfig) -> RunManifest:
    """Validate, execute, and persist one experiment run."""
    params, violations = _resolve(config)
    if violations:
        raise ConfigError("; ".join(violations))
    started = datetime.now(timezone.utc).isoformat(timespec="microseconds")
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    runner = _RUNNERS[config.experiment]
    replicas = int(config.replicas)
    base = RngStream(int(config.seed), 0)
    header: tuple = ()
    merged_rows: list = []
    summaries: list = []
    extras: dict = {}
    for replica in range(replicas):
        result = runner(params, base.substream(replica))
        header = result.header
        merged_rows.extend((replica, *row) for row in result.rows)
        summaries.append(result.summary)
        for name, text in result.extra_files.items():
            key = name if replicas == 1 else f"replica{replica}_{name}"
            extras[key] = text

    csv_path = out_dir / f"{config.experiment}.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(("replica", *header))
        for row in merged_rows:
            writer.writerow([_cell(v) for v in row])

    summary_payload = (summaries[0] if replicas == 1
                       else {"replicas": replicas, "per_replica": summaries})
    summary_path = out_dir / f"{config.experiment}_summary.json"
    _write_json(summary_path, summary_payload)

    extra_paths = []
    for name, text in extras.items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        extra_paths.append(path)

    outputs = tuple(
        {"path": path.name, "sha256": _digest(path),
         "bytes": path.stat().st_size}
        for path in [csv_path, summary_path, *extra_paths]
    )
    finished = datetime.now(timezone.utc).isoformat(timespec="microseconds")
    manifest_path = out_dir / "manifest.json"
    manifest = RunManifest(
        experiment=config.experiment,
        parameters=_jsonable(params),
        seed=int(config.seed),
        replicas=replicas,
        output_dir=str(out_dir),
        artifact_version=__version__,
        started=started,
        finished=finished,
        outputs=outputs,
        path=str(manifest_path),
    )
    payload = {
        "experiment": manifest.experiment,
        "parameters": manifest.parameters,
        "seed": manifest.seed,
        "replicas": manifest.replicas,
        "output_dir": manifest.output_dir,
        "artifact_version": manifest.artifact_version,
        "started": manifest.started,
        "finished": manifest.finished,
        "outputs": list(manifest.outputs),
    }
    _write_json(manifest_path, payload)
    return manifest


def rerun(manifest_path, output_dir=None) -> RunManifest:
    """Re-execute a run from its manifest's echoed configuration.

    Data files (CSV, JSON summary, extras) come out byte-identical; only
    the new manifest's timestamps differ.
    """
    payload = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    config = ExperimentConfig(
        experiment=payload["experiment"],
        parameters=payload["parameters"],
        seed=payload["seed"],
        output_dir=str(output_dir) if output_dir is not None
        else payload["output_dir"],
        replicas=payload["replicas"],
    )
    return run(config)


# --------------------------------------------------------------------------
# command line


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stochlab",
        description="Seeded stochastic-dynamics experiments with "
                    "manifest-backed reproducibility.",
    )
    parser.add_argument("experiment", help="experiment name (see docs)")
    parser.add_argument("overrides", nargs="*", metavar="key=value",
                        help="parameter overrides")
    parser.add_argument("--config", help="INI file with a section per "
                                         "experiment")
    parser.add_argument("--seed", type=int, default=0,
                        help="64-bit master seed (default 0)")
    parser.add_argument("--out", default=None,
                        help="output directory (default "
                             "stochlab_runs/<experiment>)")
    parser.add_argument("--replicas", type=int, default=1,
                        help="independent replicas fanned over substreams")
    args, extra = parser.parse_known_args(argv)
    overrides = list(args.overrides) + list(extra)

    raw: dict = {}
    if args.config:
        import configparser

        ini = configparser.ConfigParser()
        read = ini.read(args.config)
        if not read:
            print(f"invalid config: could not read {args.config!r}",
                  file=sys.stderr)
            return 2
        if ini.has_section(args.experiment):
            raw.update(dict(ini.items(args.experiment)))
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key or key.startswith("-"):
            print(f"invalid config: override {item!r} is not key=value",
                  file=sys.stderr)
            return 2
        raw[key] = value

    out_dir = args.out or str(Path("stochlab_runs") / args.experiment)
    config = ExperimentConfig(experiment=args.experiment, parameters=raw,
                              seed=args.seed, output_dir=out_dir,
                              replicas=args.replicas)
    violations = validate(config)
    if violations:
        for violation in violations:
            print(f"invalid config: {violation}", file=sys.stderr)
        return 2
    try:
        manifest = run(config)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numeric/runtime failures map to exit 3
        print(f"runtime failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3
    print(manifest.path)
    return 0
