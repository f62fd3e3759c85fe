"""Acceptance gate: every shipped guarantee, checked at its stated tolerance.

Each test prints exactly one ``criterion NN: PASS/FAIL`` line (run pytest
with ``-s`` to see them inline) and then asserts, so a red line and a red
test always point at the same guarantee.  Streams are frozen throughout;
every number here is reproducible bit for bit.
"""

import time

import numpy as np

from util import count_local_maxima

from stochlab import cli
from stochlab.core import RngStream, clt_scaling, fit_power_law, periodogram
from stochlab.diffusion import WalkSpec, convergence_scan
from stochlab.memory import (AnnealSchedule, SpinConfig, exact_thermo,
                             flip_spins, ground_state_bruteforce,
                             hebbian_couplings, overlap, simulated_annealing,
                             sk_couplings, zero_t_dynamics)
from stochlab.networks import barabasi_albert, small_world_scan
from stochlab.paths import (EuclideanAction, Lattice, hausdorff_scan,
                            metropolis_sample, resolution_ladder)
from stochlab.quantum import (Grid1D, WaveState, double_slit_pattern,
                              uncertainty_product)
from stochlab.resonance import DoubleWellSpec, resonance_scan
from stochlab.sandpile import SandGrid, abelian_check, avalanche_ccdf, drive


def _verdict(number: int, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"criterion {number:02d}: {status} — {detail}")
    assert ok, f"criterion {number:02d} failed: {detail}"


def _pooled_roughness(potential, a_t, stream_id, chains=16):
    lattice = Lattice(n_t=256, a_t=a_t)
    dynamics = EuclideanAction(mass=1.0, potential=potential, a_t=a_t)
    base = RngStream(120, stream_id)
    pooled = np.vstack([
        metropolis_sample(dynamics, lattice, base.substream(c),
                          sweeps=10_000, thermalization=1000).paths
        for c in range(chains)
    ])
    return hausdorff_scan(pooled, resolution_ladder(pooled)).d_h


def test_criterion_01_path_roughness_dimension():
    start = time.monotonic()
    free = _pooled_roughness(lambda x: np.zeros_like(x), 0.05, 0)
    harmonic = _pooled_roughness(lambda x: 0.5 * x**2, 1.0 / 320.0, 1)
    line = np.linspace(0.0, 1.0, 256).reshape(1, -1)
    control = hausdorff_scan(line, resolution_ladder(line)).d_h
    elapsed = time.monotonic() - start
    ok = (abs(free - 2.0) <= 0.1 and abs(harmonic - 2.0) <= 0.1
          and abs(control - 1.0) <= 0.05 and elapsed <= 120.0)
    _verdict(1, ok,
             f"d_h free={free:.3f}, harmonic={harmonic:.3f} (band 2.0+-0.1); "
             f"straight line={control:.3f} (band 1.0+-0.05); {elapsed:.0f}s")


def test_criterion_02_two_slit_fringes():
    wavelength, separation, distance = 0.05, 1.0, 100.0
    fringe = wavelength * distance / separation
    xs = np.linspace(-2.6 * fringe, 2.6 * fringe, 2001)
    pattern = double_slit_pattern(wavelength, separation, distance, xs,
                                  mode="amplitude")
    n_maxima = count_local_maxima(pattern)
    peak = double_slit_pattern(wavelength, separation, distance,
                               np.array([0.0]), mode="amplitude")[0]
    minima = double_slit_pattern(wavelength, separation, distance,
                                 (np.arange(3) + 0.5) * fringe,
                                 mode="amplitude")
    dark = bool(np.all(minima < 1e-6 * peak))
    single = all(
        count_local_maxima(double_slit_pattern(
            wavelength, separation, distance,
            np.linspace(-span, span, 1001), mode="classical")) == 1
        for span in (2.0, 20.0, 200.0))
    ok = n_maxima >= 3 and dark and single
    _verdict(2, ok,
             f"{n_maxima} interference maxima (>=3); minima below 1e-6 of "
             f"peak: {dark}; classical mode single-peaked: {single}")


def test_criterion_03_walk_converges_to_heat_kernel():
    start = time.monotonic()
    base = WalkSpec(dim=1, a_s=0.5, a_t=0.125, n_walkers=10_000_000,
                    n_steps=8)
    levels = convergence_scan(base, 2, RngStream(53, 0))
    elapsed = time.monotonic() - start
    errors = [level.sup_error for level in levels]
    peak = (4.0 * np.pi * base.duration) ** -0.5
    decreasing = all(b < a for a, b in zip(errors, errors[1:]))
    ok = decreasing and errors[-1] < 1e-2 * peak and elapsed <= 60.0
    _verdict(3, ok,
             f"sup errors {['%.2e' % e for e in errors]} decreasing: "
             f"{decreasing}; final/peak={errors[-1] / peak:.2e} (<1e-2); "
             f"{elapsed:.0f}s")


def test_criterion_04_uncertainty_bound():
    grid = Grid1D(-8.0, 8.0, 64)
    gen = RngStream(97, 0).gen
    products = np.array([
        uncertainty_product(WaveState.from_samples(
            grid, gen.standard_normal(64) + 1j * gen.standard_normal(64))
        ).product
        for _ in range(1000)
    ])
    reference = uncertainty_product(
        WaveState.gaussian_packet(grid, sigma0=1.0)).product
    ok = bool((products >= 0.5 - 1e-3).all()) and abs(reference - 0.5) <= 1e-3
    _verdict(4, ok,
             f"min product over 1000 random states {products.min():.4f} "
             f"(>=0.4990); Gaussian packet {reference:.6f} (0.5+-1e-3)")


def test_criterion_05_annealing_matches_exhaustive_and_thermo_identity():
    start = time.monotonic()
    schedule = AnnealSchedule(t_initial=2.0, ratio=0.95, levels=120,
                              sweeps_per_level=50)
    matches = 0
    for i in range(100):
        couplings = sk_couplings(16, RngStream(92, 2 * i))
        _, ground = ground_state_bruteforce(couplings)
        best = simulated_annealing(couplings, schedule,
                                   RngStream(92, 2 * i + 1))
        matches += best.energy <= ground + 1e-9
    elapsed = time.monotonic() - start

    couplings = sk_couplings(12, RngStream(95, 0))
    temperature = 1.3
    delta = 1e-3 * temperature
    mid = exact_thermo(couplings, temperature)
    lo = exact_thermo(couplings, temperature - delta)
    hi = exact_thermo(couplings, temperature + delta)
    fd_energy = (mid.free_energy
                 - temperature * (hi.free_energy - lo.free_energy)
                 / (2 * delta))
    rel = abs(fd_energy - mid.mean_energy) / abs(mid.mean_energy)
    ok = matches >= 95 and rel <= 1e-4 and elapsed <= 180.0
    _verdict(5, ok,
             f"annealed energy matched exhaustive ground state in "
             f"{matches}/100 instances (>=95), {elapsed:.0f}s; "
             f"E vs F - T dF/dT rel err {rel:.1e} (<=1e-4)")


def test_criterion_06_pattern_retrieval():
    base = RngStream(90, 0)
    hits = 0
    for trial in range(1000):
        sub = base.substream(trial)
        patterns = [SpinConfig.random(50, sub) for _ in range(2)]
        couplings = hebbian_couplings(patterns)
        cue = flip_spins(patterns[0], 5, sub)
        result = zero_t_dynamics(cue, couplings, sub)
        hits += overlap(result.config, patterns[0]) >= 0.95
    ok = hits >= 950
    _verdict(6, ok,
             f"{hits}/1000 corrupted cues recovered to overlap >=0.95 "
             f"(need >=950)")


def test_criterion_07_sandpile_criticality():
    start = time.monotonic()
    grid = SandGrid.zeros(32, 32)
    base = RngStream(99, 0)
    drive(grid, base.substream(0), 10_000)
    record = drive(grid, base.substream(1), 100_000)

    values, tail = avalanche_ccdf(record.sizes)
    window = (values >= 10) & (values <= 1000)
    fit = fit_power_law(values[window], tail[window])

    spectrum = periodogram(record.round_activity.astype(float), 1.0, 8)
    power = spectrum.power[spectrum.frequencies > 0]
    k = max(1, power.size // 10)
    ratio = float(power[:k].mean() / power[-k:].mean())

    ab_rng = base.substream(2)
    abelian = all(
        abelian_check(grid,
                      [(int(r), int(c)) for r, c in
                       ab_rng.gen.integers(0, 32, size=(8, 2))],
                      ab_rng, permutations=3)
        for _ in range(100))
    elapsed = time.monotonic() - start
    ok = (abelian and fit.exponent < 0 and fit.stderr < 0.1
          and ratio >= 10.0 and elapsed <= 60.0)
    _verdict(7, ok,
             f"abelian on 100 drop sequences: {abelian}; CCDF slope "
             f"{fit.exponent:.3f}+-{fit.stderr:.3f} over a decade; "
             f"low/high activity power {ratio:.0f}x (>=10x); {elapsed:.0f}s")


def test_criterion_08_stochastic_resonance_peak():
    start = time.monotonic()
    levels = (0.02, 0.05, 0.1, 0.2, 0.4, 0.8)
    base = DoubleWellSpec(amplitude=0.3, omega=0.1, noise_d=levels[0],
                          dt=0.01, t_total=100.0 * 2.0 * np.pi / 0.1)
    curve = resonance_scan(base, levels, 4, RngStream(70, 0))
    elapsed = time.monotonic() - start
    best = int(np.argmax(curve.snr_db))
    margin_low = curve.snr_db[best] - curve.snr_db[0]
    margin_high = curve.snr_db[best] - curve.snr_db[-1]
    ok = (curve.interior_peak and 0 < best < len(levels) - 1
          and margin_low >= 3.0 and margin_high >= 3.0 and elapsed <= 120.0)
    _verdict(8, ok,
             f"SNR peaks at D={curve.peak_d} with margins "
             f"{margin_low:.1f}/{margin_high:.1f} dB over the endpoints "
             f"(>=3 dB each); {elapsed:.0f}s")


def test_criterion_09_small_world_window_and_scale_free_tail():
    start = time.monotonic()
    scan = small_world_scan(1000, 10, (0.0, 0.01, 0.03, 0.1), 10,
                            RngStream(104, 0))
    window = any(
        0.01 <= pt.p <= 0.1
        and pt.path_length_ratio < 0.5 and pt.clustering_ratio > 0.7
        for pt in scan.points)
    elapsed = time.monotonic() - start

    graph = barabasi_albert(10_000, 2, RngStream(103, 1))
    degrees = graph.degrees
    ds = np.arange(4, 101)
    ccdf = np.array([(degrees >= d).mean() for d in ds])
    keep = ccdf > 0
    fit = fit_power_law(ds[keep], ccdf[keep])
    ok = (window and scan.has_window and -2.2 <= fit.exponent <= -1.6
          and elapsed <= 60.0)
    _verdict(9, ok,
             f"rewiring window with L/L0<0.5 and C/C0>0.7: {window} "
             f"({elapsed:.0f}s); degree CCDF slope {fit.exponent:.2f} "
             f"(in [-2.2, -1.6])")


def test_criterion_10_error_scaling_exponent():
    scaling = clt_scaling(RngStream(96, 0),
                          (4, 8, 16, 32, 64, 128, 256, 512, 1024), 400)
    ok = abs(scaling.slope + 0.5) <= 0.05
    _verdict(10, ok,
             f"std-error vs n log-log slope {scaling.slope:.3f} "
             f"(-0.5+-0.05)")


_RERUN_CONFIGS = {
    "interfere": {},
    "decay": {"n_atoms": "2000"},
    "uncertainty": {"n_states": "50"},
    "spectrum": {"n_levels": "4", "n_points": "200"},
    "paths": {"n_t": "128", "chains": "2", "sweeps": "1500",
              "thermalization": "300"},
    "diffuse": {"n_walkers": "20000"},
    "sandpile": {"width": "8", "height": "8", "warmup": "500",
                 "n_drops": "1500"},
    "resonance": {"noise_levels": "0.05,0.1,0.2,0.4,0.8"},
    "memory": {"trials": "50"},
    "network": {"n": "24", "k": "4", "ba_n": "80",
                "p_values": "0,0.3"},
    "search": {"sides": "6", "target_counts": "2", "radii": "0"},
    "mcint": {"samples": "4000"},
    "clt": {"n_values": "4,16,64", "replicas": "40"},
}


def test_criterion_11_manifest_reruns_are_byte_identical(tmp_path):
    assert set(_RERUN_CONFIGS) == set(cli.EXPERIMENTS)
    identical = 0
    for index, (experiment, params) in enumerate(sorted(_RERUN_CONFIGS.items())):
        first_dir = tmp_path / f"{experiment}_a"
        first = cli.run(cli.ExperimentConfig(experiment, params,
                                             seed=1000 + index,
                                             output_dir=str(first_dir),
                                             replicas=2))
        second = cli.rerun(first.path, output_dir=str(tmp_path / f"{experiment}_b"))
        same = all(
            (tmp_path / f"{experiment}_a" / entry["path"]).read_bytes()
            == (tmp_path / f"{experiment}_b" / entry["path"]).read_bytes()
            for entry in first.outputs)
        same = same and [e["sha256"] for e in first.outputs] \
            == [e["sha256"] for e in second.outputs]
        identical += same
    ok = identical == len(_RERUN_CONFIGS)
    _verdict(11, ok,
             f"{identical}/{len(_RERUN_CONFIGS)} experiments rerun from "
             f"their manifests with byte-identical data files")
