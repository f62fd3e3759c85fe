"""Euclidean path sampling and the length-versus-resolution dimension scan.

Paths x(t) live on a lattice of n_t equally spaced imaginary-time slices with
fixed endpoints.  A site-by-site Metropolis sampler draws paths with Boltzmann
weight exp(-S/hbar), where S is the discretized Euclidean action.  Coarsening
a sampled path and measuring its summed length L against the fluctuation
scale dx of the coarse increments gives a power law mean L ~ dx**alpha whose
exponent determines the fractal dimension of the paths: d_h = 1 - alpha.
A wiggly quantum path doubles in measured length each time the resolution is
refined by 4 (alpha = -1, d_h = 2); a straight line keeps a constant length
(alpha = 0, d_h = 1).

Coarse-graining protocol (the one interpretive choice in this module): a path
is reduced to [x_0, block means of size b, x_last].  The anchored endpoints
make the coarse length of a monotone path exactly constant across block
sizes, which the plain block-mean reduction fails.  The resolution assigned
to block size b is dx(b) = sqrt(b) * dx_1, where dx_1 is the measured RMS
increment of the raw paths: the fluctuation scale a diffusive path develops
across an effective spacing of b slices.  The raw pooled RMS of the coarse
increments is deliberately *not* used as the fit axis — block averaging
suppresses it below sqrt(b) scaling for small b (variance (2b^2+1)/(3b)
instead of b) and the pinned endpoints suppress it again for blocks
approaching the path length, and feeding those distortions into both axes
doubles their effect on the exponent.  For the same reason the fit window is
restricted to block sizes 4 .. n_t // 8.  Alternatives (subsampling,
smoothing kernels) exist but are not implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from stochlab.core import RngStream, fit_power_law


class FitError(Exception):
    """Raised when a scan cannot produce enough valid points to fit."""


@dataclass(frozen=True)
class Lattice:
    """Imaginary-time lattice: n_t slices of spacing a_t with fixed endpoints."""

    n_t: int
    a_t: float
    x_start: float = 0.0
    x_end: float = 0.0

    def __post_init__(self) -> None:
        if self.n_t < 3:
            raise ValueError("sampling needs n_t >= 3 (at least one interior slice)")
        if self.a_t <= 0:
            raise ValueError("a_t must be positive")


@dataclass(frozen=True)
class LatticePath:
    """A discretized path: positions per slice, spacing a_t, frozen endpoints."""

    positions: np.ndarray
    a_t: float

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=float)
        if positions.ndim != 1 or positions.size < 2:
            raise ValueError("a path needs at least two slices")
        if self.a_t <= 0:
            raise ValueError("a_t must be positive")
        positions = positions.copy()
        positions.flags.writeable = False
        object.__setattr__(self, "positions", positions)

    @property
    def n_t(self) -> int:
        return self.positions.size

    @property
    def times(self) -> np.ndarray:
        return self.a_t * np.arange(self.n_t)


@dataclass(frozen=True)
class EuclideanAction:
    """Mass, potential, and slice spacing defining the Euclidean action.

    The Boltzmann weight of a path is exp(-S/hbar); hbar defaults to 1.
    """

    mass: float
    potential: Callable[[np.ndarray], np.ndarray]
    a_t: float
    hbar: float = 1.0

    def __post_init__(self) -> None:
        if self.mass <= 0 or self.a_t <= 0 or self.hbar <= 0:
            raise ValueError("mass, a_t, and hbar must be positive")


@dataclass(frozen=True)
class HausdorffScan:
    resolutions: np.ndarray    # dx per scan point, strictly decreasing
    mean_lengths: np.ndarray   # ensemble-mean coarse length per scan point
    alpha: float               # fitted exponent of mean L ~ dx**alpha
    d_h: float                 # 1 - alpha
    block_sizes: np.ndarray    # coarse-graining block size per scan point


@dataclass(frozen=True)
class ProposalAudit:
    """Logged Metropolis proposals for detailed-balance spot checks."""

    delta_s: np.ndarray
    uniforms: np.ndarray
    accepted: np.ndarray


@dataclass(frozen=True)
class PathEnsemble:
    """Decorrelated post-thermalization path samples plus run diagnostics."""

    paths: np.ndarray          # (n_samples, n_t)
    sample_actions: np.ndarray
    action_trace: np.ndarray   # per-sweep action, thermalization included
    acceptance_rate: float     # post-thermalization
    proposal_width: float      # frozen width actually used for sampling
    stride: int
    tau_int: float
    lattice: Lattice
    audit: ProposalAudit | None = None


def _action_of(positions: np.ndarray, dynamics: EuclideanAction) -> float:
    kinetic = (dynamics.mass / (2.0 * dynamics.a_t)) * float(
        (np.diff(positions) ** 2).sum())
    v = np.asarray(dynamics.potential(positions), dtype=float)
    # Trapezoidal weighting: endpoints count half.
    potential = dynamics.a_t * float(v.sum() - 0.5 * (v[0] + v[-1]))
    return kinetic + potential


def action(path: LatticePath, dynamics: EuclideanAction) -> float:
    """Discretized Euclidean action: kinetic links plus trapezoid-weighted potential."""
    if not math.isclose(path.a_t, dynamics.a_t, rel_tol=1e-12):
        raise ValueError(f"path spacing {path.a_t} != dynamics spacing {dynamics.a_t}")
    return _action_of(path.positions, dynamics)


def path_distance(p1: LatticePath, p2: LatticePath,
                  dynamics: EuclideanAction) -> float:
    """|S(p1) - S(p2)|: a pseudo-metric (distinct equal-action paths have distance 0)."""
    if p1.n_t != p2.n_t or not math.isclose(p1.a_t, p2.a_t, rel_tol=1e-12):
        raise ValueError("paths live on incompatible lattices")
    return abs(action(p1, dynamics) - action(p2, dynamics))


def _integrated_autocorrelation(series: np.ndarray) -> float:
    """Sokal-windowed integrated autocorrelation time of a scalar series."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 8:
        return 0.5
    x = x - x.mean()
    var = float(x @ x) / n
    if var == 0.0:
        return 0.5
    # Autocovariance by FFT, biased normalization.
    size = int(2 ** math.ceil(math.log2(2 * n)))
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n].real / n
    rho = acov / acov[0]
    tau = 0.5
    for k in range(1, n // 2):
        tau += float(rho[k])
        if k >= 6.0 * tau:  # Sokal window: stop once the window exceeds 6 tau
            break
    return max(tau, 0.5)


def metropolis_sample(dynamics: EuclideanAction, lattice: Lattice,
                      rng: RngStream, sweeps: int, thermalization: int,
                      proposal_width: float = 1.0,
                      audit_proposals: int = 0) -> PathEnsemble:
    """Sample fixed-endpoint paths with Boltzmann weight exp(-S/hbar).

    One sweep proposes a shift x_j -> x_j + U(-w, w) at every interior site,
    visiting sites in a fixed even/odd checkerboard order so the proposals in
    each half-sweep depend only on frozen neighbors (single-site detailed
    balance is preserved and the schedule is deterministic from the seed).

    The proposal width starts at ``proposal_width`` and is retuned toward 50%
    acceptance every 25 sweeps during thermalization, then frozen.  ``sweeps``
    counts total sweeps including thermalization.  Post-thermalization paths
    are thinned by a stride of ceil(2 * tau_int), where tau_int is the
    integrated autocorrelation time of the action series.

    Set ``audit_proposals`` to log that many post-thermalization proposals
    (delta S, uniform draw, decision) for detailed-balance checks.
    """
    if thermalization < 0 or sweeps <= thermalization:
        raise ValueError("need sweeps > thermalization >= 0")
    if proposal_width <= 0:
        raise ValueError("proposal_width must be positive")
    if not math.isclose(lattice.a_t, dynamics.a_t, rel_tol=1e-12):
        raise ValueError("lattice and dynamics disagree on a_t")

    n_t = lattice.n_t
    gen = rng.gen
    # Exact free-particle bridge start.  From a cold (straight-line) start,
    # site-local updates equilibrate wavelength-L modes diffusively, in about
    # (n_t / pi)**2 sweeps for the longest one — far more than a typical run.
    # Drawing the start from the exact free-action bridge removes that
    # burn-in entirely for V = 0 and leaves only the fast, locally driven
    # relaxation toward V for interacting potentials.
    step_std = math.sqrt(dynamics.a_t * dynamics.hbar / dynamics.mass)
    walk = np.concatenate([[0.0], np.cumsum(gen.normal(0.0, step_std,
                                                       size=n_t - 1))])
    bridge = walk - walk[-1] * (np.arange(n_t) / (n_t - 1))
    x = np.linspace(lattice.x_start, lattice.x_end, n_t) + bridge
    interior = np.arange(1, n_t - 1)
    groups = [interior[interior % 2 == 1], interior[interior % 2 == 0]]
    groups = [g for g in groups if g.size > 0]

    coef = dynamics.mass / (2.0 * dynamics.a_t)
    width = float(proposal_width)
    measuring = sweeps - thermalization
    trace = np.empty(sweeps)
    kept = np.empty((measuring, n_t))
    accepted_meas = proposed_meas = 0
    tune_acc = tune_prop = 0
    audit_ds: list[np.ndarray] = []
    audit_u: list[np.ndarray] = []
    audit_acc: list[np.ndarray] = []
    audit_left = int(audit_proposals)

    for sweep in range(sweeps):
        in_measurement = sweep >= thermalization
        for sites in groups:
            old = x[sites]
            new = old + gen.uniform(-width, width, size=sites.size)
            left, right = x[sites - 1], x[sites + 1]
            delta_s = coef * ((new - left) ** 2 + (right - new) ** 2
                              - (old - left) ** 2 - (right - old) ** 2)
            delta_s += dynamics.a_t * (
                np.asarray(dynamics.potential(new), dtype=float)
                - np.asarray(dynamics.potential(old), dtype=float))
            u = gen.random(sites.size)
            accept = u < np.exp(np.minimum(-delta_s / dynamics.hbar, 0.0))
            x[sites] = np.where(accept, new, old)
            if in_measurement:
                accepted_meas += int(accept.sum())
                proposed_meas += sites.size
                if audit_left > 0:
                    take = min(audit_left, sites.size)
                    audit_ds.append(delta_s[:take].copy())
                    audit_u.append(u[:take].copy())
                    audit_acc.append(accept[:take].copy())
                    audit_left -= take
            else:
                tune_acc += int(accept.sum())
                tune_prop += sites.size
        trace[sweep] = _action_of(x, dynamics)
        if in_measurement:
            kept[sweep - thermalization] = x
        elif (sweep + 1) % 25 == 0 and tune_prop > 0:
            rate = tune_acc / tune_prop
            width = float(np.clip(width * np.clip(rate / 0.5, 0.5, 2.0),
                                  1e-9, 1e9))
            tune_acc = tune_prop = 0

    measured_trace = trace[thermalization:]
    tau = _integrated_autocorrelation(measured_trace)
    stride = max(1, math.ceil(2.0 * tau))
    samples = kept[::stride]
    audit = None
    if audit_proposals > 0 and audit_ds:
        audit = ProposalAudit(
            delta_s=np.concatenate(audit_ds),
            uniforms=np.concatenate(audit_u),
            accepted=np.concatenate(audit_acc),
        )
    return PathEnsemble(
        paths=samples,
        sample_actions=measured_trace[::stride],
        action_trace=trace,
        acceptance_rate=accepted_meas / max(proposed_meas, 1),
        proposal_width=width,
        stride=stride,
        tau_int=tau,
        lattice=lattice,
        audit=audit,
    )


def _coarse_increments(paths: np.ndarray, block: int) -> np.ndarray:
    """Increments of the anchored coarse paths [x_0, block means, x_last]."""
    if block == 1:
        return np.diff(paths, axis=1)
    n_t = paths.shape[1]
    n_blocks = n_t // block
    means = paths[:, : n_blocks * block].reshape(paths.shape[0], n_blocks,
                                                 block).mean(axis=2)
    coarse = np.concatenate(
        [paths[:, :1], means, paths[:, -1:]], axis=1)
    return np.diff(coarse, axis=1)


# Block-size window for the dimension fit.  Below _BLOCK_MIN the block-mean
# increment variance has not reached its sqrt(b) scaling regime; above
# n_t // _BLOCK_DENOM the fixed endpoints measurably suppress the coarse
# fluctuations (both effects bend the log-log fit upward in d_h).
_BLOCK_MIN = 4
_BLOCK_DENOM = 8


def _fine_scale(paths: np.ndarray) -> float:
    """Pooled RMS of the raw slice-to-slice increments."""
    return math.sqrt(float((np.diff(paths, axis=1) ** 2).mean()))


def hausdorff_scan(ensemble, resolutions: Sequence[float]) -> HausdorffScan:
    """Length-versus-resolution scan over an ensemble of sampled paths.

    ``ensemble`` is a PathEnsemble or an (n_paths, n_t) array.  Meaningful
    statistics want >= 100 decorrelated paths; a single deterministic path is
    accepted for smooth-curve controls.  ``resolutions`` are requested dx
    values spanning at least a decade; each is mapped to the achievable block
    size b in [4, n_t // 8] whose resolution dx(b) = sqrt(b) * dx_1 is
    nearest in log space, duplicates collapse, and the power law is fitted on
    the achieved (dx, mean L) points.
    """
    paths = getattr(ensemble, "paths", ensemble)
    paths = np.asarray(paths, dtype=float)
    if paths.ndim != 2 or paths.shape[0] < 1:
        raise ValueError("ensemble must be a non-empty 2-d array of paths")
    requested = np.asarray(resolutions, dtype=float)
    if requested.size < 3:
        raise FitError("need at least 3 requested resolutions")
    if np.any(requested <= 0):
        raise ValueError("resolutions must be positive")
    if requested.max() / requested.min() < 10.0 * (1.0 - 1e-12):
        raise ValueError("resolutions must span at least a decade")

    n_t = paths.shape[1]
    blocks = np.arange(_BLOCK_MIN, n_t // _BLOCK_DENOM + 1)
    if blocks.size < 3:
        raise FitError(
            f"n_t = {n_t} leaves fewer than 3 usable block sizes; "
            f"need n_t >= {(_BLOCK_MIN + 2) * _BLOCK_DENOM}")
    dx_1 = _fine_scale(paths)
    if dx_1 <= 0:
        raise FitError("ensemble has no fluctuation scale (constant paths?)")
    achievable_dx = np.sqrt(blocks) * dx_1

    chosen: list[int] = []
    for r in requested:
        idx = int(np.argmin(np.abs(np.log(achievable_dx) - math.log(r))))
        if idx not in chosen:
            chosen.append(idx)
    if len(chosen) < 3:
        raise FitError(
            f"only {len(chosen)} distinct resolution points are achievable; "
            "request a wider or denser ladder")

    sel = np.sort(np.array(chosen))[::-1]  # strictly decreasing dx
    lengths = np.array([
        float(np.abs(_coarse_increments(paths, int(b))).sum(axis=1).mean())
        for b in blocks[sel]])
    if np.any(lengths <= 0):
        raise FitError("coarse path lengths vanished; paths are degenerate")
    fit = fit_power_law(achievable_dx[sel], lengths)
    return HausdorffScan(
        resolutions=achievable_dx[sel],
        mean_lengths=lengths,
        alpha=fit.exponent,
        d_h=1.0 - fit.exponent,
        block_sizes=blocks[sel],
    )


def resolution_ladder(ensemble, points: int = 8) -> np.ndarray:
    """A decade-spanning resolution request matched to an ensemble's scales.

    Returns ``points`` log-spaced dx values from the coarsest achievable
    resolution down a decade — a convenient argument for
    :func:`hausdorff_scan`.
    """
    paths = getattr(ensemble, "paths", ensemble)
    paths = np.asarray(paths, dtype=float)
    if points < 3:
        raise ValueError("need at least 3 points")
    n_t = paths.shape[1]
    b_max = max(n_t // _BLOCK_DENOM, _BLOCK_MIN)
    top = math.sqrt(b_max) * _fine_scale(paths)
    if top <= 0:
        raise FitError("ensemble has no fluctuation scale (constant paths?)")
    return np.geomspace(top, top / 10.0, points)
