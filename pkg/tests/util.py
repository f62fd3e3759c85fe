"""Shared helpers for the test suite: state generators and slow reference oracles."""

import numpy as np
from scipy.sparse import diags, identity
from scipy.sparse.linalg import splu

from stochlab.core import RngStream
from stochlab.quantum import Grid1D, WaveState


def count_local_maxima(values) -> int:
    """Strict interior local maxima of a sampled curve."""
    y = np.asarray(values, dtype=float)
    return int(np.sum((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])))


def random_smooth_state(grid: Grid1D, rng: RngStream, hbar: float = 1.0,
                        mass: float = 1.0) -> WaveState:
    """A random localized, band-limited, normalized state on the grid."""
    n = grid.n_points
    span = grid.x_max - grid.x_min
    mode_index = np.fft.fftfreq(n, d=1.0 / n)  # integer mode numbers
    cutoff = rng.gen.uniform(6.0, n / 8.0)
    coeffs = rng.gen.standard_normal(n) + 1j * rng.gen.standard_normal(n)
    coeffs *= np.exp(-((mode_index / cutoff) ** 2))
    field = np.fft.ifft(coeffs)
    # A localizing envelope keeps probability away from the periodic seam.
    center = rng.gen.uniform(grid.x_min + 0.35 * span, grid.x_max - 0.35 * span)
    width = rng.gen.uniform(span / 40.0, span / 10.0)
    envelope = np.exp(-((grid.points - center) ** 2) / (4.0 * width**2))
    return WaveState.from_samples(grid, field * envelope, hbar=hbar, mass=mass)


def brownian_bridge_paths(n_paths: int, n_t: int, step_var: float,
                          rng: RngStream) -> np.ndarray:
    """Exact fixed-endpoint free-path ensemble (both endpoints at zero).

    Direct Gaussian construction — cumulative independent increments of
    variance ``step_var`` pinned back to zero at the last slice — giving the
    same distribution a kinetic-only Boltzmann weight assigns, without any
    Markov chain.
    """
    steps = rng.gen.normal(0.0, np.sqrt(step_var), size=(n_paths, n_t - 1))
    walk = np.concatenate(
        [np.zeros((n_paths, 1)), np.cumsum(steps, axis=1)], axis=1)
    return walk - walk[:, -1:] * (np.arange(n_t) / (n_t - 1))


def crank_nicolson_free_evolution(state: WaveState, t: float,
                                  steps: int) -> np.ndarray:
    """Free evolution by a periodic Crank-Nicolson finite-difference scheme.

    Deliberately independent of the spectral route: second-order in time and
    space, unitary, and slow.  Used only as a cross-check oracle.
    """
    n = state.grid.n_points
    dx = state.grid.dx
    dt = t / steps
    kin = state.hbar**2 / (2.0 * state.mass * dx**2)
    laplacian = diags(
        [1.0, 1.0, -2.0, 1.0, 1.0],
        offsets=[-(n - 1), -1, 0, 1, n - 1],
        shape=(n, n),
        format="csc",
        dtype=complex,
    )
    hamiltonian = -kin * laplacian
    factor = 1j * dt / (2.0 * state.hbar)
    forward = (identity(n, format="csc", dtype=complex) + factor * hamiltonian).tocsc()
    backward = (identity(n, format="csc", dtype=complex) - factor * hamiltonian).tocsr()
    solver = splu(forward)
    psi = np.array(state.values, dtype=complex)
    for _ in range(steps):
        psi = solver.solve(backward @ psi)
    return psi


def low_high_power_ratio(signal, segments: int = 8) -> float:
    """Mean periodogram power over the lowest decile of positive-frequency
    bins divided by the mean over the highest decile."""
    from stochlab.core import periodogram

    spectrum = periodogram(np.asarray(signal, dtype=float), 1.0, segments)
    power = spectrum.power[spectrum.frequencies > 0]
    k = max(1, power.size // 10)
    return float(power[:k].mean() / power[-k:].mean())
