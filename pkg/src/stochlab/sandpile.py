"""Driven-dissipative sandpile on a rectangular lattice.

A cell holding at least ``threshold`` grains topples, shedding one grain to
each of its four von Neumann neighbours; grains pushed past the boundary
leave the system.  Repeated single-grain drops drive the grid into a
stationary state with scale-free avalanche statistics, recorded per drop by
:func:`drive` as a catalog (size, area, duration, dissipated grains) and an
activity series suitable for spectral analysis.

Relaxation proceeds in parallel rounds: every cell that is unstable at a
round's start topples once in that round.  Topplings commute -- the final
stable configuration does not depend on the order in which unstable cells
fire, or on the order of the drops themselves (:func:`abelian_check` verifies
the latter directly) -- so the parallel schedule reaches the same state as
any sequential queue while letting each round be a handful of whole-grid
array operations.  ``Avalanche.duration`` counts these rounds.

Two activity clocks are recorded.  ``DriveRecord.activity`` is topplings per
drop: the natural driving clock for event statistics.  On that clock the
stationary spectrum is slightly *suppressed* at low frequency -- over a long
window the pile's mass balance pins the summed activity to the drive, so the
series is anti-correlated, not 1/f-like.  ``DriveRecord.round_activity`` is
topplings per parallel relaxation round, the signal resolved inside each
avalanche; its spectrum falls steeply with frequency (smooth pulses kill the
high-frequency power) and is the series to use when looking for
low-frequency dominance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import RngStream

__all__ = [
    "SandGrid",
    "Avalanche",
    "DriveRecord",
    "drop_and_relax",
    "drive",
    "abelian_check",
    "avalanche_ccdf",
]

# Grains shed per toppling: one to each von Neumann neighbour.  The threshold
# may sit above this (a "lazy" pile is still Abelian) but never below it,
# otherwise a toppling could drive a cell's height negative.
_SHED = 4

_SITE_POLICIES = ("uniform-random", "center")


@dataclass
class SandGrid:
    """Mutable sandpile state: integer grain heights with open edges.

    ``heights`` is indexed ``[row, column]``.  A grid is single-owner while
    it is being driven; use :meth:`copy` to branch experiments.

    Parameters
    ----------
    heights:
        Non-negative integer array, shape ``(height, width)``.  The array is
        copied, so the caller's buffer is never aliased.
    threshold:
        A cell topples once its height reaches this value.  Must be at least
        4, because every toppling sheds exactly four grains.
    """

    heights: np.ndarray
    threshold: int = 4

    def __post_init__(self) -> None:
        arr = np.asarray(self.heights)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("heights must be a non-empty 2-d array")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("heights must be an integer array")
        if np.any(arr < 0):
            raise ValueError("heights must be non-negative")
        if int(self.threshold) != self.threshold or self.threshold < _SHED:
            raise ValueError(
                f"threshold must be an integer >= {_SHED} "
                "(each toppling sheds four grains)"
            )
        self.heights = arr.astype(np.int64, copy=True)
        self.threshold = int(self.threshold)

    @classmethod
    def zeros(cls, width: int, height: int, threshold: int = 4) -> "SandGrid":
        """Empty grid of the given dimensions."""
        if width < 1 or height < 1:
            raise ValueError("grid dimensions must be positive")
        return cls(np.zeros((height, width), dtype=np.int64), threshold)

    @property
    def width(self) -> int:
        return self.heights.shape[1]

    @property
    def height(self) -> int:
        return self.heights.shape[0]

    @property
    def center(self) -> tuple[int, int]:
        return (self.height // 2, self.width // 2)

    @property
    def total_grains(self) -> int:
        return int(self.heights.sum())

    @property
    def mean_height(self) -> float:
        return float(self.heights.mean())

    @property
    def is_stable(self) -> bool:
        return bool(np.all(self.heights < self.threshold))

    def copy(self) -> "SandGrid":
        return SandGrid(self.heights, self.threshold)


@dataclass(frozen=True)
class Avalanche:
    """Bookkeeping for one drop's relaxation.

    size:       total topplings
    area:       distinct cells that toppled at least once
    duration:   parallel relaxation rounds until stable
    dissipated: grains lost over the boundary
    """

    size: int
    area: int
    duration: int
    dissipated: int


@dataclass(frozen=True)
class DriveRecord:
    """Per-drop avalanche catalog from :func:`drive`.

    The four catalog arrays and ``mean_heights`` all have one entry per drop;
    ``mean_heights[i]`` is the grid's mean height *after* drop ``i`` relaxed.
    ``round_activity`` runs on the finer parallel-round clock: one sample per
    relaxation round (the number of cells that toppled in it), and a single
    zero sample for a drop that toppled nothing.  Its sum equals the sum of
    ``sizes``.
    """

    sizes: np.ndarray
    areas: np.ndarray
    durations: np.ndarray
    dissipated: np.ndarray
    mean_heights: np.ndarray
    round_activity: np.ndarray

    def __post_init__(self) -> None:
        for arr in (self.sizes, self.areas, self.durations,
                    self.dissipated, self.mean_heights, self.round_activity):
            arr.setflags(write=False)

    @property
    def n_drops(self) -> int:
        return self.sizes.size

    @property
    def activity(self) -> np.ndarray:
        """Topplings per drop -- the activity time series on the drive clock.

        Identical to ``sizes``; the alias exists because the same numbers
        play two roles (event magnitude vs. time series to be Fourier
        analysed).
        """
        return self.sizes


def _relax(heights: np.ndarray,
           threshold: int,
           round_log: list[int] | None = None) -> Avalanche:
    """Topple ``heights`` in place until stable; return the event record.

    When ``round_log`` is given, the per-round toppling counts are appended
    to it (nothing is appended for an event with no topplings).
    """
    size = 0
    duration = 0
    lost = 0
    toppled: np.ndarray | None = None
    while True:
        unstable = heights >= threshold
        n_unstable = int(np.count_nonzero(unstable))
        if n_unstable == 0:
            break
        duration += 1
        size += n_unstable
        if round_log is not None:
            round_log.append(n_unstable)
        if toppled is None:
            toppled = unstable.copy()
        else:
            toppled |= unstable
        shed = unstable.astype(np.int64)
        heights -= _SHED * shed
        # One grain to each neighbour; slices drop the off-grid shifts, whose
        # grains are exactly the boundary-row/column topplers.
        heights[1:, :] += shed[:-1, :]
        heights[:-1, :] += shed[1:, :]
        heights[:, 1:] += shed[:, :-1]
        heights[:, :-1] += shed[:, 1:]
        lost += int(shed[0, :].sum() + shed[-1, :].sum()
                    + shed[:, 0].sum() + shed[:, -1].sum())
    area = 0 if toppled is None else int(toppled.sum())
    return Avalanche(size=size, area=area, duration=duration, dissipated=lost)


def drop_and_relax(grid: SandGrid, site: tuple[int, int]) -> Avalanche:
    """Add one grain at ``site`` and relax the grid to stability in place."""
    row, col = site
    if not (0 <= row < grid.height and 0 <= col < grid.width):
        raise IndexError(f"site {site!r} outside {grid.height}x{grid.width} grid")
    grid.heights[row, col] += 1
    return _relax(grid.heights, grid.threshold)


def drive(grid: SandGrid,
          rng: RngStream,
          n_drops: int,
          site_policy: str = "uniform-random") -> DriveRecord:
    """Drop ``n_drops`` grains one at a time, relaxing fully after each.

    ``site_policy`` is either ``"uniform-random"`` (sites drawn uniformly
    over the grid, all of them up front so the sequence is a pure function
    of the stream) or ``"center"``.  The grid is mutated; drive it long
    enough and its mean height becomes stationary.
    """
    if n_drops < 1:
        raise ValueError("n_drops must be at least 1")
    if site_policy not in _SITE_POLICIES:
        raise ValueError(f"site_policy must be one of {_SITE_POLICIES}")

    if site_policy == "center":
        rows = np.full(n_drops, grid.center[0])
        cols = np.full(n_drops, grid.center[1])
    else:
        rows = rng.gen.integers(0, grid.height, size=n_drops)
        cols = rng.gen.integers(0, grid.width, size=n_drops)

    sizes = np.empty(n_drops, dtype=np.int64)
    areas = np.empty(n_drops, dtype=np.int64)
    durations = np.empty(n_drops, dtype=np.int64)
    dissipated = np.empty(n_drops, dtype=np.int64)
    mean_heights = np.empty(n_drops, dtype=float)
    round_log: list[int] = []

    grains = grid.total_grains
    n_cells = grid.width * grid.height
    heights = grid.heights
    threshold = grid.threshold
    for i in range(n_drops):
        heights[rows[i], cols[i]] += 1
        event = _relax(heights, threshold, round_log)
        if event.duration == 0:
            round_log.append(0)
        sizes[i] = event.size
        areas[i] = event.area
        durations[i] = event.duration
        dissipated[i] = event.dissipated
        grains += 1 - event.dissipated
        mean_heights[i] = grains / n_cells
    return DriveRecord(sizes=sizes, areas=areas, durations=durations,
                       dissipated=dissipated, mean_heights=mean_heights,
                       round_activity=np.asarray(round_log, dtype=np.int64))


def abelian_check(grid: SandGrid,
                  drops: Sequence[tuple[int, int]],
                  rng: RngStream,
                  permutations: int = 5) -> bool:
    """True if every permutation of the drop sequence lands on one state.

    Runs the sequence as given plus ``permutations - 1`` random reshuffles,
    each on a fresh copy of ``grid`` (the input grid is not touched), and
    compares the final stable height arrays exactly.
    """
    if permutations < 2:
        raise ValueError("need at least 2 permutations to compare")
    sites = list(drops)
    reference: np.ndarray | None = None
    for k in range(permutations):
        if k == 0:
            order: Iterable[int] = range(len(sites))
        else:
            order = rng.gen.permutation(len(sites))
        trial = grid.copy()
        for j in order:
            drop_and_relax(trial, sites[j])
        if reference is None:
            reference = trial.heights
        elif not np.array_equal(trial.heights, reference):
            return False
    return True


def avalanche_ccdf(sizes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Complementary CDF ``P(S >= s)`` over the distinct positive sizes.

    Zero-size events (drops that toppled nothing) are excluded: they are
    the no-avalanche outcome, not a point on the size distribution.
    """
    arr = np.asarray(sizes)
    arr = arr[arr > 0]
    if arr.size == 0:
        raise ValueError("no avalanches with positive size")
    values, counts = np.unique(arr, return_counts=True)
    tail = np.cumsum(counts[::-1])[::-1] / arr.size
    return values.astype(float), tail
