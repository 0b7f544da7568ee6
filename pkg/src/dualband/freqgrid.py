"""Frequency grid and subcarrier selection.

A :class:`FrequencyGrid` fixes the K-point subcarrier raster; a
:class:`SubcarrierSelection` marks which of those subcarriers are observed.
Dual-band layouts are described by :class:`DualBandConfig` in index units so
every configuration is exactly representable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Invalid grid, selection or band layout."""


@dataclass(frozen=True)
class FrequencyGrid:
    K: int
    delta_f: float
    f_carrier: float = 0.0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise ConfigurationError(f"K must be an integer >= 2, got {self.K!r}")
        if not self.delta_f > 0:
            raise ConfigurationError(f"delta_f must be positive, got {self.delta_f!r}")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "delta_f", float(self.delta_f))

    @property
    def span(self) -> float:
        """Total span B = K * delta_f in Hz."""
        return self.K * self.delta_f

    @property
    def max_delay(self) -> float:
        """Unambiguous delay range 1/delta_f (exclusive upper bound)."""
        return 1.0 / self.delta_f

    @property
    def resolution(self) -> float:
        """Natural delay spacing 1/(K delta_f)."""
        return 1.0 / self.span


@dataclass(frozen=True, eq=False)
class SubcarrierSelection:
    """Set of active subcarrier indices on a grid.

    ``active`` is stored as a read-only ``int64`` array, strictly increasing.
    """

    grid: FrequencyGrid
    active: np.ndarray = field(repr=False)

    def __post_init__(self):
        idx = np.asarray(self.active)
        if idx.ndim != 1 or idx.size == 0:
            raise ConfigurationError("selection needs at least one active index")
        if not np.issubdtype(idx.dtype, np.integer):
            if not np.all(idx == np.round(idx)):
                raise ConfigurationError("active indices must be integers")
        idx = idx.astype(np.int64)
        if np.any(np.diff(idx) <= 0):
            raise ConfigurationError("active indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= self.grid.K:
            raise ConfigurationError(f"active indices must lie in [0, {self.grid.K - 1}]")
        idx.setflags(write=False)
        object.__setattr__(self, "active", idx)

    @classmethod
    def from_indices(cls, grid: FrequencyGrid, indices) -> "SubcarrierSelection":
        """Build from an arbitrary iterable of indices (sorted, duplicates rejected)."""
        idx = np.asarray(list(indices), dtype=np.int64)
        if np.unique(idx).size != idx.size:
            raise ConfigurationError("duplicate active indices")
        return cls(grid, np.sort(idx))

    @property
    def M(self) -> int:
        return int(self.active.size)

    @property
    def mask(self) -> np.ndarray:
        """Binary selection function W[k], k = 0..K-1."""
        w = np.zeros(self.grid.K, dtype=np.int8)
        w[self.active] = 1
        return w

    def __eq__(self, other):
        if not isinstance(other, SubcarrierSelection):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.active, other.active)

    def __hash__(self):
        return hash((self.grid, self.active.tobytes()))

    def __repr__(self):
        return f"SubcarrierSelection(K={self.grid.K}, M={self.M}, runs={_runs(self.active)})"


def _runs(idx):
    breaks = np.flatnonzero(np.diff(idx) != 1)
    starts = np.concatenate(([0], breaks + 1))
    stops = np.concatenate((breaks, [idx.size - 1]))
    return [(int(idx[a]), int(idx[b])) for a, b in zip(starts, stops)]


@dataclass(frozen=True)
class DualBandConfig:
    """Two equal-width subbands, ``g`` subcarriers apart (center to center)."""

    grid: FrequencyGrid
    N: int
    g: int
    start: int = 0

    def __post_init__(self):
        for name in ("N", "g", "start"):
            v = getattr(self, name)
            if int(v) != v:
                raise ConfigurationError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.N < 1:
            raise ConfigurationError(f"N must be positive, got {self.N}")
        if self.start < 0:
            raise ConfigurationError(f"start must be non-negative, got {self.start}")
        if self.g < self.N:
            raise ConfigurationError(
                f"subbands overlap: gap g={self.g} is smaller than subband width N={self.N}")
        if self.start + self.g + self.N > self.grid.K:
            raise ConfigurationError(
                f"second subband [{self.start + self.g}, {self.start + self.g + self.N - 1}] "
                f"exceeds grid of K={self.grid.K}")

    @property
    def f_gap(self) -> float:
        return self.g * self.grid.delta_f

    @property
    def B_sub(self) -> float:
        return self.N * self.grid.delta_f


def full_band(grid: FrequencyGrid) -> SubcarrierSelection:
    return SubcarrierSelection(grid, np.arange(grid.K, dtype=np.int64))


def dual_band(cfg: DualBandConfig) -> SubcarrierSelection:
    """Active set {start..start+N-1} U {start+g..start+g+N-1}."""
    first = np.arange(cfg.start, cfg.start + cfg.N, dtype=np.int64)
    return SubcarrierSelection(cfg.grid, np.concatenate((first, first + cfg.g)))


def is_contiguous(sel: SubcarrierSelection) -> bool:
    return int(sel.active[-1] - sel.active[0]) + 1 == sel.M
