"""Multi-target CFR synthesis, AWGN and Rayleigh gains.

SNR convention: per-subcarrier SNR = E|alpha|^2 / sigma^2 with E|alpha|^2 = 1,
so the noise variance is ``10 ** (-snr_db / 10)``. ``snr_db = inf`` means
noiseless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .freqgrid import SubcarrierSelection


class DelayRangeError(ValueError):
    """Target delay outside the unambiguous range [0, 1/delta_f)."""


@dataclass(frozen=True)
class Target:
    tau: float
    alpha: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise DelayRangeError(f"target delay must be finite and >= 0, got {self.tau!r}")
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "alpha", complex(self.alpha))


@dataclass(frozen=True)
class TargetSet:
    targets: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))

    @classmethod
    def from_arrays(cls, taus, alphas) -> "TargetSet":
        taus = list(taus)
        alphas = list(alphas)
        if len(taus) != len(alphas):
            raise ValueError(f"{len(taus)} delays but {len(alphas)} gains")
        return cls(tuple(Target(t, a) for t, a in zip(taus, alphas)))

    def __len__(self):
        return len(self.targets)

    def __iter__(self):
        return iter(self.targets)

    def __add__(self, other: "TargetSet") -> "TargetSet":
        return TargetSet(self.targets + other.targets)

    @property
    def L(self) -> int:
        return len(self.targets)

    @property
    def taus(self) -> np.ndarray:
        return np.array([t.tau for t in self.targets], dtype=float)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([t.alpha for t in self.targets], dtype=complex)


@dataclass(frozen=True, eq=False)
class MeasurementVector:
    """CFR samples on the active subcarriers, ascending index order."""

    sel: SubcarrierSelection
    y: np.ndarray = field(repr=False)
    noise_variance: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=complex)
        if y.shape != (self.sel.M,):
            raise ValueError(f"expected {self.sel.M} samples, got shape {y.shape}")
        if not self.noise_variance >= 0:
            raise ValueError("noise_variance must be >= 0")
        object.__setattr__(self, "y", y)


def noise_variance(snr_db: float) -> float:
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise ValueError(f"snr_db must be finite or +inf, got {snr_db!r}")
    if snr_db == math.inf:
        return 0.0
    return 10.0 ** (-snr_db / 10.0)


def check_delays(sel: SubcarrierSelection, taus) -> None:
    limit = sel.grid.max_delay
    for tau in np.atleast_1d(np.asarray(taus, dtype=float)):
        if not (0 <= tau and tau * sel.grid.delta_f < 1.0 - 1e-12):
            raise DelayRangeError(
                f"delay {tau:.6g} s outside unambiguous range [0, {limit:.6g}) s")


def _phase_ramps(k: np.ndarray, delta_f: float, taus: np.ndarray) -> np.ndarray:
    # shape (len(k), len(taus)); exp(-i 2 pi k df tau)
    return np.exp(-2j * np.pi * np.outer(k * delta_f, taus))


def measurement(sel: SubcarrierSelection, targets: TargetSet) -> MeasurementVector:
    """Noiseless samples y[m] = sum_l alpha_l exp(-i 2 pi k_m df tau_l)."""
    check_delays(sel, targets.taus)
    if targets.L == 0:
        return MeasurementVector(sel, np.zeros(sel.M, dtype=complex))
    y = _phase_ramps(sel.active, sel.grid.delta_f, targets.taus) @ targets.alphas
    return MeasurementVector(sel, y)


def synth_cfr(sel: SubcarrierSelection, targets: TargetSet) -> np.ndarray:
    """Length-K CFR with zeros on inactive subcarriers."""
    H = np.zeros(sel.grid.K, dtype=complex)
    H[sel.active] = measurement(sel, targets).y
    return H


def add_awgn(m: MeasurementVector, snr_db: float, rng: np.random.Generator) -> MeasurementVector:
    """Add circularly-symmetric complex Gaussian noise of variance 10^(-snr_db/10)."""
    var = noise_variance(snr_db)
    if var == 0.0:
        return MeasurementVector(m.sel, m.y.copy(), 0.0)
    n = rng.standard_normal((2, m.sel.M))
    noise = math.sqrt(var / 2.0) * (n[0] + 1j * n[1])
    return MeasurementVector(m.sel, m.y + noise, var)


def draw_gains(L: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) gains; magnitudes are Rayleigh with scale 1/sqrt(2)."""
    if L < 0:
        raise ValueError("L must be >= 0")
    z = rng.standard_normal((2, L))
    return (z[0] + 1j * z[1]) / math.sqrt(2.0)


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one trial, keyed by (seed, *key).

    Streams depend only on the key, never on how many other trials ran
    before, so sweeps are reproducible under any execution order.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in key)]))


@dataclass(frozen=True)
class ScenarioSpec:
    """Fixed delays, a gain model and an SNR; one seed fixes a whole trial.

    ``delay_jitter > 0`` offsets every delay by an independent U[0, jitter)
    draw per trial, which averages out the alignment of the targets with a
    search grid.
    """

    sel: SubcarrierSelection
    true_delays: Sequence[float]
    gain_model: str = "rayleigh"
    fixed_gains: Sequence[complex] | None = None
    snr_db: float = math.inf
    seed: int = 0
    delay_jitter: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "true_delays", tuple(float(t) for t in self.true_delays))
        check_delays(self.sel, self.true_delays)
        if not self.delay_jitter >= 0:
            raise ValueError("delay_jitter must be >= 0")
        if self.delay_jitter:
            check_delays(self.sel, [t + self.delay_jitter for t in self.true_delays])
        if self.gain_model not in ("rayleigh", "fixed"):
            raise ValueError(f"unknown gain model {self.gain_model!r}")
        if self.gain_model == "fixed":
            gains = self.fixed_gains
            if gains is None:
                gains = [1.0] * len(self.true_delays)
            gains = tuple(complex(a) for a in gains)
            if len(gains) != len(self.true_delays):
                raise ValueError(f"{len(self.true_delays)} delays but {len(gains)} fixed gains")
            object.__setattr__(self, "fixed_gains", gains)
        noise_variance(self.snr_db)
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def L(self) -> int:
        return len(self.true_delays)

    def replace(self, **changes) -> "ScenarioSpec":
        return replace(self, **changes)

    def draw(self, rng: np.random.Generator) -> tuple[TargetSet, MeasurementVector]:
        """One realization: gains, delay jitter, then noise, from one stream."""
        if self.gain_model == "fixed":
            gains = np.array(self.fixed_gains, dtype=complex)
        else:
            gains = draw_gains(self.L, rng)
        taus = np.array(self.true_delays)
        if self.delay_jitter:
            taus = taus + rng.uniform(0.0, self.delay_jitter, self.L)
        targets = TargetSet.from_arrays(taus, gains)
        clean = measurement(self.sel, targets)
        return targets, add_awgn(clean, self.snr_db, rng)

    def trial(self, *key: int) -> tuple[TargetSet, MeasurementVector]:
        return self.draw(trial_rng(self.seed, *key))
