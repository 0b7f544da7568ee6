"""Delay profiles, the selection-induced PSF and its shape metrics.

Everything here evaluates the exponential sum

    s(tau) = (1/K) * sum_k x[k] * exp(+i 2 pi k df tau)

on a :class:`DelayGrid`. Grids whose step is ``1/(osf * K * df)`` for an
integer ``osf`` go through a zero-padded FFT; any other step is evaluated
pointwise. Both paths compute the same sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .freqgrid import DualBandConfig, FrequencyGrid, SubcarrierSelection

_CHUNK = 4096


@dataclass(frozen=True)
class DelayGrid:
    tau_min: float
    tau_max: float
    step: float

    def __post_init__(self):
        if not (0 <= self.tau_min < self.tau_max):
            raise ValueError(f"need 0 <= tau_min < tau_max, got [{self.tau_min}, {self.tau_max}]")
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")

    @classmethod
    def oversampled(cls, fgrid: FrequencyGrid, osf: int = 16, tau_min: float = 0.0,
                    tau_max: float | None = None) -> "DelayGrid":
        """Grid with step 1/(osf*K*df); default span is the whole range [0, 1/df)."""
        if int(osf) != osf or osf < 1:
            raise ValueError(f"osf must be a positive integer, got {osf!r}")
        step = 1.0 / (osf * fgrid.span)
        if tau_max is None:
            tau_max = (osf * fgrid.K - 1) * step
        return cls(tau_min, tau_max, step)

    @property
    def points(self) -> int:
        return int(math.floor((self.tau_max - self.tau_min) / self.step + 1e-9)) + 1

    @property
    def taus(self) -> np.ndarray:
        return self.tau_min + self.step * np.arange(self.points)

    def check(self, fgrid: FrequencyGrid) -> None:
        if self.tau_max * fgrid.delta_f > 1.0 + 1e-12:
            raise ValueError(
                f"tau_max={self.tau_max:.6g} s beyond unambiguous range {fgrid.max_delay:.6g} s")

    def fft_size(self, fgrid: FrequencyGrid) -> int | None:
        """Transform length osf*K if the step is 1/(osf*K*df), else None."""
        osf = 1.0 / (self.step * fgrid.span)
        n = round(osf)
        if n >= 1 and abs(osf - n) <= 1e-9 * n:
            return n * fgrid.K
        return None


@dataclass(frozen=True, eq=False)
class DelayProfile:
    grid: DelayGrid
    values: np.ndarray = field(repr=False)
    period: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.points,):
            raise ValueError(f"expected {self.grid.points} values, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def taus(self) -> np.ndarray:
        return self.grid.taus

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass(frozen=True)
class PsfMetrics:
    mainlobe_first_null: float
    peak_sidelobe_level_db: float
    highest_sidelobe_delay: float


class MetricsError(ValueError):
    """Profile too coarse or too short to locate the mainlobe null."""


def exp_sum(k, coeffs, delta_f: float, dgrid: DelayGrid, K: int | None = None) -> np.ndarray:
    """sum_j coeffs[j] * exp(+i 2 pi k[j] df tau) for every tau on ``dgrid`` (no 1/K)."""
    k = np.asarray(k, dtype=np.int64)
    coeffs = np.asarray(coeffs, dtype=complex)
    taus = dgrid.taus
    if K is not None:
        P = dgrid.fft_size(FrequencyGrid(K, delta_f))
        if P is not None:
            x = np.zeros(P, dtype=complex)
            # tau_min offset applied as a phase ramp on the input
            x[k] = coeffs * np.exp(2j * np.pi * k * delta_f * dgrid.tau_min)
            full = np.fft.ifft(x) * P
            return full[np.arange(dgrid.points) % P]
    out = np.empty(taus.size, dtype=complex)
    kdf = k * delta_f
    for lo in range(0, taus.size, _CHUNK):
        t = taus[lo:lo + _CHUNK]
        out[lo:lo + _CHUNK] = np.exp(2j * np.pi * np.outer(t, kdf)) @ coeffs
    return out


def delay_profile(H, dgrid: DelayGrid, fgrid: FrequencyGrid) -> DelayProfile:
    """IDFT profile h(tau) = (1/K) sum_k H[k] exp(+i 2 pi k df tau)."""
    H = np.asarray(H, dtype=complex)
    if H.shape != (fgrid.K,):
        raise ValueError(f"H must have length K={fgrid.K}, got shape {H.shape}")
    dgrid.check(fgrid)
    nz = np.flatnonzero(H)
    vals = exp_sum(nz, H[nz], fgrid.delta_f, dgrid, fgrid.K) / fgrid.K
    return DelayProfile(dgrid, vals, fgrid.max_delay)


def psf(sel: SubcarrierSelection, dgrid: DelayGrid) -> DelayProfile:
    """Point-spread function p(tau) = (1/K) sum_k W[k] exp(+i 2 pi k df tau)."""
    return delay_profile(sel.mask.astype(complex), dgrid, sel.grid)


def psf_dualband_closed_form(cfg: DualBandConfig, dgrid: DelayGrid) -> DelayProfile:
    """Dual-band PSF as (1 + exp(i 2 pi f_gap tau)) times the single-subband sum.

    A nonzero ``cfg.start`` contributes the extra phase ramp
    exp(i 2 pi start df tau).
    """
    fgrid = cfg.grid
    dgrid.check(fgrid)
    taus = dgrid.taus
    df = fgrid.delta_f
    envelope = np.zeros(taus.size, dtype=complex)
    for m in range(cfg.N):
        envelope += np.exp(2j * np.pi * m * df * taus)
    envelope /= fgrid.K
    modulation = 1.0 + np.exp(2j * np.pi * cfg.f_gap * taus)
    if cfg.start:
        modulation = modulation * np.exp(2j * np.pi * cfg.start * df * taus)
    return DelayProfile(dgrid, modulation * envelope, fgrid.max_delay)


def _refine_null(values: np.ndarray, i: int) -> tuple[float, float]:
    """Sub-sample null near index i via a complex quadratic through i-1, i, i+1.

    Returns (offset in samples, |interpolated value|).
    """
    pm, p0, pp = values[i - 1], values[i], values[i + 1]
    b = (pp - pm) / 2.0
    a = (pp + pm) / 2.0 - p0

    def mag(t):
        return abs(p0 + b * t + a * t * t)

    res = minimize_scalar(mag, bounds=(-1.0, 1.0), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x), float(res.fun)


def psf_metrics(p: DelayProfile, null_fraction: float = 0.01) -> PsfMetrics:
    """First null, peak sidelobe level and its delay for a profile starting at tau = 0.

    The mainlobe ends at the first local minimum of |p| moving outward from
    tau = 0; that minimum must drop below ``null_fraction`` of the peak after
    sub-sample refinement, otherwise the grid is judged too coarse.
    """
    if p.grid.tau_min != 0:
        raise MetricsError("profile must start at tau = 0")
    mag = p.magnitude
    if mag.size < 3 or mag[0] == 0:
        raise MetricsError("profile too short or zero at tau = 0")
    peak = mag[0]
    inner = np.flatnonzero((mag[1:-1] <= mag[:-2]) & (mag[1:-1] <= mag[2:])) + 1
    if inner.size == 0:
        raise MetricsError("no local minimum found; extend the delay grid")
    i = int(inner[0])
    offset, floor = _refine_null(p.values, i)
    if floor > null_fraction * peak:
        raise MetricsError(
            f"first local minimum at {p.taus[i]:.6g} s is {floor / peak:.3g} of peak; "
            "grid too coarse to locate a null")
    step = p.grid.step
    first_null = p.taus[i] + offset * step

    taus = p.taus
    side = np.arange(mag.size) >= i
    if p.period is not None:
        # periodic replica of the mainlobe near tau = period
        side &= taus <= p.period - first_null
    if not np.any(side):
        raise MetricsError("no sidelobe region on this grid")
    cand = np.flatnonzero(side)
    top = mag[cand].max()
    # mirror sidelobes (tau and period - tau) tie up to rounding; report the nearer one
    j = int(cand[np.argmax(mag[cand] >= top * (1 - 1e-9))])
    psl = 20.0 * math.log10(mag[j] / peak) if mag[j] > 0 else -math.inf
    return PsfMetrics(float(first_null), min(psl, 0.0), float(taus[j]))


def reconstruct_full_band(estimates, fgrid: FrequencyGrid) -> np.ndarray:
    """Full-band response sum_l alpha_l * b(tau_l), k = 0..K-1.

    ``estimates`` is anything exposing ``taus`` and ``alphas`` arrays
    (an ``EstimateSet`` or a ``TargetSet``).
    """
    taus = np.asarray(estimates.taus, dtype=float)
    alphas = np.asarray(estimates.alphas, dtype=complex)
    k = np.arange(fgrid.K)
    if taus.size == 0:
        return np.zeros(fgrid.K, dtype=complex)
    return np.exp(-2j * np.pi * np.outer(k * fgrid.delta_f, taus)) @ alphas
