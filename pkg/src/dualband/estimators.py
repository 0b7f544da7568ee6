"""Grid-based delay estimators on a fragmented subcarrier set.

All estimators share one :class:`SteeringOperator`: atoms
``a(tau) = exp(-i 2 pi k df tau)`` over the active indices ``k``, and a
correlation engine returning ``a(tau)^H r`` for every tau on the search grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import MeasurementVector
from .freqgrid import SubcarrierSelection
from .psfprofile import DelayGrid, exp_sum

log = logging.getLogger(__name__)


class SteeringOperator:
    """Atoms and matched-filter correlation for a selection and search grid."""

    def __init__(self, sel: SubcarrierSelection, search_grid: DelayGrid | None = None, osf: int = 16):
        if search_grid is None:
            search_grid = DelayGrid.oversampled(sel.grid, osf)
        search_grid.check(sel.grid)
        self.sel = sel
        self.search_grid = search_grid
        self.taus = search_grid.taus
        self._kdf = sel.active * sel.grid.delta_f

    @property
    def M(self) -> int:
        return self.sel.M

    def steering(self, tau) -> np.ndarray:
        """a(tau) for a scalar tau, or an (M, n) matrix for an array of delays."""
        tau = np.asarray(tau, dtype=float)
        if tau.ndim == 0:
            return np.exp(-2j * np.pi * self._kdf * tau)
        return np.exp(-2j * np.pi * np.outer(self._kdf, tau))

    def atom(self, index: int) -> np.ndarray:
        return self.steering(self.taus[index])

    def correlate(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=complex)
        if r.shape != (self.M,):
            raise ValueError(f"residual length {r.shape} does not match M={self.M}")
        return exp_sum(self.sel.active, r, self.sel.grid.delta_f, self.search_grid, self.sel.grid.K)


@dataclass(frozen=True)
class RelaxConfig:
    L_max: int = 3
    epsilon: float = 0.0
    max_refinement_cycles: int = 20
    cycle_tolerance: float = 1e-8

    def __post_init__(self):
        if self.L_max < 1:
            raise ValueError("L_max must be >= 1")
        if self.max_refinement_cycles < 1:
            raise ValueError("max_refinement_cycles must be >= 1")
        if self.epsilon < 0 or self.cycle_tolerance < 0:
            raise ValueError("epsilon and cycle_tolerance must be >= 0")


@dataclass(frozen=True, eq=False)
class EstimateSet:
    """Estimated (delay, gain) pairs, in acquisition order.

    ``residual_trace`` holds the global residual energy after every
    acquisition and every single-target update.
    """

    components: tuple
    residual_energy: float
    cycles_used: int
    converged: bool
    grid_indices: tuple = ()
    residual_trace: tuple = field(default=(), repr=False)

    @property
    def J(self) -> int:
        return len(self.components)

    @property
    def taus(self) -> np.ndarray:
        return np.array([c[0] for c in self.components], dtype=float)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([c[1] for c in self.components], dtype=complex)


def _samples(y, op: SteeringOperator) -> np.ndarray:
    if isinstance(y, MeasurementVector):
        if y.sel != op.sel:
            raise ValueError("measurement selection differs from the operator's selection")
        return y.y
    y = np.asarray(y, dtype=complex)
    if y.shape != (op.M,):
        raise ValueError(f"measurement length {y.shape} does not match M={op.M}")
    return y


def correlate(op: SteeringOperator, r) -> np.ndarray:
    """c(tau) = a(tau)^H r on the search grid."""
    return op.correlate(r)


def _acquire(op: SteeringOperator, r: np.ndarray, exclude=()) -> tuple[int, complex]:
    mag = np.abs(op.correlate(r))
    if exclude:
        mag[list(exclude)] = -1.0
    # np.argmax returns the first maximum, i.e. the smallest delay on ties
    i = int(np.argmax(mag))
    alpha = complex(np.vdot(op.atom(i), r)) / op.M
    return i, alpha


def acquire(op: SteeringOperator, r) -> tuple[float, complex]:
    """Matched-filter peak and its least-squares amplitude a^H r / M."""
    i, alpha = _acquire(op, _samples(r, op))
    return float(op.taus[i]), alpha


def mle_single(y, op: SteeringOperator) -> tuple[float, complex]:
    """Single-target maximum-likelihood estimate over the search grid."""
    return acquire(op, y)


def _energy(v: np.ndarray) -> float:
    return float(np.vdot(v, v).real)


def relax(y, cfg: RelaxConfig, op: SteeringOperator) -> EstimateSet:
    """RELAX: greedy acquisition followed by cyclic single-target refinement.

    After each new component, every component is re-estimated in turn
    against the residual that removes all other components; cycles repeat
    until the global residual energy drops by less than
    ``cfg.cycle_tolerance`` (relative) or the cycle budget runs out.
    """
    y = _samples(y, op)
    idx: list[int] = []
    alphas: list[complex] = []
    atoms: list[np.ndarray] = []
    trace: list[float] = []
    cycles = 0
    converged = True
    r = y.copy()

    while True:
        i, a = _acquire(op, r)
        idx.append(i)
        alphas.append(a)
        atoms.append(op.atom(i))
        J = len(idx)
        energy = _energy(r - a * atoms[-1])
        trace.append(energy)

        inner_ok = False
        for _ in range(cfg.max_refinement_cycles):
            before = energy
            for ell in range(J):
                others = [alphas[p] * atoms[p] for p in range(J) if p != ell]
                r_ell = y - np.sum(others, axis=0) if others else y
                i, a = _acquire(op, r_ell)
                idx[ell], alphas[ell], atoms[ell] = i, a, op.atom(i)
                energy = _energy(r_ell - a * atoms[ell])
                trace.append(energy)
            cycles += 1
            if before - energy <= cfg.cycle_tolerance * before:
                inner_ok = True
                break
        converged = converged and inner_ok

        r = y - np.sum([alphas[p] * atoms[p] for p in range(J)], axis=0)
        energy = _energy(r)
        if energy <= cfg.epsilon or J >= cfg.L_max:
            break

    log.debug("relax: J=%d cycles=%d residual=%.3e", len(idx), cycles, energy)
    comps = tuple((float(op.taus[i]), complex(a)) for i, a in zip(idx, alphas))
    return EstimateSet(comps, energy, cycles, converged, tuple(idx), tuple(trace))


def omp(y, L_stop: int, op: SteeringOperator) -> EstimateSet:
    """Orthogonal matching pursuit with joint least-squares re-fit of all atoms.

    Each grid point may be picked at most once.
    """
    y = _samples(y, op)
    if not 1 <= L_stop <= op.M:
        raise ValueError(f"L_stop must be in [1, {op.M}], got {L_stop}")
    idx: list[int] = []
    r = y.copy()
    trace = []
    coef = np.zeros(0, dtype=complex)
    for _ in range(L_stop):
        i, a = _acquire(op, r, exclude=idx)
        idx.append(i)
        if len(idx) == 1:
            coef = np.array([a])
            A = op.atom(i)[:, None]
        else:
            A = op.steering(op.taus[idx])
            coef = np.linalg.lstsq(A, y, rcond=None)[0]
        r = y - A @ coef
        trace.append(_energy(r))
    comps = tuple((float(op.taus[i]), complex(a)) for i, a in zip(idx, coef))
    return EstimateSet(comps, trace[-1], L_stop, True, tuple(idx), tuple(trace))
