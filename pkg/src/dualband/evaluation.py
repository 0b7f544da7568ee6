"""Delay RMSE, single-target Cramer-Rao bound and Monte-Carlo sweeps.

Trials are keyed by ``(master_seed, axis_index, trial_index)`` so any subset
of them can run in any process, and the reduction happens in trial order.
"""

from __future__ import annotations

import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .channel import ScenarioSpec, noise_variance
from .estimators import EstimateSet, RelaxConfig, SteeringOperator, mle_single, omp, relax
from .freqgrid import DualBandConfig, FrequencyGrid, SubcarrierSelection, dual_band

METHODS = ("relax", "omp", "mle")


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class TrialResult:
    trial_index: int
    method: str
    pairs: tuple
    sq_errors: tuple

    @property
    def mse(self) -> float:
        return float(np.mean(self.sq_errors))


def associate_and_rmse(true_taus, est) -> tuple[tuple, float]:
    """Pair estimates with true delays to minimize total squared error.

    Returns ``((tau_true, tau_hat), ...)`` in true-delay order and the
    per-trial mean squared error in s^2. ``est`` is an EstimateSet or a
    sequence of delays.
    """
    true_taus = np.asarray(true_taus, dtype=float)
    hats = est.taus if isinstance(est, EstimateSet) else np.asarray(est, dtype=float)
    L = true_taus.size
    if hats.size != L:
        raise EvaluationError(f"{hats.size} estimates for {L} true targets")
    if L == 0:
        return (), 0.0
    cost = (hats[None, :] - true_taus[:, None]) ** 2
    if L <= 6:
        best, best_cost = None, math.inf
        for perm in itertools.permutations(range(L)):
            c = sum(cost[i, j] for i, j in enumerate(perm))
            if c < best_cost:
                best, best_cost = perm, c
        cols = np.array(best)
    else:
        _, cols = linear_sum_assignment(cost)
    pairs = tuple((float(true_taus[i]), float(hats[j])) for i, j in enumerate(cols))
    mse = float(np.mean([cost[i, j] for i, j in enumerate(cols)]))
    return pairs, mse


def index_spread(sel: SubcarrierSelection) -> int:
    """S = sum_k (k - mean k)^2 over active indices, times M (exact integer)."""
    k = [int(v) for v in sel.active]
    s1 = sum(k)
    s2 = sum(v * v for v in k)
    return len(k) * s2 - s1 * s1


def crb_delay_single(sel: SubcarrierSelection, snr_db: float) -> float:
    """Delay CRB (s^2) for y = alpha a(tau) + n with unknown complex alpha.

    CRB = sigma^2 / (2 |alpha|^2 (2 pi df)^2 S), S = sum (k - kbar)^2,
    with |alpha|^2 / sigma^2 = 10^(snr_db / 10).
    """
    S_times_M = index_spread(sel)
    if S_times_M == 0:
        raise EvaluationError("delay is unidentifiable: all active indices coincide (M = 1)")
    S = S_times_M / sel.M
    var = noise_variance(snr_db)
    w = 2 * math.pi * sel.grid.delta_f
    return var / (2.0 * w * w * S)


@dataclass(frozen=True)
class SweepPoint:
    axis_value: float
    method: str
    rmse: float
    trials: int
    snr_db: float
    gap_hz: float
    crb_std: float = math.nan


@dataclass
class SweepResult:
    """One row per axis point per method; ``axis`` is "snr" or "gap"."""

    axis: str
    points: list = field(default_factory=list)

    def rmse(self, method: str) -> np.ndarray:
        return np.array([p.rmse for p in self.points if p.method == method])

    def axis_values(self, method: str | None = None) -> np.ndarray:
        return np.array([p.axis_value for p in self.points if method in (None, p.method)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.axis == "snr":
            buf.write("snr_db,method,rmse_ns,crb_std_ns,trials,gap_mhz\n")
            for p in self.points:
                buf.write(f"{_fmt(p.snr_db)},{p.method},{_fmt(p.rmse * 1e9)},"
                          f"{_fmt(p.crb_std * 1e9)},{p.trials},{_fmt(p.gap_hz / 1e6)}\n")
        else:
            buf.write("gap_mhz,snr_db,method,rmse_ns,trials\n")
            for p in self.points:
                buf.write(f"{_fmt(p.gap_hz / 1e6)},{_fmt(p.snr_db)},{p.method},"
                          f"{_fmt(p.rmse * 1e9)},{p.trials}\n")
        return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _gap_hz(sel: SubcarrierSelection) -> float:
    """Center-to-center gap of a two-run selection (0 for other layouts)."""
    a = sel.active
    breaks = np.flatnonzero(np.diff(a) != 1)
    if breaks.size == 1:
        return float((a[breaks[0] + 1] - a[0]) * sel.grid.delta_f)
    if breaks.size == 0 and a.size % 2 == 0:
        return float(a.size // 2 * sel.grid.delta_f)
    return 0.0


def run_estimator(method: str, y, op: SteeringOperator, L: int,
                  relax_cfg: RelaxConfig | None = None) -> EstimateSet:
    """Run one estimator with model order fixed to the true target count L."""
    if method == "relax":
        cfg = relax_cfg or RelaxConfig()
        cfg = RelaxConfig(L, cfg.epsilon, cfg.max_refinement_cycles, cfg.cycle_tolerance)
        return relax(y, cfg, op)
    if method == "omp":
        return omp(y, L, op)
    if method == "mle":
        tau, alpha = mle_single(y, op)
        return EstimateSet(((tau, alpha),), math.nan, 0, True)
    raise EvaluationError(f"unknown method {method!r}; expected one of {METHODS}")


def _run_block(scenario: ScenarioSpec, search_osf: int, methods, relax_cfg, axis_index: int,
               trial_indices) -> list[list[TrialResult]]:
    op = SteeringOperator(scenario.sel, osf=search_osf)
    out = []
    for t in trial_indices:
        targets, y = scenario.trial(axis_index, t)
        row = []
        for method in methods:
            est = run_estimator(method, y, op, scenario.L, relax_cfg)
            pairs, _ = associate_and_rmse(targets.taus, est)
            sq = tuple((h - tt) ** 2 for tt, h in pairs)
            row.append(TrialResult(t, method, pairs, sq))
        out.append(row)
    return out


def _run_point(scenario, search_osf, methods, relax_cfg, axis_index, trials, pool, workers):
    """Per-method lists of TrialResult in trial order."""
    if pool is None:
        rows = _run_block(scenario, search_osf, methods, relax_cfg, axis_index, range(trials))
    else:
        n = workers
        blocks = [range(lo, min(trials, lo + math.ceil(trials / n)))
                  for lo in range(0, trials, math.ceil(trials / n))]
        futs = [pool.submit(_run_block, scenario, search_osf, methods, relax_cfg, axis_index, b)
                for b in blocks]
        rows = [row for f in futs for row in f.result()]
    return {m: [row[j] for row in rows] for j, m in enumerate(methods)}


def _validate_methods(methods, L):
    methods = tuple(methods)
    for m in methods:
        if m not in METHODS:
            raise EvaluationError(f"unknown method {m!r}; expected one of {METHODS}")
        if m == "mle" and L != 1:
            raise EvaluationError("mle returns one component; RMSE needs a single-target scenario")
    return methods


def _pool(workers):
    return ProcessPoolExecutor(workers) if workers and workers > 1 else None


def sweep_snr(scenario: ScenarioSpec, methods: Sequence[str], snr_list: Sequence[float],
              trials: int, master_seed: int | None = None, osf: int = 16,
              relax_cfg: RelaxConfig | None = None, workers: int = 1) -> SweepResult:
    """Delay RMSE versus SNR; CRB attached when the scene has one target.

    Trial t at SNR index s draws its gains and noise from key (seed, s, t).
    """
    if trials < 1:
        raise EvaluationError("trials must be >= 1")
    methods = _validate_methods(methods, scenario.L)
    seed = scenario.seed if master_seed is None else master_seed
    gap = _gap_hz(scenario.sel)
    result = SweepResult("snr")
    pool = _pool(workers)
    try:
        for s, snr in enumerate(snr_list):
            sc = scenario.replace(snr_db=float(snr), seed=seed)
            per_method = _run_point(sc, osf, methods, relax_cfg, s, trials, pool, workers)
            crb_std = math.nan
            if scenario.L == 1 and math.isfinite(snr) and scenario.sel.M > 1:
                crb_std = math.sqrt(crb_delay_single(scenario.sel, snr))
            for m in methods:
                mse = [tr.mse for tr in per_method[m]]
                result.points.append(SweepPoint(float(snr), m, math.sqrt(math.fsum(mse) / trials),
                                                trials, float(snr), gap, crb_std))
    finally:
        if pool is not None:
            pool.shutdown()
    return result


def sweep_gap(scenario: ScenarioSpec, method: str | Sequence[str], gap_list: Sequence[int],
              snr_db: float, trials: int, master_seed: int | None = None, N: int = 128,
              start: int = 0, osf: int = 16, relax_cfg: RelaxConfig | None = None,
              workers: int = 1) -> SweepResult:
    """Delay RMSE versus center-to-center gap (in subcarriers).

    The first subband stays at ``start``; the second moves with the gap.
    Trial t at gap index i draws from key (seed, i, t), so different SNRs
    reuse the same gains and unit noise draws.
    """
    if trials < 1:
        raise EvaluationError("trials must be >= 1")
    methods = (method,) if isinstance(method, str) else tuple(method)
    methods = _validate_methods(methods, scenario.L)
    seed = scenario.seed if master_seed is None else master_seed
    grid: FrequencyGrid = scenario.sel.grid
    configs = [DualBandConfig(grid, N, g, start) for g in gap_list]
    result = SweepResult("gap")
    pool = _pool(workers)
    try:
        for i, cfg in enumerate(configs):
            sc = scenario.replace(sel=dual_band(cfg), snr_db=float(snr_db), seed=seed)
            per_method = _run_point(sc, osf, methods, relax_cfg, i, trials, pool, workers)
            for m in methods:
                mse = [tr.mse for tr in per_method[m]]
                result.points.append(SweepPoint(cfg.f_gap, m, math.sqrt(math.fsum(mse) / trials),
                                                trials, float(snr_db), cfg.f_gap))
    finally:
        if pool is not None:
            pool.shutdown()
    return result
