import numpy as np
import pytest

from dualband.channel import ScenarioSpec, TargetSet, measurement, trial_rng
from dualband.estimators import (
    EstimateSet, RelaxConfig, SteeringOperator, acquire, correlate, mle_single, omp, relax,
)
from dualband.freqgrid import DualBandConfig, FrequencyGrid, dual_band
from dualband.psfprofile import DelayGrid

from oracles import brute_force_delays, steering

GRID = FrequencyGrid(1024, 312.5e3, 5.2e9)
FAR = dual_band(DualBandConfig(GRID, 128, 896))
OP = SteeringOperator(FAR)
STEP = OP.search_grid.step


def on_grid(tau):
    return round(tau / STEP) * STEP


def test_steering_norm_is_M():
    for tau in (0.0, 12.345e-9, 1.7e-6):
        a = OP.steering(tau)
        assert np.vdot(a, a).real == pytest.approx(FAR.M, rel=1e-14)


def test_correlate_peak_is_M():
    tau0 = 100e-9
    c = correlate(OP, OP.steering(tau0))
    i = int(np.argmax(np.abs(c)))
    assert OP.taus[i] == pytest.approx(tau0, abs=1e-18)
    assert abs(c[i]) == pytest.approx(FAR.M, rel=1e-12)
    assert not np.any(correlate(OP, np.zeros(FAR.M)))


def test_correlation_is_scaled_psf():
    tau0 = on_grid(333e-9)
    c = correlate(OP, OP.steering(tau0))
    # K |p(tau - tau0)| with p evaluated directly
    d = OP.taus - tau0
    p = np.exp(2j * np.pi * np.outer(d, FAR.active * GRID.delta_f)).sum(axis=1) / GRID.K
    np.testing.assert_allclose(np.abs(c), GRID.K * np.abs(p), atol=1e-9)


def test_correlate_length_checked():
    with pytest.raises(ValueError):
        correlate(OP, np.zeros(10))


def test_acquire_single_atom():
    tau, alpha = acquire(OP, 3 * OP.steering(100e-9))
    assert tau == pytest.approx(100e-9, abs=1e-18)
    assert alpha == pytest.approx(3 + 0j, abs=1e-12)
    _, alpha2 = acquire(OP, OP.steering(100e-9) + OP.steering(100e-9))
    assert alpha2 == pytest.approx(2 + 0j, abs=1e-12)


def test_acquire_leakage_bound():
    t1, t2 = on_grid(200e-9), on_grid(900e-9)
    a1, a2 = 5.0 + 1j, 0.3 - 0.2j
    tau, alpha = acquire(OP, a1 * OP.steering(t1) + a2 * OP.steering(t2))
    assert tau == t1
    p = np.exp(2j * np.pi * FAR.active * GRID.delta_f * (t1 - t2)).sum() / GRID.K
    bound = abs(a2) * GRID.K * abs(p) / FAR.M
    assert abs(alpha - a1) <= bound + 1e-12


def test_argmax_ties_pick_smallest_delay():
    class FlatOperator(SteeringOperator):
        def correlate(self, r):
            c = np.zeros(self.taus.size, dtype=complex)
            c[[9, 4, 30]] = [2.0, -2.0, 2j]
            return c

    op = FlatOperator(FAR, DelayGrid.oversampled(GRID, 1))
    tau, _ = acquire(op, np.ones(FAR.M))
    assert tau == op.taus[4]


def test_relax_single_target_exact():
    for tau0 in (on_grid(66e-9), on_grid(1.5e-6)):
        y = measurement(FAR, TargetSet.from_arrays([tau0], [0.7 - 1.1j]))
        est = relax(y, RelaxConfig(L_max=1), OP)
        assert est.taus[0] == tau0
        assert est.alphas[0] == pytest.approx(0.7 - 1.1j, abs=1e-12)
        assert est.residual_energy <= 1e-20 * np.vdot(y.y, y.y).real


def test_relax_three_targets_noiseless_with_brute_force_oracle():
    rng = trial_rng(11, 0)
    taus = np.array([66e-9, 100e-9, 133e-9])
    gains = np.exp(2j * np.pi * rng.uniform(size=3))
    y = measurement(FAR, TargetSet.from_arrays(taus, gains))
    est = relax(y, RelaxConfig(L_max=3), OP)
    assert np.all(np.abs(np.sort(est.taus) - taus) <= STEP)
    coarse = np.arange(50, 151) * 1e-9
    bf, cost = brute_force_delays(y.y, FAR.active, GRID.delta_f, coarse, 3)
    np.testing.assert_allclose(bf, taus, atol=1e-15)
    assert cost < 1e-18
    assert np.all(np.abs(np.sort(est.taus) - bf) <= 1e-9)


def test_relax_pure_noise_keeps_reducing_residual():
    rng = np.random.default_rng(5)
    y = (rng.standard_normal(FAR.M) + 1j * rng.standard_normal(FAR.M)) / np.sqrt(2)
    est = relax(y, RelaxConfig(L_max=3, epsilon=0.0), OP)
    assert est.J == 3
    energies = [np.vdot(y, y).real]
    for J in range(1, 4):
        energies.append(relax(y, RelaxConfig(L_max=J), OP).residual_energy)
    assert all(b < a for a, b in zip(energies, energies[1:]))


def test_relax_residual_trace_monotone_and_consistent():
    sc = ScenarioSpec(FAR, [66e-9, 100e-9, 133e-9], "rayleigh", snr_db=10, seed=3)
    for t in range(10):
        _, y = sc.trial(0, t)
        est = relax(y, RelaxConfig(L_max=3), OP)
        tr = np.array(est.residual_trace)
        assert np.all(np.diff(tr) <= 1e-12 * np.vdot(y.y, y.y).real)
        # objective recomputed independently of the estimator's bookkeeping
        A = steering(FAR.active, GRID.delta_f, est.taus)
        obj = np.sum(np.abs(y.y - A @ est.alphas) ** 2)
        assert est.residual_energy == pytest.approx(obj, rel=1e-10)
        assert np.all(OP.taus[list(est.grid_indices)] == est.taus)


def test_relax_epsilon_stops_early():
    y = measurement(FAR, TargetSet.from_arrays([on_grid(250e-9)], [1.0]))
    est = relax(y, RelaxConfig(L_max=5, epsilon=1e-9), OP)
    assert est.J == 1
    assert est.converged


def test_relax_deterministic():
    sc = ScenarioSpec(FAR, [66e-9, 100e-9, 133e-9], "rayleigh", snr_db=5, seed=8)
    _, y = sc.trial(0, 0)
    a = relax(y, RelaxConfig(L_max=3), OP)
    b = relax(y, RelaxConfig(L_max=3), OP)
    assert a.components == b.components
    assert a.residual_trace == b.residual_trace


def test_relax_cycle_budget_reported():
    sc = ScenarioSpec(FAR, [66e-9, 100e-9, 133e-9], "rayleigh", snr_db=0, seed=8)
    _, y = sc.trial(0, 1)
    est = relax(y, RelaxConfig(L_max=3, max_refinement_cycles=1, cycle_tolerance=0.0), OP)
    assert est.cycles_used == 3
    assert isinstance(est.converged, bool)


def test_single_component_equivalence():
    sc = ScenarioSpec(FAR, [100e-9], "rayleigh", snr_db=0, seed=1)
    for t in range(5):
        _, y = sc.trial(0, t)
        r = relax(y, RelaxConfig(L_max=1), OP)
        o = omp(y, 1, OP)
        m = mle_single(y, OP)
        assert r.components == o.components == (m,)
        assert m == acquire(OP, y)


def test_omp_well_separated_exact():
    taus = np.array([on_grid(50e-9), on_grid(400e-9), on_grid(1200e-9)])
    y = measurement(FAR, TargetSet.from_arrays(taus, [1.0, -0.5j, 0.8 + 0.1j]))
    est = omp(y, 3, OP)
    np.testing.assert_array_equal(np.sort(est.taus), taus)
    assert est.residual_energy < 1e-20
    bf, _ = brute_force_delays(y.y, FAR.active, GRID.delta_f, taus, 3)
    np.testing.assert_array_equal(bf, taus)


def test_omp_distinct_atoms():
    y = np.zeros(FAR.M, dtype=complex)
    est = omp(y, 4, OP)
    assert len(set(est.grid_indices)) == 4
    with pytest.raises(ValueError):
        omp(y, 0, OP)


def test_measurement_selection_must_match():
    other = dual_band(DualBandConfig(GRID, 128, 384))
    y = measurement(other, TargetSet())
    with pytest.raises(ValueError):
        relax(y, RelaxConfig(), OP)


def test_relax_config_validation():
    with pytest.raises(ValueError):
        RelaxConfig(L_max=0)
    with pytest.raises(ValueError):
        RelaxConfig(max_refinement_cycles=0)
    with pytest.raises(ValueError):
        RelaxConfig(epsilon=-1)


def test_estimate_set_accessors():
    est = EstimateSet(((1e-9, 1j), (2e-9, 2.0)), 0.5, 1, True)
    assert est.J == 2
    np.testing.assert_array_equal(est.taus, [1e-9, 2e-9])
    np.testing.assert_array_equal(est.alphas, [1j, 2.0])
