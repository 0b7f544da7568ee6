import math

import numpy as np
import pytest

from dualband.channel import Target, TargetSet, draw_gains, synth_cfr
from dualband.freqgrid import DualBandConfig, FrequencyGrid, SubcarrierSelection, dual_band, full_band
from dualband.psfprofile import (
    DelayGrid, MetricsError, delay_profile, exp_sum, psf, psf_dualband_closed_form,
    psf_metrics, reconstruct_full_band,
)

GRID = FrequencyGrid(1024, 312.5e3, 5.2e9)
DG16 = DelayGrid.oversampled(GRID, 16)


def direct_psf(active, K, df, taus):
    """Oracle: (1/K) sum over active k of exp(+i 2 pi k df tau), any real tau."""
    taus = np.asarray(taus, dtype=float)
    return np.exp(2j * np.pi * np.outer(taus, np.asarray(active) * df)).sum(axis=1) / K


def test_default_grid_geometry():
    assert DG16.step == pytest.approx(1 / (16 * 320e6), rel=1e-15)
    assert DG16.step * 1e9 == pytest.approx(0.1953125)
    assert DG16.points == 16 * 1024
    assert DG16.fft_size(GRID) == 16 * 1024
    assert DelayGrid(0, 1e-6, 3.3e-10).fft_size(GRID) is None


def test_fft_and_pointwise_paths_agree():
    rng = np.random.default_rng(1)
    k = np.sort(rng.choice(1024, 200, replace=False))
    c = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    grid = DelayGrid.oversampled(GRID, 4, tau_min=40 * 1 / (4 * 320e6), tau_max=300e-9)
    fast = exp_sum(k, c, GRID.delta_f, grid, GRID.K)
    slow = exp_sum(k, c, GRID.delta_f, grid)
    np.testing.assert_allclose(fast, slow, rtol=0, atol=1e-10)


def test_unit_peak_on_natural_grid():
    tau0 = 32 / GRID.span  # 100 ns
    H = synth_cfr(full_band(GRID), TargetSet([Target(tau0)]))
    prof = delay_profile(H, DG16, GRID)
    i = int(np.argmax(prof.magnitude))
    assert prof.taus[i] == pytest.approx(tau0, abs=1e-18)
    assert prof.magnitude[i] == pytest.approx(1.0, abs=1e-12)


def test_zero_cfr_zero_profile():
    assert not np.any(delay_profile(np.zeros(1024), DG16, GRID).values)


def test_full_band_dirichlet_first_null():
    p = psf(full_band(GRID), DG16)
    # zeros of the K-term sum at tau = q/(K df)
    assert abs(p.values[16]) < 1e-12
    m = psf_metrics(p)
    assert m.mainlobe_first_null == pytest.approx(3.125e-9, abs=1e-15)


def test_psf_peak_is_fill_ratio():
    for sel in (dual_band(DualBandConfig(GRID, 128, 896)), full_band(GRID),
                SubcarrierSelection.from_indices(GRID, [3, 40, 41, 900])):
        p = psf(sel, DG16)
        assert p.values[0] == pytest.approx(sel.M / GRID.K, abs=1e-14)
    assert psf(dual_band(DualBandConfig(GRID, 128, 896)), DG16).values[0].real == pytest.approx(0.25)


def test_adjacent_psf_is_2n_dirichlet():
    p = psf(dual_band(DualBandConfig(GRID, 128, 128)), DG16)
    # 256-term Dirichlet kernel in closed form
    x = np.pi * GRID.delta_f * p.taus
    with np.errstate(invalid="ignore", divide="ignore"):
        dirichlet = np.abs(np.sin(256 * x) / np.sin(x)) / 1024
    dirichlet[0] = 0.25
    np.testing.assert_allclose(p.magnitude, dirichlet, atol=1e-12)
    assert psf_metrics(p).mainlobe_first_null == pytest.approx(12.5e-9, abs=1e-15)


def test_far_gap_cosine_null():
    cfg = DualBandConfig(GRID, 128, 896)
    null = 1 / (2 * cfg.f_gap)
    assert null == pytest.approx(1.7857142857e-9, rel=1e-9)
    m = psf_metrics(psf(dual_band(cfg), DG16))
    assert m.mainlobe_first_null == pytest.approx(null, abs=0.01e-9)
    cf = psf_dualband_closed_form(cfg, DelayGrid(null, 2 * null, null))
    assert abs(cf.values[0]) < 1e-15


def test_closed_form_identity_table1():
    for g in (128, 384, 896):
        cfg = DualBandConfig(GRID, 128, g)
        a = psf(dual_band(cfg), DG16).values
        b = psf_dualband_closed_form(cfg, DG16).values
        assert np.abs(a - b).max() <= 1e-12


def test_closed_form_with_offset_start():
    cfg = DualBandConfig(GRID, 64, 200, start=37)
    a = psf(dual_band(cfg), DG16).values
    b = psf_dualband_closed_form(cfg, DG16).values
    assert np.abs(a - b).max() <= 1e-12


def test_psl_full_band_against_dense_oracle():
    m = psf_metrics(psf(full_band(GRID), DG16))
    # dense brute force over the first two sidelobes
    taus = np.linspace(1 / GRID.span, 3 / GRID.span, 4001)
    dense = np.abs(direct_psf(np.arange(1024), 1024, GRID.delta_f, taus))
    oracle_db = 20 * np.log10(dense.max())
    assert oracle_db == pytest.approx(-13.26, abs=0.01)
    assert m.peak_sidelobe_level_db == pytest.approx(oracle_db, abs=0.02)
    assert 1 / GRID.span < m.highest_sidelobe_delay < 2 / GRID.span


def test_metrics_requires_resolvable_null():
    coarse = DelayGrid(0, 3e-6, 1.1e-9)
    with pytest.raises(MetricsError):
        psf_metrics(psf(dual_band(DualBandConfig(GRID, 128, 896)), coarse))


@pytest.mark.parametrize("g", [128, 384, 896, 300])
def test_psf_magnitude_symmetry(g):
    # |p(-tau)| = |p(1/df - tau)| by periodicity
    grid = DelayGrid.oversampled(GRID, 4)
    p = psf(dual_band(DualBandConfig(GRID, 128, g)), grid)
    # tau_n <-> period - tau_n is index n <-> P - n
    np.testing.assert_allclose(p.magnitude[1:], p.magnitude[::-1][:-1], atol=1e-12)
    neg = direct_psf(dual_band(DualBandConfig(GRID, 128, g)).active, 1024, GRID.delta_f, -p.taus[:200])
    np.testing.assert_allclose(np.abs(neg), p.magnitude[:200], atol=1e-12)


def test_first_null_non_increasing_in_gap():
    N = 128
    nulls = [psf_metrics(psf(dual_band(DualBandConfig(GRID, N, g)), DG16)).mainlobe_first_null
             for g in (N, 2 * N, 4 * N, 7 * N)]
    assert all(b <= a for a, b in zip(nulls, nulls[1:]))
    assert nulls[0] == pytest.approx(12.5e-9, abs=1e-15)


def test_convolution_identity_random_scenes():
    rng = np.random.default_rng(2024)
    grid = DelayGrid.oversampled(GRID, 2, tau_max=600e-9)
    for _ in range(5):
        g = int(rng.integers(128, 897))
        sel = dual_band(DualBandConfig(GRID, 128, g))
        L = int(rng.integers(1, 5))
        taus = rng.uniform(0, 500e-9, L)
        alphas = draw_gains(L, rng)
        h = delay_profile(synth_cfr(sel, TargetSet.from_arrays(taus, alphas)), grid, GRID).values
        model = sum(a * direct_psf(sel.active, 1024, GRID.delta_f, grid.taus - t)
                    for t, a in zip(taus, alphas))
        assert np.abs(h - model).max() <= 1e-10 * np.abs(model).max()


def test_reconstruct_zero_and_exact():
    assert not np.any(reconstruct_full_band(TargetSet(), GRID))
    ts = TargetSet.from_arrays([66e-9, 100e-9], [1 - 1j, 0.2])
    np.testing.assert_array_equal(reconstruct_full_band(ts, GRID), synth_cfr(full_band(GRID), ts))


def test_delay_grid_validation():
    with pytest.raises(ValueError):
        DelayGrid(5e-9, 1e-9, 1e-10)
    with pytest.raises(ValueError):
        DelayGrid(0, 1e-9, 0)
    with pytest.raises(ValueError):
        psf(full_band(GRID), DelayGrid(0, 4e-6, 1e-9))
    assert DelayGrid(0, 1.0, 0.1).points == 11
    assert math.isclose(DelayGrid(0, 1.0, 0.1).taus[-1], 1.0)
