"""Calibration tests: synthetic round-trips recover the generating coefficients."""

import numpy as np
import pytest

from gpuplanner import (
    ColoSample,
    SoloSample,
    default_profile_grid,
    fit_active_time,
    fit_interference,
    fit_power_cache,
    solo_active_time,
)
from gpuplanner.calibration import read_colo_samples, read_solo_samples
from gpuplanner.errors import (
    InsufficientDataError,
    ProblemFormatError,
    ZeroVarianceError,
)

from support import demo_coef

TRUE = demo_coef()  # k = (0.001, 0.05, 0.5, 0.05, 0.2)


def synthetic_solo(coef, grid=None, k_act_noise=None):
    grid = grid or default_profile_grid()
    samples = []
    for i, (r, batch) in enumerate(grid):
        k_act = solo_active_time(coef, batch, r)
        if k_act_noise is not None:
            k_act *= 1.0 + k_act_noise[i]
        ability = batch / k_act
        samples.append(
            SoloSample(
                r=r,
                batch=batch,
                k_act_ms=k_act,
                power_w=coef.alpha_power_w * ability + coef.beta_power_w,
                cache_util=coef.alpha_cacheutil * ability + coef.beta_cacheutil,
            )
        )
    return samples


class TestProfileGrid:
    def test_eleven_points(self):
        assert len(default_profile_grid()) == 11

    def test_overlap_point_appears_once(self):
        assert default_profile_grid().count((0.5, 8)) == 1

    def test_bounds(self):
        for r, batch in default_profile_grid():
            assert round(r * 100) in range(20, 101)
            assert 1 <= batch <= 32


class TestFitActiveTime:
    def test_exact_round_trip(self):
        fit = fit_active_time(synthetic_solo(TRUE))
        assert fit.rms_error < 1e-6
        for name in ("k1", "k2", "k3", "k5"):
            assert getattr(fit, name) == pytest.approx(
                getattr(TRUE, name), rel=0.01
            )
        assert fit.k4 == pytest.approx(TRUE.k4, rel=0.02)

    def test_batch_independent_curve(self):
        flat = demo_coef(k1=0.0, k2=0.0)
        fit = fit_active_time(synthetic_solo(flat))
        assert abs(fit.k1) < 1e-3
        assert abs(fit.k2) < 1e-3
        assert fit.k3 == pytest.approx(flat.k3, rel=0.01)

    def test_too_few_samples(self):
        samples = synthetic_solo(TRUE)[:3]
        with pytest.raises(InsufficientDataError):
            fit_active_time(samples)

    def test_insufficient_variation(self):
        grid = [(0.5, b) for b in (1, 2, 4, 8, 16, 32)]  # one distinct r
        with pytest.raises(InsufficientDataError):
            fit_active_time(synthetic_solo(TRUE, grid))

    def test_determinism(self):
        samples = synthetic_solo(TRUE)
        first = fit_active_time(samples)
        second = fit_active_time(list(samples))
        assert (first.k1, first.k2, first.k3, first.k4, first.k5) == (
            second.k1, second.k2, second.k3, second.k4, second.k5
        )

    def test_noise_robustness_on_held_out_points(self):
        rng = np.random.default_rng(413)
        noise = rng.normal(0.0, 0.01, size=11)
        fit = fit_active_time(synthetic_solo(TRUE, k_act_noise=noise.tolist()))
        fitted = demo_coef(k1=fit.k1, k2=fit.k2, k3=fit.k3, k4=fit.k4, k5=fit.k5)

        held_out = [(r, b) for r in (0.3, 0.7, 0.9) for b in (3, 6, 12, 24)]
        rel_sq = [
            ((solo_active_time(fitted, b, r) - solo_active_time(TRUE, b, r))
             / solo_active_time(TRUE, b, r)) ** 2
            for r, b in held_out
        ]
        assert np.sqrt(np.mean(rel_sq)) < 0.05


class TestFitPowerCache:
    def test_exact_round_trip(self):
        fit = fit_power_cache(synthetic_solo(TRUE))
        assert fit.alpha_power_w == pytest.approx(50.0, abs=1e-9)
        assert fit.beta_power_w == pytest.approx(60.0, abs=1e-9)
        assert fit.alpha_cacheutil == pytest.approx(0.05, abs=1e-9)
        assert fit.beta_cacheutil == pytest.approx(0.10, abs=1e-9)

    def test_constant_power(self):
        samples = [
            SoloSample(r, b, k, 125.0, c)
            for (r, b, k, c) in (
                (0.2, 1, 1.0, 0.1),
                (0.4, 2, 1.5, 0.2),
                (0.6, 4, 2.0, 0.3),
                (0.8, 8, 3.0, 0.4),
                (1.0, 16, 5.0, 0.5),
            )
        ]
        fit = fit_power_cache(samples)
        assert fit.alpha_power_w == pytest.approx(0.0, abs=1e-9)
        assert fit.beta_power_w == pytest.approx(125.0, abs=1e-9)

    def test_too_few_samples(self):
        with pytest.raises(InsufficientDataError):
            fit_power_cache(synthetic_solo(TRUE)[:4])

    def test_zero_variance(self):
        samples = [SoloSample(0.5, 4, 2.0, 100.0, 0.2) for _ in range(6)]
        with pytest.raises(ZeroVarianceError):
            fit_power_cache(samples)


def synthetic_colo(alpha_sch=0.00475, beta_sch=-0.00902, alpha_cache=0.25,
                   alpha_f=-1.025, k_sch=0.002, power_max=300.0, freq_max=1530.0):
    samples = []
    cache_sums = {2: 0.15, 3: 0.3, 4: 0.45, 5: 0.6}
    powers = {2: 260.0, 3: 295.0, 4: 330.0, 5: 380.0}
    for n in (2, 3, 4, 5):
        power = powers[n]
        freq = freq_max if power <= power_max else freq_max + alpha_f * (power - power_max)
        samples.append(
            ColoSample(
                n_colocated=n,
                per_kernel_delay_ms=k_sch + alpha_sch * n + beta_sch,
                co_cache_sum=cache_sums[n],
                act_inflation=1.0 + alpha_cache * cache_sums[n],
                total_power_w=power,
                freq_mhz=freq,
            )
        )
    return samples


class TestFitInterference:
    def test_round_trip_reference_coefficients(self):
        fit = fit_interference(synthetic_colo(), 0.002, 300.0, 1530.0)
        assert fit.alpha_sch_ms == pytest.approx(0.00475, rel=0.01)
        assert fit.beta_sch_ms == pytest.approx(-0.00902, rel=0.01)
        assert fit.alpha_cache == pytest.approx(0.25, rel=0.01)
        assert fit.alpha_f == pytest.approx(-1.025, rel=0.01)
        assert fit.errors == {}

    def test_no_over_cap_samples(self):
        samples = [s for s in synthetic_colo() if s.total_power_w <= 300.0]
        fit = fit_interference(samples, 0.002, 300.0, 1530.0)
        assert fit.alpha_f is None
        assert "alpha_f" in fit.errors
        assert fit.alpha_sch_ms is not None
        assert fit.alpha_cache is not None

    def test_unit_inflation_gives_zero_cache_sensitivity(self):
        samples = [
            ColoSample(n, 0.01, 0.1 * n, 1.0, 200.0, 1530.0) for n in (2, 3, 4)
        ]
        fit = fit_interference(samples, 0.002, 300.0, 1530.0)
        assert fit.alpha_cache == pytest.approx(0.0, abs=1e-12)

    def test_single_count_reports_sched_error(self):
        samples = [
            ColoSample(3, 0.01, 0.1, 1.1, 200.0, 1530.0),
            ColoSample(3, 0.01, 0.2, 1.2, 200.0, 1530.0),
        ]
        fit = fit_interference(samples, 0.002, 300.0, 1530.0)
        assert fit.alpha_sch_ms is None
        assert "alpha_sch" in fit.errors


class TestCsvReaders:
    def test_solo_round_trip(self, tmp_path):
        path = tmp_path / "solo.csv"
        path.write_text(
            "r,batch,k_act_ms,power_w,cache_util\n"
            "0.5,8,3.25,120.5,0.21\n"
            "0.2,8,7.5,80.0,0.11\n"
        )
        samples = read_solo_samples(path)
        assert samples[0] == SoloSample(0.5, 8, 3.25, 120.5, 0.21)
        assert len(samples) == 2

    def test_solo_missing_column_named(self, tmp_path):
        path = tmp_path / "solo.csv"
        path.write_text("r,batch,k_act_ms,power_w\n0.5,8,3.25,120.5\n")
        with pytest.raises(ProblemFormatError, match="cache_util"):
            read_solo_samples(path)

    def test_solo_column_order_irrelevant(self, tmp_path):
        path = tmp_path / "solo.csv"
        path.write_text(
            "cache_util,power_w,k_act_ms,batch,r\n0.21,120.5,3.25,8,0.5\n"
        )
        assert read_solo_samples(path) == [SoloSample(0.5, 8, 3.25, 120.5, 0.21)]

    def test_colo_round_trip(self, tmp_path):
        path = tmp_path / "colo.csv"
        path.write_text(
            "n_colocated,per_kernel_delay_ms,co_cache_sum,act_inflation,"
            "total_power_w,freq_mhz\n"
            "3,0.0072,0.3,1.075,295.0,1530.0\n"
        )
        samples = read_colo_samples(path)
        assert samples == [ColoSample(3, 0.0072, 0.3, 1.075, 295.0, 1530.0)]

    def test_colo_bad_value(self, tmp_path):
        path = tmp_path / "colo.csv"
        path.write_text(
            "n_colocated,per_kernel_delay_ms,co_cache_sum,act_inflation,"
            "total_power_w,freq_mhz\n"
            "three,0.0072,0.3,1.075,295.0,1530.0\n"
        )
        with pytest.raises(ProblemFormatError):
            read_colo_samples(path)
