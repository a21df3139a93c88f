"""Property tests for the model invariants."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpuplanner import (
    Allocation,
    WorkloadCoefficients,
    WorkloadSpec,
    gpu_frequency,
    predict_gpu,
    sched_delay_increase,
    solo_active_time,
    transfer_latencies,
)

from support import make_v100

V100 = make_v100()

finite = dict(allow_nan=False, allow_infinity=False)


def coefficients(draw):
    return WorkloadCoefficients(
        n_kernels=draw(st.integers(1, 500)),
        k_sch_ms=draw(st.floats(0.0, 0.01, **finite)),
        k1=draw(st.floats(0.0, 0.02, **finite)),
        k2=draw(st.floats(0.0, 0.2, **finite)),
        k3=draw(st.floats(0.0, 20.0, **finite)),
        k4=draw(st.floats(0.0, 2.0, **finite)),
        # strictly positive: a zero active-time curve has no operating point
        k5=draw(st.floats(1e-3, 1.0, **finite)),
        alpha_power_w=draw(st.floats(0.0, 100.0, **finite)),
        beta_power_w=draw(st.floats(0.0, 200.0, **finite)),
        alpha_cacheutil=draw(st.floats(0.0, 0.2, **finite)),
        beta_cacheutil=draw(st.floats(0.0, 0.5, **finite)),
        alpha_cache=draw(st.floats(0.0, 1.0, **finite)),
    )


coef_strategy = st.composite(coefficients)()
r_strategy = st.integers(1, 40).map(lambda u: u * 0.025)
batch_strategy = st.integers(1, 32)


def spec_like(name):
    return st.builds(
        WorkloadSpec,
        name=st.just(name),
        slo_ms=st.floats(1.0, 200.0, **finite),
        rate_rps=st.floats(1.0, 2000.0, **finite),
        d_load_mb=st.floats(0.0, 2.0, **finite),
        d_feedback_mb=st.floats(0.0, 0.5, **finite),
    )


@given(coef_strategy, batch_strategy, r_strategy, r_strategy)
def test_active_time_monotone_in_resources(coef, batch, r1, r2):
    lo, hi = sorted((r1, r2))
    assert solo_active_time(coef, batch, hi) <= solo_active_time(coef, batch, lo)


@given(coef_strategy, spec_like("w"), batch_strategy, batch_strategy, r_strategy)
def test_monotone_in_batch(coef, spec, b1, b2, r):
    lo, hi = sorted((b1, b2))
    t_load_lo, t_fb_lo = transfer_latencies(spec, lo, V100)
    t_load_hi, t_fb_hi = transfer_latencies(spec, hi, V100)
    assert t_load_hi >= t_load_lo
    assert t_fb_hi >= t_fb_lo
    assert solo_active_time(coef, hi, r) >= solo_active_time(coef, lo, r)


@given(coef_strategy, spec_like("w"), batch_strategy, r_strategy)
def test_inference_latency_monotone_in_resources(coef, spec, batch, r):
    specs, coefs = {"w": spec}, {"w": coef}
    t_infs = [
        predict_gpu([Allocation("w", frac, batch)], specs, coefs, V100)["w"].t_inf_ms
        for frac in (r, min(1.0, r + V100.r_unit))
    ]
    assert t_infs[1] <= t_infs[0] + 1e-12


@given(
    st.lists(coef_strategy, min_size=1, max_size=3),
    coef_strategy,
    st.data(),
)
def test_adding_a_corunner_never_helps(resident_coefs, new_coef, data):
    n = len(resident_coefs)
    specs, coefs, allocations = {}, {}, []
    for i, coef in enumerate(resident_coefs):
        name = f"w{i}"
        specs[name] = data.draw(spec_like(name))
        coefs[name] = coef
        allocations.append(
            Allocation(name, data.draw(st.integers(1, 40 // (n + 1))) * 0.025,
                       data.draw(batch_strategy))
        )
    before = predict_gpu(allocations, specs, coefs, V100)

    specs["new"] = data.draw(spec_like("new"))
    coefs["new"] = new_coef
    used = sum(a.r for a in allocations)
    spare_units = int(round((1.0 - used) / 0.025))
    assert spare_units >= 1
    new_alloc = Allocation("new", data.draw(st.integers(1, spare_units)) * 0.025,
                           data.draw(batch_strategy))
    after = predict_gpu(allocations + [new_alloc], specs, coefs, V100)

    for name in before:
        assert after[name].t_inf_ms >= before[name].t_inf_ms - 1e-12


@given(coef_strategy, spec_like("w"), batch_strategy, r_strategy)
def test_solo_consistency(coef, spec, batch, r):
    pred = predict_gpu([Allocation("w", r, batch)], {"w": spec}, {"w": coef}, V100)
    bd = pred["w"]
    if bd.freq_mhz == V100.freq_max_mhz:
        expected = coef.k_sch_ms * coef.n_kernels + solo_active_time(coef, batch, r)
        assert bd.t_gpu_ms == expected  # exact, no tolerance


@given(coef_strategy, spec_like("w"), batch_strategy, r_strategy)
def test_breakdown_additivity(coef, spec, batch, r):
    bd = predict_gpu([Allocation("w", r, batch)], {"w": spec}, {"w": coef}, V100)["w"]
    total = bd.t_load_ms + bd.t_gpu_ms + bd.t_feedback_ms
    assert bd.t_inf_ms == pytest.approx(total, rel=1e-9)
    assert bd.t_gpu_ms >= bd.t_sch_ms + bd.t_act_ms
    if bd.freq_mhz == V100.freq_max_mhz:
        assert bd.t_gpu_ms == bd.t_sch_ms + bd.t_act_ms


@given(st.floats(0.0, 1000.0, **finite))
def test_frequency_continuity_and_monotonicity(extra):
    at_cap = gpu_frequency(V100, V100.power_max_w)
    assert at_cap == V100.freq_max_mhz
    just_over = gpu_frequency(V100, V100.power_max_w + 1e-9)
    assert abs(just_over - V100.freq_max_mhz) < 1e-6
    over = gpu_frequency(V100, V100.power_max_w + extra)
    assert over <= V100.freq_max_mhz
    assert over >= V100.f_min_mhz


@given(st.integers(1, 10), st.integers(1, 10))
@settings(max_examples=50)
def test_sched_delay_increase_monotone(n1, n2):
    lo, hi = sorted((n1, n2))
    assert sched_delay_increase(V100, hi) >= sched_delay_increase(V100, lo)
    assert sched_delay_increase(V100, 1) == 0.0
