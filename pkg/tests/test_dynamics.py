"""Actuator kernels, convolution, optical traces, rise-time measurement."""

import math

import numpy as np
import pytest

from picmod.core import channel_transmission_equal, make_calibrated_channel
from picmod.dynamics import (
    DIRECT_KERNEL_LIMIT,
    ActuatorResponse,
    KernelKind,
    OpticalTrace,
    Waveform,
    apply_actuator,
    convolve_causal,
    measure_rise_time,
    optical_rise_time,
    step_response_trace,
    synthesize_kernel,
    trace_optical,
)
from picmod.errors import GridError, NoTransitionError, PicmodError


class TestSynthesizeKernel:
    def test_first_order_time_constant(self, fo_response):
        # Analytic 10-90 relation: t_r = tau * ln 9 -> tau ~ 11.83 ns.
        k = fo_response.impulse_kernel
        tau = -1e-9 / math.log(k[1] / k[0])
        assert tau == pytest.approx(26e-9 / math.log(9), rel=0.05)

    @pytest.mark.parametrize("kind,zeta", [(KernelKind.FIRST_ORDER, None),
                                           (KernelKind.SECOND_ORDER, 0.3)])
    def test_measured_rise_matches_request(self, kind, zeta):
        resp = synthesize_kernel(kind, 26e-9, 1e-9, damping_ratio=zeta)
        step = np.cumsum(resp.impulse_kernel)
        t = np.arange(step.size) * 1e-9
        t10 = np.interp(0.1, step, t)
        t90 = np.interp(0.9, step, t)
        assert (t90 - t10) == pytest.approx(26e-9, rel=0.02)

    def test_unit_dc_gain(self, fo_response, so_response):
        for resp in (fo_response, so_response):
            assert abs(resp.impulse_kernel.sum() - 1.0) < 1e-9

    def test_unresolvable_rise_time(self):
        with pytest.raises(GridError):
            synthesize_kernel(KernelKind.FIRST_ORDER, 26e-9, 20e-9)

    def test_second_order_needs_damping(self):
        with pytest.raises(PicmodError):
            synthesize_kernel(KernelKind.SECOND_ORDER, 26e-9, 1e-9)

    def test_non_unit_gain_kernel_rejected(self):
        with pytest.raises(PicmodError):
            ActuatorResponse(KernelKind.FIRST_ORDER, 26e-9, 1e-9, np.array([0.5, 0.4]))


class TestApplyActuator:
    def test_constant_drive_converges_to_pi(self, fo_response):
        drive = Waveform(1e-9, np.full(2000, 74.7))
        phase = apply_actuator(fo_response, drive, v_pi=74.7)
        assert phase[-1] == pytest.approx(math.pi, rel=1e-9)

    def test_unit_impulse_returns_kernel(self, fo_response):
        n = fo_response.impulse_kernel.size
        drive = Waveform(1e-9, np.concatenate([[1.0], np.zeros(n)]))
        phase = apply_actuator(fo_response, drive, v_pi=2.0)
        assert np.allclose(
            phase[:n], fo_response.impulse_kernel * math.pi / 2.0, atol=1e-15
        )

    def test_direct_sum_convolution_oracle(self, so_response):
        rng = np.random.default_rng(11)
        x = rng.standard_normal(400)
        k = so_response.impulse_kernel
        got = convolve_causal(x, k)
        expected = np.array(
            [sum(x[n - m] * k[m] for m in range(min(n + 1, k.size))) for n in range(400)]
        )
        assert np.max(np.abs(got - expected)) < 1e-10

    def test_direct_and_fft_paths_agree(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(4096)
        k_long = np.exp(-np.arange(DIRECT_KERNEL_LIMIT + 64) / 200.0)
        k_long /= k_long.sum()
        k_short = k_long[:DIRECT_KERNEL_LIMIT - 1] / k_long[:DIRECT_KERNEL_LIMIT - 1].sum()
        direct = np.convolve(x, k_long)[:4096]
        assert np.max(np.abs(convolve_causal(x, k_long) - direct)) < 1e-10
        assert np.max(np.abs(convolve_causal(x, k_short) - np.convolve(x, k_short)[:4096])) == 0

    def test_grid_mismatch_rejected(self, fo_response):
        with pytest.raises(GridError):
            apply_actuator(fo_response, Waveform(2e-9, np.zeros(4)), v_pi=1.0)

    def test_linearity(self, fo_response):
        rng = np.random.default_rng(3)
        d1, d2 = rng.standard_normal((2, 500))
        a, b = 1.7, -0.4
        lhs = apply_actuator(fo_response, Waveform(1e-9, a * d1 + b * d2), 74.7)
        rhs = a * apply_actuator(fo_response, Waveform(1e-9, d1), 74.7) + b * apply_actuator(
            fo_response, Waveform(1e-9, d2), 74.7
        )
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_time_invariance(self, fo_response):
        rng = np.random.default_rng(4)
        d = rng.standard_normal(300)
        k_shift = 37
        shifted = np.concatenate([np.zeros(k_shift), d])
        out = apply_actuator(fo_response, Waveform(1e-9, d), 74.7)
        out_shifted = apply_actuator(fo_response, Waveform(1e-9, shifted), 74.7)
        assert np.allclose(out_shifted[k_shift:], out, atol=1e-12)
        assert np.allclose(out_shifted[:k_shift], 0.0, atol=1e-12)


class TestTraceOptical:
    def test_zero_drive_on_nulled_channel(self, ideal_channel, fo_response):
        trace = trace_optical(ideal_channel, fo_response, Waveform(1e-9, np.zeros(100)))
        assert np.allclose(trace.power, 0.0, atol=1e-15)

    def test_full_swing_optical_rise_matches_quartic_oracle(self, ideal_channel, fo_response):
        # The optics compress the edge: a full 0 -> v_pi swing through the
        # two-stage sin^4 fringe rises faster than the phase itself. For a
        # first-order actuator the analytic 10-90 crossings of
        # sin^4(pi*s(t)/2), s = 1 - exp(-t/tau), give ~1.45*tau ~ 17.2 ns.
        tau = 26e-9 / math.log(9)
        s10 = 2 / math.pi * math.asin(0.1**0.25)
        s90 = 2 / math.pi * math.asin(0.9**0.25)
        expected = tau * (math.log(1 - s10) - math.log(1 - s90))
        got = optical_rise_time(ideal_channel, fo_response, 0.0, 74.7)
        assert got == pytest.approx(expected, rel=0.05)

    def test_small_signal_rise_equals_kernel_rise(self, ideal_channel, fo_response):
        # About quadrature the optical map is locally linear, so a small
        # step reproduces the actuator's own 26 ns rise.
        got = optical_rise_time(ideal_channel, fo_response, 74.7 / 2, 74.7 / 2 * 1.02)
        assert got == pytest.approx(26e-9, abs=2e-9)

    def test_dc_fidelity(self, channel_714, fo_response):
        v = 23.0
        drive = Waveform(1e-9, np.full(2000, v))  # >> 10 rise times
        trace = trace_optical(channel_714, fo_response, drive, normalize=False)
        expected = channel_transmission_equal(channel_714, v, include_loss=False)
        assert trace.power[-1] == pytest.approx(expected, abs=1e-9)

    def test_naive_second_order_off_switch_rings_above_target(
        self, ideal_channel, so_response
    ):
        trace = step_response_trace(ideal_channel, so_response, 74.7, 0.0)
        post = trace.power[2:]
        assert np.max(post[200:]) > 1e-6  # ringing persists past the edge


class TestMeasureRiseTime:
    def test_analytic_first_order_trace(self):
        tau = 26e-9 / math.log(9)
        t = np.arange(0, 300e-9, 1e-9)
        trace = OpticalTrace(1e-9, 1 - np.exp(-t / tau))
        assert measure_rise_time(trace) == pytest.approx(26e-9, abs=1e-9)

    def test_instantaneous_step(self):
        trace = OpticalTrace(1e-9, np.concatenate([np.zeros(5), np.ones(50)]))
        assert measure_rise_time(trace) <= 1e-9

    def test_flat_trace(self):
        with pytest.raises(NoTransitionError):
            measure_rise_time(OpticalTrace(1e-9, np.full(100, 0.5)))

    def test_falling_transition(self):
        tau = 10e-9
        t = np.arange(0, 200e-9, 1e-9)
        trace = OpticalTrace(1e-9, np.exp(-t / tau))
        assert measure_rise_time(trace) == pytest.approx(tau * math.log(9), rel=0.02)


class TestWaveformValidation:
    def test_negative_sample_period(self):
        with pytest.raises(PicmodError):
            Waveform(-1e-9, np.zeros(4))

    def test_non_finite_samples(self):
        with pytest.raises(PicmodError):
            Waveform(1e-9, np.array([0.0, np.inf]))

    def test_times_grid(self):
        w = Waveform(2e-9, np.zeros(3))
        assert np.allclose(w.times(), [0.0, 2e-9, 4e-9])
        assert w.duration == pytest.approx(6e-9)
