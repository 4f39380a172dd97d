"""Drive-waveform synthesis: pulse trains, pre-distortion, pulse analysis.

Pre-distortion solves for the drive that makes the actuator's phase output
follow a target trajectory: a Tikhonov-regularized frequency-domain
deconvolution seeds a damped Gauss-Newton refinement against the full
nonlinear optical forward model. The reported extinction floor is always
recomputed by an independent forward simulation of the returned drive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import ModulatorChannel, channel_transmission_equal
from .dynamics import (
    ActuatorResponse,
    OpticalTrace,
    Waveform,
    convolve_causal,
    trace_optical,
)
from .errors import GridError, PicmodError, UnachievableTargetError


class EdgeShape(enum.Enum):
    SQUARE = "square"
    RAISED_COSINE = "raised_cosine"


@dataclass(frozen=True)
class PulseSpec:
    """Periodic ON/OFF drive pulse description."""

    on_level: float
    off_level: float
    on_duration: float
    period: float
    edge_shape: EdgeShape = EdgeShape.SQUARE
    edge_time: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.on_duration < self.period:
            raise PicmodError("need 0 < on_duration < period")
        if self.edge_shape is EdgeShape.RAISED_COSINE and not (
            0.0 < self.edge_time < self.on_duration / 2.0
        ):
            raise PicmodError("edge_time must lie in (0, on_duration/2)")


def _grid_count(duration: float, dt: float, what: str) -> int:
    n = duration / dt
    if abs(n - round(n)) > 1e-9 * max(n, 1.0):
        raise GridError(f"{what} {duration:.6g} s is not an integer number of samples")
    return int(round(n))


def make_pulse_train(spec: PulseSpec, n_pulses: int, sample_period: float) -> Waveform:
    """Deterministic waveform of n_pulses periods of the pulse spec."""
    if n_pulses < 0:
        raise PicmodError("n_pulses must be >= 0")
    if n_pulses == 0:
        return Waveform(sample_period, np.empty(0))
    n_period = _grid_count(spec.period, sample_period, "period")
    n_on = _grid_count(spec.on_duration, sample_period, "on_duration")
    one = np.full(n_period, spec.off_level, dtype=float)
    one[:n_on] = spec.on_level
    if spec.edge_shape is EdgeShape.RAISED_COSINE:
        n_edge = _grid_count(spec.edge_time, sample_period, "edge_time")
        if n_edge > 0:
            ramp = 0.5 * (1.0 - np.cos(np.pi * (np.arange(n_edge) + 1) / n_edge))
            swing = spec.on_level - spec.off_level
            one[:n_edge] = spec.off_level + swing * ramp
            one[n_on - n_edge:n_on] = spec.off_level + swing * ramp[::-1]
    return Waveform(sample_period, np.tile(one, n_pulses))


def target_phase_from_power(target_power, channel: ModulatorChannel) -> np.ndarray:
    """Per-stage drive phase achieving each normalized power target.

    Inverts the equal-drive cascade transmission on its principal branch
    (drive voltage in [0, v_pi]) by bracketed root finding; returns the
    corresponding phase pi*V/v_pi per sample.
    """
    target = np.atleast_1d(np.asarray(target_power, dtype=float))
    v_pi = channel.v_pi
    peak = channel.max_transmission()
    floor = channel.min_transmission() / peak

    def forward(v):
        return channel_transmission_equal(channel, v, include_loss=False) / peak

    lo_ok = target >= floor - 1e-300
    hi_ok = target <= 1.0 + 1e-12
    if not np.all(lo_ok & hi_ok):
        bad = target[~(lo_ok & hi_ok)][0]
        raise UnachievableTargetError(
            f"target power {bad:.3g} outside achievable range [{floor:.3g}, 1]"
        )
    phases = np.empty_like(target)
    cache: dict[float, float] = {}
    for i, p in enumerate(target):
        key = float(p)
        if key in cache:
            phases[i] = cache[key]
            continue
        if p >= 1.0:
            v = v_pi
        elif p <= floor:
            v = 0.0
        else:
            v = brentq(lambda x: forward(x) - p, 0.0, v_pi, xtol=1e-12 * v_pi)
        phases[i] = cache[key] = math.pi * v / v_pi
    return phases


@dataclass(frozen=True)
class DynamicExtinction:
    """Worst-case-remaining extinction envelope after a switch-off event."""

    times: np.ndarray  # seconds after the switch
    envelope: np.ndarray  # linear power relative to the pre-switch ON level
    on_level: float

    def time_to(self, threshold: float) -> tuple[float, bool]:
        """First time the envelope stays below threshold for good.

        Returns (window length, False) if the threshold is never reached.
        """
        below = self.envelope < threshold
        if not np.any(below):
            window = float(self.times[-1]) if self.times.size else 0.0
            return window, False
        return float(self.times[int(np.argmax(below))]), True


def dynamic_extinction(trace: OpticalTrace, switch_time: float) -> DynamicExtinction:
    """Reverse-cumulative-max envelope of post-switch power vs time.

    Normalized to the settled ON level just before the switch. The
    envelope at time t is the maximum power at any time >= t, a monotone
    non-increasing worst-case-remaining summary.
    """
    dt = trace.sample_period
    n = trace.power.size
    idx = int(round(switch_time / dt))
    if not 0 < idx < n:
        raise PicmodError(f"switch_time {switch_time} outside trace")
    pre = trace.power[max(0, idx - max(8, idx // 4)):idx]
    on_level = float(np.median(pre))
    if on_level <= 0:
        raise PicmodError("pre-switch ON level is not positive")
    post = trace.power[idx:]
    envelope = np.maximum.accumulate(post[::-1])[::-1] / on_level
    times = np.arange(post.size) * dt
    return DynamicExtinction(times=times, envelope=envelope, on_level=on_level)


@dataclass(frozen=True)
class PredistortionProblem:
    """Target phase trajectory plus actuator and drive constraints."""

    target_phase: np.ndarray
    response: ActuatorResponse
    channel: ModulatorChannel
    switch_time: float
    v_max: float
    regularization: float = 1e-4
    settle_window: float = 1e-6
    extinction_target: float = 1e-6
    max_iterations: int = 200

    def __post_init__(self):
        object.__setattr__(
            self, "target_phase", np.asarray(self.target_phase, dtype=float)
        )
        if not 0.0 < self.extinction_target < 1.0:
            raise PicmodError("extinction_target must lie in (0,1)")
        if self.settle_window <= 0:
            raise PicmodError("settle_window must be positive")
        if self.v_max <= 0:
            raise PicmodError("v_max must be positive")
        if self.regularization < 0:
            raise PicmodError("regularization must be >= 0")


@dataclass(frozen=True)
class PredistortionSolution:
    drive: Waveform
    achieved_floor: float
    time_to_floor: float
    iterations: int
    converged: bool
    extinction: DynamicExtinction


def _deconvolve(signal: np.ndarray, kernel: np.ndarray, relative_reg: float) -> np.ndarray:
    """Tikhonov-regularized deconvolution with constant edge padding."""
    pad = kernel.size
    padded = np.concatenate(
        [np.full(pad, signal[0]), signal, np.full(pad, signal[-1])]
    )
    nfft = int(2 ** math.ceil(math.log2(padded.size + kernel.size)))
    h = np.fft.rfft(kernel, nfft)
    d = np.fft.rfft(padded, nfft)
    power = np.abs(h) ** 2
    lam = relative_reg * float(np.max(power))
    if lam == 0.0 and np.any(power == 0.0):
        raise PicmodError("kernel spectrum not invertible without regularization")
    u = np.fft.irfft(d * np.conj(h) / (power + lam), nfft)
    return u[pad:pad + signal.size]


def _verify(problem: PredistortionProblem, drive: Waveform):
    trace = trace_optical(problem.channel, problem.response, drive)
    ext = dynamic_extinction(trace, problem.switch_time)
    window_idx = min(
        int(round(problem.settle_window / drive.sample_period)), ext.envelope.size - 1
    )
    floor = float(ext.envelope[window_idx])
    t_floor, reached = ext.time_to(problem.extinction_target)
    converged = reached and t_floor <= problem.settle_window + 1e-15
    return trace, ext, floor, t_floor, converged


def predistort(problem: PredistortionProblem) -> PredistortionSolution:
    """Solve for a drive whose optical output meets the extinction target.

    Stage 1 deconvolves the target phase by the kernel; stage 2 refines
    with damped Gauss-Newton steps on the phase residual of the forward
    model, re-verifying optically after each accepted step. Drives are
    clipped to +/- v_max at every step.
    """
    kernel = problem.response.impulse_kernel
    v_pi = problem.channel.v_pi
    dt = problem.response.sample_period

    phase_cmd = _deconvolve(problem.target_phase, kernel, problem.regularization)
    volts = np.clip(phase_cmd * v_pi / math.pi, -problem.v_max, problem.v_max)
    drive = Waveform(dt, volts)
    trace, ext, floor, t_floor, converged = _verify(problem, drive)

    target_power = channel_transmission_equal(
        problem.channel,
        problem.target_phase * v_pi / math.pi,
        include_loss=False,
    ) / problem.channel.max_transmission()

    def power_residual(tr):
        return float(np.sqrt(np.mean((tr.power - target_power) ** 2)))

    best_resid = power_residual(trace)
    iterations = 0
    while not converged and iterations < problem.max_iterations:
        iterations += 1
        phase_out = convolve_causal(drive.samples, kernel) * (math.pi / v_pi)
        phase_err = phase_out - problem.target_phase
        step = _deconvolve(phase_err, kernel, problem.regularization) * (v_pi / math.pi)
        alpha = 1.0
        accepted = False
        for _ in range(12):
            cand = Waveform(
                dt, np.clip(drive.samples - alpha * step, -problem.v_max, problem.v_max)
            )
            c_trace, c_ext, c_floor, c_t, c_conv = _verify(problem, cand)
            c_resid = power_residual(c_trace)
            if c_resid <= best_resid + 1e-18:
                drive, trace, ext = cand, c_trace, c_ext
                floor, t_floor, converged = c_floor, c_t, c_conv
                best_resid = c_resid
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break

    return PredistortionSolution(
        drive=drive,
        achieved_floor=floor,
        time_to_floor=t_floor,
        iterations=iterations,
        converged=converged,
        extinction=ext,
    )


def switch_off_target_phase(
    response: ActuatorResponse, ramp_time: float, settle_window: float
) -> tuple[np.ndarray, float]:
    """Target phase trajectory for a switch-off event: settled ON (pi),
    a raised-cosine ramp to 0 over ramp_time, then a 0 hold covering the
    settle window. Returns (phase samples, switch time = ramp start)."""
    dt = response.sample_period
    n_pre = max(
        response.impulse_kernel.size + 2, int(round(5 * response.rise_time_10_90 / dt))
    )
    n_ramp = max(int(round(ramp_time / dt)), 1)
    n_post = int(round(settle_window / dt)) + n_ramp
    ramp = 0.5 * (1.0 + np.cos(np.pi * np.arange(1, n_ramp + 1) / n_ramp))
    phase = np.concatenate([np.full(n_pre, np.pi), np.pi * ramp, np.zeros(n_post)])
    return phase, n_pre * dt


def pulse_areas(trace: OpticalTrace, spec: PulseSpec) -> np.ndarray:
    """Per-pulse trapezoidal areas normalized to the ensemble mean."""
    n_period = _grid_count(spec.period, trace.sample_period, "period")
    n = trace.power.size
    if n == 0 or n % n_period != 0:
        raise GridError(
            f"trace length {n} is not an integer number of {n_period}-sample periods"
        )
    pulses = trace.power.reshape(-1, n_period)
    areas = np.trapezoid(pulses, dx=trace.sample_period, axis=1)
    mean = areas.mean()
    if mean == 0:
        raise PicmodError("zero mean pulse area")
    return areas / mean
