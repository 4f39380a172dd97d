"""Discrete-time LTI actuator model and time-resolved optical traces.

The piezo actuator is a causal impulse-response kernel with unit DC gain
mapping drive voltage to optical phase (scaled by pi/v_pi). Optics are
quasi-static: transmission follows the instantaneous phase sample by
sample.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.signal import fftconvolve

from .core import ModulatorChannel, channel_transmission_equal
from .errors import GridError, NoTransitionError, PicmodError

# Kernels shorter than this use direct convolution, longer ones the
# transform-based path; both agree within 1e-10.
DIRECT_KERNEL_LIMIT = 512

_TAIL_MASS = 1e-12


class KernelKind(enum.Enum):
    FIRST_ORDER = "first_order"
    SECOND_ORDER = "second_order"


@dataclass(frozen=True)
class Waveform:
    """Uniformly sampled drive-voltage time series."""

    sample_period: float
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_period <= 0:
            raise PicmodError("sample_period must be positive")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise PicmodError("samples must be a 1-D array")
        if samples.size and not np.all(np.isfinite(samples)):
            raise PicmodError("samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return self.samples.size * self.sample_period

    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.sample_period


@dataclass(frozen=True)
class OpticalTrace:
    """Normalized optical power on the same grid as the driving waveform."""

    sample_period: float
    power: np.ndarray

    def __post_init__(self):
        if self.sample_period <= 0:
            raise PicmodError("sample_period must be positive")
        object.__setattr__(self, "power", np.asarray(self.power, dtype=float))

    def times(self) -> np.ndarray:
        return np.arange(self.power.size) * self.sample_period


@dataclass(frozen=True)
class ActuatorResponse:
    """Causal impulse kernel with unit DC gain at a fixed sample period."""

    kind: KernelKind
    rise_time_10_90: float
    sample_period: float
    impulse_kernel: np.ndarray
    damping_ratio: float | None = None

    def __post_init__(self):
        kernel = np.asarray(self.impulse_kernel, dtype=float)
        object.__setattr__(self, "impulse_kernel", kernel)
        if abs(kernel.sum() - 1.0) > 1e-9:
            raise PicmodError("impulse kernel must have unit DC gain")


def _interp_crossing(t: np.ndarray, y: np.ndarray, level: float, start: int = 0) -> float:
    """First time y crosses level (upward) at or after index start."""
    above = y[start:] >= level
    if not np.any(above):
        raise NoTransitionError(f"trace never reaches level {level}")
    i = start + int(np.argmax(above))
    if i == 0 or y[i] == y[i - 1]:
        return float(t[i])
    frac = (level - y[i - 1]) / (y[i] - y[i - 1])
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))


def _step_rise_time(step: np.ndarray, dt: float) -> float:
    """10-90% rise time of a unit-settling step response."""
    t = np.arange(step.size) * dt
    final = 1.0
    t10 = _interp_crossing(t, step, 0.1 * final)
    t90 = _interp_crossing(t, step, 0.9 * final)
    return t90 - t10


def _trim_tail(kernel: np.ndarray) -> np.ndarray:
    mass = np.cumsum(np.abs(kernel[::-1]))[::-1]
    total = float(np.sum(np.abs(kernel)))
    keep = mass > _TAIL_MASS * total
    n = int(np.max(np.nonzero(keep)[0])) + 1 if np.any(keep) else kernel.size
    return kernel[:n]


def _first_order_kernel(tau: float, dt: float) -> np.ndarray:
    # Exact discretization of a one-pole low-pass; geometric tail.
    a = math.exp(-dt / tau)
    n = max(int(math.ceil(-tau / dt * math.log(_TAIL_MASS))) + 2, 4)
    kernel = (1.0 - a) * a ** np.arange(n)
    kernel = _trim_tail(kernel)
    return kernel / kernel.sum()


def _second_order_kernel(omega_n: float, zeta: float, dt: float) -> np.ndarray:
    omega_d = omega_n * math.sqrt(1.0 - zeta**2)
    n = max(int(math.ceil(-math.log(_TAIL_MASS) / (zeta * omega_n * dt))) + 2, 4)
    t = np.arange(n) * dt
    kernel = np.exp(-zeta * omega_n * t) * np.sin(omega_d * t)
    kernel = _trim_tail(kernel)
    return kernel / kernel.sum()


def synthesize_kernel(
    kind: KernelKind,
    rise_time_10_90: float,
    sample_period: float,
    damping_ratio: float | None = None,
) -> ActuatorResponse:
    """Build a kernel whose step response has the requested 10-90% rise.

    The time constant (or natural frequency) is solved numerically so the
    measured discrete-time rise matches the request within 2%.
    """
    if rise_time_10_90 < 2.0 * sample_period:
        raise GridError(
            f"rise time {rise_time_10_90:.3g} s unresolvable at sample period "
            f"{sample_period:.3g} s (need >= 2 samples)"
        )
    dt = sample_period

    if kind is KernelKind.FIRST_ORDER:
        tau0 = rise_time_10_90 / math.log(9.0)

        def err(tau):
            k = _first_order_kernel(tau, dt)
            return _step_rise_time(np.cumsum(k), dt) - rise_time_10_90

        tau = brentq(err, 0.2 * tau0, 5.0 * tau0, xtol=1e-6 * tau0)
        kernel = _first_order_kernel(tau, dt)
    elif kind is KernelKind.SECOND_ORDER:
        if damping_ratio is None or not 0.0 < damping_ratio < 1.0:
            raise PicmodError("SECOND_ORDER kernel needs damping_ratio in (0,1)")
        w0 = 1.5 / rise_time_10_90

        def err(w):
            k = _second_order_kernel(w, damping_ratio, dt)
            return _step_rise_time(np.cumsum(k), dt) - rise_time_10_90

        omega_n = brentq(err, 0.3 * w0, 6.0 * w0, xtol=1e-8 * w0)
        kernel = _second_order_kernel(omega_n, damping_ratio, dt)
    else:
        raise PicmodError(f"unknown kernel kind {kind}")

    achieved = _step_rise_time(np.cumsum(kernel), dt)
    if abs(achieved - rise_time_10_90) > 0.02 * rise_time_10_90:
        raise PicmodError(
            f"kernel synthesis missed rise-time target: {achieved} vs {rise_time_10_90}"
        )
    return ActuatorResponse(
        kind=kind,
        rise_time_10_90=rise_time_10_90,
        sample_period=sample_period,
        impulse_kernel=kernel,
        damping_ratio=damping_ratio,
    )


def convolve_causal(samples: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Causal convolution truncated to the input length."""
    n = samples.size
    if n == 0:
        return samples.copy()
    if kernel.size < DIRECT_KERNEL_LIMIT:
        return np.convolve(samples, kernel)[:n]
    return fftconvolve(samples, kernel)[:n]


def apply_actuator(response: ActuatorResponse, drive: Waveform, v_pi: float) -> np.ndarray:
    """Phase trajectory (radians) of the driven shifter for a drive waveform."""
    if not math.isclose(response.sample_period, drive.sample_period, rel_tol=1e-9):
        raise GridError(
            f"kernel sample period {response.sample_period} != drive {drive.sample_period}"
        )
    if v_pi <= 0:
        raise PicmodError("v_pi must be positive")
    return convolve_causal(drive.samples, response.impulse_kernel) * (math.pi / v_pi)


def trace_optical(
    channel: ModulatorChannel,
    response: ActuatorResponse,
    drive: Waveform,
    normalize: bool = True,
) -> OpticalTrace:
    """Time-resolved optical power for a drive applied to every stage.

    The actuator filters the voltage (phase is linear in voltage, so
    filtering commutes with the pi/v_pi scale); the optical map is applied
    per sample. Power is normalized to the channel's ON level by default.
    """
    if not math.isclose(response.sample_period, drive.sample_period, rel_tol=1e-9):
        raise GridError("kernel and drive sample periods differ")
    v_eff = convolve_causal(drive.samples, response.impulse_kernel)
    power = channel_transmission_equal(channel, v_eff, include_loss=False)
    if normalize:
        power = power / channel.max_transmission()
    return OpticalTrace(sample_period=drive.sample_period, power=np.asarray(power))


def step_response_trace(
    channel: ModulatorChannel,
    response: ActuatorResponse,
    v_from: float,
    v_to: float,
    hold: float | None = None,
) -> OpticalTrace:
    """Optical trace of a settled voltage step, starting just before the step.

    The pre-step level is held long enough for the actuator to settle
    (kernel length or 10 rise times, whichever is longer), so the returned
    trace is free of the startup transient.
    """
    dt = response.sample_period
    n_settle = max(response.impulse_kernel.size + 2, int(10 * response.rise_time_10_90 / dt))
    n_after = max(int(20 * response.rise_time_10_90 / dt), 64)
    samples = np.concatenate([np.full(n_settle, v_from), np.full(n_after, v_to)])
    trace = trace_optical(channel, response, Waveform(dt, samples))
    return OpticalTrace(dt, trace.power[n_settle - 2:])


def optical_rise_time(
    channel: ModulatorChannel,
    response: ActuatorResponse,
    v_from: float,
    v_to: float,
) -> float:
    """10-90% rise time of the optical response to a settled voltage step."""
    return measure_rise_time(step_response_trace(channel, response, v_from, v_to))


def measure_rise_time(trace: OpticalTrace) -> float:
    """10-90% rise time of the settled transition in a trace.

    Thresholds are taken on the settled span (initial sample to the median
    of the final 10%); crossing times are linearly interpolated.
    """
    power = trace.power
    if power.size < 3:
        raise NoTransitionError("trace too short")
    start = float(power[0])
    tail = power[-max(power.size // 10, 3):]
    settled = float(np.median(tail))
    span = settled - start
    floor_scale = max(abs(settled), abs(start), 1e-30)
    if abs(span) < 1e-9 * floor_scale:
        raise NoTransitionError("no transition found (flat trace)")
    y = power if span > 0 else -power
    lo = (start if span > 0 else -start) + 0.1 * abs(span)
    hi = (start if span > 0 else -start) + 0.9 * abs(span)
    t = trace.times()
    t10 = _interp_crossing(t, y, lo)
    t90 = _interp_crossing(t, y, hi)
    if t90 < t10:
        raise NoTransitionError("transition is not monotone on average")
    return t90 - t10
