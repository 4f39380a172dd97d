"""Dither-based bias lock and long-run pulse-stability experiments.

The controller holds a channel at its transmission null against slow bias
drift: at each update it applies +/- dither to the bias, measures the
transmitted power through the detector, forms a discrete gradient
estimate, and applies a PI correction. Runs are event-driven at the
update cadence, so a 20-hour run costs only its update count in wall
time; reported times are physical seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ModulatorChannel, Port
from .dynamics import OpticalTrace, Waveform, convolve_causal
from .errors import LockDivergedError, PicmodError
from .noise import DetectorModel, NoiseModel, OuParams, sample_ou_path
from .rng import derive_rng
from .waveforms import PulseSpec, make_pulse_train, pulse_areas


def _stage_terms(channel: ModulatorChannel) -> list[tuple[float, float, float]]:
    """(a, b, sign) per stage with monitored power a^2+b^2+sign*2ab*cos(phi)."""
    terms = []
    for st in channel.stages:
        if st.monitored_port is Port.BAR:
            a = st.input_coupler.t * st.output_coupler.t
            b = st.input_coupler.r * st.output_coupler.r
            sign = -1.0
        else:
            a = st.input_coupler.t * st.output_coupler.r
            b = st.input_coupler.r * st.output_coupler.t
            sign = 1.0
        terms.append((a, b, sign))
    return terms


def transmission_at_phase(terms, phase):
    """Cascade transmission for a common differential phase per stage."""
    out = 1.0
    for a, b, sign in terms:
        out = out * (a * a + b * b + sign * 2.0 * a * b * np.cos(phase))
    return out


@dataclass(frozen=True)
class LockController:
    """5 Hz dither-and-demodulate null lock with PI correction."""

    update_rate: float = 5.0
    dither_amplitude: float = 1e-3  # radians
    gain_p: float = 250.0
    gain_i: float = 5.0
    max_step: float = 0.02  # radians per update
    integrator_limit: float = 0.01  # anti-windup bound

    def __post_init__(self):
        if self.update_rate <= 0:
            raise PicmodError("update_rate must be positive")
        if self.dither_amplitude <= 0:
            raise PicmodError("dither_amplitude must be positive")
        for g in (self.gain_p, self.gain_i, self.max_step, self.integrator_limit):
            if not math.isfinite(g):
                raise PicmodError("controller gains must be finite")


@dataclass(frozen=True)
class LockRunResult:
    times: np.ndarray  # physical seconds
    er_db: np.ndarray
    locked_fraction: float
    er_mean_db: float
    er_std_db: float
    er_time_avg_db: float  # ER of the time-averaged leakage power
    engaged: bool
    final_error_rad: float = 0.0  # residual bias error at the last update


def run_lock(
    channel: ModulatorChannel,
    noise: NoiseModel,
    controller: LockController,
    duration: float,
    detector: DetectorModel,
    engaged: bool = True,
    er_sample_every: int = 60,
    locked_margin_db: float = 5.0,
    initial_offset: float = 0.0,
) -> LockRunResult:
    """Simulate a bias-lock run of the given physical duration.

    With engaged=False the controller is bypassed but the identical drift
    path (same seed) is replayed, so ON/OFF comparisons are paired.
    initial_offset adds a static bias error on top of the drift path.
    """
    dt = 1.0 / controller.update_rate
    n_updates = int(round(duration * controller.update_rate))
    if n_updates < 1:
        raise PicmodError("duration shorter than one controller update")
    drift_rng = derive_rng(noise.seed, "lock", "bias-drift")
    meas_rng = derive_rng(noise.seed, "lock", "detector")
    drift = sample_ou_path(
        noise.bias_drift.sigma,
        noise.bias_drift.correlation_time,
        duration,
        dt,
        rng=drift_rng,
    ) + initial_offset

    terms = _stage_terms(channel)
    peak = transmission_at_phase(terms, math.pi)
    floor = detector.relative_floor
    noisy = detector.additive_noise_sigma > 0
    d = controller.dither_amplitude

    def meas(power):
        if noisy:
            return detector.measure(power, rng=meas_rng)
        return power if power > floor or not detector.clamp else floor

    correction = 0.0
    integ = 0.0
    times = []
    ers = []
    leak_sum = 0.0
    on_static = meas(1.0)
    er_static = 10.0 * math.log10(on_static / meas(transmission_at_phase(terms, 0.0) / peak))
    for k in range(n_updates):
        eps = drift[k] + correction
        if engaged:
            p_plus = meas(transmission_at_phase(terms, eps + d) / peak)
            p_minus = meas(transmission_at_phase(terms, eps - d) / peak)
            grad = (p_plus - p_minus) / (2.0 * d)
            integ += controller.gain_i * grad
            integ = min(max(integ, -controller.integrator_limit), controller.integrator_limit)
            step = controller.gain_p * grad + integ
            step = min(max(step, -controller.max_step), controller.max_step)
            correction -= step
            if abs(correction) > math.pi:
                raise LockDivergedError(
                    f"bias correction diverged to {correction:.3f} rad at update {k} "
                    f"(unstable gains?)"
                )
        eps = drift[k] + correction
        p_off = transmission_at_phase(terms, eps) / peak
        leak_sum += p_off
        if k % er_sample_every == 0:
            p_off_meas = detector.measure(p_off, rng=meas_rng if noisy else None)
            p_on_meas = detector.measure(
                transmission_at_phase(terms, math.pi + eps) / peak,
                rng=meas_rng if noisy else None,
            )
            times.append(k * dt)
            ers.append(10.0 * math.log10(p_on_meas / p_off_meas))

    times = np.asarray(times)
    ers = np.asarray(ers)
    locked_fraction = float(np.mean(ers >= er_static - locked_margin_db))
    mean_leak = detector.measure(leak_sum / n_updates, rng=meas_rng if noisy else None)
    return LockRunResult(
        times=times,
        er_db=ers,
        locked_fraction=locked_fraction,
        er_mean_db=float(np.mean(ers)),
        er_std_db=float(np.std(ers)),
        er_time_avg_db=float(-10.0 * math.log10(mean_leak)),
        engaged=engaged,
        final_error_rad=float(drift[n_updates - 1] + correction),
    )


@dataclass(frozen=True)
class PulseStats:
    areas: np.ndarray  # all pulse areas, normalized to the global mean
    block_stds: np.ndarray  # per-block std of block-normalized areas
    mean_block_std: float
    area_std: float  # std of the first block
    histogram_counts: np.ndarray
    histogram_edges: np.ndarray


# Default residual bias motion under an engaged lock, used when pulse
# experiments run lock-on (calibrated against run_lock tracking error).
LOCKED_RESIDUAL = OuParams(sigma=0.009, correlation_time=1.0)


def _on_transmission(terms, bias_eps, vpi_rel_drift):
    phase = math.pi / (1.0 + np.asarray(vpi_rel_drift)) + np.asarray(bias_eps)
    return transmission_at_phase(terms, phase)


def noisy_pulse_experiment(
    channel: ModulatorChannel,
    spec: PulseSpec,
    noise: NoiseModel,
    n_pulses: int,
    detector: DetectorModel | None = None,
    *,
    n_blocks: int = 1,
    lock_engaged: bool = True,
    locked_residual: OuParams = LOCKED_RESIDUAL,
    response=None,
    max_trace_samples: int = 4_000_000,
    stream: str = "pulse-experiment",
) -> PulseStats:
    """Pulse-area statistics of a noisy pulse train.

    Per-pulse multiplicative amplitude jitter plus slow bias and v_pi
    drift act on the train; areas are reported per block of n_pulses
    pulses. With lock_engaged the bias motion is the residual left by the
    bias lock rather than the free drift. Short single-block runs are
    integrated from a fully sampled optical trace; longer runs use the
    per-pulse closed form (the pulse shape is common to all pulses, so
    areas scale exactly with the per-pulse factors).
    """
    if n_pulses < 1 or n_blocks < 1:
        raise PicmodError("need n_pulses >= 1 and n_blocks >= 1")
    total = n_pulses * n_blocks
    dt_pulse = spec.period
    duration = (total - 1) * dt_pulse

    jitter_rng = derive_rng(noise.seed, stream, "amplitude-jitter")
    bias_rng = derive_rng(noise.seed, stream, "bias-drift")
    vpi_rng = derive_rng(noise.seed, stream, "vpi-drift")

    # An engaged lock leaves only its tracking residual -- and none at all
    # if there is no drift to track.
    if lock_engaged and noise.bias_drift.sigma > 0:
        bias_params = locked_residual
    else:
        bias_params = noise.bias_drift
    eps = sample_ou_path(
        bias_params.sigma, bias_params.correlation_time, duration, dt_pulse, rng=bias_rng
    )[:total]
    delta = sample_ou_path(
        noise.v_pi_drift.sigma,
        noise.v_pi_drift.correlation_time,
        duration,
        dt_pulse,
        rng=vpi_rng,
    )[:total]
    jitter = 1.0 + noise.amplitude_jitter_sigma * jitter_rng.standard_normal(total)

    terms = _stage_terms(channel)
    on_factor = _on_transmission(terms, eps, delta) / _on_transmission(terms, 0.0, 0.0)
    factors = jitter * on_factor

    n_period = int(round(spec.period / (response.sample_period if response else spec.period)))
    use_trace = (
        response is not None
        and n_blocks == 1
        and total * n_period <= max_trace_samples
    )
    if use_trace:
        train = make_pulse_train(spec, total, response.sample_period)
        v_eff = convolve_causal(train.samples, response.impulse_kernel)
        phase = (
            math.pi * v_eff / (channel.v_pi * np.repeat(1.0 + delta, n_period))
            + np.repeat(eps, n_period)
        )
        power = transmission_at_phase(terms, phase) / transmission_at_phase(terms, math.pi)
        power = power * np.repeat(jitter, n_period)
        trace = OpticalTrace(response.sample_period, power)
        areas = pulse_areas(trace, spec)
    else:
        areas = factors / factors.mean()

    blocks = areas.reshape(n_blocks, n_pulses)
    block_means = blocks.mean(axis=1, keepdims=True)
    block_stds = (blocks / block_means).std(axis=1)
    counts, edges = np.histogram(areas, bins=50)
    return PulseStats(
        areas=areas,
        block_stds=block_stds,
        mean_block_std=float(block_stds.mean()),
        area_std=float(block_stds[0]),
        histogram_counts=counts,
        histogram_edges=edges,
    )
