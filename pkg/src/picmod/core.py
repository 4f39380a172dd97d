"""Static transfer-matrix model of cascaded-MZI modulator channels.

A channel is a cascade of 2x2 Mach-Zehnder stages. Each stage is the
complex matrix product  C_out . diag(e^{i phi1}, e^{i phi2}) . C_in  of its
output coupler, arm phase shifters, and input coupler. One arm of each
stage carries the driven (MOD) phase shifter, the other a static BIAS
shifter. Finite extinction comes from coupler power-split imbalance; all
channel loss is lumped into a single scalar after the matrix chain.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, PicmodError
from .fitting import VpiFit, fit_v_pi

# Single-mode propagation loss per wavelength, dB/cm.
PROPAGATION_LOSS_DB_PER_CM = {795: 1.5, 1013: 2.7, 420: 5.6}

SUPPORTED_WAVELENGTHS_NM = (420, 795, 1013)


class ShifterRole(enum.Enum):
    BIAS = "bias"
    MOD = "mod"


class Port(enum.Enum):
    BAR = 0
    CROSS = 1


@dataclass(frozen=True)
class Coupler:
    """2x2 directional coupler with power split ratio in (0, 1)."""

    power_split: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.power_split < 1.0:
            raise PicmodError(f"power_split must lie in (0,1), got {self.power_split}")

    @property
    def t(self) -> float:
        return math.sqrt(1.0 - self.power_split)

    @property
    def r(self) -> float:
        return math.sqrt(self.power_split)

    def matrix(self) -> np.ndarray:
        t, r = self.t, self.r
        return np.array([[t, 1j * r], [1j * r, t]], dtype=complex)


@dataclass(frozen=True)
class PhaseShifter:
    """Linear voltage-to-phase element: phase(V) = pi*V/v_pi + bias_phase."""

    v_pi: float
    bias_phase: float = 0.0
    role: ShifterRole = ShifterRole.MOD

    def __post_init__(self):
        if self.v_pi <= 0:
            raise PicmodError(f"v_pi must be positive, got {self.v_pi}")

    def phase(self, voltage):
        return math.pi * np.asarray(voltage, dtype=float) / self.v_pi + self.bias_phase


@dataclass(frozen=True)
class MziStage:
    """One Mach-Zehnder stage: two couplers and one phase shifter per arm."""

    input_coupler: Coupler
    output_coupler: Coupler
    arm_phase_shifters: tuple[PhaseShifter, PhaseShifter]
    monitored_port: Port = Port.BAR

    def __post_init__(self):
        roles = [ps.role for ps in self.arm_phase_shifters]
        if sorted(r.value for r in roles) != ["bias", "mod"]:
            raise PicmodError("stage needs exactly one MOD and one BIAS shifter")

    @property
    def mod_shifter(self) -> PhaseShifter:
        return next(ps for ps in self.arm_phase_shifters if ps.role is ShifterRole.MOD)

    @property
    def bias_shifter(self) -> PhaseShifter:
        return next(ps for ps in self.arm_phase_shifters if ps.role is ShifterRole.BIAS)

    def arm_phases(self, drive_voltage):
        """Phases (arm1, arm2) with the drive applied to the MOD arm only."""
        phases = []
        for ps in self.arm_phase_shifters:
            v = drive_voltage if ps.role is ShifterRole.MOD else 0.0
            phases.append(ps.phase(v))
        return phases[0], phases[1]

    def min_transmission(self) -> float:
        """Floor of the monitored-port power over all drive voltages."""
        a = self.input_coupler.t * self.output_coupler.t
        b = self.input_coupler.r * self.output_coupler.r
        if self.monitored_port is Port.BAR:
            return (a - b) ** 2
        a2 = self.input_coupler.t * self.output_coupler.r
        b2 = self.input_coupler.r * self.output_coupler.t
        return (a2 - b2) ** 2

    def max_transmission(self) -> float:
        a = self.input_coupler.t * self.output_coupler.t
        b = self.input_coupler.r * self.output_coupler.r
        if self.monitored_port is Port.BAR:
            return (a + b) ** 2
        a2 = self.input_coupler.t * self.output_coupler.r
        b2 = self.input_coupler.r * self.output_coupler.t
        return (a2 + b2) ** 2


def stage_matrix(stage: MziStage, drive_voltage) -> np.ndarray:
    """Full 2x2 complex transfer matrix of a stage at the given drive.

    Broadcasts over array-valued drive voltages; the matrix axes are the
    trailing two dimensions.
    """
    phi1, phi2 = stage.arm_phases(drive_voltage)
    phi1 = np.asarray(phi1, dtype=float)
    phi2 = np.asarray(phi2, dtype=float)
    shape = np.broadcast_shapes(phi1.shape, phi2.shape)
    prop = np.zeros(shape + (2, 2), dtype=complex)
    prop[..., 0, 0] = np.exp(1j * phi1)
    prop[..., 1, 1] = np.exp(1j * phi2)
    return stage.output_coupler.matrix() @ prop @ stage.input_coupler.matrix()


def stage_transmission(stage: MziStage, drive_voltage):
    """Monitored-port power transmission |field|^2 for input on port 0."""
    m = stage_matrix(stage, drive_voltage)
    amp = m[..., stage.monitored_port.value, 0]
    out = np.abs(amp) ** 2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModulatorChannel:
    """Cascade of MZI stages plus lumped insertion loss."""

    stages: tuple[MziStage, ...]
    insertion_loss_db: float = 0.0
    channel_index: int = 0

    def __post_init__(self):
        if len(self.stages) == 0:
            raise PicmodError("channel needs at least one stage")
        if self.insertion_loss_db < 0:
            raise PicmodError("insertion_loss_db must be >= 0")

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    @property
    def v_pi(self) -> float:
        return self.stages[0].mod_shifter.v_pi

    def min_transmission(self) -> float:
        """Lossless floor of the cascade (product of per-stage floors)."""
        out = 1.0
        for st in self.stages:
            out *= st.min_transmission()
        return out

    def max_transmission(self) -> float:
        out = 1.0
        for st in self.stages:
            out *= st.max_transmission()
        return out

    def extinction_ratio_db(self) -> float:
        return 10.0 * math.log10(self.max_transmission() / self.min_transmission())


def channel_transmission(channel: ModulatorChannel, drive_voltages, include_loss=True):
    """Power transmission of the cascade for one drive voltage per stage.

    Each element of ``drive_voltages`` may be a scalar or an array (all
    broadcastable); stage powers multiply and the lumped insertion loss is
    applied last.
    """
    if len(drive_voltages) != channel.n_stages:
        raise PicmodError(
            f"got {len(drive_voltages)} drive voltages for {channel.n_stages} stages"
        )
    out = 1.0
    for st, v in zip(channel.stages, drive_voltages):
        out = out * stage_transmission(st, v)
    if include_loss:
        out = out * 10.0 ** (-channel.insertion_loss_db / 10.0)
    return out


def channel_transmission_equal(channel: ModulatorChannel, voltage, include_loss=True):
    """Cascade transmission with the same drive applied to every stage."""
    return channel_transmission(
        channel, [voltage] * channel.n_stages, include_loss=include_loss
    )


@dataclass(frozen=True)
class SweepResult:
    """Voltage sweep of a channel, normalized to the sweep maximum."""

    voltages: np.ndarray
    transmissions: np.ndarray
    er_db: float
    fitted_v_pi: float
    fitted_bias_phase: float = 0.0
    fit_residual: float = float("nan")
    detector_limited: bool = False
    channel_index: int = 0


def sweep_channel(
    channel: ModulatorChannel,
    v_start: float,
    v_stop: float,
    n_points: int,
    detector=None,
    rng=None,
    fit: bool = True,
) -> SweepResult:
    """Sweep the channel over a uniform voltage grid (equal drive per stage).

    If a detector model is supplied, every point passes through it (floor
    clamping plus optional additive noise) before normalization, and the
    reported ER is the detector-limited one.
    """
    if n_points < 3:
        raise PicmodError("n_points must be >= 3")
    if not v_start < v_stop:
        raise PicmodError("v_start must be < v_stop")
    volts = np.linspace(v_start, v_stop, n_points)
    trans = channel_transmission_equal(channel, volts, include_loss=False)
    detector_limited = False
    if detector is not None:
        peak = float(np.max(trans))
        trans = detector.measure(trans / peak, rng=rng) * peak
        detector_limited = detector.clamp
    peak = float(np.max(trans))
    trans = trans / peak
    er_db = 10.0 * math.log10(np.max(trans) / np.min(trans))
    fitted = VpiFit(float("nan"), float("nan"), float("nan"), float("nan"), float("nan"))
    if fit:
        # The cascade fringe is the per-stage sin^2 raised to the stage
        # count; fit the per-stage fringe on the n-th root.
        fitted = fit_v_pi(volts, trans ** (1.0 / channel.n_stages))
    return SweepResult(
        voltages=volts,
        transmissions=trans,
        er_db=er_db,
        fitted_v_pi=fitted.v_pi,
        fitted_bias_phase=fitted.bias_phase,
        fit_residual=fitted.residual,
        detector_limited=detector_limited,
        channel_index=channel.channel_index,
    )


@dataclass(frozen=True)
class ChipConfig:
    """One 8-channel chip at a single operating wavelength."""

    channels: tuple[ModulatorChannel, ...]
    wavelength_nm: int
    propagation_loss_db_per_cm: float
    path_length_cm: float
    coupling_loss_db: float

    def __post_init__(self):
        if self.wavelength_nm not in SUPPORTED_WAVELENGTHS_NM:
            raise PicmodError(f"unsupported wavelength {self.wavelength_nm} nm")
        if not 0.0 <= self.coupling_loss_db:
            raise PicmodError("coupling_loss_db must be >= 0")
        if self.propagation_loss_db_per_cm < 0 or self.path_length_cm < 0:
            raise PicmodError("losses and path length must be >= 0")


def link_budget(chip: ChipConfig) -> np.ndarray:
    """Total fiber-to-output loss per channel in dB.

    2x facet coupling + propagation over the path + per-channel insertion
    loss of every modulator in that channel's path.
    """
    base = 2.0 * chip.coupling_loss_db + (
        chip.propagation_loss_db_per_cm * chip.path_length_cm
    )
    return np.array([base + ch.insertion_loss_db for ch in chip.channels])


def make_calibrated_channel(
    v_pi: float,
    power_split: float = 0.5,
    n_stages: int = 2,
    insertion_loss_db: float = 0.0,
    channel_index: int = 0,
    bias_phase: float = 0.0,
) -> ModulatorChannel:
    """Build a channel with identical stages and a given coupler imbalance.

    With bias_phase 0 the monitored BAR port sits at its null at V = 0.
    """
    coupler = Coupler(power_split)
    stage = MziStage(
        input_coupler=coupler,
        output_coupler=coupler,
        arm_phase_shifters=(
            PhaseShifter(v_pi=v_pi, bias_phase=bias_phase, role=ShifterRole.MOD),
            PhaseShifter(v_pi=v_pi, bias_phase=0.0, role=ShifterRole.BIAS),
        ),
        monitored_port=Port.BAR,
    )
    return ModulatorChannel(
        stages=(stage,) * n_stages,
        insertion_loss_db=insertion_loss_db,
        channel_index=channel_index,
    )


def power_split_for_er(
    target_er_db: float, n_stages: int = 2, min_imbalance: float = 1e-4
) -> float:
    """Coupler power split whose imbalance yields the target channel ER.

    Bisection on the imbalance delta = power_split - 0.5 over the bracket
    [min_imbalance, 0.25]; the channel floor for equal imbalance on all
    couplers is (2*delta)^(2*n_stages), so ER is monotone decreasing in
    delta. Targets outside the bracket's ER range raise CalibrationError.
    """
    if target_er_db <= 0:
        raise CalibrationError("target ER must be positive")

    def er_of(delta: float) -> float:
        ch = make_calibrated_channel(v_pi=1.0, power_split=0.5 + delta, n_stages=n_stages)
        return ch.extinction_ratio_db()

    lo, hi = min_imbalance, 0.25 - 1e-12
    if er_of(lo) < target_er_db:
        raise CalibrationError(
            f"target ER {target_er_db} dB above the {n_stages}-stage maximum "
            f"for the imbalance bracket ({er_of(lo):.1f} dB)"
        )
    if er_of(hi) > target_er_db:
        raise CalibrationError(
            f"target ER {target_er_db} dB below the bracket minimum ({er_of(hi):.1f} dB)"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if er_of(mid) > target_er_db:
            lo = mid
        else:
            hi = mid
    return 0.5 + 0.5 * (lo + hi)
