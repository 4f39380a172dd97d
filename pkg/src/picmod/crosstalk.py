"""On-chip inter-channel leakage model.

Each channel pair carries two coupling coefficients: power injected
upstream of the victim's modulator (attenuated by the victim's modulator
state) and power injected downstream of it (always passed). On-chip
contributions add incoherently; the three standard measurement scenarios
differ only in the victim's optical input and modulator state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, PicmodError

NEG_INF = float("-inf")


class ModState(enum.Enum):
    ON = "on"
    OFF = "off"


class Scenario(enum.Enum):
    """Victim configuration: A = dark/OFF, B = dark/ON, C = lit/OFF."""

    A = "A"
    B = "B"
    C = "C"


@dataclass(frozen=True)
class ChannelState:
    optical_input: float  # linear power, 0 if inactive
    modulator_state: ModState
    modulator_transmission: float  # linear

    def __post_init__(self):
        if self.optical_input < 0:
            raise PicmodError("optical_input must be >= 0")
        if not 0.0 <= self.modulator_transmission <= 1.0:
            raise PicmodError("modulator_transmission must lie in [0,1]")


@dataclass(frozen=True)
class CrosstalkGraph:
    """Pairwise dB power couplings, split by injection point."""

    n_channels: int
    coupling_before_db: np.ndarray  # [i][j]: i leaks into j upstream of j's modulator
    coupling_after_db: np.ndarray  # [i][j]: downstream of j's modulator

    def __post_init__(self):
        for name in ("coupling_before_db", "coupling_after_db"):
            m = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, m)
            if m.shape != (self.n_channels, self.n_channels):
                raise PicmodError(f"{name} must be {self.n_channels}x{self.n_channels}")
            if not np.all(np.isneginf(np.diag(m))):
                raise PicmodError(f"{name} diagonal must be -inf (no self-coupling)")
            if np.any(m > 0):
                raise PicmodError(f"{name} entries must be <= 0 dB")


def nearest_neighbor_graph(
    n_channels: int,
    before_nn_db: float,
    after_nn_db: float,
    before_nnn_db: float = -90.0,
    after_nnn_db: float = -90.0,
) -> CrosstalkGraph:
    """Symmetric graph with NN and NNN couplings, nothing beyond."""
    before = np.full((n_channels, n_channels), NEG_INF)
    after = np.full((n_channels, n_channels), NEG_INF)
    for i in range(n_channels):
        for j in range(n_channels):
            if abs(i - j) == 1:
                before[i, j] = before_nn_db
                after[i, j] = after_nn_db
            elif abs(i - j) == 2:
                before[i, j] = before_nnn_db
                after[i, j] = after_nnn_db
    return CrosstalkGraph(n_channels, before, after)


def _lin(db: float) -> float:
    return 0.0 if db == NEG_INF else 10.0 ** (db / 10.0)


def victim_output(
    graph: CrosstalkGraph, states: list[ChannelState], victim: int
) -> float:
    """Linear power at the victim's output (incoherent sum of all paths)."""
    if len(states) != graph.n_channels:
        raise PicmodError("states length must equal n_channels")
    if not 0 <= victim < graph.n_channels:
        raise PicmodError(f"victim index {victim} out of range")
    vs = states[victim]
    out = vs.optical_input * vs.modulator_transmission
    for i, st in enumerate(states):
        if i == victim or st.optical_input == 0.0:
            continue
        leak = _lin(graph.coupling_before_db[i, victim]) * vs.modulator_transmission
        leak += _lin(graph.coupling_after_db[i, victim])
        out += st.optical_input * leak
    return out


def scenario_states(
    scenario: Scenario,
    aggressor: int,
    victim: int,
    n_channels: int,
    t_on: float,
    t_off: float,
) -> list[ChannelState]:
    """State template per measurement scenario: aggressor lit and ON."""
    dark_off = ChannelState(0.0, ModState.OFF, t_off)
    states = [dark_off] * n_channels
    states[aggressor] = ChannelState(1.0, ModState.ON, t_on)
    if scenario is Scenario.A:
        states[victim] = ChannelState(0.0, ModState.OFF, t_off)
    elif scenario is Scenario.B:
        states[victim] = ChannelState(0.0, ModState.ON, t_on)
    else:
        states[victim] = ChannelState(1.0, ModState.OFF, t_off)
    return states


def crosstalk_matrix(
    graph: CrosstalkGraph,
    scenario: Scenario,
    t_on: float = 1.0,
    t_off: float = 0.0,
    detector=None,
) -> np.ndarray:
    """Pairwise victim outputs in dB relative to the aggressor ON output.

    Diagonal entries are 0 dB (the aggressor itself). With a detector the
    measured values are floor-clamped.
    """
    n = graph.n_channels
    out = np.zeros((n, n))
    for i in range(n):
        ref = 1.0 * t_on
        for j in range(n):
            if i == j:
                continue
            states = scenario_states(scenario, i, j, n, t_on, t_off)
            rel = victim_output(graph, states, j) / ref
            if detector is not None:
                rel = detector.measure(rel)
            out[i, j] = NEG_INF if rel == 0.0 else 10.0 * math.log10(rel)
    return out


def nn_mean_db(matrix: np.ndarray) -> float:
    """Mean of the nearest-neighbor entries of a dB crosstalk matrix."""
    n = matrix.shape[0]
    vals = [matrix[i, j] for i in range(n) for j in range(n) if abs(i - j) == 1]
    return float(np.mean(vals))


def predict_scenario_c_db(er_db: float, after_nn_db: float) -> float:
    """Scenario-C NN level composed from the victim's own ER and the
    downstream coupling alone (incoherent sum)."""
    return 10.0 * math.log10(10.0 ** (-er_db / 10.0) + 10.0 ** (after_nn_db / 10.0))


def check_scenario_c_consistency(
    er_db: float, after_nn_db: float, measured_c_db: float, tol_db: float = 3.0
) -> float:
    """Fail loudly if the composed scenario-C prediction disagrees with the
    configured measurement target. Returns the prediction."""
    predicted = predict_scenario_c_db(er_db, after_nn_db)
    if abs(predicted - measured_c_db) > tol_db:
        raise CalibrationError(
            f"scenario-C composition check failed: predicted {predicted:.2f} dB vs "
            f"target {measured_c_db:.2f} dB (tolerance {tol_db} dB)"
        )
    return predicted
