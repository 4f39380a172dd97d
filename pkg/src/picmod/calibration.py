"""Calibration routines: coupler splits from ER targets and verification.

Calibration is deterministic given the configuration: each channel's
coupler power split is solved by bisection from its extinction target,
then every derived quantity (ER, v_pi fit, link budget) is re-measured
through the forward model and compared against the target before the
calibrated configuration is written out.
"""

from __future__ import annotations

import numpy as np

from .config import ExperimentConfig
from .core import link_budget, power_split_for_er, sweep_channel
from .errors import CalibrationError
from .reports import RunReport


def calibrate(config: ExperimentConfig, er_tol_db: float = 0.1) -> tuple[ExperimentConfig, RunReport]:
    """Solve coupler splits for the configured ER targets and verify them.

    Returns a new configuration with coupler_power_splits frozen in, plus
    a report of achieved ER, fitted v_pi, and link budget per channel.
    The detector-free forward model is used for verification so the check
    is against the chip itself, not the measurement floor.
    """
    chip_cfg = config.data["chip"]
    report = RunReport("calibrate", config.hash, config.seed)

    splits = [
        power_split_for_er(er, chip_cfg["n_stages"])
        for er in chip_cfg["target_er_db"]
    ]
    data = dict(config.data)
    data["chip"] = dict(chip_cfg)
    data["chip"]["coupler_power_splits"] = [float(s) for s in splits]
    calibrated = ExperimentConfig(data)

    v_pi = chip_cfg["v_pi_volts"]
    for ch, target in zip(calibrated.channels(), chip_cfg["target_er_db"]):
        achieved = ch.extinction_ratio_db()
        err = abs(achieved - target)
        if err > er_tol_db:
            raise CalibrationError(
                f"channel {ch.channel_index}: achieved ER {achieved:.2f} dB misses "
                f"target {target:.2f} dB by more than {er_tol_db} dB"
            )
        sweep = sweep_channel(ch, 0.0, 2.0 * v_pi, 241)
        report.add(
            f"channel_{ch.channel_index}_er",
            achieved,
            "dB",
            threshold=f"|ER - {target}| <= {er_tol_db} dB",
            passed=err <= er_tol_db,
        )
        vpi_err = abs(sweep.fitted_v_pi - v_pi) / v_pi
        report.add(
            f"channel_{ch.channel_index}_v_pi",
            sweep.fitted_v_pi,
            "V",
            threshold="fit within 1% of configured v_pi",
            passed=vpi_err <= 0.01,
        )

    budget = link_budget(calibrated.chip())
    report.add("link_budget_mean", float(np.mean(budget)), "dB")
    report.add("er_mean", float(np.mean(chip_cfg["target_er_db"])), "dB")
    return calibrated, report.finish()
