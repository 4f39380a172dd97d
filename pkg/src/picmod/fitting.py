"""Half-wave-voltage calibration fit.

Fits T(V) = A*sin^2(pi*V/(2*v_pi) + theta0) + floor to transmission-vs-
voltage data. For a fixed v_pi the model is linear in the equivalent basis
[1, cos(wV), sin(wV)] with w = pi/v_pi, so the fit reduces to a bounded
1-D search over v_pi with an exact linear least-squares solve inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import FitError, InsufficientFringeError


@dataclass(frozen=True)
class VpiFit:
    v_pi: float
    bias_phase: float
    amplitude: float
    floor: float
    residual: float  # RMS misfit


def _linear_solve(volts: np.ndarray, trans: np.ndarray, omega: float):
    basis = np.column_stack(
        [np.ones_like(volts), np.cos(omega * volts), np.sin(omega * volts)]
    )
    coef, _, _, _ = np.linalg.lstsq(basis, trans, rcond=None)
    resid = trans - basis @ coef
    return coef, float(np.sum(resid**2))


def fit_v_pi(voltages, transmissions) -> VpiFit:
    """Fit the sin^2 transfer model and return the calibrated parameters.

    Raises InsufficientFringeError when the data is degenerate or spans
    less than half a fringe, FitError on non-convergence.
    """
    volts = np.asarray(voltages, dtype=float)
    trans = np.asarray(transmissions, dtype=float)
    if volts.shape != trans.shape or volts.ndim != 1:
        raise FitError("voltages and transmissions must be 1-D arrays of equal length")
    if volts.size < 5:
        raise FitError("need at least 5 samples")
    if not (np.all(np.isfinite(volts)) and np.all(np.isfinite(trans))):
        raise FitError("non-finite samples")
    span = float(np.max(volts) - np.min(volts))
    scale = float(np.max(np.abs(trans)))
    if span <= 0 or scale <= 0 or float(np.ptp(trans)) < 1e-9 * max(scale, 1.0):
        raise InsufficientFringeError("data has no usable fringe contrast")

    dv = float(np.median(np.diff(np.sort(volts))))
    omega_lo = 0.5 * math.pi / span
    omega_hi = math.pi / max(dv, 1e-12 * span)

    # Coarse scan, then local refinement of the fringe frequency.
    grid = np.geomspace(omega_lo, omega_hi, 512)
    sses = np.array([_linear_solve(volts, trans, w)[1] for w in grid])
    best = int(np.argmin(sses))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    res = minimize_scalar(
        lambda w: _linear_solve(volts, trans, w)[1],
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12 * (hi - lo) + 1e-15},
    )
    if not res.success:
        raise FitError("v_pi search did not converge")
    omega = float(res.x)
    coef, sse = _linear_solve(volts, trans, omega)
    a0, a1, a2 = coef
    half_amp = math.hypot(a1, a2)
    if half_amp < 1e-9 * max(scale, 1.0):
        raise InsufficientFringeError("fitted fringe amplitude is degenerate")
    v_pi = math.pi / omega
    if v_pi > span:
        raise InsufficientFringeError(
            f"data spans {span:.3g} V, less than half a fringe of fitted v_pi {v_pi:.3g} V"
        )
    theta0 = 0.5 * math.atan2(a2, -a1)
    return VpiFit(
        v_pi=v_pi,
        bias_phase=theta0,
        amplitude=2.0 * half_amp,
        floor=float(a0 - half_amp),
        residual=math.sqrt(sse / volts.size),
    )
