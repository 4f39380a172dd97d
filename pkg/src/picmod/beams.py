"""Free-space beam-array model at the target plane.

Sites sit on a 1-D line at a fixed pitch in units of the 1/e^2 intensity
diameter d0. Each active channel contributes a Gaussian beam at its site;
evanescent coupling in the delivery path places attenuated copies on the
nearest-neighbor sites. Fields add coherently by default (worst case for
aligned phases); an incoherent intensity sum is available for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PicmodError


@dataclass(frozen=True)
class BeamArray:
    """Beam sites with complex per-site amplitudes (leaks included)."""

    n_beams: int
    amplitudes: np.ndarray  # complex field amplitude per site
    active: frozenset
    pitch: float = 4.33  # in units of d0
    waist_radius: float = 0.5  # 1/e^2 field radius in units of d0
    measurement_floor_db: float = -65.0

    def __post_init__(self):
        if self.n_beams < 1 or self.pitch <= 0 or self.waist_radius <= 0:
            raise PicmodError("n_beams, pitch, and waist_radius must be positive")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.n_beams,):
            raise PicmodError("amplitudes must have one entry per site")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "active", frozenset(self.active))

    def site_positions(self) -> np.ndarray:
        return np.arange(self.n_beams) * self.pitch


def make_beam_array(
    n_beams: int,
    active,
    pitch: float = 4.33,
    nn_leak_db: float = -50.8,
    leak_phase: float = 0.0,
    measurement_floor_db: float = -65.0,
) -> BeamArray:
    """Array with unit amplitude on active sites plus NN leaked copies.

    nn_leak_db is the leaked *intensity* at a neighbor site relative to an
    active site; the leaked field amplitude is its square root, with an
    adjustable phase (0 = worst case when coherent with the main beams).
    """
    active = frozenset(int(i) for i in active)
    if not active:
        raise PicmodError("active set must be non-empty")
    if any(not 0 <= i < n_beams for i in active):
        raise PicmodError("active index out of range")
    amps = np.zeros(n_beams, dtype=complex)
    leak_amp = math.sqrt(10.0 ** (nn_leak_db / 10.0)) * np.exp(1j * leak_phase)
    for i in active:
        amps[i] += 1.0
        for j in (i - 1, i + 1):
            if 0 <= j < n_beams:
                amps[j] += leak_amp
    return BeamArray(
        n_beams=n_beams,
        amplitudes=amps,
        active=active,
        pitch=pitch,
        measurement_floor_db=measurement_floor_db,
    )


def _gaussian_fields(array: BeamArray, x: np.ndarray) -> np.ndarray:
    """Per-site field envelopes at positions x (in d0 units); shape (sites, x)."""
    pos = array.site_positions()[:, None]
    return np.exp(-((x[None, :] - pos) ** 2) / array.waist_radius**2)


def intensity_profile(array: BeamArray, x_samples, coherent: bool = True) -> np.ndarray:
    """Unnormalized intensity cross-section along the site axis."""
    x = np.atleast_1d(np.asarray(x_samples, dtype=float))
    fields = _gaussian_fields(array, x)
    if coherent:
        total = (array.amplitudes[:, None] * fields).sum(axis=0)
        return np.abs(total) ** 2
    return ((np.abs(array.amplitudes[:, None]) ** 2) * fields**2).sum(axis=0)


@dataclass(frozen=True)
class BeamProfile:
    x_over_d0: np.ndarray
    intensity: np.ndarray  # normalized to peak
    intensity_db: np.ndarray  # floor-clamped for reporting
    floor_db: float


def target_plane_profile(
    array: BeamArray, x_samples, coherent: bool = True
) -> BeamProfile:
    """Normalized target-plane intensity cross-section.

    The linear profile is normalized to its peak; the dB profile is
    clamped at the measurement floor, as a real detector would report it.
    """
    x = np.atleast_1d(np.asarray(x_samples, dtype=float))
    intensity = intensity_profile(array, x, coherent=coherent)
    peak = float(intensity.max())
    if peak <= 0:
        raise PicmodError("profile has no power")
    norm = intensity / peak
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(norm)
    db = np.maximum(db, array.measurement_floor_db)
    return BeamProfile(
        x_over_d0=x, intensity=norm, intensity_db=db, floor_db=array.measurement_floor_db
    )


@dataclass(frozen=True)
class SiteLeakage:
    site: int
    leakage_db: float  # raw model value relative to the active-site peak
    reported_db: float  # floor-clamped
    floor_limited: bool


def site_leakage_report(array: BeamArray, coherent: bool = True) -> list[SiteLeakage]:
    """Leakage at every idle site center relative to the active-site peak."""
    pos = array.site_positions()
    intensity = intensity_profile(array, pos, coherent=coherent)
    peak = float(max(intensity[i] for i in array.active))
    report = []
    for site in range(array.n_beams):
        if site in array.active:
            continue
        rel = intensity[site] / peak
        db = 10.0 * math.log10(rel) if rel > 0 else float("-inf")
        limited = db < array.measurement_floor_db
        report.append(
            SiteLeakage(
                site=site,
                leakage_db=db,
                reported_db=max(db, array.measurement_floor_db),
                floor_limited=limited,
            )
        )
    return report
