"""Shared fixtures for the picmod test suite."""

import pathlib

import pytest

from picmod.config import ExperimentConfig
from picmod.core import make_calibrated_channel, power_split_for_er
from picmod.dynamics import KernelKind, synthesize_kernel

CONFIG_DIR = pathlib.Path(__file__).resolve().parents[1] / "src" / "picmod" / "configs"


@pytest.fixture(scope="session")
def config_795():
    return ExperimentConfig.load(CONFIG_DIR / "pic_795nm.yaml")


@pytest.fixture(scope="session")
def config_1013():
    return ExperimentConfig.load(CONFIG_DIR / "pic_1013nm.yaml")


@pytest.fixture(scope="session")
def config_420():
    return ExperimentConfig.load(CONFIG_DIR / "pic_420nm.yaml")


@pytest.fixture(scope="session")
def config_path_795():
    return str(CONFIG_DIR / "pic_795nm.yaml")


@pytest.fixture(scope="session")
def channel_714():
    """2-stage channel calibrated to a 71.4 dB extinction ratio."""
    split = power_split_for_er(71.4, n_stages=2)
    return make_calibrated_channel(v_pi=74.7, power_split=split, n_stages=2)


@pytest.fixture(scope="session")
def ideal_channel():
    return make_calibrated_channel(v_pi=74.7, power_split=0.5, n_stages=2)


@pytest.fixture(scope="session")
def fo_response():
    """First-order actuator: 26 ns 10-90% rise at a 1 ns sample period."""
    return synthesize_kernel(KernelKind.FIRST_ORDER, 26e-9, 1e-9)


@pytest.fixture(scope="session")
def so_response():
    """Underdamped second-order actuator (damping ratio 0.3)."""
    return synthesize_kernel(KernelKind.SECOND_ORDER, 26e-9, 1e-9, damping_ratio=0.3)
