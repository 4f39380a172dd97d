"""Static transfer-matrix model: stages, cascades, sweeps, budgets."""

import math

import numpy as np
import pytest

from picmod.core import (
    ChipConfig,
    Coupler,
    MziStage,
    PhaseShifter,
    Port,
    ShifterRole,
    channel_transmission,
    channel_transmission_equal,
    link_budget,
    make_calibrated_channel,
    power_split_for_er,
    stage_matrix,
    stage_transmission,
    sweep_channel,
)
from picmod.errors import CalibrationError, PicmodError
from picmod.noise import DetectorModel


def make_stage(split_in=0.5, split_out=0.5, v_pi=74.7, bias=0.0, port=Port.BAR):
    return MziStage(
        input_coupler=Coupler(split_in),
        output_coupler=Coupler(split_out),
        arm_phase_shifters=(
            PhaseShifter(v_pi=v_pi, bias_phase=bias, role=ShifterRole.MOD),
            PhaseShifter(v_pi=v_pi, role=ShifterRole.BIAS),
        ),
        monitored_port=port,
    )


class TestCoupler:
    def test_unitarity(self):
        c = Coupler(0.37)
        assert c.t**2 + c.r**2 == pytest.approx(1.0, abs=1e-15)
        m = c.matrix()
        assert np.allclose(m.conj().T @ m, np.eye(2), atol=1e-15)

    @pytest.mark.parametrize("split", [0.0, 1.0, -0.1, 1.5])
    def test_degenerate_split_rejected(self, split):
        with pytest.raises(PicmodError):
            Coupler(split)


class TestStageTransmission:
    def test_ideal_null_at_zero_volts(self):
        assert stage_transmission(make_stage(), 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_ideal_half_power_at_half_v_pi(self):
        assert stage_transmission(make_stage(), 74.7 / 2) == pytest.approx(0.5, abs=1e-12)

    def test_imbalanced_null_matches_matrix_oracle(self):
        # Independent oracle: direct complex 2x2 product at V = 0.
        stage = make_stage(split_in=0.51, split_out=0.51)
        t = math.sqrt(0.49)
        r = math.sqrt(0.51)
        c = np.array([[t, 1j * r], [1j * r, t]])
        m = c @ np.diag([1.0, 1.0]) @ c
        expected = abs(m[0, 0]) ** 2
        assert stage_transmission(stage, 0.0) == pytest.approx(expected, abs=1e-15)
        # Equal imbalance on both couplers: floor = (t^2 - r^2)^2 = (2*delta)^2.
        assert expected == pytest.approx((2 * 0.01) ** 2, abs=1e-12)

    def test_stage_requires_one_mod_one_bias(self):
        mod = PhaseShifter(v_pi=1.0, role=ShifterRole.MOD)
        with pytest.raises(PicmodError):
            MziStage(Coupler(), Coupler(), (mod, mod))

    def test_stage_matrix_is_unitary(self):
        m = stage_matrix(make_stage(0.43, 0.58), 12.3)
        assert np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12)


class TestChannelTransmission:
    def test_two_ideal_stages_fully_on(self, ideal_channel):
        assert channel_transmission(
            ideal_channel, [74.7, 74.7], include_loss=False
        ) == pytest.approx(1.0, abs=1e-12)

    def test_cascade_floor_is_product_of_stage_floors(self):
        # Two stages each with a 35.7 dB standalone floor combine to 71.4 dB.
        split = 0.5 + 0.5 * 10 ** (-3.57 / 2)  # per-stage floor (2*delta)^2
        ch = make_calibrated_channel(v_pi=74.7, power_split=split, n_stages=2)
        floor = channel_transmission(ch, [0.0, 0.0], include_loss=False)
        assert 10 * math.log10(floor) == pytest.approx(-7.14 * 10, abs=1e-6)
        assert ch.extinction_ratio_db() == pytest.approx(71.4, abs=0.01)

    def test_insertion_loss_scales_output(self, ideal_channel):
        lossy = make_calibrated_channel(v_pi=74.7, n_stages=2, insertion_loss_db=3.0)
        lossless = channel_transmission(ideal_channel, [40.0, 40.0], include_loss=False)
        assert channel_transmission(lossy, [40.0, 40.0]) == pytest.approx(
            lossless * 10 ** (-0.3), rel=1e-12
        )
        assert 10 ** (-0.3) == pytest.approx(0.501, abs=1e-3)

    def test_voltage_arity_mismatch(self, ideal_channel):
        with pytest.raises(PicmodError):
            channel_transmission(ideal_channel, [1.0])

    def test_matrix_chain_oracle(self):
        # Brute-force complex matrix-chain product over randomized configs.
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n_stages = int(rng.integers(1, 4))
            stages = []
            for _ in range(n_stages):
                stages.append(
                    make_stage(
                        split_in=rng.uniform(0.3, 0.7),
                        split_out=rng.uniform(0.3, 0.7),
                        v_pi=rng.uniform(10, 300),
                        bias=rng.uniform(-1, 1),
                    )
                )
            from picmod.core import ModulatorChannel

            ch = ModulatorChannel(stages=tuple(stages))
            volts = rng.uniform(-200, 200, n_stages)
            got = channel_transmission(ch, list(volts), include_loss=False)
            expected = 1.0
            for st, v in zip(stages, volts):
                phi1, phi2 = st.arm_phases(v)
                m = (
                    st.output_coupler.matrix()
                    @ np.diag([np.exp(1j * phi1), np.exp(1j * phi2)])
                    @ st.input_coupler.matrix()
                )
                expected *= abs(m[st.monitored_port.value, 0]) ** 2
            assert got == pytest.approx(expected, abs=1e-12)


class TestSweepChannel:
    def test_calibrated_795_channel(self, channel_714):
        res = sweep_channel(channel_714, 0.0, 2 * 74.7, 241)
        assert res.er_db == pytest.approx(71.4, abs=0.1)
        assert res.fitted_v_pi == pytest.approx(74.7, rel=1e-3)

    def test_calibrated_1013_channel(self):
        split = power_split_for_er(61.5, n_stages=2)
        ch = make_calibrated_channel(v_pi=200.0, power_split=split, n_stages=2)
        res = sweep_channel(ch, 0.0, 400.0, 241)
        assert res.er_db == pytest.approx(61.5, abs=0.1)
        assert res.fitted_v_pi == pytest.approx(200.0, rel=1e-3)

    def test_420_channel_through_detector_floor(self):
        split = power_split_for_er(70.0, n_stages=2)
        ch = make_calibrated_channel(v_pi=44.4, power_split=split, n_stages=2)
        det = DetectorModel(relative_floor=10 ** (-42.4 / 10))
        res = sweep_channel(ch, 0.0, 88.8, 241, detector=det)
        assert res.er_db == pytest.approx(42.4, abs=1e-9)
        assert res.detector_limited
        assert res.fitted_v_pi == pytest.approx(44.4, rel=0.01)

    def test_sweep_grid_validation(self, ideal_channel):
        with pytest.raises(PicmodError):
            sweep_channel(ideal_channel, 0.0, 1.0, 2)
        with pytest.raises(PicmodError):
            sweep_channel(ideal_channel, 1.0, 0.0, 11)

    def test_null_location_invariance(self, channel_714):
        # Scaling v_pi and all drives by the same factor changes nothing.
        k = 3.7
        split = power_split_for_er(71.4, n_stages=2)
        scaled = make_calibrated_channel(v_pi=74.7 * k, power_split=split, n_stages=2)
        volts = np.linspace(0, 2 * 74.7, 101)
        base = channel_transmission_equal(channel_714, volts, include_loss=False)
        got = channel_transmission_equal(scaled, volts * k, include_loss=False)
        assert np.allclose(base, got, atol=1e-15, rtol=0)


class TestLinkBudget:
    def test_shipped_default_795(self, config_795):
        assert np.allclose(link_budget(config_795.chip()), 10.5)

    def test_shipped_default_420(self, config_420):
        assert np.allclose(link_budget(config_420.chip()), 14.6)

    def test_zero_loss_config(self):
        ch = make_calibrated_channel(v_pi=1.0)
        chip = ChipConfig((ch,), 795, 0.0, 0.0, 0.0)
        assert link_budget(chip)[0] == 0.0

    def test_monotone_in_each_term(self, config_795):
        base = link_budget(config_795.chip())[0]
        data = dict(config_795.data)
        data["chip"] = dict(data["chip"])
        data["chip"]["coupling_loss_db"] = 4.0
        from picmod.config import ExperimentConfig

        assert link_budget(ExperimentConfig(data).chip())[0] > base


class TestPowerSplitForEr:
    def test_known_two_stage_value(self):
        # ER_db = -20*n*log10(2*delta) for equal imbalance on all couplers.
        split = power_split_for_er(71.4, n_stages=2)
        delta = split - 0.5
        assert -40 * math.log10(2 * delta) == pytest.approx(71.4, abs=1e-6)

    def test_unachievable_target_rejected(self):
        with pytest.raises(CalibrationError):
            power_split_for_er(200.0, n_stages=2)

    def test_nonpositive_target_rejected(self):
        with pytest.raises(CalibrationError):
            power_split_for_er(-5.0)
