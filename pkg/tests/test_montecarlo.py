import math

import numpy as np
import pytest

from risswpcn import (
    DriftModel,
    HarvestModel,
    McConfig,
    apply_pilot_overhead,
    expected_energy_perfect,
    mc_energy,
    mc_ergodic_se,
    mc_outage,
    nonlinear_harvest,
    se_upper_bound,
    simulate_frames,
    substream,
)
from risswpcn.gammadist import ergodic_se
from risswpcn.montecarlo import CHUNK, wilson_interval

from conftest import make_params


class TestMcEnergy:
    def test_pure_los_is_deterministic(self):
        p = make_params(kappa_h=math.inf, kappa_g=math.inf)
        res = mc_energy(p, McConfig(n_trials=500, seed=0))
        assert res.mean == pytest.approx(100**2 * 4, rel=1e-9)
        assert res.var == pytest.approx(0.0, abs=1e-4)

    def test_mean_matches_closed_form(self, default_params):
        res = mc_energy(default_params, McConfig(n_trials=30000, seed=1))
        assert res.mean == pytest.approx(10150.0, rel=0.01)

    def test_deterministic_rerun(self, default_params):
        a = mc_energy(default_params, McConfig(n_trials=CHUNK + 17, seed=5, collect_samples=True))
        b = mc_energy(default_params, McConfig(n_trials=CHUNK + 17, seed=5, collect_samples=True))
        assert a.mean == b.mean
        assert np.array_equal(a.samples, b.samples)

    def test_ci_brackets_truth(self, default_params):
        res = mc_energy(default_params, McConfig(n_trials=50000, seed=7))
        assert res.ci_low < 10150.0 < res.ci_high

    def test_matched_pipeline_against_instant_op(self):
        # the vectorized engine must reproduce the per-realization op exactly
        # when fed the same fading draws (role/chunk substream reconstruction)
        from risswpcn import (
            ChannelRealization,
            mrt_precoder,
            received_energy_instant,
            riss_phase_design,
        )
        from risswpcn.arrays import cscg, los_components, rician_weights

        p = make_params(kappa_h=2.0, kappa_g=0.7)
        n_tr = 300
        res = mc_energy(p, McConfig(n_trials=n_tr, seed=7, collect_samples=True))
        g_los, h_los = los_components(p)
        wh = rician_weights(p.kappa_h)
        wg = rician_weights(p.kappa_g)
        h_all = wh[0] * h_los[None, :] + wh[1] * cscg(substream(7, 1, 0), (n_tr, 100))
        g_all = wg[0] * g_los[None, :, :] + wg[1] * cscg(substream(7, 2, 0), (n_tr, 100, 4))
        phases = riss_phase_design(p.user_phases, p.hap_phases, p.geometry)
        w = mrt_precoder(p.hap_phases.z, 4, 1.0)
        for t in range(0, n_tr, 29):
            real = ChannelRealization(
                g_matrix=g_all[t], h_vector=h_all[t],
                g_los=g_los, h_los=h_los, g_nlos=g_all[t], h_nlos=h_all[t],
            )
            want = received_energy_instant(real, phases, w, 1.0)
            assert res.samples[t] == pytest.approx(want, rel=1e-10)

    def test_requires_error_model_when_injecting(self):
        with pytest.raises(ValueError):
            McConfig(n_trials=10, error_domain="phase")

    def test_ci_width_consistent_with_analytic_variance(self, default_params):
        # convergence rate check: the CI half-width should track the
        # moment-matched standard deviation over sqrt(trials)
        from risswpcn import gamma_params_perfect

        n = 50000
        res = mc_energy(default_params, McConfig(n_trials=n, seed=14))
        analytic_hw = 1.96 * math.sqrt(gamma_params_perfect(default_params).variance / n)
        got_hw = (res.ci_high - res.ci_low) / 2
        assert got_hw == pytest.approx(analytic_hw, rel=0.15)


class TestMcOutage:
    def test_zero_threshold(self, default_params):
        res = mc_outage(default_params, 1.0, 0.0, McConfig(n_trials=2000, seed=8))
        assert res.probability == 0.0

    def test_huge_threshold(self, default_params):
        res = mc_outage(default_params, 1.0, 1e12, McConfig(n_trials=2000, seed=9))
        assert res.probability == 1.0

    def test_wilson_interval_sane(self):
        lo, hi = wilson_interval(10, 100)
        assert 0.0 < lo < 0.1 < hi < 1.0
        lo0, hi0 = wilson_interval(0, 100)
        assert lo0 == pytest.approx(0.0, abs=1e-12) and hi0 < 0.05


class TestMcErgodicSe:
    def test_zero_uplink_power(self):
        p = make_params(p_i_watts=0.0)
        res = mc_ergodic_se(p, McConfig(n_trials=1000, seed=10))
        assert res.mean == 0.0

    def test_jensen_ordering(self):
        for kh, kg in ((1.0, 1.0), (10.0, 10.0), (3.0, 0.5)):
            p = make_params(kappa_h=kh, kappa_g=kg, normalized=False)
            res = mc_ergodic_se(p, McConfig(n_trials=20000, seed=11))
            assert res.mean <= se_upper_bound(p) + 1e-9

    def test_matches_quadrature_closed_form(self):
        p = make_params(kappa_h=10.0, kappa_g=10.0, normalized=False)
        res = mc_ergodic_se(p, McConfig(n_trials=50000, seed=12))
        assert res.mean == pytest.approx(ergodic_se(p), rel=0.01)

    def test_uplink_mean_snr_matches_downlink_numerator(self):
        # reciprocity with the angle-informed combiner: E{SNR} equals the
        # downlink mean energy rescaled by P_I/(P_E sigma^2)
        p = make_params(kappa_h=10.0, kappa_g=10.0)
        snr_scale = p.p_i_watts / (p.p_e_watts * p.noise_sigma2_watts)
        res = mc_energy(p, McConfig(n_trials=30000, seed=13))
        want_mean_snr = expected_energy_perfect(p) * snr_scale
        got_mean_snr = res.mean * snr_scale
        assert got_mean_snr == pytest.approx(want_mean_snr, rel=0.02)


class TestHarvest:
    def test_zero_input(self):
        assert nonlinear_harvest(0.0, HarvestModel()) == 0.0

    def test_saturation(self):
        assert nonlinear_harvest(10.0, HarvestModel()) == pytest.approx(0.02337, rel=1e-9)

    def test_midpoint_value(self):
        hm = HarvestModel()
        assert nonlinear_harvest(hm.b, hm) == pytest.approx(9.25e-3, rel=1e-3)

    def test_monotone_bounded(self):
        hm = HarvestModel()
        p = np.linspace(0, 0.1, 300)
        out = nonlinear_harvest(p, hm)
        assert np.all(np.diff(out) >= 0)
        assert np.all(out <= hm.me + 1e-12)
        assert np.all(out >= 0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            nonlinear_harvest(-1e-9, HarvestModel())


class TestPilotOverhead:
    def test_single_element(self):
        assert apply_pilot_overhead(1.0, 0, 256) == pytest.approx(255 / 256)

    def test_boundary_rejected(self):
        with pytest.raises(ValueError):
            apply_pilot_overhead(1.0, 255, 256)

    def test_midrange_factor(self):
        assert apply_pilot_overhead(2.0, 100, 256) == pytest.approx(2.0 * 155 / 256)


class TestSimulateFrames:
    def test_zero_drift_stationary_single_user(self, strong_los_params):
        recs = simulate_frames(strong_los_params, 1, 8, DriftModel(), substream(20, 0))
        energies = {round(r.downlink_energy_watts, 9) for r in recs}
        snrs = {round(r.uplink_snr, 6) for r in recs}
        assert len(energies) == 1
        assert len(snrs) == 1

    def test_zero_drift_perfect_value_pure_los(self):
        p = make_params(kappa_h=math.inf, kappa_g=math.inf)
        recs = simulate_frames(p, 2, 6, DriftModel(), substream(20, 1))
        for r in recs:
            assert r.downlink_energy_watts == pytest.approx(100**2 * 4, rel=1e-9)

    def test_zero_drift_stationary_per_user(self, strong_los_params):
        recs = simulate_frames(strong_los_params, 3, 12, DriftModel(), substream(20, 2))
        for k in range(3):
            vals = {round(r.downlink_energy_watts, 9) for r in recs if r.user == k}
            assert len(vals) == 1

    def test_more_users_stale_hap_angles_hurt_uplink(self, strong_los_params):
        drift = DriftModel(hap_angle_std=0.04)
        means = {}
        for k in (1, 4):
            recs = simulate_frames(strong_los_params, k, 60, drift, substream(21, k))
            means[k] = float(np.mean([r.uplink_snr for r in recs[10:]]))
        assert means[4] < means[1]

    def test_uplink_first_beats_downlink_first(self, strong_los_params):
        drift = DriftModel(user_angle_std=0.05)
        means = {}
        for order in ("uplink_first", "downlink_first"):
            recs = simulate_frames(strong_los_params, 2, 50, drift, substream(22, 3), order=order)
            means[order] = float(np.mean([r.downlink_energy_watts for r in recs]))
        assert means["uplink_first"] >= means["downlink_first"]

    def test_staleness_metadata(self, strong_los_params):
        recs = simulate_frames(
            strong_los_params, 2, 10, DriftModel(hap_angle_std=0.02), substream(23, 0)
        )
        assert any(r.hap_staleness_rad > 0 for r in recs)
        recs0 = simulate_frames(strong_los_params, 2, 10, DriftModel(), substream(23, 1))
        assert all(r.hap_staleness_rad == 0 for r in recs0)

    def test_input_validation(self, strong_los_params):
        with pytest.raises(ValueError):
            simulate_frames(strong_los_params, 0, 5, DriftModel(), substream(24, 0))
        with pytest.raises(ValueError):
            simulate_frames(strong_los_params, 1, 5, DriftModel(), substream(24, 1), order="sideways")
