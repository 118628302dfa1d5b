import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risswpcn import (
    AngleSet,
    ArrayGeometry,
    PathLossModel,
    SpatialPhases,
    angles_to_phases,
    path_loss_linear,
    steering_ula,
    steering_upa,
    substream,
    synth_rician,
)
from risswpcn.arrays import upa_index_ramps

from conftest import make_params


class TestGeometry:
    def test_passive_count(self):
        assert ArrayGeometry(4, 10, 10).n_passive == 100

    @pytest.mark.parametrize("na,arms", [(3, (2, 2)), (7, (4, 4)), (19, (10, 10)), (8, (4, 5))])
    def test_l_array_arms_share_corner(self, na, arms):
        geo = ArrayGeometry(1, 10, 10, na=na)
        ax, ay = geo.arm_lengths
        assert (ax, ay) == arms
        assert ax + ay - 1 == na

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            ArrayGeometry(0, 10, 10)
        with pytest.raises(ValueError):
            ArrayGeometry(4, 10, 10, na=-1)
        with pytest.raises(ValueError):
            ArrayGeometry(4, 10, 10, na=2).arm_lengths
        with pytest.raises(ValueError):
            ArrayGeometry(4, 3, 3, na=19)

    def test_angle_interval_enforced(self):
        with pytest.raises(ValueError):
            AngleSet(phi=math.pi / 2)
        with pytest.raises(ValueError):
            AngleSet(phi=0.0, theta=math.nan)


class TestAnglesToPhases:
    def test_broadside_azimuth(self):
        ph = angles_to_phases(AngleSet(phi=math.pi / 2 - 1e-12, theta=0.0))
        assert ph.u == pytest.approx(0.0, abs=1e-11)
        assert ph.v == pytest.approx(math.pi, rel=1e-12)
        assert ph.z == 0.0

    def test_zero_azimuth_kills_v(self):
        ph = angles_to_phases(AngleSet(phi=0.0, theta=0.37))
        assert ph.u == pytest.approx(math.pi)
        assert ph.v == 0.0

    def test_hand_evaluated_triple(self):
        ph = angles_to_phases(AngleSet(phi=math.pi / 3, theta=math.pi / 6, varpi=math.pi / 4))
        assert ph.u == pytest.approx(math.pi / 2, rel=1e-12)
        assert ph.v == pytest.approx(3 * math.pi / 4, rel=1e-12)
        assert ph.z == pytest.approx(math.pi * math.sqrt(2) / 2, rel=1e-12)


class TestSteering:
    def test_upa_zero_phases(self):
        assert np.allclose(steering_upa(0.0, 0.0, 2, 2), 0.5)

    def test_upa_single_element(self):
        assert np.allclose(steering_upa(1.0, -2.0, 1, 1), [1.0])

    def test_upa_kron_expansion(self):
        got = steering_upa(math.pi, 0.0, 2, 2)
        assert np.allclose(got, 0.5 * np.array([1, 1, -1, -1]))

    def test_ula_examples(self):
        assert np.allclose(steering_ula(0.0, 4), 0.5)
        assert np.allclose(steering_ula(0.3, 1), [1.0])
        assert np.allclose(steering_ula(math.pi / 2, 2), np.array([1, 1j]) / math.sqrt(2))

    @settings(max_examples=60, deadline=None)
    @given(
        u=st.floats(-math.pi, math.pi),
        v=st.floats(-math.pi, math.pi),
        nx=st.integers(1, 8),
        ny=st.integers(1, 8),
    )
    def test_upa_matches_indexwise_construction(self, u, v, nx, ny):
        # independent construction straight from the element index map
        ix, iy = upa_index_ramps(nx, ny)
        direct = np.exp(1j * (ix * u + iy * v)) / math.sqrt(nx * ny)
        assert np.allclose(steering_upa(u, v, nx, ny), direct, atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(
        u=st.floats(-math.pi, math.pi),
        v=st.floats(-math.pi, math.pi),
        nx=st.integers(1, 8),
        ny=st.integers(1, 8),
    )
    def test_unit_norms(self, u, v, nx, ny):
        assert np.linalg.norm(steering_upa(u, v, nx, ny)) == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(steering_ula(u, nx * ny)) == pytest.approx(1.0, abs=1e-12)


class TestPathLoss:
    def test_reference_distance(self):
        assert path_loss_linear(PathLossModel(), 1.0) == pytest.approx(1e-3)

    def test_zero_exponent_is_flat(self):
        model = PathLossModel(ref_loss_db=30.0, exponent=0.0)
        assert path_loss_linear(model, 50.0) == pytest.approx(1e-3)

    def test_power_law_value(self):
        assert path_loss_linear(PathLossModel(), 3.0) == pytest.approx(8.9193e-5, rel=1e-4)

    def test_rejects_nonpositive_distance(self):
        with pytest.raises(ValueError):
            path_loss_linear(PathLossModel(), 0.0)

    def test_cascade_is_product(self):
        p = make_params(normalized=False)
        assert p.cascade_loss == pytest.approx(p.loss_hap_riss * p.loss_riss_user)


class TestSynthRician:
    def test_pure_los_at_infinite_kappa(self):
        p = make_params(kappa_h=math.inf, kappa_g=math.inf)
        real = synth_rician(p, substream(0, 0))
        assert np.allclose(real.g_matrix, real.g_los)
        assert np.allclose(real.h_vector, real.h_los)

    def test_los_frobenius_norm(self):
        p = make_params()
        real = synth_rician(p, substream(0, 1))
        n, m = p.geometry.n_passive, p.geometry.m_antennas
        assert np.linalg.norm(real.g_los) ** 2 == pytest.approx(m * n, rel=1e-12)
        assert np.abs(real.h_los).max() == pytest.approx(1.0, rel=1e-12)

    def test_reconstruction_identity(self):
        p = make_params(kappa_h=2.5, kappa_g=0.7)
        real = synth_rician(p, substream(0, 2))
        wh = math.sqrt(2.5 / 3.5), math.sqrt(1 / 3.5)
        wg = math.sqrt(0.7 / 1.7), math.sqrt(1 / 1.7)
        assert np.allclose(real.h_vector, wh[0] * real.h_los + wh[1] * real.h_nlos, atol=1e-14)
        assert np.allclose(real.g_matrix, wg[0] * real.g_los + wg[1] * real.g_nlos, atol=1e-14)

    def test_rayleigh_entry_moments(self):
        # kappa=0: entries are unit-variance CSCG; >=1e5 entry draws
        p = make_params(kappa_h=0.0, kappa_g=0.0)
        rng = substream(0, 3)
        sq_sum, mean_sum, count = 0.0, 0.0, 0
        for _ in range(250):
            real = synth_rician(p, rng)
            sq_sum += float(np.sum(np.abs(real.g_matrix) ** 2))
            mean_sum += complex(np.sum(real.g_matrix)).real
            count += real.g_matrix.size
        assert count >= 1e5
        assert sq_sum / count == pytest.approx(1.0, rel=0.02)
        assert abs(mean_sum / count) < 0.02

    def test_substream_reproducibility(self):
        p = make_params()
        a = synth_rician(p, substream(9, 4, 2))
        b = synth_rician(p, substream(9, 4, 2))
        assert np.array_equal(a.g_matrix, b.g_matrix)
        assert np.array_equal(a.h_vector, b.h_vector)


class TestSpatialPhases:
    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            SpatialPhases(u=3.5)
        SpatialPhases(u=math.pi)  # boundary allowed
