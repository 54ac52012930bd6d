import math

import numpy as np
import pytest

from isacbounds import LinkGeometry, SystemParams, link_snr
from isacbounds.errors import OracleDomainError
from isacbounds.model import derive_frame
from isacbounds.oracle import (
    MeanSignalModel,
    fim_numeric,
    jacobian_numeric,
    mean_signal,
    random_link_case,
)


@pytest.fixture
def small_params():
    return SystemParams(active_subcarriers=32, symbols_per_frame=16,
                        frac_subcarriers=1.0, frac_symbols=1.0,
                        n_tx_ant=8, n_rx_ant=8)


class TestMeanSignal:
    def test_total_energy(self, small_params):
        g = LinkGeometry.monostatic(70.0, 0.4)
        m = MeanSignalModel.from_link(small_params, g, 1.0, doppler=500.0, phase=0.3)
        fr = derive_frame(small_params)
        total = sum(
            float(np.vdot(v, v).real)
            for v in (mean_signal(m, k, mm)
                      for k in range(fr.k_subcarriers)
                      for mm in range(fr.m_symbols))
        )
        alpha = m.theta[0]
        gamma2 = abs(m.beam_coupling()) ** 2
        expected = fr.k_subcarriers * fr.m_symbols * alpha**2 * small_params.n_rx_ant * gamma2
        assert total == pytest.approx(expected, rel=1e-12)

    def test_boresight_coupling_gain(self, small_params):
        g = LinkGeometry.monostatic(70.0, 0.4)
        m = MeanSignalModel.from_link(small_params, g, 1.0)
        fr = derive_frame(small_params)
        assert abs(m.beam_coupling()) ** 2 == pytest.approx(
            fr.p_avg * small_params.n_tx_ant, rel=1e-12)

    def test_index_bounds(self, small_params):
        g = LinkGeometry.monostatic(70.0, 0.4)
        m = MeanSignalModel.from_link(small_params, g, 1.0)
        with pytest.raises(IndexError):
            mean_signal(m, 32, 0)

    def test_snr_consistency(self, small_params):
        # alpha^2 |gamma|^2 / noise_var reproduces the radar-equation SNR
        g = LinkGeometry.monostatic(70.0, 0.4)
        m = MeanSignalModel.from_link(small_params, g, 1.0)
        fr = derive_frame(small_params)
        snr = link_snr(small_params, g, 1.0)["snr"]
        assert m.theta[0] ** 2 * abs(m.beam_coupling()) ** 2 / fr.noise_var == \
            pytest.approx(snr, rel=1e-12)


class TestFimNumeric:
    def test_matches_closed_form(self, rng):
        from isacbounds import fim_single_link
        for _ in range(5):
            p, g, rcs = random_link_case(rng)
            closed = fim_single_link(p, g, rcs).values
            numeric = fim_numeric(MeanSignalModel.from_link(p, g, rcs)).values
            scale = np.linalg.norm(closed)
            mask = closed != 0.0
            assert (np.abs(numeric - closed)[mask] / np.abs(closed[mask])).max() < 1e-5
            assert np.abs(numeric[~mask]).max() < 1e-5 * scale

    def test_aoa_diagonal_matches_array_curvature(self, small_params):
        # the (aoa, aoa) entry equals 2KM alpha^2 |gamma|^2 / sigma^2 times
        # pi^2 (N^2-1) N cos^2 / 12, the curvature of the steering vector
        g = LinkGeometry.monostatic(70.0, 0.4)
        m = MeanSignalModel.from_link(small_params, g, 1.0)
        fr = derive_frame(small_params)
        numeric = fim_numeric(m).values
        nr = small_params.n_rx_ant
        curv = math.pi**2 * (nr**2 - 1) * nr * math.cos(0.4) ** 2 / 12.0
        expected = (2.0 * fr.k_subcarriers * fr.m_symbols * m.theta[0] ** 2
                    * abs(m.beam_coupling()) ** 2 / fr.noise_var_postdiv) * curv
        assert numeric[4, 4] == pytest.approx(expected, rel=1e-6)

    def test_doubling_amplitude_quadruples_phase_entry(self, small_params):
        g = LinkGeometry.monostatic(70.0, 0.4)
        m1 = MeanSignalModel.from_link(small_params, g, 1.0)
        theta2 = m1.theta.copy()
        theta2[0] *= 2.0
        m2 = MeanSignalModel(params=small_params, geom=g, theta=theta2)
        f1 = fim_numeric(m1).values
        f2 = fim_numeric(m2).values
        assert f2[1, 1] == pytest.approx(4.0 * f1[1, 1], rel=1e-6)

    def test_independent_of_nuisance_values(self, small_params, rng):
        g = LinkGeometry.monostatic(70.0, 0.4)
        m1 = MeanSignalModel.from_link(small_params, g, 1.0, phase=0.0, doppler=0.0)
        m2 = MeanSignalModel.from_link(small_params, g, 1.0,
                                       phase=float(rng.uniform(-3, 3)),
                                       doppler=float(rng.uniform(-1e3, 1e3)))
        f1, f2 = fim_numeric(m1).values, fim_numeric(m2).values
        assert np.abs(f1 - f2).max() <= 1e-6 * np.abs(f1).max()


class TestJacobianNumeric:
    def test_linear_map_exact(self, rng):
        # no truncation error for a linear map; a not-too-small step keeps
        # the subtraction rounding below 1e-10 as well
        a = rng.normal(size=(3, 4))

        def f(x):
            return a @ x

        x0 = rng.normal(size=4)
        j = jacobian_numeric(f, x0, rel_step=1e-4, abs_step=1e-4)
        assert np.abs(j - a).max() < 1e-10 * np.abs(a).max()

    def test_trig_map(self):
        def f(x):
            return np.array([math.sin(x[0]), math.cos(x[0])])

        j = jacobian_numeric(f, np.array([0.0]))
        np.testing.assert_allclose(j, [[1.0], [0.0]], atol=1e-9)

    def test_nonfinite_raises(self):
        def f(x):
            with np.errstate(divide="ignore"):
                return np.array([1.0 / x[0]])

        with pytest.raises(OracleDomainError):
            jacobian_numeric(f, np.array([0.0]))
