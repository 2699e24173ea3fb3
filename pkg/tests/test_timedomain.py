"""Attosecond-train reconstruction and the windowed quadrupole moment."""

import numpy as np
import pytest

from tkamhhg.grids import DivergenceGrid
from tkamhhg.farfield import FarFieldGrid
from tkamhhg.timedomain import (power_annulus, reconstruct_apt, synthesize_xy,
                                t22_map, t22_windowed)

OMEGA = 2.354


def _gauss_pulse(t, t0=6.0, width=0.5, carrier=8.0):
    return np.exp(-(t - t0) ** 2 / width) * np.cos(carrier * t)


class TestT22Windowed:
    T = np.arange(0.0, 12.0, 0.01)

    def test_x_linear_phase_zero(self):
        ex = _gauss_pulse(self.T)
        out = t22_windowed(ex, np.zeros_like(ex), 0.01, 0.3)
        i = int(np.argmax(np.abs(out)))
        assert abs(np.angle(out[i])) < 1e-6

    def test_y_linear_phase_pi(self):
        ey = _gauss_pulse(self.T)
        out = t22_windowed(np.zeros_like(ey), ey, 0.01, 0.3)
        i = int(np.argmax(np.abs(out)))
        assert abs(abs(np.angle(out[i])) - np.pi) < 1e-6

    def test_rotation_covariance(self):
        ex = _gauss_pulse(self.T)
        base = t22_windowed(ex, np.zeros_like(ex), 0.01, 0.3)
        i = int(np.argmax(np.abs(base)))
        for chi in (0.3, 0.7, 1.2):
            rot = t22_windowed(ex * np.cos(chi), ex * np.sin(chi), 0.01, 0.3)
            delta = np.angle(rot[i] / base[i])
            assert abs(delta - 2 * chi) < 1e-6

    def test_long_window_circular_suppressed(self):
        t = np.arange(0.0, 40.0, 0.01)
        ex, ey = np.cos(8.0 * t), np.sin(8.0 * t)
        circ = t22_windowed(ex, ey, 0.01, 4.0)
        lin = t22_windowed(ex, np.zeros_like(ex), 0.01, 4.0)
        mid = slice(len(t) // 4, 3 * len(t) // 4)
        assert np.abs(circ[mid]).max() < 1e-3 * np.abs(lin[mid]).max()

    def test_under_resolved_sigma_rejected(self):
        ex = _gauss_pulse(self.T)
        with pytest.raises(ValueError):
            t22_windowed(ex, np.zeros_like(ex), 0.01, 0.05)

    def test_batched_matches_single(self):
        ex = np.stack([_gauss_pulse(self.T), _gauss_pulse(self.T, t0=4.0)])
        ey = np.zeros_like(ex)
        batched = t22_windowed(ex, ey, 0.01, 0.3)
        for i in range(2):
            single = t22_windowed(ex[i], ey[i], 0.01, 0.3)
            assert np.allclose(batched[i], single)


def _synthetic_far(n_beta=6, n_theta=32, qs=(10, 11, 13, 14), gamma=-1.0 / 3.0):
    """Far field with the bicircular ladder structure: harmonic q carries
    OAM m_q = (2q + s_q)/3 in its dominant circular component."""
    div = DivergenceGrid.regular(n_beta, 1e-3)
    omegas = np.array([q * OMEGA for q in qs], dtype=float)
    thetas = np.arange(n_theta) * (2 * np.pi / n_theta)
    data = np.zeros((2, n_beta, n_theta, len(qs)), dtype=complex)
    radial = np.exp(-((div.betas - div.betas.mean()) / 3e-4) ** 2)
    for i, q in enumerate(qs):
        s = +1 if q % 3 == 1 else -1
        comp = 0 if s == +1 else 1
        m = (2 * q + s) // 3
        data[comp, :, :, i] = radial[:, None] * np.exp(1j * m * thetas)
    return FarFieldGrid(data=data, omegas=omegas, divergence=div,
                        n_theta=n_theta, omega_fundamental=OMEGA,
                        q_min=min(qs), q_max=max(qs))


class TestReconstruction:
    def test_beat_period_two_harmonics(self):
        """Co-rotating harmonics q and q+3 beat with period 2pi/(3w)."""
        far = _synthetic_far(qs=(10, 13))
        dt = 0.005
        times = np.arange(0.0, 4 * 2 * np.pi / OMEGA, dt)
        apt = reconstruct_apt(far, 10, times, beta_indices=[3])
        envelope = apt.ex[0, 0] ** 2 + apt.ey[0, 0] ** 2
        spec = np.abs(np.fft.rfft(envelope - envelope.mean()))
        freqs = np.fft.rfftfreq(len(times), d=dt) * 2 * np.pi
        peak = freqs[int(np.argmax(spec))]
        assert peak == pytest.approx(3 * OMEGA, rel=0.02)

    def test_filter_removes_low_orders(self):
        far = _synthetic_far(qs=(10, 13))
        times = np.arange(0.0, 8.0, 0.005)
        apt = reconstruct_apt(far, 12, times, beta_indices=[3])
        # only H13 remains: constant intensity circular-ish field, no beat
        envelope = apt.ex[0, 0] ** 2 + apt.ey[0, 0] ** 2
        assert envelope.std() < 1e-6 * envelope.mean()

    def test_empty_filter_rejected(self):
        far = _synthetic_far(qs=(10, 11))
        with pytest.raises(ValueError):
            reconstruct_apt(far, 15, np.arange(0.0, 1.0, 0.01))

    def test_synthesize_matches_direct_sum(self, rng):
        omegas = np.array([3.0, 4.5])
        cp = rng.normal(size=(2,)) + 1j * rng.normal(size=(2,))
        cm = rng.normal(size=(2,)) + 1j * rng.normal(size=(2,))
        times = np.linspace(0.0, 5.0, 101)
        ex, ey = synthesize_xy(cp, cm, omegas, times)
        cx = (cp + cm) / np.sqrt(2)
        cy = 1j * (cp - cm) / np.sqrt(2)
        ex_ref = sum(2 * np.real(cx[k] * np.exp(-1j * omegas[k] * times))
                     for k in range(2))
        ey_ref = sum(2 * np.real(cy[k] * np.exp(-1j * omegas[k] * times))
                     for k in range(2))
        assert np.allclose(ex, ex_ref) and np.allclose(ey, ey_ref)


class TestAnnulus:
    def test_contains_fraction(self):
        far = _synthetic_far()
        lo, hi = power_annulus(far, 10, fraction=0.8)
        from tkamhhg.timedomain import filtered_radial_power
        p = filtered_radial_power(far, 10)
        assert p[lo:hi].sum() >= 0.8 * p.sum()
        assert 0 <= lo < hi <= far.divergence.n_beta


class TestCrCovariance:
    def test_t22_map_covariance(self):
        """Rotating the far field and delaying it by tau*alpha shifts the
        T22 map by (alpha, tau*alpha) and multiplies it by e^{-2i gamma a}."""
        gamma = -1.0 / 3.0
        tau = 2.0 / (3.0 * OMEGA)
        far = _synthetic_far()
        n_theta = far.n_theta

        # choose alpha and the time grid so both shifts are exact on-grid
        steps = 8
        alpha = steps * 2 * np.pi / n_theta
        delay = tau * alpha                      # time advance of the map
        dt = delay / 16.0
        times = np.arange(0.0, 6 * 2 * np.pi / OMEGA, dt)
        sigma = 10.0 * dt

        base = t22_map(far, 10, sigma, times, annulus_fraction=0.9)

        rot_data = np.roll(far.data, steps, axis=2).astype(complex)
        rot_data[0] *= np.exp(-1j * gamma * alpha)
        rot_data[1] *= np.exp(+1j * gamma * alpha)
        # CR equivalence: the rotated field equals the original advanced in
        # time by tau*alpha, i.e. bins gain e^{-i W tau alpha}
        rot_data *= np.exp(-1j * far.omegas * delay)
        rot = FarFieldGrid(data=rot_data, omegas=far.omegas,
                           divergence=far.divergence, n_theta=n_theta,
                           omega_fundamental=OMEGA, q_min=far.q_min,
                           q_max=far.q_max)
        shifted = t22_map(rot, 10, sigma, times, annulus_fraction=0.9)

        # polarization rotation by gamma*alpha doubles in the quadrupole
        expected = np.roll(base.values, steps, axis=0) \
            * np.exp(+2j * gamma * alpha)
        expected = np.roll(expected, -16, axis=1)     # advance by delay
        # compare away from the window-truncated time edges
        valid = slice(80, len(times) - 80)
        scale = np.abs(expected[:, valid]).max()
        err = np.abs(shifted.values[:, valid] - expected[:, valid]) / scale
        assert err.max() < 1e-8


class TestEndToEnd:
    def test_t22_tracks_intensity(self, small_run):
        """|T22| follows the windowed intensity for linear pulse trains."""
        t22 = small_run.t22
        cfg = small_run.config
        lo, hi = t22.annulus
        sigma = cfg.t22_sigma_fs()
        dt = t22.dt
        half = int(np.ceil(4 * sigma / dt))
        kernel = np.exp(-(np.arange(-half, half + 1) * dt) ** 2
                        / (2 * sigma ** 2))
        acc = np.zeros(t22.values.shape, dtype=float)
        for ib in range(lo, hi):
            apt = reconstruct_apt(small_run.far, cfg.analysis.filter_q_min,
                                  t22.times, beta_indices=[ib])
            intensity = apt.ex[0] ** 2 + apt.ey[0] ** 2
            w = small_run.far.divergence.weights[ib]
            for it in range(intensity.shape[0]):
                acc[it] += w * np.convolve(intensity[it], kernel,
                                           mode="same")
        a = np.abs(t22.values).ravel()
        b = acc.ravel()
        corr = np.corrcoef(a, b)[0, 1]
        assert corr >= 0.9
