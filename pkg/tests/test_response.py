"""Surrogate and SFA emission models."""

import numpy as np
import pytest

from tkamhhg.driver import (DriverComponentSpec, DriverSpec, EnvelopeSpec,
                            apply_coordinated_rotation, evaluate_driver,
                            symmetry_constants)
from tkamhhg.grids import TimeGrid, TransverseGrid
from tkamhhg.response import (SfaParams, SurrogateModelParams,
                              _band_coefficients, helicity_of_line,
                              sfa_emission, spectral_band, surrogate_emission)

from conftest import small_config

OMEGA = small_config().omega


def _flat_envelope_field(n_r=24, n_theta=64, cycles=24):
    """CR-invariant driver under a strictly constant envelope."""
    dt = (np.pi / OMEGA) / 64
    n_t = cycles * 128                      # whole fundamental cycles
    span = n_t * dt
    spec = DriverSpec(
        fundamental=DriverComponentSpec(1, 1, "right", 0.05, 30.0),
        second_harmonic=DriverComponentSpec(2, 1, "left", 0.05, 30.0),
        omega=OMEGA,
        envelope=EnvelopeSpec(0.0, 10.0 * span, 0.0))
    tr = TransverseGrid.regular(n_r, n_theta, 90.0)
    tg = TimeGrid(dt=dt, n_t=n_t, t0=0.0)
    return evaluate_driver(spec, tr, tg), spec


class TestParams:
    def test_order_below_one_rejected(self):
        with pytest.raises(ValueError):
            SurrogateModelParams(effective_order=0.5)

    def test_alpha_default_and_override(self):
        p = SurrogateModelParams(intrinsic_phase_slope=2.0,
                                 intrinsic_phase_coeff={13: 7.0})
        assert p.alpha(11) == 22.0
        assert p.alpha(13) == 7.0

    def test_nonfinite_alpha_rejected(self):
        with pytest.raises(ValueError):
            SurrogateModelParams(intrinsic_phase_coeff={9: np.inf})

    def test_sfa_validation(self):
        with pytest.raises(ValueError):
            SfaParams(ionization_potential_ev=-1.0)
        with pytest.raises(ValueError):
            SfaParams(trajectories="medium")


class TestSurrogateLinear:
    def test_p1_reproduces_driver_spectrum(self):
        """p=1 and no intrinsic phase: the emission is the driver itself."""
        field, _ = _flat_envelope_field()
        params = SurrogateModelParams(effective_order=1.0, q_min=1, q_max=3)
        em = surrogate_emission(field, params)
        ks, _ = spectral_band(field.time, field.omega, 1, 3)
        fx, fy = field.real_components()
        cx = _band_coefficients(fx, field.time, ks)
        cy = _band_coefficients(fy, field.time, ks)
        expected_plus = (cx - 1j * cy) / np.sqrt(2.0)
        expected_minus = (cx + 1j * cy) / np.sqrt(2.0)
        assert np.allclose(em.data[0], expected_plus, atol=1e-14)
        assert np.allclose(em.data[1], expected_minus, atol=1e-14)

    def test_global_delay_linearity(self):
        """Delaying the driver by dt multiplies bin k by exp(i W_k dt)."""
        field, _ = _flat_envelope_field(n_r=8, cycles=12)
        params = SurrogateModelParams(effective_order=8.0, q_min=7, q_max=9)
        em0 = surrogate_emission(field, params)
        strong = np.abs(em0.data) > 1e-6 * np.abs(em0.data).max()
        for delta in (0.15, 0.4, 1.1):
            delayed = type(field)(
                data=np.stack([
                    field.data[0] * np.exp(1j * OMEGA * delta),
                    field.data[1] * np.exp(2j * OMEGA * delta)]),
                transverse=field.transverse, time=field.time,
                omega=field.omega, envelope=field.envelope)
            em1 = surrogate_emission(delayed, params)
            expected = em0.data * np.exp(1j * em0.omegas * delta)
            err = np.abs(em1.data[strong] - expected[strong]) \
                / np.abs(expected[strong])
            assert err.max() < 1e-8


class TestEquivariance:
    def test_cr_equivariance_of_emission(self):
        """Emission inherits the coordinated-rotation symmetry: rotating the
        driver rotates the emission and delays every bin by tau*alpha."""
        field, spec = _flat_envelope_field(n_r=12)
        coord = spec.coordination
        params = SurrogateModelParams(effective_order=10.0, q_min=7, q_max=11)
        em0 = surrogate_emission(field, params)

        steps = 6            # alpha commensurate with the azimuthal grid
        alpha = steps * field.transverse.dtheta
        rotated = apply_coordinated_rotation(field, alpha, coord.gamma)
        em1 = surrogate_emission(rotated, params)

        # route 1: CR-invariance means the rotated driver is the original
        # advanced by tau*alpha, so every bin gains e^{-i W tau alpha}
        shifted = em0.data * np.exp(-1j * em0.omegas * coord.tau * alpha)
        # route 2: locality means the emission rotates like the field
        covariant = np.roll(em0.data, steps, axis=2).astype(complex)
        covariant[0] *= np.exp(-1j * float(coord.gamma) * alpha)
        covariant[1] *= np.exp(+1j * float(coord.gamma) * alpha)

        for expected in (shifted, covariant):
            strong = np.abs(expected) > 1e-6 * np.abs(expected).max()
            err = np.abs(em1.data[strong] - expected[strong]) \
                / np.abs(expected[strong])
            assert err.max() < 1e-8


class TestSelectionRules:
    @pytest.fixture(scope="class")
    def emission(self):
        cfg = small_config()
        field = evaluate_driver(cfg.driver_spec(), cfg.transverse_grid(),
                                cfg.time_grid())
        return surrogate_emission(field, SurrogateModelParams())

    def test_h13_right_circular(self, emission):
        sam, purity = helicity_of_line(emission, 13)
        assert sam == +1 and purity > 0.9

    def test_h14_left_circular(self, emission):
        sam, purity = helicity_of_line(emission, 14)
        assert sam == -1 and purity > 0.9

    def test_h15_forbidden(self, emission):
        p15 = emission.harmonic_power(15)
        p_neighbors = 0.5 * (emission.harmonic_power(13)
                             + emission.harmonic_power(14))
        assert p15 < 1e-2 * p_neighbors

    def test_single_color_circular_no_harmonics(self, emission):
        cfg = small_config(driver__intensity_split=1.0)
        field = evaluate_driver(cfg.driver_spec(), cfg.transverse_grid(),
                                cfg.time_grid())
        em = surrogate_emission(field, SurrogateModelParams())
        # a single circular color cannot up-convert: only envelope leakage
        total = sum(em.harmonic_power(q) for q in range(7, 23))
        reference = sum(emission.harmonic_power(q) for q in range(7, 23))
        assert total < 1e-9 * reference

    def test_intrinsic_phase_preserves_power(self):
        cfg = small_config()
        field = evaluate_driver(cfg.driver_spec(), cfg.transverse_grid(),
                                cfg.time_grid())
        em0 = surrogate_emission(field, SurrogateModelParams())
        em1 = surrogate_emission(
            field, SurrogateModelParams(intrinsic_phase_slope=30.0))
        for q in (13, 14):
            assert em1.harmonic_power(q) == pytest.approx(
                em0.harmonic_power(q), rel=1e-12)

    def test_intrinsic_phase_applied(self):
        cfg = small_config()
        field = evaluate_driver(cfg.driver_spec(), cfg.transverse_grid(),
                                cfg.time_grid())
        em0 = surrogate_emission(field, SurrogateModelParams())
        em1 = surrogate_emission(
            field, SurrogateModelParams(intrinsic_phase_slope=30.0))
        assert not np.allclose(em0.data, em1.data)


class TestSfa:
    """Coarse-grid checks: the SFA agrees with the surrogate on line
    positions and helicities, not amplitudes."""

    @pytest.fixture(scope="class")
    def sfa_em(self):
        cfg = small_config()
        cfg.grids.n_r = 6
        cfg.grids.n_theta = 16
        field = evaluate_driver(cfg.driver_spec(), cfg.transverse_grid(),
                                cfg.time_grid())
        return sfa_emission(field, SfaParams())

    def test_no_excluded_points(self, sfa_em):
        assert sfa_em.excluded_points == 0

    def test_forbidden_lines_suppressed(self, sfa_em):
        for q in (9, 12, 15):
            neighbors = [n for n in (q - 2, q - 1, q + 1, q + 2)
                         if 7 <= n <= 22 and n % 3]
            ref = np.mean([sfa_em.harmonic_power(n) for n in neighbors])
            assert sfa_em.harmonic_power(q) < 0.1 * ref

    def test_helicity_signs_alternate(self, sfa_em):
        for q in (10, 11, 13, 14):
            sam, purity = helicity_of_line(sfa_em, q)
            assert sam == (+1 if q % 3 == 1 else -1)
            assert purity > 0.6
