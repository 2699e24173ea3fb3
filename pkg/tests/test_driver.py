"""Charge algebra, driver synthesis, and coordinated-rotation symmetry."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tkamhhg.config import RunConfig
from tkamhhg.driver import (DriverComponentSpec, DriverSpec, EnvelopeSpec,
                            PerturbationSpec, apply_coordinated_rotation,
                            coordination_parameter, donut_radial,
                            evaluate_driver, expected_harmonic_oam, lg_radial,
                            symmetry_constants, symmetry_residual, tkam_charge,
                            time_shift_residual)

from conftest import small_config

OMEGA = RunConfig().omega


# ---------------------------------------------------------------------------
# Exact charge algebra

class TestChargeAlgebra:
    def test_gamma_for_unit_charges(self):
        assert coordination_parameter(1, 1) == Fraction(-1, 3)

    def test_tau_times_omega(self):
        coord = symmetry_constants(1, 1, OMEGA)
        assert coord.tau_times_omega == Fraction(2, 3)
        assert coord.tau == pytest.approx(2.0 / (3.0 * OMEGA), rel=1e-15)

    def test_fundamental_charge(self):
        coord = symmetry_constants(1, 1, OMEGA)
        assert coord.j1 == Fraction(2, 3)

    def test_harmonic_charges(self):
        coord = symmetry_constants(1, 1, OMEGA)
        assert tkam_charge(13, coord) == Fraction(26, 3)
        assert tkam_charge(14, coord) == Fraction(28, 3)

    def test_expected_oam_h13_h14(self):
        coord = symmetry_constants(1, 1, OMEGA)
        assert expected_harmonic_oam(13, coord) == (9, +1)
        assert expected_harmonic_oam(14, coord) == (9, -1)

    def test_oam_ladder_all_allowed(self):
        # l_q = (2q + s)/3 with s = +1 for q = 3n+1 and -1 for q = 3n-1
        coord = symmetry_constants(1, 1, OMEGA)
        for q in range(1, 40):
            if q % 3 == 0:
                continue
            oam, sam = expected_harmonic_oam(q, coord)
            assert sam == (+1 if q % 3 == 1 else -1)
            assert 3 * oam == 2 * q + sam

    def test_forbidden_harmonic_raises(self):
        coord = symmetry_constants(1, 1, OMEGA)
        with pytest.raises(ValueError):
            expected_harmonic_oam(15, coord)

    @given(l1=st.integers(-6, 6), l2=st.integers(-6, 6))
    def test_third_integer_lattice(self, l1, l2):
        coord = symmetry_constants(l1, l2, OMEGA)
        assert (3 * coord.gamma).denominator == 1
        assert (3 * coord.tau_times_omega).denominator == 1

    @given(l1=st.integers(-6, 6), l2=st.integers(-6, 6),
           q=st.integers(1, 40))
    def test_charge_conservation_identity(self, l1, l2, q):
        coord = symmetry_constants(l1, l2, OMEGA)
        assert tkam_charge(q, coord) == q * coord.j1


# ---------------------------------------------------------------------------
# Mode profiles and specs

class TestProfiles:
    def test_lg_peak_normalized(self):
        r = np.linspace(0.0, 120.0, 20000)
        for l in (1, 2, 3):
            assert lg_radial(l, 30.0, r).max() == pytest.approx(1.0, abs=1e-6)

    def test_lg_vortex_null(self):
        assert lg_radial(1, 30.0, 0.0) == 0.0

    def test_donut_profile_shape(self):
        sigma = 10.0
        r = np.array([0.0, sigma, 2 * sigma])
        vals = donut_radial(sigma, r)
        assert vals[0] == 0.0
        assert vals[1] == pytest.approx(sigma ** 2 * np.exp(-1.0))

    def test_envelope_trapezoid(self):
        env = EnvelopeSpec(2.0, 4.0, 2.0)
        assert env(np.array([-1.0]))[0] == 0.0
        assert env(np.array([1.0]))[0] == pytest.approx(0.5)
        assert env(np.array([4.0]))[0] == 1.0
        assert env(np.array([7.0]))[0] == pytest.approx(0.5)
        assert env(np.array([9.0]))[0] == 0.0

    def test_component_handedness_enforced(self):
        with pytest.raises(ValueError):
            DriverComponentSpec(1, 1, "left", 1.0, 30.0)
        with pytest.raises(ValueError):
            DriverComponentSpec(2, 1, "right", 1.0, 30.0)

    def test_perturbation_validation(self):
        with pytest.raises(ValueError):
            PerturbationSpec(fraction=1.5)
        with pytest.raises(ValueError):
            PerturbationSpec(fraction=0.1, relative_phase="sideways")


# ---------------------------------------------------------------------------
# Field synthesis

class TestEvaluateDriver:
    def test_vortex_null_near_axis(self, small_field):
        # innermost sampled radius carries ~r/waist of the peak amplitude
        inner = np.abs(small_field.data[:, 0]).max()
        peak = np.abs(small_field.data).max()
        assert inner < 0.1 * peak

    def test_deterministic(self):
        cfg = small_config()
        a = evaluate_driver(cfg.driver_spec(), cfg.transverse_grid(),
                            cfg.time_grid())
        b = evaluate_driver(cfg.driver_spec(), cfg.transverse_grid(),
                            cfg.time_grid())
        assert np.array_equal(a.data, b.data)

    def test_zero_intensity_zero_field(self):
        cfg = small_config(driver__total_intensity_w_cm2=0.0)
        f = evaluate_driver(cfg.driver_spec(), cfg.transverse_grid(),
                            cfg.time_grid())
        assert np.all(f.data == 0.0)

    def test_perturbation_power_bookkeeping(self):
        cfg = small_config(perturbation__fraction=0.10)
        base_cfg = small_config()
        tr, tg = cfg.transverse_grid(), cfg.time_grid()
        pert = evaluate_driver(cfg.driver_spec(), tr, tg)
        base = evaluate_driver(base_cfg.driver_spec(), tr, tg)
        for c in (0, 1):
            ratio = pert.component_power(c) / base.component_power(c)
            assert abs(ratio - 1.0) < 5e-3

    def test_out_of_phase_flips_second_harmonic_donut(self):
        cfg_in = small_config(perturbation__fraction=0.10)
        cfg_out = small_config(perturbation__fraction=0.10,
                               perturbation__relative_phase="out_of_phase")
        tr, tg = cfg_in.transverse_grid(), cfg_in.time_grid()
        f_in = evaluate_driver(cfg_in.driver_spec(), tr, tg)
        f_out = evaluate_driver(cfg_out.driver_spec(), tr, tg)
        assert np.allclose(f_in.data[0], f_out.data[0])
        assert not np.allclose(f_in.data[1], f_out.data[1])
        # the sum of the two 2w variants is twice the unperturbed main mode
        both = f_in.data[1] + f_out.data[1]
        base = evaluate_driver(small_config().driver_spec(), tr, tg)
        scale = np.sqrt(1.0 - 0.10)
        assert np.allclose(both, 2.0 * scale * base.data[1], atol=1e-12)


# ---------------------------------------------------------------------------
# Coordinated-rotation symmetry

def _commensurate_alphas(field):
    """Azimuthal shifts whose CR delay is an integer number of time steps."""
    coord = symmetry_constants(1, 1, field.omega)
    out = []
    for k in range(1, field.transverse.n_theta):
        alpha = k * field.transverse.dtheta
        ratio = coord.tau * alpha / field.time.dt
        if abs(ratio - round(ratio)) < 1e-9 and \
                coord.tau * alpha < 0.25 * field.time.span:
            out.append(alpha)
        if len(out) >= 6:
            break
    return coord, out


class TestSymmetry:
    def test_unperturbed_invariance(self, small_field):
        coord, alphas = _commensurate_alphas(small_field)
        assert alphas, "no grid-commensurate rotations found"
        for alpha in alphas:
            assert symmetry_residual(small_field, coord, alpha) < 1e-10

    def test_perturbed_breaks_invariance(self):
        cfg = small_config(perturbation__fraction=0.10)
        f = evaluate_driver(cfg.driver_spec(), cfg.transverse_grid(),
                            cfg.time_grid())
        coord, alphas = _commensurate_alphas(f)
        assert symmetry_residual(f, coord, alphas[0]) > 1e-2

    def test_zero_field_residual_zero(self):
        cfg = small_config(driver__total_intensity_w_cm2=0.0)
        f = evaluate_driver(cfg.driver_spec(), cfg.transverse_grid(),
                            cfg.time_grid())
        coord, alphas = _commensurate_alphas(f)
        assert symmetry_residual(f, coord, alphas[0]) == 0.0

    def test_rotation_phases(self, small_field):
        alpha = 3 * small_field.transverse.dtheta
        gamma = Fraction(-1, 3)
        rot = apply_coordinated_rotation(small_field, alpha, gamma)
        expected_plus = np.roll(small_field.data[0], 3, axis=1) \
            * np.exp(-1j * float(gamma) * alpha)
        assert np.allclose(rot.data[0], expected_plus)

    def test_incommensurate_alpha_rejected(self, small_field):
        with pytest.raises(ValueError):
            apply_coordinated_rotation(small_field, 0.1234, Fraction(-1, 3))

    def test_incommensurate_shift_rejected(self, small_field):
        with pytest.raises(ValueError):
            time_shift_residual(small_field, small_field,
                                0.4321 * small_field.time.dt)


class TestComponentInvariances:
    """The four separate spin/orbital time-shift equivalences."""

    def test_all_four_laws(self, small_field):
        from tkamhhg.pipeline import _component_invariance_residual
        cfg = small_config()
        residual = _component_invariance_residual(small_field,
                                                  cfg.driver_spec())
        assert residual < 1e-10
