"""Bicircular vortex driving field: synthesis, charges, and the
coordinated-rotation symmetry machinery.

The driver is a superposition of a right-circular fundamental at w carrying
OAM l1 and a left-circular second harmonic at 2w carrying OAM l2.  Fields are
stored as the complex amplitudes (E+, E-) in the circular basis
e_pm = (x_hat +- i y_hat)/sqrt(2); the physical field is Re[E+ e_+ + E- e_-].

A coordinated rotation by alpha rotates the transverse pattern by alpha and
the polarization by gamma*alpha; for these beams it is equivalent to a time
delay tau*alpha, with

    gamma = (l2 - 2 l1)/3,    tau = (l1 + l2)/(3 w).

All charge arithmetic is done with exact rationals (fractions.Fraction) so
that third-integer lattices never suffer floating-point drift.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .grids import TimeGrid, TransverseGrid

RIGHT = "right"   # uses e_+ = (x + iy)/sqrt(2), SAM +1
LEFT = "left"     # uses e_- = (x - iy)/sqrt(2), SAM -1

IN_PHASE = "in_phase"
OUT_OF_PHASE = "out_of_phase"


# ---------------------------------------------------------------------------
# Specs

@dataclass(frozen=True)
class DriverComponentSpec:
    """One circular component of the two-color driver.

    peak_amplitude is the field amplitude in atomic units at the brightest
    point of the mode; waist in micrometers.
    """

    carrier_multiple: int      # 1 or 2 (times the fundamental frequency)
    oam: int
    handedness: str            # RIGHT or LEFT
    peak_amplitude: float
    waist: float

    def __post_init__(self):
        if self.carrier_multiple not in (1, 2):
            raise ValueError("carrier_multiple must be 1 or 2")
        if self.handedness not in (RIGHT, LEFT):
            raise ValueError("handedness must be 'right' or 'left'")
        if self.waist <= 0:
            raise ValueError("waist must be positive")
        if self.peak_amplitude < 0:
            raise ValueError("peak_amplitude must be nonnegative")
        # counter-rotating convention: w right-handed, 2w left-handed
        expected = RIGHT if self.carrier_multiple == 1 else LEFT
        if self.handedness != expected:
            raise ValueError(
                f"the {self.carrier_multiple}w component must be "
                f"{expected}-handed for a counter-rotating bicircular driver")

    @property
    def sam(self) -> int:
        return +1 if self.handedness == RIGHT else -1


@dataclass(frozen=True)
class EnvelopeSpec:
    """Trapezoidal pulse envelope: linear ramps around a flat top, in fs."""

    ramp_up: float
    flat: float
    ramp_down: float

    def __post_init__(self):
        if min(self.ramp_up, self.flat, self.ramp_down) < 0:
            raise ValueError("envelope segments must be nonnegative")

    @property
    def duration(self) -> float:
        return self.ramp_up + self.flat + self.ramp_down

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        up = np.divide(t, self.ramp_up, out=np.ones_like(t),
                       where=self.ramp_up > 0)
        t_down = self.duration - t
        down = np.divide(t_down, self.ramp_down, out=np.ones_like(t),
                         where=self.ramp_down > 0)
        return np.clip(np.minimum(up, down), 0.0, 1.0)


@dataclass(frozen=True)
class PerturbationSpec:
    """Donut-shaped l=0 admixture diverting a fraction of each component's
    intensity; the 2w donut is flipped in sign for the out-of-phase variant."""

    fraction: float
    relative_phase: str = IN_PHASE
    donut_width: float = 0.0   # sigma_p in um; 0 means waist/sqrt(2)

    def __post_init__(self):
        if not (0.0 <= self.fraction < 1.0):
            raise ValueError("fraction must be in [0, 1)")
        if self.relative_phase not in (IN_PHASE, OUT_OF_PHASE):
            raise ValueError("relative_phase must be in_phase or out_of_phase")
        if self.donut_width < 0:
            raise ValueError("donut_width must be nonnegative")


@dataclass(frozen=True)
class DriverSpec:
    fundamental: DriverComponentSpec
    second_harmonic: DriverComponentSpec
    omega: float                       # rad/fs, fundamental
    envelope: EnvelopeSpec
    perturbation: Optional[PerturbationSpec] = None

    def __post_init__(self):
        if self.fundamental.carrier_multiple != 1:
            raise ValueError("fundamental must have carrier_multiple 1")
        if self.second_harmonic.carrier_multiple != 2:
            raise ValueError("second harmonic must have carrier_multiple 2")
        if self.omega <= 0:
            raise ValueError("omega must be positive")

    @property
    def coordination(self) -> "CoordinationParameters":
        return symmetry_constants(self.fundamental.oam,
                                  self.second_harmonic.oam, self.omega)


# ---------------------------------------------------------------------------
# Charge algebra

@dataclass(frozen=True)
class CoordinationParameters:
    """Exact symmetry constants of a CR-invariant bicircular driver.

    tau is carried as the exact rational tau*w, so tau itself is
    tau_times_omega / omega with no floating thirds.
    """

    gamma: Fraction
    tau_times_omega: Fraction
    j1: Fraction
    omega: float

    @property
    def tau(self) -> float:
        """Time-delay constant in fs."""
        return float(self.tau_times_omega) / self.omega


def coordination_parameter(l1: int, l2: int) -> Fraction:
    """Mixing ratio gamma of the coordinated rotation, (l2 - 2 l1)/3."""
    return Fraction(l2 - 2 * l1, 3)


def symmetry_constants(l1: int, l2: int, omega: float) -> CoordinationParameters:
    """All CR constants of the (l1, l2) driver at fundamental frequency omega."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    j1 = Fraction(l1 + l2, 3)
    return CoordinationParameters(gamma=coordination_parameter(l1, l2),
                                  tau_times_omega=j1, j1=j1, omega=omega)


def tkam_charge(n: int, params: CoordinationParameters) -> Fraction:
    """Torus-knot angular momentum carried at n times the fundamental."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return n * params.j1


def expected_harmonic_oam(q: int, params: CoordinationParameters):
    """(OAM, SAM) of the allowed harmonic q.

    SAM alternates with the bicircular selection rule: +1 for q = 3n+1,
    -1 for q = 3n-1; q = 3n is forbidden.  The OAM follows from the TKAM
    charge, l_q = j^(q) - gamma * S_q, and must land on an integer.
    """
    residue = q % 3
    if residue == 0:
        raise ValueError(f"harmonic {q} is forbidden (multiple of 3)")
    sam = +1 if residue == 1 else -1
    oam = tkam_charge(q, params) - params.gamma * sam
    if oam.denominator != 1:
        raise AssertionError(
            f"harmonic OAM {oam} is not an integer for integer-OAM drivers")
    return int(oam), sam


# ---------------------------------------------------------------------------
# Mode profiles

def lg_radial(l: int, waist: float, r):
    """Laguerre-Gauss p=0 radial amplitude at focus, normalized to peak 1."""
    r = np.asarray(r, dtype=float)
    x = np.sqrt(2.0) * r / waist
    profile = x ** abs(l) * np.exp(-(r / waist) ** 2)
    if l != 0:
        peak = abs(l) ** (abs(l) / 2.0) * np.exp(-abs(l) / 2.0)
        profile = profile / peak
    return profile


def donut_radial(sigma: float, r):
    """Perturbation donut amplitude r^2 exp(-r^2/sigma^2), unnormalized."""
    r = np.asarray(r, dtype=float)
    return r ** 2 * np.exp(-(r / sigma) ** 2)


# ---------------------------------------------------------------------------
# Field grid

@dataclass(frozen=True)
class FieldGrid:
    """Complex circular-basis field samples.

    data[0] is E+ and data[1] is E-, each of shape (n_r, n_theta, n_t).
    envelope holds the shared pulse envelope per time sample so analysis
    steps can normalize it out when checking carrier symmetries.
    """

    data: np.ndarray
    transverse: TransverseGrid
    time: TimeGrid
    omega: float
    envelope: Optional[np.ndarray] = None

    def __post_init__(self):
        expected = (2, self.transverse.n_r, self.transverse.n_theta,
                    self.time.n_t)
        if self.data.shape != expected:
            raise ValueError(f"data shape {self.data.shape} != {expected}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("field contains non-finite values")

    def real_components(self):
        """Physical (Fx, Fy) as real arrays."""
        plus, minus = self.data[0], self.data[1]
        fx = (plus + minus).real / np.sqrt(2.0)
        fy = -(plus - minus).imag / np.sqrt(2.0)
        return fx, fy

    def cycle_averaged_intensity(self):
        """Peak cycle-averaged intensity per transverse point, a.u.

        The circular amplitudes are slowly varying under the envelope, so the
        cycle average is (|E+|^2 + |E-|^2)/2 evaluated at the envelope top.
        """
        per_t = 0.5 * (np.abs(self.data[0]) ** 2 + np.abs(self.data[1]) ** 2)
        return per_t.max(axis=-1)

    def component_power(self, component: int) -> float:
        """Cycle-averaged transverse power of one circular component at the
        envelope top (quadrature over the transverse plane)."""
        amp2 = (np.abs(self.data[component]) ** 2).max(axis=-1)
        w = self.transverse.weights[:, None]
        return float((0.5 * amp2 * w).sum() * self.transverse.dtheta)


def evaluate_driver(spec: DriverSpec, transverse: TransverseGrid,
                    time: TimeGrid) -> FieldGrid:
    """Sample the two-color driver (plus optional donut perturbation).

    The donut amplitude is normalized on the grid so it carries exactly the
    configured fraction of each component's cycle-averaged power, with the
    main mode scaled by sqrt(1 - fraction).
    """
    time.validate_against_carrier(spec.omega)
    t = time.times
    env = spec.envelope(t)
    w = spec.omega
    data = np.zeros((2, transverse.n_r, transverse.n_theta, time.n_t),
                    dtype=complex)

    pert = spec.perturbation
    weights = transverse.weights

    for idx, comp in ((0, spec.fundamental), (1, spec.second_harmonic)):
        radial = comp.peak_amplitude * lg_radial(comp.oam, comp.waist,
                                                 transverse.radii)
        if pert is not None and pert.fraction > 0:
            sigma = pert.donut_width if pert.donut_width > 0 \
                else comp.waist / np.sqrt(2.0)
            donut = donut_radial(sigma, transverse.radii)
            main_norm = float((radial ** 2 * weights).sum())
            donut_norm = float((donut ** 2 * weights).sum())
            donut = donut * np.sqrt(pert.fraction * main_norm / donut_norm)
            radial = radial * np.sqrt(1.0 - pert.fraction)
            sign = 1.0
            if idx == 1 and pert.relative_phase == OUT_OF_PHASE:
                sign = -1.0
        else:
            donut = None

        azimuthal = np.exp(1j * comp.oam * transverse.thetas)
        carrier = env * np.exp(-1j * comp.carrier_multiple * w * t)
        data[idx] = radial[:, None, None] * azimuthal[None, :, None] \
            * carrier[None, None, :]
        if donut is not None:
            data[idx] += sign * donut[:, None, None] * carrier[None, None, :]

    return FieldGrid(data=data, transverse=transverse, time=time,
                     omega=spec.omega, envelope=env)


# ---------------------------------------------------------------------------
# Coordinated rotations and symmetry residuals

def _theta_steps(alpha: float, transverse: TransverseGrid) -> int:
    steps = alpha / transverse.dtheta
    if abs(steps - round(steps)) > 1e-9 * max(1.0, abs(steps)):
        raise ValueError(
            f"alpha={alpha} is not a multiple of the azimuthal spacing")
    return int(round(steps))


def apply_coordinated_rotation(field: FieldGrid, alpha: float,
                               gamma) -> FieldGrid:
    """Rotate the pattern by alpha (exact index shift) and the polarization
    by gamma*alpha: E+ -> exp(-i gamma alpha) E+(theta - alpha), and the
    conjugate phase on E-."""
    steps = _theta_steps(alpha, field.transverse)
    g = float(gamma)
    rotated = np.roll(field.data, steps, axis=2)
    rotated[0] *= np.exp(-1j * g * alpha)
    rotated[1] *= np.exp(+1j * g * alpha)
    return FieldGrid(data=rotated, transverse=field.transverse,
                     time=field.time, omega=field.omega,
                     envelope=field.envelope)


def rotate_polarization(field: FieldGrid, angle: float,
                        component: Optional[int] = None) -> FieldGrid:
    """Rotate the polarization plane by `angle` (optionally of only one
    circular component): E+ picks up e^{-i angle}, E- picks up e^{+i angle}."""
    data = field.data.copy()
    if component in (None, 0):
        data[0] *= np.exp(-1j * angle)
    if component in (None, 1):
        data[1] *= np.exp(+1j * angle)
    return FieldGrid(data=data, transverse=field.transverse,
                     time=field.time, omega=field.omega,
                     envelope=field.envelope)


def rotate_spatial(field: FieldGrid, alpha: float,
                   component: Optional[int] = None) -> FieldGrid:
    """Pure pattern rotation by alpha (index shift, no polarization phase)."""
    steps = _theta_steps(alpha, field.transverse)
    data = field.data.copy()
    if component is None:
        data = np.roll(data, steps, axis=2)
    else:
        data[component] = np.roll(data[component], steps, axis=1)
    return FieldGrid(data=data, transverse=field.transverse,
                     time=field.time, omega=field.omega,
                     envelope=field.envelope)


def _normalized_carrier(field: FieldGrid) -> np.ndarray:
    """Divide the shared envelope out of the samples; columns where the
    envelope vanishes are zeroed and skipped by the residual overlap."""
    if field.envelope is None:
        return field.data
    env = field.envelope
    safe = np.where(env > 1e-12, env, 1.0)
    out = field.data / safe[None, None, None, :]
    out[..., env <= 1e-12] = 0.0
    return out


def time_shift_residual(transformed: FieldGrid, reference: FieldGrid,
                        shift: float, normalize_envelope: bool = True) -> float:
    """Relative L2 mismatch between `transformed` and `reference` delayed by
    `shift` (fs), compared on the overlapping valid time samples.

    The shift must be an integer number of time steps so the comparison is an
    exact index shift.  With normalize_envelope the trapezoidal envelope is
    divided out first; the carrier of a CR-invariant driver is then exactly
    delay-symmetric and the residual is at the floating-point floor.
    """
    dt = reference.time.dt
    steps = shift / dt
    if abs(steps - round(steps)) > 1e-6:
        raise ValueError(f"shift={shift} is not a multiple of dt={dt}")
    steps = int(round(steps))
    if normalize_envelope:
        a = _normalized_carrier(transformed)
        b = _normalized_carrier(reference)
    else:
        a, b = transformed.data, reference.data

    n_t = reference.time.n_t
    if abs(steps) >= n_t:
        raise ValueError("shift exceeds the time grid span")
    if steps >= 0:
        a_ov = a[..., :n_t - steps]
        b_ov = b[..., steps:]
    else:
        a_ov = a[..., -steps:]
        b_ov = b[..., :n_t + steps]

    if normalize_envelope and reference.envelope is not None:
        env = reference.envelope > 1e-12
        if steps >= 0:
            valid = env[:n_t - steps] & env[steps:]
        else:
            valid = env[-steps:] & env[:n_t + steps]
        a_ov = a_ov[..., valid]
        b_ov = b_ov[..., valid]

    norm = np.linalg.norm(b_ov)
    if norm == 0.0:
        return 0.0
    return float(np.linalg.norm(a_ov - b_ov) / norm)


def symmetry_residual(field: FieldGrid, params: CoordinationParameters,
                      alpha: float) -> float:
    """How far the field is from exact CR invariance at rotation angle alpha.

    Zero (to floating point) for unperturbed bicircular vortex drivers;
    of order the perturbation fraction when the invariance is broken.
    """
    shift = params.tau * alpha
    rotated = apply_coordinated_rotation(field, alpha, params.gamma)
    return time_shift_residual(rotated, field, shift)
