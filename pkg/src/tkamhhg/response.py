"""Single-point high-harmonic response of the gas slab.

Two models fill the same EmissionGrid contract:

* a fast surrogate nonlinearity D(t) = (|F|/A)^(p-1) F, where A(r,theta,t)
  is the local cycle-averaged field amplitude.  The gain is time-local and
  isotropic and therefore inherits every dynamical symmetry of the driver --
  the selection rules and charge conservation follow with no further physics.
  Normalizing by A makes the gain depend on the sub-cycle carrier shape only,
  so the finite pulse ramps scale the emission linearly instead of being
  amplified p-fold, which keeps symmetry-forbidden lines at the spectral
  leakage floor; for a flat envelope this is the plain |F|^(p-1) F
  nonlinearity up to a static spatial factor;
* an optional strong-field-approximation dipole integral (Lewenstein-type,
  stationary momentum, hydrogenic matrix elements) as a slower, higher
  fidelity stand-in.

Spectra are stored as Fourier-series coefficients on the full time span:
c_k = (dt/T) sum_n D(t_n) exp(+i W_k t_n), so the real signal is recovered as
2 Re sum_k c_k exp(-i W_k t).  Only the band covering the retained harmonic
windows |W - q w| < w/2, q in [q_min, q_max], is kept.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy import integrate

from .constants import ARGON_IP_EV, AU_TIME_FS, HARTREE_EV
from .driver import FieldGrid
from .grids import TimeGrid, TransverseGrid


@dataclass(frozen=True)
class SurrogateModelParams:
    """Instantaneous-nonlinearity emission model.

    effective_order is the exponent p of the amplitude-normalized gain
    (|F|/A)^(p-1); the plateau of usable harmonics extends to roughly q = p,
    so p should sit at or above the top of the analysis band.  The intrinsic
    phase of harmonic q is alpha_q times the local cycle-averaged driver
    intensity, with alpha_q = intrinsic_phase_slope * q unless overridden
    per order.
    """

    effective_order: float = 20.0
    intrinsic_phase_slope: float = 0.0     # rad per a.u. intensity per order
    intrinsic_phase_coeff: Dict[int, float] = field(default_factory=dict)
    q_min: int = 7
    q_max: int = 22

    def __post_init__(self):
        if self.effective_order < 1:
            raise ValueError("effective_order must be >= 1")
        if not (1 <= self.q_min <= self.q_max):
            raise ValueError("need 1 <= q_min <= q_max")
        for q, a in self.intrinsic_phase_coeff.items():
            if not np.isfinite(a):
                raise ValueError(f"alpha_{q} must be finite")

    def alpha(self, q: int) -> float:
        if q in self.intrinsic_phase_coeff:
            return self.intrinsic_phase_coeff[q]
        return self.intrinsic_phase_slope * q


@dataclass(frozen=True)
class SfaParams:
    """Strong-field-approximation dipole settings (atomic units inside)."""

    ionization_potential_ev: float = ARGON_IP_EV
    window_cycles: float = 1.5        # excursion window, fundamental cycles
    tolerance: float = 1e-6
    trajectories: str = "all"         # short | long | all
    regularization: float = 1e-4      # a.u., spreading-factor epsilon
    q_min: int = 7
    q_max: int = 22

    def __post_init__(self):
        if self.ionization_potential_ev <= 0:
            raise ValueError("ionization potential must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.trajectories not in ("short", "long", "all"):
            raise ValueError("trajectories must be short, long, or all")


@dataclass(frozen=True)
class EmissionGrid:
    """Windowed emission spectra per transverse point.

    data[s] with s=0 for the right (E+) and s=1 for the left (E-) circular
    component, shape (n_r, n_theta, n_k); omegas holds the spectral axis of
    the retained band (rad/fs).
    """

    data: np.ndarray
    omegas: np.ndarray
    transverse: TransverseGrid
    omega_fundamental: float
    q_min: int
    q_max: int
    excluded_points: int = 0

    def __post_init__(self):
        if not np.all(np.isfinite(self.data)):
            raise ValueError("emission contains non-finite values")

    @property
    def domega(self) -> float:
        return float(self.omegas[1] - self.omegas[0])

    def harmonic_mask(self, q: int) -> np.ndarray:
        """Spectral bins collecting |W - q w| < w/2."""
        w = self.omega_fundamental
        return np.abs(self.omegas - q * w) < 0.5 * w

    def harmonic_power(self, q: int, s: Optional[int] = None) -> float:
        """Slab-integrated power in the harmonic-q window; s = +1/-1 selects
        one circular component, None sums both.

        Uses the azimuthal-mean convention (d(theta)/2pi) shared with the
        far-field grid so Parseval comparisons need no extra factors.
        """
        mask = self.harmonic_mask(q)
        comps = {+1: [0], -1: [1], None: [0, 1]}[s]
        weights = self.transverse.weights[:, None]
        total = 0.0
        for c in comps:
            amp2 = np.abs(self.data[c][:, :, mask]) ** 2
            total += float((amp2.sum(axis=2) * weights).sum())
        return total / self.transverse.n_theta


def spectral_band(time: TimeGrid, omega: float, q_min: int, q_max: int):
    """Indices and frequencies of the retained positive-frequency band."""
    domega = 2.0 * np.pi / time.span
    k_lo = int(np.ceil((q_min - 0.5) * omega / domega))
    k_hi = int(np.floor((q_max + 0.5) * omega / domega))
    k_hi = min(k_hi, time.n_t // 2 - 1)
    if k_lo < 1 or k_lo > k_hi:
        raise ValueError("time grid cannot resolve the requested band")
    ks = np.arange(k_lo, k_hi + 1)
    return ks, ks * domega


def _band_coefficients(signal: np.ndarray, time: TimeGrid, ks: np.ndarray):
    """Fourier-series coefficients of a real signal on the retained band.

    signal has time on the last axis.  Uses the full FFT (the band is a
    contiguous slice of it) with the t0 reference phase applied.
    """
    spec = np.fft.ifft(signal, axis=-1)          # (1/N) sum f_n e^{+2pi i kn/N}
    coeff = spec[..., ks]
    domega = 2.0 * np.pi / time.span
    coeff = coeff * np.exp(1j * ks * domega * time.t0)
    return coeff


def surrogate_emission(fieldgrid: FieldGrid,
                       params: SurrogateModelParams) -> EmissionGrid:
    """Emission via the instantaneous vector nonlinearity (|F|/A)^(p-1) F.

    A is the local cycle-averaged field amplitude sqrt((|E+|^2 + |E-|^2)/2),
    so the gain follows the sub-cycle carrier shape and is bounded by
    2^(p-1).  The per-harmonic intrinsic phase exp(i alpha_q I(r,theta)) is
    applied to each window, with I the local cycle-averaged intensity of the
    full driver.  Radial chunks keep the memory footprint of the real-field
    temporaries low.
    """
    time = fieldgrid.time
    tr = fieldgrid.transverse
    omega = fieldgrid.omega
    ks, omegas = spectral_band(time, omega, params.q_min, params.q_max)
    p = params.effective_order

    out = np.empty((2, tr.n_r, tr.n_theta, len(ks)), dtype=complex)
    chunk = max(1, int(5e6 // (tr.n_theta * time.n_t)))
    for lo in range(0, tr.n_r, chunk):
        sl = slice(lo, min(lo + chunk, tr.n_r))
        plus = fieldgrid.data[0][sl]
        minus = fieldgrid.data[1][sl]
        fx = (plus + minus).real / np.sqrt(2.0)
        fy = -(plus - minus).imag / np.sqrt(2.0)
        if p == 1.0:
            dx, dy = fx, fy
        else:
            mag = np.sqrt(fx * fx + fy * fy)
            amp = np.sqrt(0.5 * (np.abs(plus) ** 2 + np.abs(minus) ** 2))
            # zero-field points (envelope padding, beam axis) emit nothing
            ratio = np.divide(mag, amp, out=np.zeros_like(mag),
                              where=amp > 0.0)
            gain = ratio ** (p - 1.0)
            if not np.all(np.isfinite(gain)):
                raise FloatingPointError(
                    "surrogate nonlinearity overflowed; reduce effective_order")
            dx = gain * fx
            dy = gain * fy
        cx = _band_coefficients(dx, time, ks)
        cy = _band_coefficients(dy, time, ks)
        out[0][sl] = (cx - 1j * cy) / np.sqrt(2.0)
        out[1][sl] = (cx + 1j * cy) / np.sqrt(2.0)

    emission = EmissionGrid(data=out, omegas=omegas, transverse=tr,
                            omega_fundamental=omega, q_min=params.q_min,
                            q_max=params.q_max)
    _apply_intrinsic_phase(emission, fieldgrid, params)
    return emission


def _apply_intrinsic_phase(emission: EmissionGrid, fieldgrid: FieldGrid,
                           params: SurrogateModelParams) -> None:
    if params.intrinsic_phase_slope == 0.0 and not params.intrinsic_phase_coeff:
        return
    intensity = fieldgrid.cycle_averaged_intensity()
    for q in range(params.q_min, params.q_max + 1):
        a = params.alpha(q)
        if a == 0.0:
            continue
        mask = emission.harmonic_mask(q)
        phase = np.exp(1j * a * intensity)
        emission.data[:, :, :, mask] *= phase[None, :, :, None]


# ---------------------------------------------------------------------------
# Strong-field-approximation dipole

def _hydrogenic_dipole(px, py, ip_au):
    """Matrix element d(p) ~ p / (p^2 + 2 Ip)^3 for a hydrogenic 1s state."""
    p2 = px * px + py * py
    denom = (p2 + 2.0 * ip_au) ** 3
    norm = 2.0 ** 3.5 * (2.0 * ip_au) ** 1.25 / np.pi
    return 1j * norm * px / denom, 1j * norm * py / denom


def sfa_dipole_point(ex, ey, times_fs, omega, params: SfaParams):
    """Two-component SFA dipole time series for one transverse point.

    ex, ey are the real driver components in a.u. on the fs time grid.
    Integrates over ionization times within the configured excursion window
    with the stationary-momentum action; returns (dx, dy) real arrays.
    """
    t = np.asarray(times_fs) / AU_TIME_FS
    dt = t[1] - t[0]
    ip = params.ionization_potential_ev / HARTREE_EV
    n_t = len(t)

    # vector potential and its first two moments, cumulative over the grid
    ax = -integrate.cumulative_trapezoid(ex, t, initial=0.0)
    ay = -integrate.cumulative_trapezoid(ey, t, initial=0.0)
    iax = integrate.cumulative_trapezoid(ax, t, initial=0.0)
    iay = integrate.cumulative_trapezoid(ay, t, initial=0.0)
    ia2 = integrate.cumulative_trapezoid(ax * ax + ay * ay, t, initial=0.0)

    period_au = 2.0 * np.pi / (omega * AU_TIME_FS)
    n_tau = int(round(params.window_cycles * period_au / dt))
    n_tau = min(n_tau, n_t - 1)
    taus = np.arange(1, n_tau + 1)

    dx = np.zeros(n_t)
    dy = np.zeros(n_t)
    eps = params.regularization
    for m in taus:
        tau = m * dt
        sl_t = slice(m, n_t)       # recollision times
        sl_b = slice(0, n_t - m)   # birth times
        dax = iax[sl_t] - iax[sl_b]
        day = iay[sl_t] - iay[sl_b]
        psx = -dax / tau
        psy = -day / tau
        action = ip * tau + 0.5 * (ia2[sl_t] - ia2[sl_b]) \
            - (dax * dax + day * day) / (2.0 * tau)
        spread = (np.pi / (eps + 0.5j * tau)) ** 1.5
        drx, dry = _hydrogenic_dipole(psx + ax[sl_b], psy + ay[sl_b], ip)
        rcx, rcy = _hydrogenic_dipole(psx + ax[sl_t], psy + ay[sl_t], ip)
        ionization = ex[sl_b] * drx + ey[sl_b] * dry
        kernel = spread * ionization * np.exp(-1j * action) * dt
        contrib_x = 1j * np.conj(rcx) * kernel
        contrib_y = 1j * np.conj(rcy) * kernel
        dx[sl_t] += 2.0 * contrib_x.real
        dy[sl_t] += 2.0 * contrib_y.real

    if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dy))):
        raise FloatingPointError("SFA dipole integral did not converge")
    return dx, dy


def sfa_emission(fieldgrid: FieldGrid, params: SfaParams) -> EmissionGrid:
    """SFA emission over the full grid.  Each point is independent; points
    whose dipole fails the finiteness check are zeroed and counted."""
    time = fieldgrid.time
    tr = fieldgrid.transverse
    omega = fieldgrid.omega
    time.validate_against_carrier(omega, min_samples=32)
    ks, omegas = spectral_band(time, omega, params.q_min, params.q_max)
    t = time.times

    out = np.zeros((2, tr.n_r, tr.n_theta, len(ks)), dtype=complex)
    excluded = 0
    fx_all, fy_all = fieldgrid.real_components()
    for i in range(tr.n_r):
        for j in range(tr.n_theta):
            try:
                dx, dy = sfa_dipole_point(fx_all[i, j], fy_all[i, j], t,
                                          omega, params)
            except FloatingPointError:
                excluded += 1
                continue
            cx = _band_coefficients(dx, time, ks)
            cy = _band_coefficients(dy, time, ks)
            # dipole acceleration: d2/dt2 -> multiply by -W^2; the overall
            # sign is irrelevant to every observable downstream
            cx = cx * omegas ** 2
            cy = cy * omegas ** 2
            out[0, i, j] = (cx - 1j * cy) / np.sqrt(2.0)
            out[1, i, j] = (cx + 1j * cy) / np.sqrt(2.0)

    return EmissionGrid(data=out, omegas=omegas, transverse=tr,
                        omega_fundamental=omega, q_min=params.q_min,
                        q_max=params.q_max, excluded_points=excluded)


def helicity_of_line(emission: EmissionGrid, q: int):
    """Dominant circular component of harmonic q and its purity ratio.

    Returns (sam, purity) with purity = P_dominant / (P_+ + P_-); sam is 0
    when the line carries no power.
    """
    p_plus = emission.harmonic_power(q, +1)
    p_minus = emission.harmonic_power(q, -1)
    total = p_plus + p_minus
    if total == 0.0:
        return 0, 0.0
    if p_plus >= p_minus:
        return +1, p_plus / total
    return -1, p_minus / total
