"""Time-domain structure of the filtered XUV emission.

The retained far-field spectrum is inverse-transformed to an attosecond pulse
train; the local linear-polarization orientation is read off the
Gaussian-windowed quadrupole moment

    T22(t) = int (Ex(t') + i Ey(t'))^2 exp(-(t'-t)^2 / 2 sigma^2) dt',

whose half-phase gives the orientation angle (modulo 180 degrees).  For
coordinated-rotation-invariant drivers the |T22| ridges wind around the
azimuth: one revolution advances the train by tau*2pi and rotates the
polarization by gamma*360 degrees.

Note on mod-180 bookkeeping: a train of linear pulses at 120 degrees from
each other (in direction space) shows successive line-orientation steps of
+-60 degrees, since orientations are only defined modulo 180.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .driver import CoordinationParameters
from .farfield import FarFieldGrid


@dataclass(frozen=True)
class AptField:
    """Real XUV field (Ex, Ey) over (divergence radius, azimuth, time)."""

    ex: np.ndarray
    ey: np.ndarray
    times: np.ndarray
    beta_indices: np.ndarray     # rows of the divergence grid included
    far: FarFieldGrid

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class T22Map:
    """Windowed quadrupole moment over (azimuth, time), radially integrated
    over the annulus that carries the bulk of the filtered power."""

    values: np.ndarray           # (n_theta, n_t) complex
    thetas: np.ndarray
    times: np.ndarray
    sigma: float
    annulus: tuple               # (first, last+1) divergence row indices

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("T22 map contains non-finite values")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def orientation(self) -> np.ndarray:
        """Local polarization orientation, radians mod pi."""
        return 0.5 * np.angle(self.values)


@dataclass(frozen=True)
class AptMetrics:
    delay_per_revolution: float              # fs, from ridge tracking
    delay_fit_residual: float                # fs, rms about the linear fit
    rotation_per_revolution_deg: float
    rotation_fit_residual_deg: float
    fixed_theta_orientation_steps_deg: List[float]   # line-space, ~60 each
    ridge_points: int


def _spectral_filter(far: FarFieldGrid, q_min: int) -> np.ndarray:
    w = far.omega_fundamental
    return far.omegas >= (q_min - 0.5) * w


def synthesize_xy(coeff_plus, coeff_minus, omegas, times):
    """Real (Ex, Ey) from circular Fourier coefficients at arbitrary times.

    coeff_* have the spectral axis last; times is 1-D.  The signal is
    2 Re sum_k c_k exp(-i W_k t) per Cartesian component.
    """
    cx = (coeff_plus + coeff_minus) / np.sqrt(2.0)
    cy = 1j * (coeff_plus - coeff_minus) / np.sqrt(2.0)
    phases = np.exp(-1j * np.outer(omegas, times))    # (n_k, n_t)
    ex = 2.0 * np.real(cx @ phases)
    ey = 2.0 * np.real(cy @ phases)
    return ex, ey


def reconstruct_apt(far: FarFieldGrid, q_min: int, times: np.ndarray,
                    beta_indices: Optional[Sequence[int]] = None) -> AptField:
    """Invert the far-field spectrum to the time domain, keeping only
    content at and above harmonic q_min."""
    keep = _spectral_filter(far, q_min)
    if not keep.any():
        raise ValueError(f"no retained spectral content above harmonic {q_min}")
    if beta_indices is None:
        beta_indices = np.arange(far.divergence.n_beta)
    beta_indices = np.asarray(beta_indices)
    cp = far.data[0][beta_indices][:, :, keep]
    cm = far.data[1][beta_indices][:, :, keep]
    ex, ey = synthesize_xy(cp, cm, far.omegas[keep], np.asarray(times))
    return AptField(ex=ex, ey=ey, times=np.asarray(times),
                    beta_indices=beta_indices, far=far)


def t22_windowed(ex: np.ndarray, ey: np.ndarray, dt: float,
                 sigma: float) -> np.ndarray:
    """Gaussian-windowed quadrupole moment of a real 2-vector time series.

    Time is the last axis.  The window is truncated at +-4 sigma and at the
    array edges, and renormalized so every output sample integrates the same
    total window weight.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if sigma / dt < 8.0:
        raise ValueError(
            f"sigma={sigma} under-resolved: {sigma / dt:.1f} samples per "
            "sigma, need >= 8 (oversample the reconstruction)")
    half = int(np.ceil(4.0 * sigma / dt))
    offsets = np.arange(-half, half + 1) * dt
    kernel = np.exp(-offsets ** 2 / (2.0 * sigma ** 2))
    kernel_sum = kernel.sum()

    signal = (ex + 1j * ey) ** 2
    flat = signal.reshape(-1, signal.shape[-1])
    n_t = signal.shape[-1]
    out = np.empty_like(flat)
    coverage = np.convolve(np.ones(n_t), kernel, mode="same")
    for i in range(flat.shape[0]):
        conv = np.convolve(flat[i], kernel, mode="same")
        out[i] = conv * (kernel_sum / coverage)
    return (out * dt).reshape(signal.shape)


def filtered_radial_power(far: FarFieldGrid, q_min: int) -> np.ndarray:
    """Spectrally filtered power per divergence row (both polarizations)."""
    keep = _spectral_filter(far, q_min)
    amp2 = (np.abs(far.data[:, :, :, keep]) ** 2).sum(axis=(0, 2, 3))
    return amp2 * far.divergence.weights


def power_annulus(far: FarFieldGrid, q_min: int,
                  fraction: float = 0.8) -> tuple:
    """Contiguous divergence-row range around the peak carrying at least the
    given fraction of the filtered power."""
    p = filtered_radial_power(far, q_min)
    total = p.sum()
    if total <= 0:
        return (0, far.divergence.n_beta)
    lo = hi = int(np.argmax(p))
    acc = p[lo]
    while acc < fraction * total:
        left = p[lo - 1] if lo > 0 else -1.0
        right = p[hi + 1] if hi < len(p) - 1 else -1.0
        if right >= left:
            hi += 1
            acc += p[hi]
        else:
            lo -= 1
            acc += p[lo]
    return (lo, hi + 1)


def t22_map(far: FarFieldGrid, q_min: int, sigma: float, times: np.ndarray,
            annulus_fraction: float = 0.8) -> T22Map:
    """Radially integrated T22 over (azimuth, time).

    Works one divergence row at a time to keep the fine-time reconstruction
    memory bounded; rows are weighted by their quadrature weight.
    """
    lo, hi = power_annulus(far, q_min, annulus_fraction)
    times = np.asarray(times)
    dt = float(times[1] - times[0])
    acc = np.zeros((far.n_theta, len(times)), dtype=complex)
    for ib in range(lo, hi):
        apt = reconstruct_apt(far, q_min, times, beta_indices=[ib])
        row = t22_windowed(apt.ex[0], apt.ey[0], dt, sigma)
        acc += far.divergence.weights[ib] * row
    return T22Map(values=acc, thetas=far.thetas, times=times,
                  sigma=sigma, annulus=(lo, hi))


# ---------------------------------------------------------------------------
# Ridge extraction and spiral metrics

def _column_peaks(amp: np.ndarray, threshold: float) -> np.ndarray:
    """Indices of local maxima above threshold in a 1-D array."""
    inner = (amp[1:-1] >= amp[:-2]) & (amp[1:-1] >= amp[2:]) \
        & (amp[1:-1] > threshold)
    return np.nonzero(inner)[0] + 1


def _refine_peak(amp: np.ndarray, idx: int) -> float:
    """Sub-sample peak position by parabolic interpolation."""
    if idx <= 0 or idx >= len(amp) - 1:
        return float(idx)
    a, b, c = amp[idx - 1], amp[idx], amp[idx + 1]
    denom = a - 2 * b + c
    if denom == 0:
        return float(idx)
    return idx + 0.5 * (a - c) / denom


def _wrap_half_pi(x: np.ndarray) -> np.ndarray:
    """Wrap angles into (-pi/2, pi/2] (line orientations are mod pi)."""
    return x - np.pi * np.round(x / np.pi)


def polarization_spiral_metrics(t22: T22Map, params: CoordinationParameters,
                                ridge_threshold: float = 0.1) -> AptMetrics:
    """Track one |T22| ridge around the azimuth and fit the spiral.

    Ridge points are matched nearest-in-time between neighboring azimuth
    columns; the per-revolution delay is the tracked time advance over 2pi
    and the polarization rotation is the accumulated half-phase drift.
    """
    amp = np.abs(t22.values)
    n_theta = len(t22.thetas)
    dt = t22.dt
    global_max = amp.max()
    if global_max == 0.0:
        return AptMetrics(0.0, 0.0, 0.0, 0.0, [], 0)
    threshold = ridge_threshold * global_max

    # start from the strongest pulse at theta = 0
    peaks0 = _column_peaks(amp[0], threshold)
    if len(peaks0) == 0:
        return AptMetrics(0.0, 0.0, 0.0, 0.0, [], 0)
    start = peaks0[int(np.argmax(amp[0][peaks0]))]

    track_t = [t22.times[0] + _refine_peak(amp[0], start) * dt]
    track_phi = [0.5 * np.angle(t22.values[0, start])]
    prev_idx = start
    for step in range(1, n_theta + 1):
        col = step % n_theta
        peaks = _column_peaks(amp[col], threshold)
        if len(peaks) == 0:
            break
        target = prev_idx
        nxt = peaks[int(np.argmin(np.abs(peaks - target)))]
        track_t.append(t22.times[0] + _refine_peak(amp[col], nxt) * dt)
        track_phi.append(0.5 * np.angle(t22.values[col, nxt]))
        prev_idx = nxt

    track_t = np.array(track_t)
    thetas = np.arange(len(track_t)) * (2.0 * np.pi / n_theta)

    # delay: linear fit of ridge time vs unwrapped azimuth
    coeffs = np.polyfit(thetas, track_t, 1)
    delay_per_rev = float(coeffs[0] * 2.0 * np.pi)
    delay_resid = float(np.sqrt(np.mean(
        (track_t - np.polyval(coeffs, thetas)) ** 2)))

    # polarization rotation: accumulate mod-pi phase steps along the ridge
    phi_steps = _wrap_half_pi(np.diff(np.array(track_phi)))
    phi_unwrapped = np.concatenate([[track_phi[0]],
                                    track_phi[0] + np.cumsum(phi_steps)])
    pc = np.polyfit(thetas, phi_unwrapped, 1)
    rotation_per_rev = float(np.degrees(pc[0] * 2.0 * np.pi))
    rotation_resid = float(np.degrees(np.sqrt(np.mean(
        (phi_unwrapped - np.polyval(pc, thetas)) ** 2))))

    # fixed-theta pulse sequence at theta = 0
    seq = sorted(_column_peaks(amp[0], threshold))
    orientations = [0.5 * np.angle(t22.values[0, i]) for i in seq]
    steps_deg = [float(np.degrees(abs(_wrap_half_pi(np.array([b - a]))[0])))
                 for a, b in zip(orientations[:-1], orientations[1:])]

    return AptMetrics(delay_per_revolution=delay_per_rev,
                      delay_fit_residual=delay_resid,
                      rotation_per_revolution_deg=rotation_per_rev,
                      rotation_fit_residual_deg=rotation_resid,
                      fixed_theta_orientation_steps_deg=steps_deg,
                      ridge_points=len(track_t))


# ---------------------------------------------------------------------------
# Cartesian export grid for the spiral figure

def apt_cartesian_grid(far: FarFieldGrid, q_min: int, sigma: float,
                       fine_times: np.ndarray, export_times: np.ndarray,
                       n_xy: int = 81):
    """Windowed intensity and polarization orientation of the filtered APT on
    a regular (x_div, y_div, t) grid.

    Returns (x_axis, y_axis, intensity, orientation) with intensity and
    orientation shaped (n_t_export, n_xy, n_xy); orientation in radians mod
    pi.  Values outside the divergence disc are zero.
    """
    from scipy.interpolate import RegularGridInterpolator

    fine_times = np.asarray(fine_times)
    export_times = np.asarray(export_times)
    dt = float(fine_times[1] - fine_times[0])
    n_beta = far.divergence.n_beta
    n_theta = far.n_theta

    window = np.exp(-(fine_times[None, :] - export_times[:, None]) ** 2
                    / (2.0 * sigma ** 2))
    window = window / window.sum(axis=1, keepdims=True)

    t22_polar = np.empty((n_beta, n_theta, len(export_times)), dtype=complex)
    int_polar = np.empty((n_beta, n_theta, len(export_times)))
    for ib in range(n_beta):
        apt = reconstruct_apt(far, q_min, fine_times, beta_indices=[ib])
        ex, ey = apt.ex[0], apt.ey[0]
        t22_polar[ib] = ((ex + 1j * ey) ** 2) @ window.T
        int_polar[ib] = (ex ** 2 + ey ** 2) @ window.T

    # periodic closure in phi for the interpolator
    thetas_ext = np.concatenate([far.thetas, [2.0 * np.pi]])
    betas = far.divergence.betas
    axis = np.linspace(-betas[-1], betas[-1], n_xy)
    xx, yy = np.meshgrid(axis, axis, indexing="xy")
    rr = np.hypot(xx, yy)
    pp = np.mod(np.arctan2(yy, xx), 2.0 * np.pi)
    pts = np.stack([rr.ravel(), pp.ravel()], axis=1)
    inside = (pts[:, 0] >= betas[0]) & (pts[:, 0] <= betas[-1])

    intensity = np.zeros((len(export_times), n_xy, n_xy))
    orientation = np.zeros((len(export_times), n_xy, n_xy))
    for it in range(len(export_times)):
        t22_ext = np.concatenate(
            [t22_polar[:, :, it], t22_polar[:, :1, it]], axis=1)
        int_ext = np.concatenate(
            [int_polar[:, :, it], int_polar[:, :1, it]], axis=1)
        interp_t22 = RegularGridInterpolator((betas, thetas_ext), t22_ext)
        interp_int = RegularGridInterpolator((betas, thetas_ext), int_ext)
        t22_xy = np.zeros(n_xy * n_xy, dtype=complex)
        int_xy = np.zeros(n_xy * n_xy)
        t22_xy[inside] = interp_t22(pts[inside])
        int_xy[inside] = interp_int(pts[inside])
        intensity[it] = int_xy.reshape(n_xy, n_xy)
        orientation[it] = 0.5 * np.angle(t22_xy).reshape(n_xy, n_xy)

    return axis, axis, intensity, orientation
