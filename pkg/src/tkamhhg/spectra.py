"""OAM and TKAM spectra of the far-field harmonics and the conservation fit.

The OAM spectrum of a harmonic is the exact discrete azimuthal Fourier series
of the far field, radially integrated; re-indexing each polarization by
j = m + gamma * s lands every entry on the third-integer TKAM lattice without
any binning loss.  Charge conservation then shows up as the dominant j
scaling linearly with the harmonic order.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

import numpy as np

from .driver import CoordinationParameters
from .farfield import FarFieldGrid


@dataclass(frozen=True)
class AngularSpectrum:
    """Power per angular-momentum index of one harmonic and polarization.

    ms holds integer OAM indices; js the matching TKAM values (exact
    Fractions, j = m + gamma*s).  For a plain OAM spectrum gamma is 0 and
    js coincides with ms.
    """

    q: int
    s: int
    ms: np.ndarray
    powers: np.ndarray
    gamma: Fraction = Fraction(0)

    def __post_init__(self):
        if np.any(self.powers < 0):
            raise ValueError("powers must be nonnegative")

    @property
    def js(self) -> List[Fraction]:
        return [m + self.gamma * self.s for m in self.ms.tolist()]

    @property
    def total_power(self) -> float:
        return float(self.powers.sum())

    @property
    def dominant_m(self) -> int:
        return int(self.ms[int(np.argmax(self.powers))])

    @property
    def dominant_j(self) -> Fraction:
        return self.dominant_m + self.gamma * self.s

    @property
    def purity(self) -> float:
        total = self.total_power
        if total == 0.0:
            return 0.0
        return float(self.powers.max() / total)

    def stddev_m(self) -> float:
        """Power-weighted standard deviation of the OAM index."""
        total = self.total_power
        if total == 0.0:
            return 0.0
        mean = float((self.ms * self.powers).sum() / total)
        var = float(((self.ms - mean) ** 2 * self.powers).sum() / total)
        return np.sqrt(var)


@dataclass(frozen=True)
class HarmonicConservation:
    q: int
    s: int
    dominant_j: Fraction
    expected_j: Fraction
    matches: bool
    purity: float


@dataclass(frozen=True)
class ConservationReport:
    entries: List[HarmonicConservation]
    slope: float
    slope_uncertainty: float
    expected_slope: Fraction

    @property
    def all_match(self) -> bool:
        return all(e.matches for e in self.entries)


def oam_spectrum(far: FarFieldGrid, q: int, s: int,
                 gamma: Fraction = Fraction(0)) -> AngularSpectrum:
    """Azimuthal power spectrum P(m) of harmonic q, polarization s.

    P(m) = sum_bins int |(1/2pi) int E_s e^{-im phi} dphi|^2 beta dbeta, with
    the azimuthal integral done as an exact DFT on the uniform phi samples.
    """
    if s not in (+1, -1):
        raise ValueError("s must be +1 or -1")
    mask = far.harmonic_mask(q)
    comp = 0 if s == +1 else 1
    slab = far.data[comp][:, :, mask]                 # (n_beta, n_theta, bins)
    coeffs = np.fft.fft(slab, axis=1) / far.n_theta   # c_m(beta, bin)
    weights = far.divergence.weights[:, None, None]
    powers = (np.abs(coeffs) ** 2 * weights).sum(axis=(0, 2))
    m_orders = np.fft.fftfreq(far.n_theta, d=1.0 / far.n_theta).astype(int)
    order = np.argsort(m_orders)
    return AngularSpectrum(q=q, s=s, ms=m_orders[order],
                           powers=powers[order], gamma=gamma)


def tkam_spectrum(oam: AngularSpectrum, gamma: Fraction) -> AngularSpectrum:
    """Re-index an OAM spectrum by the TKAM charge j = m + gamma*s."""
    if gamma.denominator not in (1, 3):
        raise ValueError("gamma must lie on the third-integer lattice")
    return AngularSpectrum(q=oam.q, s=oam.s, ms=oam.ms.copy(),
                           powers=oam.powers.copy(), gamma=gamma)


def conservation_fit(spectra: List[AngularSpectrum],
                     params: CoordinationParameters) -> ConservationReport:
    """Fit the dominant TKAM charge against harmonic order.

    For each harmonic the polarization carrying more power is taken; its
    dominant j must equal q * j1 on the exact lattice.  The least-squares
    slope through the origin of dominant-j vs q is the global figure.
    """
    by_q = {}
    for spec in spectra:
        by_q.setdefault(spec.q, []).append(spec)
    if len(by_q) < 3:
        raise ValueError("need at least 3 harmonics for a conservation fit")

    entries = []
    for q in sorted(by_q):
        best = max(by_q[q], key=lambda sp: sp.total_power)
        j_dom = best.dominant_m + params.gamma * best.s
        expected = q * params.j1
        entries.append(HarmonicConservation(
            q=q, s=best.s, dominant_j=j_dom, expected_j=expected,
            matches=(j_dom == expected), purity=best.purity))

    qs = np.array([e.q for e in entries], dtype=float)
    js = np.array([float(e.dominant_j) for e in entries])
    slope = float((qs * js).sum() / (qs * qs).sum())
    resid = js - slope * qs
    dof = max(len(entries) - 1, 1)
    uncertainty = float(np.sqrt((resid ** 2).sum() / dof / (qs * qs).sum()))
    return ConservationReport(entries=entries, slope=slope,
                              slope_uncertainty=uncertainty,
                              expected_slope=params.j1)


NOT_TREFOIL = "not a trefoil symmetry"


def forbidden_line_suppression(far: FarFieldGrid, q: int,
                               trefoil: bool = True):
    """Suppression of the forbidden 3n line in dB below its allowed
    neighbors' mean power; returns the NOT_TREFOIL marker when the driver
    does not have the threefold bicircular symmetry."""
    if not trefoil:
        return NOT_TREFOIL
    if q % 3 != 0:
        raise ValueError(f"harmonic {q} is not a forbidden (3n) line")
    neighbors = [q - 2, q - 1, q + 1, q + 2]
    neighbors = [n for n in neighbors
                 if far.q_min <= n <= far.q_max and n % 3 != 0]
    if not neighbors:
        raise ValueError(f"no allowed neighbors of {q} in the retained band")
    p_line = far.harmonic_power(q)
    p_ref = np.mean([far.harmonic_power(n) for n in neighbors])
    if p_line == 0.0:
        return np.inf
    return float(10.0 * np.log10(p_ref / p_line))


def band_edge_power_fraction(spectrum: AngularSpectrum) -> float:
    """Fraction of power at the largest-|m| entries (aliasing check)."""
    total = spectrum.total_power
    if total == 0.0:
        return 0.0
    edge = np.abs(spectrum.ms) >= spectrum.ms.max() - 1
    return float(spectrum.powers[edge].sum() / total)
