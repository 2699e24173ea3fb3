"""Sampling grids: polar transverse plane, time axis, and far-field divergence."""

from dataclasses import dataclass, field

import numpy as np


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TransverseGrid:
    """Polar (r, theta) sampling of the transverse plane at the focus.

    Radii are cell-centered so every quadrature weight r*dr is strictly
    positive; the weights sum to r_max^2/2, i.e. the full disc area divided
    by the 2*pi azimuthal factor.
    """

    n_r: int
    n_theta: int
    r_max: float
    radii: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    thetas: np.ndarray = field(repr=False)

    @classmethod
    def regular(cls, n_r: int, n_theta: int, r_max: float) -> "TransverseGrid":
        if not _is_power_of_two(n_theta):
            raise ValueError(f"n_theta must be a power of two, got {n_theta}")
        if n_r < 2 or r_max <= 0:
            raise ValueError("need n_r >= 2 and r_max > 0")
        dr = r_max / n_r
        radii = (np.arange(n_r) + 0.5) * dr
        weights = radii * dr
        thetas = np.arange(n_theta) * (2.0 * np.pi / n_theta)
        return cls(n_r=n_r, n_theta=n_theta, r_max=float(r_max),
                   radii=radii, weights=weights, thetas=thetas)

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_theta


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time axis. dt must divide the 2w optical period into an
    integer number >= 32 of samples; validated by the run configuration."""

    dt: float
    n_t: int
    t0: float

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_t)

    @property
    def span(self) -> float:
        return self.dt * self.n_t

    def validate_against_carrier(self, omega: float, min_samples: int = 32) -> None:
        period_2w = np.pi / omega
        ratio = period_2w / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < min_samples:
            raise ValueError(
                f"dt={self.dt} must divide the 2w period {period_2w} into an "
                f"integer >= {min_samples} number of samples (got {ratio})")


@dataclass(frozen=True)
class DivergenceGrid:
    """Far-field divergence radii (rad), cell-centered like TransverseGrid."""

    n_beta: int
    beta_max: float
    betas: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    PARAXIAL_LIMIT = 0.2  # rad

    @classmethod
    def regular(cls, n_beta: int, beta_max: float) -> "DivergenceGrid":
        if n_beta < 2 or beta_max <= 0:
            raise ValueError("need n_beta >= 2 and beta_max > 0")
        db = beta_max / n_beta
        betas = (np.arange(n_beta) + 0.5) * db
        return cls(n_beta=n_beta, beta_max=float(beta_max),
                   betas=betas, weights=betas * db)

    @property
    def exceeds_paraxial(self) -> bool:
        return self.beta_max > self.PARAXIAL_LIMIT
