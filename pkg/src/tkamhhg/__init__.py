"""Simulator and analysis toolkit for high-harmonic generation driven by
coordinated-rotation-invariant bicircular vortex beams."""

__version__ = "0.1.0"

from .driver import (CoordinationParameters, DriverComponentSpec, DriverSpec,
                     EnvelopeSpec, FieldGrid, PerturbationSpec,
                     apply_coordinated_rotation, coordination_parameter,
                     evaluate_driver, expected_harmonic_oam,
                     symmetry_constants, symmetry_residual, tkam_charge)
from .grids import DivergenceGrid, TimeGrid, TransverseGrid
from .response import (EmissionGrid, SfaParams, SurrogateModelParams,
                       helicity_of_line, sfa_emission, surrogate_emission)
from .farfield import FarFieldGrid, propagate, propagate_all
from .spectra import (AngularSpectrum, ConservationReport, conservation_fit,
                      forbidden_line_suppression, oam_spectrum, tkam_spectrum)
from .timedomain import (AptMetrics, T22Map, polarization_spiral_metrics,
                         reconstruct_apt, t22_map, t22_windowed)

__all__ = [name for name in dir() if not name.startswith("_")]
