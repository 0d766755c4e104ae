"""Equation of state of a quantum heat bath under a chosen a priori state measure."""

__version__ = "0.1.0"

from .energy_laws import (ContinuousLaw, DiscreteLaw, Spectrum, completeness_check, dirac_law,
                          haar_law, law_cdf, law_moments, load_custom_law, point_mass,
                          sample_haar_energy, uniform_law)
from .errors import (DomainError, IncommensurateError, InvalidProbeError, OutOfScopeError,
                     QBathError, ResourceError, UnreachableError, WrongLawError)
from .rng import RngStream
from .thermo import (chernoff_rate, energy_variance, entropy_from_beta, entropy_of_energy,
                     eos_scan, esscher_tilt, heat_capacity, invert_beta, log_partition,
                     specific_energy)
