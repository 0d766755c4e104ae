"""Analytic equation of state for two-level molecules.

With ``omega = (E2 - E1) / 2`` and ``x = beta * omega``:

==========  =====================================  ===============================
model       specific energy                        heat capacity / k_B
==========  =====================================  ===============================
dirac       ``Ebar - omega * tanh(x)``             ``x**2 * sech(x)**2``
haar        ``Ebar - omega * (coth(x) - 1/x)``     ``1 - x**2 * csch(x)**2``
==========  =====================================  ===============================

The Haar expressions have a removable singularity at ``x = 0``; below
``SERIES_SWITCH`` they are evaluated from their power series.
"""

import math
import warnings
from dataclasses import dataclass

import mpmath

from .errors import DomainError, OutOfScopeError

SERIES_SWITCH = 1e-4
LOG2 = math.log(2.0)


@dataclass(frozen=True)
class TwoLevel:
    E1: float
    E2: float

    def __post_init__(self):
        if not self.E2 >= self.E1:
            raise DomainError(f"two-level system needs E2 >= E1, got ({self.E1}, {self.E2})")

    @property
    def omega(self):
        return 0.5 * (self.E2 - self.E1)

    @property
    def mean(self):
        return 0.5 * (self.E1 + self.E2)


@dataclass(frozen=True)
class TwoLevelPoint:
    Z: float
    log_Z: float
    E: float
    S: float
    C: float


def _beta(beta):
    beta = float(beta)
    if beta < 0:
        raise OutOfScopeError(f"beta = {beta} < 0 is not supported", beta)
    return beta


def _log_cosh(x):
    x = abs(x)
    return x + math.log1p(math.exp(-2.0 * x)) - LOG2


def _log_sinhc(x):
    """log(sinh(x) / x) for x >= 0."""
    if x < 1e-3:
        x2 = x * x
        return x2 / 6.0 - x2 * x2 / 180.0
    return x + math.log(-math.expm1(-2.0 * x)) - math.log(2.0 * x)


def dirac2(tl, beta, k_B=1.0):
    """Two-level bath under the Dirac (eigenstate) measure."""
    beta = _beta(beta)
    w, x = tl.omega, beta * tl.omega
    log_z = -beta * tl.mean + _log_cosh(x)
    if x <= 1.0:
        energy = tl.mean - w * math.tanh(x)
    else:
        # E1 + (E2 - E1) / (1 + e^{2x}) keeps the low-temperature tail exact
        e = math.exp(-2.0 * x)
        energy = tl.E1 + (tl.E2 - tl.E1) * (e / (1.0 + e))
    sech = 0.0 if x > 700 else 1.0 / math.cosh(x)
    c = k_B * (x * sech) ** 2
    s = k_B * (beta * energy + log_z)
    return TwoLevelPoint(Z=math.exp(log_z), log_Z=log_z, E=energy, S=s, C=c)


def haar2(tl, beta, k_B=1.0):
    """Two-level bath under the uniform (Haar) measure."""
    beta = _beta(beta)
    w, x = tl.omega, beta * tl.omega
    log_z = -beta * tl.mean + _log_sinhc(x)
    if x < SERIES_SWITCH:
        x2 = x * x
        energy = tl.mean - w * (x / 3.0 - x * x2 / 45.0)
        c = k_B * (x2 / 3.0 - x2 * x2 / 15.0)
    else:
        energy = tl.mean - w * (1.0 / math.tanh(x) - 1.0 / x)
        csch = 0.0 if x > 700 else 1.0 / math.sinh(x)
        c = k_B * (1.0 - (x * csch) ** 2)
    s = k_B * (beta * energy + log_z)
    return TwoLevelPoint(Z=math.exp(log_z), log_Z=log_z, E=energy, S=s, C=c)


@dataclass(frozen=True)
class InverseTwoLevel:
    beta: float
    log_Z: float
    S: float


def dirac2_of_energy(tl, energy, k_B=1.0):
    """Invert the Dirac two-level relation on ``(E1, mean]``.

    The entropy is the binary Shannon form ``log(1/2) - p log p - (1-p) log(1-p)``
    with ``p = (E - E1) / (E2 - E1)``; ``log_Z`` is then fixed by ``S = k_B (beta E + log Z)``.
    """
    energy = float(energy)
    if not (tl.E1 < energy <= tl.mean):
        raise DomainError(f"energy {energy} outside ({tl.E1}, {tl.mean}]", energy)
    width = tl.E2 - tl.E1
    p = (energy - tl.E1) / width
    q = (tl.E2 - energy) / width
    beta = max(0.0, math.log(q / p) / width)  # q < p only by rounding at E = mean
    log_z = (tl.E1 * math.log(p) - tl.E2 * math.log(q)) / width - LOG2
    s = k_B * (-LOG2 - p * math.log(p) - q * math.log(q))
    return InverseTwoLevel(beta=beta, log_Z=log_z, S=s)


def two_level_series(tl, beta, model):
    """High-temperature expansion of E(beta) through order beta**3."""
    beta = float(beta)
    w = tl.omega
    if abs(beta * w) > 1:
        warnings.warn(f"beta*omega = {beta * w:g} is outside the series regime |beta*omega| <= 1",
                      RuntimeWarning, stacklevel=2)
    if model == "dirac":
        return tl.mean - beta * w ** 2 + beta ** 3 * w ** 4 / 3.0
    if model == "haar":
        return tl.mean - beta * w ** 2 / 3.0 + beta ** 3 * w ** 4 / 45.0
    raise ValueError(f"unknown model {model!r}")


def energy_mp(tl, beta, model, dps=60):
    """E(beta) of either model in ``dps``-digit arithmetic (series-free reference)."""
    with mpmath.workdps(dps):
        b = mpmath.mpf(beta)
        w = (mpmath.mpf(tl.E2) - mpmath.mpf(tl.E1)) / 2
        mean = (mpmath.mpf(tl.E1) + mpmath.mpf(tl.E2)) / 2
        x = b * w
        if model == "dirac":
            return mean - w * mpmath.tanh(x)
        if model == "haar":
            return mean - w * (mpmath.coth(x) - 1 / x)
        raise ValueError(f"unknown model {model!r}")


def series_remainder_mp(tl, beta, model, dps=60):
    """``E(beta) - two_level_series(beta)`` with both sides in ``dps``-digit arithmetic.

    At ``beta * omega ~ 1e-3`` the remainder is ~1e-18, below double resolution.
    """
    with mpmath.workdps(dps):
        b = mpmath.mpf(beta)
        w = (mpmath.mpf(tl.E2) - mpmath.mpf(tl.E1)) / 2
        mean = (mpmath.mpf(tl.E1) + mpmath.mpf(tl.E2)) / 2
        if model == "dirac":
            series = mean - b * w ** 2 + b ** 3 * w ** 4 / 3
        elif model == "haar":
            series = mean - b * w ** 2 / 3 + b ** 3 * w ** 4 / 45
        else:
            raise ValueError(f"unknown model {model!r}")
        return energy_mp(tl, beta, model, dps) - series
