"""Equation of state of the bath from the law of one molecule's energy.

Everything here follows from the tilted family ``P^beta(dH) ∝ exp(-beta H) P(dH)``:
``log Z`` is its log-normaliser, the specific energy its mean, ``-dE/dbeta``
its variance. Only ``beta >= 0`` is supported.

All sums and integrals are taken relative to the law's ground energy so large
offsets in the spectrum do not cost precision.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .energy_laws import ContinuousLaw, DiscreteLaw, logsumexp
from .errors import DomainError, OutOfScopeError, UnreachableError

EPS = np.finfo(float).eps
BETA_CAP = 1e6  # in units of 1 / (ceiling - ground)


def _check_beta(beta):
    beta = float(beta)
    if math.isnan(beta) or math.isinf(beta):
        raise DomainError(f"beta must be finite, got {beta}", beta)
    if beta < 0:
        raise OutOfScopeError(f"beta = {beta} < 0 (negative temperature) is not supported", beta)
    return beta


def _canonical(law, beta):
    """(log Z + beta * ground, E(beta) - ground, Var_beta(H)) for ``beta >= 0``."""
    if isinstance(law, DiscreteLaw):
        y = law.energies - law.ground
        lw = law.log_weights - beta * y
        lse = logsumexp(lw)
        p = np.exp(lw - lse)
        m = float(p @ y)
        v = float(p @ (y - m) ** 2)
        return (0.0 if beta == 0.0 else lse), m, v
    if isinstance(law, ContinuousLaw):
        lm, m, v = law.tilted_stats(law.tilt + beta)
        return lm - law.log_mass(law.tilt), m, v
    raise TypeError(f"not an energy law: {law!r}")


def log_partition(law, beta):
    """``log E[exp(-beta H)]``."""
    beta = _check_beta(beta)
    shifted, _, _ = _canonical(law, beta)
    return shifted - beta * law.ground


def specific_energy(law, beta):
    beta = _check_beta(beta)
    return law.ground + _canonical(law, beta)[1]


def energy_variance(law, beta):
    """Variance of H under the tilted law; equals ``-dE/dbeta``."""
    beta = _check_beta(beta)
    return _canonical(law, beta)[2]


def heat_capacity(law, beta, k_B=1.0):
    beta = _check_beta(beta)
    return k_B * beta * beta * _canonical(law, beta)[2]


def entropy_from_beta(law, beta, k_B=1.0):
    """``k_B (beta E(beta) + log Z(beta))``: zero at beta = 0, negative otherwise."""
    beta = _check_beta(beta)
    shifted, y, _ = _canonical(law, beta)
    return k_B * (beta * y + shifted)


def esscher_tilt(law, beta):
    """Reweight the law by ``exp(-beta H) / Z(beta)``."""
    beta = _check_beta(beta)
    if beta == 0.0:
        return law
    return law.tilted(beta)


def invert_beta(law, energy):
    """The unique ``beta >= 0`` with ``specific_energy(law, beta) == energy``.

    Valid for ``energy`` in ``(ground, mean]``. The upper bracket is doubled
    from ``1 / width`` up to ``BETA_CAP / width``; a safeguarded Newton
    iteration (the derivative is minus the tilted variance) then runs to
    machine precision in beta.
    """
    energy = float(energy)
    if not math.isfinite(energy):
        raise DomainError(f"energy must be finite, got {energy}", energy)
    g = law.ground
    width = law.ceiling - g
    mean = law.mean
    if law.is_degenerate or law.variance == 0.0:
        if abs(energy - mean) <= 4 * EPS * max(1.0, abs(mean)):
            return 0.0
        raise UnreachableError(f"energy {energy} differs from the only attainable value {mean}",
                               energy)
    tol = 4 * EPS * width
    if energy > mean + tol:
        raise OutOfScopeError(f"energy {energy} exceeds the mean {mean}; it needs beta < 0",
                              energy)
    if energy >= mean - tol:
        return 0.0
    if energy <= g:
        raise UnreachableError(f"energy {energy} is at or below the ground energy {g} "
                               "(zero-temperature limit)", energy)
    target = energy - g

    def resid(beta):
        _, y, v = _canonical(law, beta)
        return y - target, v

    lo, hi = 0.0, 1.0 / width
    f_hi, v_hi = resid(hi)
    while f_hi > 0:
        lo = hi
        hi *= 2.0
        if hi > BETA_CAP / width:
            raise UnreachableError(f"energy {energy} is not reached below beta = "
                                   f"{BETA_CAP / width:g}", energy)
        f_hi, v_hi = resid(hi)
    if f_hi == 0:
        return hi

    beta = lo if lo > 0 else 0.5 * hi
    for _ in range(200):
        f, v = resid(beta)
        if f == 0:
            return beta
        if f > 0:
            lo = beta
        else:
            hi = beta
        cand = beta + f / v if v > 0 else -1.0
        if not lo < cand < hi:
            cand = 0.5 * (lo + hi)
        if abs(cand - beta) <= 2 * EPS * cand or hi - lo <= 2 * EPS * hi:
            return cand
        beta = cand
    return beta


def entropy_of_energy(law, energy, k_B=1.0):
    """Specific entropy at specific energy ``energy`` via the inverse temperature."""
    beta = invert_beta(law, energy)
    shifted, _, _ = _canonical(law, beta)
    return k_B * (beta * (energy - law.ground) + shifted)


def chernoff_rate(law, energy):
    """``inf over beta >= 0 of [beta E + log Z(beta)]``.

    Zero for ``E >= mean``. At ``E == ground`` the infimum is the log-mass of
    the ground atom (``-inf`` for continuous laws); below the ground it is
    ``-inf``.
    """
    energy = float(energy)
    g = law.ground
    if energy >= law.mean:
        return 0.0
    if energy < g:
        return -math.inf
    if energy == g:
        if isinstance(law, DiscreteLaw):
            return float(law.log_weights[0])
        return -math.inf
    beta = invert_beta(law, energy)
    shifted, _, _ = _canonical(law, beta)
    return min(0.0, beta * (energy - g) + shifted)


# ----------------------------------------------------------------------------
# equation-of-state tables
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ThermoPoint:
    beta: float
    log_Z: float
    energy: float
    entropy: float
    heat_capacity: float
    temperature: float

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ScanError:
    index: int
    value: float
    message: str


@dataclass
class EquationOfState:
    law: str
    k_B: float = 1.0
    points: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def column(self, name):
        return np.array([getattr(p, name) for p in self.points])


def thermo_point(law, beta, k_B=1.0):
    beta = _check_beta(beta)
    shifted, y, v = _canonical(law, beta)
    energy = law.ground + y
    log_z = shifted - beta * law.ground
    return ThermoPoint(
        beta=beta,
        log_Z=log_z,
        energy=energy,
        entropy=k_B * (beta * energy + log_z),
        heat_capacity=k_B * beta * beta * v,
        temperature=math.inf if beta == 0 else 1.0 / (k_B * beta),
    )


def eos_scan(law, betas=None, energies=None, k_B=1.0):
    """Thermo points over a beta grid or a specific-energy grid.

    Out-of-domain entries become :class:`ScanError` records; the scan goes on.
    """
    if (betas is None) == (energies is None):
        raise ValueError("give exactly one of betas or energies")
    if not k_B > 0:
        raise DomainError(f"k_B must be positive, got {k_B}", k_B)
    eos = EquationOfState(law=law.describe(), k_B=k_B)
    grid = betas if betas is not None else energies
    for i, value in enumerate(grid):
        try:
            beta = value if betas is not None else invert_beta(law, value)
            eos.points.append(thermo_point(law, beta, k_B))
        except DomainError as exc:
            eos.errors.append(ScanError(i, float(value), str(exc)))
    return eos
