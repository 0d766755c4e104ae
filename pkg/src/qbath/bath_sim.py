"""Finite-n bath entropies ``(1/n) log P[avg energy in an event]``.

Estimators
----------
exact-dp
    Atomic laws whose energies sit on a lattice: the n-fold sum distribution is
    built by log-domain convolution (two-atom laws use the binomial directly).
irwin-hall
    The flat two-level Haar law: exact rational arithmetic on the Irwin-Hall CDF.
mc-naive
    Plain Monte Carlo hit fraction.
mc-tilted
    Importance sampling from the exponentially tilted law whose mean is the
    target energy; the weights are bounded by ``exp(n * rate)``.

Events are closed: ``avg <= E`` and ``E - delta <= avg <= E``.
"""

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .energy_laws import ContinuousLaw, DiscreteLaw, logsumexp
from .errors import (DomainError, IncommensurateError, ResourceError, WrongLawError)
from .rng import map_chunks
from .thermo import _canonical, chernoff_rate, esscher_tilt, invert_beta

LATTICE_TOL = 1e-9
MAX_LATTICE_REFINE = 64
DP_WORK_BOUND = 10 ** 8
IRWIN_HALL_MAX_N = 30


@dataclass(frozen=True)
class BathSpec:
    law: object
    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise DomainError(f"molecule count must be >= 1, got {self.n}", self.n)
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class TailEstimate:
    value: float  # (1/n) log P, dimensionless
    std_error: float
    method: str
    event: str  # "lower" or "shell"
    energy: float
    n: int
    delta: float = None
    samples: int = 0
    hits: int = None
    zero_hits: bool = False

    def entropy(self, k_B=1.0):
        return k_B * self.value

    def to_dict(self):
        return asdict(self)


def log_diff_exp(a, b):
    """``log(exp(a) - exp(b))`` for ``a >= b``."""
    if b == -math.inf:
        return a
    if b >= a:
        return -math.inf
    return a + math.log1p(-math.exp(b - a))


# ----------------------------------------------------------------------------
# exact: lattice dynamic programming
# ----------------------------------------------------------------------------

def lattice_of(law):
    """``(offset, unit, steps)`` with every atom at ``offset + unit * step``."""
    if not isinstance(law, DiscreteLaw):
        raise WrongLawError("exact lattice evaluation needs a discrete law")
    e = law.energies
    if e.size == 1:
        return float(e[0]), 1.0, np.zeros(1, dtype=np.int64)
    diffs = e - e[0]
    dmin = float(np.min(np.diff(e)))
    for k in range(1, MAX_LATTICE_REFINE + 1):
        unit = dmin / k
        q = diffs / unit
        r = np.rint(q)
        if np.all(np.abs(q - r) <= LATTICE_TOL):
            return float(e[0]), unit, r.astype(np.int64)
    raise IncommensurateError("atom energies are not commensurate on a lattice")


def _floor_index(x):
    return math.floor(x + LATTICE_TOL)


def _log_binomial_cdf(n, log_p, log_q, jmax):
    """log P[J <= jmax] for J ~ Binomial(n, p), from log p and log(1 - p)."""
    if jmax < 0:
        return -math.inf
    if jmax >= n:
        return 0.0
    j = np.arange(1, jmax + 1)
    log_comb = np.concatenate(([0.0], np.cumsum(np.log(n - j + 1.0) - np.log(j))))
    jj = np.arange(jmax + 1)
    return min(0.0, logsumexp(log_comb + jj * log_p + (n - jj) * log_q))


def lattice_log_pmf(law, n, cap):
    """Log pmf of the lattice index of an n-fold sum, truncated at ``cap``."""
    _, _, steps = lattice_of(law)
    return kernels.lattice_log_pmf(steps, law.log_weights, n, cap)


def _exact_log_lower(law, n, energy, strict, use_dp=False):
    """log P[sum <= n E] (or ``<`` when ``strict``) for an atomic law."""
    offset, unit, steps = lattice_of(law)
    x = n * (energy - offset) / unit
    m = math.ceil(x - LATTICE_TOL) - 1 if strict else _floor_index(x)
    top = n * int(steps.max())
    if m < 0:
        return -math.inf
    if m >= top:
        return 0.0
    if steps.size == 2 and not use_dp:
        k = int(steps[1])
        return _log_binomial_cdf(n, float(law.log_weights[1]), float(law.log_weights[0]), m // k)
    if n * (m + 1) > DP_WORK_BOUND:
        raise ResourceError(f"lattice convolution needs n*(m+1) = {n * (m + 1)} > "
                            f"{DP_WORK_BOUND} cell updates")
    logp = kernels.lattice_log_pmf(steps, law.log_weights, n, m)
    return min(0.0, logsumexp(logp))


def exact_discrete_tail(spec, energy, *, use_dp=False):
    """Exact ``(1/n) log P[avg <= E]`` for an atomic law on a lattice."""
    lp = _exact_log_lower(spec.law, spec.n, energy, strict=False, use_dp=use_dp)
    return TailEstimate(value=lp / spec.n, std_error=0.0, method="exact-dp", event="lower",
                        energy=float(energy), n=spec.n)


# ----------------------------------------------------------------------------
# exact: Irwin-Hall
# ----------------------------------------------------------------------------

def is_uniform(law):
    if not isinstance(law, ContinuousLaw) or law.tilt != 0.0 or law.knots.size != 2:
        return False
    probe = law.density(np.linspace(law.ground, law.ceiling, 7)[:-1])
    return bool(np.all(np.abs(probe - probe[0]) <= 1e-12 * abs(probe[0])))


def irwin_hall_cdf(n, x):
    """P[U_1 + ... + U_n <= x] for iid U(0,1), as an exact Fraction."""
    x = Fraction(x)
    if x <= 0:
        return Fraction(0)
    if x >= n:
        return Fraction(1)
    total = Fraction(0)
    for k in range(math.floor(x) + 1):
        term = math.comb(n, k) * (x - k) ** n
        total += -term if k % 2 else term
    return total / math.factorial(n)


def _log_fraction(f):
    if f <= 0:
        return -math.inf
    return math.log(f.numerator) - math.log(f.denominator)


def _irwin_hall_check(spec):
    if not is_uniform(spec.law):
        raise WrongLawError("Irwin-Hall evaluation needs the flat two-level law")
    if spec.n > IRWIN_HALL_MAX_N:
        raise ResourceError(f"Irwin-Hall evaluation is limited to n <= {IRWIN_HALL_MAX_N}; "
                            f"got n = {spec.n}")


def irwin_hall_tail(spec, energy):
    """Exact ``(1/n) log P[avg <= E]`` for the flat law on ``[E1, E2]``."""
    _irwin_hall_check(spec)
    law, n = spec.law, spec.n
    x = n * (energy - law.ground) / (law.ceiling - law.ground)
    lp = min(0.0, _log_fraction(irwin_hall_cdf(n, x)))
    return TailEstimate(value=lp / n, std_error=0.0, method="irwin-hall", event="lower",
                        energy=float(energy), n=n)


# ----------------------------------------------------------------------------
# Monte Carlo
# ----------------------------------------------------------------------------

def _slack(law, n, energy):
    return LATTICE_TOL * (law.ceiling - law.ground) + 1e-12 * abs(n * energy)


def _band(law, n, energy, delta):
    s = _slack(law, n, energy)
    hi = n * energy + s
    lo = -math.inf if delta is None else n * (energy - delta) - s
    return lo, hi


def _mc_value(hits, samples, n):
    if hits == 0:
        return -math.inf, math.inf
    p = hits / samples
    se_p = math.sqrt(p * (1.0 - p) / samples)
    return math.log(p) / n, se_p / (p * n)


def mc_tail(spec, energy, samples, rng, *, delta=None, threads=1):
    """Naive Monte Carlo ``(1/n) log`` hit fraction; zero hits are flagged ``-inf``."""
    if samples < 1:
        raise DomainError("samples must be >= 1", samples)
    law, n = spec.law, spec.n
    lo, hi = _band(law, n, energy, delta)

    def chunk(gen, size):
        sums = law.sample_sums(gen, n, size)
        return int(np.count_nonzero((sums >= lo) & (sums <= hi)))

    hits = sum(map_chunks(chunk, samples, rng, threads=threads))
    value, se = _mc_value(hits, samples, n)
    return TailEstimate(value=value, std_error=se, method="mc-naive",
                        event="lower" if delta is None else "shell", energy=float(energy),
                        n=n, delta=delta, samples=int(samples), hits=hits,
                        zero_hits=hits == 0)


def tilted_tail(spec, energy, samples, rng, *, delta=None, threads=1):
    """Importance-sampling estimate under the tilt that centres the average at ``E``.

    Each draw carries weight ``Z(b)**n * exp(b * sum H)`` on the event; with the
    fixed reference ``exp(n * rate)`` every weight is at most one, so chunk
    partial sums merge without overflow and independently of thread count.
    """
    law, n = spec.law, spec.n
    energy = float(energy)
    if samples < 1:
        raise DomainError("samples must be >= 1", samples)
    if not law.ground < energy < law.mean:
        raise DomainError(f"tilted sampling needs E in ({law.ground}, {law.mean}); got {energy}",
                          energy)
    beta = invert_beta(law, energy)
    shifted, _, _ = _canonical(law, beta)
    rate = beta * (energy - law.ground) + shifted
    tilted = esscher_tilt(law, beta)
    lo, hi = _band(law, n, energy, delta)
    center = n * energy

    def chunk(gen, size):
        sums = np.ascontiguousarray(tilted.sample_sums(gen, n, size), dtype=np.float64)
        return kernels.weighted_band_stats(sums, lo, hi, beta, center)

    parts = map_chunks(chunk, samples, rng, threads=threads)
    hits = sum(p[0] for p in parts)
    s1 = math.fsum(p[1] for p in parts)
    s2 = math.fsum(p[2] for p in parts)
    event = "lower" if delta is None else "shell"
    if hits == 0 or s1 == 0.0:
        return TailEstimate(value=-math.inf, std_error=math.inf, method="mc-tilted", event=event,
                            energy=energy, n=n, delta=delta, samples=int(samples), hits=hits,
                            zero_hits=True)
    mean = s1 / samples
    var = max(0.0, (s2 - samples * mean * mean) / max(samples - 1, 1))
    se_rel = math.sqrt(var / samples) / mean
    value = min(0.0, rate + math.log(mean) / n)
    return TailEstimate(value=value, std_error=se_rel / n, method="mc-tilted", event=event,
                        energy=energy, n=n, delta=delta, samples=int(samples), hits=hits)


# ----------------------------------------------------------------------------
# shells, dispatch, studies
# ----------------------------------------------------------------------------

def _auto_method(spec):
    law = spec.law
    if isinstance(law, DiscreteLaw):
        try:
            lattice_of(law)
            return "exact-dp"
        except IncommensurateError:
            return "mc-tilted"
    if is_uniform(law) and spec.n <= IRWIN_HALL_MAX_N:
        return "irwin-hall"
    return "mc-tilted"


def resolve_method(spec, method):
    """Map ``auto | exact | mc | tilted`` (or a concrete tag) to an estimator tag."""
    if method == "auto":
        return _auto_method(spec)
    if method == "exact":
        if isinstance(spec.law, DiscreteLaw):
            return "exact-dp"
        if is_uniform(spec.law):
            return "irwin-hall"
        raise WrongLawError("no exact estimator for this law")
    aliases = {"mc": "mc-naive", "naive": "mc-naive", "tilted": "mc-tilted"}
    tag = aliases.get(method, method)
    if tag not in ("exact-dp", "irwin-hall", "mc-naive", "mc-tilted"):
        raise ValueError(f"unknown method {method!r}")
    return tag


def _need_rng(rng, samples, tag):
    if rng is None or samples is None:
        raise ValueError(f"method {tag} needs samples and an rng stream")


def estimate_tail(spec, energy, method="auto", *, samples=None, rng=None, threads=1):
    tag = resolve_method(spec, method)
    if method == "auto" and tag == "exact-dp":
        try:
            return exact_discrete_tail(spec, energy)
        except ResourceError:
            tag = "mc-tilted"
    if tag == "exact-dp":
        return exact_discrete_tail(spec, energy)
    if tag == "irwin-hall":
        return irwin_hall_tail(spec, energy)
    _need_rng(rng, samples, tag)
    if tag == "mc-naive":
        return mc_tail(spec, energy, samples, rng, threads=threads)
    return tilted_tail(spec, energy, samples, rng, threads=threads)


def shell_entropy(spec, energy, delta, method="auto", *, samples=None, rng=None, threads=1):
    """``(1/n) log P[E - delta <= avg <= E]``.

    Exact methods difference the closed lower tail at ``E`` and the open lower
    tail at ``E - delta``; Monte Carlo methods count the band on common draws.
    """
    if not delta > 0:
        raise DomainError(f"shell width must be positive, got {delta}", delta)
    law, n = spec.law, spec.n
    tag = resolve_method(spec, method)
    common = dict(event="shell", energy=float(energy), n=n, delta=float(delta))
    if tag == "exact-dp":
        upper = _exact_log_lower(law, n, energy, strict=False)
        lower = _exact_log_lower(law, n, energy - delta, strict=True)
        lp = log_diff_exp(upper, lower)
        return TailEstimate(value=lp / n, std_error=0.0, method=tag,
                            zero_hits=lp == -math.inf, **common)
    if tag == "irwin-hall":
        _irwin_hall_check(spec)
        scale = n / (law.ceiling - law.ground)
        p = (irwin_hall_cdf(n, (energy - law.ground) * scale)
             - irwin_hall_cdf(n, (energy - delta - law.ground) * scale))
        lp = min(0.0, _log_fraction(p))
        return TailEstimate(value=lp / n, std_error=0.0, method=tag,
                            zero_hits=lp == -math.inf, **common)
    _need_rng(rng, samples, tag)
    if tag == "mc-naive":
        return mc_tail(spec, energy, samples, rng, delta=delta, threads=threads)
    return tilted_tail(spec, energy, samples, rng, delta=delta, threads=threads)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    entropy: float
    bound: float
    gap: float
    std_error: float
    method: str

    def to_dict(self):
        return asdict(self)


def convergence_study(law, energy, n_list, method="auto", *, samples=None, rng=None,
                      k_B=1.0, threads=1):
    """Finite-n entropy against the n-independent Chernoff bound.

    Row ``i`` of a Monte Carlo study draws from stream ``rng.stream_id + i``.
    """
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError("n_list must be non-empty and strictly ascending", n_list)
    bound = k_B * chernoff_rate(law, energy)
    rows = []
    for i, n in enumerate(n_list):
        row_rng = None if rng is None else rng.substream(rng.stream_id + i)
        est = estimate_tail(BathSpec(law, n), energy, method, samples=samples, rng=row_rng,
                            threads=threads)
        s = est.entropy(k_B)
        rows.append(ConvergenceRow(n=n, entropy=s, bound=bound, gap=bound - s,
                                   std_error=k_B * est.std_error, method=est.method))
    return rows


@dataclass(frozen=True)
class ChebyshevResult:
    bound: float
    empirical: float
    std_error: float
    n: int
    delta: float
    samples: int


def chebyshev_bound(law, n, delta, samples, rng, *, threads=1):
    """Chebyshev bound ``var / (n delta**2)`` next to the sampled ``P[|avg - mean| >= delta]``."""
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}", delta)
    n = int(n)
    if n < 1 or samples < 1:
        raise DomainError("n and samples must be >= 1")
    mean, var = law.mean, law.variance
    bound = min(1.0, var / (n * delta * delta))

    def chunk(gen, size):
        avg = law.sample_sums(gen, n, size) / n
        return int(np.count_nonzero(np.abs(avg - mean) >= delta))

    hits = sum(map_chunks(chunk, samples, rng, threads=threads))
    p = hits / samples
    return ChebyshevResult(bound=bound, empirical=p, std_error=math.sqrt(p * (1 - p) / samples),
                           n=n, delta=float(delta), samples=int(samples))
