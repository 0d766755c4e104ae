"""Probability laws of a single molecule's energy H(x).

A law is built from the molecule's spectrum and an a priori measure on its
pure-state space:

* :func:`dirac_law` puts mass ``multiplicity / r`` on each level.
* :func:`haar_law` is the law of ``sum_k w_k E_k`` with ``w`` flat on the
  probability simplex (one coordinate per Hilbert-space dimension). Its
  density is the normalised B-spline of degree ``r - 2`` whose knots are the
  eigenvalues repeated by multiplicity, evaluated with the Cox-de Boor
  recurrence.

Both law classes are immutable. Every law may carry an exponential tilt
``exp(-b (H - ground))`` applied on top of its base measure; tilted laws are
produced by :func:`qbath.thermo.esscher_tilt`.
"""

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import DomainError, InvalidProbeError
from .rng import map_chunks

NORMALIZATION_TOL = 1e-10
# exp(-745) underflows; mass beyond this many e-folds of the tilt is dropped
_TRUNCATION_EFOLDS = 745.0
# largest tilt-times-width of a quadrature piece
_PIECE_EFOLDS = 4.0
KNOT_MERGE = 1e-12
_SUM_BATCH = 1 << 22  # draws held in memory at once when summing
_PIECE_MARGIN = 1.05


def logsumexp(values, axis=None):
    values = np.asarray(values, dtype=np.float64)
    top = np.max(values, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(values - top), axis=axis, keepdims=True)) + top
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


@lru_cache(maxsize=None)
def _gauss_legendre(npts):
    x, w = np.polynomial.legendre.leggauss(npts)
    return x, w


# ----------------------------------------------------------------------------
# Spectrum
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    """Distinct energy levels of one molecule with their multiplicities."""

    levels: tuple

    def __post_init__(self):
        levels = tuple((float(e), int(m)) for e, m in self.levels)
        if not levels:
            raise DomainError("a spectrum needs at least one level")
        for e, m in levels:
            if not math.isfinite(e):
                raise DomainError(f"energy {e} is not finite", e)
            if m < 1:
                raise DomainError(f"multiplicity {m} must be >= 1", m)
        for (a, _), (b, _) in zip(levels, levels[1:]):
            if not b > a:
                raise DomainError("level energies must be strictly increasing", b)
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_eigenvalues(cls, values):
        """Group a list of eigenvalues (repeats allowed) into levels."""
        values = sorted(float(v) for v in values)
        levels = []
        for v in values:
            if levels and levels[-1][0] == v:
                levels[-1][1] += 1
            else:
                levels.append([v, 1])
        return cls(tuple(map(tuple, levels)))

    @classmethod
    def parse(cls, text):
        """Parse ``"0,1"`` or ``"0:1,1:2"`` (energy[:multiplicity] entries)."""
        pairs = []
        for item in str(text).split(","):
            item = item.strip()
            if not item:
                raise DomainError(f"empty entry in spectrum {text!r}", text)
            energy, _, mult = item.partition(":")
            try:
                pairs.append((float(energy), int(mult) if mult else 1))
            except ValueError:
                raise DomainError(f"cannot parse spectrum entry {item!r}", item) from None
        pairs.sort(key=lambda p: p[0])
        return cls(tuple(pairs))

    @property
    def energies(self):
        return np.array([e for e, _ in self.levels])

    @property
    def multiplicities(self):
        return np.array([m for _, m in self.levels], dtype=np.int64)

    @property
    def r(self):
        return int(sum(m for _, m in self.levels))

    @property
    def ground(self):
        return self.levels[0][0]

    @property
    def top(self):
        return self.levels[-1][0]

    @property
    def eigenvalues(self):
        """Eigenvalues repeated by multiplicity (one per Hilbert-space dimension)."""
        return np.repeat(self.energies, self.multiplicities)

    @property
    def trace_mean(self):
        return float(self.eigenvalues.mean())

    @property
    def trace_square_mean(self):
        return float((self.eigenvalues ** 2).mean())

    def text(self):
        return ",".join(f"{e!r}:{m}" for e, m in self.levels)


# ----------------------------------------------------------------------------
# laws
# ----------------------------------------------------------------------------

class EnergyLaw:
    """Common interface of discrete and continuous energy laws."""

    kind = "abstract"
    label = ""

    @property
    def is_degenerate(self):
        return self.ceiling == self.ground

    def describe(self):
        return self.label or self.kind

    def moments(self):
        return self.mean, self.variance


class DiscreteLaw(EnergyLaw):
    """Finitely many atoms; weights are stored as logarithms."""

    kind = "discrete"

    def __init__(self, energies, weights=None, *, log_weights=None, label=""):
        energies = np.asarray(energies, dtype=np.float64).ravel()
        if log_weights is None:
            weights = np.asarray(weights, dtype=np.float64).ravel()
            if weights.shape != energies.shape:
                raise DomainError("energies and weights differ in length")
            if np.any(~(weights > 0)):
                raise DomainError("atom weights must be strictly positive")
            total = weights.sum()
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise DomainError(f"atom weights sum to {total!r}, not 1", total)
            log_weights = np.log(weights)
        log_weights = np.asarray(log_weights, dtype=np.float64).ravel()
        if energies.size == 0 or log_weights.shape != energies.shape:
            raise DomainError("a discrete law needs matching, non-empty atoms")
        if not np.all(np.isfinite(energies)):
            raise DomainError("atom energies must be finite")
        order = np.argsort(energies, kind="stable")
        energies, log_weights = energies[order], log_weights[order]
        # merge coincident atoms
        uniq, start = np.unique(energies, return_index=True)
        if uniq.size != energies.size:
            bounds = list(start) + [energies.size]
            log_weights = np.array([logsumexp(log_weights[a:b]) for a, b in zip(bounds, bounds[1:])])
            energies = uniq
        log_weights = log_weights - logsumexp(log_weights)
        self.energies = energies
        self.log_weights = log_weights
        self.energies.setflags(write=False)
        self.log_weights.setflags(write=False)
        self.label = label

    @property
    def weights(self):
        return np.exp(self.log_weights)

    @property
    def ground(self):
        return float(self.energies[0])

    @property
    def ceiling(self):
        return float(self.energies[-1])

    @property
    def mean(self):
        g = self.ground
        return g + float(self.weights @ (self.energies - g))

    @property
    def variance(self):
        y = self.energies - self.ground
        w = self.weights
        m = float(w @ y)
        return float(w @ (y - m) ** 2)

    def cdf(self, energy):
        """P[H <= energy]."""
        if energy >= self.ceiling:
            return 1.0
        k = int(np.searchsorted(self.energies, energy, side="right"))
        if k == 0:
            return 0.0
        return min(1.0, float(np.exp(logsumexp(self.log_weights[:k]))))

    def prob_below(self, energy):
        """P[H < energy]."""
        k = int(np.searchsorted(self.energies, energy, side="left"))
        if k == 0:
            return 0.0
        return min(1.0, float(np.exp(logsumexp(self.log_weights[:k]))))

    def sample(self, gen, size):
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, gen.random(size), side="right")
        return self.energies[np.minimum(idx, self.energies.size - 1)]

    def sample_sums(self, gen, n, size):
        """Totals of ``n`` iid energies, drawn exactly via multinomial counts."""
        p = self.weights
        p = p / p.sum()
        counts = gen.multinomial(n, p, size=size)
        return counts @ self.energies

    def tilted(self, beta):
        lw = self.log_weights - beta * (self.energies - self.ground)
        return DiscreteLaw(self.energies, log_weights=lw, label=self.label)

    def __repr__(self):
        atoms = ", ".join(f"{e:g}: {w:.6g}" for e, w in zip(self.energies, self.weights))
        return f"DiscreteLaw({{{atoms}}})"


class ContinuousLaw(EnergyLaw):
    """A density on ``[knots[0], knots[-1]]`` that is smooth between knots.

    Parameters
    ----------
    knots : array_like
        Strictly increasing breakpoints; the density may be non-smooth only here.
    density : callable
        Vectorised base density (normalised to 1 on the knot range).
    npts : int
        Gauss-Legendre order per quadrature piece. Integrals of polynomial
        densities of degree ``< 2 * npts - 2`` against ``1, x, x**2`` are exact.
    tilt : float
        Non-negative exponential tilt applied on top of the base density.
    spectrum : Spectrum, optional
        Set for Haar laws; untilted draws then use the complex-gaussian sampler.
    """

    kind = "continuous"

    def __init__(self, knots, density, *, npts=16, tilt=0.0, spectrum=None, label="",
                 _checked=False):
        knots = np.asarray(knots, dtype=np.float64).ravel()
        if knots.size < 2 or np.any(np.diff(knots) <= 0):
            raise DomainError("continuous law knots must be strictly increasing")
        if tilt < 0 or not math.isfinite(tilt):
            raise DomainError(f"tilt must be finite and >= 0, got {tilt}", tilt)
        self.knots = knots
        self.knots.setflags(write=False)
        self.density = density
        self.npts = int(npts)
        self.tilt = float(tilt)
        self.spectrum = spectrum
        self.label = label
        if not _checked:
            x, logw, _ = self._nodes(0.0)
            total = float(np.exp(logsumexp(logw)))
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise DomainError(f"density integrates to {total!r}, not 1", total)
        self._stats_cache = {}

    @property
    def ground(self):
        return float(self.knots[0])

    @property
    def ceiling(self):
        return float(self.knots[-1])

    # -- quadrature ---------------------------------------------------------

    def _pieces(self, b, min_per_segment=1):
        g = self.ground
        reach = np.inf if b <= 0 else g + _TRUNCATION_EFOLDS / b
        lo, hi = [], []
        for a, c in zip(self.knots[:-1], self.knots[1:]):
            if a >= reach:
                break
            c = min(c, reach)
            m = max(min_per_segment, math.ceil(b * (c - a) / _PIECE_EFOLDS))
            edges = np.linspace(a, c, m + 1)
            lo.append(edges[:-1])
            hi.append(edges[1:])
        return np.concatenate(lo), np.concatenate(hi)

    def _base_density(self, x):
        return np.maximum(self.density(x), 0.0)

    def _nodes(self, b, min_per_segment=1, upto=None):
        """Quadrature nodes and log-weights of ``density * exp(-b (x - ground))``.

        Returns ``(x, logw, piece_lo_hi)`` with nodes grouped ``npts`` per piece.
        """
        lo, hi = self._pieces(b, min_per_segment)
        if upto is not None:
            keep = lo < upto
            lo, hi = lo[keep], np.minimum(hi[keep], upto)
        t, w = _gauss_legendre(self.npts)
        half = 0.5 * (hi - lo)
        x = (0.5 * (hi + lo))[:, None] + half[:, None] * t[None, :]
        q = half[:, None] * w[None, :]
        p = self._base_density(x)
        with np.errstate(divide="ignore"):
            logw = np.log(q * p) - b * (x - self.ground)
        return x, logw, (lo, hi)

    def log_mass(self, b):
        """``log int density(x) exp(-b (x - ground)) dx``; exactly 0 at ``b = 0``."""
        if b == 0.0:
            return 0.0
        _, logw, _ = self._nodes(b)
        return logsumexp(logw)

    def tilted_stats(self, b):
        """(log mass, mean of ``x - ground``, variance) under tilt ``b``."""
        if b in self._stats_cache:
            return self._stats_cache[b]
        x, logw, _ = self._nodes(b)
        lm = logsumexp(logw)
        p = np.exp(logw - lm)
        y = x - self.ground
        m = float(np.sum(p * y))
        v = float(np.sum(p * (y - m) ** 2))
        out = (0.0 if b == 0.0 else lm, m, v)
        if len(self._stats_cache) < 64:
            self._stats_cache[b] = out
        return out

    # -- law interface ------------------------------------------------------

    @property
    def mean(self):
        return self.ground + self.tilted_stats(self.tilt)[1]

    @property
    def variance(self):
        return self.tilted_stats(self.tilt)[2]

    def cdf(self, energy):
        if energy >= self.ceiling:
            return 1.0
        if energy <= self.ground:
            return 0.0
        _, logw, _ = self._nodes(self.tilt, upto=energy)
        val = float(np.exp(logsumexp(logw) - self.log_mass(self.tilt)))
        return min(1.0, max(0.0, val))

    def prob_below(self, energy):
        return self.cdf(energy)

    def density_at(self, x):
        """Density of the (tilted) law at ``x``."""
        x = np.asarray(x, dtype=np.float64)
        base = np.where((x >= self.ground) & (x <= self.ceiling), self._base_density(x), 0.0)
        return base * np.exp(-self.tilt * (x - self.ground) - self.log_mass(self.tilt))

    def sample(self, gen, size):
        if self.tilt == 0.0 and self.spectrum is not None:
            return _haar_draws(gen, size, self.spectrum)
        return self._rejection_sample(gen, size)

    def sample_sums(self, gen, n, size):
        rows = max(1, _SUM_BATCH // n)
        out = np.empty(size)
        for start in range(0, size, rows):
            m = min(rows, size - start)
            out[start:start + m] = self.sample(gen, n * m).reshape(m, n).sum(axis=1)
        return out

    def _rejection_sample(self, gen, size):
        b = self.tilt
        x, logw, (lo, hi) = self._nodes(b, min_per_segment=16)
        piece_log = logsumexp(logw, axis=1)
        probs = np.exp(piece_log - logsumexp(piece_log))
        cum = np.cumsum(probs)
        cum[-1] = 1.0
        edge = np.maximum(self._base_density(lo), self._base_density(np.nextafter(hi, lo)))
        bound = np.maximum(self._base_density(x).max(axis=1), edge) * _PIECE_MARGIN
        idx = np.minimum(np.searchsorted(cum, gen.random(size), side="right"), lo.size - 1)
        out = np.empty(size)
        pending = np.arange(size)
        while pending.size:
            k = idx[pending]
            a, h = lo[k], hi[k] - lo[k]
            u = gen.random(pending.size)
            v = gen.random(pending.size)
            if b > 0:
                e = np.expm1(-b * h)
                flat = b * h < 1e-12
                cand = np.where(flat, a + u * h, a - np.log1p(u * e) / b)
            else:
                cand = a + u * h
            cand = np.minimum(cand, np.nextafter(hi[k], lo[k]))
            ok = v * bound[k] <= self._base_density(cand)
            out[pending[ok]] = cand[ok]
            pending = pending[~ok]
        return out

    def tilted(self, beta):
        return ContinuousLaw(self.knots, self.density, npts=self.npts, tilt=self.tilt + beta,
                             spectrum=self.spectrum, label=self.label, _checked=True)

    def __repr__(self):
        return (f"ContinuousLaw(support=[{self.ground:g}, {self.ceiling:g}], "
                f"knots={self.knots.size}, tilt={self.tilt:g})")


class _BSplineDensity:
    """Normalised B-spline ``(r - 1) / (t_last - t_first) * B(x | t)``."""

    def __init__(self, knots):
        self.knots = np.ascontiguousarray(knots, dtype=np.float64)
        self.scale = (self.knots.size - 1) / (self.knots[-1] - self.knots[0])

    def __call__(self, x):
        return self.scale * kernels.bspline_basis(x, self.knots)


# ----------------------------------------------------------------------------
# constructors
# ----------------------------------------------------------------------------

def dirac_law(spectrum):
    """Mass ``multiplicity / r`` on every level."""
    m = spectrum.multiplicities
    return DiscreteLaw(spectrum.energies, m / m.sum(), label=f"dirac[{spectrum.text()}]")


def haar_law(spectrum):
    """Law of H under the unitarily invariant measure on pure states.

    ``r = 1`` (or a single level) gives a point mass.
    """
    label = f"haar[{spectrum.text()}]"
    if len(spectrum.levels) == 1:
        return DiscreteLaw([spectrum.ground], [1.0], label=label)
    knots = spectrum.eigenvalues
    # levels closer than KNOT_MERGE * width are merged; the law moves by O(gap / width)
    close = np.diff(knots) < KNOT_MERGE * (knots[-1] - knots[0])
    for i in np.flatnonzero(close):
        knots[i + 1] = knots[i]
    return ContinuousLaw(np.unique(knots), _BSplineDensity(knots),
                         npts=max(16, spectrum.r), spectrum=spectrum, label=label)


def uniform_law(lo, hi, label=""):
    """Flat density on ``[lo, hi]``; equals the two-level Haar law."""
    width = float(hi) - float(lo)
    if not width > 0:
        raise DomainError("uniform law needs hi > lo")

    def density(x):
        return np.full(np.shape(x), 1.0 / width)

    return ContinuousLaw([lo, hi], density, label=label or f"uniform[{lo:g},{hi:g}]")


def point_mass(energy, label=""):
    return DiscreteLaw([energy], [1.0], label=label or f"point[{energy:g}]")


def load_custom_law(path):
    """Discrete law from JSON: ``[{"energy": e, "weight": w}, ...]`` or ``{"atoms": [...]}``."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    atoms = data["atoms"] if isinstance(data, dict) else data
    try:
        energies = [float(a["energy"]) for a in atoms]
        weights = [float(a["weight"]) for a in atoms]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed custom law in {path}: {exc}", str(path)) from None
    return DiscreteLaw(energies, weights, label=f"custom[{path}]")


# ----------------------------------------------------------------------------
# sampling
# ----------------------------------------------------------------------------

def _haar_draws(gen, size, spectrum):
    if len(spectrum.levels) == 1:
        return np.full(size, spectrum.ground)
    normals = gen.standard_normal((size, spectrum.r, 2))
    return kernels.haar_energies(normals, spectrum.eigenvalues)


def sample_haar_energy(spectrum, rng, count, *, threads=1):
    """``count`` iid energies of Haar-random pure states.

    Each draw normalises ``r`` independent complex gaussians to a state vector
    and returns its energy expectation. Chunked by :func:`qbath.rng.map_chunks`.
    """
    if count <= 0:
        return np.empty(0)
    parts = map_chunks(lambda gen, size: _haar_draws(gen, size, spectrum), count, rng,
                       threads=threads)
    return np.concatenate(parts)


# ----------------------------------------------------------------------------
# interrogation
# ----------------------------------------------------------------------------

def law_moments(law):
    return law.mean, law.variance


def law_cdf(law, energy):
    return law.cdf(energy)


@dataclass(frozen=True)
class CompletenessReport:
    complete: bool
    witnesses: tuple  # (epsilon, P[H < epsilon]) pairs

    def to_dict(self):
        return {"complete": self.complete,
                "witnesses": [{"epsilon": e, "probability": p} for e, p in self.witnesses]}


def default_probes(spectrum):
    width = spectrum.top - spectrum.ground
    if width <= 0:
        return []
    return [spectrum.ground + width * 10.0 ** -k for k in range(1, 10)]


def completeness_check(spectrum, law, epsilons=()):
    """Probe ``P[H < eps] > 0`` above the spectrum's ground energy.

    A finite set of probes cannot prove completeness; the report lists every
    witness so a failure can be located. The default ladder
    ``E_- + (E_+ - E_-) * 10**-k`` for ``k = 1..9`` is always appended.
    """
    probes = [float(e) for e in epsilons]
    for eps in probes:
        if not eps > spectrum.ground:
            raise InvalidProbeError(f"probe {eps} is not above the ground energy "
                                    f"{spectrum.ground}", eps)
    probes += default_probes(spectrum)
    witnesses = tuple((eps, law.prob_below(eps)) for eps in probes)
    return CompletenessReport(all(p > 0 for _, p in witnesses), witnesses)
