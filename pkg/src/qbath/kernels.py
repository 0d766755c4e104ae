"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The active backend is chosen once at import from the ``QBATH_BACKEND``
environment variable (``numba`` or ``numpy``). When unset, numba is used if it
imports cleanly. Both implementations are importable under ``numpy_impl`` and
``numba_impl`` so tests and benchmarks can compare them directly.
"""

import math
import os
from types import SimpleNamespace

import numpy as np

NEG_INF = -np.inf


# ----------------------------------------------------------------------------
# pure numpy
# ----------------------------------------------------------------------------

def _np_haar_energies(normals, energies):
    # normals: (count, r, 2) real and imaginary parts of r complex gaussians
    sq = normals[..., 0] ** 2 + normals[..., 1] ** 2
    return (sq @ energies) / sq.sum(axis=1)


def _np_lattice_log_pmf(steps, log_w, n, cap):
    logp = np.full(cap + 1, NEG_INF)
    logp[0] = 0.0
    kmax = int(steps.max())
    for j in range(n):
        top = min(cap, (j + 1) * kmax)
        new = np.full(cap + 1, NEG_INF)
        for k, lw in zip(steps, log_w):
            k = int(k)
            if k > top:
                continue
            np.logaddexp(new[k:top + 1], logp[:top + 1 - k] + lw, out=new[k:top + 1])
        logp = new
    return logp


def _np_bspline_basis(x, t):
    r = t.shape[0]
    x = np.asarray(x, dtype=np.float64)
    last = t[r - 1]
    # degree-0 pieces on the half-open intervals [t_i, t_{i+1})
    b = np.zeros((r - 1,) + x.shape)
    for i in range(r - 1):
        if t[i + 1] > t[i]:
            b[i] = (x >= t[i]) & (x < t[i + 1])
    for d in range(1, r - 1):
        for i in range(r - 1 - d):
            left = t[i + d] - t[i]
            right = t[i + d + 1] - t[i + 1]
            acc = np.zeros(x.shape)
            if left > 0.0:
                acc += (x - t[i]) / left * b[i]
            if right > 0.0:
                acc += (t[i + d + 1] - x) / right * b[i + 1]
            b[i] = acc
    out = b[0]
    return np.where(x == last, 0.0, out)


def _np_weighted_band_stats(sums, lo, hi, beta, center):
    hit = (sums >= lo) & (sums <= hi)
    w = np.exp(beta * (sums[hit] - center))
    return int(hit.sum()), float(w.sum()), float((w * w).sum())


numpy_impl = SimpleNamespace(
    name="numpy",
    haar_energies=_np_haar_energies,
    lattice_log_pmf=_np_lattice_log_pmf,
    bspline_basis=_np_bspline_basis,
    weighted_band_stats=_np_weighted_band_stats,
)


# ----------------------------------------------------------------------------
# numba
# ----------------------------------------------------------------------------

def _build_numba():
    from numba import njit

    opts = dict(cache=True, nogil=True)

    @njit(**opts)
    def logaddexp(a, b):
        if a == NEG_INF:
            return b
        if b == NEG_INF:
            return a
        if a > b:
            return a + math.log1p(math.exp(b - a))
        return b + math.log1p(math.exp(a - b))

    @njit(**opts)
    def haar_energies(normals, energies):
        count, r = normals.shape[0], normals.shape[1]
        out = np.empty(count)
        for s in range(count):
            num = 0.0
            den = 0.0
            for k in range(r):
                q = normals[s, k, 0] ** 2 + normals[s, k, 1] ** 2
                num += q * energies[k]
                den += q
            out[s] = num / den
        return out

    @njit(**opts)
    def lattice_log_pmf(steps, log_w, n, cap):
        logp = np.full(cap + 1, NEG_INF)
        new = np.empty(cap + 1)
        logp[0] = 0.0
        kmax = 0
        for k in steps:
            kmax = max(kmax, k)
        for j in range(n):
            top = min(cap, (j + 1) * kmax)
            new[:] = NEG_INF
            for a in range(steps.shape[0]):
                k = steps[a]
                lw = log_w[a]
                for s in range(k, top + 1):
                    prev = logp[s - k]
                    if prev != NEG_INF:
                        new[s] = logaddexp(new[s], prev + lw)
            logp, new = new, logp
        return logp

    @njit(**opts)
    def bspline_basis(x, t):
        r = t.shape[0]
        last = t[r - 1]
        out = np.empty(x.shape[0])
        b = np.empty(r - 1)
        for p in range(x.shape[0]):
            xv = x[p]
            if xv == last:
                out[p] = 0.0
                continue
            for i in range(r - 1):
                b[i] = 1.0 if (t[i + 1] > t[i] and t[i] <= xv < t[i + 1]) else 0.0
            for d in range(1, r - 1):
                for i in range(r - 1 - d):
                    left = t[i + d] - t[i]
                    right = t[i + d + 1] - t[i + 1]
                    acc = 0.0
                    if left > 0.0:
                        acc += (xv - t[i]) / left * b[i]
                    if right > 0.0:
                        acc += (t[i + d + 1] - xv) / right * b[i + 1]
                    b[i] = acc
            out[p] = b[0]
        return out

    @njit(**opts)
    def weighted_band_stats(sums, lo, hi, beta, center):
        hits = 0
        s1 = 0.0
        s2 = 0.0
        for v in sums:
            if lo <= v <= hi:
                w = math.exp(beta * (v - center))
                hits += 1
                s1 += w
                s2 += w * w
        return hits, s1, s2

    def bspline_entry(x, t):
        x = np.asarray(x, dtype=np.float64)
        return bspline_basis(np.ascontiguousarray(x.ravel()), t).reshape(x.shape)

    def pmf_entry(steps, log_w, n, cap):
        return lattice_log_pmf(np.asarray(steps, dtype=np.int64),
                               np.asarray(log_w, dtype=np.float64), int(n), int(cap))

    return SimpleNamespace(
        name="numba",
        haar_energies=haar_energies,
        lattice_log_pmf=pmf_entry,
        bspline_basis=bspline_entry,
        weighted_band_stats=weighted_band_stats,
    )


try:
    numba_impl = _build_numba()
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None


def _select():
    wanted = os.environ.get("QBATH_BACKEND", "").strip().lower()
    if wanted == "numpy" or numba_impl is None:
        return numpy_impl
    if wanted not in ("", "numba"):
        raise ValueError(f"QBATH_BACKEND must be 'numba' or 'numpy', got {wanted!r}")
    return numba_impl


active = _select()
BACKEND = active.name

haar_energies = active.haar_energies
lattice_log_pmf = active.lattice_log_pmf
bspline_basis = active.bspline_basis
weighted_band_stats = active.weighted_band_stats
