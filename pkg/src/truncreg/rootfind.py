"""Vectorized Brent root finding over many independent brackets.

Each lane runs the classical Brent iteration (inverse quadratic / secant
steps safeguarded by bisection). Lanes that converge are retired, so the
cost per iteration tracks the number of unfinished lanes.
"""

from __future__ import annotations

import numpy as np

from .errors import InternalInvariantError

_EPS = np.finfo(float).eps


def brent(func, lo, hi, f_lo=None, f_hi=None, xtol=1e-12, maxiter=200):
    """Find roots of ``func`` on the brackets ``[lo[i], hi[i]]``.

    Parameters
    ----------
    func : callable
        ``func(x, lanes)`` evaluates lane ``lanes[j]`` of the objective at
        ``x[j]``; both arguments are 1-d arrays of equal length.
    lo, hi : array_like
        Bracket endpoints; the function must change sign across each.
    f_lo, f_hi : array_like, optional
        Known function values at the endpoints. Useful when an endpoint is
        only reachable as a one-sided limit.
    xtol : float
        Absolute tolerance on the root location.
    maxiter : int

    Returns
    -------
    roots : ndarray
    iterations : ndarray of int
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float)).copy()
    hi = np.atleast_1d(np.asarray(hi, dtype=float)).copy()
    n = lo.size
    all_lanes = np.arange(n)
    fa = func(lo, all_lanes) if f_lo is None else np.broadcast_to(np.asarray(f_lo, float), (n,)).copy()
    fb = func(hi, all_lanes) if f_hi is None else np.broadcast_to(np.asarray(f_hi, float), (n,)).copy()

    bad = (np.sign(fa) * np.sign(fb)) > 0
    if np.any(bad):
        i = np.flatnonzero(bad)[0]
        raise InternalInvariantError(
            f"brent: no sign change on [{lo[i]}, {hi[i]}] (f={fa[i]}, {fb[i]})")

    roots = np.empty(n)
    iters = np.zeros(n, dtype=int)

    a, b = lo, hi
    c, fc = a.copy(), fa.copy()
    e = b - a
    d = e.copy()
    lanes = all_lanes

    for it in range(maxiter + 1):
        # keep b as the best estimate
        sw = np.abs(fc) < np.abs(fb)
        if np.any(sw):
            a = np.where(sw, b, a)
            fa = np.where(sw, fb, fa)
            b, c = np.where(sw, c, b), np.where(sw, a, c)
            fb, fc = np.where(sw, fc, fb), np.where(sw, fa, fc)

        tol = 2.0 * _EPS * np.abs(b) + xtol
        m = 0.5 * (c - b)
        done = (np.abs(m) <= tol) | (fb == 0.0)
        if it == maxiter:
            done[:] = True
        if np.any(done):
            roots[lanes[done]] = b[done]
            iters[lanes[done]] = it
            keep = ~done
            if not np.any(keep):
                break
            lanes = lanes[keep]
            a, b, c, d, e = a[keep], b[keep], c[keep], d[keep], e[keep]
            fa, fb, fc = fa[keep], fb[keep], fc[keep]
            tol, m = tol[keep], m[keep]

        with np.errstate(divide="ignore", invalid="ignore"):
            s = fb / fa
            secant = a == c
            q_ = fa / fc
            r = fb / fc
            p = np.where(secant, 2.0 * m * s,
                         s * (2.0 * m * q_ * (q_ - r) - (b - a) * (r - 1.0)))
            q = np.where(secant, 1.0 - s, (q_ - 1.0) * (r - 1.0) * (s - 1.0))
        q = np.where(p > 0.0, -q, q)
        p = np.abs(p)

        bisect = (np.abs(e) < tol) | (np.abs(fa) <= np.abs(fb))
        accept = (~bisect) & (2.0 * p < 3.0 * m * q - np.abs(tol * q)) & (p < np.abs(0.5 * e * q))
        with np.errstate(divide="ignore", invalid="ignore"):
            interp = p / q
        e = np.where(accept, d, m)
        d = np.where(accept, interp, m)

        a, fa = b, fb
        step = np.where(np.abs(d) > tol, d, np.where(m > 0.0, tol, -tol))
        b = b + step
        fb = func(b, lanes)

        same = ((fb > 0.0) & (fc > 0.0)) | ((fb <= 0.0) & (fc <= 0.0))
        if np.any(same):
            c = np.where(same, a, c)
            fc = np.where(same, fa, fc)
            e = np.where(same, b - a, e)
            d = np.where(same, e, d)

    return roots, iters
