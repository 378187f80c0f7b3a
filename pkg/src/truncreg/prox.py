"""Exact global minimizers of the per-pixel subproblem

    chi(s) = min(rho(s), rho(tau)) + beta/2 * (s - t)^2,   s >= 0.

The objective is split into ``chi1 = rho(s) + beta/2 (s-t)^2`` on ``[0, tau]``
and ``chi2 = rho(tau) + beta/2 (s-t)^2`` on ``[tau, inf)``. The minimizer of
``chi2`` is ``max(t, tau)``. ``chi1`` is concave on ``[0, s_L]`` and strictly
convex beyond, so its minimizer over ``[0, tau]`` is 0 or the clipped unique
stationary point in ``[s_L, t]``. SCAD is not of that shape and is handled by
enumerating its three pieces.

Array routines (``prox_magnitude``, ``prox_field``) are what the image
solver calls; the scalar wrappers return a :class:`ProxResult`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, UnsupportedFamilyError
from .potentials import Kind, PotentialFamily, TruncatedPotential, as_truncated
from .rootfind import brent

TIE_TOL = 1e-12
ROOT_XTOL = 1e-12
ROOT_MAXITER = 200
_TINY = np.finfo(float).tiny


class Branch(enum.IntEnum):
    CHI1 = 0
    CHI2 = 1
    TIE = 2


@dataclass(frozen=True)
class ProxProblem:
    reg: TruncatedPotential
    beta: float
    t: float

    def __post_init__(self):
        object.__setattr__(self, "reg", as_truncated(self.reg))
        if not self.beta > 0:
            raise ConfigurationError(f"beta must be positive, got {self.beta}")
        if not self.t >= 0:
            raise ConfigurationError(f"t must be nonnegative, got {self.t}")

    def chi(self, s):
        return chi(self.reg, self.beta, self.t, s)


@dataclass(frozen=True)
class ProxResult:
    s_star: float
    value: float
    branch: Branch
    tie: Optional[float] = None


def chi(reg, beta, t, s):
    """The scalar objective ``min(rho(s), rho(tau)) + beta/2 (s - t)^2``."""
    reg = as_truncated(reg)
    s = np.asarray(s, dtype=float)
    return reg.eval(s) + 0.5 * beta * (s - t) ** 2


def lower_bound_sL(family: PotentialFamily, beta: float) -> float:
    """``inf{s > 0 : rho''(s) > -beta}`` for families with monotone curvature."""
    if not beta > 0:
        raise ConfigurationError(f"beta must be positive, got {beta}")
    k = family.kind
    if k in (Kind.L1, Kind.L2):
        return 0.0
    if k is Kind.LP:
        p = family.p
        return (p * (1.0 - p) / beta) ** (1.0 / (2.0 - p))
    if k is Kind.LOG:
        return max(0.0, 1.0 / math.sqrt(beta) - 1.0 / family.theta)
    if k is Kind.FRAC:
        th = family.theta
        return max(0.0, (2.0 / (th * beta)) ** (1.0 / 3.0) - 1.0 / th)
    if family.satisfies_as4:
        return lower_bound_bisection(family, beta)
    raise UnsupportedFamilyError(f"no second-order lower bound for {k.value}")


def lower_bound_bisection(family: PotentialFamily, beta: float,
                          lo: float = 1e-12, hi: float = 1e6, iters: int = 200) -> float:
    """Locate ``rho''(s) = -beta`` by bisection; valid when rho'' is increasing."""
    if family.second_deriv(lo) > -beta:
        return 0.0
    if family.second_deriv(hi) <= -beta:
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if family.second_deriv(mid) > -beta:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * hi:
            break
    return hi


def _check_supported(reg: TruncatedPotential):
    k = reg.kind
    if k is Kind.SCAD:
        return
    if k not in (Kind.L1, Kind.LP, Kind.LOG, Kind.FRAC, Kind.L2):
        raise UnsupportedFamilyError(f"no exact prox for {k.value}")


def _stationary_point(base: PotentialFamily, beta: float, t: np.ndarray, lo: float,
                      f_lo: np.ndarray) -> np.ndarray:
    """Unique root of ``rho'(s) + beta (s - t)`` on ``[lo, t]`` (lane-wise)."""
    k = base.kind
    if k is Kind.L1:
        return t - 1.0 / beta
    if k is Kind.L2:
        return beta * t / (1.0 + beta)

    def dchi1(s, lanes):
        s = np.maximum(s, _TINY)
        return base.deriv(s) + beta * (s - t[lanes])

    f_hi = base.deriv(t)  # chi1'(t) = rho'(t) >= 0
    roots, _ = brent(dchi1, np.full(t.shape, lo), t, f_lo=f_lo, f_hi=f_hi,
                     xtol=ROOT_XTOL, maxiter=ROOT_MAXITER)
    return roots


def minimize_chi1_array(reg, beta: float, t):
    """Global minimizer of ``chi1`` over ``[0, tau]`` for each entry of ``t``.

    Returns ``(s1, value)`` arrays.
    """
    reg = as_truncated(reg)
    _check_supported(reg)
    if reg.kind is Kind.SCAD:
        raise UnsupportedFamilyError("SCAD is minimized piecewise; use prox_scad")
    base, tau = reg.base, reg.tau
    t = np.asarray(t, dtype=float)
    shape = t.shape
    t = t.ravel()

    s_lower = lower_bound_sL(base, beta)
    if s_lower == 0.0:
        d0 = base.deriv_at_zero_plus
        slope = d0 - beta * t  # inf stays inf
    else:
        slope = base.deriv(s_lower) + beta * (s_lower - t)

    s1 = np.zeros_like(t)
    v1 = 0.5 * beta * t * t
    need = slope < 0.0
    if np.any(need):
        tn = t[need]
        s_bar = _stationary_point(base, beta, tn, s_lower, slope[need])
        cand = np.minimum(s_bar, tau)
        v_cand = base.eval(cand) + 0.5 * beta * (cand - tn) ** 2
        better = v_cand < v1[need]  # equal values keep s = 0
        idx = np.flatnonzero(need)[better]
        s1[idx] = cand[better]
        v1[idx] = v_cand[better]
    return s1.reshape(shape), v1.reshape(shape)


def prox_scad_array(beta: float, theta: float, a: float, t):
    """Global minimizer of ``scad(s) + beta/2 (s-t)^2`` over ``s >= 0``.

    Each of the three pieces has a closed-form constrained minimizer; all of
    them plus the breakpoints are evaluated and the best is kept.
    """
    fam = PotentialFamily(Kind.SCAD, theta=theta, a=a)
    t = np.asarray(t, dtype=float)
    th, at = theta, a * theta
    cands = [
        np.zeros_like(t),
        np.full_like(t, th),
        np.full_like(t, at),
        np.clip(t - th / beta, 0.0, th),
        np.maximum(t, at),
    ]
    curv = beta - 1.0 / (a - 1.0)
    if curv > 0:
        mid = (beta * t * (a - 1.0) - at) / (beta * (a - 1.0) - 1.0)
        cands.append(np.clip(mid, th, at))
    cands = np.stack(cands)
    vals = fam.eval(cands) + 0.5 * beta * (cands - t) ** 2
    best = vals.min(axis=0)
    # smallest s among (numerically) equal minima
    masked = np.where(vals <= best + TIE_TOL * np.maximum(1.0, np.abs(best)), cands, np.inf)
    s = masked.min(axis=0)
    v = fam.eval(s) + 0.5 * beta * (s - t) ** 2
    return s, v


def prox_magnitude(reg, beta: float, t, return_branch: bool = False):
    """Minimize ``chi`` for every entry of the nonnegative array ``t``.

    Returns ``s`` (and, if requested, ``(value, branch, tie)`` where ``tie``
    holds the second minimizer for tied entries and nan elsewhere).
    """
    reg = as_truncated(reg)
    _check_supported(reg)
    if not beta > 0:
        raise ConfigurationError(f"beta must be positive, got {beta}")
    t = np.asarray(t, dtype=float)

    if reg.kind is Kind.SCAD:
        # truncating SCAD above a*theta changes nothing; below it is unsupported
        if reg.truncated and reg.tau < reg.base.a * reg.base.theta:
            raise UnsupportedFamilyError("truncated SCAD below a*theta is not supported")
        s, v = prox_scad_array(beta, reg.base.theta, reg.base.a, t)
        if not return_branch:
            return s
        branch = np.where(s >= reg.base.a * reg.base.theta, Branch.CHI2, Branch.CHI1)
        return s, v, branch.astype(int), np.full(t.shape, np.nan)

    s1, v1 = minimize_chi1_array(reg, beta, t)
    if not reg.truncated:
        if not return_branch:
            return s1
        return s1, v1, np.full(t.shape, int(Branch.CHI1)), np.full(t.shape, np.nan)

    tau = reg.tau
    s2 = np.maximum(t, tau)
    v2 = reg.cap + 0.5 * beta * (s2 - t) ** 2
    diff = v1 - v2
    tie = np.abs(diff) <= TIE_TOL
    take2 = (diff > 0) & ~tie
    s = np.where(take2, s2, s1)
    if not return_branch:
        return s
    v = np.where(take2, v2, v1)
    branch = np.where(tie, Branch.TIE, np.where(take2, Branch.CHI2, Branch.CHI1)).astype(int)
    return s, v, branch, np.where(tie, s2, np.nan)


def minimize_chi1(problem: ProxProblem):
    """Scalar form of :func:`minimize_chi1_array`; returns ``(s1, value)``."""
    s1, v1 = minimize_chi1_array(problem.reg, problem.beta, np.array([problem.t]))
    return float(s1[0]), float(v1[0])


def prox_scalar(problem: ProxProblem) -> ProxResult:
    s, v, br, tie = prox_magnitude(problem.reg, problem.beta, np.array([problem.t]),
                                   return_branch=True)
    tie_val = None if np.isnan(tie[0]) else float(tie[0])
    return ProxResult(float(s[0]), float(v[0]), Branch(int(br[0])), tie_val)


def prox_scad(beta: float, theta: float, a: float, t: float) -> ProxResult:
    if not beta > 0 or t < 0:
        raise ConfigurationError("prox_scad needs beta > 0 and t >= 0")
    s, v = prox_scad_array(beta, theta, a, np.array([t]))
    s0 = float(s[0])
    branch = Branch.CHI2 if s0 >= a * theta else Branch.CHI1
    return ProxResult(s0, float(v[0]), branch)


def prox_vector(reg, beta: float, w):
    """Minimize ``min(rho(|z|), rho(tau)) + beta/2 |z - w|^2`` over ``z`` in R^2.

    The minimizer is parallel to ``w``. Returns ``(z, tied)``.
    """
    w = np.asarray(w, dtype=float)
    norm = float(np.hypot(w[0], w[1]))
    if norm == 0.0:
        return np.zeros(2), False
    res = prox_scalar(ProxProblem(reg, beta, norm))
    # w / |w| is exact when one component vanishes, which keeps 1-row fields bit-identical
    return res.s_star * (w / norm), res.tie is not None


def prox_field(reg, beta: float, wx: np.ndarray, wy: np.ndarray):
    """Isotropic prox applied at every pixel of the vector field ``(wx, wy)``."""
    norm = np.hypot(wx, wy)
    s = prox_magnitude(reg, beta, norm)
    safe = np.where(norm > 0, norm, 1.0)
    return s * (wx / safe), s * (wy / safe)


def prox_signed(reg, beta: float, w: np.ndarray) -> np.ndarray:
    """Scalar prox of ``rho(|x|)`` applied entrywise; the sign of ``w`` is kept."""
    return np.sign(w) * prox_magnitude(reg, beta, np.abs(w))
