"""Potential functions applied to gradient magnitudes, and their truncations.

Every family is nondecreasing on [0, inf) with a strict minimum at 0. The
truncated variant ``rho(min(s, tau))`` is flat beyond ``tau``.

All evaluators are vectorized: they accept scalars or numpy arrays and return
the same shape. ``math.inf`` stands for "no truncation" and for an unbounded
one-sided derivative at zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ConfigurationError, DomainError

ArrayLike = Union[float, np.ndarray]

__all__ = [
    "Kind",
    "PotentialFamily",
    "TruncatedPotential",
    "SubadditivityReport",
    "truncate",
    "check_subadditivity",
    "l1",
    "lp",
    "log",
    "frac",
    "zero_one",
    "logp",
    "fracp",
    "scad",
    "quadratic",
]


class Kind(str, enum.Enum):
    L1 = "l1"
    LP = "lp"
    LOG = "log"
    FRAC = "frac"
    ZERO_ONE = "zeroone"
    LOGP = "logp"
    FRACP = "fracp"
    SCAD = "scad"
    # truncated quadratic is used in experiments but is not subadditive
    L2 = "l2"


_NEEDS_P = {Kind.LP, Kind.LOGP, Kind.FRACP}
_NEEDS_THETA = {Kind.LOG, Kind.FRAC, Kind.LOGP, Kind.FRACP, Kind.SCAD}

# Families whose second derivative is either identically 0 or negative and
# strictly increasing on (0, inf).
_CONCAVE_REGULAR = {Kind.L1, Kind.LP, Kind.LOG, Kind.FRAC}


@dataclass(frozen=True)
class PotentialFamily:
    """One of the scalar potentials ``rho: [0, inf) -> [0, inf)``.

    Parameters
    ----------
    kind : Kind
    p : float, optional
        Exponent in (0, 1); required by ``lp``, ``logp`` and ``fracp``.
    theta : float, optional
        Positive scale; required by ``log``, ``frac``, ``logp``, ``fracp``
        and ``scad``.
    a : float, optional
        SCAD shape parameter, must exceed 2. Defaults to 3.7.
    """

    kind: Kind
    p: Optional[float] = None
    theta: Optional[float] = None
    a: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        k = self.kind
        if k in _NEEDS_P:
            if self.p is None or not 0.0 < self.p < 1.0:
                raise ConfigurationError(f"{k.value}: p must lie in (0, 1), got {self.p}")
        elif self.p is not None:
            raise ConfigurationError(f"{k.value}: takes no p parameter")
        if k in _NEEDS_THETA:
            if self.theta is None or not (self.theta > 0.0 and math.isfinite(self.theta)):
                raise ConfigurationError(f"{k.value}: theta must be positive, got {self.theta}")
        elif self.theta is not None:
            raise ConfigurationError(f"{k.value}: takes no theta parameter")
        if k is Kind.SCAD:
            if self.a is None:
                object.__setattr__(self, "a", 3.7)
            elif not self.a > 2.0:
                raise ConfigurationError(f"scad: a must exceed 2, got {self.a}")
        elif self.a is not None:
            raise ConfigurationError(f"{k.value}: takes no a parameter")

    # -- classification ---------------------------------------------------

    @property
    def satisfies_as4(self) -> bool:
        """True for the families with monotone nonpositive curvature."""
        return self.kind in _CONCAVE_REGULAR

    @property
    def differentiable(self) -> bool:
        return self.kind is not Kind.ZERO_ONE

    # -- evaluation -------------------------------------------------------

    def __call__(self, s: ArrayLike) -> ArrayLike:
        return self.eval(s)

    def eval(self, s: ArrayLike) -> ArrayLike:
        s = np.asarray(s, dtype=float)
        k = self.kind
        if k is Kind.L1:
            out = s.copy()
        elif k is Kind.LP:
            out = np.power(s, self.p)
        elif k is Kind.LOG:
            out = np.log1p(self.theta * s)
        elif k is Kind.FRAC:
            ts = self.theta * s
            out = ts / (1.0 + ts)
        elif k is Kind.ZERO_ONE:
            out = (s > 0).astype(float)
        elif k is Kind.LOGP:
            out = np.log1p(self.theta * np.power(s, self.p))
        elif k is Kind.FRACP:
            g = self.theta * np.power(s, self.p)
            out = g / (1.0 + g)
        elif k is Kind.SCAD:
            th, a = self.theta, self.a
            tail = 0.5 * (a + 1.0) * th * th
            # the middle piece peaks at the tail value; the cap absorbs round-off
            mid = np.minimum((-s * s - th * th + 2.0 * a * th * s) / (2.0 * (a - 1.0)), tail)
            out = np.where(s <= th, th * s, np.where(s < a * th, mid, tail))
        else:  # L2
            out = 0.5 * s * s
        return out if out.ndim else float(out)

    def _check_positive(self, s: np.ndarray, what: str):
        if not self.differentiable:
            raise DomainError(f"{self.kind.value} has no derivative")
        if np.any(~(s > 0)):
            raise DomainError(f"{what} requires s > 0; use deriv_at_zero_plus for the limit")

    def deriv(self, s: ArrayLike) -> ArrayLike:
        """First derivative on (0, inf). SCAD breakpoints take the left piece."""
        s = np.asarray(s, dtype=float)
        self._check_positive(s, "deriv")
        k = self.kind
        if k is Kind.L1:
            out = np.ones_like(s)
        elif k is Kind.LP:
            out = self.p * np.power(s, self.p - 1.0)
        elif k is Kind.LOG:
            out = self.theta / (self.theta * s + 1.0)
        elif k is Kind.FRAC:
            out = self.theta / (1.0 + self.theta * s) ** 2
        elif k is Kind.LOGP:
            g = self.theta * np.power(s, self.p)
            out = self.theta * self.p * np.power(s, self.p - 1.0) / (1.0 + g)
        elif k is Kind.FRACP:
            g = self.theta * np.power(s, self.p)
            out = self.theta * self.p * np.power(s, self.p - 1.0) / (1.0 + g) ** 2
        elif k is Kind.SCAD:
            th, a = self.theta, self.a
            out = np.where(s <= th, th, np.where(s <= a * th, (a * th - s) / (a - 1.0), 0.0))
        else:
            out = s.copy()
        return out if out.ndim else float(out)

    def second_deriv(self, s: ArrayLike) -> ArrayLike:
        s = np.asarray(s, dtype=float)
        self._check_positive(s, "second_deriv")
        k = self.kind
        if k is Kind.L1:
            out = np.zeros_like(s)
        elif k is Kind.LP:
            out = self.p * (self.p - 1.0) * np.power(s, self.p - 2.0)
        elif k is Kind.LOG:
            out = -self.theta**2 / (self.theta * s + 1.0) ** 2
        elif k is Kind.FRAC:
            out = -2.0 * self.theta**2 / (1.0 + self.theta * s) ** 3
        elif k in (Kind.LOGP, Kind.FRACP):
            th, p = self.theta, self.p
            g = th * np.power(s, p)
            g1 = th * p * np.power(s, p - 1.0)
            g2 = th * p * (p - 1.0) * np.power(s, p - 2.0)
            if k is Kind.LOGP:
                out = g2 / (1.0 + g) - g1 * g1 / (1.0 + g) ** 2
            else:
                out = g2 / (1.0 + g) ** 2 - 2.0 * g1 * g1 / (1.0 + g) ** 3
        elif k is Kind.SCAD:
            th, a = self.theta, self.a
            out = np.where((s > th) & (s <= a * th), -1.0 / (a - 1.0), 0.0)
        else:
            out = np.ones_like(s)
        return out if out.ndim else float(out)

    @property
    def deriv_at_zero_plus(self) -> float:
        """``lim_{s -> 0+} rho'(s)``; ``math.inf`` when unbounded."""
        k = self.kind
        if k is Kind.L1:
            return 1.0
        if k in (Kind.LOG, Kind.FRAC, Kind.SCAD):
            return float(self.theta)
        if k is Kind.L2:
            return 0.0
        return math.inf

    def label(self) -> str:
        parts = [self.kind.value]
        if self.p is not None:
            parts.append(f"p={self.p:g}")
        if self.theta is not None:
            parts.append(f"theta={self.theta:g}")
        if self.kind is Kind.SCAD:
            parts.append(f"a={self.a:g}")
        return ",".join(parts)


@dataclass(frozen=True)
class TruncatedPotential:
    """``rho(min(s, tau))`` for a base family; ``tau = inf`` is the base itself."""

    base: PotentialFamily
    tau: float = math.inf

    def __post_init__(self):
        tau = float(self.tau)
        if math.isnan(tau) or tau <= 0.0:
            raise ConfigurationError(f"tau must be positive or inf, got {self.tau}")
        object.__setattr__(self, "tau", tau)

    @property
    def truncated(self) -> bool:
        return math.isfinite(self.tau)

    @property
    def kind(self) -> Kind:
        return self.base.kind

    @property
    def cap(self) -> float:
        """Value of the flat tail, ``rho(tau)``; inf when untruncated."""
        return float(self.base.eval(self.tau)) if self.truncated else math.inf

    def __call__(self, s: ArrayLike) -> ArrayLike:
        return self.eval(s)

    def eval(self, s: ArrayLike) -> ArrayLike:
        if not self.truncated:
            return self.base.eval(s)
        return self.base.eval(np.minimum(s, self.tau))

    def deriv(self, s: ArrayLike) -> ArrayLike:
        """Derivative; zero on (tau, inf), left derivative at exactly tau."""
        if not self.truncated:
            return self.base.deriv(s)
        s = np.asarray(s, dtype=float)
        out = np.where(s > self.tau, 0.0, self.base.deriv(np.minimum(s, self.tau)))
        return out if out.ndim else float(out)

    def second_deriv(self, s: ArrayLike) -> ArrayLike:
        if not self.truncated:
            return self.base.second_deriv(s)
        s = np.asarray(s, dtype=float)
        out = np.where(s > self.tau, 0.0, self.base.second_deriv(np.minimum(s, self.tau)))
        return out if out.ndim else float(out)

    @property
    def deriv_at_zero_plus(self) -> float:
        return self.base.deriv_at_zero_plus

    @property
    def differentiable(self) -> bool:
        return self.base.differentiable

    def label(self) -> str:
        if not self.truncated:
            return self.base.label()
        return f"tr-{self.base.label()},tau={self.tau:g}"


def truncate(family: PotentialFamily, tau: float) -> TruncatedPotential:
    return TruncatedPotential(family, tau)


def as_truncated(reg) -> TruncatedPotential:
    """Promote a bare family to an untruncated ``TruncatedPotential``."""
    if isinstance(reg, TruncatedPotential):
        return reg
    if isinstance(reg, PotentialFamily):
        return TruncatedPotential(reg)
    raise TypeError(f"expected a potential, got {type(reg).__name__}")


@dataclass(frozen=True)
class SubadditivityReport:
    passed: bool
    checked: int
    counterexample: Optional[tuple] = None


def check_subadditivity(f, samples: int, upper: float = 1.0, seed: int = 0,
                        slack: float = 1e-12) -> SubadditivityReport:
    """Check ``f(a + b) <= f(a) + f(b)`` on random pairs from ``[0, upper]^2``."""
    if samples < 1:
        raise ConfigurationError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.0, upper, samples)
    b = rng.uniform(0.0, upper, samples)
    excess = np.asarray(f.eval(a + b)) - (np.asarray(f.eval(a)) + np.asarray(f.eval(b)))
    bad = np.flatnonzero(excess > slack)
    if bad.size:
        i = bad[0]
        return SubadditivityReport(False, samples, (float(a[i]), float(b[i])))
    return SubadditivityReport(True, samples)


# convenience constructors

def l1() -> PotentialFamily:
    return PotentialFamily(Kind.L1)


def lp(p: float) -> PotentialFamily:
    return PotentialFamily(Kind.LP, p=p)


def log(theta: float) -> PotentialFamily:
    return PotentialFamily(Kind.LOG, theta=theta)


def frac(theta: float) -> PotentialFamily:
    return PotentialFamily(Kind.FRAC, theta=theta)


def zero_one() -> PotentialFamily:
    return PotentialFamily(Kind.ZERO_ONE)


def logp(p: float, theta: float) -> PotentialFamily:
    return PotentialFamily(Kind.LOGP, p=p, theta=theta)


def fracp(p: float, theta: float) -> PotentialFamily:
    return PotentialFamily(Kind.FRACP, p=p, theta=theta)


def scad(theta: float, a: float = 3.7) -> PotentialFamily:
    return PotentialFamily(Kind.SCAD, theta=theta, a=a)


def quadratic() -> PotentialFamily:
    return PotentialFamily(Kind.L2)
