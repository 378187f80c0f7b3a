"""ADMM for the anisotropic and isotropic truncated-regularization models.

The model ``min_u sum rho_tau(|grad u|) + alpha/2 ||A u - f||^2`` is split as
``q = grad u`` with multiplier ``mu`` and the augmented Lagrangian

    L(u, q; mu) = R(q) + alpha/2 ||A u - f||^2 + <mu, q - grad u>
                  + beta/2 ||q - grad u||^2.

Each sweep solves the q-subproblem exactly, pixel by pixel, via the global
prox of :mod:`truncreg.prox`; the u-subproblem is a periodic linear system
solved by FFT. Termination follows the running-mean rule

    min(|ubar^k - ubar^{k-1}| / |f|, |qbar^k - grad ubar^k| / |grad f|) <= tol.
"""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .grid_ops import Identity, USolver, grad, grad_adjoint
from .potentials import as_truncated
from .prox import prox_field, prox_signed

log = logging.getLogger(__name__)


class Mode(str, enum.Enum):
    ANISOTROPIC = "aniso"
    ISOTROPIC = "iso"


@dataclass(frozen=True)
class AdmmConfig:
    alpha: float
    beta: float
    reg: object
    mode: Mode = Mode.ANISOTROPIC
    max_iters: int = 2000
    tol: float = 5e-5
    # stop on both measures instead of the smaller one
    and_stop: bool = False
    # return the last iterate instead of the running mean
    final_iterate: bool = False
    # record augmented-Lagrangian values around each subproblem
    track_lagrangian: bool = False

    def __post_init__(self):
        object.__setattr__(self, "reg", as_truncated(self.reg))
        object.__setattr__(self, "mode", Mode(self.mode))
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigurationError("alpha and beta must be positive")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")


@dataclass
class AdmmState:
    u: np.ndarray
    q: np.ndarray
    mu: np.ndarray
    u_mean: np.ndarray
    q_mean: np.ndarray
    iter: int = 0

    @classmethod
    def initial(cls, f: np.ndarray) -> "AdmmState":
        """``u = f``, ``q = grad f``, ``mu = 0``."""
        u = np.array(f, dtype=float)
        q = grad(u)
        return cls(u=u, q=q, mu=np.zeros_like(q), u_mean=u.copy(), q_mean=q.copy())


@dataclass
class AdmmTrace:
    energy: List[float] = field(default_factory=list)
    rel_u_mean: List[float] = field(default_factory=list)
    rel_q_gap: List[float] = field(default_factory=list)
    mu_drift: List[float] = field(default_factory=list)
    # (L(u^k,q^k;mu^k), L(u^k,q^{k+1};mu^k), L(u^{k+1},q^{k+1};mu^k))
    lagrangian: List[tuple] = field(default_factory=list)

    COLUMNS = ("iter", "energy", "rel_u_mean", "rel_q_gap", "mu_drift")

    def __len__(self):
        return len(self.energy)

    def rows(self):
        for k in range(len(self)):
            yield (k + 1, self.energy[k], self.rel_u_mean[k], self.rel_q_gap[k], self.mu_drift[k])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in self.rows():
                w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])


@dataclass
class AdmmResult:
    u: np.ndarray
    trace: AdmmTrace
    state: AdmmState
    iterations: int
    converged: bool


def regularizer_value(q: np.ndarray, reg, mode: Mode) -> float:
    reg = as_truncated(reg)
    if Mode(mode) is Mode.ANISOTROPIC:
        return float(np.sum(reg.eval(np.abs(q[0]))) + np.sum(reg.eval(np.abs(q[1]))))
    return float(np.sum(reg.eval(np.hypot(q[0], q[1]))))


def energy(u, f, A, config: AdmmConfig) -> float:
    """Objective of the anisotropic or isotropic truncated model at ``u``."""
    A = A or Identity()
    r = A.apply(u) - f
    return regularizer_value(grad(u), config.reg, config.mode) + 0.5 * config.alpha * float(np.sum(r * r))


def lagrangian(u, q, mu, f, A, config: AdmmConfig) -> float:
    A = A or Identity()
    r = A.apply(u) - f
    gap = q - grad(u)
    return (regularizer_value(q, config.reg, config.mode)
            + 0.5 * config.alpha * float(np.sum(r * r))
            + float(np.sum(mu * gap))
            + 0.5 * config.beta * float(np.sum(gap * gap)))


def q_update(state: AdmmState, config: AdmmConfig) -> np.ndarray:
    """Exact minimizer of ``L(u^k, . ; mu^k)``."""
    w = grad(state.u) - state.mu / config.beta
    if config.mode is Mode.ISOTROPIC:
        qx, qy = prox_field(config.reg, config.beta, w[0], w[1])
        return np.stack((qx, qy))
    return prox_signed(config.reg, config.beta, w)


def u_update(state: AdmmState, config: AdmmConfig, f, A, solver: Optional[USolver] = None):
    """Exact minimizer of ``L(. , q^{k+1}; mu^k)``; ``state.q`` must hold ``q^{k+1}``."""
    solver = solver or USolver(np.shape(f), A or Identity(), config.alpha, config.beta)
    return solver.solve(f, state.q, state.mu)


def mu_update(state: AdmmState, config: AdmmConfig) -> np.ndarray:
    """``mu + beta (q - grad u)`` with ``state`` holding ``q^{k+1}, u^{k+1}``."""
    return state.mu + config.beta * (state.q - grad(state.u))


def _norm(x) -> float:
    return float(np.sqrt(np.sum(x * x)))


def run(f: np.ndarray, A=None, config: AdmmConfig = None, state: Optional[AdmmState] = None,
        callback=None) -> AdmmResult:
    """Run ADMM from ``u = f, q = grad f, mu = 0`` (or from ``state``).

    Returns the running mean of the u-iterates unless ``config.final_iterate``.
    """
    if config is None:
        raise ConfigurationError("config is required")
    f = np.asarray(f, dtype=float)
    if f.ndim != 2:
        raise ConfigurationError("f must be a 2-d array")
    if not np.all(np.isfinite(f)):
        raise ConfigurationError("f contains non-finite values")
    A = A or Identity()
    solver = USolver(f.shape, A, config.alpha, config.beta)
    fixed_rhs = config.alpha * A.adjoint(f)

    st = state or AdmmState.initial(f)
    trace = AdmmTrace()
    f_norm = _norm(f) or 1.0
    gf_norm = _norm(grad(f)) or 1.0
    beta = config.beta
    converged = False

    for k in range(config.max_iters):
        if config.track_lagrangian:
            l0 = lagrangian(st.u, st.q, st.mu, f, A, config)
        q_new = q_update(st, config)
        if config.track_lagrangian:
            l1 = lagrangian(st.u, q_new, st.mu, f, A, config)
        u_new = solver.solve_rhs(fixed_rhs + grad_adjoint(st.mu + beta * q_new))
        g_new = grad(u_new)
        if config.track_lagrangian:
            l2 = lagrangian(u_new, q_new, st.mu, f, A, config)
            trace.lagrangian.append((l0, l1, l2))
        dmu = beta * (q_new - g_new)
        mu_new = st.mu + dmu

        n = st.iter + 1  # number of iterates already averaged
        u_mean_new = st.u_mean + (u_new - st.u_mean) / (n + 1)
        q_mean_new = st.q_mean + (q_new - st.q_mean) / (n + 1)
        rel_u = _norm(u_mean_new - st.u_mean) / f_norm
        rel_q = _norm(q_mean_new - grad(u_mean_new)) / gf_norm

        st.u, st.q, st.mu = u_new, q_new, mu_new
        st.u_mean, st.q_mean = u_mean_new, q_mean_new
        st.iter = n

        trace.energy.append(energy(u_new, f, A, config))
        trace.rel_u_mean.append(rel_u)
        trace.rel_q_gap.append(rel_q)
        trace.mu_drift.append(_norm(dmu))

        if not (np.isfinite(rel_u) and np.isfinite(rel_q) and np.isfinite(trace.energy[-1])):
            raise DivergenceError(f"non-finite values at iteration {n}", trace)
        if callback is not None:
            callback(st, trace)
        stop = max(rel_u, rel_q) if config.and_stop else min(rel_u, rel_q)
        if stop <= config.tol:
            converged = True
            break

    log.debug("admm stopped after %d iterations (converged=%s)", st.iter, converged)
    out = st.u if config.final_iterate else st.u_mean
    return AdmmResult(u=out.copy(), trace=trace, state=st, iterations=len(trace), converged=converged)
