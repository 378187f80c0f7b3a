"""The 1D truncated model, exact oracles on quantized level grids, and theory checks.

The energy of a signal ``u`` of length N is

    E(u) = sum_i rho_tau(|(D u)_i|) + alpha/2 ||A u - f||^2

with ``D`` the forward difference under a Neumann (last difference dropped)
or periodic boundary. When ``A^T A`` is diagonal the energy is a chain of
pairwise terms, and its global minimum over a finite level grid is found
exactly by dynamic programming. Exhaustive enumeration covers small
problems with any ``A`` and serves as the oracle for the DP itself.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigvalsh
from scipy.special import ndtr

from .errors import ConfigurationError, UnsupportedFamilyError
from .potentials import Kind, TruncatedPotential, as_truncated


class Boundary(str, enum.Enum):
    NEUMANN = "neumann"
    PERIODIC = "periodic"


# -- operators ---------------------------------------------------------------


class IdentityOp:
    """``A = I``."""

    def apply(self, u):
        return np.asarray(u, dtype=float)

    def adjoint(self, f):
        return np.asarray(f, dtype=float)

    def normal_diagonal(self, n):
        return np.ones(n)

    def column_norms(self, n):
        return np.ones(n)

    def mu_min(self, n):
        return 1.0

    def output_size(self, n):
        return n

    def __repr__(self):
        return "IdentityOp()"


class DiagonalOp:
    """Operator with ``A^T A = diag(d)``, represented as ``A = diag(sqrt(d))``."""

    def __init__(self, d):
        d = np.asarray(d, dtype=float)
        if d.ndim != 1 or not np.all(d > 0):
            raise ConfigurationError("diagonal entries must be positive")
        self.d = d
        self._root = np.sqrt(d)

    def apply(self, u):
        return np.asarray(u, dtype=float) * self._root

    def adjoint(self, f):
        return np.asarray(f, dtype=float) * self._root

    def normal_diagonal(self, n):
        self._check(n)
        return self.d

    def column_norms(self, n):
        self._check(n)
        return self._root

    def mu_min(self, n):
        self._check(n)
        return float(self.d.min())

    def output_size(self, n):
        self._check(n)
        return n

    def _check(self, n):
        if n != self.d.size:
            raise ConfigurationError(f"operator has {self.d.size} columns, signal has {n}")

    def __repr__(self):
        return f"DiagonalOp(n={self.d.size})"


class MatrixOp:
    """An explicit K x N matrix."""

    def __init__(self, M):
        M = np.asarray(M, dtype=float)
        if M.ndim != 2:
            raise ConfigurationError("matrix operator must be 2-d")
        self.M = M

    def apply(self, u):
        return np.asarray(u, dtype=float) @ self.M.T

    def adjoint(self, f):
        return np.asarray(f, dtype=float) @ self.M

    def normal_diagonal(self, n):
        return None

    def column_norms(self, n):
        return np.sqrt(np.sum(self.M**2, axis=0))

    def mu_min(self, n):
        # tiny systems; a dense symmetric eigensolver is exact to round-off
        return float(eigvalsh(self.M.T @ self.M)[0])

    def output_size(self, n):
        return self.M.shape[0]

    def __repr__(self):
        return f"MatrixOp(shape={self.M.shape})"


# -- problem types -----------------------------------------------------------


def differences(u, boundary: Boundary = Boundary.NEUMANN) -> np.ndarray:
    """Forward differences along the last axis."""
    u = np.asarray(u, dtype=float)
    if Boundary(boundary) is Boundary.PERIODIC:
        return np.roll(u, -1, axis=-1) - u
    return np.diff(u, axis=-1)


@dataclass(frozen=True)
class IndicatorSignal:
    """``zeta`` times the indicator of ``omega`` (0-based indices) on ``n`` samples."""

    n: int
    omega: Tuple[int, ...]
    zeta: float

    def __post_init__(self):
        om = tuple(sorted(set(int(i) for i in self.omega)))
        if not om or len(om) >= self.n or om[0] < 0 or om[-1] >= self.n:
            raise ConfigurationError("omega must be a nonempty proper subset of range(n)")
        if not self.zeta > 0:
            raise ConfigurationError("zeta must be positive")
        object.__setattr__(self, "omega", om)

    @classmethod
    def gate(cls, m: int, zeta: float) -> "IndicatorSignal":
        """Zero, then ``zeta`` on the middle third, then zero; length ``3m``."""
        return cls(3 * m, tuple(range(m, 2 * m)), zeta)

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.n)
        m[list(self.omega)] = 1.0
        return m

    @property
    def values(self) -> np.ndarray:
        return self.zeta * self.mask

    def jump_set(self, boundary: Boundary = Boundary.NEUMANN) -> np.ndarray:
        return np.flatnonzero(differences(self.mask, boundary) != 0)


@dataclass(frozen=True)
class Signal1DProblem:
    f: np.ndarray
    alpha: float
    reg: TruncatedPotential
    op: object = field(default_factory=IdentityOp)
    boundary: Boundary = Boundary.NEUMANN
    n: Optional[int] = None

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "reg", as_truncated(self.reg))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if not self.alpha > 0:
            raise ConfigurationError("alpha must be positive")
        n = self.n
        if n is None:
            n = self.op.M.shape[1] if isinstance(self.op, MatrixOp) else f.size
            object.__setattr__(self, "n", n)
        if self.op.output_size(n) != f.size:
            raise ConfigurationError("observation length does not match the operator")
        if not self.op.mu_min(n) > 0:
            raise ConfigurationError("A^T A must be positive definite")

    @classmethod
    def noiseless(cls, signal: IndicatorSignal, alpha, reg, op=None,
                  boundary=Boundary.NEUMANN) -> "Signal1DProblem":
        op = op or IdentityOp()
        return cls(op.apply(signal.values), alpha, reg, op, boundary, signal.n)

    @property
    def mu_min(self) -> float:
        return self.op.mu_min(self.n)


def energy_1d(u, problem: Signal1DProblem) -> np.ndarray:
    """Energy of ``u``; a leading batch axis is allowed."""
    u = np.asarray(u, dtype=float)
    reg_term = np.sum(problem.reg.eval(np.abs(differences(u, problem.boundary))), axis=-1)
    r = problem.op.apply(u) - problem.f
    return reg_term + 0.5 * problem.alpha * np.sum(r * r, axis=-1)


# -- oracles -----------------------------------------------------------------


def default_levels(signal_or_f, count: int = 100) -> np.ndarray:
    """``{0, zeta/count, ..., zeta}`` for an indicator; otherwise ``[min f, max f]`` padded by 10%."""
    if isinstance(signal_or_f, IndicatorSignal):
        # linspace hits both end points exactly, so 0 and zeta are on the grid
        return np.linspace(0.0, signal_or_f.zeta, count + 1)
    f = np.asarray(signal_or_f, dtype=float)
    lo, hi = float(f.min()), float(f.max())
    pad = 0.1 * (hi - lo) if hi > lo else 0.1 * max(1.0, abs(hi))
    return np.linspace(lo - pad, hi + pad, count + 1)


def padded_levels(zeta: float, count: int = 50, pad: int = 10) -> np.ndarray:
    """``count`` steps on ``[0, zeta]`` extended by ``pad`` equal steps on each side."""
    h = zeta / count
    inner = np.linspace(0.0, zeta, count + 1)
    below = -h * np.arange(pad, 0, -1)
    above = zeta + h * np.arange(1, pad + 1)
    return np.concatenate([below, inner, above])


def _node_costs(problem: Signal1DProblem, levels: np.ndarray) -> np.ndarray:
    d = problem.op.normal_diagonal(problem.n)
    if d is None:
        raise UnsupportedFamilyError("dynamic programming needs A^T A diagonal; use exhaustive_global_min")
    center = problem.op.adjoint(problem.f) / d
    return 0.5 * problem.alpha * d[:, None] * (levels[None, :] - center[:, None]) ** 2


def _backtrack(back: np.ndarray, last: int) -> np.ndarray:
    n = back.shape[0] + 1
    idx = np.empty(n, dtype=int)
    idx[-1] = last
    for i in range(n - 2, -1, -1):
        idx[i] = back[i, idx[i + 1]]
    return idx


def dp_global_min(problem: Signal1DProblem, levels: Sequence[float]) -> np.ndarray:
    """Exact minimizer of the energy over ``levels^N`` by dynamic programming.

    Ties are broken toward the lower level index, so the result is deterministic.
    """
    levels = np.asarray(levels, dtype=float)
    node = _node_costs(problem, levels)
    n, L = node.shape
    trans = problem.reg.eval(np.abs(levels[:, None] - levels[None, :]))

    if problem.boundary is Boundary.NEUMANN:
        cost = node[0].copy()
        back = np.empty((n - 1, L), dtype=np.int32)
        for i in range(1, n):
            tot = cost[:, None] + trans
            back[i - 1] = np.argmin(tot, axis=0)
            cost = tot[back[i - 1], np.arange(L)] + node[i]
        idx = _backtrack(back, int(np.argmin(cost)))
        return levels[idx]

    # periodic: condition on the level of the first sample
    cost = np.full((L, L), np.inf)
    cost[np.arange(L), np.arange(L)] = node[0]
    back = np.empty((n - 1, L, L), dtype=np.int32)
    cols = np.arange(L)
    for i in range(1, n):
        tot = cost[:, :, None] + trans[None, :, :]
        back[i - 1] = np.argmin(tot, axis=1)
        cost = np.take_along_axis(tot, back[i - 1][:, None, :], axis=1)[:, 0, :] + node[i]
    closing = cost + trans[cols, :]  # edge from the last sample back to the first
    start, last = np.unravel_index(np.argmin(closing), closing.shape)
    idx = _backtrack(back[:, start, :], int(last))
    return levels[idx]


def exhaustive_global_min(problem: Signal1DProblem, levels: Sequence[float],
                          max_states: int = 2_000_000, chunk: int = 65536) -> np.ndarray:
    """Minimize by enumerating every assignment in ``levels^N`` (any operator)."""
    levels = np.asarray(levels, dtype=float)
    n, L = problem.n, levels.size
    if L**n > max_states:
        raise ConfigurationError(f"{L}^{n} assignments exceeds max_states={max_states}")
    best_val, best = math.inf, None
    it = itertools.product(range(L), repeat=n)
    while True:
        block = np.array(list(itertools.islice(it, chunk)), dtype=int)
        if block.size == 0:
            break
        e = energy_1d(levels[block], problem)
        k = int(np.argmin(e))
        if e[k] < best_val:
            best_val, best = float(e[k]), levels[block[k]]
    return best


# -- theory ------------------------------------------------------------------


def recovery_threshold(reg, alpha: float, mu_min: float, j1_count: int) -> float:
    """Contrast above which ``zeta 1_Omega`` is the exact global minimizer."""
    reg = as_truncated(reg)
    if not (alpha > 0 and mu_min > 0 and j1_count > 0):
        raise ConfigurationError("alpha, mu_min and j1_count must be positive")
    if not reg.truncated:
        return math.inf
    return reg.tau + math.sqrt(4.0 * reg.cap * j1_count / (alpha * mu_min))


@dataclass
class StructureReport:
    extremum: bool
    jump_subset: bool
    monotone: bool
    first_violation: dict

    @property
    def passed(self) -> bool:
        return self.extremum and self.jump_subset and self.monotone


def check_minimizer_structure(u, signal: IndicatorSignal, boundary: Boundary = Boundary.NEUMANN,
                              tol: float = 1e-12) -> StructureReport:
    """Check range ``[0, zeta]``, no new jumps, and preserved monotonicity."""
    u = np.asarray(u, dtype=float)
    viol = {}
    bad = np.flatnonzero((u < -tol) | (u > signal.zeta + tol))
    if bad.size:
        viol["extremum"] = int(bad[0])
    du = differences(u, boundary)
    dg = differences(signal.values, boundary)
    bad = np.flatnonzero((np.abs(du) > tol) & (dg == 0))
    if bad.size:
        viol["jump_subset"] = int(bad[0])
    bad = np.flatnonzero(((dg > 0) & (du < -tol)) | ((dg < 0) & (du > tol)) | ((dg == 0) & (np.abs(du) > tol)))
    if bad.size:
        viol["monotone"] = int(bad[0])
    return StructureReport("extremum" not in viol, "jump_subset" not in viol,
                           "monotone" not in viol, viol)


def lowered_gate(signal: IndicatorSignal, eps: float) -> np.ndarray:
    """The gate with contrast reduced by ``2 eps``: ``eps`` outside, ``zeta - eps`` inside."""
    m = signal.mask
    return eps * (1.0 - m) + (signal.zeta - eps) * m


def contrast_gap(reg, signal: IndicatorSignal, alpha: float, eps: float, op=None,
                 boundary: Boundary = Boundary.NEUMANN) -> float:
    """``E(lowered gate) - E(gate)`` for the noiseless observation of the gate."""
    prob = Signal1DProblem.noiseless(signal, alpha, reg, op, boundary)
    return float(energy_1d(lowered_gate(signal, eps), prob) - energy_1d(signal.values, prob))


@dataclass
class WitnessReport:
    found: bool
    epsilon: Optional[float]
    gap: Optional[float]
    tried: List[Tuple[float, float]]


def contrast_reduction_witness(reg, signal: IndicatorSignal, alpha: float, op=None,
                               boundary: Boundary = Boundary.NEUMANN,
                               steps: int = 20) -> WitnessReport:
    """Search ``eps = zeta 2^-k`` (k = 1..steps) for a lower-contrast signal of lower energy."""
    tried = []
    for k in range(1, steps + 1):
        eps = signal.zeta * 2.0**-k
        gap = contrast_gap(reg, signal, alpha, eps, op, boundary)
        tried.append((eps, gap))
        if gap < 0:
            return WitnessReport(True, eps, gap, tried)
    return WitnessReport(False, None, None, tried)


def subgradient_interval(reg, x: float) -> Tuple[float, float]:
    """Interval subdifferential of ``rho_tau(|x|)``; at 0 it is ``[-rho'(0+), rho'(0+)]``."""
    reg = as_truncated(reg)
    if x == 0:
        d0 = reg.base.deriv_at_zero_plus
        return -d0, d0
    if reg.kind is Kind.ZERO_ONE:
        return 0.0, 0.0
    g = math.copysign(float(reg.deriv(abs(x))), x)
    return g, g


@dataclass
class RecoveryBound:
    per_index: np.ndarray
    min_bound: float
    product_bound: Optional[float]


def recovery_probability_bound(u_tilde, reg, alpha: float, sigma: float, op=None) -> RecoveryBound:
    """Upper bounds on the probability that ``u_tilde`` minimizes the noisy Neumann model.

    Index ``i`` compares the subgradient sets of the differences on either
    side of sample ``i``. A difference that does not exist (left of the first
    sample, right of the last) contributes ``{0}``.
    """
    u_tilde = np.asarray(u_tilde, dtype=float)
    n = u_tilde.size
    op = op or IdentityOp()
    if not (alpha > 0 and sigma > 0):
        raise ConfigurationError("alpha and sigma must be positive")
    du = np.diff(u_tilde)
    ints = [(0.0, 0.0)] + [subgradient_interval(reg, float(x)) for x in du] + [(0.0, 0.0)]
    norms = op.column_norms(n)
    out = np.empty(n)
    for i in range(n):
        (lo_l, hi_l), (lo_r, hi_r) = ints[i], ints[i + 1]
        # {a - b : a in left, b in right}
        sup, inf = hi_l - lo_r, lo_l - hi_r
        scale = alpha * sigma * norms[i]
        with np.errstate(invalid="ignore"):
            out[i] = ndtr(sup / scale) - ndtr(inf / scale)
    product = float(np.prod(out)) if isinstance(op, IdentityOp) else None
    return RecoveryBound(out, float(out.min()), product)


def phase_diagram(reg, alpha: float, m: int = 4, ratios: Sequence[float] = (0.5, 0.8, 0.95, 1.05, 1.2, 1.5),
                  levels: int = 100) -> List[dict]:
    """Exact-recovery outcome of the DP oracle for gates at multiples of the threshold."""
    reg = as_truncated(reg)
    base = IndicatorSignal.gate(m, 1.0)
    thr = recovery_threshold(reg, alpha, 1.0, len(base.jump_set()))
    rows = []
    for r in ratios:
        sig = IndicatorSignal.gate(m, r * thr)
        prob = Signal1DProblem.noiseless(sig, alpha, reg)
        u = dp_global_min(prob, default_levels(sig, levels))
        rows.append({"ratio": r, "zeta": sig.zeta, "threshold": thr,
                     "recovered": bool(np.array_equal(u, sig.values)),
                     "max_error": float(np.max(np.abs(u - sig.values)))})
    return rows
