"""Randomized checks of the 1D recovery and structure results against the DP oracle."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np

from .. import potentials as pot
from ..signal1d import (Boundary, IndicatorSignal, Signal1DProblem, check_minimizer_structure,
                        contrast_reduction_witness, default_levels, dp_global_min,
                        energy_1d, exhaustive_global_min, padded_levels, phase_diagram, recovery_threshold)


def random_indicator(rng: np.random.Generator, n_min: int = 6, n_max: int = 64,
                     max_runs: int = 3, zeta: float = 1.0) -> IndicatorSignal:
    """Random union of intervals that avoids both end samples.

    Keeping the ends at zero makes the jump set the same under Neumann and
    periodic boundaries.
    """
    n = int(rng.integers(n_min, n_max + 1))
    runs = int(rng.integers(1, max_runs + 1))
    mask = np.zeros(n, dtype=bool)
    for _ in range(runs):
        a = int(rng.integers(1, n - 1))
        b = int(rng.integers(a, min(n - 1, a + n // 2)))
        mask[a:b + 1] = True
    mask[0] = mask[-1] = False
    return IndicatorSignal(n, tuple(np.flatnonzero(mask)), zeta)


def random_truncated(rng: np.random.Generator) -> pot.TruncatedPotential:
    """A truncated L1, Lp, Log or Frac potential with random parameters."""
    tau = float(rng.uniform(0.2, 1.0))
    k = int(rng.integers(4))
    if k == 0:
        base = pot.l1()
    elif k == 1:
        base = pot.lp(float(rng.choice([0.3, 0.5, 0.8])))
    elif k == 2:
        base = pot.log(float(rng.uniform(1.0, 20.0)))
    else:
        base = pot.frac(float(rng.uniform(1.0, 20.0)))
    return pot.truncate(base, tau)


def threshold_case(rng: np.random.Generator, ratio: float = 1.05, n_max: int = 64):
    """``(signal, problem)`` with contrast ``ratio`` times the recovery threshold, ``A = I``."""
    shape = random_indicator(rng, n_max=n_max)
    reg = random_truncated(rng)
    alpha = float(rng.uniform(1.0, 50.0))
    thr = recovery_threshold(reg, alpha, 1.0, len(shape.jump_set()))
    sig = IndicatorSignal(shape.n, shape.omega, ratio * thr)
    return sig, Signal1DProblem.noiseless(sig, alpha, reg)


@dataclass
class CheckRow:
    name: str
    passed: bool
    detail: str


def run_checks(seed: int = 0, trials: int = 50) -> List[CheckRow]:
    rng = np.random.default_rng(seed)
    rows = []

    bad = 0
    for _ in range(trials):
        sig, prob = threshold_case(rng)
        u = dp_global_min(prob, default_levels(sig))
        bad += not np.array_equal(u, sig.values)
    rows.append(CheckRow("exact recovery above threshold (DP)", bad == 0,
                         f"{trials - bad}/{trials} recovered"))

    bad = 0
    for _ in range(trials):
        sig = random_indicator(rng, zeta=float(rng.uniform(0.2, 2.0)))
        reg = random_truncated(rng)
        prob = Signal1DProblem.noiseless(sig, float(rng.uniform(0.5, 50.0)), reg)
        levels = padded_levels(sig.zeta)
        rep = check_minimizer_structure(dp_global_min(prob, levels), sig)
        bad += not rep.passed
    rows.append(CheckRow("minimizer structure (range, jumps, monotonicity)", bad == 0,
                         f"{trials - bad}/{trials} passed"))

    gate = IndicatorSignal.gate(4, 1.0)
    w = contrast_reduction_witness(pot.l1(), gate, 1.0)
    rows.append(CheckRow("lower-contrast witness for TV", w.found,
                         f"eps={w.epsilon}, gap={w.gap}"))
    tr = pot.truncate(pot.l1(), 0.5)
    gate2 = IndicatorSignal.gate(4, 1.2)
    w2 = contrast_reduction_witness(tr, gate2, 10.0)
    rows.append(CheckRow("no lower-contrast witness for truncated L1 above threshold", not w2.found,
                         f"min gap over {len(w2.tried)} eps = {min(g for _, g in w2.tried):.4g}"))

    bad = 0
    for _ in range(max(1, trials // 5)):
        n = int(rng.integers(3, 7))
        f = rng.uniform(0.0, 1.0, n)
        prob = Signal1DProblem(f, float(rng.uniform(0.5, 20.0)), random_truncated(rng),
                               boundary=Boundary(rng.choice(["neumann", "periodic"])))
        levels = np.linspace(0.0, 1.0, 8)
        e_dp = float(energy_1d(dp_global_min(prob, levels), prob))
        e_ex = float(energy_1d(exhaustive_global_min(prob, levels), prob))
        bad += not abs(e_dp - e_ex) <= 1e-12 * max(1.0, abs(e_ex))
    rows.append(CheckRow("DP equals exhaustive search", bad == 0,
                         f"{max(1, trials // 5) - bad}/{max(1, trials // 5)} equal"))
    return rows


def write_phase_csv(path, alpha: float = 10.0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    regs = [pot.truncate(pot.l1(), 0.5), pot.truncate(pot.log(10.0), 0.5),
            pot.truncate(pot.lp(0.5), 0.5), pot.truncate(pot.frac(10.0), 0.5)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["regularizer", "alpha", "ratio", "zeta", "threshold", "recovered", "max_error"])
        for reg in regs:
            for r in phase_diagram(reg, alpha):
                w.writerow([reg.label(), f"{alpha:g}", f"{r['ratio']:g}", f"{r['zeta']:.6f}",
                            f"{r['threshold']:.6f}", int(r["recovered"]), f"{r['max_error']:.6g}"])
    return path
