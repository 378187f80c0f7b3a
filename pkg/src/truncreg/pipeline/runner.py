"""Single restorations, parameter sweeps and their on-disk outputs."""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .. import admm2d
from ..errors import ConfigurationError
from ..grid_ops import Convolution, Identity, gaussian_kernel, grad, grad_adjoint
from .config import RunConfig, format_regularizer, parse_regularizer
from .imaging import degrade, load_image, psnr, save_image
from .phantoms import BUILTIN

log = logging.getLogger(__name__)


def resolve_image(spec: str) -> np.ndarray:
    """``builtin:NAME`` for a generated phantom, otherwise an image path."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name not in BUILTIN:
            raise ConfigurationError(f"unknown builtin image {name!r}; have {sorted(BUILTIN)}")
        return BUILTIN[name]()
    return load_image(spec)


def make_operator(blur):
    """``(operator, kernel)`` for an optional ``(size, sigma)`` blur."""
    if blur is None:
        return Identity(), None
    k = gaussian_kernel(*blur)
    return Convolution(k), k


def observe(cfg: RunConfig, truth: np.ndarray) -> np.ndarray:
    _, kernel = make_operator(cfg.blur)
    return degrade(truth, kernel, cfg.sigma, cfg.seed)


@dataclass
class MetricsReport:
    psnr_db: float
    iterations: int
    converged: bool
    wall_time: float
    rel_u_mean: float
    rel_q_gap: float
    feasibility: float
    stationarity: float

    def to_json(self) -> dict:
        # wall time is left out so identical runs write identical files
        d = asdict(self)
        d.pop("wall_time")
        return d


def kkt_residuals(result: admm2d.AdmmResult, f, A, cfg: admm2d.AdmmConfig):
    """Relative feasibility and stationarity of the final primal-dual iterate."""
    st = result.state
    g = grad(st.u)
    gf = float(np.linalg.norm(grad(f))) or 1.0
    feas = float(np.linalg.norm(st.q - g)) / gf
    r = cfg.alpha * A.adjoint(A.apply(st.u) - f) - grad_adjoint(st.mu)
    scale = float(np.linalg.norm(cfg.alpha * A.adjoint(f))) or 1.0
    return feas, float(np.linalg.norm(r)) / scale


@dataclass
class RunOutcome:
    config: RunConfig
    truth: Optional[np.ndarray]
    observed: np.ndarray
    result: admm2d.AdmmResult
    metrics: MetricsReport


def restore(cfg: RunConfig, truth: Optional[np.ndarray] = None,
            observed: Optional[np.ndarray] = None, callback=None) -> RunOutcome:
    """Degrade ``truth`` (unless ``observed`` is given) and restore it."""
    if truth is None and observed is None:
        truth = resolve_image(cfg.input)
    if observed is None:
        observed = observe(cfg, truth)
    A, _ = make_operator(cfg.blur)
    acfg = cfg.admm_config()
    t0 = time.perf_counter()
    res = admm2d.run(observed, A, acfg, callback=callback)
    wall = time.perf_counter() - t0
    feas, stat = kkt_residuals(res, observed, A, acfg)
    tr = res.trace
    score = psnr(res.u, truth) if truth is not None else math.nan
    metrics = MetricsReport(score, res.iterations, res.converged, wall,
                            tr.rel_u_mean[-1], tr.rel_q_gap[-1], feas, stat)
    return RunOutcome(cfg, truth, observed, res, metrics)


def write_outputs(outcome: RunOutcome, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_image(outcome.observed, out / "observed.png")
    save_image(outcome.result.u, out / "restored.png")
    outcome.result.trace.to_csv(out / "trace.csv")
    meta = {"regularizer": format_regularizer(outcome.config.reg),
            "alpha": outcome.config.alpha, "beta": outcome.config.beta,
            "sigma": outcome.config.sigma, "blur": outcome.config.blur,
            "seed": outcome.config.seed, "mode": outcome.config.mode.value,
            "observed_psnr": (psnr(outcome.observed, outcome.truth)
                              if outcome.truth is not None else None),
            **outcome.metrics.to_json()}
    with open(out / "metrics.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


# -- sweeps -------------------------------------------------------------------

SWEEP_KEYS = ("regularizer", "tau", "alpha", "beta", "mode")
SWEEP_COLUMNS = ("index", "regularizer", "alpha", "beta", "mode", "psnr", "iterations", "converged",
                 "feasibility")


def expand_grid(base: RunConfig, grid: Dict[str, Sequence]) -> List[RunConfig]:
    """Cartesian product of the grid lists applied on top of ``base``."""
    unknown = set(grid) - set(SWEEP_KEYS)
    if unknown:
        raise ConfigurationError(f"cannot sweep over {sorted(unknown)}; allowed: {SWEEP_KEYS}")
    keys = [k for k in SWEEP_KEYS if k in grid]
    values = [list(grid[k]) for k in keys]
    if any(len(v) == 0 for v in values):
        raise ConfigurationError("sweep grid lists must be nonempty")
    out = []
    for combo in itertools.product(*values):
        point = dict(zip(keys, combo))
        reg = parse_regularizer(point.pop("regularizer", base.reg), point.pop("tau", None))
        out.append(base.with_params(reg=reg, **{k: (float(v) if k in ("alpha", "beta") else v)
                                                 for k, v in point.items()}))
    return out


def _sweep_point(args):
    cfg, truth, observed = args
    oc = restore(cfg, truth, observed)
    return oc.metrics


def sweep(base: RunConfig, grid: Dict[str, Sequence], workers: int = 1,
          truth: Optional[np.ndarray] = None) -> List[dict]:
    """Run every grid point on one shared degraded observation.

    Rows come back in grid order whatever the number of workers.
    """
    points = expand_grid(base, grid)
    if truth is None:
        truth = resolve_image(base.input)
    observed = observe(base, truth)
    jobs = [(cfg, truth, observed) for cfg in points]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            metrics = list(pool.map(_sweep_point, jobs))
    else:
        metrics = [_sweep_point(j) for j in jobs]
    rows = []
    for i, (cfg, m) in enumerate(zip(points, metrics)):
        rows.append({"index": i, "regularizer": format_regularizer(cfg.reg),
                     "alpha": cfg.alpha, "beta": cfg.beta, "mode": cfg.mode.value,
                     "psnr": m.psnr_db, "iterations": m.iterations, "converged": m.converged,
                     "feasibility": m.feasibility})
    return rows


def write_sweep_csv(rows: List[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([r["index"], r["regularizer"], f"{r['alpha']:g}", f"{r['beta']:g}", r["mode"],
                        f"{r['psnr']:.4f}", r["iterations"], int(r["converged"]), f"{r['feasibility']:.3e}"])
    return path
