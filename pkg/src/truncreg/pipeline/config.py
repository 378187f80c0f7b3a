"""Run configuration: regularizer specs, TOML files and shipped defaults.

A regularizer is written ``KIND[:key=value,...]``, for example ``tv``,
``trtv:tau=0.4``, ``trlog:theta=10,tau=0.5`` or ``scad:theta=1``. In TOML
files the same thing is an inline table,
``regularizer = {kind = "trlog", theta = 10.0, tau = 0.5}``.
A ``tr`` prefix marks the truncated variant and requires ``tau``.
"""

from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..admm2d import AdmmConfig, Mode
from ..errors import ConfigurationError
from ..potentials import Kind, PotentialFamily, TruncatedPotential

_ALIASES = {
    "tv": Kind.L1, "l1": Kind.L1,
    "lp": Kind.LP,
    "log": Kind.LOG, "ln": Kind.LOG,
    "frac": Kind.FRAC,
    "zeroone": Kind.ZERO_ONE,
    "logp": Kind.LOGP,
    "fracp": Kind.FRACP,
    "scad": Kind.SCAD,
    "l2": Kind.L2,
}
_PARAMS = {"p", "theta", "a", "tau"}


def parse_regularizer(spec, tau: Optional[float] = None) -> TruncatedPotential:
    """Build a potential from ``"KIND[:k=v,...]"`` or a mapping with a ``kind`` key.

    ``tau`` overrides any truncation level given in the spec.
    """
    if isinstance(spec, TruncatedPotential):
        return spec if tau is None else TruncatedPotential(spec.base, tau)
    if isinstance(spec, str):
        name, _, rest = spec.strip().partition(":")
        params = {}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, val = item.partition("=")
            if not eq:
                raise ConfigurationError(f"malformed regularizer parameter {item!r}")
            try:
                params[key.strip()] = float(val)
            except ValueError:
                raise ConfigurationError(f"parameter {key!r} is not a number: {val!r}") from None
    elif isinstance(spec, dict):
        params = dict(spec)
        name = params.pop("kind", None)
        if not isinstance(name, str):
            raise ConfigurationError("regularizer table needs a string 'kind'")
    else:
        raise ConfigurationError(f"cannot parse regularizer from {type(spec).__name__}")

    name = name.strip().lower()
    unknown = set(params) - _PARAMS
    if unknown:
        raise ConfigurationError(f"unknown regularizer parameters: {sorted(unknown)}")
    truncated = name.startswith("tr") and name[2:] in _ALIASES
    kind = _ALIASES.get(name[2:] if truncated else name)
    if kind is None:
        raise ConfigurationError(f"unknown regularizer kind {name!r}")

    level = params.pop("tau", None)
    if tau is not None:
        level = tau
    if truncated and level is None:
        raise ConfigurationError(f"{name} needs a truncation level tau")
    family = PotentialFamily(kind, **{k: float(v) for k, v in params.items()})
    return TruncatedPotential(family, math.inf if level is None else float(level))


def format_regularizer(reg: TruncatedPotential) -> str:
    """Inverse of :func:`parse_regularizer` for the string form."""
    b = reg.base
    name = ("tr" if reg.truncated else "") + ("tv" if b.kind is Kind.L1 else b.kind.value)
    parts = [f"{k}={getattr(b, k):g}" for k in ("p", "theta", "a") if getattr(b, k) is not None]
    if reg.truncated:
        parts.append(f"tau={reg.tau:g}")
    return name + (":" + ",".join(parts) if parts else "")


class Task(str, enum.Enum):
    DENOISE = "denoise"
    DEBLUR = "deblur"
    SWEEP = "sweep"
    VERIFY_1D = "verify-1d"


@dataclass(frozen=True)
class RunConfig:
    """One restoration run. ``sigma`` is on the 0-255 scale."""

    task: Task
    input: str
    reg: TruncatedPotential
    alpha: float
    beta: float
    sigma: float = 0.0
    blur: Optional[Tuple[int, float]] = None
    seed: int = 0
    mode: Mode = Mode.ANISOTROPIC
    out: Optional[str] = None
    and_stop: bool = False
    max_iters: int = 2000
    tol: float = 5e-5

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.task is Task.DEBLUR and self.blur is None:
            raise ConfigurationError("deblurring needs a blur (size, sigma)")
        if self.blur is not None:
            size, bsig = self.blur
            if int(size) != size or size < 1 or size % 2 == 0 or not bsig > 0:
                raise ConfigurationError(f"blur must be (odd size, positive sigma), got {self.blur}")
            object.__setattr__(self, "blur", (int(size), float(bsig)))
        if self.sigma < 0:
            raise ConfigurationError("noise sigma must be nonnegative")
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigurationError("alpha and beta must be positive")

    def admm_config(self) -> AdmmConfig:
        return AdmmConfig(alpha=self.alpha, beta=self.beta, reg=self.reg, mode=self.mode,
                          max_iters=self.max_iters, tol=self.tol, and_stop=self.and_stop)

    def with_params(self, **kw) -> "RunConfig":
        return replace(self, **kw)


def parse_blur(text) -> Optional[Tuple[int, float]]:
    """``"9,5"`` or ``[9, 5]`` to ``(9, 5.0)``; None passes through."""
    if text is None:
        return None
    if isinstance(text, str):
        parts = [p.strip() for p in text.split(",")]
    else:
        parts = list(text)
    if len(parts) != 2:
        raise ConfigurationError(f"blur must be SIZE,SIGMA, got {text!r}")
    try:
        return int(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigurationError(f"blur must be SIZE,SIGMA, got {text!r}") from None


def load_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def load_defaults() -> dict:
    """The shipped per-experiment parameter table."""
    text = resources.files("truncreg.pipeline").joinpath("defaults.toml").read_text()
    return tomllib.loads(text)


def _experiment_table(name: str, defaults: Optional[dict]) -> dict:
    table = (defaults or load_defaults()).get(name)
    if table is None:
        raise ConfigurationError(f"no experiment named {name!r}")
    return table


def experiment_run(name: str, label: str, defaults: Optional[dict] = None) -> dict:
    """Flat mapping for one run: the experiment's shared keys plus the run's own."""
    table = _experiment_table(name, defaults)
    run = table.get("runs", {}).get(label)
    if run is None:
        raise ConfigurationError(f"experiment {name!r} has no run {label!r}")
    common = {k: v for k, v in table.items() if not isinstance(v, dict)}
    return {k: v for k, v in {**common, **run}.items() if k != "reference_psnr"}


def experiment_configs(name: str, defaults: Optional[dict] = None) -> dict:
    """``{label: RunConfig}`` for one experiment section of the defaults table."""
    defaults = defaults or load_defaults()
    runs = _experiment_table(name, defaults).get("runs", {})
    return {label: config_from_mapping(experiment_run(name, label, defaults)) for label in runs}


def experiment_references(name: str, defaults: Optional[dict] = None) -> dict:
    """``{label: published PSNR}`` for the runs of an experiment that list one."""
    table = (defaults or load_defaults()).get(name, {})
    return {label: run["reference_psnr"] for label, run in table.get("runs", {}).items()
            if "reference_psnr" in run}


def config_from_mapping(m: dict) -> RunConfig:
    """Build a :class:`RunConfig` from a flat mapping (TOML section)."""
    m = dict(m)
    try:
        reg = parse_regularizer(m.pop("regularizer"), m.pop("tau", None))
        cfg = RunConfig(
            task=m.pop("task", "denoise"),
            input=str(m.pop("input")),
            reg=reg,
            alpha=float(m.pop("alpha")),
            beta=float(m.pop("beta")),
            sigma=float(m.pop("sigma", 0.0)),
            blur=parse_blur(m.pop("blur", None)),
            seed=int(m.pop("seed", 0)),
            mode=m.pop("mode", "aniso"),
            out=m.pop("out", None),
            and_stop=bool(m.pop("and_stop", False)),
            max_iters=int(m.pop("max_iters", 2000)),
            tol=float(m.pop("tol", 5e-5)),
        )
    except KeyError as e:
        raise ConfigurationError(f"missing required key {e.args[0]!r}") from None
    if m:
        raise ConfigurationError(f"unknown configuration keys: {sorted(m)}")
    return cfg


def resolve_path(base: Path, p: str) -> str:
    if p.startswith("builtin:") or Path(p).is_absolute():
        return p
    return str((base / p).resolve())
