"""``restore``: denoise, deblur, sweep and 1D verification from the command line.

Noise levels are on the 0-255 scale (``--sigma 25`` means a standard
deviation of 25/255 on [0, 1] intensities).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigurationError, TruncRegError
from .pipeline import config as cfgmod
from .pipeline import runner, verify1d


def _add_restore_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML file with a flat run section (keys as in RunConfig)")
    p.add_argument("--preset", help="EXPERIMENT:RUN from the shipped defaults, e.g. denoise_shepp_logan:trtv")
    p.add_argument("--input", help="image path or builtin:NAME (shepp_logan, satellite, checkerboard)")
    p.add_argument("--sigma", type=float, help="noise standard deviation on the 0-255 scale")
    p.add_argument("--blur", help="Gaussian blur SIZE,SIGMA, e.g. 9,5")
    p.add_argument("--reg", help="regularizer KIND[:k=v,...], e.g. trlog:theta=10,tau=0.5")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--tau", type=float, help="truncation level (overrides the one in --reg)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--iso", dest="mode", action="store_const", const="iso")
    mode.add_argument("--aniso", dest="mode", action="store_const", const="aniso")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--and-stop", action="store_true", default=None,
                   help="stop only when both running-mean measures are below tolerance")
    p.add_argument("--out", help="output directory")


def _restore_config(args, task: str) -> cfgmod.RunConfig:
    m = {}
    if args.preset:
        exp, _, label = args.preset.partition(":")
        m.update(cfgmod.experiment_run(exp, label))
    if args.config:
        path = Path(args.config)
        m.update(cfgmod.load_toml(path))
        if "input" in m:
            m["input"] = cfgmod.resolve_path(path.parent, m["input"])
    cli = {"input": args.input, "sigma": args.sigma, "blur": args.blur, "regularizer": args.reg,
           "alpha": args.alpha, "beta": args.beta, "tau": args.tau, "mode": args.mode,
           "seed": args.seed, "max_iters": args.max_iters, "and_stop": args.and_stop,
           "out": args.out}
    m.update({k: v for k, v in cli.items() if v is not None})
    m["task"] = task
    m.setdefault("input", "builtin:shepp_logan")
    return cfgmod.config_from_mapping(m)


def cmd_restore(args) -> int:
    cfg = _restore_config(args, args.command)
    outcome = runner.restore(cfg)
    m = outcome.metrics
    print(f"{cfgmod.format_regularizer(cfg.reg)}  alpha={cfg.alpha:g} beta={cfg.beta:g}  "
          f"psnr={m.psnr_db:.2f} dB  iterations={m.iterations}  converged={m.converged}  "
          f"time={m.wall_time:.1f}s")
    if cfg.out:
        out = runner.write_outputs(outcome, cfg.out)
        print(f"wrote {out}")
    return 0


def cmd_sweep(args) -> int:
    spec = cfgmod.load_toml(args.grid)
    base_map = dict(spec.get("base", {}))
    if "input" in base_map:
        base_map["input"] = cfgmod.resolve_path(Path(args.grid).parent, base_map["input"])
    base_map.setdefault("input", "builtin:shepp_logan")
    base = cfgmod.config_from_mapping(base_map)
    grid = spec.get("grid")
    if not grid:
        raise ConfigurationError("sweep file needs a nonempty [grid] table")
    rows = runner.sweep(base, grid, workers=args.workers)
    path = runner.write_sweep_csv(rows, args.out)
    for r in rows:
        print(f"{r['regularizer']:<28} alpha={r['alpha']:<8g} beta={r['beta']:<8g} psnr={r['psnr']:.2f}")
    print(f"wrote {path}")
    return 0


def cmd_verify(args) -> int:
    rows = verify1d.run_checks(seed=args.seed, trials=args.trials)
    width = max(len(r.name) for r in rows)
    for r in rows:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    if args.out:
        path = verify1d.write_phase_csv(Path(args.out) / "phase_diagram.csv")
        print(f"wrote {path}")
    return 0 if all(r.passed for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="restore", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("denoise", "deblur"):
        sp = sub.add_parser(name, help=f"{name} an image with ADMM")
        _add_restore_args(sp)
        sp.set_defaults(func=cmd_restore)
    sp = sub.add_parser("sweep", help="run a parameter grid on one degraded image")
    sp.add_argument("--grid", required=True, help="TOML file with [base] and [grid] tables")
    sp.add_argument("--out", default="sweep.csv", help="CSV output path")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)
    sp = sub.add_parser("verify-1d", help="check the 1D recovery results against the DP oracle")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=50)
    sp.add_argument("--out", help="directory for the phase-diagram CSV")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (TruncRegError, OSError) as e:
        print(f"restore: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
