"""``fpt``: command-line front end writing CSV.

Usage::

    fpt <command> --config <path> [--out <path>] [--shards N] [--workers N] [--quick]

Commands and their CSV columns:

* ``density``  t, x, estimate, stderr, n, method
* ``joint``    t, l, g, stderr, n
* ``zero``     component, value
* ``mass``     horizon, p_hit, stderr
* ``validate`` check_name, value, reference, tolerance, pass
* ``sample``   status, tau, K, L, n_jumps

Floats are written with 17 significant digits and a header row is always
present.  ``FPT_SEED`` in the environment overrides the configured seed.
Exit codes: 0 success, 1 usage (including config syntax errors), 2 invalid
config values, 3 numerical failure, 4 a failed validation row.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import replace

import numpy as np

from . import closed_form as cf
from . import estimators as est
from .config import RunConfig, parse_config
from .errors import ConfigSemanticError, ConfigSyntaxError, NumericalError, UsageError
from .path_sim import STATUS_CODES, simulate_hitting
from .sharding import concat, map_shards

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3, 4


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _density(cfg: RunConfig):
    rows = []
    for t in cfg.t:
        e = est.density(cfg.model, t, cfg.n, cfg.seed, cfg.shards, cfg.workers)
        rows.append((float(t), cfg.model.x, e.value, e.stderr, e.n, e.method))
    return ("t", "x", "estimate", "stderr", "n", "method"), rows, True


def _joint(cfg: RunConfig):
    rows = []
    for t in cfg.t:
        for p in est.joint_density_curve(cfg.model, t, cfg.l, cfg.n, cfg.seed, cfg.shards, cfg.workers):
            rows.append((p.t, p.l, p.g, p.stderr, p.n))
    return ("t", "l", "g", "stderr", "n"), rows, True


def _zero(cfg: RunConfig):
    m = cfg.model
    terms = cf.zero_time_terms(m.law, m.lam, m.x, cfg.phi_fn, cfg.psi_fn)
    rows = [
        ("creep", terms.creep),
        ("jump_over", terms.jump_over),
        ("boundary_atom", terms.boundary_atom),
        ("functional_total", terms.total),
        ("density_at_zero", cf.density_at_zero(m.law, m.lam, m.x)),
    ]
    return ("component", "value"), rows, True


def _mass(cfg: RunConfig):
    curve = est.mass_curve(cfg.model, cfg.horizon, cfg.n, cfg.seed, cfg.shards, cfg.workers, cfg.depth)
    return ("horizon", "p_hit", "stderr"), [(float(h), e.value, e.stderr) for h, e in zip(cfg.horizon, curve)], True


def _sample_shard(rng, k, model, horizon, depth):
    b = simulate_hitting(model, horizon, k, rng, depth=depth)
    return b.status, b.tau, b.K, b.L, b.n_jumps


def _sample(cfg: RunConfig):
    names = [s.value for s in STATUS_CODES]
    parts = map_shards(_sample_shard, cfg.n, cfg.seed, cfg.shards, cfg.workers, (cfg.model, max(cfg.horizon), cfg.depth))
    status, tau, K, L, nj = (concat(parts, i) for i in range(5))
    rows = zip((names[int(s)] for s in status), tau, K, L, nj)
    return ("status", "tau", "K", "L", "n_jumps"), rows, True


def _validate(cfg: RunConfig):
    from .validation import run_all

    rows, ok = [], True
    for res in run_all(cfg.seed, cfg.shards, cfg.quick):
        for r in res.rows:
            rows.append((f"{res.number}:{r.name}", r.value, r.reference, r.tolerance, r.passed))
        ok &= res.passed
    return ("check_name", "value", "reference", "tolerance", "pass"), rows, ok


COMMANDS = {
    "density": _density,
    "joint": _joint,
    "zero": _zero,
    "mass": _mass,
    "validate": _validate,
    "sample": _sample,
}


def run(command: str, cfg: RunConfig) -> tuple[str, bool]:
    """CSV text of ``command`` on ``cfg`` and whether every row passed."""
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}")
    header, rows, ok = COMMANDS[command](cfg)
    return _csv(header, rows), ok


def render(command: str, cfg: RunConfig) -> str:
    return run(command, cfg)[0]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fpt", description="First-passage laws of jump diffusions, as CSV.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="path to the [model]/[run] config file")
    p.add_argument("--out", help="write CSV here instead of stdout (overrides [run] out)")
    p.add_argument("--shards", type=int, help="shard count (overrides [run] shards)")
    p.add_argument("--workers", type=int, help="worker processes; never changes results")
    p.add_argument("--quick", action="store_true", help="smaller budgets for validate")
    return p


def _load(args) -> RunConfig:
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    cfg = parse_config(text)
    env_seed = os.environ.get("FPT_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigSemanticError("FPT_SEED", f"not an integer: {env_seed!r}") from None
        if not 0 <= seed < 2**64:
            raise ConfigSemanticError("FPT_SEED", "must be a 64-bit unsigned integer")
        cfg = replace(cfg, seed=seed)
    for key in ("shards", "workers"):
        val = getattr(args, key)
        if val is not None:
            if val < 1:
                raise UsageError(f"--{key} must be at least 1")
            cfg = replace(cfg, **{key: val})
    if args.quick:
        cfg = replace(cfg, quick=True)
    if args.out:
        cfg = replace(cfg, out=args.out)
    return cfg


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        cfg = _load(args)
        text, ok = run(args.command, cfg)
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK if ok else EXIT_VALIDATION
    except ConfigSyntaxError as exc:
        print(f"fpt: config syntax error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigSemanticError as exc:
        print(f"fpt: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"fpt: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, FloatingPointError) as exc:
        print(f"fpt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"fpt: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
