"""Command-line interface: ``urq bounds|mc|decay|plan``.

Every command writes one CSV file: a metadata comment line
``# urq <command> seed=<s> version=<v>``, a fixed header, then rows with
reals printed to 17 significant digits.  Output goes to a temporary file in
the target directory that is renamed into place only after it is complete.

Exit status: 0 success, 2 usage error, 3 precondition violation.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    TheoremParams,
    ball_pair_failure_bound,
    consistency_bounds,
    consistency_prob_series,
    norm_tail,
    plan_rate,
    scaling_dim,
)
from .core import SimilarSignal, Sparse, UnionOfSubspaces, UnitBall
from .errors import DomainError, ParameterError, VacuousBoundError
from .montecarlo import mc_ball_guarantee, mc_consistency, mc_norm_tail
from .reconstruct import decay_experiment

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION = 0, 2, 3


class UsageError(Exception):
    pass


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(v)


def write_csv(path, command, seed, header, rows, trailer=()):
    """Write the CSV atomically: temp file in the same directory, then rename."""
    path = Path(path)
    lines = [f"# urq {command} seed={seed} version={__version__}", ",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    lines += list(trailer)
    text = "\n".join(lines) + "\n"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


# -- argument parsing helpers ----------------------------------------------


def parse_grid(text, integer=False):
    """``a:b:n`` (n points from a to b inclusive; with ``integer``, a:b:step) or ``v1,v2,...``."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            if integer:
                vals = list(range(int(a), int(b) + 1, int(n)))
            else:
                if int(n) < 1:
                    raise ValueError
                vals = list(np.linspace(float(a), float(b), int(n)))
        else:
            vals = [int(v) if integer else float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"malformed grid {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"grid {text!r} is empty or not finite")
    return vals


def parse_model(text):
    """``unitball:K=9``, ``sparse:N=256,K=4``, ``union:N=64,K=3,L=100`` or ``similar:K=4,D=0.5``."""
    try:
        kind, _, rest = text.partition(":")
        kv = dict(item.split("=", 1) for item in rest.split(",") if item)
        kind = kind.strip().lower()
        if kind == "unitball":
            keys, build = {"K"}, lambda: UnitBall(int(kv["K"]))
        elif kind == "sparse":
            keys, build = {"N", "K"}, lambda: Sparse(int(kv["N"]), int(kv["K"]))
        elif kind == "union":
            keys, build = {"N", "K", "L"}, lambda: UnionOfSubspaces(int(kv["N"]), int(kv["K"]), int(kv["L"]))
        elif kind == "similar":
            keys = {"K", "D"}
            build = lambda: SimilarSignal(np.zeros(int(kv["K"])), float(kv["D"]))  # noqa: E731
        else:
            raise ValueError
        if set(kv) != keys:
            raise ValueError
        return build()
    except (ValueError, KeyError, ParameterError):
        raise UsageError(f"malformed model description {text!r}") from None


def model_label(model):
    if isinstance(model, UnitBall):
        return f"unitball:K={model.K}"
    if isinstance(model, Sparse):
        return f"sparse:N={model.N};K={model.K}"
    if isinstance(model, UnionOfSubspaces):
        return f"union:N={model.N};K={model.K};L={model.L}"
    return f"similar:K={model.K};D={fmt(model.D)}"


def read_config(path):
    """Flat ``key = value`` file; blank lines and ``#`` comments are ignored."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def _pos_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("count must be >= 1")
    return v


def _decay_base(text):
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid decay base {text!r}") from None


# -- commands --------------------------------------------------------------


def cmd_bounds(a):
    grid = parse_grid(a.d_grid)
    if any(d < 0 for d in grid):
        raise UsageError("distance grid must be nonnegative")
    rows = []
    for d in grid:
        b = consistency_bounds(d, a.sigma, a.delta)
        rows.append((d, b.exact_series, b.lower_first_term, b.lower_linear, b.upper))
    return ["d", "exact", "lower1", "lower2", "upper"], rows, []


def cmd_mc(a):
    grid = parse_grid(a.grid)
    rows = []
    for v in grid:
        seed = a.seed
        if a.kind == "consistency":
            est = mc_consistency(v, a.sigma, a.delta, a.K, a.bits, a.trials, seed, a.measurements,
                                 a.partitions, a.workers)
            analytic = consistency_prob_series(v, a.sigma, a.delta, bits=a.bits) ** a.measurements
        elif a.kind == "tail":
            est = mc_norm_tail(a.K, a.sigma, v, a.trials, seed, a.partitions, a.workers)
            analytic = norm_tail(a.K, a.sigma, v) if v > 0 else 1.0
        else:
            est = mc_ball_guarantee(v, a.epsilon, a.c_p, a.sigma, a.delta, a.K, a.trials, seed,
                                    a.partitions, a.workers)
            analytic = ball_pair_failure_bound(v, a.epsilon, a.c_p, a.sigma, a.delta, a.K)
        rows.append((v, est.mean, est.stderr, analytic, est.z_score(analytic)))
    return ["param", "mc_mean", "stderr", "analytic", "z_score"], rows, []


def cmd_decay(a):
    M_list = parse_grid(a.M_list, integer=True)
    if any(m < 1 for m in M_list) or any(y <= x for x, y in zip(M_list, M_list[1:])):
        raise UsageError("M list must be positive and strictly increasing")
    rule = a.delta_rule
    if rule != "corollary":
        try:
            rule = float(rule[6:] if rule.startswith("fixed:") else rule)
        except ValueError:
            raise UsageError(f"malformed delta rule {a.delta_rule!r}") from None
    rep = decay_experiment(a.K, M_list, a.trials, a.seed, rule, h=a.h, P0=a.P0, bits=a.bits,
                           sigma=a.sigma)
    header = ["M", "worst", "mean", "guarantee_d", "quantile", "resolved_fraction", "pairs_tested"]
    rows = [(r.M, r.worst, r.mean, r.guarantee_d, r.quantile, r.resolved_fraction, r.pairs_tested)
            for r in rep.rows]
    f = rep.fit
    if f.ok:
        summary = (f"# fit points={f.points} slope={fmt(f.slope)} r2={fmt(f.r2)} "
                   f"decay_ratio={fmt(f.decay_ratio)}")
    else:
        summary = f"# fit insufficient points ({f.points})"
    dom = (f"# dominance quantile={fmt(rep.dominance_fraction)} max={fmt(rep.max_dominance_fraction)} "
           f"P0={fmt(rep.P0)} delta_rule={rep.delta_rule}")
    return header, rows, [summary, dom]


def cmd_plan(a):
    model = parse_model(a.model)
    params = TheoremParams(scaling_dim(model), a.c_p, a.r1, a.r2, a.c_r)
    p = plan_rate(model, a.d, a.P0, params)
    row = (model_label(model), p.d, p.P0, p.c_o, p.c_r, p.covering_log, p.required_M)
    return ["model", "d", "P0", "c_o", "c_r", "covering_log", "required_M"], [row], []


COMMANDS = {"bounds": cmd_bounds, "mc": cmd_mc, "decay": cmd_decay, "plan": cmd_plan}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="output CSV path")
    common.add_argument("--seed", type=_u64, default=0, help="master seed, 0 <= seed < 2**64")
    common.add_argument("--trials", type=_pos_int, default=100_000, help="trial budget")
    common.add_argument("--config", help="key=value file of defaults; flags override it")

    p = argparse.ArgumentParser(prog="urq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"urq {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", parents=[common], help="consistency probability and its bounds")
    b.add_argument("--d-grid", default="0:3:100", help="a:b:n or comma list of distances")
    b.add_argument("--sigma", type=float, default=1.0)
    b.add_argument("--delta", type=float, default=1.0)

    m = sub.add_parser("mc", parents=[common], help="Monte Carlo check of an analytic law")
    m.add_argument("--kind", choices=["consistency", "tail", "ball"], required=True)
    m.add_argument("--grid", default="0.15:3:20",
                   help="swept parameter: d for consistency/ball, c_p for tail")
    m.add_argument("--sigma", type=float, default=1.0)
    m.add_argument("--delta", type=float, default=1.0)
    m.add_argument("--K", type=_pos_int, default=8)
    m.add_argument("--bits", type=_pos_int, default=1)
    m.add_argument("--measurements", type=_pos_int, default=1)
    m.add_argument("--epsilon", type=float, default=0.02)
    m.add_argument("--c-p", dest="c_p", type=float, default=2.0)
    m.add_argument("--partitions", type=_pos_int, default=1)
    m.add_argument("--workers", type=_pos_int, default=1)

    d = sub.add_parser("decay", parents=[common], help="worst consistent error against M")
    d.add_argument("--K", type=_pos_int, default=2)
    d.add_argument("--M-list", dest="M_list", default="10:150:10", help="a:b:step or comma list")
    d.add_argument("--delta-rule", default="fixed:0.2", help="fixed:<delta> or corollary")
    d.add_argument("--sigma", type=float, default=None, help="fixed-delta sigma (default 1)")
    d.add_argument("--h", type=float, default=0.01, help="candidate grid spacing")
    d.add_argument("--P0", type=float, default=0.05)
    d.add_argument("--bits", type=_pos_int, default=1)

    n = sub.add_parser("plan", parents=[common], help="measurements needed for a target distortion")
    n.add_argument("--model", required=True,
                   help="unitball:K=..|sparse:N=..,K=..|union:N=..,K=..,L=..|similar:K=..,D=..")
    n.add_argument("--d", type=float, required=True)
    n.add_argument("--P0", type=float, default=1e-3)
    n.add_argument("--c-p", dest="c_p", type=float, default=2.0)
    n.add_argument("--r1", type=float, default=0.2)
    n.add_argument("--r2", type=float, default=1.0)
    n.add_argument("--c-r", dest="c_r", type=_decay_base, default=0.75,
                   help="declared decay base (not below the value implied by c_p, r1, r2) or 'auto'")
    return p, sub


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser, sub, argv):
    """Parse ``argv`` with config-file values installed as defaults, so explicit flags win."""
    path = _config_path(argv)
    command = next((t for t in argv if not t.startswith("-")), None)
    if path is not None and command in sub.choices:
        cmd_parser = sub.choices[command]
        known = {a.dest: a for a in cmd_parser._actions}
        defaults = {}
        for k, v in read_config(path).items():
            if k not in known or k in ("help", "config"):
                raise UsageError(f"unknown config key {k!r} for command {command}")
            act = known[k]
            try:
                defaults[k] = act.type(v) if act.type else v
            except (argparse.ArgumentTypeError, ValueError):
                raise UsageError(f"bad value for config key {k!r}: {v!r}") from None
            if act.choices is not None and defaults[k] not in act.choices:
                raise UsageError(f"bad value for config key {k!r}: {v!r}")
            act.required = False
        cmd_parser.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser, sub = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, sub, argv)
        header, rows, trailer = COMMANDS[args.command](args)
        write_csv(args.out, args.command, args.seed, header, rows, trailer)
    except SystemExit as exc:  # argparse usage errors exit with status 2
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"urq: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, DomainError, VacuousBoundError) as exc:
        print(f"urq: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"urq: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK
