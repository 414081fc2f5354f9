"""``bellsim`` command line.

Subcommands ``simulate``, ``chsh``, ``audit``, ``game`` and ``sweep``.  Reports
go to standard output as JSON (CSV for sweeps); ``--out`` writes them to a
file instead, atomically, with the run manifest embedded.  Exit codes:
0 success (failed audits included), 2 bad arguments, 3 model failure.
"""

from __future__ import annotations

import argparse
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .auditors import Condition, audit_all
from .core import (
    Direction,
    SettingsPolicy,
    chsh_pairs,
    paper_configuration,
    paper_policy,
    run_experiment,
)
from .errors import (
    InsufficientRuns,
    InvalidConfig,
    InvalidPolicy,
    InvalidWeights,
    ModelFailure,
    NoExactInterface,
    StrategyViolation,
    UndiscretizableState,
)
from .estimators import chsh_statistic, exact_expectation, mc_expectation
from .game import GameConfig, Leak, get_strategy, run_game, score_transcript
from .io import atomic_write, dumps, ensemble_lines, make_manifest, read_ensemble
from .models import build_model

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = ["main", "build_parser", "parse_theta_grid", "CliError"]

EXIT_OK, EXIT_USAGE, EXIT_MODEL = 0, 2, 3

DEFAULTS = {
    "seed": 0,
    "n": 100_000,
    "bins": 16,
    "alpha": 1e-3,
    "mode": None,
    "out": None,
    "radians": False,
    "workers": 1,
}


class CliError(Exception):
    """Bad arguments; reported on stderr with exit code 2."""


# -- argument parsing ----------------------------------------------------------

def _common():
    # defaults are SUPPRESSed so that config-file values can fill the gaps
    p = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS
    p.add_argument("--seed", type=int, default=s, help="master seed (default 0)")
    p.add_argument("--n", type=int, default=s, help="number of runs or rounds (default 100000)")
    p.add_argument("--bins", type=int, default=s, help="bins per continuous dimension (default 16)")
    p.add_argument("--alpha", type=float, default=s, help="significance level (default 1e-3)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="mode", action="store_const", const="exact", default=s)
    mode.add_argument("--empirical", dest="mode", action="store_const", const="empirical", default=s)
    p.add_argument("--out", default=s, help="write the output to this file")
    p.add_argument("--config", default=s, help="TOML file of flag values; flags win")
    p.add_argument("--radians", action="store_true", default=s, help="angles are in radians")
    p.add_argument("--workers", type=int, default=s, help="simulation threads (default 1)")
    return p


def _settings_flags(p):
    p.add_argument("--paper-config", action="store_true",
                   help="use the standard CHSH directions (the default)")
    p.add_argument("--angles", help="planar angles a,a',b,b' (degrees unless --radians)")
    p.add_argument("--timestamp", help="timestamp to record in the manifest")


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(
        prog="bellsim", parents=[common],
        description="Bell-experiment toy models, CHSH estimates and independence audits.",
    )
    parser.add_argument("--version", action="version", version=f"bellsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", parents=[common], help="simulate an ensemble to NDJSON")
    p.add_argument("model")
    _settings_flags(p)

    p = sub.add_parser("chsh", parents=[common], help="CHSH statistic of a model or ensemble")
    p.add_argument("source", help="model id or ensemble file")
    _settings_flags(p)

    p = sub.add_parser("audit", parents=[common], help="audit independence conditions")
    p.add_argument("source", help="model id or ensemble file")
    p.add_argument("--condition", action="append", choices=[c.value for c in Condition],
                   help="condition to audit (repeatable)")
    p.add_argument("--all", action="store_true", help="audit every condition (the default)")
    p.add_argument("--probes", type=int, default=100, help="structural-locality probes")
    _settings_flags(p)

    p = sub.add_parser("game", parents=[common], help="play the two-friends game")
    p.add_argument("strategy")
    p.add_argument("--leak", choices=[x.value for x in Leak], default="none")
    p.add_argument("--rounds", type=int, help="alias for --n")
    p.add_argument("--transcript", help="also write the transcript as NDJSON")
    p.add_argument("--timestamp", help="timestamp to record in the manifest")

    p = sub.add_parser("sweep", parents=[common], help="E(theta) curve as CSV")
    p.add_argument("model")
    p.add_argument("--theta-grid", default="0:180:7",
                   help="start:stop:steps; 'pi' may appear in start and stop")
    p.add_argument("--timestamp", help="timestamp to record in the manifest")
    return parser


def _load_config(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    data = {k.replace("-", "_"): v for k, v in data.items()}
    if "exact" in data or "empirical" in data:
        data.setdefault("mode", "exact" if data.pop("exact", False) else
                        "empirical" if data.pop("empirical", False) else None)
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise CliError(f"unknown config keys: {sorted(unknown)}")
    return data


def _resolve(args):
    """Fill options from flags, then the config file, then defaults."""
    config = _load_config(args.config) if getattr(args, "config", None) else {}
    for key, default in DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, config.get(key, default))
    if getattr(args, "rounds", None) is not None:
        args.n = args.rounds
    if args.n < 1:
        raise CliError("--n must be positive")
    if args.bins < 1:
        raise CliError("--bins must be positive")
    if not 0 < args.alpha < 1:
        raise CliError("--alpha must lie in (0, 1)")
    if not 0 <= args.seed < 2**64:
        raise CliError("--seed must be a 64-bit unsigned integer")
    return args


_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"


def _parse_angle(text, radians):
    """A number, optionally times pi ('pi', 'π', '3pi/4', 'pi/2').

    Any value written with pi is read as radians.
    """
    t = text.strip().replace("π", "pi")
    negative = t.startswith("-")
    if t[:1] in "+-":
        t = t[1:]
    m = re.fullmatch(rf"({_NUM})?\*?(pi)?(?:/({_NUM}))?", t)
    if not t or not m or (m.group(1) is None and m.group(2) is None):
        raise CliError(f"cannot parse angle {text!r}")
    value = float(m.group(1)) if m.group(1) else 1.0
    if negative:
        value = -value
    if m.group(2):
        value *= math.pi
    if m.group(3):
        value /= float(m.group(3))
    if m.group(2) or radians:
        return value
    return math.radians(value)


def parse_theta_grid(text, radians=False):
    """``start:stop:steps`` to an array of angles in radians."""
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"theta grid must be start:stop:steps, got {text!r}")
    start, stop = (_parse_angle(p, radians) for p in parts[:2])
    try:
        steps = int(parts[2])
    except ValueError:
        raise CliError(f"steps must be an integer, got {parts[2]!r}") from None
    if steps < 1:
        raise CliError("theta grid needs at least one step")
    return np.linspace(start, stop, steps)


def _configuration(args):
    if getattr(args, "angles", None):
        if args.paper_config:
            raise CliError("--angles and --paper-config are mutually exclusive")
        parts = args.angles.split(",")
        if len(parts) != 4:
            raise CliError("--angles needs four comma-separated values")
        return tuple(Direction.planar(_parse_angle(p, args.radians)) for p in parts)
    return paper_configuration()


def _policy(args):
    if getattr(args, "angles", None):
        return SettingsPolicy.uniform(chsh_pairs(*_configuration(args)), policy_id="angles")
    return paper_policy()


def _model(model_id):
    try:
        return build_model(model_id)
    except InvalidWeights as exc:
        raise CliError(str(exc)) from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _is_path(source):
    return os.path.sep in source or source.endswith((".ndjson", ".jsonl")) or Path(source).is_file()


def _load(source):
    try:
        return read_ensemble(source)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot read ensemble {source}: {exc}") from exc


def _manifest(args, model_id, policy, n):
    opts = {k: getattr(args, k) for k in ("bins", "alpha", "mode") if getattr(args, k, None) is not None}
    timestamp = getattr(args, "timestamp", None) or os.environ.get("SOURCE_DATE_EPOCH")
    return make_manifest(args.command, model_id, policy, n, args.seed, timestamp, opts)


def _emit(args, text_lines, manifest, wrap_json=None):
    """Print to stdout, or write to --out with the manifest embedded."""
    if args.out is None:
        sys.stdout.write("\n".join(text_lines) + "\n")
        return
    if wrap_json is not None:
        body = dumps({"manifest": manifest.to_json(), "result": wrap_json})
    else:
        body = "\n".join(["# manifest: " + dumps(manifest.to_json()), *text_lines])
    atomic_write(args.out, body + "\n")


# -- commands ------------------------------------------------------------------

def cmd_simulate(args):
    model = _model(args.model)
    policy = _policy(args)
    ens = run_experiment(model, policy, args.n, args.seed, workers=args.workers)
    manifest = _manifest(args, model.model_id, policy, args.n)
    lines = list(ensemble_lines(ens, manifest))
    if args.out is None:
        sys.stdout.write("\n".join(lines) + "\n")
    else:
        atomic_write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_chsh(args):
    config = _configuration(args)
    if _is_path(args.source):
        if args.mode == "exact":
            raise CliError("--exact cannot be used with an ensemble file")
        ens, _ = _load(args.source)
        report = chsh_statistic(ens, *config)
        model_id, n, policy = ens.model_id, len(ens), ens.policy
    else:
        model = _model(args.source)
        policy = SettingsPolicy.uniform(chsh_pairs(*config), policy_id="chsh")
        if args.mode == "empirical":
            ens = run_experiment(model, policy, args.n, args.seed, workers=args.workers)
            report = chsh_statistic(ens, *config)
            n = args.n
        else:
            report = chsh_statistic(model, *config)
            n = 0
        model_id = model.model_id
    out = report.to_json()
    _emit(args, [dumps(out)], _manifest(args, model_id, policy, n), out)
    return EXIT_OK


def cmd_audit(args):
    conditions = None if args.all or not args.condition else args.condition
    if _is_path(args.source):
        if args.mode == "exact":
            raise CliError("--exact cannot be used with an ensemble file")
        ens, _ = _load(args.source)
        try:
            model = build_model(ens.model_id)
        except ValueError:
            model = None
        source, policy, model_id, n = ens, ens.policy, ens.model_id, len(ens)
    else:
        model = _model(args.source)
        policy = _policy(args)
        model_id = model.model_id
        mode = args.mode or ("exact" if model.exact_table is not None else "empirical")
        if mode == "exact":
            source, n = model, 0
        else:
            source = run_experiment(model, policy, args.n, args.seed, workers=args.workers)
            n = args.n
    verdicts = audit_all(source, policy, conditions, alpha=args.alpha, bins=args.bins,
                         model=model, probes=args.probes)
    out = [v.to_json() for v in verdicts]
    _emit(args, [dumps(out)], _manifest(args, model_id, policy, n), out)
    return EXIT_OK


def cmd_game(args):
    strategy = _strategy(args.strategy)
    try:
        config = GameConfig(rounds=args.n, leak=Leak(args.leak), seed=args.seed)
    except InvalidConfig as exc:
        raise CliError(str(exc)) from exc
    transcript = run_game(config, strategy)
    score = score_transcript(transcript, config)
    manifest = _manifest(args, transcript.model_id, transcript.policy, args.n)
    if args.transcript:
        atomic_write(args.transcript, "\n".join(ensemble_lines(transcript, manifest)) + "\n")
    out = score.to_json()
    _emit(args, [dumps(out)], manifest, out)
    return EXIT_OK


def _strategy(name):
    try:
        return get_strategy(name)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_sweep(args):
    model = _model(args.model)
    thetas = parse_theta_grid(args.theta_grid, args.radians)
    a = Direction(1.0, 0.0, 0.0)
    rows = ["theta,E_exact,E_mc,stderr"]
    for k, theta in enumerate(thetas):
        b = Direction.planar(float(theta))
        try:
            exact = repr(exact_expectation(model, a, b).value)
        except NoExactInterface:
            exact = ""
        if args.mode == "exact":
            mc, err = "", ""
        else:
            policy = SettingsPolicy.uniform([(a, b)], policy_id="sweep")
            # one seed per grid point keeps the points independent
            ens = run_experiment(model, policy, args.n, (args.seed + k) % 2**64, workers=args.workers)
            est = mc_expectation(ens, a, b)
            mc, err = repr(est.value), repr(est.std_error)
        rows.append(f"{float(theta)!r},{exact},{mc},{err}")
    manifest = _manifest(args, model.model_id, None, args.n)
    manifest_opts = dict(manifest.options or {}, theta_grid=args.theta_grid, radians=args.radians)
    manifest = make_manifest(manifest.command, manifest.model_id, None, manifest.n_runs,
                             manifest.master_seed, manifest.timestamp, manifest_opts)
    _emit(args, rows, manifest)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "chsh": cmd_chsh,
    "audit": cmd_audit,
    "game": cmd_game,
    "sweep": cmd_sweep,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _resolve(args)
        return COMMANDS[args.command](args)
    except (CliError, InsufficientRuns, InvalidPolicy, NoExactInterface,
            UndiscretizableState) as exc:
        print(f"bellsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelFailure, StrategyViolation) as exc:
        print(f"bellsim: model failure: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"bellsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
