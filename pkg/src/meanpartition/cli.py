"""Command-line front end.

    meanpartition consensus --input runs.txt --output mean.json
    meanpartition simulate --config sim.json --seed 3 --output report.json

Settings come from built-in defaults, then an optional JSON ``--config``
file, then command-line flags.  Reports are deterministic JSON that embed the
resolved settings; failures print an error object on stderr and exit non-zero.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .alignment import default_budget, required_enumeration
from .diversity import diversity_report, loss_decomposition
from .errors import ConfigError, PartitionError, UnknownCommandError
from .files import load_sample, load_truth
from .frechet import fixed_point_residual, mean_exact, mean_heuristic, mean_set
from .partition import degree_of_asymmetry, delta
from .simulation import EnsembleModel, run_convergence_experiment

COMMANDS = ("consensus", "distance", "asymmetry", "diversity", "simulate")

DEFAULTS = {
    "input": None,
    "truth": None,
    "output": None,
    "seed": 0,
    "method": "auto",
    "mode": "unconstrained",
    "budget": None,
    "max_iter": 100,
    "tol": 1e-9,
    "restarts": None,
    "ell": 2,
    "m": 64,
    "p": 0.95,
    "n_grid": [1, 11, 51, 101],
    "trials": 100,
    "max_retries": 10_000,
    "max_ell": 8,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="meanpartition", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", help="one of: " + ", ".join(COMMANDS))
    ap.add_argument("--input")
    ap.add_argument("--truth")
    ap.add_argument("--output")
    ap.add_argument("--config")
    ap.add_argument("--seed", type=int)
    group = ap.add_mutually_exclusive_group()
    group.add_argument("--exact", dest="method", action="store_const", const="exact")
    group.add_argument("--heuristic", dest="method", action="store_const", const="heuristic")
    ap.add_argument("--mode", choices=["unconstrained", "ball"])
    ap.add_argument("--budget", type=int)
    ap.add_argument("--max-iter", dest="max_iter", type=int)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--restarts", type=int)
    ap.add_argument("--ell", type=int)
    ap.add_argument("--m", type=int)
    ap.add_argument("--p", help="scalar or comma-separated per-point probabilities")
    ap.add_argument("--n-grid", dest="n_grid", help="comma-separated sample sizes")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--max-retries", dest="max_retries", type=int)
    ap.add_argument("--max-ell", dest="max_ell", type=int)
    return ap


def _csv_numbers(text, kind):
    try:
        values = [kind(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse {text!r}") from None
    return values


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if isinstance(cfg["p"], str):
        p = _csv_numbers(cfg["p"], float)
        cfg["p"] = p[0] if len(p) == 1 else p
    if isinstance(cfg["n_grid"], str):
        cfg["n_grid"] = _csv_numbers(cfg["n_grid"], int)
    if cfg["budget"] is None:
        cfg["budget"] = default_budget()
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    def positive(key):
        if not isinstance(cfg[key], int) or cfg[key] < 1:
            raise ConfigError(f"{key} must be a positive integer")

    for key in ("budget", "max_iter", "ell", "m", "trials", "max_retries", "max_ell"):
        positive(key)
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    if cfg["restarts"] is not None:
        positive("restarts")
    if cfg["method"] not in ("auto", "exact", "heuristic"):
        raise ConfigError("method must be auto, exact or heuristic")
    if cfg["mode"] not in ("unconstrained", "ball"):
        raise ConfigError("mode must be unconstrained or ball")
    if not isinstance(cfg["tol"], (int, float)) or not cfg["tol"] > 0:
        raise ConfigError("tol must be positive")
    grid = cfg["n_grid"]
    if not isinstance(grid, list) or not grid or not all(isinstance(n, int) and n >= 1 for n in grid):
        raise ConfigError("n_grid must be a non-empty list of positive integers")
    p = cfg["p"]
    ps = p if isinstance(p, list) else [p]
    if not ps or not all(isinstance(v, (int, float)) and 0 <= v <= 1 for v in ps):
        raise ConfigError("p must be a probability or a list of probabilities")
    if isinstance(p, list) and len(p) != cfg["m"]:
        raise ConfigError(f"p lists {len(p)} probabilities but m is {cfg['m']}")


def _require(cfg, key):
    if not cfg[key]:
        raise ConfigError(f"--{key} is required for this command")
    return cfg[key]


def _finite(x):
    return x if math.isfinite(x) else None


def _mean(sample, cfg):
    method = cfg["method"]
    if method == "auto":
        method = "exact" if required_enumeration(sample.ell, sample.n) <= cfg["budget"] else "heuristic"
    if method == "exact":
        return mean_exact(sample, cfg["budget"]), method
    return mean_heuristic(
        sample, max_iter=cfg["max_iter"], tol=cfg["tol"], restarts=cfg["restarts"], seed=cfg["seed"]
    ), method


def cmd_consensus(cfg):
    sample = load_sample(_require(cfg, "input"))
    result, method = _mean(sample, cfg)
    out = {
        "method": method,
        "n": sample.n,
        "mean": result.mean.to_dict(),
        "frechet_value": result.frechet_value,
        "iterations": result.iterations,
        "converged": result.converged,
        "fixed_point_residual": fixed_point_residual(sample, result.mean),
    }
    if method == "exact":
        out["minimizer_count"] = result.minimizer_count
        out["mean_set"] = [p.to_dict() for p in mean_set(sample, cfg["budget"])]
    return out


def cmd_distance(cfg):
    sample = load_sample(_require(cfg, "input"))
    n = sample.n
    matrix = [[delta(sample[i], sample[j]).distance for j in range(n)] for i in range(n)]
    out = {"n": n, "distances": matrix}
    if n == 2:
        res = delta(sample[0], sample[1])
        out["distance"] = res.distance
        out["permutation"] = list(res.permutation)
    return out


def cmd_asymmetry(cfg):
    sample = load_sample(_require(cfg, "input"))
    rows = []
    for x in sample:
        alpha = degree_of_asymmetry(x)
        rows.append({
            "partition": x.to_dict(),
            "alpha": _finite(alpha),
            "ball_radius": _finite(alpha / 4),
            "symmetric": alpha == 0.0,
        })
    return {"n": sample.n, "partitions": rows}


def cmd_diversity(cfg):
    sample = load_sample(_require(cfg, "input"))
    result, method = _mean(sample, cfg)
    report = diversity_report(sample, mean=result.mean, budget=cfg["budget"], seed=cfg["seed"])
    out = {"method": method, "diversity": report.to_dict()}
    if cfg["truth"]:
        truth = load_truth(cfg["truth"])
        means = mean_set(sample, cfg["budget"]) if method == "exact" else [result.mean]
        out["loss"] = loss_decomposition(means, truth).to_dict()
        out["mean_set_size"] = len(means)
    return out


def _model(cfg):
    if cfg["truth"]:
        truth = load_truth(cfg["truth"])
        return EnsembleModel(truth, cfg["p"], cfg["mode"], max_retries=cfg["max_retries"])
    return EnsembleModel.balanced(cfg["ell"], cfg["m"], cfg["p"], cfg["mode"], max_retries=cfg["max_retries"])


def cmd_simulate(cfg):
    model = _model(cfg)
    report = run_convergence_experiment(
        model, cfg["n_grid"], cfg["trials"], seed=cfg["seed"], budget=cfg["budget"], max_ell=cfg["max_ell"]
    )
    return report


HANDLERS = {
    "consensus": cmd_consensus,
    "distance": cmd_distance,
    "asymmetry": cmd_asymmetry,
    "diversity": cmd_diversity,
    "simulate": cmd_simulate,
}


def _dump(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def run(command: str, cfg: dict) -> dict:
    """Execute one command, write its report(s), and return the report payload."""
    if command not in HANDLERS:
        raise UnknownCommandError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    result = HANDLERS[command](cfg)
    csv_text = None
    if command == "simulate":
        csv_text = result.to_csv()
        result = result.to_dict()
    # the destination path does not affect results and is left out for reproducibility
    embedded = {k: v for k, v in cfg.items() if k != "output"}
    payload = {"command": command, "version": __version__, "config": embedded, "result": result}
    text = _dump(payload)
    if cfg["output"]:
        out = Path(cfg["output"])
        out.write_text(text, encoding="utf-8")
        if csv_text is not None:
            out.with_suffix(".csv").write_text(csv_text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return payload


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command not in HANDLERS:
            raise UnknownCommandError(
                f"unknown command {args.command!r}; expected one of {', '.join(COMMANDS)}"
            )
        cfg = resolve_config(args)
        run(args.command, cfg)
    except PartitionError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True) + "\n")
        return 1
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "io-error", "message": str(exc)}, sort_keys=True) + "\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(json.dumps({"error": "invalid-input", "message": str(exc)}, sort_keys=True) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
