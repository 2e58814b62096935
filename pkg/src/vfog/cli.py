"""Command line entry point: ``vfog {run,train,eval,compare,validate-config}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config, validate
from .harness import (
    ALL_POLICIES, ARTIFACT_SUFFIX, BASELINES, LEARNERS, load_policy, run_compare, run_eval,
    run_training, save_policy, write_curve,
)
from .metrics import export_csv, export_json

OUT_DIR_ENV = "VFOG_OUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("vfog")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; omitted keys take defaults")
    common.add_argument("--seed", type=int, default=None, help="master seed (default: first configured seed)")
    common.add_argument("--out-dir", default=None, help=f"output directory (env {OUT_DIR_ENV} overrides)")
    common.add_argument("--policy", choices=ALL_POLICIES, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="vfog", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="train if needed, then evaluate one policy on one seed")
    sub.add_parser("train", parents=[common], help="train a learning policy and persist it")
    ev = sub.add_parser("eval", parents=[common], help="evaluate a baseline or a persisted policy")
    ev.add_argument("--artifact", default=None, help="policy artifact (learning policies only)")
    cmp_ = sub.add_parser("compare", parents=[common], help="train and evaluate all five policies over seeds")
    cmp_.add_argument("--seeds", type=int, nargs="+", default=None, help="override configured seeds")
    cmp_.add_argument("--workers", type=int, default=1, help="parallel sub-runs (results are identical)")
    sub.add_parser("validate-config", parents=[common], help="parse and validate a config file")
    return p


def _out_dir(args) -> Path:
    raw = os.environ.get(OUT_DIR_ENV) or args.out_dir or "results"
    out = Path(raw)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: ExperimentConfig, out: Path) -> None:
    text = cfg.to_json()
    (out / "effective_config.json").write_text(text + "\n")
    log.info("effective config:\n%s", text)


def _require_policy(args, allowed) -> str:
    if args.policy is None:
        raise ConfigError(f"--policy is required (one of {', '.join(allowed)})")
    if args.policy not in allowed:
        raise ConfigError(f"--policy must be one of {', '.join(allowed)} for '{args.command}'")
    return args.policy


def _artifact_path(out: Path, name: str, seed: int) -> Path:
    return out / f"{name}-seed{seed}{ARTIFACT_SUFFIX[name]}"


def _write_record(rec, out: Path, stem: str) -> None:
    export_csv([rec], out / f"{stem}.csv")
    export_json([rec], out / f"{stem}.json")
    print(json.dumps(asdict(rec), sort_keys=True))


def _train(cfg, name, seed, out):
    result = run_training(cfg, name, seed)
    path = save_policy(result.policy, _artifact_path(out, name, seed))
    write_curve(result.curve, out / f"{name}-seed{seed}-curve.csv")
    print(f"saved {path}")
    return result.policy


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        validate(cfg)
        seed = args.seed if args.seed is not None else cfg.run.seeds[0]
        if args.command == "validate-config":
            print(cfg.to_json())
            print("config OK")
            return EXIT_OK
        if args.command == "train":
            name = _require_policy(args, LEARNERS)
        elif args.command in ("run", "eval"):
            name = _require_policy(args, ALL_POLICIES)
        if args.command == "compare":
            seeds = args.seeds if args.seeds is not None else list(cfg.run.seeds)
            if len(seeds) < 3:
                raise ConfigError("'run.seeds' compare needs at least 3 seeds")
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        out = _out_dir(args)
        _echo_config(cfg, out)
        if args.command == "train":
            _train(cfg, name, seed, out)
        elif args.command == "run":
            policy = _train(cfg, name, seed, out) if name in LEARNERS else name
            _write_record(run_eval(cfg, policy, seed), out, f"{name}-seed{seed}-eval")
        elif args.command == "eval":
            if name in BASELINES:
                policy = name
            else:
                path = Path(args.artifact) if args.artifact else _artifact_path(out, name, seed)
                policy = load_policy(name, path, cfg)
            _write_record(run_eval(cfg, policy, seed), out, f"{name}-seed{seed}-eval")
        elif args.command == "compare":
            report = run_compare(cfg, seeds, out, workers=args.workers)
            for name_, s in report.summaries.items():
                print(f"{name_:13s} latency {s.latency_mean * 1000:7.1f} ms (sd {s.latency_std * 1000:.1f})  "
                      f"success {s.success_mean:.3f}  jain {s.jain_mean:.3f} ({s.balance_label})")
            print(f"wrote {out / 'metrics.csv'}")
    except Exception as exc:  # sub-run diagnostics surface here
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
