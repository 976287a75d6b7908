"""Command-line entry point.

Subcommands: simulate | train | eval | compare | features-check.
Exit codes: 0 success, 1 property/assertion failure, 2 I/O or config error.
The environment variable SSBL_THREADS caps how many episodes `simulate`
rolls out in parallel (default 1; outputs are identical either way).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import spatial_features
from .config import (ConfigError, FullConfig, config_hash, config_to_dict,
                     default_config, load_config)
from .metrics import aggregate_stats, episode_stats, run_compare
from .policies import make_policy, save_checkpoint
from .trajlog import make_header, transition_to_record, write_trajectory
from .training import make_env, rollout, train

log = logging.getLogger("ssbl")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2


def _load_cfg(args) -> FullConfig:
    cfg = load_config(args.config) if args.config else default_config()
    return cfg.validate()


def _threads() -> int:
    raw = os.environ.get("SSBL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as e:
        raise ConfigError(f"SSBL_THREADS must be an integer, got {raw!r}") from e


def _simulate_episode(cfg_dict: dict, policy_spec: str, master_seed: int,
                      index: int, out_file: str) -> dict:
    from .config import config_from_dict

    cfg = config_from_dict(cfg_dict)
    env = make_env(cfg)
    policy = make_policy(policy_spec)
    seed = [int(master_seed), index]
    result = rollout(env, policy, seed, record=True)
    header = make_header(config_hash(cfg), seed, result.initial_agents)
    write_trajectory(out_file, header, result.transitions)
    return {"file": Path(out_file).name, "episode": index,
            "return": result.ret, "steps": result.steps,
            "success": result.success}


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_dict = config_to_dict(cfg)

    jobs = [(cfg_dict, args.policy, args.seed, i,
             str(out_dir / f"episode_{i:03d}.jsonl"))
            for i in range(args.episodes)]
    threads = min(_threads(), len(jobs))
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(_simulate_worker, jobs))
    else:
        entries = [_simulate_episode(*job) for job in jobs]

    manifest = {
        "config_hash": config_hash(cfg),
        "master_seed": int(args.seed),
        "policy": args.policy,
        "episodes": args.episodes,
        "runs": entries,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(entries)} episodes to {out_dir}")
    return EXIT_OK


def _simulate_worker(job):
    return _simulate_episode(*job)


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    if args.algo:
        cfg.train.algo = args.algo
    if args.iters is not None:
        cfg.train.iterations = args.iters
    if args.seed is not None:
        cfg.train.master_seed = int(args.seed)
    cfg.validate()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    params, report = train(cfg.train, cfg)

    ckpt = out_dir / "checkpoint.json"
    save_checkpoint(params, ckpt, config_hash=config_hash(cfg),
                    seed=cfg.train.master_seed)
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"trained {report.algo} for {len(report.iterations)} iterations; "
          f"relative performance {report.relative_percent:.2f}% "
          f"(checkpoint: {ckpt})")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    env = make_env(cfg)
    policy = make_policy(args.policy)
    stats = []
    for i in range(args.episodes):
        seed = [int(args.seed), i]
        result = rollout(env, policy, seed, record=True)
        agents = [{"id": a.id, "role": a.role.value, "x": a.position.x,
                   "y": a.position.y, "vx": a.velocity.x, "vy": a.velocity.y,
                   "theta": a.heading} for a in result.initial_agents]
        records = [transition_to_record(tr) for tr in result.transitions]
        stats.append(episode_stats(agents, records, cfg.proxemics))

    doc = {
        "policy": args.policy,
        "episodes": args.episodes,
        "master_seed": int(args.seed),
        "config_hash": config_hash(cfg),
        "metrics": aggregate_stats(stats).to_dict(),
        "per_episode": stats,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        print()
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load_cfg(args)
    report = run_compare(args.policy_a, args.policy_b, args.episodes, cfg,
                         int(args.seed), args.out)
    for name, pct in report.relative_percent.items():
        print(f"{name}: {pct:.2f}% relative performance")
    return EXIT_OK


def cmd_features_check(args) -> int:
    rng = np.random.default_rng(int(args.seed))
    checks = {}

    grid = rng.normal(0.0, 2.0, (8, 8, 3))
    probs = spatial_features.spatial_softmax(grid)
    checks["softmax_sums_to_one"] = bool(
        np.allclose(probs.sum(axis=(0, 1)), 1.0, atol=1e-6))
    checks["softmax_nonnegative"] = bool((probs >= 0.0).all())

    uniform = spatial_features.spatial_softmax(np.zeros((5, 7, 1)))
    x, y = spatial_features.expected_coordinates(uniform[:, :, 0])
    checks["uniform_expectation_center"] = bool(
        abs(x - 2.0) < 1e-12 and abs(y - 3.0) < 1e-12)

    point = np.zeros((6, 6))
    point[2, 4] = 1.0
    checks["point_mass_presence_one"] = bool(
        abs(spatial_features.presence(point, 2.0, 4.0, k=1.0) - 1.0) < 1e-12)

    pts = [spatial_features.FeaturePoint(2.0, 3.0, 0.8)]
    dmap = spatial_features.delta_map(pts, 6, 6)
    checks["delta_peak_equals_rho"] = bool(abs(dmap[2, 3, 0] - 0.8) < 1e-12)

    grad_report = spatial_features.gradient_check(seed=int(args.seed))
    passed = all(checks.values()) and grad_report["passed"]
    doc = {"checks": checks, "gradient": grad_report, "passed": passed}

    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    def common(p, seed_default=0):
        p.add_argument("--config", metavar="PATH",
                       help="JSON config file (defaults used when omitted)")
        p.add_argument("--seed", type=int, default=seed_default, metavar="U64",
                       help="master seed")

    parser = argparse.ArgumentParser(
        prog="ssbl", description="social-force simulation and behavior learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate",
                       help="roll out a policy and write JSONL trajectories")
    common(p)
    p.add_argument("--policy", required=True,
                   help="'sffm', 'random', or a checkpoint path")
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train a policy")
    common(p, seed_default=None)
    p.add_argument("--algo", choices=("cem", "ppo"))
    p.add_argument("--iters", type=int, metavar="N",
                   help="override the configured iteration count")
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval",
                       help="evaluate a policy, print or write metrics JSON")
    common(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare",
                       help="paired evaluation of two policies on shared seeds")
    common(p)
    p.add_argument("--policy-a", required=True)
    p.add_argument("--policy-b", required=True)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("features-check",
                       help="run the spatial-feature property and gradient suite")
    common(p)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_features_check)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
