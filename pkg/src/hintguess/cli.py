"""Command-line surface: training runs, evaluation reports, and the service."""

from __future__ import annotations

import argparse
import csv
import glob
import json
import os
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from hintguess import evaluation
from hintguess.agents import ALL_KINDS, ArchitectureKind, build_agent
from hintguess.checkpoint import load_checkpoint, save_checkpoint
from hintguess.errors import ConfigurationError
from hintguess.game import GameConfig
from hintguess.numerics import backend
from hintguess.numerics.layers import AttentionSpec
from hintguess.presets import PRESETS, get_preset
from hintguess.service import RunStore, score_session_file
from hintguess.training import (
    IQL,
    OBL,
    OTHER_PLAY,
    TrainConfig,
    TrainResult,
    run_obl,
    run_other_play,
    run_selfplay,
)

DEFAULT_STORE = os.environ.get("HINTGUESS_STORE", "./store")


def _game_and_train(args) -> tuple[GameConfig, TrainConfig]:
    if args.game_config:
        game = GameConfig.from_dict(json.loads(Path(args.game_config).read_text()))
        train = TrainConfig()
    else:
        game, train = get_preset(args.preset)
    if getattr(args, "same_hand", False):
        game = replace(game, same_hand=True)
    overrides = {}
    for name in ("episodes", "lr", "batch_size", "update_every", "replay_capacity"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        train = replace(train, **overrides)
    return game, train


def _arch(args) -> ArchitectureKind:
    name = args.arch
    if name in ("mlp", "mlp_action_in"):
        return ArchitectureKind(name)
    spec = AttentionSpec(
        heads=getattr(args, "heads", 1),
        layers=getattr(args, "layers", 1),
        model_dim=getattr(args, "model_dim", 0),
        scale_mode=getattr(args, "scale_mode", "by_key_dim"),
    )
    return ArchitectureKind(name, spec)


def _add_common_train_args(p):
    p.add_argument("--preset", default="n5-desk", choices=sorted(PRESETS))
    p.add_argument("--game-config", help="JSON game-config file (overrides --preset's game)")
    p.add_argument("--arch", default="mlp", choices=ALL_KINDS)
    p.add_argument("--heads", type=int, default=1)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--model-dim", type=int, default=0)
    p.add_argument("--scale-mode", default="by_key_dim", choices=["by_key_dim", "by_input_count"])
    p.add_argument("--same-hand", action="store_true")
    p.add_argument("--episodes", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--update-every", type=int)
    p.add_argument("--replay-capacity", type=int)


def _write_run(store: RunStore, run_id: str, result: TrainResult, wall_clock: float) -> dict:
    run_dir = store.run_dir(run_id, create=True)
    # only determinism-relevant fields go into the digested checkpoint payload
    ckpt_manifest = {
        "game": result.game.to_dict(),
        "train": asdict(result.config),
        "architecture": result.kind.name,
        "attention": None
        if result.kind.attention is None
        else asdict(result.kind.attention),
        "variant": result.config.variant,
        "seed": result.config.seed,
        "backend": backend.active_backend(),
    }
    manifest_base = {
        "run_id": run_id,
        **ckpt_manifest,
        "wall_clock_s": round(wall_clock, 3),
    }
    h_digest = save_checkpoint(result.hinter, run_dir / "hinter.ckpt.json", ckpt_manifest)
    g_digest = save_checkpoint(result.guesser, run_dir / "guesser.ckpt.json", ckpt_manifest)
    with open(run_dir / "curve.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["episode", "epsilon", "interval_score", "loss_hinter", "loss_guesser"])
        for pt in result.curve:
            w.writerow([pt.episode, f"{pt.epsilon:.6f}", f"{pt.score:.6f}", pt.loss_hinter, pt.loss_guesser])
    manifest = {**manifest_base, "hinter_digest": h_digest, "guesser_digest": g_digest}
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return manifest


def cmd_train(args) -> int:
    if args.seeds:
        return _train_grid(args)
    game, train = _game_and_train(args)
    train = replace(train, seed=args.seed, variant=args.variant, obl_level=args.obl_level)
    kind = _arch(args)
    store = RunStore(args.store)
    run_id = args.run_id or f"{args.preset}-{kind.name}-{train.variant}{train.obl_level if train.variant == OBL else ''}-s{train.seed}"
    t0 = time.time()
    if train.variant == IQL:
        result = run_selfplay(train, game, kind)
    elif train.variant == OTHER_PLAY:
        result = run_other_play(train, game, kind, identity_only=args.identity_only)
    else:
        lower = None
        if train.obl_level > 1:
            if not args.lower_run:
                raise ConfigurationError("OBL level > 1 needs --lower-run")
            lower = load_checkpoint(store.run_dir(args.lower_run) / "hinter.ckpt.json")
        result = run_obl(train, game, kind, level=train.obl_level, lower_hinter=lower)
    manifest = _write_run(store, run_id, result, time.time() - t0)
    print(json.dumps({k: manifest[k] for k in ("run_id", "hinter_digest", "guesser_digest", "wall_clock_s")}))
    return 0


def _parse_seeds(spec: str) -> list[int]:
    seeds = []
    for part in spec.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds


def _child_train_argv(args, seed: int) -> list[str]:
    argv = [
        "--store", str(args.store), "train",
        "--preset", args.preset,
        "--arch", args.arch,
        "--variant", args.variant,
        "--obl-level", str(args.obl_level),
        "--heads", str(args.heads),
        "--layers", str(args.layers),
        "--model-dim", str(args.model_dim),
        "--scale-mode", args.scale_mode,
        "--seed", str(seed),
    ]
    if args.game_config:
        argv += ["--game-config", args.game_config]
    if args.same_hand:
        argv.append("--same-hand")
    if args.identity_only:
        argv.append("--identity-only")
    if args.lower_run:
        argv += ["--lower-run", args.lower_run]
    for flag, name in (
        ("--episodes", "episodes"),
        ("--lr", "lr"),
        ("--batch-size", "batch_size"),
        ("--update-every", "update_every"),
        ("--replay-capacity", "replay_capacity"),
    ):
        value = getattr(args, name)
        if value is not None:
            argv += [flag, str(value)]
    if args.run_id:
        argv += ["--run-id", f"{args.run_id}-s{seed}"]
    return argv


def _train_grid(args) -> int:
    """Fan seeds out to worker subprocesses; aggregate through the store."""
    seeds = _parse_seeds(args.seeds)
    env = {**os.environ, "OMP_NUM_THREADS": "1", "OPENBLAS_NUM_THREADS": "1", "MKL_NUM_THREADS": "1"}

    def one(seed: int) -> int:
        cmd = [sys.executable, "-m", "hintguess.cli"] + _child_train_argv(args, seed)
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
        sys.stdout.write(proc.stdout)
        if proc.returncode:
            sys.stderr.write(proc.stderr)
        return proc.returncode

    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        codes = list(pool.map(one, seeds))
    return max(codes) if codes else 0


def _load_pairs(store: RunStore, run_specs: list[str]):
    run_dirs = []
    for spec in run_specs:
        matches = sorted(glob.glob(str(store.root / "runs" / spec)))
        matches = [m for m in matches if Path(m).is_dir()]
        if not matches and Path(spec).is_dir():
            matches = [spec]
        if not matches:
            raise ConfigurationError(f"no runs match {spec!r}")
        run_dirs.extend(matches)
    pairs, seeds = [], []
    for d in run_dirs:
        d = Path(d)
        hinter = load_checkpoint(d / "hinter.ckpt.json")
        guesser = load_checkpoint(d / "guesser.ckpt.json")
        pairs.append((hinter, guesser))
        seeds.append(hinter.seed)
    return pairs, seeds, run_dirs


def _probe_rates(pairs, seeds, repetitions: int):
    """Exact-match probe rate per seed (for Sim/Dissim labeling)."""
    rates = {}
    for (hinter, guesser), seed in zip(pairs, seeds):
        report = evaluation.probe_scenarios(hinter, guesser, repetitions)
        rates[seed] = report.rate("exact_match").human_pct
    return rates


def cmd_crossplay(args) -> int:
    store = RunStore(args.store)
    pairs, seeds, _ = _load_pairs(store, args.runs)
    report = evaluation.crossplay_matrix(pairs, args.games, seeds=seeds)
    rates = None
    if args.probe_reps and pairs[0][0].config.spaces.sizes == (3, 3) and pairs[0][0].config.encoding == "one_hot":
        try:
            rates = _probe_rates(pairs, seeds, args.probe_reps)
        except (ConfigurationError, ValueError):
            rates = None  # flat MLP kinds cannot replay the smaller probe hands
    evaluation.detect_clusters(report, rates, theta=args.theta)
    out = report.to_dict()
    if rates:
        out["exact_match_rates"] = rates
    text = json.dumps(out, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return 0


def cmd_probe(args) -> int:
    store = RunStore(args.store)
    pairs, seeds, dirs = _load_pairs(store, args.runs)
    if args.cross:
        combos = [(pairs[i][0], pairs[j][1], f"{seeds[i]}x{seeds[j]}") for i in range(len(pairs)) for j in range(len(pairs)) if i != j]
    else:
        combos = [(h, g, str(s)) for (h, g), s in zip(pairs, seeds)]
    out = {}
    for hinter, guesser, tag in combos:
        out[tag] = evaluation.probe_scenarios(hinter, guesser, args.repetitions).to_dict()
    text = json.dumps(out, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return 0


def cmd_condmat(args) -> int:
    store = RunStore(args.store)
    pairs, _, _ = _load_pairs(store, args.runs)
    result = evaluation.conditional_matrix(pairs, args.games, args.kind)
    text = json.dumps(result.to_dict(), indent=1)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return 0


def cmd_ordermatch(args) -> int:
    store = RunStore(args.store)
    pairs, seeds, _ = _load_pairs(store, args.runs)
    out = {}
    for (hinter, guesser), seed in zip(pairs, seeds):
        rng = np.random.default_rng([4040, seed])
        out[str(seed)] = evaluation.order_matching_rate(hinter, guesser, args.games, rng)
    text = json.dumps(out, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return 0


def cmd_chance(args) -> int:
    if args.game_config:
        game = GameConfig.from_dict(json.loads(Path(args.game_config).read_text()))
    else:
        game, _ = get_preset(args.preset)
    result = evaluation.chance_baseline(game, args.games, np.random.default_rng(args.seed), args.mode)
    print(json.dumps(result))
    return 0


def cmd_gradcheck(args) -> int:
    from hintguess.validation import architecture_grad_check

    game, _ = _game_and_train(args)
    worst = {}
    kinds = [args.arch] if args.arch != "all" else list(ALL_KINDS)
    for name in kinds:
        kind = ArchitectureKind(name) if name in ("mlp", "mlp_action_in") else ArchitectureKind(
            name, AttentionSpec(heads=args.heads, layers=args.layers)
        )
        worst[name] = architecture_grad_check(kind, game, samples=args.samples, seed=args.seed)
    print(json.dumps(worst, indent=1))
    return 0 if all(v < args.tolerance for v in worst.values()) else 1


def cmd_serve(args) -> int:
    import uvicorn

    from hintguess.http_api import create_app

    app = create_app(args.store, static_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_session_score(args) -> int:
    result = score_session_file(args.session, args.checkpoints)
    text = json.dumps(result, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return 0


def cmd_export(args) -> int:
    report = json.loads(Path(args.report).read_text())
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "matrix" in report and "seeds" in report:  # cross-play report
        path = out_dir / "crossplay_matrix.csv"
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["hinter_seed\\guesser_seed"] + [str(s) for s in report["seeds"]])
            for seed, row in zip(report["seeds"], report["matrix"]):
                w.writerow([seed] + [f"{v:.4f}" for v in row])
        written.append(str(path))
    elif "matrix" in report and "kind" in report:  # conditional matrix
        path = out_dir / f"conditional_{report['kind']}.csv"
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            for row in report["matrix"]:
                w.writerow([f"{v:.4f}" for v in row])
        written.append(str(path))
    else:  # probe-style nested dict
        path = out_dir / "probe_table.csv"
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["pair", "scenario", "human_pct", "win_pct"])
            for tag, scenarios in report.items():
                for name, vals in scenarios.items():
                    w.writerow([tag, name, vals["human_pct"], vals["win_pct"]])
        written.append(str(path))
    print(json.dumps({"written": written}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hintguess", description=__doc__)
    parser.add_argument("--store", default=DEFAULT_STORE, help="artifact store root (env HINTGUESS_STORE)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one run or a seed grid")
    _add_common_train_args(p)
    p.add_argument("--variant", default=IQL, choices=[IQL, OTHER_PLAY, OBL])
    p.add_argument("--obl-level", type=int, default=1)
    p.add_argument("--lower-run", help="run id holding the level k-1 hinter (OBL)")
    p.add_argument("--identity-only", action="store_true", help="degenerate symmetry group (OP debug)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", help="comma/range list for a grid, e.g. 0-7")
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--run-id")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("crossplay", help="score every hinter x guesser seed pairing")
    p.add_argument("--runs", nargs="+", required=True, help="run ids or globs under <store>/runs")
    p.add_argument("--games", type=int, default=2000)
    p.add_argument("--theta", type=float, default=0.9)
    p.add_argument("--probe-reps", type=int, default=200, help="0 disables Sim/Dissim labeling")
    p.add_argument("--out")
    p.set_defaults(func=cmd_crossplay)

    p = sub.add_parser("probe", help="run the four probe scenarios for pairs")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--repetitions", type=int, default=1000)
    p.add_argument("--cross", action="store_true", help="probe cross-seed pairings instead of self pairs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("condmat", help="conditional probability matrix over greedy play")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--games", type=int, default=1000)
    p.add_argument("--kind", default=evaluation.GUESS_GIVEN_HINT, choices=[evaluation.GUESS_GIVEN_HINT, evaluation.HINT_GIVEN_TARGET])
    p.add_argument("--out")
    p.set_defaults(func=cmd_condmat)

    p = sub.add_parser("ordermatch", help="same/reversed order matching rates (sinusoidal game)")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--games", type=int, default=1000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ordermatch)

    p = sub.add_parser("chance", help="uniform-random baseline score")
    p.add_argument("--preset", default="n5-desk", choices=sorted(PRESETS))
    p.add_argument("--game-config")
    p.add_argument("--games", type=int, default=100_000)
    p.add_argument("--mode", default=evaluation.HAND_CARD, choices=[evaluation.HAND_CARD, evaluation.LEGAL_SET])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_chance)

    p = sub.add_parser("gradcheck", help="finite-difference gradient validation")
    p.add_argument("--preset", default="n3-desk", choices=sorted(PRESETS))
    p.add_argument("--game-config")
    p.add_argument("--arch", default="all", choices=list(ALL_KINDS) + ["all"])
    p.add_argument("--heads", type=int, default=1)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--samples", type=int, default=3)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8677)
    p.add_argument("--frontend", help="static bundle directory to serve at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("session-score", help="score a closed session file")
    p.add_argument("--session", required=True)
    p.add_argument("--checkpoints", nargs="*", default=[])
    p.add_argument("--out")
    p.set_defaults(func=cmd_session_score)

    p = sub.add_parser("export", help="write report JSON out as CSV tables")
    p.add_argument("--report", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
