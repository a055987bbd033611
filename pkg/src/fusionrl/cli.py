"""Unified command-line entry point.

Exit codes: 0 success, 1 validation/usage error, 2 runtime failure. All
randomness derives from the seed in the effective configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import checkpoints
from .config import ConfigError, RunConfig, load_config


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits with code 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="fusionrl", description="Human-feedback fusion pipeline")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("dedup", parents=[], help="cluster duplicate scenes and pick representatives")
    p.add_argument("--input", required=True, help="dataset dir with visible/ and infrared/ subdirs")
    p.add_argument("--threshold", type=float, default=0.85)
    p.add_argument("--out", required=True, help="clusters JSON output path")
    p.add_argument("--embedder-grid", type=int, default=8)

    p = sub.add_parser("build-manifest", help="assemble fusion triplets into a manifest")
    p.add_argument("--clusters", required=True, help="clusters JSON from the dedup step")
    p.add_argument("--fused-dir", action="append", required=True, metavar="METHOD=DIR")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--splits", default="0.786,0.107,0.107")
    p.add_argument("--exclude", help="file listing pair_ids to drop (expert screening)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("pretrain-fusion", help="warm up the fusion policy on the proxy loss")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--history", help="history JSON output path")

    p = sub.add_parser("train-reward", help="train the dual-head reward model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--annotations", required=True, help="directory of {triplet_id}.json documents")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--history", help="history JSON output path")

    p = sub.add_parser("eval-reward", help="run reward inference over a manifest")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--out-dir", help="write per-triplet heatmap and overlay PNGs here")

    p = sub.add_parser("finetune-grpo", help="region-level GRPO fine-tuning of the policy")
    p.add_argument("--policy", required=True)
    p.add_argument("--reward", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--config")
    p.add_argument("--segmenter", choices=["grid", "superpixel"], default="grid")
    p.add_argument("--regions", type=int, default=4)
    p.add_argument("--epochs", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--history", help="history CSV output path")
    p.add_argument("--samples", help="per-epoch fused sample PNG directory")

    p = sub.add_parser("fuse", help="fuse one (visible, infrared) pair")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--visible", required=True)
    p.add_argument("--infrared", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="reference metrics over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--split", choices=["train", "val", "test"])

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--manifest", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8731)

    p = sub.add_parser("export-overlays", help="overlay predicted artifact circles on fused images")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.5)

    return parser


def _load_run_config(path: str | None) -> RunConfig:
    return load_config(path) if path else RunConfig()


def _cmd_dedup(args) -> int:
    from .data import GrayDownsampleEmbedder, dedup_cluster, discover_pairs, embed_visible, score_cluster, select_representative

    pairs = discover_pairs(args.input)
    if not pairs:
        raise UsageError(f"no image pairs found under {args.input!r}")
    embedder = GrayDownsampleEmbedder(grid=args.embedder_grid)
    embeddings = [embed_visible(p, embedder) for p in pairs]
    clusters = dedup_cluster(embeddings, args.threshold)
    by_id = {p.pair_id: p for p in pairs}
    out_clusters = []
    for cluster in clusters:
        scores = score_cluster([by_id[m] for m in cluster.member_ids])
        representative = select_representative(cluster, scores)
        out_clusters.append(
            {"cluster_id": cluster.cluster_id, "members": cluster.member_ids, "representative": representative}
        )
    payload = {
        "input_dir": os.path.abspath(args.input),
        "threshold": args.threshold,
        "pairs": {
            p.pair_id: {"visible": os.path.abspath(p.visible_path), "infrared": os.path.abspath(p.infrared_path)}
            for p in pairs
        },
        "clusters": out_clusters,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    print(f"{len(pairs)} pairs -> {len(clusters)} clusters -> {args.out}")
    return 0


def _cmd_build_manifest(args) -> int:
    from .data import ImagePair, assemble_manifest, save_manifest

    with open(args.clusters, "r", encoding="utf-8") as fh:
        clusters = json.load(fh)
    fused_dirs = {}
    for item in args.fused_dir:
        method, _, directory = item.partition("=")
        if not method or not directory:
            raise UsageError(f"--fused-dir expects METHOD=DIR, got {item!r}")
        fused_dirs[method] = directory
    splits = tuple(float(x) for x in args.splits.split(","))
    if len(splits) != 3:
        raise UsageError(f"--splits expects three comma-separated fractions, got {args.splits!r}")
    exclude = set()
    if args.exclude:
        with open(args.exclude, "r", encoding="utf-8") as fh:
            exclude = {line.strip() for line in fh if line.strip()}
    retained = [c["representative"] for c in clusters["clusters"]]
    pairs = [
        ImagePair.from_files(pid, clusters["pairs"][pid]["visible"], clusters["pairs"][pid]["infrared"])
        for pid in retained
    ]
    manifest = assemble_manifest(pairs, fused_dirs, splits, seed=args.seed, exclude=exclude)
    save_manifest(manifest, args.out)
    print(f"{len(manifest.triplets)} triplets ({len(manifest.skipped)} skipped) -> {args.out}")
    return 0


def _cmd_pretrain_fusion(args) -> int:
    from .data import load_manifest
    from .policy import FusionPolicy, PolicyConfig, pretrain_supervised

    import torch

    cfg = _load_run_config(args.config)
    seed = args.seed if args.seed is not None else cfg.policy.seed
    epochs = args.epochs if args.epochs is not None else cfg.policy.pretrain_epochs
    lr = args.lr if args.lr is not None else cfg.policy.pretrain_lr
    manifest = load_manifest(args.manifest)
    torch.manual_seed(seed)
    policy = FusionPolicy(PolicyConfig(channels=cfg.policy.channels, seed=seed))
    policy, history = pretrain_supervised(
        policy, manifest, epochs=epochs, lr=lr, batch_size=cfg.policy.pretrain_batch, seed=seed
    )
    checkpoints.save_policy(args.out, policy)
    if args.history:
        with open(args.history, "w", encoding="utf-8") as fh:
            json.dump(history, fh, indent=2, sort_keys=True)
    print(f"pretrained policy -> {args.out} (final loss {history[-1]['loss']:.6f})")
    return 0


def _cmd_train_reward(args) -> int:
    from .data import load_manifest
    from .reward import RewardModel, train_reward

    cfg = _load_run_config(args.config)
    if args.seed is not None:
        cfg.reward.train.seed = args.seed
    if args.epochs is not None:
        cfg.reward.train.epochs = args.epochs
    manifest = load_manifest(args.manifest)
    model, history = train_reward(manifest, args.annotations, cfg.reward.train, encoder_cfg=cfg.reward.encoder)
    checkpoints.save_reward_model(args.out, model)
    if args.history:
        with open(args.history, "w", encoding="utf-8") as fh:
            json.dump(history, fh, indent=2, sort_keys=True)
    print(f"reward model -> {args.out} (final loss {history[-1]['total_loss']:.6f})")
    return 0


def _cmd_eval_reward(args) -> int:
    from .annotations import denormalize_scores
    from .data import load_manifest
    from .images import load_image, save_image
    from .overlay import draw_overlay

    model = checkpoints.load_reward_model(args.ckpt)
    manifest = load_manifest(args.manifest)
    report = {}
    for t in manifest.triplets:
        fused = load_image(t.fused_path)
        output = model.score_triplet(load_image(t.visible_path), load_image(t.infrared_path), fused)
        report[t.triplet_id] = {
            "scores_normalized": [float(s) for s in output.scores],
            "scores_1_to_5": list(denormalize_scores(output.scores).as_tuple()),
            "heatmap_mean": float(output.heatmap.mean()),
        }
        if args.out_dir:
            os.makedirs(args.out_dir, exist_ok=True)
            save_image(os.path.join(args.out_dir, f"{t.triplet_id}_heatmap.png"), output.heatmap)
            save_image(
                os.path.join(args.out_dir, f"{t.triplet_id}_overlay.png"), draw_overlay(fused, output.heatmap)
            )
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    print(f"reward report for {len(report)} triplets -> {args.report}")
    return 0


def _cmd_finetune_grpo(args) -> int:
    from .data import load_manifest
    from .grpo import finetune_grpo, save_history_csv

    cfg = _load_run_config(args.config)
    grpo_cfg = cfg.grpo
    if args.seed is not None:
        grpo_cfg.seed = args.seed
    if args.epochs is not None:
        grpo_cfg.epochs = args.epochs
    if args.beta is not None:
        grpo_cfg.beta = args.beta
    policy = checkpoints.load_policy(args.policy)
    reward_model = checkpoints.load_reward_model(args.reward)
    manifest = load_manifest(args.manifest)
    policy, history = finetune_grpo(
        policy, reward_model, manifest, grpo_cfg, segmenter=args.segmenter, k_target=args.regions,
        sample_dir=args.samples,
    )
    checkpoints.save_policy(args.out, policy)
    if args.history:
        save_history_csv(history, args.history)
    print(
        f"fine-tuned policy -> {args.out} "
        f"(reward {history[0]['mean_reward']:.6f} -> {history[-1]['mean_reward']:.6f})"
    )
    return 0


def _cmd_fuse(args) -> int:
    from .images import load_image, save_image
    from .policy import fuse

    policy = checkpoints.load_policy(args.ckpt)
    fused = fuse(policy, load_image(args.visible), load_image(args.infrared))
    save_image(args.out, fused)
    print(f"fused image -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    from .data import load_manifest
    from .metrics import evaluate_manifest

    manifest = load_manifest(args.manifest)
    report = evaluate_manifest(manifest, split=args.split)
    report.write_csv(args.report)
    agg = report.aggregate
    print("mean " + " ".join(f"{k}={v:.4f}" for k, v in agg.items()))
    return 0


def _cmd_serve(args) -> int:
    from .data import load_manifest
    from .service import serve_annotations

    manifest = load_manifest(args.manifest)
    server = serve_annotations(manifest, args.store, host=args.host, port=args.port)
    print(f"annotation service listening on {server.address}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def _cmd_export_overlays(args) -> int:
    from .data import load_manifest
    from .overlay import export_overlays

    model = checkpoints.load_reward_model(args.ckpt)
    manifest = load_manifest(args.manifest)
    written = export_overlays(model, manifest, args.out, threshold=args.threshold)
    print(f"{len(written)} overlays -> {args.out}")
    return 0


_COMMANDS = {
    "dedup": _cmd_dedup,
    "build-manifest": _cmd_build_manifest,
    "pretrain-fusion": _cmd_pretrain_fusion,
    "train-reward": _cmd_train_reward,
    "eval-reward": _cmd_eval_reward,
    "finetune-grpo": _cmd_finetune_grpo,
    "fuse": _cmd_fuse,
    "evaluate": _cmd_evaluate,
    "serve": _cmd_serve,
    "export-overlays": _cmd_export_overlays,
}


def run_cli(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))
