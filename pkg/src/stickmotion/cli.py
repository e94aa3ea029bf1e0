"""Command-line pipeline: corpus, pretraining, training, generation, serving.

Commands chain through one workspace directory (``--home`` or the
``STICKMOTION_HOME`` env var): make-corpus feeds both pretraining commands,
train consumes the corpus plus both frozen towers, and generate / evaluate /
serve consume the self-contained denoiser checkpoint.  Every flag mirrors a
flat ``key = value`` config key; explicit flags win over the config file.

All summaries print as canonical sorted-key JSON, and artifacts carry no
timestamps, so a repeated command with the same config is byte-identical.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

import numpy as np
import torch

from . import checkpoint as ckpt
from . import diffusion as diff
from . import metrics as met
from . import pretrain as pre
from . import service as svc
from . import training as tr
from .corpus import (CorpusConfig, Vocabulary, generate_corpus, load_corpus,
                     save_corpus)
from .denoiser import (ConditionEmbedder, ConditionFusionDenoiser,
                       DenoiserConfig, SLOT_NAMES)
from .encoders import StickmanEncoder, TextEncoder
from .primitives import DEFAULT_FPS
from .sga import (CANVAS_FILL, DEFAULT_STYLE, POINTS_PER_STROKE,
                  stickman_from_json, stickman_from_pose, stickman_to_json,
                  svg_preview)
from .workspace import (ConfigFileError, MissingArtifactError, Workspace,
                        canonical_json, coerce, load_config, sha256_path,
                        write_manifest)

# command -> {dest: default}; drives both argparse and config-file validation
_OPTS: dict[str, dict[str, object]] = {}


def _opt(sp: argparse.ArgumentParser, command: str, name: str, default,
         help_text: str, **kwargs):
    dest = name.replace("-", "_")
    _OPTS[command][dest] = default
    if isinstance(default, bool):
        sp.add_argument(f"--{name}", dest=dest, action="store_true",
                        default=default, help=help_text)
    else:
        arg_type = kwargs.pop("type", str if default is None else type(default))
        sp.add_argument(f"--{name}", dest=dest, type=arg_type, default=default,
                        help=f"{help_text} (default: {default})", **kwargs)


def _print(summary: dict):
    sys.stdout.write(canonical_json(summary))


def _config_used(args, command: str) -> dict:
    return {k: getattr(args, k) for k in sorted(_OPTS[command])}


def _sub_state(state: dict, prefix: str) -> dict:
    return {k[len(prefix):]: v for k, v in state.items() if k.startswith(prefix)}


def _prefixed(module: torch.nn.Module, prefix: str) -> dict:
    return {prefix + k: v for k, v in module.state_dict().items()}


# ---------------------------------------------------------------------------
# commands


def cmd_make_corpus(args, ws: Workspace) -> int:
    corpus = generate_corpus(CorpusConfig(
        n_clips=args.n_clips, seed=args.seed, fps=args.fps,
        train_frac=args.train_frac))
    dest = ws.path("corpus")
    if dest.exists():
        shutil.rmtree(dest)
    save_corpus(corpus, dest)
    write_manifest(ws, "make-corpus", _config_used(args, "make-corpus"),
                   inputs={}, outputs={"corpus": dest})
    _print({"clips": len(corpus.clips), "vocabulary": len(corpus.vocab),
            "train": len(corpus.train_clips()), "test": len(corpus.test_clips()),
            "path": str(dest), "digest": sha256_path(dest)})
    return 0


def cmd_pretrain_stickman(args, ws: Workspace) -> int:
    corpus = load_corpus(ws.require("corpus"))
    cfg = pre.StickmanPretrainConfig(
        dim=args.dim, heads=args.heads, depth=args.depth, steps=args.steps,
        batch_size=args.batch_size, lr=args.lr,
        frames_per_clip=args.frames_per_clip, seed=args.seed)
    encoder, decoder, err = pre.train_stickman_autoencoder(
        corpus, cfg, log_every=args.log_every)
    config = {"dim": cfg.dim, "heads": cfg.heads, "depth": cfg.depth,
              "n_points": POINTS_PER_STROKE}
    path = ws.path("stickman-checkpoint")
    ckpt.save_checkpoint(path, "stickman-autoencoder", config,
                         _prefixed(encoder, "encoder.")
                         | _prefixed(decoder, "decoder."))
    write_manifest(ws, "pretrain-stickman", _config_used(args, "pretrain-stickman"),
                   inputs={"corpus": ws.path("corpus")},
                   outputs={"stickman-checkpoint": path})
    _print({"held_out_error": round(err, 6),
            "height_fraction": round(err / CANVAS_FILL, 6),
            "path": str(path), "digest": sha256_path(path)})
    return 0


def cmd_pretrain_evaluator(args, ws: Workspace) -> int:
    corpus = load_corpus(ws.require("corpus"))
    cfg = met.EvaluatorConfig(
        dim=args.dim, heads=args.heads, depth=args.depth, out_dim=args.out_dim,
        steps=args.steps, batch_size=args.batch_size, lr=args.lr,
        temperature=args.temperature, seed=args.seed, min_top1=args.min_top1)
    bundle = met.train_evaluator(corpus, cfg, log_every=args.log_every)
    config = {
        "motion": {"dim": cfg.dim, "heads": cfg.heads, "depth": cfg.depth,
                   "max_len": 120, "out_dim": cfg.out_dim},
        "text": {"vocab_size": len(corpus.vocab), "dim": cfg.dim,
                 "heads": cfg.heads, "depth": cfg.depth, "max_len": 32,
                 "out_dim": cfg.out_dim},
        "retrieval_top1": round(bundle.retrieval_top1, 4),
    }
    path = ws.path("evaluator-checkpoint")
    ckpt.save_checkpoint(path, "evaluator", config,
                         _prefixed(bundle.motion_embedder, "motion.")
                         | _prefixed(bundle.text_encoder, "text."))
    write_manifest(ws, "pretrain-evaluator",
                   _config_used(args, "pretrain-evaluator"),
                   inputs={"corpus": ws.path("corpus")},
                   outputs={"evaluator-checkpoint": path})
    _print({"retrieval_top1": bundle.retrieval_top1, "path": str(path),
            "digest": sha256_path(path)})
    return 0


def _load_towers(ws: Workspace) -> tuple[TextEncoder, StickmanEncoder, dict, dict]:
    stick_cfg, stick_state = ckpt.load_checkpoint(
        ws.require("stickman-checkpoint"), "stickman-autoencoder")
    eval_cfg, eval_state = ckpt.load_checkpoint(
        ws.require("evaluator-checkpoint"), "evaluator")
    stick = StickmanEncoder(dim=stick_cfg["dim"], heads=stick_cfg["heads"],
                            depth=stick_cfg["depth"],
                            n_points=stick_cfg["n_points"])
    stick.load_state_dict(_sub_state(stick_state, "encoder."))
    text = TextEncoder(**eval_cfg["text"])
    text.load_state_dict(_sub_state(eval_state, "text."))
    return text, stick, eval_cfg, stick_cfg


def cmd_train(args, ws: Workspace) -> int:
    corpus = load_corpus(ws.require("corpus"))
    text, stick, eval_cfg, stick_cfg = _load_towers(ws)
    if stick_cfg["dim"] != args.dim or eval_cfg["text"]["dim"] != args.dim:
        print(f"error: tower dims (stickman {stick_cfg['dim']}, text "
              f"{eval_cfg['text']['dim']}) must match --dim {args.dim}; "
              "re-run the pretraining commands with matching --dim",
              file=sys.stderr)
        return 2

    dcfg = DenoiserConfig(dim=args.dim, heads=args.heads,
                          mcm_blocks=args.mcm_blocks,
                          decoder_depth=args.decoder_depth,
                          latent_depth=args.latent_depth,
                          max_text_len=eval_cfg["text"]["max_len"])
    model = ConditionFusionDenoiser(dcfg)
    embedder = ConditionEmbedder(text, stick)
    schedule = diff.make_schedule(args.diffusion_steps, args.alpha_start,
                                  args.alpha_end)
    tcfg = tr.TrainConfig(steps=args.steps, batch_size=args.batch_size,
                          lr=args.lr, warmup=args.warmup, p_text=args.p_text,
                          p_stick=args.p_stick, p_slot=args.p_slot,
                          pose_space_loss=args.pose_space_loss, seed=args.seed)
    trainer = tr.Trainer(model, embedder, corpus, schedule, tcfg)
    trainer.run(log_every=args.log_every)

    lengths = [c.length for c in corpus.clips]
    config = {
        "denoiser": dcfg.to_dict(),
        "text": dict(eval_cfg["text"]),
        "stick": {"dim": stick_cfg["dim"], "heads": stick_cfg["heads"],
                  "depth": stick_cfg["depth"], "n_points": stick_cfg["n_points"]},
        "schedule": {"steps": args.diffusion_steps,
                     "alpha_start": args.alpha_start,
                     "alpha_end": args.alpha_end},
        "fps": corpus.config.fps,
        "vocab": list(corpus.vocab.words),
        "length_bounds": [min(lengths), max(lengths)],
        "default_length": int(np.median(lengths)),
    }
    state = (_prefixed(model, "model.") | _prefixed(text, "text.")
             | _prefixed(stick, "stick.")
             | {"stats.mean": torch.as_tensor(corpus.stats.mean),
                "stats.std": torch.as_tensor(corpus.stats.std)})
    path = ws.path("denoiser-checkpoint")
    ckpt.save_checkpoint(path, "denoiser", config, state)
    write_manifest(ws, "train", _config_used(args, "train"),
                   inputs={"corpus": ws.path("corpus"),
                           "stickman-checkpoint": ws.path("stickman-checkpoint"),
                           "evaluator-checkpoint": ws.path("evaluator-checkpoint")},
                   outputs={"denoiser-checkpoint": path})
    _print({"steps": trainer.step_count,
            "trailing_motion_loss": round(trainer.trailing_motion_loss(), 6),
            "path": str(path), "digest": sha256_path(path)})
    return 0


def _parse_stickman_specs(raw) -> list[str]:
    if raw is None:
        return []
    if isinstance(raw, str):
        return [s for s in raw.split(",") if s]
    return list(raw)


def cmd_generate(args, ws: Workspace) -> int:
    bundle = svc.load_bundle(ws)
    stickmen: dict[int, np.ndarray] = {}
    stick_files: dict[str, Path] = {}
    for spec in _parse_stickman_specs(args.stickman):
        position, _, file_part = spec.partition("=")
        if position not in SLOT_NAMES or not file_part:
            print(f"error: --stickman wants position=file.json with position "
                  f"in {{{', '.join(SLOT_NAMES)}}}, got {spec!r}",
                  file=sys.stderr)
            return 2
        data = json.loads(Path(file_part).read_text())
        stickmen[SLOT_NAMES.index(position)] = stickman_from_json(data).strokes
        stick_files[f"stickman-{position}"] = Path(file_part)

    tokens = bundle.vocab.encode(args.text) if args.text else None
    length = args.length if args.length else bundle.default_length
    request = diff.GenerationRequest(length=length, tokens=tokens,
                                     stickmen=stickmen)
    mixture = diff.MixtureConfig(w=args.w, p_stick=args.p_stick)
    payload = svc.run_generation(bundle, request, mixture, args.seed)
    payload["text"] = args.text
    payload["mixture"] = {"w": args.w, "p_stick": args.p_stick}

    out = Path(args.out) if args.out else ws.outputs_dir / f"gen-{args.seed}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(canonical_json(payload))
    write_manifest(ws, "generate", _config_used(args, "generate"),
                   inputs={"denoiser-checkpoint": ws.path("denoiser-checkpoint"),
                           **stick_files},
                   outputs={"motion": out})
    _print({"path": str(out), "digest": sha256_path(out), "length": length,
            "argmax": payload["argmax"]})
    return 0


def cmd_evaluate(args, ws: Workspace) -> int:
    corpus = load_corpus(ws.require("corpus"))
    bundle = svc.load_bundle(ws)
    eval_cfg, eval_state = ckpt.load_checkpoint(
        ws.require("evaluator-checkpoint"), "evaluator")
    motion_emb = met.MotionEmbedder(**eval_cfg["motion"])
    motion_emb.load_state_dict(_sub_state(eval_state, "motion."))
    text_tower = TextEncoder(**eval_cfg["text"])
    text_tower.load_state_dict(_sub_state(eval_state, "text."))

    held = corpus.test_clips()
    if len(held) < args.samples:
        print(f"error: corpus test split has {len(held)} clips, "
              f"--samples {args.samples} requested", file=sys.stderr)
        return 2
    picked = held[: args.samples]
    rng = np.random.default_rng(args.seed)
    mixture = diff.MixtureConfig(w=args.w, p_stick=args.p_stick)

    def batched_generate(requests, seed):
        by_len: dict[int, list[int]] = {}
        for i, r in enumerate(requests):
            by_len.setdefault(r.length, []).append(i)
        out = [None] * len(requests)
        for length in sorted(by_len):
            idx = by_len[length]
            for k in range(0, len(idx), args.batch_size):
                chunk = idx[k : k + args.batch_size]
                results = diff.generate_batch(
                    bundle.model, bundle.embedder, bundle.schedule,
                    bundle.stats, [requests[i] for i in chunk], mixture,
                    seed + chunk[0])
                for i, res in zip(chunk, results):
                    out[i] = res
        return out

    # text-conditioned set against ground truth
    text_requests = [diff.GenerationRequest(length=c.length, tokens=c.tokens)
                     for c in picked]
    gen = batched_generate(text_requests, args.seed)
    m_gen = met.embed_motions(motion_emb, [g.features for g in gen], corpus.stats)
    m_gt = met.embed_motions(motion_emb, [c.features() for c in picked],
                             corpus.stats)
    t_emb = met.embed_texts(text_tower, [c.tokens for c in picked])
    rp = met.r_precision(m_gen, t_emb, rng)

    # repeated generations per text for within-condition spread
    groups = []
    for c in picked[: args.mm_texts]:
        reqs = [diff.GenerationRequest(length=c.length, tokens=c.tokens)
                for _ in range(args.mm_repeats)]
        reps = batched_generate(reqs, args.seed + 7919)
        groups.append(met.embed_motions(motion_emb,
                                        [g.features for g in reps],
                                        corpus.stats))

    # stickman adherence on text+stick generations
    report = met.StiSimReport()
    sketch_rng = np.random.default_rng([args.seed, 31])
    stick_requests, targets = [], []
    for c in picked[: args.stisim_samples]:
        pose = c.absolute_joints()[c.length // 2]
        target = stickman_from_pose(pose, DEFAULT_STYLE, sketch_rng)
        targets.append(target)
        stick_requests.append(diff.GenerationRequest(
            length=c.length, tokens=c.tokens, stickmen={1: target.strokes}))
    stick_gen = batched_generate(stick_requests, args.seed + 104729)
    for target, res in zip(targets, stick_gen):
        absolute = res.root[:, None, :] + res.joints
        distances = met.per_frame_stick_distances(target, absolute)
        report.add(distances, res.slot_argmax[1])

    summary = {
        "fid": met.frechet_distance(m_gen, m_gt),
        "r_precision_top1": rp[1],
        "r_precision_top2": rp[2],
        "r_precision_top3": rp[3],
        "mm_dist": met.mm_dist(m_gen, t_emb),
        "diversity": met.diversity(m_gen, rng),
        "multimodality": met.multimodality(groups, rng),
        "stisim": report.overall,
        "stisim_mean": report.mean_value,
        "samples": args.samples,
        "evaluator_top1": eval_cfg.get("retrieval_top1"),
    }
    out = Path(args.out) if args.out else ws.reports_dir / "eval.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(canonical_json(summary))
    write_manifest(ws, "evaluate", _config_used(args, "evaluate"),
                   inputs={"corpus": ws.path("corpus"),
                           "denoiser-checkpoint": ws.path("denoiser-checkpoint"),
                           "evaluator-checkpoint": ws.path("evaluator-checkpoint")},
                   outputs={"report": out})
    _print(summary)
    return 0


def cmd_sga_preview(args, ws: Workspace) -> int:
    from .corpus import build_clip
    clip = build_clip(0, args.seed, DEFAULT_FPS, Vocabulary(),
                      primitive=args.primitive)
    frames = np.linspace(0, clip.length - 1, args.count).astype(int)
    rng = np.random.default_rng([args.seed, 55])
    absolute = clip.absolute_joints()
    stickmen = [stickman_from_pose(absolute[f], DEFAULT_STYLE, rng)
                for f in frames]
    ws.previews_dir.mkdir(parents=True, exist_ok=True)
    svg_path = ws.previews_dir / f"sga-{args.seed}.svg"
    svg_path.write_text(svg_preview(stickmen))
    # one stroke file per stickman, each directly usable as --stickman input
    stroke_paths = []
    for f, stickman in zip(frames, stickmen):
        p = ws.previews_dir / f"sga-{args.seed}-frame{int(f)}.json"
        p.write_text(canonical_json(stickman_to_json(stickman)))
        stroke_paths.append(str(p))
    _print({"text": clip.text, "primitive": clip.primitive,
            "frames": [int(f) for f in frames], "svg": str(svg_path),
            "strokes": stroke_paths})
    return 0


def cmd_serve(args, ws: Workspace) -> int:
    import uvicorn
    bundle = svc.load_bundle(ws)
    app = svc.create_app(bundle)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


COMMANDS = {
    "make-corpus": cmd_make_corpus,
    "pretrain-stickman": cmd_pretrain_stickman,
    "pretrain-evaluator": cmd_pretrain_evaluator,
    "train": cmd_train,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "sga-preview": cmd_sga_preview,
    "serve": cmd_serve,
}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="stickmotion",
        description="stickman-conditioned text-to-motion pipeline")
    parser.add_argument("--home", help="workspace root (or STICKMOTION_HOME)")
    parser.add_argument("--config", help="flat key = value config file")
    sub = parser.add_subparsers(dest="command", required=True)
    sps: dict[str, argparse.ArgumentParser] = {}

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_text)
        sps[name] = sp
        _OPTS.setdefault(name, {})
        return sp

    sp = command("make-corpus", "synthesize the procedural motion corpus")
    _opt(sp, "make-corpus", "n-clips", 2000, "clips to generate")
    _opt(sp, "make-corpus", "seed", 0, "corpus seed")
    _opt(sp, "make-corpus", "fps", DEFAULT_FPS, "frames per second")
    _opt(sp, "make-corpus", "train-frac", 0.9, "train split fraction")

    sp = command("pretrain-stickman", "train the stickman autoencoder tower")
    _opt(sp, "pretrain-stickman", "dim", 128, "embedding width")
    _opt(sp, "pretrain-stickman", "heads", 4, "attention heads")
    _opt(sp, "pretrain-stickman", "depth", 4, "encoder blocks")
    _opt(sp, "pretrain-stickman", "steps", 1200, "optimizer steps")
    _opt(sp, "pretrain-stickman", "batch-size", 32, "poses per step")
    _opt(sp, "pretrain-stickman", "lr", 1e-3, "learning rate")
    _opt(sp, "pretrain-stickman", "frames-per-clip", 4, "poses sampled per clip")
    _opt(sp, "pretrain-stickman", "seed", 0, "training seed")
    _opt(sp, "pretrain-stickman", "log-every", 200, "log cadence, 0 = silent")

    sp = command("pretrain-evaluator", "train the contrastive text-motion towers")
    _opt(sp, "pretrain-evaluator", "dim", 128, "embedding width")
    _opt(sp, "pretrain-evaluator", "heads", 4, "attention heads")
    _opt(sp, "pretrain-evaluator", "depth", 2, "encoder blocks")
    _opt(sp, "pretrain-evaluator", "out-dim", 64, "joint embedding width")
    _opt(sp, "pretrain-evaluator", "steps", 1500, "optimizer steps")
    _opt(sp, "pretrain-evaluator", "batch-size", 48, "pairs per step")
    _opt(sp, "pretrain-evaluator", "lr", 5e-4, "peak learning rate")
    _opt(sp, "pretrain-evaluator", "temperature", 0.07, "contrastive temperature")
    _opt(sp, "pretrain-evaluator", "seed", 0, "training seed")
    _opt(sp, "pretrain-evaluator", "min-top1", 0.5, "retrieval quality gate")
    _opt(sp, "pretrain-evaluator", "log-every", 100, "log cadence, 0 = silent")

    sp = command("train", "train the condition-fusion denoiser")
    _opt(sp, "train", "dim", 128, "model width (must match the towers)")
    _opt(sp, "train", "heads", 4, "attention heads")
    _opt(sp, "train", "mcm-blocks", 2, "condition-fusion blocks")
    _opt(sp, "train", "decoder-depth", 2, "feat-decoder layers per condition")
    _opt(sp, "train", "latent-depth", 1, "latent-encoder layers per block")
    _opt(sp, "train", "steps", 2000, "optimizer steps")
    _opt(sp, "train", "batch-size", 32, "clips per step")
    _opt(sp, "train", "lr", 2e-4, "peak learning rate")
    _opt(sp, "train", "warmup", 1000, "linear warmup steps")
    _opt(sp, "train", "p-text", 0.7, "keep-text probability during dropout")
    _opt(sp, "train", "p-stick", 0.7, "keep-stickman probability during dropout")
    _opt(sp, "train", "p-slot", 0.5, "per-slot stickman presence probability")
    _opt(sp, "train", "pose-space-loss", False,
         "reconstruct x0 for the motion loss instead of matching noise")
    _opt(sp, "train", "diffusion-steps", 200, "noise schedule length T")
    _opt(sp, "train", "alpha-start", 0.9999, "alpha at t=1")
    _opt(sp, "train", "alpha-end", 0.98, "alpha at t=T")
    _opt(sp, "train", "seed", 0, "training seed")
    _opt(sp, "train", "log-every", 100, "log cadence, 0 = silent")

    sp = command("generate", "sample a motion from the trained model")
    _opt(sp, "generate", "text", None, "text prompt")
    sp.add_argument("--stickman", action="append", default=None,
                    metavar="POSITION=FILE",
                    help="stroke JSON for a slot; repeatable, "
                         "positions start/middle/end")
    _OPTS["generate"]["stickman"] = None
    _opt(sp, "generate", "length", 0, "frames to generate (0 = model default)")
    _opt(sp, "generate", "w", 2.5, "guidance weight (> 1)")
    _opt(sp, "generate", "p-stick", 0.2, "per-step stickman preference")
    _opt(sp, "generate", "seed", 0, "sampling seed")
    _opt(sp, "generate", "out", None, "output path (default outputs/gen-<seed>.json)")

    sp = command("evaluate", "score the trained model on the held-out split")
    _opt(sp, "evaluate", "samples", 32, "held-out clips to generate against")
    _opt(sp, "evaluate", "batch-size", 8, "generation batch size")
    _opt(sp, "evaluate", "mm-texts", 4, "texts for the repeat-spread metric")
    _opt(sp, "evaluate", "mm-repeats", 3, "generations per repeated text")
    _opt(sp, "evaluate", "stisim-samples", 12, "stickman-conditioned samples")
    _opt(sp, "evaluate", "w", 2.5, "guidance weight")
    _opt(sp, "evaluate", "p-stick", 0.2, "per-step stickman preference")
    _opt(sp, "evaluate", "seed", 0, "evaluation seed")
    _opt(sp, "evaluate", "out", None, "report path (default reports/eval.json)")

    sp = command("sga-preview", "render perturbed stickmen for a sample clip")
    _opt(sp, "sga-preview", "primitive", None, "motion primitive name")
    _opt(sp, "sga-preview", "count", 3, "stickmen to draw")
    _opt(sp, "sga-preview", "seed", 0, "clip and perturbation seed")

    sp = command("serve", "run the HTTP generation API")
    _opt(sp, "serve", "host", "127.0.0.1", "bind address")
    _opt(sp, "serve", "port", 8000, "bind port")

    return parser, sps


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre_parser = argparse.ArgumentParser(add_help=False)
    pre_parser.add_argument("--home")
    pre_parser.add_argument("--config")
    known, rest = pre_parser.parse_known_args(argv)

    parser, sps = build_parser()
    try:
        if known.config:
            command = next((tok for tok in rest if not tok.startswith("-")), None)
            if command not in sps:
                parser.error("--config needs a command to apply to")
            defaults = _OPTS[command]
            converted = {}
            for key, raw in load_config(known.config).items():
                dest = key.replace("-", "_")
                if dest not in defaults:
                    raise ConfigFileError(
                        f"{known.config}: key {key!r} is not a "
                        f"`stickmotion {command}` option")
                converted[dest] = coerce(raw, defaults[dest])
            sps[command].set_defaults(**converted)
        args = parser.parse_args(rest)
        ws = Workspace.resolve(known.home)
        return COMMANDS[args.command](args, ws)
    except (MissingArtifactError, ConfigFileError, ckpt.CheckpointError,
            met.EvaluatorQualityError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
