"""Command-line surface.

Subcommands mirror the pipeline stages: simulate, denoise, segment,
extract, train, eval, fuse, plus the experiment drivers run, gen, and
reproduce-all.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import features as feat
from . import fusion as fusion_mod
from . import harness, learn, trace_io
from .boundary import (
    BoundaryParams,
    dedupe_candidates,
    detect_boundaries,
    fragment_trace,
    level_step_scorer,
    prune_boundaries,
)
from .preprocess import WaveletConfig, adaptive_delta, denoise, gradient
from .signal_sim import (
    DEFAULT_TICK_SECONDS,
    ActionEntry,
    ActionScript,
    ChannelModel,
    add_noise,
    synth_trajectory,
    trajectory_to_rss,
)


def _load_script(path: str) -> ActionScript:
    with open(path) as fh:
        data = json.load(fh)
    entries = [
        ActionEntry(
            action=e["action"],
            start_tick=int(e["start_tick"]),
            duration_ticks=int(e["duration_ticks"]),
            extent=float(e["extent"]),
            speed_profile=e.get("speed_profile", "regular"),
        )
        for e in data["entries"]
    ]
    return ActionScript(
        entries,
        activity_label=data.get("activity_label"),
        initial_positions=data.get("initial_positions", {}),
    )


def _cmd_simulate(args) -> int:
    script = _load_script(args.script)
    total = args.total_ticks or script.last_tick + 200
    bundle = synth_trajectory(script, args.tick_seconds, total)
    trace = trajectory_to_rss(bundle, ChannelModel())
    if args.snr is not None:
        trace = add_noise(trace, args.snr, args.seed)
    trace_io.save_trace(trace, args.out)
    print(f"wrote {args.out} ({len(trace)} samples, snr={trace.snr_db})")
    return 0


def _cmd_denoise(args) -> int:
    trace = trace_io.load_trace(args.infile)
    cfg = WaveletConfig(
        family=args.family,
        decomposition_levels=args.levels,
        threshold_rule=args.rule,
        threshold_scale=args.scale,
    )
    trace_io.save_trace(denoise(trace, cfg), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_segment(args) -> int:
    trace = trace_io.load_trace(args.infile)
    gs = gradient(trace)
    quiet = args.delta
    if args.adaptive_delta:
        window = trace.samples[: min(300, len(trace) // 2)]
        quiet = adaptive_delta(window)
    params = BoundaryParams(
        half_window=args.L, stride=args.step, ratio_threshold=args.alpha, quiet_threshold=quiet
    )
    points = detect_boundaries(gs, params)
    if args.model:
        cnn, nmlp, flavor, norm = learn.load_model(args.model)
        if flavor != "action" or norm is None:
            raise SystemExit("segment needs an action-flavor model with normalization stats")

        def scorer(frag):
            dist = learn.classify(feat.normalize(feat.action_features(frag), norm), cnn, nmlp)
            return dist.top_label, dist.top_prob

    else:
        scorer = level_step_scorer(trace)
    fragments = prune_boundaries(
        dedupe_candidates(points, max_gap=2 * args.step),
        trace,
        scorer,
        min_length=2 * args.L,
    )
    lines = [f"{frag.start_index},{frag.end_index}" for frag in fragments]
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
    for line in lines:
        print(line)
    return 0


def _cmd_extract(args) -> int:
    trace = trace_io.load_trace(args.trace)
    with open(args.infile) as fh:
        spans = [tuple(int(v) for v in line.split(",")) for line in fh if line.strip()]
    fragments = fragment_trace(trace, spans)
    matrices = [
        feat.quality_features(f) if args.flavor == "quality" else feat.action_features(f)
        for f in fragments
    ]
    if len(matrices) == 1:
        feat.save_matrix(matrices[0], args.out)
        print(f"wrote {args.out}")
    else:
        for i, m in enumerate(matrices):
            path = f"{args.out}.{i:03d}"
            feat.save_matrix(m, path)
            print(f"wrote {path}")
    return 0


def _dataset_from_dir(data_dir: str, flavor: str):
    pairs = []
    for name in sorted(os.listdir(data_dir)):
        if not name.endswith(".trace"):
            continue
        trace = denoise(trace_io.load_trace(os.path.join(data_dir, name)))
        for iv in trace.ground_truth:
            if iv.end_tick - iv.start_tick + 1 < 20:
                continue
            frag = fragment_trace(trace, [(iv.start_tick, iv.end_tick)])[0]
            if flavor == "quality":
                if iv.quality is None:
                    raise SystemExit(f"{name}: ground truth lacks quality labels")
                pairs.append((feat.quality_features(frag), iv.quality))
            else:
                pairs.append((feat.action_features(frag), iv.action))
    if not pairs:
        raise SystemExit(f"no labeled fragments found under {data_dir}")
    return pairs


def _cmd_train(args) -> int:
    pairs = _dataset_from_dir(args.data, args.flavor)
    stats = feat.fit_normalization([m for m, _ in pairs])
    normalized = [(feat.normalize(m, stats), lbl) for m, lbl in pairs]
    cfg = learn.TrainConfig(iterations=args.iters, seed=args.seed)
    cnn, nmlp = learn.train(normalized, cfg)
    learn.save_model(args.out, cnn, nmlp, args.flavor, stats)
    print(f"wrote {args.out} ({len(pairs)} samples, {len(nmlp.class_labels)} classes)")
    return 0


def _cmd_eval(args) -> int:
    cnn, nmlp, flavor, norm = learn.load_model(args.model)
    if norm is None:
        raise SystemExit("model file lacks normalization stats")
    pairs = _dataset_from_dir(args.data, flavor)
    normalized = [(feat.normalize(m, norm), lbl) for m, lbl in pairs]
    err = learn.error_rate(normalized, cnn, nmlp)
    print(f"samples={len(pairs)} error_rate={err:.4f} accuracy={1.0 - err:.4f}")
    return 0


def _cmd_fuse(args) -> int:
    activity = fusion_mod.load_activity(args.infile)
    fused = fusion_mod.fuse(activity)
    lines = [",".join(repr(float(v)) for v in fused.probs), str(int(np.argmax(fused.probs)))]
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {args.out} (decision=class {int(np.argmax(fused.probs))})")
    return 0


def _cmd_gen(args) -> int:
    spec = harness.ExperimentSpec(
        task=args.task,
        snr_band=args.snr_band,
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        seed=args.seed,
    )
    corpus = harness.generate_dataset(spec)
    for split, items in (("train", corpus.train), ("test", corpus.test)):
        split_dir = os.path.join(args.out, split)
        os.makedirs(split_dir, exist_ok=True)
        for item in items:
            trace_io.save_trace(item.trace, os.path.join(split_dir, f"{item.uid:05d}.trace"))
    print(f"wrote {len(corpus.train)}+{len(corpus.test)} traces under {args.out}")
    return 0


def _cmd_run(args) -> int:
    with open(args.spec) as fh:
        data = json.load(fh)
    model_cfg = harness.ModelConfig(**data.pop("model", {}))
    for key in ("classes", "learners"):
        if key in data:
            data[key] = tuple(data[key])
    spec = harness.ExperimentSpec(model=model_cfg, **data)
    if spec.task == "ablation":
        table = harness.run_ablation(seed=spec.seed)
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "ablation.json"), "w") as fh:
            json.dump(table, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        report = harness.run_experiment(spec)
        harness.write_report(report, args.out)
    print(f"wrote report under {args.out}")
    return 0


def _cmd_reproduce_all(args) -> int:
    manifest = harness.reproduce_all(args.out, seed=args.seed)
    print(f"wrote {len(manifest['experiments'])} experiment reports under {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="wiq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render an action script to a trace file")
    p.add_argument("--script", required=True)
    p.add_argument("--snr", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--tick-seconds", type=float, default=DEFAULT_TICK_SECONDS)
    p.add_argument("--total-ticks", type=int, default=None)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("denoise", help="wavelet-denoise a trace file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--rule", choices=("soft", "hard"), default="soft")
    p.add_argument("--family", default="daub4")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_denoise)

    p = sub.add_parser("segment", help="detect and prune action boundaries")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--L", type=int, default=5)
    p.add_argument("--step", type=int, default=2)
    p.add_argument("--alpha", type=float, default=5.0)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--adaptive-delta", action="store_true")
    p.add_argument("--model", default=None, help="action model used to score candidate fragments")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_segment)

    p = sub.add_parser("extract", help="feature matrices for fragment ranges")
    p.add_argument("--trace", required=True)
    p.add_argument("--in", dest="infile", required=True, help="fragment ranges, one start,end per line")
    p.add_argument("--flavor", choices=feat.FLAVORS, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_extract)

    p = sub.add_parser("train", help="train a recognizer on a trace directory")
    p.add_argument("--flavor", choices=feat.FLAVORS, required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a trace directory")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("fuse", help="fuse per-action results into one decision")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_fuse)

    p = sub.add_parser("gen", help="write a synthetic corpus to disk")
    p.add_argument("--task", choices=harness.TASKS, required=True)
    p.add_argument("--snr-band", choices=tuple(harness.SNR_BANDS), default="high")
    p.add_argument("--train-per-class", type=int, default=20)
    p.add_argument("--test-per-class", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("run", help="run one experiment spec (JSON)")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("reproduce-all", help="regenerate every desk-scale report")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_reproduce_all)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
