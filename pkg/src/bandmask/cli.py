"""Command-line entry point wiring all toolkit stages.

Subcommands: generate, run, serve, analyze, correlate, verify-noise.
Exit codes: 0 ok, 2 validation failure, 3 I/O failure, 4 protocol failure.
"""

import argparse
import json
import sys
from pathlib import Path

from bandmask import __version__, channel, noise, stats, stimuli
from bandmask.config import ToolkitConfig, build_provenance
from bandmask.errors import ProtocolError, ValidationError
from bandmask.records import BLOCK_TEST, read_records
from bandmask.session import BlockPlan, SubprocessObserver, TcpObserver, exclude_low_performers
from bandmask.session.runner import run_session
from bandmask.taxonomy import CATEGORIES

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_PROTOCOL = 4


def _load_config(args):
    cfg = ToolkitConfig.load(args.config) if args.config else ToolkitConfig()
    return cfg.validate()


def _collect_images(args):
    if args.labels:
        rows = []
        with open(args.labels) as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                path, _, category = line.rpartition(",")
                rows.append((path.strip(), category.strip()))
        return rows
    root = Path(args.images)
    if not root.is_dir():
        raise ValidationError(f"image directory {root} does not exist")
    rows = []
    for cat_dir in sorted(root.iterdir()):
        if not cat_dir.is_dir():
            continue
        for img in sorted(cat_dir.iterdir()):
            if img.suffix.lower() in (".png", ".jpg", ".jpeg"):
                rows.append((str(img), cat_dir.name))
    return rows


def _print_balance(manifest):
    counts = manifest.condition_counts()
    print("condition balance (rows: SD, cols: band center c/img):")
    header = "  ".join(f"{noise.band_center(b):>6g}" for b in range(noise.N_BANDS))
    print(f"{'sd':>6}  {header}")
    zero = counts.get((0.0, -1), 0)
    print(f"{0.0:>6}  {zero:>6} (single zero-noise condition)")
    for sd in noise.NONZERO_SD_LEVELS:
        row = "  ".join(f"{counts.get((sd, b), 0):>6}" for b in range(noise.N_BANDS))
        print(f"{sd:>6}  {row}")
    print("category balance:")
    for cat, n in manifest.category_counts().items():
        print(f"  {cat:>9}: {n}")


def cmd_generate(args):
    cfg = _load_config(args)
    images = _collect_images(args)
    if not images:
        raise ValidationError("no labeled images found")
    seed = args.seed if args.seed is not None else cfg.master_seed
    n = args.n or len(images)
    selected = stimuli.select_balanced(images, n, seed) if n < len(images) else images
    if len(selected) != n:
        raise ValidationError(f"requested n={n} but only {len(selected)} images available")
    snapshot = cfg.to_dict()
    manifest = stimuli.assign_conditions(selected, seed, config_snapshot=snapshot)
    manifest.provenance = build_provenance(cfg)
    out = Path(args.out)
    stimuli.export_set(
        manifest,
        out,
        render=not args.no_render,
        preprocess_config=cfg.preprocessing,
        band_convention=cfg.band_convention,
    )
    _print_balance(manifest)
    print(f"wrote {len(manifest)} stimuli to {out}")
    return EXIT_OK


def cmd_run(args):
    cfg = _load_config(args)
    manifest = stimuli.StimulusManifest.load(args.manifest)
    if args.all_test:
        plan = BlockPlan.single_block(min(args.n_trials or len(manifest), len(manifest)))
    else:
        plan = cfg.block_plan
    if args.observer_cmd:
        endpoint = SubprocessObserver(args.observer_cmd)
    elif args.tcp:
        host, _, port = args.tcp.rpartition(":")
        endpoint = TcpObserver(host, int(port))
    else:
        raise ValidationError("one of --observer-cmd or --tcp is required")
    stimuli_dir = Path(args.stimuli_dir) if args.stimuli_dir else None
    with endpoint as obs:
        records = run_session(
            manifest,
            obs,
            plan,
            Path(args.out),
            stimuli_dir=stimuli_dir,
            trial_timeout=args.timeout or cfg.trial_timeout_s,
        )
    print(f"session complete: {len(records)} records in {args.out}")
    return EXIT_OK


def cmd_serve(args):
    import uvicorn

    from bandmask.session.server import create_app

    cfg = _load_config(args)
    manifest = stimuli.StimulusManifest.load(args.manifest)
    instructions = None
    if args.instructions:
        instructions = Path(args.instructions).read_text()
    app = create_app(
        manifest,
        records_dir=Path(args.out_dir),
        stimuli_dir=Path(args.stimuli_dir) if args.stimuli_dir else None,
        block_plan=cfg.block_plan,
        instructions=instructions or None,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _analysis_records(args, cfg):
    records = read_records(args.responses)
    if not records:
        raise ValidationError(f"no records in {args.responses}")
    manifest = stimuli.StimulusManifest.load(args.manifest)
    known = {e.stimulus_id for e in manifest.entries}
    for i, r in enumerate(records):
        if r.stimulus_id not in known:
            raise ValidationError(
                f"row {i + 2}: stimulus_id {r.stimulus_id!r} not in manifest"
            )
    observers = sorted({r.observer_id for r in records})
    if args.observer:
        records = [r for r in records if r.observer_id == args.observer]
        if not records:
            raise ValidationError(f"observer {args.observer!r} has no records")
    elif len(observers) > 1:
        raise ValidationError(f"multiple observers {observers}; pick one with --observer")
    if not args.include_excluded:
        verdict = exclude_low_performers(records, cfg.analysis.exclusion_threshold)
        if verdict.excluded:
            raise ValidationError(
                f"observer excluded (zero-noise accuracy "
                f"{verdict.baseline_accuracy[verdict.excluded[0]]:.3f} < "
                f"{cfg.analysis.exclusion_threshold}); use --include-excluded to override"
            )
        if verdict.flagged_no_baseline:
            raise ValidationError(
                "observer has no zero-noise test trials; cannot apply exclusion rule"
            )
    if not cfg.analysis.include_training_trials:
        records = [r for r in records if r.block == BLOCK_TEST]
    return records


def cmd_analyze(args):
    cfg = _load_config(args)
    records = _analysis_records(args, cfg)
    hm = channel.heatmap(records)
    normalize = args.normalize_baseline or cfg.analysis.normalize_baseline
    profile = channel.thresholds(hm, normalize_baseline=normalize)
    fit = channel.fit_channel(profile, a_max=cfg.analysis.a_max)
    props = channel.channel_properties(fit)
    prov = build_provenance(cfg, {"responses": args.responses, "manifest": args.manifest})
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, payload in (
        ("heatmap", hm.to_dict()),
        ("thresholds", profile.to_dict()),
        ("channel_fit", fit.to_dict()),
        ("properties", props.to_dict()),
    ):
        doc = {name: payload, "provenance": prov}
        (out / f"{name}.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    if args.svg:
        from bandmask import plots

        plots.heatmap_svg(hm, out / "heatmap.svg")
        plots.channel_svg(profile, fit, out / "channel.svg")
    if fit.degenerate:
        print("warning: threshold profile has no inverted-U structure; fit flagged degenerate")
    print(
        f"channel: bandwidth {props.bandwidth:.3f} octaves, "
        f"center {props.center_frequency:.2f} c/img, "
        f"peak sensitivity {props.peak_noise_sensitivity:.3f}"
    )
    return EXIT_OK


def cmd_correlate(args):
    cfg = _load_config(args)
    summaries = stats.read_summaries_csv(args.summaries)
    if args.cue_conflict:
        bias = stats.shape_bias_by_observer(
            stats.read_cue_conflict_csv(args.cue_conflict), mode=cfg.analysis.shape_bias_mode
        )
        for s in summaries:
            if s.observer_id in bias:
                s.shape_bias = bias[s.observer_id]
    alpha = args.alpha if args.alpha is not None else cfg.analysis.alpha
    m = args.m if args.m is not None else cfg.analysis.bonferroni_m
    report = stats.correlate(summaries, alpha=alpha, m=m)
    inputs = {"summaries": args.summaries}
    if args.cue_conflict:
        inputs["cue_conflict"] = args.cue_conflict
    report.provenance = build_provenance(cfg, inputs)
    report.provenance["shape_bias_mode"] = cfg.analysis.shape_bias_mode
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
    if args.svg_dir:
        from bandmask import plots

        svg_dir = Path(args.svg_dir)
        svg_dir.mkdir(parents=True, exist_ok=True)
        for target in (stats.TARGET_SHAPE_BIAS, stats.TARGET_WHITEBOX):
            plots.scatter_svg(summaries, report, target, svg_dir / f"{target}.svg")
    n_sig = sum(f["significant"] for f in report.fits)
    print(f"{len(report.fits)} fits ({n_sig} significant at alpha/m = {alpha / m:.6f})")
    for w in report.warnings:
        print(f"warning: {w}")
    return EXIT_OK


def cmd_verify_noise(args):
    cfg = _load_config(args)
    rows = []
    conditions = [c for c in noise.all_conditions() if not c.is_zero]
    if args.band is not None:
        conditions = [c for c in conditions if c.band_index == args.band]
    if args.sd is not None:
        conditions = [c for c in conditions if c.sd == args.sd]
    if not conditions:
        raise ValidationError("no conditions match the given --sd/--band filters")
    for cond in conditions:
        for k in range(args.n_seeds):
            seed = stimuli.derive_noise_seed(args.seed + k, f"verify_{cond.sd}_{cond.band_index}")
            field = noise.noise_for_condition(cond, seed, cfg.band_convention)
            report = noise.verify_spectrum(field, field.band)
            rows.append(
                {
                    "sd": cond.sd,
                    "band_index": cond.band_index,
                    "seed": seed,
                    "sample_sd": float(field.pixels.std()),
                    "sample_mean": float(field.pixels.mean()),
                    **report.to_dict(),
                }
            )
    doc = {"tool_version": __version__, "band_convention": cfg.band_convention, "reports": rows}
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    worst = min(r["in_band_power_fraction"] for r in rows)
    print(f"verified {len(rows)} fields; worst in-band power fraction {worst:.6f}",
          file=sys.stderr)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="bandmask", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="toolkit JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a balanced stimulus set + manifest")
    p.add_argument("--images", help="directory of <category>/<image> files")
    p.add_argument("--labels", help="CSV of path,category rows (alternative to --images)")
    p.add_argument("--n", type=int, help="number of stimuli (default: all images)")
    p.add_argument("--seed", type=int, help="master seed (default from config)")
    p.add_argument("--out", required=True)
    p.add_argument("--no-render", action="store_true", help="write manifest only")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="run one observer session over the wire protocol")
    p.add_argument("--manifest", required=True)
    p.add_argument("--observer-cmd", help="subprocess command speaking the protocol on stdio")
    p.add_argument("--tcp", help="host:port of a TCP observer")
    p.add_argument("--out", required=True, help="response CSV path (appended, resumable)")
    p.add_argument("--stimuli-dir", help="directory of rendered PNGs to reference")
    p.add_argument("--timeout", type=float, help="per-trial timeout in seconds")
    p.add_argument("--all-test", action="store_true",
                   help="single test block over the whole manifest instead of the config plan")
    p.add_argument("--n-trials", type=int, help="with --all-test, limit the trial count")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("serve", help="serve the human-observer HTTP experiment")
    p.add_argument("--manifest", required=True)
    p.add_argument("--stimuli-dir")
    p.add_argument("--out-dir", required=True, help="directory for response CSVs")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--instructions", help="text file shown before the experiment")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("analyze", help="heatmap, thresholds, channel fit, properties")
    p.add_argument("--responses", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--observer", help="observer_id when the CSV holds several")
    p.add_argument("--include-excluded", action="store_true")
    p.add_argument("--normalize-baseline", action="store_true")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("correlate", help="channel properties vs shape bias / robustness")
    p.add_argument("--summaries", required=True)
    p.add_argument("--cue-conflict", help="cue-conflict responses CSV to compute shape bias")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--alpha", type=float)
    p.add_argument("--m", type=int, help="Bonferroni family size")
    p.add_argument("--svg-dir")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("verify-noise", help="spectrum reports for generated noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-seeds", type=int, default=1)
    p.add_argument("--sd", type=float, help="restrict to one SD level")
    p.add_argument("--band", type=int, help="restrict to one band index")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_verify_noise)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
