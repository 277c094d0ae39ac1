"""netobs command line: observe (protocol loop), whitebox, cue-conflict."""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from netobs.cueconflict import cue_conflict_eval, read_index, write_records
from netobs.mapping import CoarseMapping
from netobs.models import build_model
from netobs.observer import serve
from netobs.pgd import AttackConfig, clean_accuracy, whitebox_accuracy


def cmd_observe(args):
    model = build_model(args.model, args.weights)
    mapping = CoarseMapping.load(args.mapping)
    torch.manual_seed(args.seed)  # deterministic inference end to end
    serve(model, mapping, args.observer_id or f"net-{args.model}")
    return 0


def _load_eval_images(index_path):
    """Labelled eval images: CSV of image_path,label_index rows."""
    images, labels = [], []
    with open(index_path, newline="") as fh:
        for row in csv.DictReader(fh):
            with Image.open(row["image_path"]) as im:
                arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
            images.append(torch.from_numpy(arr).permute(2, 0, 1))
            labels.append(int(row["label_index"]))
    return torch.stack(images), torch.tensor(labels)


def cmd_whitebox(args):
    model = build_model(args.model, args.weights)
    images, labels = _load_eval_images(args.index)
    attack = AttackConfig(
        epsilon=args.epsilon, max_iterations=args.iterations, step_size=args.step_size
    )
    gen = torch.Generator().manual_seed(args.seed)
    acc, used = whitebox_accuracy(model, images, labels, attack, generator=gen)
    doc = {
        "model": args.model,
        "n_images": len(labels),
        "clean_accuracy": clean_accuracy(model, images, labels),
        "whitebox_accuracy": acc,
        "epsilon": attack.epsilon,
        "max_iterations": attack.max_iterations,
        "step_size": attack.step,
        "max_perturbation_used": used,
    }
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_cue_conflict(args):
    model = build_model(args.model, args.weights)
    mapping = CoarseMapping.load(args.mapping)
    records = cue_conflict_eval(
        model, mapping, read_index(args.index), args.observer_id or f"net-{args.model}"
    )
    write_records(args.out, records)
    print(f"wrote {len(records)} cue-conflict records to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="netobs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("observe", help="run as a wire-protocol observer on stdio")
    p.add_argument("--model", required=True, help="'tiny' or a torchvision model name")
    p.add_argument("--weights", default="seeded",
                   help="'seeded', 'DEFAULT' (pretrained), or a state-dict path")
    p.add_argument("--mapping", required=True, help="fine-to-coarse JSON file")
    p.add_argument("--observer-id")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("whitebox", help="PGD whitebox accuracy on labelled images")
    p.add_argument("--model", required=True)
    p.add_argument("--weights", default="seeded")
    p.add_argument("--index", required=True, help="CSV of image_path,label_index")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--iterations", type=int, default=32)
    p.add_argument("--step-size", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_whitebox)

    p = sub.add_parser("cue-conflict", help="evaluate a cue-conflict image set")
    p.add_argument("--model", required=True)
    p.add_argument("--weights", default="seeded")
    p.add_argument("--mapping", required=True)
    p.add_argument("--index", required=True,
                   help="CSV of image_path,shape_category,texture_category")
    p.add_argument("--observer-id")
    p.add_argument("--out", required=True, help="responses CSV path")
    p.set_defaults(func=cmd_cue_conflict)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
