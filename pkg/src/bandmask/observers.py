"""Synthetic protocol observers for testing and calibration.

Run as a subprocess speaking the NDJSON wire protocol on stdio:

    python -m bandmask.observers --kind oracle --manifest m.json
    python -m bandmask.observers --kind fixed --category dog --manifest m.json
    python -m bandmask.observers --kind channel --manifest m.json \
        --a 4.0 --mu 4.5 --sigma 0.42 --seed 7

The channel observer answers correctly with a probability set by a planted
Gaussian noise-sensitivity curve: at threshold index s = log2(0.32/sd) and
band x, p_correct = floor + (base - floor) * Phi((s - t(x)) / width) with
t(x) = A exp(-(x - mu)^2 / (2 sigma^2)). Answers are a pure function of
(seed, stimulus_id), so a resumed session replays identically.
"""

import argparse
import hashlib
import json
import math
import sys

import numpy as np

from bandmask.errors import ProtocolError
from bandmask.gaussfit import gaussian
from bandmask.session.protocol import MSG_BYE, MSG_RESPONSE, MSG_STIMULUS, decode, encode
from bandmask.stimuli import StimulusManifest
from bandmask.taxonomy import CATEGORIES


def _phi(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _stimulus_rng(seed, stimulus_id):
    h = hashlib.blake2b(f"{seed}:{stimulus_id}".encode(), digest_size=8)
    return np.random.default_rng(int.from_bytes(h.digest(), "big"))


class ChannelObserver:
    """Planted-channel responder with a Gaussian psychometric criterion."""

    def __init__(self, manifest, a, mu, sigma, base=0.9375, floor=0.0625,
                 width=0.5, seed=0):
        self.manifest = manifest
        self.a, self.mu, self.sigma = a, mu, sigma
        self.base, self.floor, self.width = base, floor, width
        self.seed = seed

    def p_correct(self, condition):
        if condition.is_zero:
            return self.base
        s = math.log2(0.32 / condition.sd)
        t = float(gaussian(np.array([condition.band_index], dtype=float),
                           self.a, self.mu, self.sigma)[0])
        return self.floor + (self.base - self.floor) * _phi((s - t) / self.width)

    def respond(self, stimulus_id):
        entry = self.manifest.by_id(stimulus_id)
        rng = _stimulus_rng(self.seed, stimulus_id)
        if rng.random() < self.p_correct(entry.condition):
            return entry.category
        others = [c for c in CATEGORIES if c != entry.category]
        return others[int(rng.integers(len(others)))]


class OracleObserver:
    def __init__(self, manifest):
        self.manifest = manifest

    def respond(self, stimulus_id):
        return self.manifest.by_id(stimulus_id).category


class FixedObserver:
    def __init__(self, category):
        self.category = category

    def respond(self, stimulus_id):
        return self.category


def serve_stdio(responder, observer_id, kind="network", die_after=None,
                stdin=None, stdout=None):
    """Protocol loop: hello, answer each stimulus, exit on bye.

    die_after simulates a crash: the process exits abruptly after that many
    responses (used to exercise session resume).
    """
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stdout.write(encode({"type": "hello", "observer_id": observer_id, "kind": kind}))
    stdout.flush()
    n_answered = 0
    for line in stdin:
        if not line.strip():
            continue
        msg = decode(line)
        if msg["type"] == MSG_BYE:
            return 0
        if msg["type"] != MSG_STIMULUS:
            raise ProtocolError(f"observer cannot handle {msg['type']!r}")
        reply = {
            "type": MSG_RESPONSE,
            "stimulus_id": msg["stimulus_id"],
            "category": responder.respond(msg["stimulus_id"]),
        }
        stdout.write(encode(reply))
        stdout.flush()
        n_answered += 1
        if die_after is not None and n_answered >= die_after:
            return 1  # simulated crash
    return 0


def build_responder(args):
    manifest = StimulusManifest.load(args.manifest) if args.manifest else None
    if args.kind == "oracle":
        return OracleObserver(manifest)
    if args.kind == "fixed":
        if args.category not in CATEGORIES:
            raise SystemExit(f"--category must be one of {CATEGORIES}")
        return FixedObserver(args.category)
    if args.kind == "channel":
        return ChannelObserver(
            manifest,
            a=args.a,
            mu=args.mu,
            sigma=args.sigma,
            base=args.base,
            floor=args.floor,
            width=args.width,
            seed=args.seed,
        )
    raise SystemExit(f"unknown observer kind {args.kind!r}")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kind", required=True, choices=("oracle", "fixed", "channel"))
    parser.add_argument("--manifest", help="manifest.json path (oracle/channel)")
    parser.add_argument("--observer-id", default=None)
    parser.add_argument("--category", help="fixed observer's constant answer")
    parser.add_argument("--a", type=float, default=4.0)
    parser.add_argument("--mu", type=float, default=4.5)
    parser.add_argument("--sigma", type=float, default=0.42)
    parser.add_argument("--base", type=float, default=0.9375)
    parser.add_argument("--floor", type=float, default=0.0625)
    parser.add_argument("--width", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--die-after", type=int, default=None)
    args = parser.parse_args(argv)
    observer_id = args.observer_id or f"synthetic-{args.kind}"
    responder = build_responder(args)
    return serve_stdio(responder, observer_id, die_after=args.die_after)


if __name__ == "__main__":
    sys.exit(main())
