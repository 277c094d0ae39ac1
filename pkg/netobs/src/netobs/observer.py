"""Wire-protocol observer: stimuli in, coarse category decisions out.

Message flow (NDJSON, one object per line on stdio): we send
hello {observer_id, kind: "network"}, the driver sends
stimulus {stimulus_id, labels[16], png_path | png_base64}, we reply
response {stimulus_id, category}, and exit on bye. Per-trial inference
errors are reported as error messages; the session continues.
"""

import base64
import io
import json
import sys

import numpy as np
import torch
from PIL import Image

PNG_MAX = 65535  # stimuli are 16-bit grayscale PNGs


def load_stimulus(msg):
    """Decode the stimulus image to a float32 tensor in [0, 1], 3x224x224."""
    if "png_path" in msg:
        with Image.open(msg["png_path"]) as im:
            arr = np.asarray(im, dtype=np.uint16)
    elif "png_base64" in msg:
        with Image.open(io.BytesIO(base64.b64decode(msg["png_base64"]))) as im:
            arr = np.asarray(im, dtype=np.uint16)
    else:
        raise ValueError("stimulus message carries neither png_path nor png_base64")
    gray = torch.from_numpy(arr.astype(np.float32) / PNG_MAX)
    return gray.unsqueeze(0).expand(3, -1, -1).contiguous()


def classify(model, pixels, mapping):
    """Softmax over fine classes, audit the sum, average to a coarse label."""
    with torch.no_grad():
        logits = model(pixels.unsqueeze(0))
        probs = torch.softmax(logits, dim=1)[0]
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-5:
        raise ValueError(f"class probabilities sum to {total}, expected 1")
    return mapping.decide(probs.tolist()), probs


def serve(model, mapping, observer_id, stdin=None, stdout=None):
    """Blocking protocol loop over stdio; returns the number of trials."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout

    def emit(obj):
        stdout.write(json.dumps(obj, sort_keys=True) + "\n")
        stdout.flush()

    emit({"type": "hello", "observer_id": observer_id, "kind": "network"})
    n = 0
    for line in stdin:
        if not line.strip():
            continue
        msg = json.loads(line)
        if msg.get("type") == "bye":
            break
        if msg.get("type") != "stimulus":
            emit({"type": "error", "reason": f"unexpected message {msg.get('type')!r}"})
            continue
        try:
            pixels = load_stimulus(msg)
            category, _ = classify(model, pixels, mapping)
        except Exception as exc:  # keep the session alive on per-trial errors
            emit({"type": "error", "reason": f"{msg.get('stimulus_id')}: {exc}"})
            continue
        emit({"type": "response", "stimulus_id": msg["stimulus_id"], "category": category})
        n += 1
    return n
