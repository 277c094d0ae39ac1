"""Network observers for the bandmask session protocol.

Wraps image classifiers as wire-protocol observers and computes the two
robustness-side quantities the analysis consumes: whitebox (PGD) accuracy
and cue-conflict responses. Talks to the experiment toolkit only through
its external interfaces: NDJSON on stdio, 16-bit grayscale stimulus PNGs,
the fine-to-coarse mapping JSON, and the summaries/cue-conflict CSVs.
"""

__version__ = "0.1.0"
