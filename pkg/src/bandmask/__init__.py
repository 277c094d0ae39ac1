"""Critical-band-masking toolkit.

Generates octave-band noise-masked grayscale stimuli, drives human and
machine observers through a 16-way categorization session protocol, and
fits the Gaussian spatial-frequency channel (noise-sensitivity curve)
per observer, with downstream regressions against shape bias and
adversarial robustness.
"""

__version__ = "0.1.0"

from bandmask.errors import BandmaskError, FitError, ProtocolError, ValidationError

__all__ = [
    "BandmaskError",
    "ValidationError",
    "ProtocolError",
    "FitError",
    "__version__",
]
