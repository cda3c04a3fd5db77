"""Secure aggregation built on FFT-based multi-secret sharing."""

from .errors import FastSecAggError
from .fastshare import fast_recon, fast_share, parity_check, rs_erasure_decode
from .fft import ShareVector, dft, idft
from .gf import FieldCtx, FieldElement, field_new, find_field
from .layout import SchemeParams, make_params, params_from_dict

__version__ = "0.1.0"

__all__ = [
    "FastSecAggError",
    "FieldCtx",
    "FieldElement",
    "SchemeParams",
    "ShareVector",
    "dft",
    "fast_recon",
    "fast_share",
    "field_new",
    "find_field",
    "idft",
    "make_params",
    "params_from_dict",
    "parity_check",
    "rs_erasure_decode",
]
