"""bilop: desk-scale numerics for bilinear operators with a line singularity."""

from .signal import (
    Interval,
    SampledFunction,
    Spectrum,
    CoronaMask,
    dft_forward,
    dft_inverse,
    lp_norm,
    corona,
    corona_masks,
    hardy_littlewood_max,
    spectral_derivative,
    make_bump,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
