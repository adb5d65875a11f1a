"""Uplink mmWave CRAN link-level simulator: lens antenna arrays versus UPA-OFDM."""

from .arrays import LensGeometry, UpaGeometry, enumerate_lens_elements, lens_response, upa_response
from .channel import ScenarioConfig, generate_drop, noise_floor
from .frame import FrameConfig, OfdmConfig
from .quantizer import BitAllocation, allocate_bits, quantize
from .rates import DropResult, summarize

__version__ = "0.1.0"

__all__ = [
    "LensGeometry", "UpaGeometry", "enumerate_lens_elements", "lens_response", "upa_response",
    "ScenarioConfig", "generate_drop", "noise_floor", "FrameConfig", "OfdmConfig",
    "BitAllocation", "allocate_bits", "quantize", "DropResult", "summarize",
]
