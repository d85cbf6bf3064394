"""Bit-accurate model of a CIC-based sigma-delta decimation chain."""
from ._kernels import BACKEND
from .block import SampleBlock
from .errors import (
    CicdecError,
    ConfigurationError,
    DataFormatError,
    DesignError,
    InputDomainError,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "SampleBlock",
    "CicdecError",
    "ConfigurationError",
    "DataFormatError",
    "DesignError",
    "InputDomainError",
    "__version__",
]
