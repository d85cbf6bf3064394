"""Sample blocks passed between stages."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SampleBlock:
    """A contiguous run of samples at ``rate_hz``.

    Integer blocks carry the two's-complement ``width`` of their samples;
    real-valued blocks (tones before quantization) leave it ``None`` and are
    scaled to unit amplitude.
    """

    samples: np.ndarray
    rate_hz: float
    width: int | None = None

    def __len__(self):
        return len(self.samples)

    @property
    def is_integer(self) -> bool:
        return self.width is not None

    def with_samples(self, samples, rate_hz=None, width=None):
        return SampleBlock(
            np.asarray(samples),
            self.rate_hz if rate_hz is None else rate_hz,
            self.width if width is None else width,
        )
