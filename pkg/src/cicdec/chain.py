"""The four-stage decimator: CIC /16, half-band /2, droop corrector /2, half-band /2.

6.144 MHz in, 48 kHz out.  Every stage after the CIC carries 16-bit data.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace

import numpy as np

from .block import SampleBlock
from .cic import CicConfig, CicDecimator
from .errors import ConfigurationError, DesignError
from .firdesign import (
    DEFAULT_QFORMAT,
    FilterSpec,
    FirDecimator,
    FirFilter,
    design_droop_correction,
    design_halfband,
    quantize_coeffs,
)

STAGES = ("cic", "hb1", "droop", "hb2")
INPUT_RATE_HZ = 6_144_000.0

# pass and stop edges of each FIR stage, Hz
HB1_EDGES = (32_000.0, 170_000.0)
DROOP_EDGES = (32_000.0, 70_000.0)
HB2_EDGES = (21_770.0, 26_530.0)
AUDIO_BAND_HZ = 21_770.0


@dataclass(frozen=True)
class ChainConfig:
    cic: CicConfig
    hb1: FirFilter
    droop: FirFilter
    hb2: FirFilter
    input_rate_hz: float = INPUT_RATE_HZ
    output_width: int = 16
    normalize: bool = False

    def __post_init__(self):
        if self.total_decimation != 128:
            raise ConfigurationError(f"total decimation must be 128, got {self.total_decimation}")
        for name in ("hb1", "droop", "hb2"):
            f = getattr(self, name)
            if not f.is_quantized:
                raise ConfigurationError(f"{name} needs quantized coefficients")
            if abs(f.spec.input_rate_hz - self.stage_rates[name]) > 1e-6:
                raise ConfigurationError(
                    f"{name} is designed for {f.spec.input_rate_hz} Hz but runs at "
                    f"{self.stage_rates[name]} Hz"
                )

    @property
    def total_decimation(self) -> int:
        return self.cic.decimation * self.hb1.decimation * self.droop.decimation * self.hb2.decimation

    @property
    def stage_rates(self) -> dict:
        """Input rate of each stage, plus ``"out"``."""
        r = self.input_rate_hz
        rates = {"cic": r}
        r /= self.cic.decimation
        for name in ("hb1", "droop", "hb2"):
            rates[name] = r
            r /= 2
        rates["out"] = r
        return rates

    @property
    def output_rate_hz(self) -> float:
        return self.stage_rates["out"]

    def filter(self, name) -> FirFilter:
        return getattr(self, name)


def _design(stage, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except DesignError as e:
        raise DesignError(str(e), e.achieved, stage=stage) from e


@functools.lru_cache(maxsize=8)
def build_default_chain(input_width: int = 6, qformat: str = DEFAULT_QFORMAT,
                        min_stop_atten_db: float = 90.0, normalize: bool = False) -> ChainConfig:
    """Preset CIC plus the three FIR stages, quantized."""
    cic = CicConfig.paper(input_width=input_width)
    r0 = INPUT_RATE_HZ / cic.decimation
    hb1 = _design("hb1", design_halfband, FilterSpec(*HB1_EDGES, r0, min_stop_atten_db))
    droop = _design("droop", design_droop_correction, cic,
                    FilterSpec(*DROOP_EDGES, r0 / 2, min_stop_atten_db), INPUT_RATE_HZ)
    hb2 = _design("hb2", design_halfband, FilterSpec(*HB2_EDGES, r0 / 4, min_stop_atten_db))
    return ChainConfig(cic, quantize_coeffs(hb1, qformat), quantize_coeffs(droop, qformat),
                       quantize_coeffs(hb2, qformat), normalize=normalize)


def parse_stages(text) -> tuple:
    """``"cic+droop"`` or ``"chain"`` to an ordered stage tuple."""
    if text in (None, "", "chain", "all"):
        return STAGES
    names = tuple(s.strip() for s in str(text).split("+"))
    for n in names:
        if n not in STAGES:
            raise ConfigurationError(f"unknown stage {n!r}; choose from {', '.join(STAGES)} or chain")
    if list(names) != sorted(names, key=STAGES.index) or len(set(names)) != len(names):
        raise ConfigurationError(f"stages must appear once each in chain order {STAGES}")
    return names


class Downsample2:
    """Keep every second sample; stands in for a skipped half-rate stage.

    Unit gain and zero delay at every frequency below the output Nyquist
    rate, so a partial chain such as ``cic+droop`` still feeds each filter
    at the rate it was designed for.
    """

    decimation = 2
    group_delay_in = 0.0
    dc_gain = 1.0

    def __init__(self, input_rate_hz: float, width: int = 16):
        self.input_rate_hz = input_rate_hz
        self.data_width = self.output_width = width
        self.unit_amplitude = 1 << (width - 1)
        self._phase = 0

    def reset(self) -> None:
        self._phase = 0

    def process(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        y = x[(1 - self._phase) % 2::2]
        self._phase = (self._phase + len(x)) % 2
        return y

    def gain_at(self, f_hz):
        return np.ones(len(np.atleast_1d(f_hz)))


class DecimationChain:
    """Streaming composition of selected stages; one instance per stream.

    Attributes mirror a single stage (``process``, ``input_rate_hz``,
    ``decimation``, ``group_delay_in``, ``unit_amplitude``) so the whole
    chain can be swept like any stage.  Stages left out between two
    selected ones are replaced by :class:`Downsample2`, keeping every
    filter at its design rate.
    """

    def __init__(self, cfg: ChainConfig, stages=STAGES):
        self.cfg = cfg
        self.stage_names = parse_stages("+".join(stages) if not isinstance(stages, str) else stages)
        rates = cfg.stage_rates
        first, last = STAGES.index(self.stage_names[0]), STAGES.index(self.stage_names[-1])
        self.stages = []
        self.bypassed = []
        for name in STAGES[first:last + 1]:
            if name not in self.stage_names:
                self.bypassed.append(name)
                self.stages.append(Downsample2(rates[name]))
            elif name == "cic":
                self.stages.append(CicDecimator(cfg.cic, rates["cic"]))
            else:
                self.stages.append(FirDecimator(cfg.filter(name), rates[name], name,
                                                16, cfg.output_width))
        self.shift = self._norm_shift() if cfg.normalize else 0

    def _norm_shift(self) -> int:
        return max(0, math.floor(math.log2(self._raw_dc_gain())))

    @property
    def input_rate_hz(self) -> float:
        return self.stages[0].input_rate_hz

    @property
    def output_rate_hz(self) -> float:
        return self.input_rate_hz / self.decimation

    @property
    def decimation(self) -> int:
        return math.prod(s.decimation for s in self.stages)

    @property
    def unit_amplitude(self) -> int:
        return self.stages[0].unit_amplitude

    @property
    def input_width(self) -> int:
        s = self.stages[0]
        return s.input_width if isinstance(s, CicDecimator) else s.data_width

    @property
    def output_width(self) -> int:
        return self.stages[-1].output_width

    def stage_delays(self) -> dict:
        """Group delay of each stage in output-rate samples."""
        out = self.output_rate_hz
        names = [n for n in STAGES if n in self.stage_names or n in self.bypassed]
        return {n: s.group_delay_in * out / s.input_rate_hz
                for n, s in zip(names, self.stages) if n not in self.bypassed}

    @property
    def group_delay(self) -> float:
        """Total group delay in output-rate samples."""
        return sum(self.stage_delays().values())

    @property
    def group_delay_in(self) -> float:
        return self.group_delay * self.decimation

    def _raw_dc_gain(self) -> float:
        g = 1.0
        for s in self.stages:
            g *= s.cfg.dc_gain if isinstance(s, CicDecimator) else s.dc_gain
        return g

    @property
    def dc_gain(self) -> float:
        """Output LSBs per input LSB at DC, after the optional normalizing shift."""
        return self._raw_dc_gain() / 2 ** self.shift

    def gain_at(self, f_hz):
        """Product of the stage responses at ``f_hz`` (linear, LSB per LSB)."""
        f = np.atleast_1d(np.asarray(f_hz, dtype=float))
        g = np.ones(len(f))
        for s in self.stages:
            g = g * np.asarray(s.gain_at(f), dtype=float)
        return g / 2 ** self.shift

    def reset(self) -> None:
        for s in self.stages:
            s.reset()

    def process(self, x) -> np.ndarray:
        y = np.asarray(x, dtype=np.int64)
        for s in self.stages:
            y = s.process(y)
        if self.shift:
            y = np.asarray(y) >> self.shift
        return np.asarray(y, dtype=np.int64)

    def run(self, block: SampleBlock) -> SampleBlock:
        if abs(block.rate_hz - self.input_rate_hz) > 1e-6:
            raise ConfigurationError(
                f"block rate {block.rate_hz} Hz does not match chain input {self.input_rate_hz} Hz"
            )
        if block.width is not None and block.width > self.input_width:
            raise ConfigurationError(
                f"block width {block.width} exceeds chain input width {self.input_width}"
            )
        return SampleBlock(self.process(block.samples), self.output_rate_hz, self.output_width)


def run(chain: DecimationChain, block: SampleBlock) -> SampleBlock:
    return chain.run(block)


def with_normalize(cfg: ChainConfig, normalize: bool = True) -> ChainConfig:
    return replace(cfg, normalize=normalize)
