"""Register-level Hogenauer CIC decimator.

The structural model runs N integrators at the input rate, keeps one sample
in R, then runs N comb (differencing) stages at the output rate.  Every
register is a two's-complement word of the width given by the stage
schedule; integrators wrap and stage boundaries drop LSBs (floor).

Downsampler phase: the sample kept is the integrator output at input index
``n = phase (mod R)``.  The default ``phase = R - 1`` keeps the value after
R full accumulations per output.

Pipelined variant: each integrator adds the *registered* output of the
previous one (no extra integrator registers), a register sits in front of
the downsampler and one sits between consecutive comb stages.  The output
is the flat output delayed by :func:`pipeline_latency` output samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .block import SampleBlock
from .errors import ConfigurationError, InputDomainError
from .fxp import MAX_WIDTH, signed_range

PAPER_WIDTHS = (25, 22, 20, 18, 16, 16)
PAPER_INPUT_WIDTH = 6


def b_max(n: int, r: int, b_in: int, m: int = 1) -> int:
    """Index of the output MSB for lossless operation.

    ``ceil(N * log2(R*M)) + B_in - 1``, bits numbered from zero.  The full
    register width is one more (:func:`register_width`).
    """
    return math.ceil(n * math.log2(r * m) - 1e-12) + b_in - 1


def register_width(n: int, r: int, b_in: int, m: int = 1) -> int:
    """Bits needed to hold every output exactly (MSB index plus one)."""
    return b_max(n, r, b_in, m) + 1


def g_max(n: int, r: int, m: int = 1) -> int:
    """Worst-case register growth ``(R*M)**N`` (exact integer)."""
    return (r * m) ** n


@dataclass(frozen=True)
class CicConfig:
    """Complete description of one CIC decimator instance.

    ``stage_widths`` has N+1 entries: the width of each integrator followed
    by the width of the comb section.
    """

    n_stages: int = 5
    diff_delay: int = 1
    decimation: int = 16
    input_width: int = PAPER_INPUT_WIDTH
    stage_widths: tuple = PAPER_WIDTHS
    pipelined: bool = False
    adder_kind: str = "native"
    phase: int | None = None

    def __post_init__(self):
        n, m, r = self.n_stages, self.diff_delay, self.decimation
        if n < 1 or m < 1 or r < 2:
            raise ConfigurationError(f"need N >= 1, M >= 1, R >= 2; got N={n}, M={m}, R={r}")
        widths = tuple(int(w) for w in self.stage_widths)
        object.__setattr__(self, "stage_widths", widths)
        if len(widths) != n + 1:
            raise ConfigurationError(
                f"stage_widths needs N+1 = {n + 1} entries, got {len(widths)}"
            )
        if any(b > a for a, b in zip(widths, widths[1:])):
            raise ConfigurationError(f"stage widths must be non-increasing: {widths}")
        if widths[0] > MAX_WIDTH or widths[-1] < 1:
            raise ConfigurationError(f"stage widths must lie in [1, {MAX_WIDTH}]")
        if not 1 <= self.input_width <= widths[0]:
            raise ConfigurationError(
                f"input width {self.input_width} exceeds first stage width {widths[0]}"
            )
        if self.adder_kind not in _kernels.ADDER_CODES:
            raise ConfigurationError(
                f"unknown adder kind {self.adder_kind!r}; "
                f"expected one of {sorted(_kernels.ADDER_CODES)}"
            )
        if self.phase is None:
            object.__setattr__(self, "phase", r - 1)
        elif not 0 <= self.phase < r:
            raise ConfigurationError(f"phase must lie in [0, {r}), got {self.phase}")

    @classmethod
    def lossless(cls, n=5, r=16, m=1, input_width=PAPER_INPUT_WIDTH, **kw) -> CicConfig:
        w = register_width(n, r, input_width, m)
        return cls(n, m, r, input_width, (w,) * (n + 1), **kw)

    @classmethod
    def paper(cls, input_width=PAPER_INPUT_WIDTH, **kw) -> CicConfig:
        """N=5, M=1, R=16 with the 25/22/20/18/16-bit adder schedule."""
        return cls(5, 1, 16, input_width, PAPER_WIDTHS, **kw)

    @property
    def output_width(self) -> int:
        return self.stage_widths[-1]

    @property
    def dropped_bits(self) -> int:
        """LSBs discarded between the first integrator and the comb section."""
        return self.stage_widths[0] - self.stage_widths[-1]

    @property
    def is_lossless(self) -> bool:
        need = register_width(self.n_stages, self.decimation, self.input_width, self.diff_delay)
        return self.dropped_bits == 0 and self.stage_widths[0] >= need

    @property
    def dc_gain(self) -> float:
        """Output LSBs per input LSB at DC."""
        return g_max(self.n_stages, self.decimation, self.diff_delay) / 2.0 ** self.dropped_bits

    @property
    def group_delay(self) -> float:
        """Group delay in input samples."""
        return self.n_stages * (self.decimation * self.diff_delay - 1) / 2.0

    def with_(self, **kw) -> CicConfig:
        return replace(self, **kw)


def pipeline_latency(cfg: CicConfig) -> int:
    """Output-sample delay of the pipelined structure relative to the flat one."""
    if not cfg.pipelined:
        return 0
    high_rate = cfg.n_stages  # N-1 chained integrator registers + pre-downsampler register
    return (cfg.phase + high_rate) // cfg.decimation + (cfg.n_stages - 1)


def _emit_phase(cfg: CicConfig) -> int:
    if cfg.pipelined:
        return (cfg.phase + cfg.n_stages) % cfg.decimation
    return cfg.phase


@dataclass
class CicState:
    """Mutable registers of one CIC stream."""

    integrators: np.ndarray
    comb_delay: np.ndarray
    pipeline_regs: np.ndarray
    decim_reg: np.ndarray
    counter: int = 0
    comb_ptr: int = 0
    samples_in: int = field(default=0)

    @classmethod
    def zeros(cls, cfg: CicConfig) -> CicState:
        n, m = cfg.n_stages, cfg.diff_delay
        return cls(
            integrators=np.zeros(n, dtype=np.int64),
            comb_delay=np.zeros((n, m), dtype=np.int64),
            pipeline_regs=np.zeros(n, dtype=np.int64),
            decim_reg=np.zeros(1, dtype=np.int64),
        )

    def copy(self) -> CicState:
        return CicState(
            self.integrators.copy(), self.comb_delay.copy(), self.pipeline_regs.copy(),
            self.decim_reg.copy(), self.counter, self.comb_ptr, self.samples_in,
        )


def _validate_input(cfg: CicConfig, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.size and not np.issubdtype(x.dtype, np.integer):
        if not np.all(np.equal(np.mod(x, 1), 0)):
            raise InputDomainError("CIC input must be integer-valued", stage="cic")
    x = x.astype(np.int64)
    lo, hi = signed_range(cfg.input_width)
    if x.size:
        bad = np.nonzero((x < lo) | (x > hi))[0]
        if bad.size:
            i = int(bad[0])
            raise InputDomainError(
                f"sample {int(x[i])} at index {i} does not fit {cfg.input_width} bits",
                stage="cic", index=i,
            )
    return x


def _run(state: CicState, cfg: CicConfig, x: np.ndarray) -> np.ndarray:
    x = _validate_input(cfg, x)
    kind = _kernels.ADDER_CODES[cfg.adder_kind]
    widths = np.asarray(cfg.stage_widths, dtype=np.int64)
    v, state.counter = _kernels.cic_integrate(
        x, state.integrators, widths, state.counter, _emit_phase(cfg),
        cfg.decimation, kind, cfg.pipelined, state.decim_reg,
    )
    y, state.comb_ptr = _kernels.cic_comb(
        v, state.comb_delay, state.comb_ptr, cfg.output_width, kind, cfg.pipelined,
        state.pipeline_regs,
    )
    state.samples_in += len(x)
    return y


def _block_parts(block):
    if isinstance(block, SampleBlock):
        return block.samples, block.rate_hz
    return block, None


def process(state: CicState, cfg: CicConfig, block):
    """Run a block through the decimator, threading ``state``.

    Accepts a :class:`SampleBlock` (returns one at ``rate/R``) or a bare
    integer array (returns an array).
    """
    samples, rate = _block_parts(block)
    y = _run(state, cfg, samples)
    if rate is None:
        return y
    return SampleBlock(y, rate / cfg.decimation, cfg.output_width)


def process_pipelined(state: CicState, cfg: CicConfig, block):
    if not cfg.pipelined:
        raise ConfigurationError("process_pipelined needs a config with pipelined=True")
    return process(state, cfg, block)


class CicDecimator:
    """A config plus its stream state; the object the chain composes."""

    def __init__(self, cfg: CicConfig, input_rate_hz: float = 6_144_000.0):
        self.cfg = cfg
        self.input_rate_hz = float(input_rate_hz)
        self.state = CicState.zeros(cfg)

    name = "cic"

    @property
    def decimation(self) -> int:
        return self.cfg.decimation

    @property
    def input_width(self) -> int:
        return self.cfg.input_width

    @property
    def output_width(self) -> int:
        return self.cfg.output_width

    @property
    def output_rate_hz(self) -> float:
        return self.input_rate_hz / self.cfg.decimation

    @property
    def group_delay_in(self) -> float:
        return self.cfg.group_delay

    @property
    def latency(self) -> int:
        return pipeline_latency(self.cfg)

    @property
    def unit_amplitude(self) -> int:
        """Input LSBs that represent unit amplitude (a +-1 modulator symbol)."""
        return 1 << (self.cfg.input_width - 2)

    def reset(self) -> None:
        self.state = CicState.zeros(self.cfg)

    def process(self, x) -> np.ndarray:
        return _run(self.state, self.cfg, x)

    def gain_at(self, f_hz):
        """Closed-form linear gain (output LSB per input LSB) at ``f_hz``."""
        return reference_magnitude(self.cfg, np.asarray(f_hz) / self.input_rate_hz) / 2.0 ** (
            self.cfg.dropped_bits
        )


def reference_magnitude(cfg: CicConfig, f_norm):
    """``|sin(pi f R M) / sin(pi f)|**N`` at ``f_norm`` cycles per input sample.

    The DC limit is ``(R M)**N``.  Works on scalars and arrays.
    """
    rm = cfg.decimation * cfg.diff_delay
    f = np.asarray(f_norm, dtype=float)
    num = np.sin(np.pi * f * rm)
    den = np.sin(np.pi * f)
    small = np.abs(den) < 1e-300
    ratio = np.where(small, float(rm), num / np.where(small, 1.0, den))
    out = np.abs(ratio) ** cfg.n_stages
    return float(out) if out.ndim == 0 else out


def reference_droop_db(cfg: CicConfig, f_hz, rate_hz):
    """Closed-form response in dB relative to DC."""
    g = g_max(cfg.n_stages, cfg.decimation, cfg.diff_delay)
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(reference_magnitude(cfg, np.asarray(f_hz) / rate_hz) / g)


def impulse_kernel(n: int, r: int, m: int = 1) -> list[int]:
    """Exact taps of the equivalent FIR: N-fold convolution of R*M ones."""
    h = [1]
    box = [1] * (r * m)
    for _ in range(n):
        out = [0] * (len(h) + len(box) - 1)
        for i, a in enumerate(h):
            for j, b in enumerate(box):
                out[i + j] += a * b
        h = out
    return h


def fir_oracle(cfg: CicConfig, x, phase: int | None = None) -> list[int]:
    """Arbitrary-precision reference: full convolution then keep one in R.

    Independent of the register model; Python integers never overflow.
    """
    h = impulse_kernel(cfg.n_stages, cfg.decimation, cfg.diff_delay)
    xs = [int(v) for v in x]
    p = cfg.phase if phase is None else phase
    out = []
    for n in range(p, len(xs), cfg.decimation):
        acc = 0
        for k in range(max(0, n - len(xs) + 1), min(len(h), n + 1)):
            acc += h[k] * xs[n - k]
        out.append(acc)
    return out


def impulse_response(cfg: CicConfig) -> np.ndarray:
    """Undecimated impulse response recovered from the structural model.

    An impulse delayed by ``j`` samples exposes taps ``k*R + phase - j``;
    running all R delays and interleaving gives every tap.
    """
    flat = cfg.with_(pipelined=False)
    r = cfg.decimation
    length = cfg.n_stages * (r * cfg.diff_delay - 1) + 1
    n_in = length + 2 * r
    n_in += (-n_in) % r
    h = np.zeros(n_in, dtype=np.int64)
    for j in range(r):
        x = np.zeros(n_in, dtype=np.int64)
        if j < n_in:
            x[j] = 1
        y = process(CicState.zeros(flat), flat, x)
        for k, val in enumerate(y):
            t = k * r + flat.phase - j
            if 0 <= t < n_in:
                h[t] = val
    return h[:length]


@dataclass(frozen=True)
class ErrorStats:
    max_lsb: float
    rms_lsb: float
    mean_lsb: float
    n: int


def truncation_error_report(cfg_truncated: CicConfig, cfg_lossless: CicConfig, x) -> ErrorStats:
    """Difference between a pruned and an exact CIC, in truncated-output LSBs."""
    a, b = cfg_truncated, cfg_lossless
    if (a.n_stages, a.diff_delay, a.decimation) != (b.n_stages, b.diff_delay, b.decimation):
        raise ConfigurationError("truncation_error_report needs identical N, M, R")
    x = np.asarray(x, dtype=np.int64)
    ya = process(CicState.zeros(a), a.with_(pipelined=False), x).astype(np.float64)
    yb = process(CicState.zeros(b), b.with_(pipelined=False, phase=a.phase), x).astype(np.float64)
    scale = 2.0 ** (a.dropped_bits - b.dropped_bits)
    err = ya - yb / scale
    if err.size == 0:
        return ErrorStats(0.0, 0.0, 0.0, 0)
    return ErrorStats(
        float(np.max(np.abs(err))), float(np.sqrt(np.mean(err**2))), float(np.mean(err)), err.size
    )


def predicted_truncation_rms(cfg: CicConfig) -> float:
    """Closed-form RMS truncation error, in output LSBs.

    Each stage boundary that drops ``d`` bits injects white error of
    variance ``step**2 / 12`` (step = weight of the dropped field's top bit
    plus one).  Error entering integrator j+1 reaches the output through
    ``box**(N-j) * (1 - z**-RM)**j``; error entering the comb section goes
    through the N low-rate combs only.  This ignores any discarded bits that
    happen to be always zero.
    """
    n, rm = cfg.n_stages, cfg.decimation * cfg.diff_delay
    w = cfg.stage_widths
    box = np.ones(rm)
    diff = np.zeros(rm + 1)
    diff[0], diff[-1] = 1.0, -1.0
    var = 0.0
    for j in range(1, n + 1):
        if w[j] == w[j - 1]:
            continue
        step = 2.0 ** (w[0] - w[j])
        if j < n:
            g = np.array([1.0])
            for _ in range(n - j):
                g = np.convolve(g, box)
            for _ in range(j):
                g = np.convolve(g, diff)
            gain = float(np.sum(g**2))
        else:
            gain = float(math.comb(2 * n, n))
        var += step**2 / 12.0 * gain
    return math.sqrt(var) / 2.0 ** cfg.dropped_bits
