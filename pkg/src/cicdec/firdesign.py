"""Half-band and droop-correction FIR stages.

Half-bands are Kaiser-windowed sinc filters of length ``4k + 3``; the center
tap is exactly 1/2 and every other even offset is exactly zero.  The droop
corrector is a symmetric FIR fitted by weighted least squares to the inverse
of the CIC passband.  Both decimate by 2.

Coefficients are quantized to a ``Qm.n`` format (sign bit, ``m`` integer
bits, ``n`` fraction bits) and the data path runs on integers: products go
into a wide accumulator and the result is shifted right by ``n`` and
wrapped to the stage output width.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .block import SampleBlock
from .cic import CicConfig, reference_magnitude
from .errors import ConfigurationError, DesignError, InputDomainError
from .fxp import Word, signed_range

MAX_TAPS = 255
DEFAULT_QFORMAT = "Q1.15"
_GRID = 4096


@dataclass(frozen=True)
class FilterSpec:
    pass_edge_hz: float
    stop_edge_hz: float
    input_rate_hz: float
    min_stop_atten_db: float = 90.0
    max_pass_ripple_db: float = 0.05

    def __post_init__(self):
        if not 0 < self.pass_edge_hz < self.stop_edge_hz < self.input_rate_hz / 2:
            raise ConfigurationError(
                "need 0 < pass_edge < stop_edge < input_rate/2, got "
                f"pass={self.pass_edge_hz}, stop={self.stop_edge_hz}, rate={self.input_rate_hz}"
            )
        if self.min_stop_atten_db <= 0 or self.max_pass_ripple_db <= 0:
            raise ConfigurationError("attenuation and ripple targets must be positive")


@dataclass(frozen=True)
class QFormat:
    """``Qm.n``: one sign bit, ``m`` integer bits and ``n`` fraction bits."""

    int_bits: int
    frac_bits: int

    def __post_init__(self):
        if self.int_bits < 0 or self.frac_bits < 0 or self.total_bits > 32:
            raise ConfigurationError(f"{self} must have non-negative fields and at most 32 bits")

    @classmethod
    def parse(cls, text) -> QFormat:
        if isinstance(text, QFormat):
            return text
        m = re.fullmatch(r"[Qq](\d+)\.(\d+)", str(text).strip())
        if not m:
            raise ConfigurationError(f"bad fixed-point format {text!r}, expected like 'Q1.15'")
        return cls(int(m.group(1)), int(m.group(2)))

    @property
    def total_bits(self) -> int:
        return 1 + self.int_bits + self.frac_bits

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    def __str__(self):
        return f"Q{self.int_bits}.{self.frac_bits}"


@dataclass(frozen=True)
class DesignReport:
    """Numbers measured on a designed (or quantized) filter.

    ``fit_error_db`` is the droop corrector's worst deviation of
    ``|H_cic * H_droop|`` from flat over the passband; ``None`` for half-bands.
    Margins are positive when the target is met.
    """

    taps: int
    stop_atten_db: float
    pass_ripple_db: float
    target_stop_atten_db: float
    target_pass_ripple_db: float
    fit_error_db: float | None = None
    target_fit_db: float | None = None

    @property
    def stop_margin_db(self) -> float:
        return self.stop_atten_db - self.target_stop_atten_db

    @property
    def ripple_margin_db(self) -> float:
        return self.target_pass_ripple_db - self.pass_ripple_db

    @property
    def fit_margin_db(self) -> float | None:
        if self.fit_error_db is None:
            return None
        return self.target_fit_db - self.fit_error_db

    @property
    def meets(self) -> bool:
        ok = self.stop_margin_db >= 0 and self.ripple_margin_db >= 0
        if self.fit_error_db is not None:
            ok = ok and self.fit_margin_db >= 0
        return ok

    def as_dict(self) -> dict:
        d = {
            "taps": self.taps,
            "stop_atten_db": self.stop_atten_db,
            "target_stop_atten_db": self.target_stop_atten_db,
            "stop_margin_db": self.stop_margin_db,
            "pass_ripple_db": self.pass_ripple_db,
            "target_pass_ripple_db": self.target_pass_ripple_db,
            "meets": self.meets,
        }
        if self.fit_error_db is not None:
            d.update(fit_error_db=self.fit_error_db, target_fit_db=self.target_fit_db)
        return d


@dataclass(frozen=True)
class FirFilter:
    """A symmetric FIR with optional fixed-point coefficients.

    ``quantized`` holds the integer coefficients (value times ``2**frac``)
    once :func:`quantize_coeffs` has run; ``report`` describes whichever
    coefficient set was measured last.
    """

    coeffs: tuple
    kind: str
    spec: FilterSpec
    decimation: int = 2
    quantized: tuple | None = None
    qformat: QFormat | None = None
    report: DesignReport | None = None
    cic_cfg: CicConfig | None = field(default=None, compare=False)
    cic_rate_hz: float | None = None

    def __post_init__(self):
        if self.kind not in ("halfband", "droop", "generic"):
            raise ConfigurationError(f"unknown filter kind {self.kind!r}")
        if self.decimation != 2:
            raise ConfigurationError("every FIR stage decimates by 2")

    @property
    def taps(self) -> int:
        return len(self.coeffs)

    @property
    def group_delay(self) -> float:
        """Delay in input samples."""
        return (self.taps - 1) / 2

    @property
    def is_quantized(self) -> bool:
        return self.quantized is not None

    @property
    def quantized_words(self) -> list[Word]:
        if self.quantized is None:
            return []
        return [Word(int(q), self.qformat.total_bits) for q in self.quantized]

    @property
    def effective_coeffs(self) -> np.ndarray:
        """Coefficients as realised: quantized values if present."""
        if self.quantized is not None:
            return np.asarray(self.quantized, dtype=float) / self.qformat.scale
        return np.asarray(self.coeffs, dtype=float)

    @property
    def dc_gain(self) -> float:
        return float(np.sum(self.effective_coeffs))


def kaiser_beta(atten_db: float) -> float:
    if atten_db > 50:
        return 0.1102 * (atten_db - 8.7)
    if atten_db >= 21:
        return 0.5842 * (atten_db - 21) ** 0.4 + 0.07886 * (atten_db - 21)
    return 0.0


def _amplitude(h, f_norm) -> np.ndarray:
    """Zero-phase amplitude of a symmetric odd-length ``h`` at cycles/sample."""
    h = np.asarray(h, dtype=float)
    c = (len(h) - 1) // 2
    k = np.arange(1, c + 1)
    return h[c] + 2.0 * np.cos(2 * np.pi * np.outer(f_norm, k)) @ h[c + 1:]


def _db(x):
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.maximum(np.abs(x), 1e-20))


def _grids(spec: FilterSpec):
    fs = spec.input_rate_hz
    fp = np.linspace(0.0, spec.pass_edge_hz, _GRID) / fs
    fst = np.linspace(spec.stop_edge_hz, fs / 2, _GRID) / fs
    return fp, fst


def _cic_norm(cic_cfg: CicConfig, f_hz, cic_rate_hz):
    return reference_magnitude(cic_cfg, np.asarray(f_hz) / cic_rate_hz) / float(
        (cic_cfg.decimation * cic_cfg.diff_delay) ** cic_cfg.n_stages
    )


def measure(h, spec: FilterSpec, kind: str, cic_cfg=None, cic_rate_hz=None,
            fit_tol_db=None) -> DesignReport:
    """Evaluate ``h`` against ``spec`` on dense pass and stop grids."""
    fp, fst = _grids(spec)
    stop = float(-_db(np.max(np.abs(_amplitude(h, fst)))))
    a_pass = _amplitude(h, fp)
    fit = None
    if kind == "droop":
        casc = a_pass * _cic_norm(cic_cfg, fp * spec.input_rate_hz, cic_rate_hz)
        fit = float(np.max(np.abs(_db(casc))))
        ripple = fit
    else:
        ripple = float(np.max(np.abs(_db(a_pass))))
    return DesignReport(len(h), stop, ripple, spec.min_stop_atten_db, spec.max_pass_ripple_db,
                        fit, fit_tol_db)


def _halfband_taps(length: int, atten_db: float) -> np.ndarray:
    m = np.arange(length) - (length - 1) // 2
    h = 0.5 * np.sinc(m / 2.0) * np.kaiser(length, kaiser_beta(atten_db))
    h[(m % 2 == 0) & (m != 0)] = 0.0
    h[m == 0] = 0.5
    return (h + h[::-1]) / 2.0


def design_halfband(spec: FilterSpec, max_taps: int = MAX_TAPS) -> FirFilter:
    """Shortest Kaiser half-band of length ``4k + 3`` meeting ``spec``.

    The half-band response is symmetric about ``rate/4``, so the edge that
    is designed for is the tighter of ``pass_edge`` and the mirror of
    ``stop_edge``.  Both edges must straddle ``rate/4``.
    """
    fs = spec.input_rate_hz
    if not spec.pass_edge_hz < fs / 4 < spec.stop_edge_hz:
        raise ConfigurationError(
            f"half-band edges must straddle rate/4 = {fs / 4} Hz "
            f"(pass {spec.pass_edge_hz}, stop {spec.stop_edge_hz})"
        )
    fp = max(spec.pass_edge_hz, fs / 2 - spec.stop_edge_hz)
    tw = (fs / 2 - 2 * fp) / fs
    a = max(spec.min_stop_atten_db, -20 * math.log10(10 ** (spec.max_pass_ripple_db / 20) - 1))
    est = math.ceil((a - 7.95) / (2.285 * 2 * math.pi * tw)) + 1
    k = max(0, math.ceil((est - 3) / 4))
    k_max = (max_taps - 3) // 4

    def attempt(kk):
        h = _halfband_taps(4 * kk + 3, a)
        return h, measure(h, spec, "halfband")

    k = min(k, k_max)
    h, rep = attempt(k)
    if rep.meets:
        while k > 0:
            h2, r2 = attempt(k - 1)
            if not r2.meets:
                break
            k, h, rep = k - 1, h2, r2
    else:
        best = rep
        while not rep.meets and k < k_max:
            k += 1
            h, rep = attempt(k)
            if rep.stop_atten_db > best.stop_atten_db:
                best = rep
        if not rep.meets:
            raise DesignError(
                f"half-band spec not met within {max_taps} taps: best stopband "
                f"{best.stop_atten_db:.2f} dB (target {spec.min_stop_atten_db}), "
                f"ripple {best.pass_ripple_db:.4f} dB (target {spec.max_pass_ripple_db})",
                best.as_dict(), stage="halfband",
            )
    return FirFilter(tuple(float(v) for v in h), "halfband", spec, report=rep)


def _droop_ls(length, spec, cic_cfg, cic_rate_hz, stop_weight):
    fs = spec.input_rate_hz
    k = (length - 1) // 2
    f_pass = np.linspace(0.0, spec.pass_edge_hz, 400)
    f_stop = np.linspace(spec.stop_edge_hz, fs / 2, 800)
    f = np.concatenate([f_pass, f_stop]) / fs
    target = np.concatenate([1.0 / _cic_norm(cic_cfg, f_pass, cic_rate_hz), np.zeros(len(f_stop))])
    w = np.sqrt(np.concatenate([np.ones(len(f_pass)), np.full(len(f_stop), stop_weight)]))
    basis = np.cos(2 * np.pi * np.outer(f, np.arange(k + 1)))
    basis[:, 1:] *= 2.0
    a, *_ = np.linalg.lstsq(basis * w[:, None], target * w, rcond=None)
    a /= basis[0] @ a  # unity at DC
    return np.concatenate([a[:0:-1], a])


def design_droop_correction(cic_cfg: CicConfig, spec: FilterSpec, cic_rate_hz: float = 6_144_000.0,
                            fit_tol_db: float = 0.01, stop_weight: float = 100.0,
                            max_taps: int = MAX_TAPS) -> FirFilter:
    """Symmetric FIR approximating ``1/|H_cic|`` over the passband.

    The target is the CIC response normalized to unity at DC, evaluated at
    the CIC's own input rate ``cic_rate_hz``.  Odd lengths are tried from
    short to long; the first that meets both ``fit_tol_db`` (worst cascade
    deviation from flat over ``[0, pass_edge]``) and the stopband target
    wins.
    """
    first_null = cic_rate_hz / (cic_cfg.decimation * cic_cfg.diff_delay)
    if spec.pass_edge_hz >= first_null:
        raise ConfigurationError(
            f"pass edge {spec.pass_edge_hz} Hz lies beyond the CIC's first null at {first_null} Hz"
        )
    best = None
    for length in range(3, max_taps + 1, 2):
        h = _droop_ls(length, spec, cic_cfg, cic_rate_hz, stop_weight)
        rep = measure(h, spec, "droop", cic_cfg, cic_rate_hz, fit_tol_db)
        if rep.meets:
            return FirFilter(tuple(float(v) for v in h), "droop", spec, report=rep,
                             cic_cfg=cic_cfg, cic_rate_hz=cic_rate_hz)
        if best is None or rep.fit_error_db < best.fit_error_db:
            best = rep
    raise DesignError(
        f"droop corrector not met within {max_taps} taps: best fit {best.fit_error_db:.4f} dB "
        f"(target {fit_tol_db}), stopband {best.stop_atten_db:.2f} dB",
        best.as_dict(), stage="droop",
    )


def quantize_coeffs(filt: FirFilter, fmt=DEFAULT_QFORMAT) -> FirFilter:
    """Round coefficients half-to-even into ``fmt`` and re-measure.

    A quantized filter that misses its spec is still returned; check
    ``report.meets`` and the margin fields.
    """
    q = QFormat.parse(fmt)
    lo, hi = signed_range(q.total_bits)
    ints = np.round(np.asarray(filt.coeffs) * q.scale)
    if ints.min() < lo or ints.max() > hi:
        raise ConfigurationError(f"coefficients exceed the range of {q}")
    ints = tuple(int(v) for v in ints)
    rep = measure(np.asarray(ints, dtype=float) / q.scale, filt.spec, filt.kind, filt.cic_cfg,
                  filt.cic_rate_hz, filt.report.target_fit_db if filt.report else None)
    return replace(filt, quantized=ints, qformat=q, report=rep)


def coefficient_rows(filt: FirFilter):
    """Rows for the ``index,float_value,quantized_int,format`` CSV."""
    fmt = str(filt.qformat) if filt.qformat else ""
    q = filt.quantized or [""] * filt.taps
    return [(i, float(c), q[i], fmt) for i, c in enumerate(filt.coeffs)]


@dataclass
class FirState:
    """Delay line (last ``taps - 1`` inputs) and decimator phase."""

    history: np.ndarray
    phase: int = 0

    @classmethod
    def zeros(cls, filt: FirFilter) -> FirState:
        return cls(np.zeros(max(filt.taps - 1, 0), dtype=np.int64), 0)

    def copy(self) -> FirState:
        return FirState(self.history.copy(), self.phase)


def accumulator_width(filt: FirFilter, data_width: int) -> int:
    return filt.qformat.total_bits + data_width + math.ceil(math.log2(filt.taps))


def _require_quantized(filt):
    if not filt.is_quantized:
        raise ConfigurationError("the fixed-point data path needs quantized coefficients")


def decimate2(filt: FirFilter, state: FirState, block, data_width: int = 16,
              out_width: int = 16, stage: str | None = None):
    """Polyphase decimate-by-2 on integer samples, threading ``state``.

    Outputs are taken at even input indices of the stream (the first input
    sample produces the first output).
    """
    _require_quantized(filt)
    if isinstance(block, SampleBlock):
        x, rate = block.samples, block.rate_hz
    else:
        x, rate = block, None
    x = np.asarray(x, dtype=np.int64)
    lo, hi = signed_range(data_width)
    if x.size:
        bad = np.nonzero((x < lo) | (x > hi))[0]
        if bad.size:
            i = int(bad[0])
            raise InputDomainError(f"sample {int(x[i])} does not fit {data_width} bits",
                                   stage=stage or filt.kind, index=i)
    coeffs = np.asarray(filt.quantized, dtype=np.int64)
    out, state.phase = _kernels.fir_decimate2(x, coeffs, state.history, state.phase,
                                              filt.qformat.frac_bits, out_width)
    out = np.asarray(out, dtype=np.int64)
    if rate is None:
        return out
    return SampleBlock(out, rate / 2, out_width)


class FirDecimator:
    """Streaming fixed-point stage wrapping a quantized :class:`FirFilter`."""

    decimation = 2

    def __init__(self, filt: FirFilter, input_rate_hz: float | None = None, name: str | None = None,
                 data_width: int = 16, out_width: int = 16):
        _require_quantized(filt)
        self.filter = filt
        self.name = name or filt.kind
        self.input_rate_hz = float(input_rate_hz or filt.spec.input_rate_hz)
        self.data_width = data_width
        self.output_width = out_width
        self.state = FirState.zeros(filt)

    @property
    def output_rate_hz(self) -> float:
        return self.input_rate_hz / 2

    @property
    def group_delay_in(self) -> float:
        return self.filter.group_delay

    @property
    def unit_amplitude(self) -> int:
        return 1 << (self.data_width - 1)

    @property
    def dc_gain(self) -> float:
        return self.filter.dc_gain

    @property
    def accumulator_width(self) -> int:
        return accumulator_width(self.filter, self.data_width)

    def reset(self) -> None:
        self.state = FirState.zeros(self.filter)

    def process(self, x) -> np.ndarray:
        return decimate2(self.filter, self.state, x, self.data_width, self.output_width, self.name)

    def gain_at(self, f_hz):
        """Linear gain of the quantized coefficients at ``f_hz`` (input rate)."""
        return np.abs(_amplitude(self.filter.effective_coeffs,
                                 np.atleast_1d(np.asarray(f_hz, dtype=float)) / self.input_rate_hz))
