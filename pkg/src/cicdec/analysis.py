"""Spectral measurement: windowed FFT, SNR, and sine-sweep frequency response.

SNR protocol
------------
Power is summed over FFT bins.  The signal occupies the peak bin plus a
guard of ``GUARDS[window]`` bins on each side (0 for a coherent rectangular
record, 2 for Hann, 4 for the 4-term Blackman-Harris window).  DC and its
guard bins are excluded from the noise.  Magnitudes are floored at
``DB_FLOOR`` so reports stay finite.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .block import SampleBlock
from .errors import ConfigurationError

DB_FLOOR = -400.0
GUARDS = {"rect": 0, "hann": 2, "blackman-harris": 4}
_ALIASES = {"rectangular": "rect", "none": "rect", "bh4": "blackman-harris",
            "blackmanharris": "blackman-harris"}
_BH4 = (0.35875, 0.48829, 0.14128, 0.01168)


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def fft(x) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT.

    Length must be a power of two.  Each pass combines pairs of half-size
    transforms for all blocks at once.
    """
    x = np.asarray(x, dtype=complex)
    n = len(x)
    if not _is_pow2(n):
        raise ConfigurationError(f"FFT size must be a power of two, got {n}")
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    X = x[rev]
    m = 1
    while m < n:
        tw = np.exp(-2j * np.pi * np.arange(m) / (2 * m))
        X = X.reshape(-1, 2 * m)
        even = X[:, :m]
        odd = X[:, m:] * tw
        X = np.concatenate([even + odd, even - odd], axis=1)
        m *= 2
    return X.reshape(n)


def window(name: str, n: int) -> np.ndarray:
    name = _ALIASES.get(name, name)
    k = np.arange(n)
    if name == "rect":
        return np.ones(n)
    if name == "hann":
        return 0.5 - 0.5 * np.cos(2 * np.pi * k / n)
    if name == "blackman-harris":
        a0, a1, a2, a3 = _BH4
        t = 2 * np.pi * k / n
        return a0 - a1 * np.cos(t) + a2 * np.cos(2 * t) - a3 * np.cos(3 * t)
    raise ConfigurationError(f"unknown window {name!r}; expected one of {sorted(GUARDS)}")


def to_db(x, floor=DB_FLOOR):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = 20.0 * np.log10(np.abs(x))
    return np.maximum(out, floor)


@dataclass
class SpectrumReport:
    bin_hz: float
    magnitudes_db: np.ndarray
    power: np.ndarray
    signal_bin: int | None
    snr_db: float
    window: str
    coherent: bool
    fft_size: int
    rate_hz: float

    @property
    def guard(self) -> int:
        return GUARDS[self.window]

    @property
    def freqs_hz(self) -> np.ndarray:
        return np.arange(len(self.power)) * self.bin_hz

    def rows(self):
        return list(zip(self.freqs_hz.tolist(), self.magnitudes_db.tolist()))


def spectrum(block, fft_size: int, window_name: str = "blackman-harris", rate_hz=None,
             full_scale: float = 1.0, coherent: bool = False) -> SpectrumReport:
    """One-sided magnitude spectrum of the first ``fft_size`` samples.

    A full-scale sine reads 0 dB.  ``power`` keeps the raw ``|X[k]|**2``
    used for SNR sums.
    """
    if isinstance(block, SampleBlock):
        x, rate = block.samples, block.rate_hz
    else:
        x, rate = block, rate_hz
    if rate is None:
        raise ConfigurationError("a sample rate is needed")
    if not _is_pow2(fft_size):
        raise ConfigurationError(f"FFT size must be a power of two, got {fft_size}")
    x = np.asarray(x, dtype=float)
    if len(x) < fft_size:
        raise ConfigurationError(f"block has {len(x)} samples, fewer than fft_size={fft_size}")
    name = _ALIASES.get(window_name, window_name)
    w = window(name, fft_size)
    X = fft(x[:fft_size] * w)[: fft_size // 2 + 1]
    power = np.abs(X) ** 2
    mags = to_db(2.0 * np.abs(X) / (np.sum(w) * full_scale))
    guard = GUARDS[name]
    search = power.copy()
    search[: guard + 1] = 0.0
    sig = int(np.argmax(search)) if np.any(search > 0) else None
    report = SpectrumReport(rate / fft_size, mags, power, sig, math.nan, name, coherent,
                            fft_size, float(rate))
    if sig is not None:
        report.snr_db = snr(report, (0.0, rate / 2.0))
    return report


def _band_bins(report: SpectrumReport, band_hz):
    lo, hi = band_hz
    if hi < lo:
        raise ConfigurationError(f"empty band {band_hz}")
    k_lo = max(0, math.ceil(lo / report.bin_hz - 1e-9))
    k_hi = min(len(report.power) - 1, math.floor(hi / report.bin_hz + 1e-9))
    if k_hi < k_lo:
        raise ConfigurationError(f"band {band_hz} contains no FFT bins")
    return k_lo, k_hi


def snr(report: SpectrumReport, band_hz) -> float:
    """Signal-to-noise ratio in dB over ``band_hz = (lo, hi)``."""
    k_lo, k_hi = _band_bins(report, band_hz)
    sig = report.signal_bin
    if sig is None or not k_lo <= sig <= k_hi:
        raise ConfigurationError(f"signal bin {sig} is not inside band {band_hz}")
    g = report.guard
    p = report.power
    s_lo, s_hi = max(0, sig - g), min(len(p) - 1, sig + g)
    signal = float(np.sum(p[s_lo:s_hi + 1]))
    mask = np.zeros(len(p), dtype=bool)
    mask[k_lo:k_hi + 1] = True
    mask[: g + 1] = False
    mask[s_lo:s_hi + 1] = False
    if not mask.any():
        raise ConfigurationError(f"band {band_hz} has no noise bins outside the signal guard")
    noise = float(np.sum(p[mask]))
    if noise <= 0.0:
        return -DB_FLOOR
    if signal <= 0.0:
        return DB_FLOOR
    return 10.0 * math.log10(signal / noise)


def largest_spur_dbc(report: SpectrumReport, band_hz) -> float:
    """Largest non-signal bin in ``band_hz`` relative to the signal peak, in dB."""
    k_lo, k_hi = _band_bins(report, band_hz)
    g = report.guard
    p = report.power
    mask = np.zeros(len(p), dtype=bool)
    mask[k_lo:k_hi + 1] = True
    mask[: g + 1] = False
    sig = report.signal_bin
    mask[max(0, sig - g):sig + g + 1] = False
    return 10.0 * math.log10(max(float(np.max(p[mask])), 1e-300) / p[sig])


def coherent_frequency(freq_hz: float, rate_hz: float, n: int) -> float:
    """Nearest frequency with an integer number of cycles in ``n`` samples."""
    k = max(1, round(freq_hz * n / rate_hz))
    return k * rate_hz / n


def _projection(y: np.ndarray, cycles: int) -> complex:
    n = len(y)
    ph = np.exp(-2j * np.pi * cycles * np.arange(n) / n)
    return complex(np.dot(y, ph))


def _probe_cycles(exact: float, record: int, limit: int) -> int:
    """Cycles of the probe in the output record.

    Odd counts keep every low-order harmonic of the quantized probe off the
    measured bin after decimation.  Exact multiples of half the output
    rate (CIC nulls, output Nyquist) are kept as requested.
    """
    m = round(exact)
    if abs(exact - m) < 1e-9 and m > 0 and m % (record // 2) == 0:
        return m
    m = 2 * math.floor(exact / 2) + 1
    if abs(m + 2 - exact) < abs(m - exact):
        m += 2
    while m >= limit and m > 1:
        m -= 2
    return m


def _sweep_one(factory, f_hz, amplitude, record):
    probe = factory()
    rate = probe.input_rate_hz
    d = probe.decimation
    if f_hz < 0 or f_hz > rate / 2:
        raise ConfigurationError(f"probe {f_hz} Hz is outside [0, {rate / 2}] Hz")
    unit = amplitude * probe.unit_amplitude
    t_out = math.ceil(2.0 * probe.group_delay_in / d) + 2
    n_in = (t_out + record) * d
    if f_hz == 0:
        level = round(unit)
        y = np.asarray(probe.process(np.full(n_in, level, dtype=np.int64)), dtype=float)
        return 0.0, float(to_db(np.mean(y[t_out:t_out + record]) / level))

    m = _probe_cycles(f_hz * d * record / rate, record, d * record // 2)
    f_used = m * rate / (d * record)
    m_out = m % record
    n = np.arange(n_in)
    seg = slice(t_out * d, n_in)

    def run(theta):
        x = np.round(unit * np.sin(2 * np.pi * f_used * n / rate + theta)).astype(np.int64)
        sysm = factory()
        y = np.asarray(sysm.process(x), dtype=float)[t_out:t_out + record]
        return x, y

    if m_out in (0, record // 2):
        # aliases onto DC or Nyquist: combine quadrature drives, cancel offsets
        sign = 1.0 if m_out == 0 else np.cos(np.pi * np.arange(record))
        parts_out, parts_in = [], []
        for theta in (0.0, np.pi / 2):
            xa, ya = run(theta)
            xb, yb = run(theta + np.pi)
            parts_out.append(np.mean((ya - yb) / 2 * sign))
            parts_in.append(abs(_projection((xa[seg] - xb[seg]) / 2.0, m)) * 2 / len(xa[seg]))
        a_out = math.hypot(*parts_out)
        a_in = float(np.mean(parts_in))
    else:
        x, y = run(0.0)
        a_in = abs(_projection(x[seg].astype(float), m)) * 2 / (n_in - t_out * d)
        a_out = abs(_projection(y, m_out)) * 2 / record
    return f_used, float(to_db(a_out / a_in))


def response_sweep(factory, freqs_hz, amplitude: float = 0.5, record: int = 1024,
                   workers: int = 1):
    """Measure gain at each probe frequency with a coherent, quantized sine.

    ``factory()`` must return a fresh stage exposing ``process(array)``,
    ``input_rate_hz``, ``decimation``, ``group_delay_in`` (input samples)
    and ``unit_amplitude`` (input LSBs for a unit sine).  Probes are snapped
    to the nearest frequency with a whole number of cycles in the output
    record, so the returned frequencies may differ slightly from the
    requested ones.  The first ``2 x group delay`` of output is discarded.
    Gain is output LSBs over input LSBs, in dB.
    """
    freqs = [float(f) for f in freqs_hz]
    probe = factory()
    for f in freqs:
        if f < 0 or f > probe.input_rate_hz / 2:
            raise ConfigurationError(
                f"probe {f} Hz is above the input Nyquist rate {probe.input_rate_hz / 2} Hz"
            )
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda f: _sweep_one(factory, f, amplitude, record), freqs))
    return [_sweep_one(factory, f, amplitude, record) for f in freqs]


def fir_response(coeffs, freqs_hz, rate_hz) -> np.ndarray:
    """Linear magnitude of an FIR at arbitrary frequencies (direct evaluation)."""
    c = np.asarray(coeffs, dtype=float)
    f = np.atleast_1d(np.asarray(freqs_hz, dtype=float))
    k = np.arange(len(c))
    out = np.empty(len(f))
    for i in range(0, len(f), 2048):
        ph = np.exp(-2j * np.pi * np.outer(f[i:i + 2048] / rate_hz, k))
        out[i:i + 2048] = np.abs(ph @ c)
    return out


def dense_response(coeffs, rate_hz, n_fft: int = 1 << 16):
    """Magnitude on a dense uniform grid via the radix-2 FFT of zero-padded taps."""
    c = np.zeros(n_fft)
    c[: len(coeffs)] = coeffs
    H = np.abs(fft(c)[: n_fft // 2 + 1])
    return np.arange(n_fft // 2 + 1) * rate_hz / n_fft, H
