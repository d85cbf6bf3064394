import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cicdec import analysis
from cicdec.cic import CicConfig
from cicdec.errors import ConfigurationError, DesignError, InputDomainError
from cicdec.firdesign import (
    FilterSpec,
    FirDecimator,
    FirFilter,
    FirState,
    QFormat,
    coefficient_rows,
    decimate2,
    design_droop_correction,
    design_halfband,
    quantize_coeffs,
)

HB1 = FilterSpec(32_000, 170_000, 384_000)
DROOP = FilterSpec(32_000, 70_000, 192_000)
HB2 = FilterSpec(21_770, 26_530, 96_000)


@pytest.fixture(scope="module")
def hb2():
    return design_halfband(HB2)


@pytest.fixture(scope="module")
def droop():
    return design_droop_correction(CicConfig.paper(), DROOP)


def fft_mag(coeffs, rate, n=1 << 16):
    """Verifier: numpy's FFT of the zero-padded taps, no designer code."""
    h = np.abs(np.fft.rfft(np.asarray(coeffs, dtype=float), n))
    return np.fft.rfftfreq(n, 1 / rate), h


def zero_phase(coeffs, f_norm):
    c = np.asarray(coeffs, dtype=float)
    k = np.arange(len(c)) - (len(c) - 1) / 2
    return np.real(np.exp(-2j * np.pi * np.outer(f_norm, k)) @ c)


def cic_norm(f_hz):
    f = np.asarray(f_hz) / 6.144e6
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(f == 0, 1.0, np.sin(np.pi * f * 16) / (16 * np.sin(np.pi * f)))
    return np.abs(r) ** 5


def stop_atten(coeffs, spec):
    f, h = fft_mag(coeffs, spec.input_rate_hz)
    return -20 * np.log10(h[f >= spec.stop_edge_hz].max())


# specs and formats ----------------------------------------------------------------

@pytest.mark.parametrize("args", [(0, 1, 10), (5, 4, 20), (1, 6, 10), (1, 2, 10, -1)])
def test_filter_spec_invariants(args):
    with pytest.raises(ConfigurationError):
        FilterSpec(*args)


def test_qformat():
    q = QFormat.parse("Q1.15")
    assert (q.int_bits, q.frac_bits, q.total_bits, q.scale) == (1, 15, 17, 32768)
    assert str(q) == "Q1.15"
    with pytest.raises(ConfigurationError):
        QFormat.parse("Q1.31")
    with pytest.raises(ConfigurationError):
        QFormat.parse("1.15")


def test_identity_filter_q115():
    ident = FirFilter((1.0,), "generic", FilterSpec(0.1, 0.2, 1.0))
    q = quantize_coeffs(ident, "Q1.15")
    assert q.quantized == (32768,)
    assert q.effective_coeffs.tolist() == [1.0]


def test_round_half_even():
    spec = FilterSpec(0.1, 0.2, 1.0)
    f = FirFilter((0.5 / 32768, 1.5 / 32768, 2.5 / 32768, 1.5 / 32768, 0.5 / 32768), "generic", spec)
    assert quantize_coeffs(f).quantized == (0, 2, 2, 2, 0)


# half-band ------------------------------------------------------------------------

def check_halfband_shape(h):
    h = np.asarray(h)
    L = len(h)
    c = (L - 1) // 2
    assert L % 2 == 1 and (L - 3) % 4 == 0
    assert np.array_equal(h, h[::-1])
    for k in range(2, c + 1, 2):
        assert h[c + k] == 0 and h[c - k] == 0


def test_hb2_meets_spec(hb2):
    check_halfband_shape(hb2.coeffs)
    assert hb2.coeffs[(hb2.taps - 1) // 2] == 0.5
    assert stop_atten(hb2.coeffs, HB2) >= 90.0
    f, h = fft_mag(hb2.coeffs, 96_000)
    assert np.max(np.abs(20 * np.log10(h[f <= HB2.pass_edge_hz]))) <= 0.05
    assert hb2.taps == 119  # frozen design length


def test_hb1_meets_spec():
    hb1 = design_halfband(HB1)
    check_halfband_shape(hb1.coeffs)
    assert stop_atten(hb1.coeffs, HB1) >= 90.0
    assert hb1.taps == 19


def test_wide_transition_is_short():
    spec = FilterSpec(0.1, 0.4, 1.0, min_stop_atten_db=40.0)
    f = design_halfband(spec)
    assert f.taps <= 11
    assert stop_atten(f.coeffs, spec) >= 40.0


def test_halfband_symmetry_identity(hb2):
    f = np.linspace(0, 0.5, 501)
    s = zero_phase(hb2.coeffs, f) + zero_phase(hb2.coeffs, 0.5 - f)
    assert np.max(np.abs(s - 1.0)) < 1e-12


def test_halfband_infeasible():
    with pytest.raises(DesignError) as e:
        design_halfband(FilterSpec(23_900, 24_100, 96_000))
    assert e.value.achieved["taps"] == 255
    assert e.value.achieved["stop_atten_db"] < 90


def test_halfband_edges_must_straddle_quarter_rate():
    with pytest.raises(ConfigurationError):
        design_halfband(FilterSpec(10_000, 20_000, 96_000))


@given(st.floats(0.05, 0.2), st.floats(0.01, 0.2), st.floats(30, 100))
def test_halfband_designs_meet_their_spec(pass_frac, gap, atten):
    stop = 0.5 - pass_frac + gap * (0.5 - 2 * pass_frac)
    if not pass_frac < 0.25 < stop < 0.5:
        return
    spec = FilterSpec(pass_frac, stop, 1.0, atten, 0.05)
    try:
        f = design_halfband(spec)
    except DesignError:
        return
    check_halfband_shape(f.coeffs)
    assert stop_atten(f.coeffs, spec) >= atten - 0.05


# droop corrector ---------------------------------------------------------------------

def test_droop_cascade_flat(droop):
    f = np.linspace(0, 21_770, 2000)
    a = np.abs(zero_phase(droop.coeffs, f / 192_000))
    casc = 20 * np.log10(a * cic_norm(f))
    assert np.max(np.abs(casc)) <= 0.1
    assert droop.taps == 27  # frozen design length
    assert np.array_equal(np.asarray(droop.coeffs), np.asarray(droop.coeffs)[::-1])


def test_droop_cascade_flat_quantized(droop):
    q = quantize_coeffs(droop)
    f = np.linspace(0, 21_770, 2000)
    a = np.abs(zero_phase(q.effective_coeffs, f / 192_000))
    assert np.max(np.abs(20 * np.log10(a * cic_norm(f)))) <= 0.2


def test_droop_inverts_cic_at_audio_edge(droop):
    x = 20 * math.log10(cic_norm(21_770))
    g = 20 * math.log10(abs(zero_phase(droop.coeffs, [21_770 / 192_000])[0]))
    assert x == pytest.approx(-0.22895447, abs=1e-6)
    assert g == pytest.approx(-x, abs=0.01)


def test_droop_dc_and_stopband(droop):
    assert sum(droop.coeffs) == pytest.approx(1.0, abs=1e-12)
    assert stop_atten(droop.coeffs, DROOP) >= 90.0


def test_droop_pass_edge_beyond_first_null():
    with pytest.raises(ConfigurationError):
        design_droop_correction(CicConfig.paper(), FilterSpec(400_000, 500_000, 1_536_000))


def test_droop_infeasible_fit():
    with pytest.raises(DesignError) as e:
        design_droop_correction(CicConfig.paper(), FilterSpec(90_000, 95_000, 192_000), max_taps=31)
    assert "fit_error_db" in e.value.achieved


# quantization -------------------------------------------------------------------------

def test_quantized_halfband_keeps_pattern(hb2):
    q = quantize_coeffs(hb2)
    check_halfband_shape(q.quantized)
    assert q.quantized[(q.taps - 1) // 2] == 16384
    assert [w.width for w in q.quantized_words] == [17] * q.taps


def test_hb2_q115_attenuation_reported(hb2):
    q = quantize_coeffs(hb2, "Q1.15")
    measured = stop_atten(q.effective_coeffs, HB2)
    assert measured == pytest.approx(q.report.stop_atten_db, abs=0.05)
    # 16-bit coefficients cost about 13 dB on a 119-tap half-band
    assert q.report.stop_atten_db == pytest.approx(77.41, abs=0.01)
    assert not q.report.meets and q.report.stop_margin_db < 0


def test_hb2_wider_coefficients_meet_target(hb2):
    q = quantize_coeffs(hb2, "Q1.23")
    assert q.report.meets and stop_atten(q.effective_coeffs, HB2) >= 90.0


def test_coefficient_rows(hb2):
    q = quantize_coeffs(hb2)
    rows = coefficient_rows(q)
    assert len(rows) == q.taps
    i, fv, qi, fmt = rows[(q.taps - 1) // 2]
    assert (fv, qi, fmt) == (0.5, 16384, "Q1.15")


# fixed-point decimator -----------------------------------------------------------------

def wrap16(v):
    return ((v + 32768) & 0xFFFF) - 32768


def direct(qcoeffs, x):
    full = np.convolve(np.asarray(x, dtype=np.int64), np.asarray(qcoeffs, dtype=np.int64))[: len(x)]
    return np.array([wrap16(int(v) >> 15) for v in full[::2]], dtype=np.int64)


@pytest.fixture(scope="module")
def qhb2(hb2):
    return quantize_coeffs(hb2)


def test_impulse_gives_even_phase(qhb2):
    x = np.zeros(2 * qhb2.taps, dtype=np.int64)
    x[0] = 32767
    y = decimate2(qhb2, FirState.zeros(qhb2), x)
    want = [wrap16((32767 * c) >> 15) for c in qhb2.quantized[::2]]
    assert y[: len(want)].tolist() == want


def test_polyphase_equals_direct(qhb2, rng):
    x = rng.integers(-32768, 32768, 1024)
    assert np.array_equal(decimate2(qhb2, FirState.zeros(qhb2), x), direct(qhb2.quantized, x))


def test_zero_in_zero_out(qhb2):
    assert not decimate2(qhb2, FirState.zeros(qhb2), np.zeros(500, dtype=np.int64)).any()


def test_exhaustive_short_inputs():
    f = quantize_coeffs(design_halfband(FilterSpec(0.1, 0.4, 1.0, 40.0)))
    vals = [-32768, -1, 0, 1, 32767]
    for a in vals:
        for b in vals:
            for c in vals:
                for d in vals:
                    x = [a, b, c, d]
                    assert decimate2(f, FirState.zeros(f), x).tolist() == direct(f.quantized, x).tolist()


@given(st.lists(st.integers(-32768, 32767), max_size=200), st.lists(st.integers(0, 200), max_size=4))
def test_streaming_concatenation(x, cuts):
    f = quantize_coeffs(design_halfband(FilterSpec(0.1, 0.4, 1.0, 60.0)))
    whole = decimate2(f, FirState.zeros(f), x)
    st_ = FirState.zeros(f)
    out, prev = [], 0
    for c in sorted(set(min(c, len(x)) for c in cuts)) + [len(x)]:
        out.extend(decimate2(f, st_, x[prev:c]).tolist())
        prev = c
    assert out == whole.tolist()


def test_decimator_rejects_wide_samples(qhb2):
    with pytest.raises(InputDomainError) as e:
        FirDecimator(qhb2, name="hb2").process([0, 40000])
    assert e.value.stage == "hb2" and e.value.index == 1


def test_decimator_properties(qhb2):
    d = FirDecimator(qhb2)
    assert d.accumulator_width == 17 + 16 + 7
    assert d.output_rate_hz == 48_000 and d.group_delay_in == 59
    assert d.dc_gain == pytest.approx(sum(qhb2.quantized) / 32768)


def test_unquantized_filter_rejected(hb2):
    with pytest.raises(ConfigurationError):
        FirDecimator(hb2)
