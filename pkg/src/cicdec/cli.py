"""Command-line front end.

Exit codes::

    0   success
    1   verification failure
    2   filter design infeasible
    64  usage error (bad flags, frequency above Nyquist, missing input)
    65  malformed input data

Every command writes ``<command>_manifest.json`` next to its outputs.
Randomized suites take their seed from ``CICDEC_SEED``.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, _kernels, adder, analysis, io, verify
from .block import SampleBlock
from .chain import AUDIO_BAND_HZ, STAGES, DecimationChain, build_default_chain, parse_stages
from .cic import CicConfig, CicDecimator, reference_magnitude
from .errors import ConfigurationError, DataFormatError, DesignError, InputDomainError
from .firdesign import (
    FilterSpec,
    QFormat,
    coefficient_rows,
    design_droop_correction,
    design_halfband,
    quantize_coeffs,
)
from .source import SigmaDeltaModulator, ToneSpec, gen_tone, to_cic_input

EXIT_OK, EXIT_VERIFY, EXIT_DESIGN, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 64, 65

EPILOG = """exit codes: 0 success, 1 verification failure, 2 design infeasible,
64 usage error, 65 malformed input data.  CICDEC_SEED fixes random seeds."""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(kind=float):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


class Run:
    """Collects outputs and writes the manifest."""

    def __init__(self, command, args):
        self.command = command
        self.args = args
        self.out_dir = Path(args.out_dir)
        self.outputs = []
        self.inputs = []
        self.extra = {}
        self.t0 = time.perf_counter()

    def path(self, name) -> Path:
        return self.out_dir / name

    def csv(self, name, header, rows):
        p = self.path(name)
        io.write_csv(p, header, rows)
        self.outputs.append(p)
        return p

    def text(self, name, text):
        p = self.path(name)
        io.atomic_write_text(p, text)
        self.outputs.append(p)
        return p

    def manifest(self, status):
        params = {k: v for k, v in vars(self.args).items() if k != "func"}
        doc = {
            "command": self.command,
            "parameters": params,
            "inputs": [_file_entry(p) for p in self.inputs],
            "outputs": [_file_entry(p) for p in self.outputs],
            "version": __version__,
            "kernel_backend": _kernels.BACKEND,
            "seed": verify.default_seed(),
            "exit_code": status,
            "duration_s": round(time.perf_counter() - self.t0, 4),
            "timestamp": datetime.now(timezone.utc).isoformat(),
            **self.extra,
        }
        io.atomic_write_text(self.path(f"{self.command}_manifest.json"),
                             json.dumps(doc, indent=2, default=str) + "\n")


def _file_entry(p):
    p = Path(p)
    return {"path": str(p), "sha256": hashlib.sha256(p.read_bytes()).hexdigest()}


# design ------------------------------------------------------------------

def _filter_spec(args) -> FilterSpec:
    if args.stop_hz <= args.pass_hz:
        raise UsageError(f"--stop-hz ({args.stop_hz}) must exceed --pass-hz ({args.pass_hz})")
    if args.stop_hz >= args.rate_hz / 2:
        raise UsageError(f"--stop-hz must lie below rate/2 = {args.rate_hz / 2}")
    return FilterSpec(args.pass_hz, args.stop_hz, args.rate_hz, args.atten_db, args.ripple_db)


def _cic_from_args(args) -> CicConfig:
    if args.cic_lossless:
        return CicConfig.lossless(args.cic_n, args.cic_r, args.cic_m, args.input_width)
    if (args.cic_n, args.cic_r, args.cic_m) == (5, 16, 1):
        return CicConfig.paper(input_width=args.input_width)
    return CicConfig.lossless(args.cic_n, args.cic_r, args.cic_m, args.input_width)


def cmd_design(args) -> int:
    spec = _filter_spec(args)
    fmt = QFormat.parse(args.qformat)
    cic_cfg = _cic_from_args(args) if args.kind == "droop" else None
    run = Run("design", args)
    if args.dry_run:
        run.manifest(EXIT_OK)
        return EXIT_OK
    try:
        if args.kind == "halfband":
            filt = design_halfband(spec, args.max_taps)
        else:
            filt = design_droop_correction(cic_cfg, spec, args.cic_rate_hz, args.fit_tol_db,
                                           max_taps=args.max_taps)
    except DesignError as e:
        print(f"design infeasible: {e}", file=sys.stderr)
        for k, v in e.achieved.items():
            print(f"  achieved {k} = {v}", file=sys.stderr)
        run.extra["design_error"] = {"message": str(e), "achieved": e.achieved}
        run.manifest(EXIT_DESIGN)
        return EXIT_DESIGN
    q = quantize_coeffs(filt, fmt)
    name = args.name or args.kind
    run.csv(f"{name}_coeffs.csv", ["index", "float_value", "quantized_int", "format"],
            coefficient_rows(q))
    # independent check: FFT of the taps, not the designer's cosine sums
    f, h = analysis.dense_response(filt.coeffs, spec.input_rate_hz, args.fft_points)
    _, hq = analysis.dense_response(q.effective_coeffs, spec.input_rate_hz, args.fft_points)
    run.csv(f"{name}_response.csv", ["f_hz", "magnitude_db", "quantized_db"],
            zip(f.tolist(), analysis.to_db(h).tolist(), analysis.to_db(hq).tolist()))
    stop = f >= spec.stop_edge_hz
    measured = float(-np.max(analysis.to_db(h[stop])))
    measured_q = float(-np.max(analysis.to_db(hq[stop])))
    print(f"{name}: {filt.taps} taps, stopband {measured:.2f} dB "
          f"(target {spec.min_stop_atten_db}), {fmt} stopband {measured_q:.2f} dB")
    summary = {"taps": filt.taps, "designed": filt.report.as_dict(),
               "quantized": q.report.as_dict(), "measured_stop_atten_db": measured,
               "measured_quantized_stop_atten_db": measured_q}
    if args.kind == "droop":
        band = f <= args.flat_hz
        hc = reference_magnitude(cic_cfg, f[band] / args.cic_rate_hz) / float(
            (cic_cfg.decimation * cic_cfg.diff_delay) ** cic_cfg.n_stages)
        casc = analysis.to_db(h[band] * hc)
        casc_q = analysis.to_db(hq[band] * hc)
        run.csv(f"{name}_cascade.csv", ["f_hz", "cascade_db", "quantized_cascade_db"],
                zip(f[band].tolist(), casc.tolist(), casc_q.tolist()))
        flat, flat_q = float(np.max(np.abs(casc))), float(np.max(np.abs(casc_q)))
        print(f"cascade |H_cic*H_droop| over 0-{args.flat_hz:g} Hz: max deviation "
              f"{flat:.4f} dB, {fmt}: {flat_q:.4f} dB")
        summary.update(cascade_flatness_db=flat, quantized_cascade_flatness_db=flat_q)
    if not q.report.meets:
        print(f"warning: {fmt} coefficients miss the spec: stopband "
              f"{q.report.stop_atten_db:.2f} dB, margin {q.report.stop_margin_db:+.2f} dB",
              file=sys.stderr)
    run.extra["design"] = summary
    run.manifest(EXIT_OK)
    return EXIT_OK


# simulate ------------------------------------------------------------------

def _load_input(args, chain, run):
    p = Path(args.input)
    if not p.exists():
        raise UsageError(f"input file {p} does not exist")
    run.inputs.append(p)
    if args.binary:
        x, rate = io.read_binary_samples(p)
        if rate != round(chain.input_rate_hz):
            raise DataFormatError(f"file rate {rate} Hz does not match stage input "
                                  f"{chain.input_rate_hz:g} Hz", 8)
        return x
    return io.read_text_samples(p)


def _generate(args, chain):
    n = round(args.seconds * chain.input_rate_hz)
    n -= n % chain.decimation
    f = args.tone
    if not args.no_snap:
        # whole cycles in the analysed output record
        f = analysis.coherent_frequency(f, chain.output_rate_hz, args.fft_size)
    if not 0 < f < chain.input_rate_hz / 2:
        raise UsageError(f"--tone must lie in (0, {chain.input_rate_hz / 2}) Hz")
    tone = gen_tone(ToneSpec(f, args.amplitude, chain.input_rate_hz, n))
    if args.sigma_delta:
        if chain.stage_names[0] != "cic":
            raise UsageError("--sigma-delta drives the CIC; include the cic stage")
        bits = SigmaDeltaModulator().modulate(tone.samples)
        return to_cic_input(bits, chain.input_width), f, bits
    x = np.round(tone.samples * chain.unit_amplitude).astype(np.int64)
    return x, f, None


def cmd_simulate(args) -> int:
    if args.input is None and args.tone is None:
        raise UsageError("give --input FILE or --tone HZ")
    if args.input is not None and args.tone is not None:
        raise UsageError("--input and --tone are exclusive")
    if args.sigma_delta and args.tone is None:
        raise UsageError("--sigma-delta needs --tone")
    if args.fft_size & (args.fft_size - 1):
        raise UsageError(f"--fft-size must be a power of two, got {args.fft_size}")
    cfg = build_default_chain(args.input_width)
    chain = DecimationChain(cfg, parse_stages(args.stage))
    run = Run("simulate", args)
    if args.dry_run:
        run.manifest(EXIT_OK)
        return EXIT_OK
    bits = None
    if args.input is not None:
        x, f_tone = _load_input(args, chain, run), None
    else:
        x, f_tone, bits = _generate(args, chain)
    y = chain.run(SampleBlock(x, chain.input_rate_hz)).samples
    out_name = "output.txt"
    io.write_text_samples(run.path(out_name), y)
    run.outputs.append(run.path(out_name))
    if bits is not None and args.save_bits:
        io.atomic_write_bytes(run.path("bits.bin"), io.pack_bits(bits, round(chain.input_rate_hz)))
        run.outputs.append(run.path("bits.bin"))
    print(f"{len(x)} samples at {chain.input_rate_hz:g} Hz -> {len(y)} samples at "
          f"{chain.output_rate_hz:g} Hz ({'+'.join(chain.stage_names)})")
    settle = math.ceil(2 * chain.group_delay)
    avail = len(y) - settle
    if avail >= 16:
        n_fft = min(args.fft_size, 1 << int(math.log2(avail)))
        seg = y[len(y) - n_fft:].astype(float)
        full = 2.0 ** (chain.output_width - 1)
        rep = analysis.spectrum(seg, n_fft, args.window, rate_hz=chain.output_rate_hz,
                                full_scale=full)
        run.csv("spectrum.csv", ["f_hz", "mag_db"], rep.rows())
        hi = min(args.band_hz, chain.output_rate_hz / 2)
        if rep.signal_bin is not None and rep.signal_bin * rep.bin_hz <= hi:
            value = analysis.snr(rep, (0.0, hi))
            run.csv("snr.csv", ["band_lo", "band_hi", "snr_db"], [(0.0, hi, value)])
            print(f"SNR 0-{hi:g} Hz: {value:.2f} dB (signal bin {rep.signal_bin}, "
                  f"{rep.signal_bin * rep.bin_hz:g} Hz, {n_fft}-point {rep.window})")
            run.extra["snr_db"] = value
    else:
        print("output too short for a spectrum", file=sys.stderr)
    run.extra.update(tone_hz=f_tone, output_rate_hz=chain.output_rate_hz,
                     output_samples=len(y), dc_gain=chain.dc_gain,
                     group_delay_out_samples=chain.group_delay)
    run.manifest(EXIT_OK)
    return EXIT_OK


# verify -------------------------------------------------------------------

def cmd_verify(args) -> int:
    suites = []
    for s in args.suite or ["all"]:
        suites.extend(verify.SUITES if s == "all" else s.split(","))
    for s in suites:
        if s not in verify.SUITES:
            raise UsageError(f"unknown suite {s!r}; choose from {', '.join(verify.SUITES)}")
    run = Run("verify", args)
    if args.dry_run:
        run.manifest(EXIT_OK)
        return EXIT_OK
    results = verify.run_suites(suites, args.width, True if args.exhaustive else None)
    report = [r.as_dict() for r in results]
    for r in results:
        print(json.dumps({"suite": r.name, "passed": r.passed, "cases": r.cases,
                          "failed": r.n_failed}))
    run.text("verify_report.json", json.dumps(report, indent=2) + "\n")
    status = EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY
    if status:
        for r in results:
            for case in r.failures:
                print(f"FAIL {r.name}: {json.dumps(case)}", file=sys.stderr)
    run.manifest(status)
    return status


# response -------------------------------------------------------------------

def _sweep_factory(args):
    names = parse_stages(args.stage)
    if names == ("cic",) and args.lossless:
        cfg = CicConfig.lossless(input_width=args.input_width)
        return lambda: CicDecimator(cfg)
    chain_cfg = build_default_chain(args.input_width)
    return lambda: DecimationChain(chain_cfg, names)


def cmd_response(args) -> int:
    factory = _sweep_factory(args)
    probe = factory()
    if args.freqs:
        freqs = [float(v) for v in args.freqs.split(",")]
    else:
        hi = args.max_hz if args.max_hz is not None else probe.output_rate_hz / 2
        freqs = np.linspace(args.min_hz, hi, args.points).tolist()
    nyq = probe.input_rate_hz / 2
    bad = [f for f in freqs if f < 0 or f > nyq]
    if bad:
        raise UsageError(f"frequency {bad[0]} Hz is outside [0, {nyq:g}] Hz (stage input Nyquist)")
    run = Run("response", args)
    if args.dry_run:
        run.manifest(EXIT_OK)
        return EXIT_OK
    res = analysis.response_sweep(factory, freqs, args.amplitude, args.record, args.workers)
    f_used = [r[0] for r in res]
    gains = [r[1] for r in res]
    if args.reference:
        ref = analysis.to_db(probe.gain_at(np.asarray(f_used))).tolist()
        run.csv("response.csv", ["f_hz", "gain_db", "reference_db"], zip(f_used, gains, ref))
        live = [abs(g - r) for g, r in zip(gains, ref) if r > analysis.DB_FLOOR / 2]
        delta = max(live) if live else 0.0
        print(f"max |measured - reference| = {delta:.5f} dB over {len(live)} probes")
        run.extra["max_abs_delta_db"] = delta
    else:
        run.csv("response.csv", ["f_hz", "gain_db"], zip(f_used, gains))
    print(f"{len(res)} probes, {'+'.join(parse_stages(args.stage))}")
    run.manifest(EXIT_OK)
    return EXIT_OK


# adder-verify ----------------------------------------------------------------

def cmd_adder_verify(args) -> int:
    widths = [int(w) for w in args.widths.split(",")]
    run = Run("adder-verify", args)
    if args.dry_run:
        run.manifest(EXIT_OK)
        return EXIT_OK
    results = []
    for w in widths:
        results.append(verify.adder_exhaustive(w) if w <= args.exhaustive_max
                       else verify.adder_random(w, args.cases))
    rows = [(k, w, adder.critical_path_depth(k, w)) for w in widths for k in adder.ADDER_KINDS]
    run.csv("adder_depth.csv", ["kind", "width", "gate_depth"], rows)
    print("kind,width,gate_depth")
    for row in rows:
        print(",".join(str(v) for v in row))
    ok = True
    for r in results:
        print(f"# {r.name}: {r.cases} cases, {r.n_failed} mismatches")
        ok = ok and r.passed
    run.text("adder_equivalence.json", json.dumps([r.as_dict() for r in results], indent=2) + "\n")
    status = EXIT_OK if ok else EXIT_VERIFY
    run.manifest(status)
    return status


# parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cicdec", description=__doc__.splitlines()[0], epilog=EPILOG,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out-dir", default=".", help="directory for outputs (default .)")
        sp.add_argument("--dry-run", action="store_true", help="validate flags, compute nothing")

    d = sub.add_parser("design", help="design a half-band or droop-correction FIR", epilog=EPILOG)
    common(d)
    d.add_argument("--kind", choices=["halfband", "droop"], required=True)
    d.add_argument("--pass-hz", type=_positive(), required=True)
    d.add_argument("--stop-hz", type=_positive(), required=True)
    d.add_argument("--rate-hz", type=_positive(), required=True)
    d.add_argument("--atten-db", type=_positive(), default=90.0)
    d.add_argument("--ripple-db", type=_positive(), default=0.05)
    d.add_argument("--qformat", default="Q1.15")
    d.add_argument("--max-taps", type=_positive(int), default=255)
    d.add_argument("--fit-tol-db", type=_positive(), default=0.01)
    d.add_argument("--cic-n", type=_positive(int), default=5)
    d.add_argument("--cic-r", type=_positive(int), default=16)
    d.add_argument("--cic-m", type=_positive(int), default=1)
    d.add_argument("--cic-rate-hz", type=_positive(), default=6_144_000.0)
    d.add_argument("--cic-lossless", action="store_true")
    d.add_argument("--input-width", type=_positive(int), default=6)
    d.add_argument("--flat-hz", type=_positive(), default=AUDIO_BAND_HZ,
                   help="band edge for the cascade flatness report")
    d.add_argument("--fft-points", type=_positive(int), default=1 << 14)
    d.add_argument("--name", help="output file prefix (default: the kind)")
    d.set_defaults(func=cmd_design)

    s = sub.add_parser("simulate", help="run the chain on a file or a generated tone", epilog=EPILOG)
    common(s)
    s.add_argument("--input", help="integer samples, one per line (or binary with --binary)")
    s.add_argument("--binary", action="store_true", help="read the 16-byte-header 8-bit format")
    s.add_argument("--tone", type=_positive(), help="generate a sine at this frequency")
    s.add_argument("--amplitude", type=float, default=0.5, help="fraction of full scale")
    s.add_argument("--sigma-delta", action="store_true", help="pass the tone through the modulator")
    s.add_argument("--seconds", type=_positive(), default=0.25)
    s.add_argument("--no-snap", action="store_true", help="keep the tone off FFT bin centres")
    s.add_argument("--save-bits", action="store_true", help="also write the packed bit stream")
    s.add_argument("--stage", default="chain", help=f"chain or a '+' list of {', '.join(STAGES)}")
    s.add_argument("--fft-size", type=_positive(int), default=8192)
    s.add_argument("--window", default="blackman-harris", choices=sorted(analysis.GUARDS))
    s.add_argument("--band-hz", type=_positive(), default=24_000.0)
    s.add_argument("--input-width", type=_positive(int), default=6)
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run the oracle suites", epilog=EPILOG)
    common(v)
    v.add_argument("--suite", action="append", help="adder, cic, pipeline or all (repeatable)")
    v.add_argument("--width", type=_positive(int))
    v.add_argument("--exhaustive", action="store_true")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("response", help="sine-sweep a stage or the chain", epilog=EPILOG)
    common(r)
    r.add_argument("--stage", default="chain")
    r.add_argument("--points", type=_positive(int), default=50)
    r.add_argument("--min-hz", type=float, default=0.0)
    r.add_argument("--max-hz", type=float)
    r.add_argument("--freqs", help="comma-separated probe list (overrides the grid)")
    r.add_argument("--reference", action="store_true", help="add the closed-form column")
    r.add_argument("--lossless", action="store_true", help="cic stage with lossless widths")
    r.add_argument("--amplitude", type=_positive(), default=0.5)
    r.add_argument("--record", type=_positive(int), default=1024)
    r.add_argument("--workers", type=_positive(int), default=1)
    r.add_argument("--input-width", type=_positive(int), default=6)
    r.set_defaults(func=cmd_response)

    a = sub.add_parser("adder-verify", help="adder equivalence and gate-depth table", epilog=EPILOG)
    common(a)
    a.add_argument("--widths", default="8,16,18,20,22,25")
    a.add_argument("--exhaustive-max", type=int, default=8)
    a.add_argument("--cases", type=_positive(int), default=100_000)
    a.set_defaults(func=cmd_adder_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as e:
        print(f"cicdec {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataFormatError as e:
        print(f"cicdec {args.command}: malformed input: {e}", file=sys.stderr)
        return EXIT_DATA
    except InputDomainError as e:
        print(f"cicdec {args.command}: input out of range: {e}", file=sys.stderr)
        return EXIT_DATA
    except DesignError as e:
        print(f"cicdec {args.command}: {e}", file=sys.stderr)
        return EXIT_DESIGN


if __name__ == "__main__":
    sys.exit(main())
