"""Time each hot kernel on the compiled and pure-Python backends.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Prints one CSV row per kernel: ``kernel,backend,samples,seconds,msamples_per_s``
followed by the speedup of the compiled backend.  Both backends are fed the
same inputs and their outputs are compared before timing is reported.
"""
import argparse
import time

import numpy as np

from cicdec import _kernels
from cicdec.cic import CicConfig, CicState, _emit_phase
from cicdec.firdesign import FilterSpec, design_halfband, quantize_coeffs


def _cic_case(cfg, n):
    rng = np.random.default_rng(1)
    x = rng.integers(-32, 32, n)
    widths = np.asarray(cfg.stage_widths, dtype=np.int64)
    code = _kernels.ADDER_CODES[cfg.adder_kind]

    def run(k):
        st = CicState.zeros(cfg)
        v, _ = k.cic_integrate(x, st.integrators, widths, 0, _emit_phase(cfg), cfg.decimation,
                               code, cfg.pipelined, st.decim_reg)
        out, _ = k.cic_comb(v, st.comb_delay, 0, cfg.output_width, code, cfg.pipelined,
                            st.pipeline_regs)
        return out
    return run


def cases(scale):
    n_big = int(2_000_000 * scale)
    n_gate = int(20_000 * scale)
    rng = np.random.default_rng(0)
    u = 0.5 * np.sin(2 * np.pi * 1000 * np.arange(n_big) / 6.144e6)
    hb = quantize_coeffs(design_halfband(FilterSpec(21770, 26530, 96000)))
    coeffs = np.asarray(hb.quantized, dtype=np.int64)
    xf = rng.integers(-20000, 20000, n_big // 16)
    a = rng.integers(0, 1 << 25, n_gate, dtype=np.uint64)
    b = rng.integers(0, 1 << 25, n_gate, dtype=np.uint64)
    c = rng.integers(0, 2, n_gate, dtype=np.int8)
    return [
        ("sigma_delta", n_big, lambda k: k.sd2_modulate(u, np.zeros(5))),
        ("cic_native", n_big, _cic_case(CicConfig.paper(), n_big)),
        ("cic_pipelined", n_big, _cic_case(CicConfig.paper(pipelined=True), n_big)),
        ("cic_mcla", n_gate, _cic_case(CicConfig.paper(adder_kind="mcla"), n_gate)),
        ("fir_halfband", len(xf), lambda k: k.fir_decimate2(
            xf, coeffs, np.zeros(len(coeffs) - 1, dtype=np.int64), 0, 15, 16)[0]),
        ("mcla_add_25", n_gate, lambda k: k.add_unsigned(2, a, b, c, 25)[0]),
        ("ripple_add_25", n_gate, lambda k: k.add_unsigned(1, a, b, c, 25)[0]),
    ]


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply all input sizes")
    args = ap.parse_args(argv)
    backends = _kernels.available_backends()
    if "cython" not in backends:
        print("# compiled backend not built; only timing the Python fallback")
    print("kernel,backend,samples,seconds,msamples_per_s")
    for name, n, fn in cases(args.scale):
        times, outs = {}, {}
        for be in backends:
            k = _kernels.get_backend(be)
            # the pure-Python gate models are slow; one pass is enough
            rep = 1 if be == "python" and name in ("cic_mcla", "sigma_delta") else args.repeat
            times[be], outs[be] = best_time(lambda: fn(k), rep)
            print(f"{name},{be},{n},{times[be]:.5f},{n / times[be] / 1e6:.3f}")
        if len(outs) == 2:
            same = np.array_equal(np.asarray(outs["cython"]), np.asarray(outs["python"]))
            print(f"# {name}: speedup {times['python'] / times['cython']:.1f}x, "
                  f"outputs {'identical' if same else 'DIFFER'}")


if __name__ == "__main__":
    main()
