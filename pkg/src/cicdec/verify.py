"""Oracle suites run by ``cicdec verify``.

Each suite returns a :class:`SuiteResult` with the number of cases checked
and up to ``MAX_DUMP`` failing cases.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, adder, cic
from .errors import ConfigurationError

MAX_DUMP = 20
SUITES = ("adder", "cic", "pipeline")
RANDOM_WIDTHS = (16, 18, 20, 22, 25)


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: list = field(default_factory=list)
    n_failed: int = 0
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.n_failed == 0 and self.cases > 0

    def fail(self, case) -> None:
        self.n_failed += 1
        if len(self.failures) < MAX_DUMP:
            self.failures.append(case)

    def as_dict(self) -> dict:
        return {
            "suite": self.name,
            "passed": self.passed,
            "cases": self.cases,
            "failed": self.n_failed,
            "seconds": round(self.seconds, 3),
            "failures": self.failures,
            **self.detail,
        }


def default_seed() -> int:
    return int(os.environ.get("CICDEC_SEED", "12345"))


def _rng(seed):
    return np.random.default_rng(default_seed() if seed is None else seed)


def adder_exhaustive(width: int = 8) -> SuiteResult:
    """All ``(a, b, c0)`` through both gate models against Python integers."""
    res = SuiteResult(f"adder-exhaustive-{width}")
    t0 = time.perf_counter()
    mask = (1 << width) - 1
    for a in range(1 << width):
        for b in range(1 << width):
            for c0 in (0, 1):
                ref = a + b + c0
                want = (ref & mask, ref >> width)
                for name in ("mcla", "ripple"):
                    r = adder.ADDERS[name](a, b, c0, width=width)
                    if (r.value, r.carry_out) != want:
                        res.fail({"kind": name, "a": a, "b": b, "c0": c0,
                                  "got": [r.value, r.carry_out], "want": list(want)})
                res.cases += 1
    res.seconds = time.perf_counter() - t0
    return res


def adder_random(width: int, n: int = 100_000, seed=None, model_checks: int = 2000) -> SuiteResult:
    """Random triples through the vectorized gate kernels.

    The first ``model_checks`` triples also run through the pure-Python gate
    models, tying the kernels to them.
    """
    res = SuiteResult(f"adder-random-{width}")
    t0 = time.perf_counter()
    rng = _rng(seed)
    hi = 1 << width
    a = rng.integers(0, hi, n, dtype=np.uint64)
    b = rng.integers(0, hi, n, dtype=np.uint64)
    c0 = rng.integers(0, 2, n, dtype=np.int8)
    ref = [int(x) + int(y) + int(c) for x, y, c in zip(a.tolist(), b.tolist(), c0.tolist())]
    ref_sum = np.array([r & (hi - 1) for r in ref], dtype=np.uint64)
    ref_c = np.array([r >> width for r in ref], dtype=np.int8)
    for name in ("mcla", "ripple"):
        s, c = _kernels.add_unsigned(_kernels.ADDER_CODES[name], a, b, c0, width)
        bad = np.nonzero((np.asarray(s) != ref_sum) | (np.asarray(c) != ref_c))[0]
        for i in bad.tolist():
            res.fail({"kind": name, "a": int(a[i]), "b": int(b[i]), "c0": int(c0[i]),
                      "got": [int(s[i]), int(c[i])], "want": [int(ref_sum[i]), int(ref_c[i])]})
        for i in range(min(model_checks, n)):
            r = adder.ADDERS[name](int(a[i]), int(b[i]), int(c0[i]), width=width)
            if (r.value, r.carry_out) != (int(ref_sum[i]), int(ref_c[i])):
                res.fail({"kind": name + "-model", "a": int(a[i]), "b": int(b[i]),
                          "c0": int(c0[i]), "got": [r.value, r.carry_out]})
    res.cases = n
    res.seconds = time.perf_counter() - t0
    return res


def cic_oracle(n_random: int = 10_000, seed=None, exhaustive_len: int = 6) -> SuiteResult:
    """Structural CIC (lossless widths) against the arbitrary-precision FIR.

    Covers a long random 6-bit stream for N=5, M=1, R=16, every
    2-bit input sequence of ``exhaustive_len`` samples on a small CIC, and
    an adversarial full-scale stream that forces integrator wraparound.
    """
    res = SuiteResult("cic")
    t0 = time.perf_counter()
    rng = _rng(seed)
    cfg = cic.CicConfig.lossless()
    lo, hi = -(1 << (cfg.input_width - 1)), (1 << (cfg.input_width - 1)) - 1
    runs = [("random", cfg, rng.integers(lo, hi + 1, n_random)),
            ("full-scale", cfg, np.array([lo] * 4000 + [hi] * 4000 + [lo] * 2000))]
    small = cic.CicConfig.lossless(n=3, r=2, m=2, input_width=2)
    vals = np.array([-2, -1, 0, 1])
    grid = np.stack(np.meshgrid(*[vals] * exhaustive_len, indexing="ij"), -1).reshape(-1, exhaustive_len)
    for seq in grid:
        runs.append(("exhaustive", small, seq))
    for label, c, x in runs:
        got = cic.process(cic.CicState.zeros(c), c, x).tolist()
        want = cic.fir_oracle(c, x)
        res.cases += 1
        if got != want:
            k = next(i for i, (g, w) in enumerate(zip(got, want)) if g != w) if len(got) == len(want) else -1
            res.fail({"run": label, "input": x[:64].tolist(), "first_mismatch": k})
    res.detail["runs"] = {"random_samples": n_random, "exhaustive_sequences": len(grid)}
    res.seconds = time.perf_counter() - t0
    return res


def pipeline_equivalence(n: int = 100_000, seed=None, adder_kinds=("native",)) -> SuiteResult:
    """Pipelined output equals the flat output delayed by ``pipeline_latency``."""
    res = SuiteResult("pipeline")
    t0 = time.perf_counter()
    rng = _rng(seed)
    for kind in adder_kinds:
        for base in (cic.CicConfig.paper(), cic.CicConfig.lossless()):
            flat = base.with_(adder_kind=kind)
            pipe = flat.with_(pipelined=True)
            x = rng.integers(-(1 << (flat.input_width - 1)), 1 << (flat.input_width - 1), n)
            y0 = cic.process(cic.CicState.zeros(flat), flat, x)
            y1 = cic.process(cic.CicState.zeros(pipe), pipe, x)
            L = cic.pipeline_latency(pipe)
            want = np.concatenate([np.zeros(L, dtype=np.int64), y0[:len(y0) - L]])
            bad = np.nonzero(y1 != want)[0]
            res.cases += len(y1)
            for i in bad.tolist():
                res.fail({"adder": kind, "widths": list(flat.stage_widths), "index": i,
                          "got": int(y1[i]), "want": int(want[i])})
            res.detail.setdefault("latency", L)
    res.seconds = time.perf_counter() - t0
    return res


def run_suites(suites=SUITES, width: int | None = None, exhaustive: bool | None = None,
               seed=None) -> list[SuiteResult]:
    """Run the named suites.

    With neither ``width`` nor ``exhaustive`` given, the adder suite runs the
    exhaustive 8-bit sweep plus random sweeps at 16, 18, 20, 22 and 25 bits.
    Otherwise it runs exactly the requested sweep.
    """
    out = []
    for s in suites:
        if s == "adder":
            if width is None and exhaustive is None:
                out.append(adder_exhaustive(8))
                out.extend(adder_random(w, seed=seed) for w in RANDOM_WIDTHS)
            elif exhaustive:
                w = 8 if width is None else width
                if w > 12:
                    raise ConfigurationError(f"exhaustive sweep limited to 12 bits, got {w}")
                out.append(adder_exhaustive(w))
            elif width is None:
                out.extend(adder_random(w, seed=seed) for w in RANDOM_WIDTHS)
            else:
                out.append(adder_random(width, seed=seed))
        elif s == "cic":
            out.append(cic_oracle(seed=seed))
        elif s == "pipeline":
            out.append(pipeline_equivalence(seed=seed))
        else:
            raise ConfigurationError(f"unknown suite {s!r}; choose from {', '.join(SUITES)}")
    return out
