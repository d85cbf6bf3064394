"""Pure-Python inner loops.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature and bit-identical results.  State arrays are mutated in place;
scalar state (counters, pointers) is returned.

Adder kinds: 0 native modular add, 1 gate-level ripple, 2 gate-level MCLA.
"""
import numpy as np

NATIVE, RIPPLE, MCLA = 0, 1, 2


def _wrap(u, w):
    m = (1 << w) - 1
    u &= m
    return u - (1 << w) if u >> (w - 1) else u


def _ripple(a, b, c, w):
    s = 0
    for i in range(w):
        p = ((a ^ b) >> i) & 1
        g = ((a & b) >> i) & 1
        s |= (p ^ c) << i
        c = g | (p & c)
    return s, c


def _mcla(a, b, c, w):
    pw = a ^ b
    gw = a & b
    s = 0
    for base in range(0, w, 4):
        r = min(4, w - base)
        p = [((pw >> (base + i)) & 1) if i < r else 0 for i in range(4)]
        g = [((gw >> (base + i)) & 1) if i < r else 0 for i in range(4)]
        p0, p1, p2, p3 = p
        g0, g1, g2, g3 = g
        c1 = g0 | (p0 & c)
        c2 = g1 | (p1 & g0) | (p1 & p0 & c)
        c3 = g2 | (p2 & g1) | (p2 & p1 & g0) | (p2 & p1 & p0 & c)
        c4 = g3 | (p3 & g2) | (p3 & p2 & g1) | (p3 & p2 & p1 & g0) | (p3 & p2 & p1 & p0 & c)
        cs = (c, c1, c2, c3, c4)
        for i in range(r):
            s |= (p[i] ^ cs[i]) << (base + i)
        if r == 4:
            pg = p3 & p2 & p1 & p0
            gg = g3 | (p3 & g2) | (p3 & p2 & g1) | (p3 & p2 & p1 & g0)
            c = gg | (pg & c)
        else:
            c = cs[r]
    return s, c


def _uadd(kind, a, b, c, w):
    m = (1 << w) - 1
    a &= m
    b &= m
    if kind == RIPPLE:
        return _ripple(a, b, c, w)
    if kind == MCLA:
        return _mcla(a, b, c, w)
    s = a + b + c
    return s & m, (s >> w) & 1


def _sadd(kind, a, b, w):
    if kind == NATIVE:
        return _wrap(a + b, w)
    return _wrap(_uadd(kind, a, b, 0, w)[0], w)


def _ssub(kind, a, b, w):
    if kind == NATIVE:
        return _wrap(a - b, w)
    return _wrap(_uadd(kind, a, ~b, 1, w)[0], w)


def add_unsigned(kind, a, b, c0, width):
    """Vectorised unsigned add through the selected adder; (sum, carry) arrays."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    c0 = np.asarray(c0, dtype=np.int8)
    out = np.empty(len(a), dtype=np.uint64)
    cout = np.empty(len(a), dtype=np.int8)
    for i in range(len(a)):
        s, c = _uadd(kind, int(a[i]), int(b[i]), int(c0[i]), width)
        out[i] = s
        cout[i] = c
    return out, cout


def _wrap_array(v, w):
    if w >= 64:
        return v
    half = np.int64(1 << (w - 1))
    mask = np.int64((1 << w) - 1)
    return ((v + half) & mask) - half


def _integrate_native(x, acc, widths, pipelined, dreg):
    """Integrator cascade for the native adder, vectorised with cumsum.

    int64 overflow in cumsum is reduction mod 2**64, which is compatible
    with any narrower modular width.
    """
    nst = len(acc)
    s = np.asarray(x, dtype=np.int64)
    with np.errstate(over="ignore"):
        if not pipelined:
            for k in range(nst):
                v = _wrap_array(np.cumsum(s) + acc[k], int(widths[k]))
                acc[k] = v[-1]
                s = v >> int(widths[k] - widths[k + 1])
            return s
        # each stage sees the previous stage's registered output
        old = acc.copy()
        for k in range(nst):
            v = _wrap_array(np.cumsum(s) + old[k], int(widths[k]))
            acc[k] = v[-1]
            prev = np.concatenate([[old[k]], v[:-1]])
            s = prev >> int(widths[k] - widths[k + 1])
        dreg[0] = s[-1]
        return s


def cic_integrate(x, acc, widths, counter, emit_phase, decimation, kind, pipelined, dreg):
    x = np.asarray(x, dtype=np.int64)
    n = len(x)
    idx = (counter + np.arange(n)) % decimation
    if n == 0:
        return np.empty(0, dtype=np.int64), counter
    if kind == NATIVE:
        s = _integrate_native(x, acc, widths, pipelined, dreg)
        out = s[idx == emit_phase]
    else:
        widths = [int(w) for w in widths]
        nst = len(acc)
        a = [int(v) for v in acc]
        out = []
        c = counter
        for xi in x.tolist():
            if not pipelined:
                s = xi
                for k in range(nst):
                    a[k] = _sadd(kind, a[k], s, widths[k])
                    s = a[k] >> (widths[k] - widths[k + 1])
            else:
                s = a[nst - 1] >> (widths[nst - 1] - widths[nst])
                for k in range(nst - 1, -1, -1):
                    inp = xi if k == 0 else a[k - 1] >> (widths[k - 1] - widths[k])
                    a[k] = _sadd(kind, a[k], inp, widths[k])
                dreg[0] = s
            if c == emit_phase:
                out.append(s)
            c = (c + 1) % decimation
        acc[:] = a
        out = np.array(out, dtype=np.int64)
    return out, int((counter + n) % decimation)


def cic_comb(v, delay, ptr, width, kind, pipelined, creg):
    nst, m = delay.shape
    out = np.empty(len(v), dtype=np.int64)
    for i, s in enumerate(np.asarray(v, dtype=np.int64).tolist()):
        if not pipelined:
            for k in range(nst):
                old = int(delay[k, ptr])
                delay[k, ptr] = s
                s = _ssub(kind, s, old, width)
            out[i] = s
        else:
            for k in range(nst - 1, -1, -1):
                inp = s if k == 0 else int(creg[k - 1])
                old = int(delay[k, ptr])
                delay[k, ptr] = inp
                creg[k] = _ssub(kind, inp, old, width)
            out[i] = creg[nst - 1]
        ptr = (ptr + 1) % m
    return out, ptr


def sd2_modulate(u, state):
    v1, v2, y, m1, m2 = (float(s) for s in state[:5])
    u = np.asarray(u, dtype=np.float64).tolist()
    out = np.empty(len(u), dtype=np.int8)
    for i, x in enumerate(u):
        v1 = v1 + x - y
        v2 = v2 + v1 - y
        m1 = max(m1, abs(v1))
        m2 = max(m2, abs(v2))
        y = 1.0 if v2 >= 0.0 else -1.0
        out[i] = 1 if y > 0 else -1
    state[0], state[1], state[2], state[3], state[4] = v1, v2, y, m1, m2
    return out


def fir_decimate2(x, coeffs, hist, phase, frac_bits, out_width):
    x = np.asarray(x, dtype=np.int64)
    h = len(hist)
    buf = np.concatenate([hist, x]).astype(np.int64)
    n = len(x)
    keep = np.nonzero(((phase + np.arange(n)) % 2) == 0)[0]
    pos = h + keep
    acc = np.zeros(len(keep), dtype=np.int64)
    # two polyphase branches: even taps, odd taps
    for start in (0, 1):
        for t in range(start, len(coeffs), 2):
            if coeffs[t]:
                acc += coeffs[t] * buf[pos - t]
    out = _wrap_array(acc >> frac_bits, out_width)
    if h:
        hist[:] = buf[len(buf) - h:]
    return out.astype(np.int64), int((phase + n) % 2)
