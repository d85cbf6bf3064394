# cython: language_level=3
"""Compiled inner loops.  Mirrors ``_pykernels`` exactly; see there for docs."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t, int8_t
from libc.math cimport fabs

cnp.import_array()

DEF NATIVE = 0
DEF RIPPLE = 1
DEF MCLA = 2


cdef inline uint64_t _mask(int w) noexcept nogil:
    if w >= 64:
        return <uint64_t>0xFFFFFFFFFFFFFFFF
    return (<uint64_t>1 << w) - 1


cdef inline int64_t _wrap(uint64_t u, int w) noexcept nogil:
    cdef uint64_t m
    if w >= 64:
        return <int64_t>u
    m = (<uint64_t>1 << w) - 1
    u &= m
    if (u >> (w - 1)) & 1:
        return <int64_t>(u | ~m)
    return <int64_t>u


cdef inline uint64_t _ripple(uint64_t a, uint64_t b, int c, int w, int* cout) noexcept nogil:
    cdef uint64_t s = 0
    cdef int i, p, g
    for i in range(w):
        p = <int>(((a ^ b) >> i) & 1)
        g = <int>(((a & b) >> i) & 1)
        s |= <uint64_t>(p ^ c) << i
        c = g | (p & c)
    cout[0] = c
    return s


cdef inline uint64_t _mcla(uint64_t a, uint64_t b, int c, int w, int* cout) noexcept nogil:
    cdef uint64_t s = 0
    cdef uint64_t pw = a ^ b
    cdef uint64_t gw = a & b
    cdef int base = 0, r, i
    cdef int p0, p1, p2, p3, g0, g1, g2, g3, c1, c2, c3, c4, pg, gg
    cdef int cs[5]
    while base < w:
        r = w - base
        if r > 4:
            r = 4
        p0 = <int>((pw >> base) & 1)
        g0 = <int>((gw >> base) & 1)
        p1 = <int>((pw >> (base + 1)) & 1) if r > 1 else 0
        g1 = <int>((gw >> (base + 1)) & 1) if r > 1 else 0
        p2 = <int>((pw >> (base + 2)) & 1) if r > 2 else 0
        g2 = <int>((gw >> (base + 2)) & 1) if r > 2 else 0
        p3 = <int>((pw >> (base + 3)) & 1) if r > 3 else 0
        g3 = <int>((gw >> (base + 3)) & 1) if r > 3 else 0
        c1 = g0 | (p0 & c)
        c2 = g1 | (p1 & g0) | (p1 & p0 & c)
        c3 = g2 | (p2 & g1) | (p2 & p1 & g0) | (p2 & p1 & p0 & c)
        c4 = g3 | (p3 & g2) | (p3 & p2 & g1) | (p3 & p2 & p1 & g0) | (p3 & p2 & p1 & p0 & c)
        cs[0] = c
        cs[1] = c1
        cs[2] = c2
        cs[3] = c3
        cs[4] = c4
        s |= <uint64_t>(p0 ^ c) << base
        if r > 1:
            s |= <uint64_t>(p1 ^ c1) << (base + 1)
        if r > 2:
            s |= <uint64_t>(p2 ^ c2) << (base + 2)
        if r > 3:
            s |= <uint64_t>(p3 ^ c3) << (base + 3)
        if r == 4:
            pg = p3 & p2 & p1 & p0
            gg = g3 | (p3 & g2) | (p3 & p2 & g1) | (p3 & p2 & p1 & g0)
            c = gg | (pg & c)
        else:
            c = cs[r]
        base += 4
    cout[0] = c
    return s


cdef inline uint64_t _uadd(int kind, uint64_t a, uint64_t b, int c, int w, int* cout) noexcept nogil:
    cdef uint64_t m = _mask(w)
    cdef uint64_t s
    a &= m
    b &= m
    if kind == RIPPLE:
        return _ripple(a, b, c, w, cout)
    if kind == MCLA:
        return _mcla(a, b, c, w, cout)
    s = a + b + <uint64_t>c
    if w >= 64:
        cout[0] = 1 if (s < a or (c and s == a)) else 0
    else:
        cout[0] = <int>((s >> w) & 1)
    return s & m


cdef inline int64_t _sadd(int kind, int64_t a, int64_t b, int w) noexcept nogil:
    cdef int co
    if kind == NATIVE:
        return _wrap(<uint64_t>a + <uint64_t>b, w)
    return _wrap(_uadd(kind, <uint64_t>a, <uint64_t>b, 0, w, &co), w)


cdef inline int64_t _ssub(int kind, int64_t a, int64_t b, int w) noexcept nogil:
    cdef int co
    if kind == NATIVE:
        return _wrap(<uint64_t>a - <uint64_t>b, w)
    return _wrap(_uadd(kind, <uint64_t>a, ~(<uint64_t>b), 1, w, &co), w)


def add_unsigned(int kind, a, b, c0, int width):
    """Vectorised unsigned gate-level add; returns (sum, carry) arrays."""
    cdef const uint64_t[:] av = np.ascontiguousarray(a, dtype=np.uint64)
    cdef const uint64_t[:] bv = np.ascontiguousarray(b, dtype=np.uint64)
    cdef const int8_t[:] cv = np.ascontiguousarray(c0, dtype=np.int8)
    cdef Py_ssize_t n = av.shape[0], i
    out = np.empty(n, dtype=np.uint64)
    cout = np.empty(n, dtype=np.int8)
    cdef uint64_t[:] ov = out
    cdef int8_t[:] cov = cout
    cdef int co
    with nogil:
        for i in range(n):
            ov[i] = _uadd(kind, av[i], bv[i], cv[i], width, &co)
            cov[i] = co
    return out, cout


def cic_integrate(x, int64_t[:] acc, int64_t[:] widths, int counter, int emit_phase,
                  int decimation, int kind, bint pipelined, int64_t[:] dreg):
    cdef const int64_t[:] xv = np.ascontiguousarray(x, dtype=np.int64)
    cdef Py_ssize_t n = xv.shape[0], i
    cdef int nst = acc.shape[0], k
    cdef int64_t s, inp, d
    cdef Py_ssize_t n_out = 0
    cdef int c = counter
    for i in range(n):
        if c == emit_phase:
            n_out += 1
        c += 1
        if c == decimation:
            c = 0
    out = np.empty(n_out, dtype=np.int64)
    cdef int64_t[:] ov = out
    cdef Py_ssize_t j = 0
    c = counter
    with nogil:
        if not pipelined:
            for i in range(n):
                s = xv[i]
                for k in range(nst):
                    acc[k] = _sadd(kind, acc[k], s, <int>widths[k])
                    s = acc[k] >> (widths[k] - widths[k + 1])
                if c == emit_phase:
                    ov[j] = s
                    j += 1
                c += 1
                if c == decimation:
                    c = 0
        else:
            for i in range(n):
                d = acc[nst - 1] >> (widths[nst - 1] - widths[nst])
                for k in range(nst - 1, -1, -1):
                    if k == 0:
                        inp = xv[i]
                    else:
                        inp = acc[k - 1] >> (widths[k - 1] - widths[k])
                    acc[k] = _sadd(kind, acc[k], inp, <int>widths[k])
                dreg[0] = d
                if c == emit_phase:
                    ov[j] = d
                    j += 1
                c += 1
                if c == decimation:
                    c = 0
    return out, c


def cic_comb(v, int64_t[:, :] delay, int ptr, int width, int kind, bint pipelined,
             int64_t[:] creg):
    cdef const int64_t[:] vv = np.ascontiguousarray(v, dtype=np.int64)
    cdef Py_ssize_t n = vv.shape[0], i
    cdef int nst = delay.shape[0], m = delay.shape[1], k
    cdef int64_t s, old, inp
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[:] ov = out
    with nogil:
        for i in range(n):
            if not pipelined:
                s = vv[i]
                for k in range(nst):
                    old = delay[k, ptr]
                    delay[k, ptr] = s
                    s = _ssub(kind, s, old, width)
                ov[i] = s
            else:
                for k in range(nst - 1, -1, -1):
                    inp = vv[i] if k == 0 else creg[k - 1]
                    old = delay[k, ptr]
                    delay[k, ptr] = inp
                    creg[k] = _ssub(kind, inp, old, width)
                ov[i] = creg[nst - 1]
            ptr += 1
            if ptr == m:
                ptr = 0
    return out, ptr


def sd2_modulate(u, double[:] state):
    cdef const double[:] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0], i
    cdef double v1 = state[0], v2 = state[1], y = state[2]
    cdef double m1 = state[3], m2 = state[4]
    out = np.empty(n, dtype=np.int8)
    cdef int8_t[:] ov = out
    with nogil:
        for i in range(n):
            v1 = v1 + uv[i] - y
            v2 = v2 + v1 - y
            if fabs(v1) > m1:
                m1 = fabs(v1)
            if fabs(v2) > m2:
                m2 = fabs(v2)
            if v2 >= 0.0:
                y = 1.0
                ov[i] = 1
            else:
                y = -1.0
                ov[i] = -1
    state[0] = v1
    state[1] = v2
    state[2] = y
    state[3] = m1
    state[4] = m2
    return out


def fir_decimate2(x, int64_t[:] coeffs, int64_t[:] hist, int phase, int frac_bits,
                  int out_width):
    cdef const int64_t[:] xv = np.ascontiguousarray(x, dtype=np.int64)
    cdef Py_ssize_t n = xv.shape[0], i, h = hist.shape[0], t
    cdef Py_ssize_t ntap = coeffs.shape[0]
    buf_arr = np.concatenate([np.asarray(hist), np.asarray(xv)]).astype(np.int64)
    cdef int64_t[:] buf = buf_arr
    # polyphase split: even- and odd-indexed taps, zero taps skipped
    cdef Py_ssize_t ne = 0, no = 0
    even_idx = np.array([t for t in range(0, ntap, 2) if coeffs[t] != 0], dtype=np.int64)
    odd_idx = np.array([t for t in range(1, ntap, 2) if coeffs[t] != 0], dtype=np.int64)
    cdef int64_t[:] ev = even_idx
    cdef int64_t[:] odv = odd_idx
    ne = ev.shape[0]
    no = odv.shape[0]
    cdef Py_ssize_t n_out = 0
    cdef int c = phase
    for i in range(n):
        if c == 0:
            n_out += 1
        c ^= 1
    out = np.empty(n_out, dtype=np.int64)
    cdef int64_t[:] ov = out
    cdef Py_ssize_t j = 0, pos
    cdef int64_t acc
    c = phase
    with nogil:
        for i in range(n):
            if c == 0:
                pos = h + i
                acc = 0
                for t in range(ne):
                    acc += coeffs[ev[t]] * buf[pos - ev[t]]
                for t in range(no):
                    acc += coeffs[odv[t]] * buf[pos - odv[t]]
                ov[j] = _wrap(<uint64_t>(acc >> frac_bits), out_width)
                j += 1
            c ^= 1
    if h > 0:
        np.asarray(hist)[:] = buf_arr[buf_arr.shape[0] - h:]
    return out, c
