# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled polynomial kernels.

Same contract as ``_pycore``: term dicts map packed exponent keys (one byte
per variable) to arbitrary-precision integer coefficients.  Coefficients stay
PyObject ints so there is no overflow concern; the win over pure Python comes
from tight dict iteration and the C evaluation loop.
"""

import numpy as np

from libc.stdint cimport int64_t

PACK_BITS = 8
PACK_MASK = 0xFF
MAX_EXPONENT = 0xFF


def pack(exponents):
    cdef long long key = 0
    cdef int i
    cdef object e
    for i, e in enumerate(exponents):
        if not 0 <= e <= 0xFF:
            raise ValueError(f"exponent {e} out of range 0..255")
        key |= (<long long> e) << (8 * i)
    return key


def unpack(key, int nvars):
    cdef long long k = key
    return tuple((k >> (8 * i)) & 0xFF for i in range(nvars))


def mul_terms(dict a, dict b):
    cdef dict out = {}
    cdef list bk, bc
    cdef Py_ssize_t i, nb
    cdef object ka, ca, kb, cb, k, cur
    if len(a) > len(b):
        a, b = b, a
    bk = list(b.keys())
    bc = list(b.values())
    nb = len(bk)
    for ka, ca in a.items():
        for i in range(nb):
            k = ka + <object> bk[i]
            cb = ca * <object> bc[i]
            cur = out.get(k)
            if cur is None:
                out[k] = cb
            else:
                out[k] = cur + cb
    return {k: cur for k, cur in out.items() if cur != 0}


def eval_terms(keys, coeffs, points):
    cdef const int64_t[:] kv = np.ascontiguousarray(keys, dtype=np.int64)
    cdef const double[:] cv = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef const double[:, :] xv = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1], nt = kv.shape[0]
    out = np.zeros(n)
    cdef double[:] ov = out
    if nt == 0:
        return out
    cdef int64_t key
    cdef Py_ssize_t i, t, j, e, max_e = 0
    for t in range(nt):
        key = kv[t]
        for j in range(d):
            e = (key >> (8 * j)) & 0xFF
            if e > max_e:
                max_e = e
    # per-point power table: pows[j, e] = x_j ** e
    pow_tab = np.empty((d, max_e + 1))
    cdef double[:, :] pw = pow_tab
    cdef double acc, term
    for i in range(n):
        for j in range(d):
            pw[j, 0] = 1.0
            for e in range(1, max_e + 1):
                pw[j, e] = pw[j, e - 1] * xv[i, j]
        acc = 0.0
        for t in range(nt):
            key = kv[t]
            term = cv[t]
            for j in range(d):
                e = (key >> (8 * j)) & 0xFF
                if e:
                    term *= pw[j, e]
            acc += term
        ov[i] = acc
    return out
