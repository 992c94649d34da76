"""Pure-Python polynomial kernels (fallback for the compiled module).

Terms are stored as ``{packed_key: int_coefficient}`` where the packed key
holds one exponent per byte: variable ``i`` occupies bits ``8*i .. 8*i+7``.
Adding two keys adds exponents componentwise as long as every per-variable
sum stays below 256, which callers must guarantee (total degrees here stay
far below that).
"""

from __future__ import annotations

import numpy as np

PACK_BITS = 8
PACK_MASK = 0xFF
MAX_EXPONENT = PACK_MASK


def pack(exponents) -> int:
    key = 0
    for i, e in enumerate(exponents):
        if not 0 <= e <= MAX_EXPONENT:
            raise ValueError(f"exponent {e} out of range 0..{MAX_EXPONENT}")
        key |= int(e) << (PACK_BITS * i)
    return key


def unpack(key: int, nvars: int) -> tuple:
    return tuple((key >> (PACK_BITS * i)) & PACK_MASK for i in range(nvars))


def mul_terms(a: dict, b: dict) -> dict:
    """Sparse product of two term dicts with integer coefficients."""
    if len(a) > len(b):
        a, b = b, a
    out: dict = {}
    get = out.get
    items_b = list(b.items())
    for ka, ca in a.items():
        for kb, cb in items_b:
            k = ka + kb
            c = get(k)
            if c is None:
                out[k] = ca * cb
            else:
                out[k] = c + ca * cb
    return {k: c for k, c in out.items() if c != 0}


def eval_terms(keys: np.ndarray, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate sum_t coeffs[t] * prod_j x_j**e_{t,j} at every row of points."""
    n, d = points.shape
    nt = keys.shape[0]
    if nt == 0:
        return np.zeros(n)
    exps = np.empty((nt, d), dtype=np.int64)
    for j in range(d):
        exps[:, j] = (keys >> (PACK_BITS * j)) & PACK_MASK
    max_e = int(exps.max())
    out = np.zeros(n)
    # chunk terms to bound the (n, chunk) temporary
    chunk = max(1, int(4_000_000 // max(n, 1)))
    # per-variable power tables, reused across chunks
    pows = np.empty((d, max_e + 1, n))
    pows[:, 0, :] = 1.0
    for e in range(1, max_e + 1):
        pows[:, e, :] = pows[:, e - 1, :] * points.T
    for t0 in range(0, nt, chunk):
        t1 = min(nt, t0 + chunk)
        block = np.ones((t1 - t0, n))
        for j in range(d):
            block *= pows[j, exps[t0:t1, j], :]
        out += coeffs[t0:t1] @ block
    return out
