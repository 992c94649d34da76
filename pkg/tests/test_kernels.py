"""Backend equivalence and algebraic properties of the polynomial kernels."""

import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergerhopf._kernels import BACKEND, backends, eval_terms, mul_terms, pack, unpack

ALL_BACKENDS = backends()


def test_backend_selection():
    assert "python" in ALL_BACKENDS
    if os.environ.get("BERGERHOPF_PURE"):
        assert BACKEND == "python"
    elif "compiled" in ALL_BACKENDS:
        # the import must prefer the extension when it is built
        assert BACKEND == "compiled"


def test_pack_unpack_roundtrip():
    exps = (3, 0, 7, 255)
    key = pack(exps)
    assert unpack(key, 4) == exps
    with pytest.raises(ValueError):
        pack((256,))
    with pytest.raises(ValueError):
        pack((-1,))


def _reference_mul(a, b, nvars):
    """Dict convolution through explicit exponent tuples."""
    out = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            ea, eb = unpack(ka, nvars), unpack(kb, nvars)
            k = pack(tuple(x + y for x, y in zip(ea, eb)))
            out[k] = out.get(k, 0) + ca * cb
    return {k: c for k, c in out.items() if c != 0}


terms_strategy = st.dictionaries(
    keys=st.tuples(*(st.integers(0, 5) for _ in range(3))).map(pack),
    values=st.integers(-(10**12), 10**12).filter(lambda c: c != 0),
    max_size=8,
)


@settings(max_examples=200, deadline=None)
@given(a=terms_strategy, b=terms_strategy)
def test_mul_matches_reference(a, b):
    expected = _reference_mul(a, b, 3)
    for name, impl in ALL_BACKENDS.items():
        assert impl.mul_terms(a, b) == expected, name


@settings(max_examples=100, deadline=None)
@given(a=terms_strategy, b=terms_strategy, c=terms_strategy)
def test_mul_commutative_and_distributive(a, b, c):
    assert mul_terms(a, b) == mul_terms(b, a)
    ab_plus_ac = {}
    for d in (mul_terms(a, b), mul_terms(a, c)):
        for k, v in d.items():
            ab_plus_ac[k] = ab_plus_ac.get(k, 0) + v
    ab_plus_ac = {k: v for k, v in ab_plus_ac.items() if v != 0}
    b_plus_c = {}
    for d in (b, c):
        for k, v in d.items():
            b_plus_c[k] = b_plus_c.get(k, 0) + v
    b_plus_c = {k: v for k, v in b_plus_c.items() if v != 0}
    assert mul_terms(a, b_plus_c) == ab_plus_ac


def test_eval_terms_against_horner_free_reference():
    rng = np.random.default_rng(11)
    nvars = 4
    exps = [(2, 0, 1, 0), (0, 3, 0, 0), (1, 1, 1, 1), (0, 0, 0, 0)]
    coeffs = np.array([1.5, -2.0, 0.25, 3.0])
    keys = np.array([pack(e) for e in exps], dtype=np.int64)
    pts = rng.standard_normal((40, nvars))
    expected = np.zeros(40)
    for e, c in zip(exps, coeffs):
        expected += c * np.prod(pts ** np.array(e), axis=1)
    for name, impl in ALL_BACKENDS.items():
        got = impl.eval_terms(keys, coeffs, pts)
        np.testing.assert_allclose(got, expected, rtol=1e-13, err_msg=name)


def test_eval_terms_empty():
    pts = np.ones((5, 2))
    out = eval_terms(np.empty(0, dtype=np.int64), np.empty(0), pts)
    assert out.shape == (5,)
    assert np.all(out == 0)


def test_eval_terms_large_term_count_chunks():
    # (1 + x0 + x1 + x2)^12 has 455 terms; enough points force the chunked
    # path of the pure-Python backend
    from bergerhopf.polynomials import PolyField

    base = (
        PolyField.constant(1, 3)
        + PolyField.variable(0, 3)
        + PolyField.variable(1, 3)
        + PolyField.variable(2, 3)
    )
    poly = base**12
    assert len(poly.terms) == 455
    rng = np.random.default_rng(13)
    # keep 1 + sum(x) away from zero: the 455-term sum cancels near the root
    pts = rng.uniform(0.0, 0.5, size=(20_000, 3))
    keys = np.fromiter(poly.terms.keys(), dtype=np.int64, count=455)
    coeffs = np.fromiter(
        (c / poly.den for c in poly.terms.values()), dtype=np.float64, count=455
    )
    expected = (1.0 + pts.sum(axis=1)) ** 12
    for name, impl in ALL_BACKENDS.items():
        got = impl.eval_terms(keys, coeffs, pts)
        np.testing.assert_allclose(got, expected, rtol=1e-9, err_msg=name)
