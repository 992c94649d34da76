"""Exact multivariate polynomials with rational coefficients.

A :class:`PolyField` is a polynomial on R^n used as the ambient extension of
functions and vector-field components on the sphere.  Coefficients are kept
as integer numerators over one shared positive denominator so that products
run in plain integer arithmetic; :class:`fractions.Fraction` appears only at
the API boundary.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Tuple

import numpy as np

from . import _kernels as K

Exponents = Tuple[int, ...]


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        raise TypeError(
            "float coefficients are not exact; pass Fraction, int or str"
        )
    raise TypeError(f"unsupported coefficient type {type(value)!r}")


class PolyField:
    """Polynomial in ``nvars`` variables over the rationals."""

    __slots__ = ("nvars", "terms", "den", "_deg")

    def __init__(self, nvars: int, terms: dict | None = None, den: int = 1):
        if den == 0:
            raise ZeroDivisionError("denominator must be nonzero")
        terms = terms or {}
        if den < 0:
            den = -den
            terms = {k: -c for k, c in terms.items()}
        # normalize: strip zeros, divide out content
        terms = {k: c for k, c in terms.items() if c != 0}
        if terms:
            g = den
            for c in terms.values():
                g = math.gcd(g, c)
                if g == 1:
                    break
            if g > 1:
                terms = {k: c // g for k, c in terms.items()}
                den //= g
        else:
            den = 1
        self.nvars = nvars
        self.terms = terms
        self.den = den
        self._deg = None

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "PolyField":
        return cls(nvars)

    @classmethod
    def constant(cls, value, nvars: int) -> "PolyField":
        f = _as_fraction(value)
        return cls(nvars, {0: f.numerator}, f.denominator)

    @classmethod
    def variable(cls, index: int, nvars: int) -> "PolyField":
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range")
        return cls(nvars, {K.pack([1 if j == index else 0 for j in range(nvars)]): 1})

    @classmethod
    def from_terms(cls, mapping: Mapping[Exponents, object], nvars: int) -> "PolyField":
        """Build from ``{exponent_tuple: coefficient}`` with exact coefficients."""
        fracs = {tuple(e): _as_fraction(c) for e, c in mapping.items()}
        den = math.lcm(*(f.denominator for f in fracs.values())) if fracs else 1
        terms: dict = {}
        for exps, f in fracs.items():
            if len(exps) != nvars:
                raise ValueError("exponent tuple length does not match nvars")
            key = K.pack(exps)
            terms[key] = terms.get(key, 0) + f.numerator * (den // f.denominator)
        return cls(nvars, terms, den)

    # -- inspection ----------------------------------------------------

    def degree(self) -> int:
        """Total degree (zero polynomial reports -1)."""
        if self._deg is None:
            if not self.terms:
                self._deg = -1
            else:
                self._deg = max(
                    sum(K.unpack(k, self.nvars)) for k in self.terms
                )
        return self._deg

    def is_zero(self) -> bool:
        return not self.terms

    def is_homogeneous(self) -> bool:
        degs = {sum(K.unpack(k, self.nvars)) for k in self.terms}
        return len(degs) <= 1

    def coefficient(self, exponents: Exponents) -> Fraction:
        return Fraction(self.terms.get(K.pack(exponents), 0), self.den)

    def iter_terms(self) -> Iterator[Tuple[Exponents, Fraction]]:
        unpacked = sorted(
            (K.unpack(k, self.nvars), c) for k, c in self.terms.items()
        )
        for exps, c in unpacked:
            yield exps, Fraction(c, self.den)

    def to_json_terms(self) -> list:
        """Serializable term list: ``[{"exponents": [...], "coeff": "p/q"}]``."""
        return [
            {"exponents": list(e), "coeff": str(c)} for e, c in self.iter_terms()
        ]

    # -- arithmetic ----------------------------------------------------

    def _coerce(self, other) -> "PolyField":
        if isinstance(other, PolyField):
            if other.nvars != self.nvars:
                raise ValueError("variable-count mismatch")
            return other
        return PolyField.constant(other, self.nvars)

    def __add__(self, other) -> "PolyField":
        other = self._coerce(other)
        da, db = self.den, other.den
        lcm = da * db // math.gcd(da, db)
        ma, mb = lcm // da, lcm // db
        out = {k: c * ma for k, c in self.terms.items()}
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c * mb
        return PolyField(self.nvars, out, lcm)

    __radd__ = __add__

    def __neg__(self) -> "PolyField":
        return PolyField(self.nvars, {k: -c for k, c in self.terms.items()}, self.den)

    def __sub__(self, other) -> "PolyField":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "PolyField":
        return (-self) + self._coerce(other)

    def __mul__(self, other) -> "PolyField":
        if not isinstance(other, PolyField):
            f = _as_fraction(other)
            return PolyField(
                self.nvars,
                {k: c * f.numerator for k, c in self.terms.items()},
                self.den * f.denominator,
            )
        if other.nvars != self.nvars:
            raise ValueError("variable-count mismatch")
        if self.degree() + other.degree() > K.MAX_EXPONENT:
            raise OverflowError("product degree exceeds packed-exponent range")
        return PolyField(
            self.nvars, K.mul_terms(self.terms, other.terms), self.den * other.den
        )

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "PolyField":
        if n < 0:
            raise ValueError("negative power")
        result = PolyField.constant(1, self.nvars)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyField):
            try:
                other = self._coerce(other)
            except TypeError:
                return NotImplemented
        return (
            self.nvars == other.nvars
            and self.den == other.den
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.nvars, self.den, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        n = len(self.terms)
        return f"PolyField(nvars={self.nvars}, terms={n}, degree={self.degree()})"

    # -- calculus ------------------------------------------------------

    def diff(self, index: int) -> "PolyField":
        if not 0 <= index < self.nvars:
            raise IndexError("variable index out of range")
        shift = K.PACK_BITS * index
        out: dict = {}
        for k, c in self.terms.items():
            e = (k >> shift) & K.PACK_MASK
            if e:
                out[k - (1 << shift)] = out.get(k - (1 << shift), 0) + c * e
        return PolyField(self.nvars, out, self.den)

    def gradient(self) -> list:
        return [self.diff(i) for i in range(self.nvars)]

    def hessian(self) -> list:
        grads = self.gradient()
        return [[g.diff(j) for j in range(self.nvars)] for g in grads]

    def euclidean_laplacian(self) -> "PolyField":
        out = PolyField.zero(self.nvars)
        for i in range(self.nvars):
            out = out + self.diff(i).diff(i)
        return out

    def radial_derivative(self) -> "PolyField":
        """sum_i x_i d/dx_i; equals deg*f on homogeneous f (Euler)."""
        out = PolyField.zero(self.nvars)
        for i in range(self.nvars):
            out = out + PolyField.variable(i, self.nvars) * self.diff(i)
        return out

    # -- evaluation ----------------------------------------------------

    def _float_arrays(self):
        keys = np.fromiter(self.terms.keys(), dtype=np.int64, count=len(self.terms))
        coeffs = np.fromiter(
            (c / self.den for c in self.terms.values()),
            dtype=np.float64,
            count=len(self.terms),
        )
        return keys, coeffs

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at float points, shape (n, nvars) or (nvars,)."""
        points = np.asarray(points, dtype=np.float64)
        single = points.ndim == 1
        if single:
            points = points[None, :]
        if points.shape[1] != self.nvars:
            raise ValueError("point dimension mismatch")
        keys, coeffs = self._float_arrays()
        values = K.eval_terms(keys, coeffs, np.ascontiguousarray(points))
        return values[0] if single else values

    def eval_exact(self, point: Iterable) -> Fraction:
        fr = [_as_fraction(x) for x in point]
        total = Fraction(0)
        for exps, coeff in self.iter_terms():
            term = coeff
            for x, e in zip(fr, exps):
                term *= x**e
            total += term
        return total
