#!/usr/bin/env python3
"""Benchmark the compiled polynomial kernels against the pure-Python fallback.

Two kernel microbenchmarks on workloads taken from the actual Hessian
pipeline (sparse products of direction-field derivative components, node
evaluation on a quadrature grid), plus an end-to-end timing of the
exact-moment Hessian of C_6, which is dominated by kernel calls.

Run:  python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np

from bergerhopf._kernels import backends
from bergerhopf.fields import field_C2s
from bergerhopf.geometry import BergerContext
from bergerhopf.quadrature import hopf_product_rule


def _representative_polys():
    """The squared-norm polynomial of C_6 and its square, as in the
    exact-moment integrands."""
    ctx = BergerContext(1, "2.6")
    c6 = field_C2s(3, ctx)
    q = c6.squared_norm_poly()
    return q.terms, q.terms, q * q


def bench_mul(impl, a, b, repeat=200):
    t0 = time.perf_counter()
    for _ in range(repeat):
        impl.mul_terms(a, b)
    return (time.perf_counter() - t0) / repeat


def bench_eval(impl, poly, points, repeat=20):
    keys = np.fromiter(poly.terms.keys(), dtype=np.int64, count=len(poly.terms))
    coeffs = np.fromiter(
        (c / poly.den for c in poly.terms.values()),
        dtype=np.float64,
        count=len(poly.terms),
    )
    t0 = time.perf_counter()
    for _ in range(repeat):
        impl.eval_terms(keys, coeffs, points)
    return (time.perf_counter() - t0) / repeat


def bench_end_to_end(pure: bool) -> float:
    """Time the exact-moment Hessian of C_6 in a fresh interpreter."""
    env = dict(os.environ)
    if pure:
        env["BERGERHOPF_PURE"] = "1"
    else:
        env.pop("BERGERHOPF_PURE", None)
    code = (
        "import time; t0=time.perf_counter();"
        "from bergerhopf.geometry import BergerContext;"
        "from bergerhopf.fields import field_C2s;"
        "from bergerhopf.functionals import FunctionalId, hess_hopf_closed;"
        "ctx = BergerContext(1, '2.6');"
        "t1=time.perf_counter();"
        "hess_hopf_closed(field_C2s(3, ctx), FunctionalId.volume(), ctx);"
        "print(time.perf_counter()-t1)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    return float(out.stdout.strip())


def main():
    impls = backends()
    a, b, comp = _representative_polys()
    rule = hopf_product_rule(14, 28)
    print(f"available backends: {', '.join(sorted(impls))}")
    print(f"mul workload: {len(a)} x {len(b)} terms; "
          f"eval workload: {len(comp.terms)} terms at {rule.points.shape[0]} nodes")
    print()
    header = f"{'benchmark':<28}" + "".join(f"{n:>14}" for n in sorted(impls))
    print(header)
    rows = {
        "sparse product (ms)": {
            n: 1e3 * bench_mul(impl, a, b) for n, impl in impls.items()
        },
        "node evaluation (ms)": {
            n: 1e3 * bench_eval(impl, comp, rule.points) for n, impl in impls.items()
        },
    }
    if "compiled" in impls:
        rows["C6 volume Hessian (s)"] = {
            "python": bench_end_to_end(pure=True),
            "compiled": bench_end_to_end(pure=False),
        }
    for name, vals in rows.items():
        line = f"{name:<28}" + "".join(f"{vals[n]:>14.3f}" for n in sorted(vals))
        print(line)
    if "compiled" in impls:
        for name, vals in rows.items():
            if "python" in vals and "compiled" in vals and vals["compiled"] > 0:
                ratio = vals["python"] / vals["compiled"]
                print(f"{name}: compiled is {ratio:.1f}x the pure-Python speed")


if __name__ == "__main__":
    main()
