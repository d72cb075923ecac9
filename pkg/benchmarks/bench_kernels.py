"""Compare the compiled series kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--n 300] [--repeat 3]

Kernel timings call both modules directly on identical Fraction inputs and
assert identical outputs.  The end-to-end row times a P8 mirror map in a
subprocess for each backend (ELLMOD_PURE=1 selects the fallback); every
row reports the best of --repeat runs.
"""

import argparse
import os
import subprocess
import sys
import time
from fractions import Fraction

from ellmod import _kernels_py

try:
    from ellmod import _kernels
except ImportError:
    _kernels = None


def _inputs(n):
    a = [Fraction(1)] + [Fraction((-1) ** k * (k + 2), k + 1) for k in range(1, n)]
    b = [Fraction(0), Fraction(1)] + [Fraction(k, 3 * k + 1) for k in range(2, n)]
    return a, b


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def kernel_rows(n, repeat):
    a, b = _inputs(n)
    zero_const = [Fraction(0)] + a[1:]
    cases = {
        "mul": lambda m: m.mul(a, b, n),
        "inv": lambda m: m.inv(a, n),
        "powr(1/3)": lambda m: m.powr(a, Fraction(1, 3), Fraction(1), n),
        "exp": lambda m: m.exp(zero_const, n),
        "log": lambda m: m.log(a, n),
        "compose": lambda m: m.compose(a, b, n // 2),
    }
    rows = []
    for name, fn in cases.items():
        tp, rp = _time(lambda: fn(_kernels_py), repeat)
        if _kernels is None:
            rows.append((name, tp, None))
            continue
        tc, rc = _time(lambda: fn(_kernels), repeat)
        assert rp == rc, f"{name}: backends disagree"
        rows.append((name, tp, tc))
    return rows


def end_to_end(order, repeat):
    code = ("import time; from ellmod.mirror import mirror_for, j_expansion;"
            "t = time.perf_counter();"
            f"j_expansion(mirror_for('P8', {order}));"
            "print(time.perf_counter() - t)")
    out = {}
    for label, pure in (("python", "1"), ("cython", "")):
        env = dict(os.environ)
        env.pop("ELLMOD_PURE", None)
        if pure:
            env["ELLMOD_PURE"] = pure
        runs = [subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
                for _ in range(repeat)]
        out[label] = min(float(r.stdout.strip()) for r in runs)
    return out


def main(argv=None):
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--order", type=int, default=120)
    args = p.parse_args(argv)
    print(f"kernel        n={args.n:<5} python [s]   cython [s]   speedup")
    for name, tp, tc in kernel_rows(args.n, args.repeat):
        if tc is None:
            print(f"{name:<20} {tp:10.4f}   (compiled core not built)")
        else:
            print(f"{name:<20} {tp:10.4f}   {tc:10.4f}   {tp / tc:6.2f}x")
    e2e = end_to_end(args.order, args.repeat)
    print(f"P8 j-expansion, order {args.order}: python {e2e['python']:.3f} s, "
          f"cython {e2e['cython']:.3f} s, speedup {e2e['python'] / e2e['cython']:.2f}x")


if __name__ == "__main__":
    main()
