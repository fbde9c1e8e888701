"""Time the compiled and numpy kernel backends on the training-sized workload.

    python3 benchmarks/bench_kernels.py [--batch 480] [--threads 32] [--repeat 20]

Checks the two backends agree bit-for-bit before timing them.
"""

import argparse
import math
import time

import numpy as np

from vpcircuit import kernels
from vpcircuit.core import EPS_PULLBACK, deep_stack, single_stack, trig_params


def _time(fn, repeat):
    fn()  # warm-up
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(spec, batch, repeat, rng):
    params = rng.uniform(-math.pi, math.pi, spec.param_count)
    phases = rng.uniform(-math.pi, math.pi, (batch, spec.n_threads))
    re, im = np.cos(phases), np.sin(phases)
    cot_re, cot_im = rng.normal(size=re.shape), rng.normal(size=re.shape)
    ops, offsets = spec.opcodes()
    c, s = trig_params(params)
    rows = {}
    outputs = {}
    for name, impl in sorted(kernels.BACKENDS.items()):
        def fwd():
            return impl.forward_batch(ops, offsets, c, s, re, im, True, EPS_PULLBACK)

        fw = fwd()

        def bwd():
            return impl.backward_batch(ops, offsets, c, s, fw[2], fw[3], cot_re, cot_im,
                                       spec.param_count, EPS_PULLBACK)

        outputs[name] = fw + bwd()
        rows[name] = (_time(fwd, repeat), _time(bwd, repeat))
    names = list(outputs)
    same = all(np.array_equal(a, b) for a, b in zip(outputs[names[0]], outputs[names[-1]]))
    return rows, same


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=480)
    ap.add_argument("--threads", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if "cython" not in kernels.BACKENDS:
        print("compiled backend not built; only the numpy fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'circuit':<14}{'backend':<9}{'forward ms':>12}{'backward ms':>13}")
    for spec in (single_stack(args.threads), deep_stack(args.threads, 4)):
        rows, same = bench(spec, args.batch, args.repeat, rng)
        for name, (f, b) in rows.items():
            print(f"{spec.name:<14}{name:<9}{f * 1e3:>12.3f}{b * 1e3:>13.3f}")
        if len(rows) == 2:
            (fa, ba), (fb, bb) = rows["python"], rows["cython"]
            print(f"{'':<14}{'speedup':<9}{fa / fb:>11.1f}x{ba / bb:>12.1f}x"
                  f"   bit-identical: {'yes' if same else 'NO'}")


if __name__ == "__main__":
    main()
