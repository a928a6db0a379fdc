#!/usr/bin/env python3
"""Compare the compiled and pure-Python group-dot kernels.

Runs identical pre-encoded workloads through both backends, verifies they
agree bit for bit, and reports throughput.

    python3 benchmarks/bench_backends.py [--groups N] [--group-size G]
"""

import argparse
import time

import numpy as np

from bitmod._kernels import pure
from bitmod.dtype import GroupingConfig, spec_for
from bitmod.pe import Fp16Operand, encode_group_terms
from bitmod.quant import quantize_channel

try:
    from bitmod._kernels import _core
except ImportError:
    _core = None

DTYPES = ("FP3_BITMOD", "FP4_BITMOD", "INT6_SYM", "INT8_SYM")


def build_workload(name, n_groups, g, rng):
    spec = spec_for(name)
    grouping = GroupingConfig(group_size=g)
    batches = []
    for _ in range(n_groups):
        qg = quantize_channel(rng.standard_normal(g), spec, grouping).groups[0]
        w = encode_group_terms(qg, spec)
        avals = rng.standard_normal(g).astype(np.float16)
        ops = [Fp16Operand.from_float(float(v)) for v in avals]
        a = (np.array([o.sign for o in ops], dtype=np.int64),
             np.array([o.a_e for o in ops], dtype=np.int64),
             np.array([o.a_m for o in ops], dtype=np.int64))
        batches.append((w, a))
    return spec, batches


def run(backend, batches, g, terms):
    out = []
    t0 = time.perf_counter()
    for (ws, we, wm, wb), (asn, ae, am) in batches:
        out.append(backend.run_group_dot(ws, we, wm, wb, asn, ae, am,
                                         g, terms))
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--groups", type=int, default=300)
    ap.add_argument("--group-size", type=int, default=128)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    if _core is None:
        print("compiled backend unavailable; nothing to compare")
        return 1

    rng = np.random.default_rng(args.seed)
    g = args.group_size
    print(f"{args.groups} groups of {g} weights per dtype\n")
    print(f"{'dtype':>12} {'pure (s)':>10} {'cython (s)':>11} "
          f"{'speedup':>8}  match")
    for name in DTYPES:
        spec, batches = build_workload(name, args.groups, g, rng)
        t_pure, r_pure = run(pure, batches, g, spec.terms_per_code)
        t_core, r_core = run(_core, batches, g, spec.terms_per_code)
        match = all(tuple(int(v) for v in a) == tuple(b)
                    for a, b in zip(r_core, r_pure))
        print(f"{name:>12} {t_pure:10.3f} {t_core:11.3f} "
              f"{t_pure / t_core:7.1f}x  {'yes' if match else 'NO'}")
        if not match:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
