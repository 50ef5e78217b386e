"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--n 256] [--repeat 3]
"""
import argparse
import timeit

import numpy as np

from patomo import _kernels
from patomo.operators import AcquisitionGeometry, ImageGrid
from patomo.pa_transform import stencil
from patomo.phantom import acquisition_preset


def bench(label, fn, repeat):
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"  {label:<28s} {best * 1e3:9.2f} ms")
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    geom = acquisition_preset("missing_wedge", args.n)
    geom = AcquisitionGeometry(args.n, geom.angles)
    offsets, angles = geom.detector_offsets(), geom.angles_rad()
    image = np.random.default_rng(0).standard_normal(ImageGrid(args.n).shape)
    coeffs = stencil(3)

    backends = ["python"] + (["cython"] if _kernels.BACKEND == "cython" else [])
    timings = {}
    for name in backends:
        print(f"{name}:")
        timings[name] = (
            bench("trace_rays", lambda: _kernels.trace_rays(args.n, offsets, angles, backend=name),
                  args.repeat),
            bench("circular_stencil (k=3)",
                  lambda: _kernels.circular_stencil(image, coeffs, axis=1, backend=name),
                  10 * args.repeat),
            bench("circular_stencil_adjoint",
                  lambda: _kernels.circular_stencil_adjoint(image, coeffs, axis=0, backend=name),
                  10 * args.repeat),
        )
    if "cython" in timings:
        speedups = [p / c for p, c in zip(timings["python"], timings["cython"])]
        print("speedup (python / cython): " + ", ".join(f"{s:.2f}x" for s in speedups))
    else:
        print("compiled extension not available; only the fallback was timed")


if __name__ == "__main__":
    main()
