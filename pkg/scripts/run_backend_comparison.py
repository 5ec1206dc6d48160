"""Cross-check the three backends against each other on one parameter set.

The closed form is exact for the coupled-oscillator equations; the
mean-field integrator must land on it to ~1e-9, and the truncated master
equation agrees to a fraction of a percent once the drive is weak enough
for the one-excitation sector to dominate.  Prints a deviation table and a
closure-quality figure for the quantum route.

    python3 scripts/run_backend_comparison.py [--n-points 11] [--n-a 5] [--n-b 5]
"""

from __future__ import annotations

import argparse
from dataclasses import replace

import numpy as np

from nit_sim import SweepConfig, SystemParams, sweep
from nit_sim.quantum import (
    HilbertSpec,
    build_liouvillian,
    closure_defect,
    steady_state_dm,
)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-points", type=int, default=11)
    parser.add_argument("--n-a", type=int, default=5)
    parser.add_argument("--n-b", type=int, default=5)
    parser.add_argument("--epsilon", type=float, default=0.01)
    args = parser.parse_args(argv)

    base = SystemParams(
        delta_p=0.0,
        lam=0.5,
        g=0.5,
        epsilon=args.epsilon,
        kappa_a=1.0,
        kappa_b=1e-3,
        gamma=1e-3,
        gamma_phi=1e-3,
    )
    spec = HilbertSpec(args.n_a, args.n_b)

    grids = {
        backend: sweep(
            SweepConfig(base, -1.5, 1.5, args.n_points, backend=backend,
                        quantum_spec=spec if backend == "quantum" else None)
        )
        for backend in ("analytic", "meanfield", "quantum")
    }

    an, mf, qm = (grids[b].a for b in ("analytic", "meanfield", "quantum"))
    print(f"{args.n_points} detunings on [-1.5, 1.5], truncation "
          f"({args.n_a}, {args.n_b}), epsilon = {args.epsilon}")
    print(f"{'delta_p':>9}  {'|mf - exact|':>12}  {'|qm - exact|/|exact|':>20}  "
          f"{'closure':>9}")
    for i, d in enumerate(grids["analytic"].detunings):
        rho = steady_state_dm(build_liouvillian(replace(base, delta_p=float(d)), spec))
        cl = closure_defect(rho, spec)
        print(f"{d:>9.3f}  {abs(mf[i] - an[i]):>12.3e}  "
              f"{abs(qm[i] - an[i]) / abs(an[i]):>20.3e}  {cl:>9.3e}")

    print(f"max |meanfield - analytic|      = {np.abs(mf - an).max():.3e}")
    print(f"max rel |quantum - analytic|    = "
          f"{(np.abs(qm - an) / np.abs(an)).max():.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
