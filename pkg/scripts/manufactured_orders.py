"""Run the manufactured-solution convergence study and print the orders.

Example:

    python scripts/manufactured_orders.py --horizon 0.2 --n-max 32
"""

from __future__ import annotations

import argparse

from vela.dynamics import StepConfig
from vela.mms import convergence_study, standard_spec
from vela.state import PressureLaw


def parse_args() -> argparse.Namespace:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--horizon", type=float, default=0.2)
    p.add_argument("--coarsest", type=int, default=16,
                   help="steps over the horizon at the coarsest dt")
    p.add_argument("--n-max", type=int, default=32, help="finest resolution")
    p.add_argument("--scheme", choices=("imex1", "imex2"), default="imex2")
    p.add_argument("--mu", type=float, default=0.1)
    p.add_argument("--spatial-steps", type=int, default=512,
                   help="steps over the horizon for the resolution sweep")
    return p.parse_args()


def main() -> int:
    args = parse_args()
    h = args.horizon
    cfg = StepConfig(
        dt=h / args.coarsest, scheme=args.scheme, mu=args.mu,
        law=PressureLaw(1.0, 2.0),
    )
    dts = [h / (args.coarsest * 2**k) for k in range(3)]
    ns = sorted({max(8, args.n_max // 4), max(8, args.n_max // 2), args.n_max})
    rep = convergence_study(
        standard_spec(args.dim),
        cfg,
        dts=dts,
        ns=ns,
        horizon=h,
        spatial_dt=h / args.spatial_steps,
    )
    print(f"{'field':>6s} {'temporal order':>15s}   errors (coarse -> fine)")
    for name in ("rho", "u", "E"):
        errs = "  ".join(f"{e:.3e}" for e in rep.dt_errors[name])
        print(f"{name:>6s} {rep.dt_orders[name]:15.3f}   {errs}")
    print(f"\nresolutions {list(rep.ns)} -> spatial error floor {rep.spatial_floor():.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
