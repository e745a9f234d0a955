"""Tabulate the energy-balance residual under repeated dt halving.

The second-order scheme shrinks the residual ~4x per halving until the
spectral floor; the first-order scheme gives ~2x.

Example:

    python scripts/energy_convergence.py --n 64 --levels 4 --scheme imex2
"""

from __future__ import annotations

import argparse
import tempfile
from pathlib import Path

from vela.cli import RunConfig, run_simulation


def parse_args() -> argparse.Namespace:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--delta", type=float, default=1e-2)
    p.add_argument("--mu", type=float, default=0.1)
    p.add_argument("--dt0", type=float, default=2e-3, help="coarsest step")
    p.add_argument("--levels", type=int, default=3, help="number of halvings + 1")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--scheme", choices=("imex1", "imex2"), default="imex2")
    return p.parse_args()


def final_balance(workdir: Path, args: argparse.Namespace, dt: float) -> float:
    csv = workdir / f"dt_{dt:g}.csv"
    cfg = RunConfig(
        n=args.n,
        init="taylor_green_perturbed",
        delta=args.delta,
        mu=args.mu,
        dt=dt,
        t_end=args.t_end,
        scheme=args.scheme,
        output_every=max(1, round(args.t_end / dt)),
        csv_path=str(csv),
        checkpoint_path=str(workdir / f"dt_{dt:g}.ckpt"),
    )
    rc = run_simulation(cfg)
    if rc != 0:
        raise SystemExit(rc)
    rows = [
        line.strip()
        for line in csv.read_text().splitlines()
        if line.strip() and not line.startswith("#")
    ]
    cols = rows[0].split(",")
    return abs(float(rows[-1].split(",")[cols.index("energy_balance_residual")]))


def main() -> int:
    args = parse_args()
    dts = [args.dt0 / 2**k for k in range(args.levels)]
    with tempfile.TemporaryDirectory() as tmp:
        residuals = [final_balance(Path(tmp), args, dt) for dt in dts]
    print(f"{'dt':>12s} {'|balance residual|':>20s} {'ratio':>8s}")
    prev = None
    for dt, res in zip(dts, residuals):
        ratio = "" if prev is None else f"{prev / res:8.2f}"
        print(f"{dt:12.2e} {res:20.6e} {ratio:>8s}")
        prev = res
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
