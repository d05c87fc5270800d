"""Hidden-basis recovery rate and ladder sign easing, printed as short tables."""

import argparse

import numpy as np

from qworkbench import experiments as ex
from qworkbench.rng import make_rng


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--skip-ladder", action="store_true")
    args = ap.parse_args()

    hid = ex.fig_11_2a(make_rng(args.seed), args.instances, tuple(args.dims))
    for d in args.dims:
        print(f"d={d}: recovered {hid.summary[f'recovered_d{d}']}/{args.instances}")
    if args.skip_ladder:
        return
    lad = ex.fig_11_4(make_rng(args.seed))
    print(f"{'jperp':>6} {'jx':>5} {'improve':>8} {'logS_before':>12} {'logS_after':>11}")
    for jp, jx, imp, b, a in zip(lad.column("jperp"), lad.column("jx"), lad.column("improvement"),
                                 lad.column("log_inv_sign_before"), lad.column("log_inv_sign_after")):
        print(f"{jp:6.2f} {jx:5.2f} {imp:8.2f} {b:12.4f} {a:11.4f}")
    line = lad.column("jx") == 1.0
    print(f"mean improvement on jx = jpar: {np.mean(lad.column('improvement')[line]):.2f}, "
          f"elsewhere: {np.mean(lad.column('improvement')[~line]):.2f}")


if __name__ == "__main__":
    main()
