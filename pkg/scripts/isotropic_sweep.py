"""Closed-form isotropic check over a grid of (eps, mu, s); prints a table of max relative errors."""

import argparse
import itertools

from wavesplit.config import GridSpec
from wavesplit.medium import isotropic
from wavesplit.pipeline import run_validate_isotropic


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=32, help="modes per direction")
    p.add_argument("--L", type=float, default=20.0, help="grid period")
    args = p.parse_args()
    s_list = [1.0, 2 + 1j, 0.3 + 3j]
    keys = ["b0_sign", "b0_residue", "s_plus", "s_minus", "roots", "y_plus", "y_minus"]
    print("eps   mu    s          " + " ".join(f"{k:>10}" for k in keys))
    for eps, mu in itertools.product((0.5, 1.0, 4.0), repeat=2):
        rep = run_validate_isotropic(isotropic(eps, mu), GridSpec(args.n, args.n, args.L, args.L), s_list)
        for res in rep["results"]:
            s = complex(*res["s"])
            errs = res["max_rel_error"]
            print(f"{eps:<5} {mu:<5} {str(s):<10} " + " ".join(f"{errs[k]:10.2e}" for k in keys))


if __name__ == "__main__":
    main()
