"""Strip constant C0 along a lam_R sweep and sampled ellipticity constants of a medium.

Writes a CSV ``lam_R, C0`` (the bound decays monotonically to zero at the
strip edge) and prints the StripReport next to the measured root gap.
"""

import argparse
import csv
import json
import sys

import numpy as np

from wavesplit.config import load_medium
from wavesplit.spectrum import ellipticity_estimate, strip_bound_C0


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--medium", default="scripts/configs/aniso.yaml")
    p.add_argument("--sr", type=float, default=0.5)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    args = p.parse_args()
    m = load_medium(args.medium)
    edge = args.sr * np.sqrt(m.eps_hat1 * m.mu_hat1)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out)
    w.writerow(["lam_R", "C0"])
    for lr in np.linspace(0, edge, args.points)[:-1]:
        w.writerow([repr(float(lr)), repr(strip_bound_C0(args.sr, lr, m.eps_hat1, m.mu_hat1))])
    if args.out:
        out.close()
    rep = ellipticity_estimate(m, args.sr, args.samples)
    print(json.dumps(rep.to_dict(), indent=2), file=sys.stderr)


if __name__ == "__main__":
    main()
