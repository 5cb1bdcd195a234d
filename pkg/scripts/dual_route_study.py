"""Residue route vs matrix-sign route.

Part 1 samples random SPD points and reports agreement, involution residuals
and their growth with ||b0||.  Part 2 follows a family of media whose
right-half-plane roots coalesce (isotropic + gamma * anisotropy) and shows
that the residue formulas stay continuous through the coalescence flag.
"""

import argparse

import numpy as np

from wavesplit.medium import MediumSpec, random_spd
from wavesplit.splitting import matrix_sign, splitting_from_residues
from wavesplit.symbols import system_matrix


def random_sweep(n, seed):
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        e, m = random_spd(rng), random_spd(rng)
        xi = rng.normal(size=2) * 10 ** rng.uniform(-1, 1)
        s = complex(rng.uniform(0.1, 3), 2 * rng.normal())
        a1 = system_matrix(e, m, xi, s)
        R, _ = splitting_from_residues(a1, MediumSpec(e, m).strip_tau(s.real / 2))
        X, _ = matrix_sign(a1)
        rows.append((np.linalg.norm(X), np.abs(R - X).max(),
                     np.linalg.norm(R @ R - np.eye(4)), np.linalg.norm(X @ X - np.eye(4))))
    rows = np.array(rows)
    print(f"random points: {n}")
    print(f"  max |b0_res - b0_sign|      {rows[:, 1].max():.2e}")
    print(f"  max involution (residue)    {rows[:, 2].max():.2e}")
    print(f"  max involution (sign)       {rows[:, 3].max():.2e}")
    print("  residue involution by ||b0||_F bucket:")
    for lo, hi in ((0, 10), (10, 50), (50, 200), (200, np.inf)):
        sel = (rows[:, 0] >= lo) & (rows[:, 0] < hi)
        if sel.any():
            print(f"    [{lo:>4}, {hi:>4}): n={sel.sum():5d}  max {rows[sel, 2].max():.2e}")


def coalescence_family(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(3, 3))
    g = g + g.T
    xi, s = np.array([0.7, -0.4]), 1.1 + 0.3j
    print("\ncoalescence family eps = 2 I + gamma * G, mu = I")
    print(f"  {'gamma':>8} {'flag+':>6} {'|lam1-lam2|':>12} {'|b0_res - b0_sign|':>20}")
    for gamma in 10.0 ** np.arange(-2, -14, -1):
        e = 2 * np.eye(3) + gamma * g
        a1 = system_matrix(e, np.eye(3), xi, s)
        R, roots = splitting_from_residues(a1, MediumSpec(e, np.eye(3)).strip_tau(s.real / 2))
        X, _ = matrix_sign(a1)
        gap = abs(roots.plus[0] - roots.plus[1])
        print(f"  {gamma:8.0e} {str(roots.coalesced_plus):>6} {gap:12.2e} {np.abs(R - X).max():20.2e}")


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    random_sweep(args.n, args.seed)
    coalescence_family(args.seed)


if __name__ == "__main__":
    main()
