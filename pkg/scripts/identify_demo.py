"""Recover kernel diagonals from input-output experiments and compare to truth."""
from __future__ import annotations

import argparse
import math
from dataclasses import dataclass

import numpy as np

from delaystab import builtin
from delaystab.analysis import blackbox_from, kernel_bound_violations, kernel_identify, lplq_gain
from delaystab.registry import random_system


@dataclass
class IdentifyConfig:
    n0: int = 3
    k_max: int = 5
    n_random: int = 20
    seed: int = 0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n0", type=int, default=3)
    ap.add_argument("--k-max", type=int, default=5)
    ap.add_argument("--n-random", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)
    cfg = IdentifyConfig(a.n0, a.k_max, a.n_random, a.seed)

    rng = np.random.default_rng(cfg.seed)
    named = [("ex6.3", builtin("ex6.3")), ("sec7", builtin("sec7"))]
    randoms = [(f"random[{i}]", random_system(rng, order=4)) for i in range(cfg.n_random)]
    print(f"{'system':<12} {'max error':>10} {'gain G':>9} {'bound ok':>8}")
    for name, s in named + randoms:
        mats = kernel_identify(blackbox_from(s), cfg.n0, cfg.k_max, s.dim)
        truth = np.array([s.L(cfg.n0 + k, k) for k in range(cfg.k_max + 1)])
        G = lplq_gain(s, math.inf, math.inf, 32).value
        ok = not kernel_bound_violations(mats, G)
        print(f"{name:<12} {np.max(np.abs(mats - truth)):>10.2e} {G:>9.4g} {str(ok):>8}")


if __name__ == "__main__":
    main()
