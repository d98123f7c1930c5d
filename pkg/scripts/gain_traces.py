"""Gain traces of x(n+1) = a(n) x(1) + f(n) for several decay sequences a.

An (l^p, l^q) gain stays bounded exactly when a lies in l^q, so the traces
separate the sequences by summability.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field

from delaystab import builtin
from delaystab.analysis import lplq_gain, probe_responses


@dataclass
class TraceConfig:
    sequences: list = field(default_factory=lambda: ["harmonic", "power:0.5", "power:2", "geometric:0.5"])
    pairs: list = field(default_factory=lambda: [(1.0, 1.0), (1.0, 2.0), (1.0, math.inf)])
    N: int = 400
    seed: int = 0


def run(cfg: TraceConfig):
    for a in cfg.sequences:
        s = builtin("ex6.1", a=a)
        resp = probe_responses(s, cfg.N, cfg.seed)
        for p, q in cfg.pairs:
            g = lplq_gain(s, p, q, cfg.N, responses=resp)
            for H, v in g.growth_trace:
                yield a, p, q, H, v, g.bounded


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-N", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["a", "p", "q", "horizon", "gain", "bounded"])
    for row in run(TraceConfig(N=a.N, seed=a.seed)):
        w.writerow(row)


if __name__ == "__main__":
    main()
