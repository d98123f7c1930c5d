"""Command-line interface: ``delaystab <command> ...``."""
from __future__ import annotations

import argparse
import json
import math
import sys as _sys
from pathlib import Path

import numpy as np

from . import analysis
from .io import SpecError, load_spec, to_json
from .phase_space import PhaseVector
from .registry import REGISTRY
from .solver import solve


def _real(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity", "sup"):
        return math.inf
    return float(t)


def _param(text: str):
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def _system(args):
    if args.spec and args.builtin:
        raise SpecError("give either --spec or --builtin, not both")
    if args.spec:
        try:
            text = Path(args.spec).read_text()
        except OSError as exc:
            raise SpecError(f"cannot read spec: {exc}") from exc
        return load_spec(text)
    if args.builtin:
        params = dict(args.param or [])
        dim = int(params.get("dim", 1))
        return load_spec({"dimension": dim, "kernel": {"type": "builtin", "name": args.builtin, "params": params}})
    raise SpecError("a system is required: --spec PATH or --builtin NAME")


def _vector(text: str, d: int) -> np.ndarray:
    vals = [float(v) for v in text.split(",") if v.strip()]
    if len(vals) == 1 and d > 1:
        vals = vals * d
    if len(vals) != d:
        raise SpecError(f"expected {d} components, got {text!r}")
    return np.array(vals)


def _phi(items, d: int) -> PhaseVector:
    supp = {}
    for item in items or []:
        depth, sep, vals = item.partition("=")
        if not sep:
            depth, vals = "0", item
        supp[int(depth)] = _vector(vals, d)
    return PhaseVector(d, supp)


def _forcing(text: str | None, d: int, tau: int, N: int) -> np.ndarray:
    F = np.zeros((N, d))
    if not text:
        return F
    if text.startswith("impulse"):
        _, _, rest = text.partition("@")
        t = int(rest) if rest else tau
        if 0 <= t < N:
            F[t, 0] = 1.0
        return F
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        arr = np.array(json.loads(text), dtype=float)
    except (json.JSONDecodeError, ValueError) as exc:
        raise SpecError(f"forcing must be 'impulse[@t]', a JSON array, or @file: {exc}") from exc
    arr = arr.reshape(len(arr), -1) if arr.ndim else arr.reshape(1, 1)
    if arr.shape[1] != d:
        raise SpecError(f"forcing rows must have {d} components")
    # forcing arrays start at time tau
    m = max(0, min(N - tau, len(arr)))
    F[tau : tau + m] = arr[:m]
    return F


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        _sys.stdout.write(text)


def cmd_simulate(args):
    sys = _system(args)
    phi = _phi(args.phi, sys.dim)
    F = _forcing(args.forcing, sys.dim, args.tau, args.N)
    _emit(solve(sys, args.tau, phi, F, args.N).to_csv(), args.out)
    return 0


def cmd_gain(args):
    sys = _system(args)
    g = analysis.lplq_gain(sys, args.p, args.q, args.N, args.seed, workers=args.workers)
    _emit(to_json(g.to_dict()), args.out)
    return 0


def cmd_profile(args):
    sys = _system(args)
    prof = analysis.decay_profile(sys, args.gamma, args.N, args.J, args.max_lag, norm=args.norm)
    _emit(prof.to_csv(), args.out)
    return 0


def cmd_classify(args):
    sys = _system(args)
    rep = analysis.classify(sys, args.gamma, args.p, args.q, args.N, args.J, args.seed,
                            gamma_grid=args.gamma_grid or (), workers=args.workers)
    _emit(to_json(rep.to_dict()), args.out)
    return 0


def cmd_identify(args):
    sys = _system(args)
    mats = analysis.kernel_identify(analysis.blackbox_from(sys), args.n0, args.k_max, sys.dim)
    doc = {
        "n0": args.n0,
        "k_max": args.k_max,
        "kernel": [{"n": args.n0 + k, "k": k, "matrix": mats[k].tolist()} for k in range(args.k_max + 1)],
    }
    _emit(to_json(doc), args.out)
    return 0


def cmd_verify(args):
    from .verify import run_all

    ok = run_all(stream=_sys.stdout, quick=args.quick)
    return 0 if ok else 1


def cmd_examples(args):
    lines = []
    for name, e in REGISTRY.items():
        lines.append(f"{name}: {e.description}")
        for regime, verdict in e.expected_verdicts.items():
            lines.append(f"    [{regime}] {verdict}")
        lines.append(f"    params: {', '.join(e.params)}; oracle: {'yes' if e.oracle else 'no'}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="delaystab", description="Delay systems with infinite memory: simulate and test stability.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, system=True):
        if system:
            p.add_argument("--spec", help="system spec JSON file")
            p.add_argument("--builtin", help="registry system name (see `examples`)")
            p.add_argument("--param", action="append", type=_param, metavar="KEY=VALUE",
                           help="builtin parameter, repeatable (e.g. delta=1, a=harmonic)")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=None, help="threads for probe batches (default: $DELAYSTAB_WORKERS or 1)")

    p = sub.add_parser("simulate", help="solve the system, CSV trajectory")
    common(p)
    p.add_argument("--tau", type=int, default=0)
    p.add_argument("--phi", action="append", metavar="DEPTH=V1,V2,...", help="initial prehistory coordinate")
    p.add_argument("--forcing", help="'impulse[@t]', JSON array starting at tau, or @file")
    p.add_argument("-N", type=int, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gain", help="(l^p, l^q) gain estimate, JSON")
    common(p)
    p.add_argument("-p", type=_real, default=math.inf)
    p.add_argument("-q", type=_real, default=math.inf)
    p.add_argument("-N", type=int, default=200)
    p.set_defaults(func=cmd_gain)

    p = sub.add_parser("profile", help="decay profile, CSV")
    common(p)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("-N", type=int, default=200)
    p.add_argument("-J", type=int, default=50)
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--norm", choices=("state", "phase"), default="state")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("classify", help="stability report, JSON")
    common(p)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("-p", type=_real, default=2.0)
    p.add_argument("-q", type=_real, default=2.0)
    p.add_argument("-N", type=int, default=200)
    p.add_argument("-J", type=int, default=100)
    p.add_argument("--gamma-grid", type=float, nargs="*")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("identify", help="recover kernel matrices from input-output runs, JSON")
    common(p)
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("verify", help="run the acceptance and invariant suites")
    common(p, system=False)
    p.add_argument("--quick", action="store_true", help="smaller sample counts")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("examples", help="list registry systems and expected verdicts")
    common(p, system=False)
    p.set_defaults(func=cmd_examples)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
