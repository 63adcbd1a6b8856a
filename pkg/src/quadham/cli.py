"""Command-line entry point.

Exit codes: 0 ok, 1 input error, 2 no definite pencil, 3 non-finite state,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from quadham import documents
from quadham.dynamics import IntegratorConfig, integrate, verify_equivalence_many
from quadham.errors import NoDefiniteCombination, NonFinite, NotUnimodular, StepSizeError
from quadham.normal_form import AffineMap3, normalize_general
from quadham.poisson import realization, realization_deviation

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_PENCIL = 2
EXIT_NON_FINITE = 3
EXIT_VERIFY_FAILED = 4

VERIFY_TOL = 1e-6
REALIZE_POINTS = 100


class InputError(Exception):
    pass


def _floats(text: str, count: int, flag: str) -> list:
    parts = text.split(",")
    if len(parts) != count:
        raise InputError(f"{flag} expects {count} comma-separated numbers, got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise InputError(f"{flag}: {exc}") from None
    if not all(np.isfinite(vals)):
        raise InputError(f"{flag}: values must be finite")
    return vals


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_normalize(args) -> int:
    spec = documents.read_spec(args.spec)
    nf = normalize_general(spec)
    _write_text(args.out, documents.dumps_normal_form(nf))
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = documents.read_spec(args.spec)
    u0 = _floats(args.u0, 3, "--u0")
    try:
        cfg = IntegratorConfig(method=args.method, dt=args.dt, t_end=args.t_end)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    traj = integrate(spec, u0, cfg)
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "u1", "u2", "u3", "C", "H"])
        for t, u, c, h in zip(traj.times, traj.states, traj.casimir_log, traj.hamiltonian_log):
            w.writerow([repr(float(x)) for x in (t, *u, c, h)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.trials < 1:
        raise InputError("--trials must be at least 1")
    spec = documents.read_spec(args.spec)
    try:
        cfg = IntegratorConfig(method=args.method, dt=args.dt, t_end=args.t_end)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    nf = normalize_general(spec)
    if args.inject_offset:
        nf = nf.with_map(AffineMap3(nf.map.M, nf.map.c + args.inject_offset))
    rng = np.random.default_rng(args.seed)
    u0s = rng.uniform(-1.0, 1.0, size=(args.trials, 3))
    reports = verify_equivalence_many([spec] * args.trials, [nf] * args.trials, u0s, cfg, VERIFY_TOL)
    print(f"seed {args.seed}  trials {args.trials}  method {cfg.method}  dt {cfg.dt}  t_end {cfg.t_end}")
    for i, (u0, r) in enumerate(zip(u0s, reports)):
        status = "ok" if r.passed else "FAIL"
        print(
            f"trial {i:4d}  u0 [{u0[0]: .6f} {u0[1]: .6f} {u0[2]: .6f}]  "
            f"max_state_error {r.max_state_error:.3e}  {status}"
        )
    n_fail = sum(not r.passed for r in reports)
    worst = max(r.max_state_error for r in reports)
    print(f"summary: {args.trials - n_fail}/{args.trials} passed, worst max_state_error {worst:.3e}, tol {VERIFY_TOL:g}")
    return EXIT_OK if n_fail == 0 else EXIT_VERIFY_FAILED


def cmd_realize(args) -> int:
    spec = documents.read_spec(args.spec)
    m = np.array(_floats(args.matrix, 4, "--matrix")).reshape(2, 2)
    r = realization(spec, m)
    rng = np.random.default_rng(args.seed)
    pts = rng.uniform(-1.0, 1.0, size=(REALIZE_POINTS, 3))
    dev = float(np.max(realization_deviation(spec, r, pts)))
    out = {
        "matrix": m.ravel().tolist(),
        "casimir": {"Q": list(r.casimir.Q.entries), "q": r.casimir.q.tolist()},
        "hamiltonian": {"Q": list(r.hamiltonian.Q.entries), "q": r.hamiltonian.q.tolist()},
        "seed": args.seed,
        "points": REALIZE_POINTS,
        "max_field_deviation": dev,
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="quadham",
        description="Normal forms of quadratic Hamiltonian systems u' = (Ku+k) x (Au+a).",
    )
    sub = p.add_subparsers(dest="command", required=True)

    n = sub.add_parser("normalize", help="write the normal form of a spec as JSON")
    n.add_argument("spec")
    n.add_argument("out", help="output path, or - for stdout")
    n.set_defaults(func=cmd_normalize)

    s = sub.add_parser("simulate", help="integrate a spec and write a CSV trajectory")
    s.add_argument("spec")
    s.add_argument("out", help="output path, or - for stdout")
    s.add_argument("--u0", required=True, help="initial state x,y,z")
    s.add_argument("--t-end", type=float, default=10.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--method", choices=["rk4", "midpoint"], default="rk4")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="check the normal form against random flows")
    v.add_argument("spec")
    v.add_argument("--trials", type=int, default=10)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--t-end", type=float, default=5.0)
    v.add_argument("--dt", type=float, default=1e-3)
    v.add_argument("--method", choices=["rk4", "midpoint"], default="rk4")
    # negative-control hook: shifts the map's offset by this amount
    v.add_argument("--inject-offset", type=float, default=0.0, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("realize", help="print an SL(2,R) Hamilton-Poisson realization")
    r.add_argument("spec")
    r.add_argument("--matrix", required=True, help="a,b,c,d with ad - bc = 1")
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_realize)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, documents.DocumentError, NotUnimodular) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NoDefiniteCombination as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_PENCIL
    except (NonFinite, StepSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NON_FINITE


if __name__ == "__main__":
    sys.exit(main())
