"""Command-line interface: ``run``, ``verify``, ``operators`` and ``twin``.

Exit codes: 0 success, 1 verification (or run) failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import Recorder, twin_run_compare
from .io import RunManifest, TelemetryWriter, parse_config, write_snapshot
from .solver import CFLError, ConfigError, InitialCondition, run

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="key=value config file; flags override it")
    p.add_argument("--L-max", dest="L_max", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--dealias", dest="dealias_fraction", type=float)
    p.add_argument("--sample-every", dest="sample_every", type=int)
    p.add_argument("--seed", type=int)


def _config_from(args, **extra):
    keys = ("L_max", "dt", "t_end", "alpha", "nu", "dealias_fraction", "sample_every", "seed")
    flags = {k: getattr(args, k, None) for k in keys}
    flags.update({k: v for k, v in extra.items() if v is not None})
    return parse_config(args.config, **flags)


def _zonal_error(ic: InitialCondition, state, config) -> float | None:
    if ic.kind != "zonal":
        return None
    from .transform import SpectralField, build_grid, synthesize

    l, amp = ic.params
    lam = (l * (l + 1.0)) ** (0.5 * config.alpha) + config.nu * l * (l + 1.0)
    exact = SpectralField.harmonic(config.L_max, l, 0, amplitude=amp * np.exp(-lam * state.time))
    g = build_grid(config.L_max)
    return float(np.max(np.abs(synthesize(state.theta, g).values - synthesize(exact, g).values)))


def cmd_run(args) -> int:
    config = _config_from(args)
    ic = InitialCondition.parse(args.ic)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(asdict(config), str(ic), _now(), version=__version__)
    rec = Recorder(config.alpha)
    snaps = []
    csv_path = out / "telemetry.csv"

    with TelemetryWriter(csv_path) as tw:

        def sink(state):
            rec(state)
            tw.write(rec.records[-1])
            n = len(rec.records) - 1
            if state.step_index == 0 or (args.snapshot_every and n % args.snapshot_every == 0):
                snaps.append(write_snapshot(state, out / f"snapshot_{state.step_index:08d}.sqg2", config.alpha))

        try:
            final = run(ic, config, [sink])
            status = EXIT_OK
        except CFLError as exc:
            print(f"aborted: {exc}", file=sys.stderr)
            final, status = exc.state, EXIT_FAIL
    snaps.append(write_snapshot(final, out / "final.sqg2", config.alpha))
    manifest.add(csv_path)
    for p in dict.fromkeys(snaps):
        manifest.add(p)
    manifest.end_time = _now()
    manifest.write(out / "manifest.json")
    last = rec.records[-1]
    print(f"t={final.time:.6g} steps={final.step_index} l2={last.l2:.6e} linf={last.linf:.6e} grad_sup={last.grad_sup:.6e}")
    err = _zonal_error(ic, final, config)
    if err is not None:
        print(f"final-error: {err:.3e}")
    print(f"wrote {out}")
    return status


def cmd_verify(args) -> int:
    from .acceptance import run_all

    results = run_all(quick=args.quick, only=set(args.only) if args.only else None)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_FAIL if failed else EXIT_OK


def cmd_operators(args) -> int:
    from .fractional import lambda_power, lambda_semigroup, lambda_singular, singular_kernel
    from .geometry import random_unit_vectors
    from .transform import SpectralField, evaluate

    if not 0 <= args.order <= args.degree:
        raise ConfigError("need 0 <= order <= degree")
    f = SpectralField.harmonic(args.degree, args.degree, args.order, "real")
    pts = random_unit_vectors(args.points, args.seed)
    ref = evaluate(lambda_power(f, args.alpha), pts)
    scale = np.max(np.abs(ref))
    sg = np.max(np.abs(lambda_semigroup(f, pts, args.alpha) - ref)) / scale
    print(f"Lambda^{args.alpha:g} on Re Y_({args.degree},{args.order}) at {args.points} points, relative max error")
    print(f"semigroup: {sg:.3e}")
    print(f"{'quad_L':>8} {'eps':>10} {'conformal':>12} {'leading':>12}")
    for q in args.quads:
        errs = [
            np.max(np.abs(lambda_singular(f, pts, singular_kernel(args.alpha, q, variant=v)) - ref)) / scale
            for v in ("conformal", "leading")
        ]
        print(f"{q:>8d} {2.0 / q:>10.4g} {errs[0]:>12.4e} {errs[1]:>12.4e}")
    return EXIT_OK


def cmd_twin(args) -> int:
    ca = _config_from(args, L_max=args.L_a, nu=args.nu_a)
    cb = _config_from(args, L_max=args.L_b, nu=args.nu_b)
    rep = twin_run_compare(ca, cb, InitialCondition.parse(args.ic))
    print(f"K = {rep.K:.4g}  S = {rep.source:.4g}")
    print(f"{'time':>8} {'distance':>12} {'envelope':>12}")
    for t, d, e in zip(rep.times, rep.distance, rep.envelope):
        print(f"{t:>8.4g} {d:>12.4e} {e:>12.4e}")
    print("within Gronwall envelope" if rep.passed else "envelope exceeded")
    return EXIT_OK if rep.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sqgsphere", description="Critical SQG on the sphere.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate and write telemetry, snapshots and a manifest")
    _add_config_flags(r)
    r.add_argument("--ic", default="random:1:10:1.0", help="zonal:L[:amp] | random:lo:hi[:amp[:seed]] | pair:sep:width[:amp]")
    r.add_argument("--out", default="sqg_run", help="output directory")
    r.add_argument("--snapshot-every", type=int, default=0, help="snapshot every N samples (0: first and last only)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--quick", action="store_true", help="smaller samples and shorter runs, same tolerances")
    v.add_argument("--only", type=int, nargs="+", metavar="N")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("operators", help="compare the three Lambda^alpha evaluations")
    o.add_argument("--alpha", type=float, default=1.0)
    o.add_argument("--degree", type=int, default=5)
    o.add_argument("--order", type=int, default=3)
    o.add_argument("--points", type=int, default=10)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--quads", type=int, nargs="+", default=[64, 128, 256])
    o.set_defaults(func=cmd_operators)

    t = sub.add_parser("twin", help="compare two runs against a Gronwall envelope")
    _add_config_flags(t)
    t.add_argument("--ic", default="random:1:10:1.0")
    t.add_argument("--L-a", dest="L_a", type=int, default=32)
    t.add_argument("--L-b", dest="L_b", type=int, default=64)
    t.add_argument("--nu-a", dest="nu_a", type=float)
    t.add_argument("--nu-b", dest="nu_b", type=float)
    t.set_defaults(func=cmd_twin)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
