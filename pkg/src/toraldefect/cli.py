"""Command-line front end: ``toraldefect <subcommand> [flags]``.

Each subcommand writes its artifacts into ``--output-dir`` atomically.  JSON
artifacts carry a ``meta`` block (version, config hash, seed, tolerances);
CSV artifacts keep their exact headers and get a ``.meta.json`` sidecar.
Wall-clock timings go to ``run.log`` so that artifacts are byte-reproducible.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

from . import io
from .errors import ToralDefectError

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def _check_radius(s: float) -> None:
    if not (0 < s < 0.5):
        raise UsageError("radius out of range")


def _emit_json(args, name: str, body: dict) -> str:
    path = os.path.join(args.output_dir, name)
    io.write_json(path, {"meta": args.meta, **body})
    return path


def _emit_csv(args, name: str, header, rows) -> str:
    path = os.path.join(args.output_dir, name)
    io.atomic_write(path, io.csv_text(header, rows))
    io.write_json(path + ".meta.json", {"meta": args.meta, "file": name})
    return path


# --- subcommands ---------------------------------------------------------------------------


def cmd_lattice(args) -> bool:
    from . import lattice

    if args.n < 1:
        raise UsageError("n must be positive")
    level = lattice.enumerate_lattice_points(args.n)
    body = {"level": level.to_dict(), "is_sum_of_two_squares": lattice.is_sum_of_two_squares(args.n)}
    if not level.is_empty:
        body["angular_measure"] = lattice.angular_measure(level).to_dict()
        body["correlations"] = [
            lattice.correlation_set(level, l, tuple_cap=args.tuple_cap).to_dict() for l in range(1, args.lmax + 1)
        ]
        if args.epsilon is not None:
            body["axioms"] = [r.to_dict() for r in lattice.axiom_scan([level], args.epsilon, max(2, min(args.lmax, 6)))]
    _emit_json(args, f"lattice_n{args.n}.json", body)
    return True


def cmd_variance(args) -> bool:
    from . import gaussian, lattice

    if args.batch:
        reports = gaussian.run_batch(args.batch)
        _emit_json(args, "variance_batch.json", {"reports": [r.to_dict() for r in reports]})
        return all(r.value >= r.lower_bound for r in reports)
    _check_radius(args.s)
    level = lattice.enumerate_lattice_points(args.n)
    rep = gaussian.analytic_variance(level, args.s, args.K)
    ok = rep.value >= rep.lower_bound
    if args.quadrature:
        rep.quadrature = gaussian.arcsin_variance_quadrature(level, args.s)
        ok &= abs(rep.value - rep.quadrature) <= rep.tail_bound + io.TOLERANCES["variance_check_abs"]
    _emit_json(args, f"variance_n{args.n}_s{args.s:g}_K{args.K}.json", {"report": rep.to_dict(), "checks_passed": ok})
    return ok


def cmd_mc(args) -> bool:
    from . import arw_sim, lattice

    _check_radius(args.s)
    level = lattice.enumerate_lattice_points(args.n)
    stem = f"mc_n{args.n}_s{args.s:g}_seed{args.seed}"
    if args.samples < 100:
        raise UsageError("need at least 100 samples")
    d = arw_sim.mc_defects(level, args.s, args.samples, args.seed, args.grid, args.threads)
    rep = arw_sim.report_from_defects(level, args.s, d, args.seed, args.grid)
    if args.per_sample:
        _emit_csv(args, stem + "_samples.csv", ["index", "defect"], [(i, float(v)) for i, v in enumerate(d)])
    ok = abs(rep.mean) <= 3 * rep.mean_stderr
    if rep.analytic_reference is not None:
        slack = 3 * rep.variance_stderr + rep.analytic_tail + 2 * rep.delta_grid
        ok &= rep.analytic_reference - slack <= rep.variance <= rep.analytic_reference + slack
    _emit_json(args, stem + ".json", {"report": rep.to_dict(), "checks_passed": bool(ok)})
    return bool(ok) or not args.check


def cmd_spatial(args) -> bool:
    from . import lattice, spatial

    s_values = _floats(args.s)
    for s in s_values:
        _check_radius(s)
    level = lattice.enumerate_lattice_points(args.n)
    wave = spatial.bourgain_wave(level, seed=args.seed, index=args.index)
    fields = [spatial.spatial_defect_field(wave, s, args.centers, args.grid) for s in s_values]
    rows = [(f.s, f.s * math.sqrt(level.n), f.spatial_variance) for f in fields]
    ok = all(abs(f.spatial_mean) <= 2 * f.delta_grid for f in fields)
    stem = f"spatial_n{args.n}_seed{args.seed}"
    if args.format == "csv":
        _emit_csv(args, stem + ".csv", ["s", "T", "var"], rows)
    else:
        _emit_json(args, stem + ".json", {"fields": [f.to_dict() for f in fields], "checks_passed": ok})
    return ok or not args.check


def cmd_hex(args) -> bool:
    from . import hexagonal

    reports = [hexagonal.hex_defect_square(R, args.mesh, args.method) for R in _floats(args.R)]
    _emit_json(args, f"hex_{args.method}.json", {"reports": [r.to_dict() for r in reports]})
    return True


def cmd_table1(args) -> bool:
    from . import hexagonal

    reports = [hexagonal.hex_defect_square(R, args.mesh, args.method) for R in _floats(args.R)]
    rows = [(r.R, r.integral, r.density) for r in reports]
    _emit_csv(args, "table1.csv", ["R", "integral", "density"], rows)
    if not args.check:
        return True
    ok = True
    for r in reports:
        ref = hexagonal.REFERENCE_INTEGRALS.get(r.R)
        if ref is None:
            continue
        value, tol = ref
        if abs(r.integral - value) > tol:
            print(f"R={r.R:g}: integral {r.integral:.6f} differs from reference {value:.6f} by more than {tol}", file=sys.stderr)
            ok = False
    return ok


def cmd_certify(args) -> bool:
    from . import hexagonal

    cert = hexagonal.certify_sign_counts(args.N)
    body = cert.to_dict()
    body.update(pos=cert.pos_stable, neg=cert.neg_stable)
    _emit_json(args, f"certify_N{args.N}.json", {"certificate": body})
    return cert.certified or not args.check


def cmd_pell(args) -> bool:
    from . import hexagonal

    sols = hexagonal.pell_solutions(args.count)
    rows = []
    for sol in sols:
        e = hexagonal.pell_angle_errors(sol)
        rows.append({**sol.to_dict(), "angle_errors": list(e), "scaled_errors": [x * math.sqrt(sol.n) for x in e]})
    body = {"solutions": rows}
    ok = True
    if args.variance_T:
        checks = []
        for sol in sols:
            s_values = [T / math.sqrt(sol.n) for T in _floats(args.variance_T)]
            if any(s >= 0.5 for s in s_values):
                checks.append({"n": sol.n, "skipped": "radius out of range"})
                continue
            res = hexagonal.nonvanishing_variance_check(sol, s_values, bourgain_waves=args.bourgain, seed=args.seed)
            checks.append({"n": sol.n, "rows": [r.__dict__ for r in res]})
            ok &= all(r.passes for r in res)
        body["variance_checks"] = checks
        body["eps0"] = hexagonal.EPS0
    _emit_json(args, f"pell_{args.count}.json", body)
    return ok


# --- parser ---------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--output-dir", default=".")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--config", default=None, help="key=value file; flags override it")
    common.add_argument("--check", action="store_true", help="exit 1 if the run's checks fail")

    p = argparse.ArgumentParser(prog="toraldefect", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("lattice", parents=[common])
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--lmax", type=int, default=4)
    q.add_argument("--epsilon", type=float, default=None)
    q.add_argument("--tuple-cap", type=int, default=0)
    q.set_defaults(func=cmd_lattice)

    q = sub.add_parser("variance", parents=[common])
    q.add_argument("--n", type=int, default=5)
    q.add_argument("--s", type=float, default=0.2)
    q.add_argument("--K", type=int, default=3)
    q.add_argument("--quadrature", action="store_true")
    q.add_argument("--batch", default=None, help="CSV with header n,s,K")
    q.set_defaults(func=cmd_variance)

    q = sub.add_parser("mc", parents=[common])
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--s", type=float, required=True)
    q.add_argument("--samples", type=int, default=10_000)
    q.add_argument("--grid", type=int, default=256)
    q.add_argument("--per-sample", action="store_true")
    q.set_defaults(func=cmd_mc)

    q = sub.add_parser("spatial", parents=[common])
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--s", required=True, help="comma-separated radii")
    q.add_argument("--index", type=int, default=0)
    q.add_argument("--centers", type=int, default=128)
    q.add_argument("--grid", type=int, default=1024)
    q.set_defaults(func=cmd_spatial)

    for name, func in (("hex", cmd_hex), ("table1", cmd_table1)):
        q = sub.add_parser(name, parents=[common])
        q.add_argument("--R", default="5,15,25,35")
        q.add_argument("--mesh", type=int, default=256)
        q.add_argument("--method", choices=("certified", "grid_sign", "row_exact"), default="certified")
        q.set_defaults(func=func)

    q = sub.add_parser("certify", parents=[common])
    q.add_argument("--N", type=int, default=80)
    q.set_defaults(func=cmd_certify)

    q = sub.add_parser("pell", parents=[common])
    q.add_argument("--count", type=int, default=10)
    q.add_argument("--variance-T", default=None, help="comma-separated values of s sqrt(n)")
    q.add_argument("--bourgain", type=int, default=0)
    q.set_defaults(func=cmd_pell)
    return p


def _read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {raw.strip()}")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        conf = _read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        for k in conf:
            if k not in known or k in ("config", "help"):
                raise UsageError(f"unknown config key {k!r}")
        defaults = {}
        for k, v in conf.items():
            act = known[k]
            if act.const is True:  # store_true
                defaults[k] = v.lower() in ("1", "true", "yes")
            else:
                defaults[k] = act.type(v) if act.type else v
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    config = {k: v for k, v in vars(args).items() if k not in ("func", "output_dir", "config")}
    args.meta = io.run_metadata(args.command, config, args.seed)
    t0 = time.time()
    try:
        ok = args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ToralDefectError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED if isinstance(exc, ToralDefectError) else EXIT_USAGE
    elapsed = time.time() - t0
    os.makedirs(args.output_dir, exist_ok=True)
    with open(os.path.join(args.output_dir, "run.log"), "a") as fh:
        fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {args.command} {args.meta['config_hash'][:12]} {elapsed:.3f}s ok={ok}\n")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
