"""Command-line entry point: ``dedonder verify|momenta|theta|el``.

Exit codes: 0 all checks passed, 1 at least one check failed, 2 usage or
configuration error.  Tables use 1-based indices (x1..x4).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import dedonder_form as df
from . import euler_lagrange as el
from . import exprlang
from . import jet_space as js
from . import lagrangians as lg
from . import ostrogradski as og
from .scalar_taylor import ScalarDomainError
from .suites import SUITES, ConfigError, RunConfig, load_config, run_suite, set_tolerance

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _config(args) -> RunConfig:
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        cfg = load_config(text, source=str(path))
    else:
        cfg = RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "points", None) is not None:
        cfg.points = args.points
    for item in getattr(args, "tol_override", None) or []:
        if "=" not in item:
            raise ConfigError(f"--tol-override expects check=value, got {item!r}")
        key, val = item.split("=", 1)
        set_tolerance(cfg, key.strip(), val.strip())
    if getattr(args, "family", None):
        cfg.families = list(args.family)
    return cfg


def _point(text: str) -> np.ndarray:
    try:
        p = np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad point {text!r}") from exc
    if p.shape != (4,):
        raise ConfigError(f"a point needs 4 comma-separated coordinates, got {text!r}")
    return p


def _family_and_point(args):
    cfg = _config(args)
    fam = cfg.family(args.family_name)
    x = _point(args.x) if args.x else cfg.sample_points(fam, "cli", 1)[0]
    return cfg, fam, x


def _lagrangian(args, cfg, x):
    state = None
    if args.lagrangian == "hilbert+scalar":
        state, _ = lg.scalar_field_jet(cfg.field_expr, x)
    return lg.by_name(args.lagrangian, state, cfg.potential)


def _fmt(v: float) -> str:
    return repr(float(v))


def cmd_verify(args) -> int:
    cfg = _config(args)
    reports = run_suite(args.suite, cfg, timing=args.timing)
    lines = [r.to_json() for r in reports]
    if args.json:
        Path(args.json).write_text("".join(line + "\n" for line in lines))
    else:
        for line in lines:
            print(line)
    failed = [r for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed", file=sys.stderr)
    for r in failed:
        print(f"FAIL {r.check} [{r.label}] residual={r.residual:.3e} tol={r.tolerance:.1e}",
              file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_momenta(args) -> int:
    cfg, fam, x = _family_and_point(args)
    jet = js.prolong(fam, x)
    m = og.momenta_on_jet(_lagrangian(args, cfg, x), jet)
    p3, p4 = m.p3_full, m.p4_full
    print(f"{args.lagrangian} on {fam.name} at x = {', '.join(_fmt(v) for v in x)}")
    print("P3^{mu nu alpha}")
    for mu in range(4):
        for nu in range(mu, 4):
            print(f"  {mu + 1}{nu + 1}: " + "  ".join(_fmt(p3[mu, nu, a]) for a in range(4)))
    print("P4^{mu nu alpha beta}")
    for mu in range(4):
        for nu in range(mu, 4):
            for a in range(4):
                row = "  ".join(_fmt(p4[mu, nu, a, b]) for b in range(4))
                print(f"  {mu + 1}{nu + 1}{a + 1}: {row}")
    return EXIT_OK if np.all(np.isfinite(p3)) and np.all(np.isfinite(p4)) else EXIT_FAIL


def cmd_theta(args) -> int:
    cfg, fam, x = _family_and_point(args)
    jet = js.prolong(fam, x)
    if args.section:
        vectors = js.section_tangents(fam, x)
        kind = "section tangents"
    else:
        rng = cfg.rng("cli-theta")
        vectors = [js.JetTangentVector.random(rng) for _ in range(4)]
        kind = f"random vectors (seed {cfg.seed})"
    co = df.coefficients(_lagrangian(args, cfg, x), jet)
    value, scale = df.theta_eval(co, jet, vectors)
    print(f"{args.lagrangian} on {fam.name} at x = {', '.join(_fmt(v) for v in x)}; {kind}")
    print(f"Theta          {_fmt(value)}")
    if args.lagrangian == "hilbert":
        closed, _ = df.theta_hilbert_closed_eval(jet, vectors)
        print(f"Theta (closed) {_fmt(closed)}")
    print(f"term scale     {_fmt(scale)}")
    print(f"L              {_fmt(co.L)}")
    return EXIT_OK


def cmd_el(args) -> int:
    cfg, fam, x = _family_and_point(args)
    E = el.el_residual(_lagrangian(args, cfg, x), fam, x)
    G = el.einstein_tensor_density(fam, x)
    print(f"{args.lagrangian} on {fam.name} at x = {', '.join(_fmt(v) for v in x)}")
    print("pair  E^{mu nu}  sqrt(-g) G^{mu nu}")
    for r, (mu, nu) in enumerate(js.PAIRS):
        print(f"  {mu + 1}{nu + 1}  {_fmt(E.values[r])}  {_fmt(G[r])}")
    print(f"relative residual {E.relative:.3e} (term scale {E.scale:.3e})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dedonder",
                description="Numerical checks of the De Donder form for second-order gravity.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="run configuration file")
        sp.add_argument("--seed", type=int, help="random seed (overrides the config)")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=SUITES + ("all",))
    common(v)
    v.add_argument("--points", type=int, help="sample points per family")
    v.add_argument("--family", action="append", help="restrict to a metric family (repeatable)")
    v.add_argument("--tol-override", action="append", metavar="CHECK=VAL")
    v.add_argument("--json", metavar="OUT", help="write JSON-lines reports to a file")
    v.add_argument("--timing", action="store_true", help="include wall time in reports")
    v.set_defaults(func=cmd_verify)

    for name, func, help_ in (("momenta", cmd_momenta, "print the Hilbert momenta"),
                              ("theta", cmd_theta, "evaluate Theta on test vectors"),
                              ("el", cmd_el, "print the field-equation residual")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--family", dest="family_name", default="schwarzschild")
        sp.add_argument("--x", help="point as four comma-separated coordinates")
        sp.add_argument("--lagrangian", choices=lg.LAGRANGIAN_NAMES, default="hilbert",
                        help="hilbert+scalar couples the configured scalar field")
        common(sp)
        if name == "theta":
            sp.add_argument("--section", action="store_true",
                            help="use the section's tangent vectors")
        sp.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, exprlang.ExprError) as exc:
        print(f"dedonder: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScalarDomainError, js.SignatureError, ValueError) as exc:
        print(f"dedonder: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
