"""
Command-line front end: ``anisotorus {bounds,spectrum,determinant,lynorm}``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error,
3 resource limit.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import bounds as B
from .determinant import PeriodicOrbitError, determinant_series, periodic_point_count, resonance_match, zeros_in_disc
from .determinant import enumerate_periodic
from .fourier import AnisoParams
from .io import (
    ConfigError, RunDirectory, dump_matrix, read_config, write_bound_report, write_csv,
    write_determinant, write_eigenvalues, write_growth,
)
from .lasota_yorke import bound_comparison, norm_growth
from .transfer import (
    MAX_N, MemoryBudgetError, OperatorKind, assemble_galerkin, essential_radius_check, spectrum,
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3
ORDER_TOL = 1e-10


def _tag(p, s, t=None):
    out = f"p{p:g}_s{s:g}"
    return out if t is None else f"{out}_t{t:g}"


def make_kind(name, t):
    return OperatorKind(name, t if name in ("L_t", "M_t") else None)


def kind_bound(kind, tmap, exps, t, n_max, grid):
    """The essential-radius bound matching an operator kind on W^{p,q,t}."""
    if kind.name == "L":
        return B.thm_bound_L(tmap, exps, t, n_max, grid)
    if kind.name == "M":
        return B.thm_bound_M(tmap, exps, t, n_max, grid)
    if kind.name == "L_t":
        return B.appendix_bound_Lt(tmap, exps, n_max, grid)
    return B.appendix_bound_Mt(tmap, exps, n_max, grid)


def _formula_report(name, tmap, exps, t, cfg):
    n, g = cfg.n_max, cfg.grid
    return {
        "rho_infty": lambda: B.rho_infty(tmap, exps, n, g),
        "rho_one": lambda: B.rho_one(tmap, exps, n, g),
        "thm1": lambda: B.thm_bound_L(tmap, exps, t, n, g),
        "thm2": lambda: B.thm_bound_M(tmap, exps, t, n, g),
        "propL1_u": lambda: B.prop_bound_L1(tmap, exps, t, n, g, "unstable-det"),
        "propL1_s": lambda: B.prop_bound_L1(tmap, exps, t, n, g, "stable-det"),
        "propL12": lambda: B.prop_bound_L12(tmap, exps, t, n, g),
        "appendix_Lt": lambda: B.appendix_bound_Lt(tmap, exps, n, g),
        "appendix_Mt": lambda: B.appendix_bound_Mt(tmap, exps, n, g),
    }[name]()


T_DEPENDENT = {"thm1", "thm2", "propL1_u", "propL1_s", "propL12"}


def cmd_bounds(cfg, run):
    tmap = cfg.tmap
    ok = True
    summary = []
    for p, s in cfg.pairs:
        exps = B.ExponentPair(p, s)
        r_inf = B.rho_infty(tmap, exps, cfg.n_max, cfg.grid)
        r_one = B.rho_one(tmap, exps, cfg.n_max, cfg.grid)
        for raw_one, raw_inf, label in ((r_one.values, r_inf.values, "grid"),
                                        (r_one.values_refined, r_inf.values_refined, "refined grid")):
            good = bool(np.all(raw_one <= raw_inf + ORDER_TOL))
            ok &= good
            run.add_verdict(f"{'PASS' if good else 'FAIL'}: rho_one <= rho_infty per n on {label}, {_tag(p, s)}")
        cache = {"rho_infty": r_inf, "rho_one": r_one}
        for name in cfg.formulas:
            for t in (cfg.ts if name in T_DEPENDENT else (None,)):
                rep = cache[name] if name in cache else _formula_report(name, tmap, exps, t, cfg)
                write_bound_report(run.file(f"bounds_{name}_{_tag(p, s, t)}.csv"), rep)
                summary.append((name, p, s, "" if t is None else t, rep.limit, rep.raw_limit))
    write_csv(run.file("summary.csv"), ["formula", "p", "s", "t", "limit", "raw_limit"], summary)
    return ok


def _spectrum_budget(cfg):
    top = cfg.N + cfg.refine
    if top > MAX_N:
        raise MemoryBudgetError(f"N + refine = {top} exceeds the dense budget N <= {MAX_N}")


def cmd_spectrum(cfg, run):
    tmap = cfg.tmap
    kind = make_kind(cfg.kind, 2.0)
    ok = True
    for p, s in cfg.pairs:
        exps = B.ExponentPair(p, s)
        params = AnisoParams.from_ps(tmap, p, s, 2.0)
        gm = assemble_galerkin(kind, tmap, params, cfg.N)
        eigs = spectrum(gm)
        # only eigenvalues of the refined matrix enter the stability check
        refined = spectrum(assemble_galerkin(kind, tmap, params, cfg.N + cfg.refine), n_residual=0)
        bound = kind_bound(kind, tmap, exps, 2.0, cfg.n_max, cfg.grid)
        check = essential_radius_check(eigs, bound, cfg.margin, refined)
        ok &= check.passed
        tag = _tag(p, s)
        write_eigenvalues(run.file(f"eigenvalues_{tag}.csv"), eigs, cfg.N, kind, p, params.q, 2.0)
        write_eigenvalues(run.file(f"eigenvalues_{tag}_N{cfg.N + cfg.refine}.csv"), refined,
                          cfg.N + cfg.refine, kind, p, params.q, 2.0)
        if cfg.options.get("dump_matrix", False):
            dump_matrix(run.file(f"matrix_{tag}.bin"), gm)
        run.add_verdict(f"{tag} bound {bound.limit:.10g}: " + check.summary())
    return ok


def cmd_determinant(cfg, run):
    tmap = cfg.tmap
    ok = True
    for n in range(1, cfg.N_tr + 1):
        data = enumerate_periodic(tmap, n)
        good = data.residual < 1e-10
        if tmap.is_linear:
            good &= data.count == periodic_point_count(tmap.base.matrix, n)
        ok &= bool(good)
        if not good:
            run.add_verdict(f"FAIL: periodic points of period {n} (residual {data.residual:.2e})")
    series = determinant_series(tmap, cfg.N_tr)
    p, s = cfg.pairs[0]
    radius = B.kitaev_disc_radius(tmap, (p, s), cfg.n_max, cfg.grid)
    zeros = zeros_in_disc(series, radius)
    write_determinant(run.file("determinant.csv"), run.file("determinant_zeros.csv"), series, zeros)
    run.add_verdict(f"disc radius {radius:.10g}, {len(zeros)} zero(s)")
    if cfg.options.get("match", True) and zeros:
        params = AnisoParams.from_ps(tmap, p, s, 2.0)
        eigs = spectrum(assemble_galerkin(make_kind("L", None), tmap, params, cfg.N))
        match = resonance_match(zeros, eigs, radius)
        for z, g, gap in match.pairs:
            run.add_verdict(f"zero {z.real:.12g}{z.imag:+.3g}i <-> eigenvalue {g.real:.12g}{g.imag:+.3g}i gap {gap:.2e}")
        for g in match.unmatched:
            run.add_verdict(f"flag: eigenvalue {g.real:.6g}{g.imag:+.3g}i inside 1/radius has no zero")
        ok &= not match.mismatches
    return ok


def cmd_lynorm(cfg, run):
    tmap = cfg.tmap
    ok = True
    seed = 0 if cfg.seed is None else cfg.seed
    for p, s in cfg.pairs:
        exps = B.ExponentPair(p, s)
        for t in cfg.ts:
            kind = make_kind(cfg.kind, t)
            params = AnisoParams.from_ps(tmap, p, s, t)
            bound = kind_bound(kind, tmap, exps, t, cfg.n_max, cfg.grid)
            rec = norm_growth(kind, tmap, params, None, cfg.n_growth, N=cfg.N, seed=seed,
                              deflate_above=bound.limit)
            verdict = bound_comparison(rec, bound, cfg.margin)
            ok &= verdict.passed
            write_growth(run.file(f"growth_{kind.name}_{_tag(p, s, t)}.csv"), rec)
            run.add_verdict(f"{_tag(p, s, t)} {kind}: " + verdict.summary())
    return ok


COMMANDS = {"bounds": cmd_bounds, "spectrum": cmd_spectrum,
            "determinant": cmd_determinant, "lynorm": cmd_lynorm}


def build_parser():
    ap = argparse.ArgumentParser(prog="anisotorus", description=__doc__.strip().splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="TOML run configuration")
    ap.add_argument("--out", default="runs", help="root directory for run outputs")
    ap.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the config; default 0)")
    ap.add_argument("--threads", type=int, default=None, help="BLAS thread limit")
    return ap


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        cfg = read_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed", "must be an unsigned 64-bit integer")
            cfg = cfg.with_seed(args.seed)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads", "must be positive")
    except (OSError, ConfigError) as exc:
        print(f"anisotorus: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "spectrum":
            _spectrum_budget(cfg)
    except MemoryBudgetError as exc:
        print(f"anisotorus: {exc}", file=sys.stderr)
        return EXIT_RESOURCE

    from threadpoolctl import threadpool_limits
    start = time.perf_counter()
    run = RunDirectory(args.out, cfg, args.command, argv)
    try:
        with threadpool_limits(limits=args.threads):
            ok = COMMANDS[args.command](cfg, run)
    except (MemoryBudgetError, PeriodicOrbitError) as exc:
        run.add_verdict(f"resource: {exc}")
        run.finish("resource-limit", time.perf_counter() - start)
        print(f"anisotorus: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    run.finish("complete", time.perf_counter() - start)
    for line in run.manifest["verdicts"]:
        print(line)
    print(f"results in {run.path}")
    return EXIT_OK if ok else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
