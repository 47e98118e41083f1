"""Command-line entry point: ``felixrank <subcommand> ...``.

Exit codes: 0 success, 1 usage or input error, 2 infeasible LP in strict
mode, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .bvn import DecompositionError, decompose
from .core import ExposureModel
from .evaluation import evaluate, mean_report
from .felix import FelixConfig, ZScoreOutlierPredicate, run_felix
from .formats import (FormatError, atomic_write, metrics_to_csv, mrp_to_dict, read_catalogs,
                      read_mrps, read_policies, sensitivity_to_csv, write_mrps,
                      write_policies)
from .lp import INFEASIBLE, OPTIMAL, SLACK, STRICT, SolverError, fair_mrp
from .simulation import (KINDS, FeatureDistribution, sensitivity_candidates,
                         sensitivity_iterations)

log = logging.getLogger("felixrank")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Infeasible(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="felixrank", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"felixrank {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--log-base", type=float, default=2.0,
                        help="base of the logarithm in v(j) = 1/log(1+j)")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--deterministic", action="store_true",
                        help="force single-threaded execution")
        if seed:
            sp.add_argument("--seed", type=int, default=42)

    def catalog_opts(sp):
        sp.add_argument("--normalize", action="store_true",
                        help="rescale merits of each query to [merit-floor, 1]")
        sp.add_argument("--merit-floor", type=float, default=1e-4)

    s = sub.add_parser("solve", help="catalog CSV -> MRP JSON")
    s.add_argument("--input", required=True)
    s.add_argument("--k", type=int)
    s.add_argument("--mode", choices=[STRICT, SLACK], default=STRICT)
    s.add_argument("--out", required=True)
    catalog_opts(s)
    common(s, seed=False)

    s = sub.add_parser("decompose", help="MRP JSON -> policy JSON")
    s.add_argument("--mrp", required=True)
    s.add_argument("--out", required=True)
    common(s)

    s = sub.add_parser("felix", help="catalog (+ MRP) -> re-sampled policy JSON")
    s.add_argument("--input", required=True)
    s.add_argument("--mrp")
    s.add_argument("--k", type=int)
    s.add_argument("--iterations", type=int, default=20)
    s.add_argument("--lambda", dest="lam", type=float, default=2.5)
    s.add_argument("--mode", choices=[STRICT, SLACK], default=STRICT)
    s.add_argument("--out", required=True)
    catalog_opts(s)
    common(s)

    s = sub.add_parser("sample", help="policy JSON -> sampled rankings, one per line")
    s.add_argument("--policy", required=True)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--out")
    common(s)

    s = sub.add_parser("eval", help="policy JSON + catalog CSV -> metrics CSV")
    s.add_argument("--policy", required=True)
    s.add_argument("--items", required=True)
    s.add_argument("--lambda", dest="lam", type=float, default=2.5)
    s.add_argument("--out", required=True)
    catalog_opts(s)
    common(s, seed=False)

    s = sub.add_parser("simulate", help="sensitivity sweep -> CSV and figure")
    s.add_argument("--experiment", choices=["candidates", "iterations"], default="candidates")
    s.add_argument("--dists", default=",".join(KINDS))
    s.add_argument("--n-values", type=_ints, default=[20, 40, 60, 80, 100])
    s.add_argument("--iter-values", type=_ints, default=[1, 2, 5, 10, 15, 20])
    s.add_argument("--n", type=int, default=100, help="candidate count for --experiment iterations")
    s.add_argument("--queries", type=int, default=100)
    s.add_argument("--k", type=int, default=10)
    s.add_argument("--iterations", type=int, default=20)
    s.add_argument("--lambda", dest="lam", type=float, default=2.5)
    s.add_argument("--lognormal-sigma", type=float, default=1.0)
    s.add_argument("--powerlaw-shape", type=float, default=1.5)
    s.add_argument("--out", required=True)
    s.add_argument("--figure", help="figure path (default: next to --out, .png)")
    s.add_argument("--no-figure", action="store_true")
    common(s)
    return p


def _check_paths(args):
    for name in ("input", "mrp", "policy", "items"):
        path = getattr(args, name, None)
        if path is not None and not os.path.isfile(path):
            raise UsageError(f"--{name}: no such file {path!r}")
    for name in ("out", "figure"):
        path = getattr(args, name, None)
        if path:
            d = os.path.dirname(os.path.abspath(path))
            if not os.path.isdir(d):
                raise UsageError(f"--{name}: directory {d!r} does not exist")


def _model(k, base):
    return ExposureModel.log_discount(k, base)


def _pmap(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _solve_one(job):
    cat, k, base, mode = job
    return fair_mrp(cat, _model(k or cat.n, base), mode)


def _solve_all(catalogs, args, threads):
    reports = _pmap(_solve_one, [(c, args.k, args.log_base, args.mode) for c in catalogs],
                    threads)
    bad = [r.query_id for r in reports if r.status == INFEASIBLE]
    if bad:
        notes = "; ".join(f"{r.query_id}: {r.note}" for r in reports if r.status == INFEASIBLE)
        raise Infeasible(f"infeasible fairness LP for query_id {', '.join(bad)} ({notes})")
    other = [r for r in reports if r.status != OPTIMAL]
    if other:
        raise SolverError(f"query {other[0].query_id}: status {other[0].status}")
    return reports


def cmd_solve(args, threads):
    catalogs = read_catalogs(args.input, args.normalize, args.merit_floor)
    reports = _solve_all(catalogs, args, threads)
    write_mrps(args.out, [mrp_to_dict(r.mrp, r.query_id, r.objective_value,
                                      r.fairness_residual) for r in reports])
    for r in reports:
        log.info("%s: objective %.6g, fairness residual %.3g", r.query_id,
                 r.objective_value, r.fairness_residual)


def cmd_decompose(args, threads):
    mrps = read_mrps(args.mrp)
    pols = [decompose(P, seed=args.seed, query_id=qid) for qid, P in mrps]
    write_policies(args.out, pols)


def _felix_one(job):
    P, cat, k, lam, iterations, seed = job
    return run_felix(P, cat, ZScoreOutlierPredicate(lam, k), FelixConfig(iterations, seed))


def cmd_felix(args, threads):
    catalogs = read_catalogs(args.input, args.normalize, args.merit_floor)
    if args.mrp:
        mrps = dict(read_mrps(args.mrp))
        missing = [c.query_id for c in catalogs if c.query_id not in mrps]
        if missing:
            raise UsageError(f"{args.mrp} has no matrix for query_id {', '.join(missing)} "
                             f"of {args.input}")
        pairs = [(mrps[c.query_id], c) for c in catalogs]
        for P, c in pairs:
            if P.n != c.n:
                raise UsageError(f"query {c.query_id}: {args.mrp} has {P.n} rows but "
                                 f"{args.input} lists {c.n} items")
    else:
        reports = _solve_all(catalogs, args, threads)
        pairs = [(r.mrp, c) for r, c in zip(reports, catalogs)]
    jobs = [(P, c, P.k, args.lam, args.iterations, args.seed) for P, c in pairs]
    pols = _pmap(_felix_one, jobs, threads)
    for p in pols:
        log.info("%s: unknown mass %s", p.query_id,
                 " ".join(f"{w:.4f}" for w in p.unknown_mass_trace))
    write_policies(args.out, pols)


def cmd_sample(args, threads):
    pols = read_policies(args.policy)
    rng = np.random.default_rng(args.seed)
    lines = []
    for pol in pols:
        idx = rng.choice(len(pol), size=args.count, p=pol.probs / pol.probs.sum())
        for m in idx:
            lines.append(f"{pol.query_id}\t{' '.join(map(str, pol.entries[m][1]))}")
    text = "\n".join(lines) + "\n"
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def cmd_eval(args, threads):
    pols = {p.query_id: p for p in read_policies(args.policy)}
    catalogs = read_catalogs(args.items, args.normalize, args.merit_floor)
    named = []
    for cat in catalogs:
        pol = pols.get(cat.query_id)
        if pol is None:
            raise UsageError(f"{args.policy} has no policy for query_id {cat.query_id} "
                             f"of {args.items}")
        if pol.n != cat.n:
            raise UsageError(f"query {cat.query_id}: {args.policy} ranks {pol.n} items but "
                             f"{args.items} lists {cat.n}")
        named.append((cat.query_id, evaluate(pol, cat, _model(pol.k, args.log_base), args.lam)))
    atomic_write(args.out, metrics_to_csv(named, mean_report([r for _, r in named])))


def cmd_simulate(args, threads):
    kinds = [d.strip() for d in args.dists.split(",") if d.strip()]
    try:
        dists = [FeatureDistribution(d, args.lognormal_sigma, args.powerlaw_shape) for d in kinds]
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.experiment == "candidates":
        rows = sensitivity_candidates(dists, args.n_values, args.queries, args.k,
                                      args.iterations, args.seed, args.lam, threads)
        xlabel = "Number of items"
    else:
        rows = sensitivity_iterations(dists, args.iter_values, args.n, args.queries, args.k,
                                      args.seed, args.lam, threads)
        xlabel = "iter"
    atomic_write(args.out, sensitivity_to_csv(rows))
    for r in rows:
        log.info("%s x=%d: %.2f%% (%d used, %d skipped)", r.distribution, r.x,
                 r.relative_reduction_pct, r.queries_used, r.queries_skipped)
    if not args.no_figure:
        from .plotting import plot_sensitivity
        fig = args.figure or os.path.splitext(args.out)[0] + ".png"
        plot_sensitivity(rows, fig, xlabel)


COMMANDS = {"solve": cmd_solve, "decompose": cmd_decompose, "felix": cmd_felix,
            "sample": cmd_sample, "eval": cmd_eval, "simulate": cmd_simulate}


def _write_manifest(args, threads):
    out = getattr(args, "out", None)
    if not out:
        return
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose",)}
    config["threads"] = threads
    manifest = {"tool": "felixrank", "version": __version__,
                "subcommand": args.subcommand, "config": config}
    atomic_write(out + ".manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.subcommand is None:
            raise UsageError("missing subcommand; see felixrank --help")
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        threads = 1 if args.deterministic else max(1, args.threads)
        for name in ("k", "iterations", "count", "queries"):
            val = getattr(args, name, None)
            if val is not None and val < 1:
                raise UsageError(f"--{name} must be >= 1")
        _check_paths(args)
        COMMANDS[args.subcommand](args, threads)
        _write_manifest(args, threads)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Infeasible as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverError, DecompositionError, FloatingPointError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
