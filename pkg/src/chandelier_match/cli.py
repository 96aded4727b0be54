"""Command line entry point: ``chandelier-match <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or configuration, 3 budget exceeded,
4 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .count import WeightedHost, colorful_counts_batch, colorful_probability, signed_counts
from .exceptions import BudgetExceededError, InvariantError, ParameterError
from .matchers import PartialMatching, evaluate, match_by_threshold, seeded_gamma, seeded_match
from .model import complement_pair, make_rng, read_pair, sample_pair, write_pair
from .pipeline import (DEFAULTS, coerce, dump_report, format_config, format_sweep, read_config,
                       resolve, run_pipeline, run_sweep)
from .score import ScoreMatrix, phi_approx, phi_exact, threshold_data_driven, threshold_fixed
from .trees import RootedTreeShape, build_catalog, build_family, count_rooted_trees

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_INVARIANT = 0, 2, 3, 4


def _opt_int(s: str):
    return None if s.lower() in ("none", "inf") else int(s)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_pair(path, complement: bool):
    pair = read_pair(path)
    return complement_pair(pair) if complement else pair


# -- subcommands ------------------------------------------------------------

def cmd_generate(args) -> int:
    q = args.q
    if args.complement:
        if q <= 0.5:
            raise ParameterError("--complement expects q > 1/2")
        pair = complement_pair(sample_pair(args.n, 1.0 - q, args.rho, args.pi_mode, args.seed))
    else:
        pair = sample_pair(args.n, q, args.rho, args.pi_mode, args.seed)
    write_pair(pair, args.out)
    return EXIT_OK


def cmd_trees(args) -> int:
    if args.count_only:
        if args.max_aut is None:
            print(count_rooted_trees(args.edges))
        else:
            print(len(build_catalog(args.edges, args.max_aut)))
        return EXIT_OK
    catalog = build_catalog(args.edges, args.max_aut)
    _emit("".join(f"{shape}\n" for shape in catalog.bulbs), args.out)
    return EXIT_OK


def cmd_count(args) -> int:
    levels = [int(x) for x in args.tree.split(",")]
    shape = RootedTreeShape.from_levels(levels)
    pair = _load_pair(args.pair, False)
    G = pair.A if args.graph == "A" else pair.B
    q = pair.q if args.q is None else args.q
    host = WeightedHost.from_adjacency(G, q)
    if not 0 <= args.root < host.n:
        raise ParameterError(f"root {args.root} out of range for n={host.n}")
    exact = float(signed_counts(host, shape)[args.root])
    colors = make_rng(args.seed).integers(0, shape.edges + 1, size=(args.t, host.n))
    X = colorful_counts_batch(host, shape, colors)[:, args.root]
    r = colorful_probability(shape.edges)
    print(json.dumps({"tree": str(shape), "root": args.root, "exact": exact,
                      "estimate": float(X.mean() / r), "r": r, "t": args.t, "seed": args.seed}))
    return EXIT_OK


def cmd_score(args) -> int:
    pair = _load_pair(args.pair, args.complement)
    family = build_family(args.K, args.L, args.M, args.R)
    if args.exact:
        S = phi_exact(pair, family)
    else:
        S = phi_approx(pair, family, t=args.t, seed=args.seed, t_cap=args.t_cap)
    S.tau = threshold_data_driven(S) if args.auto_tau else threshold_fixed(S.mu, args.c)
    S.fingerprint = {**S.fingerprint, "pair": str(args.pair), "pair_seed": pair.seed,
                     "q": pair.q, "rho": pair.rho, "complement": args.complement}
    S.save(args.out)
    print(json.dumps({"out": str(args.out), "mu": S.mu, "tau": S.tau, "r": S.r, "t": S.t}))
    return EXIT_OK


def cmd_match(args) -> int:
    S = ScoreMatrix.load(args.scores)
    if args.tau is not None:
        tau = args.tau
    elif args.auto_tau or S.tau is None:
        tau = threshold_data_driven(S)
    else:
        tau = S.tau
    m = match_by_threshold(S, tau)
    header = f"# scores={args.scores} tau={tau!r} matched={len(m)}\n"
    _emit(header + "".join(f"{i} {m[i]}\n" for i in m.domain), args.out)
    return EXIT_OK


def cmd_seeded(args) -> int:
    pair = _load_pair(args.pair, False)
    seeds = PartialMatching.read(args.seeds, pair.n)
    q = pair.q if args.q is None else args.q
    gamma = seeded_gamma(pair.n, q) if pair.n >= 3 else None
    m = seeded_match(pair.A, pair.B, seeds, q=q, gamma=gamma)
    header = f"# pair={args.pair} seeds={args.seeds} q={q!r} gamma={gamma!r}\n"
    _emit(header + "".join(f"{i} {m[i]}\n" for i in m.domain), args.out)
    print(json.dumps(evaluate(m, pair.pi)), file=sys.stderr)
    return EXIT_OK


def _config_from(args, grid: bool) -> dict:
    cfg = read_config(args.config, grid=grid) if args.config else {}
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def cmd_pipeline(args) -> int:
    cfg = resolve(_config_from(args, grid=False))
    _emit(dump_report(run_pipeline(cfg)), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config_from(args, grid=True)
    cfg = {k: coerce(k, v, grid=True) for k, v in cfg.items()}
    rows = run_sweep(cfg)
    _emit(format_sweep(rows), args.out)
    if args.out:
        # configuration sidecar, directly reusable as --config
        Path(str(args.out) + ".config").write_text(format_config({**DEFAULTS, **cfg}))
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _add_config_flags(p, grid: bool) -> None:
    p.add_argument("--config", type=Path, help="flat key = value file with schema_version")
    for key, default in DEFAULTS.items():
        flag = "--" + key.replace("_", "-")
        if grid and key in ("n", "q", "rho"):
            p.add_argument(flag, dest=key, type=str, default=None, help="value or comma list")
        elif isinstance(default, bool):
            p.add_argument(flag, dest=key, type=str, default=None, metavar="BOOL")
        elif default is None or key == "t":
            p.add_argument(flag, dest=key, type=str, default=None, metavar="INT|none")
        else:
            p.add_argument(flag, dest=key, type=type(default), default=None)
    p.add_argument("-o", "--out", type=Path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chandelier-match",
                                     description="Match correlated random graphs with chandelier counts.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a correlated graph pair")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pi-mode", default="uniform", choices=("identity", "uniform"))
    p.add_argument("--complement", action="store_true",
                   help="for q > 1/2: sample at 1 - q and complement both graphs")
    p.add_argument("-o", "--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("trees", help="list or count rooted trees with K edges")
    p.add_argument("--edges", type=int, required=True)
    p.add_argument("--max-aut", type=_opt_int, default=None)
    p.add_argument("--count-only", action="store_true")
    p.add_argument("-o", "--out", type=Path)
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("count", help="exact and color-coded signed count at one root")
    p.add_argument("--tree", required=True, help="comma-separated level sequence, e.g. 0,1,1")
    p.add_argument("--root", type=int, required=True)
    p.add_argument("--pair", type=Path, required=True)
    p.add_argument("--graph", choices=("A", "B"), default="A")
    p.add_argument("--q", type=float)
    p.add_argument("--t", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("score", help="score matrix of a pair file")
    p.add_argument("--pair", type=Path, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--R", type=_opt_int, default=None)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--t", type=int)
    p.add_argument("--t-cap", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--complement", action="store_true")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--c", type=float, default=0.5)
    g.add_argument("--auto-tau", action="store_true")
    p.add_argument("-o", "--out", type=Path, required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("match", help="threshold matching from a score file")
    p.add_argument("--scores", type=Path, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--tau", type=float)
    g.add_argument("--auto-tau", action="store_true")
    p.add_argument("-o", "--out", type=Path)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("seeded", help="complete a seed matching by percolation")
    p.add_argument("--pair", type=Path, required=True)
    p.add_argument("--seeds", type=Path, required=True)
    p.add_argument("--q", type=float)
    p.add_argument("-o", "--out", type=Path)
    p.set_defaults(func=cmd_seeded)

    p = sub.add_parser("pipeline", help="generate, score, match, complete and evaluate")
    _add_config_flags(p, grid=False)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("sweep", help="grid over rho x q x n with repeated trials, CSV output")
    _add_config_flags(p, grid=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ParameterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
