"""Command line entry point: ``cggm simulate | infer | cluster``.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .clustering import cluster
from .errors import ConfigError, ParseError, SingletonCluster
from .experiment import (
    config_from_mapping,
    cross_validate,
    export_graph,
    ingest_csv,
    read_config_file,
    read_csv,
    read_partition,
    run_experiment,
    write_experiment,
    write_partition,
)
from .fdr import select
from .inference import default_lambda, infer_graph

EXIT_CONFIG = 2
EXIT_DATA = 3


def _kinds(graph: str):
    return ("latent", "average") if graph == "both" else (graph,)


def cmd_simulate(args) -> int:
    values = read_config_file(args.config) if args.config else {}
    for key in ("d", "n", "K", "m", "topology", "c", "replications", "folds", "tuning"):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = str(val)
    if args.seed is not None:
        values["seed"] = str(args.seed)
    if args.alpha:
        values["alpha"] = ",".join(str(a) for a in args.alpha)
    if args.method:
        values["method"] = args.method
    if args.graph:
        values["graph"] = args.graph
    if args.true_partition:
        values["true_partition"] = "true"
    cfg = config_from_mapping(values)

    def progress(rec):
        logging.info("replication %d done in %.2fs%s", rec.index, rec.runtime,
                     f" ({rec.error})" if rec.error else "")

    result = run_experiment(cfg, workers=args.workers, progress=progress)
    write_experiment(result, args.out)
    for row in result.table:
        print(f"{row['graph_kind']:8s} {row['method']} alpha={row['alpha']:<5} "
              f"FDR={row['mean_fdr']:.4f} power={row['mean_power']:.4f} fail={row['n_fail']}")
    return 0


def cmd_cluster(args) -> int:
    x = ingest_csv(args.input)
    _, header = read_csv(args.input)
    g = cluster(x, alpha=args.threshold, alpha0=args.alpha0)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_partition(g, out, header)
    print(f"{g.K} clusters over {g.d} variables; sizes {g.sizes.tolist()}")
    return 0


def cmd_infer(args) -> int:
    x = ingest_csv(args.input)
    g = read_partition(args.partition) if args.partition else cluster(x, alpha0=args.alpha0)
    if g.d != x.d:
        raise ParseError(f"partition covers {g.d} variables but data has {x.d}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_partition(g, out / "partition.csv")
    methods = ["BY", "BH"] if args.method == "both" else [args.method.upper()]
    alphas = args.alpha or [0.05, 0.1, 0.2]
    summary = {"version": __version__, "n": x.n, "d": x.d, "K": g.K, "sizes": g.sizes.tolist(), "graphs": {}}
    for kind in _kinds(args.graph):
        if args.cv:
            lam, lam_p = cross_validate(x, g, kind, folds=args.cv, seed=args.seed or 0)
        else:
            lam = args.lam if args.lam is not None else default_lambda(g.K, x.n)
            lam_p = lam
        edges = infer_graph(x, g, kind, lam, lam_p)
        with open(out / f"edges_{kind}.csv", "w") as fh:
            fh.write("t,k,estimate,std,stat,excluded\n")
            for e in edges:
                fh.write(f"{e.t},{e.k},{e.estimate!r},{e.std!r},{e.stat!r},{int(e.excluded)}\n")
        summary["graphs"][kind] = {"lambda": float(lam), "lambda_prime": float(lam_p), "selections": []}
        for method in methods:
            for alpha in alphas:
                rep = select(edges, alpha, method)
                stem = f"selected_{kind}_{method}_{alpha}"
                export_graph(rep, g, out / f"{stem}.csv", "edge_list", edges)
                export_graph(rep, g, out / f"{stem}.dot", "dot", edges)
                summary["graphs"][kind]["selections"].append(
                    {"method": method, "alpha": alpha, "cutoff": rep.cutoff, "n_rejections": rep.n_rejections}
                )
                print(f"{kind:8s} {method} alpha={alpha:<5} cutoff={rep.cutoff:.3f} edges={rep.n_rejections}")
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cggm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the synthetic FDR/power experiment")
    s.add_argument("--config", type=Path)
    s.add_argument("--d", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--K", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--topology", choices=["scalefree", "hub", "band3"])
    s.add_argument("--c", type=float)
    s.add_argument("--replications", type=int)
    s.add_argument("--tuning", choices=["fixed", "cv"])
    s.add_argument("--folds", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--alpha", type=float, nargs="+")
    s.add_argument("--method", type=str.upper, choices=["BY", "BH"])
    s.add_argument("--graph", choices=["latent", "average", "both"])
    s.add_argument("--true-partition", action="store_true")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", type=Path, default=Path("results"))
    s.set_defaults(func=cmd_simulate)

    i = sub.add_parser("infer", help="estimate graphs from a CSV of observations")
    i.add_argument("input", type=Path)
    i.add_argument("--partition", type=Path, help="CSV whose last column holds cluster labels")
    i.add_argument("--alpha", type=float, nargs="+")
    i.add_argument("--method", choices=["by", "bh", "both", "BY", "BH"], default="by")
    i.add_argument("--graph", choices=["latent", "average", "both"], default="both")
    i.add_argument("--lambda", dest="lam", type=float)
    i.add_argument("--cv", type=int, metavar="FOLDS")
    i.add_argument("--alpha0", type=float, default=2.0)
    i.add_argument("--seed", type=int)
    i.add_argument("--out", type=Path, default=Path("results"))
    i.set_defaults(func=cmd_infer)

    c = sub.add_parser("cluster", help="estimate a variable partition from a CSV")
    c.add_argument("input", type=Path)
    c.add_argument("--threshold", type=float)
    c.add_argument("--alpha0", type=float, default=2.0)
    c.add_argument("--out", type=Path, default=Path("partition.csv"))
    c.set_defaults(func=cmd_cluster)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, SingletonCluster, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
