"""Null-edge normality check with the true partition.

    python scripts/normality_check.py --reps 500 --tuning fixed cv

For each replication the statistic sqrt(n)(estimate - truth)/std is taken at
the edge (0, K-1), which is far outside the band. Prints moments and a KS
p-value against N(0, 1) per graph and tuning rule; optionally saves the raw
statistics as .npy.
"""
import argparse
import math
from pathlib import Path

import numpy as np
from scipy import stats

from cggm.experiment import ExperimentConfig, _child_seed, cross_validate, simulate_replication
from cggm.inference import clime_column, default_lambda, edge_std, nuisance_projection, one_step_edge, second_moment


def null_statistics(cfg: ExperimentConfig, tuning: str):
    t, k = 0, cfg.K - 1
    out = {"latent": [], "average": []}
    for i in range(cfg.replications):
        seed = cfg.base_seed + i
        model, x = simulate_replication(cfg, seed)
        g = model.partition
        for kind in out:
            if tuning == "cv":
                lam, lam_p = cross_validate(x, g, kind, cfg.folds, seed=_child_seed(seed, 4))
            else:
                lam = lam_p = default_lambda(cfg.K, cfg.n)
            M = second_moment(x, g, kind)
            ck, ct = clime_column(M, k, lam), clime_column(M, t, lam)
            est = one_step_edge(M, ck, ct, nuisance_projection(M, t, lam_p), t, k)
            sd = edge_std(ck.beta[t], ct.beta[t], ck.beta[k])
            truth = model.theta_star[t, k] if kind == "latent" else model.omega_star[t, k]
            out[kind].append(math.sqrt(cfg.n) * (est - truth) / sd)
    return {kind: np.array(v) for kind, v in out.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--K", type=int, default=10)
    ap.add_argument("--m", type=int, default=8)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tuning", nargs="+", choices=["fixed", "cv"], default=["fixed", "cv"])
    ap.add_argument("--save", type=Path)
    args = ap.parse_args()

    cfg = ExperimentConfig(d=args.K * args.m, n=args.n, K=args.K, replications=args.reps,
                           base_seed=args.seed, true_partition=True)
    for tuning in args.tuning:
        res = null_statistics(cfg, tuning)
        for kind, v in res.items():
            ks = stats.kstest(v, "norm")
            print(f"{tuning:5s} {kind:8s} mean={v.mean():+.3f} sd={v.std():.3f} "
                  f"KS={ks.statistic:.4f} p={ks.pvalue:.4f}")
            if args.save:
                args.save.mkdir(parents=True, exist_ok=True)
                np.save(args.save / f"null_{tuning}_{kind}.npy", v)


if __name__ == "__main__":
    main()
