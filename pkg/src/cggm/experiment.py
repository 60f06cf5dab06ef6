"""Simulation protocol, cross-validation, CSV ingestion and graph export."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import align_partition, cluster
from .errors import ConfigError, EmptyGrid, Infeasible, NonRectangular, NotConverged, ParseError
from .fdr import FdrReport, score, select
from .graphs import generate, ground_truth, precision_from_adjacency
from .inference import (
    GRAPH_KINDS,
    clime_column,
    default_lambda,
    infer_from_moment,
    nuisance_projection,
    second_moment,
)
from .model import Partition, SampleMatrix, _as_array, build_model, make_rng, sample

log = logging.getLogger(__name__)

TOPOLOGIES = ("scalefree", "hub", "band3")


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 100
    n: int = 800
    K: int = 20
    topology: str = "band3"
    c: float = 0.3
    alphas: tuple = (0.05, 0.1, 0.2)
    methods: tuple = ("BY", "BH")
    graph_kinds: tuple = ("latent", "average")
    replications: int = 100
    base_seed: int = 0
    tuning: str = "fixed"
    lam: float | None = None
    lam_prime: float | None = None
    folds: int = 5
    true_partition: bool = False
    cluster_alpha0: float = 2.0
    gamma_low: float = 0.25
    gamma_high: float = 0.5

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if self.K < 2 or self.d < 2 * self.K:
            raise ConfigError("need K >= 2 and at least two variables per cluster")
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"topology must be one of {TOPOLOGIES}")
        if self.c <= 0:
            raise ConfigError("c must be positive")
        if not self.alphas or any(not 0 < a < 1 for a in self.alphas):
            raise ConfigError("every alpha must lie in (0, 1)")
        if any(m not in ("BY", "BH") for m in self.methods):
            raise ConfigError("methods must be BY and/or BH")
        if any(g not in GRAPH_KINDS for g in self.graph_kinds):
            raise ConfigError(f"graph kinds must be among {GRAPH_KINDS}")
        if self.tuning not in ("fixed", "cv"):
            raise ConfigError("tuning must be 'fixed' or 'cv'")
        if self.tuning == "cv" and self.folds < 2:
            raise ConfigError("cv needs at least 2 folds")

    @property
    def m(self) -> int:
        return self.d // self.K


@dataclass
class ReplicationRecord:
    index: int
    seed: int
    exact_cluster_recovery: bool = False
    K_hat: int = 0
    cells: dict = field(default_factory=dict)  # (graph_kind, alpha, method) -> (fdr, power)
    selections: dict = field(default_factory=dict)  # same keys -> frozenset of edges
    runtime: float = 0.0
    error: str | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    table: list  # dict rows


def _child_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([int(seed), stream]).generate_state(1, dtype=np.uint64)[0])


def simulate_replication(config: ExperimentConfig, seed: int):
    """Model, truth and data for one replication seed."""
    truth_partition = Partition.round_robin(config.d, config.K)
    adj = generate(config.topology, config.K, _child_seed(seed, 1))
    theta = precision_from_adjacency(adj, config.c)
    gamma = make_rng(_child_seed(seed, 2)).uniform(config.gamma_low, config.gamma_high, config.d)
    model = build_model(truth_partition, theta, gamma)
    x = sample(model, config.n, _child_seed(seed, 3))
    return model, x


def run_replication(config: ExperimentConfig, index: int) -> ReplicationRecord:
    seed = config.base_seed + index
    rec = ReplicationRecord(index=index, seed=seed)
    t0 = time.perf_counter()
    try:
        model, x = simulate_replication(config, seed)
        truth = ground_truth(model)
        ref = model.partition
        if config.true_partition:
            g_hat = ref
        else:
            g_hat = cluster(x, alpha0=config.cluster_alpha0)
        align = align_partition(g_hat, ref)
        rec.exact_cluster_recovery = bool(align.exact_match)
        rec.K_hat = g_hat.K
        n_hyp = g_hat.K * (g_hat.K - 1) // 2
        for kind in config.graph_kinds:
            if config.tuning == "cv":
                lam, lam_p = cross_validate(x, g_hat, kind, config.folds, seed=_child_seed(seed, 4))
            else:
                lam = config.lam if config.lam is not None else default_lambda(g_hat.K, config.n)
                lam_p = config.lam_prime if config.lam_prime is not None else lam
            if kind == "latent":
                g_hat.require_min_size(2)
            M = second_moment(x, g_hat, kind)
            edges = infer_from_moment(M, config.n, kind, lam, lam_p)
            # read estimated labels in reference labels for scoring only
            relabelled = {}
            for e in edges:
                a, b = int(align.mapping[e.t]), int(align.mapping[e.k])
                relabelled[(min(a, b), max(a, b))] = e.stat
            for alpha in config.alphas:
                for method in config.methods:
                    rep = score(select(relabelled, alpha, method, n_hyp), truth, kind)
                    rec.cells[(kind, alpha, method)] = (rep.empirical_fdr, rep.empirical_power)
                    rec.selections[(kind, alpha, method)] = rep.selected
    except Exception as exc:  # recorded, excluded from aggregates
        log.warning("replication %d (seed %d) failed: %s", index, seed, exc)
        rec.error = f"{type(exc).__name__}: {exc}"
        rec.cells = {}
        rec.selections = {}
    rec.runtime = time.perf_counter() - t0
    return rec


def _run_one(args):
    return run_replication(*args)


def aggregate(config: ExperimentConfig, records) -> list:
    rows = []
    records = sorted(records, key=lambda r: r.index)
    n_fail = sum(r.error is not None for r in records)
    for kind in config.graph_kinds:
        for method in config.methods:
            for alpha in config.alphas:
                vals = [r.cells[(kind, alpha, method)] for r in records if r.error is None]
                fdr = float(np.mean([v[0] for v in vals])) if vals else math.nan
                power = float(np.mean([v[1] for v in vals])) if vals else math.nan
                rows.append(
                    dict(
                        graph_kind=kind,
                        method=method,
                        alpha=alpha,
                        topology=config.topology,
                        K=config.K,
                        m=config.m,
                        mean_fdr=fdr,
                        mean_power=power,
                        n_fail=n_fail,
                    )
                )
    return rows


def run_experiment(config: ExperimentConfig, workers: int = 1, progress=None) -> ExperimentResult:
    jobs = [(config, i) for i in range(config.replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        records = []
        for job in jobs:
            records.append(_run_one(job))
            if progress is not None:
                progress(records[-1])
    records.sort(key=lambda r: r.index)
    return ExperimentResult(config=config, records=records, table=aggregate(config, records))


def write_experiment(result: ExperimentResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cols = ["graph_kind", "method", "alpha", "topology", "K", "m", "mean_fdr", "mean_power", "n_fail"]
    with open(out / "aggregate.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(result.table)
    with open(out / "records.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "seed", "exact_cluster_recovery", "K_hat", "graph_kind", "alpha",
                    "method", "fdr", "power", "runtime", "error"])
        for r in result.records:
            if r.error is not None:
                w.writerow([r.index, r.seed, r.exact_cluster_recovery, r.K_hat, "", "", "", "", "",
                            f"{r.runtime:.4f}", r.error])
            for (kind, alpha, method), (fdr, power) in sorted(r.cells.items()):
                w.writerow([r.index, r.seed, r.exact_cluster_recovery, r.K_hat, kind, alpha, method,
                            fdr, power, f"{r.runtime:.4f}", ""])
    summary = {
        "version": __version__,
        "config": asdict(result.config),
        "n_replications": len(result.records),
        "n_fail": sum(r.error is not None for r in result.records),
        "cluster_recovery_rate": float(np.mean([r.exact_cluster_recovery for r in result.records])),
        "table": result.table,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=str))


# --------------------------------------------------------------------------- cross-validation


def default_grid(K: int, n: int) -> np.ndarray:
    return np.geomspace(0.05, 2.0, 8) * math.sqrt(math.log(max(K, n)) / n)


def _folds(n: int, folds: int, seed: int) -> list:
    perm = make_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def cross_validate(x, g_hat: Partition, graph_kind: str, folds: int = 5, grid=None, seed: int = 0,
                   per_column: bool = False, tie_prime: bool = True):
    """Choose (lam, lam') by held-out quadratic pseudo-risk.

    For each grid value the initial columns are fitted on the training
    folds and scored by 0.5 b^T M_val b - b_k on the held-out fold, averaged
    over folds (and over columns unless ``per_column``). With ``tie_prime``
    lam' = lam; otherwise lam' is chosen separately from the projection's
    own held-out risk 0.5 w^T M_val[-t,-t] w - w^T M_val[-t,t].
    """
    x = _as_array(x)
    n = x.shape[0]
    if folds < 2 or n < folds:
        raise ValueError("need 2 <= folds <= n")
    grid = default_grid(g_hat.K, n) if grid is None else np.asarray(list(grid), dtype=float)
    if grid.size == 0:
        raise EmptyGrid("empty tuning grid")
    K = g_hat.K
    split = _folds(n, folds, seed)
    risk = np.zeros((grid.size, K))
    risk_p = np.zeros((grid.size, K))
    for f, val in enumerate(split):
        train = np.setdiff1d(np.arange(n), val)
        M_tr = second_moment(x[train], g_hat, graph_kind)
        M_va = second_moment(x[val], g_hat, graph_kind)
        for i, lam in enumerate(grid):
            for k in range(K):
                try:
                    b = clime_column(M_tr, k, lam).beta
                    risk[i, k] += 0.5 * b @ M_va @ b - b[k]
                except (Infeasible, NotConverged):
                    risk[i, k] = np.inf
                if not tie_prime:
                    rest = np.delete(np.arange(K), k)
                    try:
                        w = nuisance_projection(M_tr, k, lam).w
                        Mr = M_va[np.ix_(rest, rest)]
                        risk_p[i, k] += 0.5 * w @ Mr @ w - w @ M_va[rest, k]
                    except (Infeasible, NotConverged):
                        risk_p[i, k] = np.inf
    if per_column:
        lam = grid[np.argmin(risk, axis=0)]
        lam_p = lam if tie_prime else grid[np.argmin(risk_p, axis=0)]
        return lam, lam_p
    lam = float(grid[np.argmin(risk.mean(axis=1))])
    lam_p = lam if tie_prime else float(grid[np.argmin(risk_p.mean(axis=1))])
    return lam, lam_p


# --------------------------------------------------------------------------- I/O


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv(path):
    """Parse a numeric CSV; returns (array, header or None). No centering."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", line=1)
    header = None
    start = 0
    if rows[0] and not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        start = 1
    data = []
    width = len(header) if header is not None else None
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not c.strip() for c in row):
            raise ParseError("blank line", line=lineno)
        if width is None:
            width = len(row)
        if len(row) != width:
            raise NonRectangular(f"expected {width} fields, found {len(row)}", line=lineno)
        vals = []
        for col, cell in enumerate(row, start=1):
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(f"non-numeric value {cell!r}", line=lineno, column=col) from None
        data.append(vals)
    if not data:
        raise ParseError("no data rows", line=start + 1)
    return np.array(data), header


def ingest_csv(path, center: bool = True) -> SampleMatrix:
    """Read observations-by-variables CSV; columns are centered (the model is mean zero)."""
    x, _ = read_csv(path)
    if x.shape[0] < 2:
        raise ParseError("need at least 2 observations", line=None)
    if center:
        x = x - x.mean(axis=0)
    return SampleMatrix(x)


def read_partition(path) -> Partition:
    """Labels from the last column; other columns (e.g. variable names) are ignored."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if rows and rows[0] and not _is_number(rows[0][-1]):
        rows, first = rows[1:], 2
    else:
        first = 1
    labels = []
    for lineno, row in enumerate(rows, start=first):
        if not row or not row[-1].strip():
            raise ParseError("blank line", line=lineno)
        try:
            labels.append(int(row[-1]))
        except ValueError:
            raise ParseError(f"bad cluster label {row[-1]!r}", line=lineno, column=len(row)) from None
    if not labels:
        raise ParseError("no labels", line=first)
    return Partition(labels)


def write_partition(g: Partition, path, names=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variable", "cluster"])
        for j, lab in enumerate(g.labels):
            w.writerow([names[j] if names else j, int(lab)])


def export_graph(report: FdrReport, g_hat: Partition, path, fmt: str = "edge_list", inferences=None) -> None:
    """Write the selected edges as ``t,k,estimate,stat`` lines or as an undirected dot graph."""
    info = {(e.t, e.k): e for e in inferences or []}
    edges = sorted(report.selected)
    try:
        with open(path, "w", newline="") as fh:
            if fmt == "edge_list":
                fh.write("t,k,estimate,stat\n")
                for t, k in edges:
                    e = info.get((t, k))
                    est = repr(e.estimate) if e else "nan"
                    stat = repr(e.stat) if e else "nan"
                    fh.write(f"{t},{k},{est},{stat}\n")
            elif fmt == "dot":
                fh.write("graph G {\n")
                for k in range(g_hat.K):
                    fh.write(f'  c{k} [label="cluster {k} (size {int(g_hat.sizes[k])})"];\n')
                for t, k in edges:
                    fh.write(f"  c{t} -- c{k};\n")
                fh.write("}\n")
            else:
                raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write graph to {path}: {exc}") from exc


def config_from_mapping(values: dict) -> ExperimentConfig:
    """Build a config from string-valued keys as found in a key=value file or CLI flags."""
    names = {f.name for f in fields(ExperimentConfig)}
    conv = {}
    v = dict(values)
    if "m" in v:
        m = int(v.pop("m"))
        K = int(v.get("K", ExperimentConfig.K))
        v.setdefault("d", str(m * K))
    aliases = {"alpha": "alphas", "method": "methods", "graph": "graph_kinds", "seed": "base_seed",
               "lambda": "lam", "lambda_prime": "lam_prime", "reps": "replications"}
    for key, raw in v.items():
        key = aliases.get(key, key)
        if key not in names:
            raise ConfigError(f"unknown config key {key!r}")
        raw = str(raw).strip()
        try:
            if key in ("d", "n", "K", "replications", "base_seed", "folds"):
                conv[key] = int(raw)
            elif key in ("c", "cluster_alpha0", "gamma_low", "gamma_high"):
                conv[key] = float(raw)
            elif key in ("lam", "lam_prime"):
                conv[key] = None if raw.lower() in ("", "none", "default") else float(raw)
            elif key == "alphas":
                conv[key] = tuple(float(a) for a in raw.split(",") if a.strip())
            elif key == "methods":
                conv[key] = tuple(a.strip().upper() for a in raw.split(",") if a.strip())
            elif key == "graph_kinds":
                kinds = [a.strip().lower() for a in raw.split(",") if a.strip()]
                conv[key] = ("latent", "average") if kinds == ["both"] else tuple(kinds)
            elif key == "true_partition":
                conv[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                conv[key] = raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return ExperimentConfig(**conv)


def read_config_file(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out
