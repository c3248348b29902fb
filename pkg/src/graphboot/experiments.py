"""Experiment orchestration: config files, grid runs, and reports.

A config is flat INI text (key = value under named sections).  Every
experiment writes, into its output directory:

* ``metrics.csv`` — one row per grid cell, skips included as explicit rows,
* ``report.json`` — config echo, environment metadata, derived summaries,
* ``config_echo.ini`` — the parsed config, rerunnable as-is,
* ``replicates.csv`` — per-replicate statistics (bootstrap kind),
* PNG figures alongside the delimited output (disable with figures=false).

Cells derive their random streams from (master seed, cell coordinates)
only, so a grid produces identical metrics under any thread count, and a
re-run from the echoed config reproduces every metric bitwise.
"""

from __future__ import annotations

import configparser
import json
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__ as pkg_version
from . import rng as rngmod
from .bootstrap import (
    BootstrapPlan,
    ks_to_normal,
    ks_two_sample,
    normalized_truth_interval,
    run_bootstrap,
    sampling_distribution_truth_multi,
    true_center,
)
from .census import motif_density
from .combinatorics import (
    EmpiricalProvider,
    HistogramProvider,
    TrueGraphonProvider,
    brute_force_moments,
    density_second_moment,
    expected_motif_density,
    variance_sigma2,
)
from .errors import BinCountError, ConfigError, GraphbootError
from .estimators import estimator_error, fit_histogram, select_bin_count
from .graphs import (
    Graph,
    Motif,
    load_graph,
    parse_motif_literal,
    single_edge,
    triangle,
    two_star,
)
from .graphons import GraphonSpec, SparsitySchedule, sample_graph

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "load_config",
    "run_experiment",
    "EXPERIMENT_KINDS",
]

EXPERIMENT_KINDS = (
    "bootstrap",
    "validate-theorem1",
    "validate-theorem2",
    "coverage",
    "clt-check",
    "oracle",
)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    spec: GraphonSpec
    schedule: SparsitySchedule
    n_grid: tuple[int, ...]
    motifs: tuple[tuple[str, Motif], ...]
    master_seed: int = 0
    seed_count: int = 5
    method: str = "empirical-graphon"
    replicates: int = 2000
    truth_samples: int = 2000
    m: int | None = None
    levels: tuple[float, ...] = (0.9,)
    restarts: int = 4
    max_sweeps: int = 50
    center_method: str = "exact"
    bin_count: int | None = None
    coverage_simulations: int = 200
    coverage_level: float = 0.9
    out_dir: str = "out"
    figures: bool = True
    threads: int = 1
    graph_path: str | None = None

    def bootstrap_method(self) -> str:
        if self.kind == "validate-theorem1":
            return "empirical-graphon"
        if self.kind == "validate-theorem2":
            return "histogram"
        return self.method


@dataclass
class ExperimentReport:
    kind: str
    rows: list[dict]
    summary: dict
    config_echo: dict
    out_dir: Path
    figure_paths: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(",", " ").split())


def _parse_graphon(section) -> GraphonSpec:
    kind = section.get("kind", "constant").strip()
    if kind == "block":
        raw = section.get("block_probs", "").strip()
        if not raw:
            raise ConfigError("[graphon] block kind needs block_probs")
        rows = [
            [float(tok) for tok in row.split()] for row in raw.split(";") if row.strip()
        ]
        return GraphonSpec("block", tuple(tuple(r) for r in rows))
    try:
        return GraphonSpec(kind)
    except GraphbootError as exc:
        raise ConfigError(f"[graphon] {exc}") from exc


def _parse_schedule(section) -> SparsitySchedule:
    kind = section.get("kind", "constant").strip()
    c = section.getfloat("c", fallback=None)
    if c is None:
        raise ConfigError("[schedule] requires c")
    alpha = section.getfloat("alpha", fallback=0.0)
    try:
        return SparsitySchedule(kind, c, alpha)
    except GraphbootError as exc:
        raise ConfigError(f"[schedule] {exc}") from exc


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Read an experiment config file; overrides come from CLI flags."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if "experiment" not in parser:
        raise ConfigError("missing [experiment] section")
    exp = parser["experiment"]
    kind = exp.get("kind", "").strip()
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(
            f"[experiment] kind must be one of {', '.join(EXPERIMENT_KINDS)}; got {kind!r}"
        )
    if "graphon" not in parser:
        raise ConfigError("missing [graphon] section")
    spec = _parse_graphon(parser["graphon"])
    if "schedule" not in parser:
        raise ConfigError("missing [schedule] section")
    schedule = _parse_schedule(parser["schedule"])

    n_grid = _parse_ints(exp.get("n_grid", "").strip() or "0")
    if not n_grid or n_grid == (0,):
        raise ConfigError("[experiment] n_grid must list at least one size")
    if list(n_grid) != sorted(n_grid):
        raise ConfigError("[experiment] n_grid must be sorted ascending")

    motifs = []
    if "motifs" in parser:
        for name, literal in parser["motifs"].items():
            try:
                motifs.append((name, parse_motif_literal(literal, name=name)))
            except GraphbootError as exc:
                raise ConfigError(f"[motifs] {name}: {exc}") from exc
    if not motifs:
        raise ConfigError("[motifs] must define at least one motif")

    plan = parser["plan"] if "plan" in parser else {}
    cov = parser["coverage"] if "coverage" in parser else {}
    out = parser["output"] if "output" in parser else {}

    def plan_get(key, default):
        return plan.get(key, default) if hasattr(plan, "get") else default

    m_text = str(plan_get("m", "n")).strip()
    m_val = None if m_text in ("", "n") else int(m_text)
    bin_text = str(plan_get("bin_count", "")).strip()
    bin_val = None if bin_text == "" else int(bin_text)

    cfg = ExperimentConfig(
        kind=kind,
        spec=spec,
        schedule=schedule,
        n_grid=n_grid,
        motifs=tuple(motifs),
        master_seed=exp.getint("seed", fallback=0),
        seed_count=exp.getint("seeds", fallback=5),
        method=str(plan_get("method", "empirical-graphon")).strip(),
        replicates=int(plan_get("replicates", 2000)),
        truth_samples=int(plan_get("truth_samples", 2000)),
        m=m_val,
        levels=_parse_floats(str(plan_get("levels", "0.9"))),
        restarts=int(plan_get("restarts", 4)),
        max_sweeps=int(plan_get("max_sweeps", 50)),
        center_method=str(plan_get("center_method", "exact")).strip(),
        bin_count=bin_val,
        coverage_simulations=int(cov.get("simulations", 200) if hasattr(cov, "get") else 200),
        coverage_level=float(cov.get("level", 0.9) if hasattr(cov, "get") else 0.9),
        out_dir=str(out.get("dir", "out") if hasattr(out, "get") else "out"),
        figures=str(out.get("figures", "true") if hasattr(out, "get") else "true").lower()
        in ("1", "true", "yes"),
        threads=exp.getint("threads", fallback=1),
        graph_path=(exp.get("graph", "").strip() or None),
    )
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def config_echo(cfg: ExperimentConfig) -> dict:
    echo = {
        "experiment": {
            "kind": cfg.kind,
            "seed": cfg.master_seed,
            "seeds": cfg.seed_count,
            "n_grid": ", ".join(str(n) for n in cfg.n_grid),
            "threads": cfg.threads,
        },
        "graphon": {"kind": cfg.spec.kind},
        "schedule": {
            "kind": cfg.schedule.kind,
            "c": repr(cfg.schedule.c),
            "alpha": repr(cfg.schedule.alpha),
        },
        "motifs": {name: f"{mot.vertex_count}; " + ",".join(f"{u}-{v}" for u, v in mot.edge_list)
                   for name, mot in cfg.motifs},
        "plan": {
            "method": cfg.bootstrap_method(),
            "replicates": cfg.replicates,
            "truth_samples": cfg.truth_samples,
            "m": "n" if cfg.m is None else cfg.m,
            "levels": ", ".join(repr(l) for l in cfg.levels),
            "restarts": cfg.restarts,
            "max_sweeps": cfg.max_sweeps,
            "center_method": cfg.center_method,
            "bin_count": "" if cfg.bin_count is None else cfg.bin_count,
        },
        "coverage": {
            "simulations": cfg.coverage_simulations,
            "level": repr(cfg.coverage_level),
        },
        "output": {"dir": cfg.out_dir, "figures": str(cfg.figures).lower()},
    }
    if cfg.spec.kind == "block":
        echo["graphon"]["block_probs"] = "; ".join(
            " ".join(repr(x) for x in row) for row in np.asarray(cfg.spec.block_probs)
        )
    if cfg.graph_path:
        echo["experiment"]["graph"] = cfg.graph_path
    return echo


def write_config_echo(echo: dict, path: Path) -> None:
    parser = configparser.ConfigParser()
    for section, values in echo.items():
        parser[section] = {k: str(v) for k, v in values.items()}
    with open(path, "w", encoding="utf8") as fh:
        parser.write(fh)


# ---------------------------------------------------------------------------
# Cell helpers
# ---------------------------------------------------------------------------

def _cell_seed(master: int, tag: str, *idx: int) -> int:
    return int(rngmod.stream(master, tag, *idx).integers(0, 2**63 - 1))


def _data_graph(cfg: ExperimentConfig, n: int, n_idx: int, seed_idx: int):
    seed = _cell_seed(cfg.master_seed, "data-graph", n_idx, seed_idx)
    return sample_graph(cfg.spec, cfg.schedule, n, seed)


def _run_cells(cells, worker, threads: int):
    """Evaluate cells (index order preserved) with an optional thread pool."""
    if threads <= 1:
        return [worker(cell) for cell in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, cells))


# ---------------------------------------------------------------------------
# Experiment kinds
# ---------------------------------------------------------------------------

def _validate_cells(cfg: ExperimentConfig, method: str) -> tuple[list[dict], dict]:
    theorem = 1 if method == "empirical-graphon" else 2
    cells = [
        (n_idx, n, s)
        for n_idx, n in enumerate(cfg.n_grid)
        for s in range(cfg.seed_count)
    ]

    def worker(cell):
        n_idx, n, seed_idx = cell
        graph, latent = _data_graph(cfg, n, n_idx, seed_idx)
        rho_n = cfg.schedule.rho(n)
        base = {
            "n": n,
            "seed_index": seed_idx,
            "rho_hat": graph.edge_density,
            "status": "ok",
        }
        try:
            plan = BootstrapPlan(
                method,
                tuple(mot for _, mot in cfg.motifs),
                replicates=cfg.replicates,
                m=cfg.m,
                center_method=cfg.center_method,
                levels=cfg.levels,
                seed=_cell_seed(cfg.master_seed, "plan", n_idx, seed_idx),
                bin_count=cfg.bin_count,
                restarts=cfg.restarts,
                max_sweeps=cfg.max_sweeps,
            )
            result = run_bootstrap(graph, plan)
        except (BinCountError, GraphbootError) as exc:
            return [
                {**base, "motif": name, "status": "skipped", "reason": str(exc)}
                for name, _ in cfg.motifs
            ]
        truth = sampling_distribution_truth_multi(
            cfg.spec,
            cfg.schedule,
            n,
            [mot for _, mot in cfg.motifs],
            cfg.truth_samples,
            seed=_cell_seed(cfg.master_seed, "truth", n_idx, seed_idx),
        )
        extras = {}
        if result.histogram_model is not None:
            extras["bin_count"] = result.histogram_model.bin_count
            extras["fit_loss"] = result.histogram_model.loss
            mse, max_dev = estimator_error(
                result.histogram_model, cfg.spec, rho_n, latent
            )
            extras["mse"] = mse
            extras["max_dev"] = max_dev
            extras["max_dev_over_rho"] = max_dev / rho_n
        rows = []
        for name, mot in cfg.motifs:
            mb = result.motif_result(mot)
            ks = ks_two_sample(mb.scaled, truth[mot.key_string])
            rows.append(
                {
                    **base,
                    **extras,
                    "motif": name,
                    "ks": ks,
                    "boot_scaled_sd": float(mb.scaled.std()),
                    "truth_sd": float(truth[mot.key_string].std()),
                    "center": mb.center,
                }
            )
        return rows

    results = _run_cells(cells, worker, cfg.threads)
    rows = [row for cell_rows in results for row in cell_rows]
    summary: dict = {"theorem": theorem, "median_ks": {}}
    for n in cfg.n_grid:
        for name, _ in cfg.motifs:
            vals = sorted(
                row["ks"] for row in rows
                if row["n"] == n and row["motif"] == name and row["status"] == "ok"
            )
            if vals:
                summary["median_ks"][f"n={n},motif={name}"] = float(np.median(vals))
    return rows, summary


def _coverage_cells(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    n = cfg.n_grid[0]
    rho_n = cfg.schedule.rho(n)
    methods = ("empirical-graphon", "histogram")
    targets = {}
    for name, mot in cfg.motifs:
        value, _ = true_center(
            cfg.spec, rho_n, mot, seed=_cell_seed(cfg.master_seed, "target", 0)
        )
        targets[name] = value / rho_n**mot.edge_count
    cells = [
        (mi, method, s)
        for mi, method in enumerate(methods)
        for s in range(cfg.coverage_simulations)
    ]

    def worker(cell):
        mi, method, sim = cell
        graph, _ = sample_graph(
            cfg.spec,
            cfg.schedule,
            n,
            _cell_seed(cfg.master_seed, "coverage-data", mi, sim),
        )
        base = {"method": method, "sim": sim, "n": n, "status": "ok"}
        try:
            plan = BootstrapPlan(
                method,
                tuple(mot for _, mot in cfg.motifs),
                replicates=cfg.replicates,
                center_method=cfg.center_method,
                levels=(cfg.coverage_level,),
                seed=_cell_seed(cfg.master_seed, "coverage-plan", mi, sim),
                bin_count=cfg.bin_count,
                restarts=cfg.restarts,
                max_sweeps=cfg.max_sweeps,
            )
            result = run_bootstrap(graph, plan)
        except GraphbootError as exc:
            return [
                {**base, "motif": name, "status": "skipped", "reason": str(exc)}
                for name, _ in cfg.motifs
            ]
        rows = []
        for name, mot in cfg.motifs:
            mb = result.motif_result(mot)
            observed = motif_density(graph, mot)
            obs_norm = observed.normalized_density
            lo, hi = normalized_truth_interval(mb, obs_norm, n, cfg.coverage_level)
            covered = int(lo <= targets[name] <= hi)
            rows.append(
                {
                    **base,
                    "motif": name,
                    "lo": lo,
                    "hi": hi,
                    "target": targets[name],
                    "covered": covered,
                }
            )
        return rows

    results = _run_cells(cells, worker, cfg.threads)
    rows = [row for cell_rows in results for row in cell_rows]
    summary = {"level": cfg.coverage_level, "coverage": {}}
    for method in methods:
        for name, _ in cfg.motifs:
            vals = [
                row["covered"] for row in rows
                if row["method"] == method and row["motif"] == name and row["status"] == "ok"
            ]
            if vals:
                summary["coverage"][f"{method},motif={name}"] = float(np.mean(vals))
    return rows, summary


def _clt_cells(cfg: ExperimentConfig) -> tuple[list[dict], dict, dict]:
    cells = [(n_idx, n) for n_idx, n in enumerate(cfg.n_grid)]

    def worker(cell):
        n_idx, n = cell
        truth = sampling_distribution_truth_multi(
            cfg.spec,
            cfg.schedule,
            n,
            [mot for _, mot in cfg.motifs],
            cfg.truth_samples,
            seed=_cell_seed(cfg.master_seed, "clt", n_idx),
        )
        rows = []
        samples = {}
        for name, mot in cfg.motifs:
            sample = truth[mot.key_string]
            samples[(n, name)] = sample
            rows.append(
                {
                    "n": n,
                    "motif": name,
                    "status": "ok",
                    "ks_normal": ks_to_normal(sample),
                    "mean": float(sample.mean()),
                    "sd": float(sample.std()),
                }
            )
        return rows, samples

    results = _run_cells(cells, worker, cfg.threads)
    rows = [row for cell_rows, _ in results for row in cell_rows]
    samples = {}
    for _, cell_samples in results:
        samples.update(cell_samples)
    summary = {
        "max_ks_normal": max((row["ks_normal"] for row in rows), default=float("nan"))
    }
    return rows, summary, samples


def _oracle_cells(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    """Brute-force certification of the second-moment and mean formulas."""
    motifs = [("k2", single_edge()), ("2star", two_star()), ("k3", triangle())]
    toy = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    hist_model = fit_histogram(toy, 2, restarts=4, seed=cfg.master_seed)
    providers = [
        ("constant-0.3", TrueGraphonProvider(GraphonSpec("constant"), 0.3)),
        ("constant-0.7", TrueGraphonProvider(GraphonSpec("constant"), 0.7)),
        ("histogram-r2-toy", HistogramProvider(hist_model)),
    ]
    rows = []
    for prov_name, provider in providers:
        for name, mot in motifs:
            for n in (4, 5):
                mean_o, second_o = brute_force_moments(provider, mot, n)
                second_f = density_second_moment(provider, mot, n)
                mean_f, _ = expected_motif_density(provider, mot, "exact")
                rows.append(
                    {
                        "provider": prov_name,
                        "motif": name,
                        "n": n,
                        "status": "ok",
                        "identity_rel_err": abs(second_f - second_o)
                        / max(abs(second_o), 1e-300),
                        "mean_rel_err": abs(mean_f - mean_o) / max(abs(mean_o), 1e-300),
                    }
                )
    for rho in (0.1, 0.5):
        for n in (10, 100):
            got = variance_sigma2(
                TrueGraphonProvider(GraphonSpec("constant"), rho), single_edge(), n
            )
            want = 2 * (1 - rho) / ((n - 1) * rho)
            rows.append(
                {
                    "provider": f"constant-{rho}",
                    "motif": "k2",
                    "n": n,
                    "status": "ok",
                    "closed_form_rel_err": abs(got - want) / want,
                }
            )
    summary = {
        "max_identity_rel_err": max(
            row.get("identity_rel_err", 0.0) for row in rows
        ),
        "max_mean_rel_err": max(row.get("mean_rel_err", 0.0) for row in rows),
        "max_closed_form_rel_err": max(
            row.get("closed_form_rel_err", 0.0) for row in rows
        ),
    }
    return rows, summary


def _bootstrap_cells(cfg: ExperimentConfig) -> tuple[list[dict], dict, object]:
    n = cfg.n_grid[0]
    if cfg.graph_path:
        graph = load_graph(cfg.graph_path)
        n = graph.node_count
    else:
        graph, _ = _data_graph(cfg, n, 0, 0)
    plan = BootstrapPlan(
        cfg.bootstrap_method(),
        tuple(mot for _, mot in cfg.motifs),
        replicates=cfg.replicates,
        m=cfg.m,
        center_method=cfg.center_method,
        levels=cfg.levels,
        seed=_cell_seed(cfg.master_seed, "plan", 0, 0),
        bin_count=cfg.bin_count,
        restarts=cfg.restarts,
        max_sweeps=cfg.max_sweeps,
    )
    result = run_bootstrap(graph, plan)
    rows = []
    for name, mot in cfg.motifs:
        mb = result.motif_result(mot)
        row = {
            "n": graph.node_count,
            "motif": name,
            "status": "ok",
            "center": mb.center,
            "scale": mb.scale,
            "rho_bar": result.rho_bar,
            "raw_mean": float(mb.raw.mean()),
            "scaled_sd": float(mb.scaled.std()),
        }
        for level, (lo, hi) in sorted(mb.intervals.items()):
            row[f"lo_{level}"] = lo
            row[f"hi_{level}"] = hi
        rows.append(row)
    summary = {"method": result.method, "rho_bar": result.rho_bar, "m": result.m}
    return rows, summary, result


# ---------------------------------------------------------------------------
# Report writing
# ---------------------------------------------------------------------------

def _format_value(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _write_metrics_csv(rows: list[dict], path: Path) -> None:
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(path, "w", encoding="utf8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_format_value(row.get(c, "")) for c in columns) + "\n")


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run one experiment kind and write CSV/JSON (and figures) to out_dir."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    boot_result = None
    payload = None
    if cfg.kind in ("validate-theorem1", "validate-theorem2"):
        rows, summary = _validate_cells(cfg, cfg.bootstrap_method())
    elif cfg.kind == "coverage":
        rows, summary = _coverage_cells(cfg)
    elif cfg.kind == "clt-check":
        rows, summary, payload = _clt_cells(cfg)
    elif cfg.kind == "oracle":
        rows, summary = _oracle_cells(cfg)
    elif cfg.kind == "bootstrap":
        rows, summary, boot_result = _bootstrap_cells(cfg)
        payload = boot_result
    else:
        raise ConfigError(f"unknown experiment kind {cfg.kind!r}")

    echo = config_echo(cfg)
    _write_metrics_csv(rows, out_dir / "metrics.csv")
    write_config_echo(echo, out_dir / "config_echo.ini")
    report = {
        "kind": cfg.kind,
        "config": echo,
        "summary": summary,
        "environment": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "platform": platform.platform(),
            "package_version": pkg_version,
        },
        "master_seed": cfg.master_seed,
        "rows": rows,
    }
    if boot_result is not None:
        report["bootstrap"] = boot_result.to_json_dict()
        boot_result.write_replicates_csv(out_dir / "replicates.csv")
    with open(out_dir / "report.json", "w", encoding="utf8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    figure_paths: list[str] = []
    if cfg.figures:
        from . import figures as figmod

        figure_paths = figmod.render_experiment_figures(
            cfg.kind, rows, summary, out_dir, payload
        )
    return ExperimentReport(
        kind=cfg.kind,
        rows=rows,
        summary=summary,
        config_echo=echo,
        out_dir=out_dir,
        figure_paths=figure_paths,
    )
