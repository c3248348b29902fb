"""Command-line interface.

Subcommands::

    graphboot generate       sample graphs from the configured model
    graphboot motifs         inspect motifs and export their catalogs
    graphboot fit-histogram  fit the balanced block model to a graph
    graphboot bootstrap      run one bootstrap and dump replicates
    graphboot validate       theorem-validation sweep (--theorem 1|2)
    graphboot coverage       interval coverage study
    graphboot clt-check      normality of the sampling distribution
    graphboot oracle         brute-force certification of the moment formulas

Global flags (after the subcommand): --config, --seed, --out, --threads,
--no-figures.  Every run echoes its configuration into the output directory
so it can be reproduced bit for bit.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .combinatorics import (
    catalog_to_json,
    collision_catalog_to_json,
    merge_collision_catalog,
    merged_copy_catalog,
)
from .errors import GraphbootError
from .estimators import fit_histogram, select_bin_count
from .experiments import ExperimentConfig, load_config, run_experiment
from .graphs import automorphism_count, labeled_copy_count, load_graph, save_graph
from .graphons import sample_graph
from . import rng as rngmod

_CONFIG_KINDS = {
    "generate": None,
    "bootstrap": "bootstrap",
    "validate": None,  # depends on --theorem
    "coverage": "coverage",
    "clt-check": "clt-check",
    "oracle": "oracle",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config file (INI)")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument("--threads", type=int, default=None, help="worker threads for grid cells")
    parser.add_argument(
        "--no-figures", action="store_true", help="skip PNG rendering; CSV/JSON only"
    )


def _overrides(args) -> dict:
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.no_figures:
        overrides["figures"] = False
    return overrides


def _load(args, kind: str | None) -> ExperimentConfig:
    overrides = _overrides(args)
    if kind is not None:
        overrides["kind"] = kind
    return load_config(args.config, overrides)


def _cmd_generate(args) -> int:
    cfg = _load(args, kind=None)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for n_idx, n in enumerate(cfg.n_grid):
        for s in range(cfg.seed_count):
            seed = int(rngmod.stream(cfg.master_seed, "data-graph", n_idx, s).integers(0, 2**63 - 1))
            graph, latent = sample_graph(cfg.spec, cfg.schedule, n, seed)
            gpath = out / f"graph_n{n}_s{s}.txt"
            save_graph(graph, gpath)
            lpath = out / f"latents_n{n}_s{s}.csv"
            with open(lpath, "w", encoding="utf8") as fh:
                fh.write("node,epsilon\n")
                for i, e in enumerate(latent.values):
                    fh.write(f"{i},{e!r}\n")
            written.append(str(gpath))
    print(f"wrote {len(written)} graphs to {out}")
    return 0


def _cmd_motifs(args) -> int:
    cfg = _load(args, kind=None)
    print(f"{'name':<10} {'p':>2} {'edges':>5} {'N(R)':>6} {'|Aut|':>6}  key")
    catalogs = {}
    for name, mot in cfg.motifs:
        print(
            f"{name:<10} {mot.vertex_count:>2} {mot.edge_count:>5} "
            f"{labeled_copy_count(mot):>6} {automorphism_count(mot):>6}  {mot.key_string}"
        )
        entry: dict = {}
        if mot.vertex_count <= 4:
            entry["merged_copies"] = catalog_to_json(merged_copy_catalog(mot))
        if mot.vertex_count <= 6:
            entry["merge_collisions"] = collision_catalog_to_json(
                merge_collision_catalog(mot)
            )
        catalogs[name] = entry
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "catalogs.json"
    with open(path, "w", encoding="utf8") as fh:
        json.dump(catalogs, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"catalogs written to {path}")
    return 0


def _cmd_fit_histogram(args) -> int:
    cfg = _load(args, kind=None)
    if cfg.graph_path:
        graph = load_graph(cfg.graph_path)
    else:
        n = cfg.n_grid[0]
        seed = int(rngmod.stream(cfg.master_seed, "data-graph", 0, 0).integers(0, 2**63 - 1))
        graph, _ = sample_graph(cfg.spec, cfg.schedule, n, seed)
    r = cfg.bin_count or select_bin_count(graph.node_count, graph.edge_density)
    fixed = None
    if args.fixed_assignment:
        with open(args.fixed_assignment, "r", encoding="utf8") as fh:
            fixed = np.array([int(tok) for tok in fh.read().split()], dtype=np.int64)
    model = fit_histogram(
        graph,
        r,
        restarts=cfg.restarts,
        max_sweeps=cfg.max_sweeps,
        seed=cfg.master_seed,
        fixed_assignment=fixed,
    )
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "bin_count": model.bin_count,
        "loss": model.loss,
        "assignment": model.assignment.tolist(),
        "block_probs": model.block_probs.tolist(),
        "node_count": model.node_count,
        "fixed_assignment": args.fixed_assignment,
    }
    path = out / "histogram_model.json"
    with open(path, "w", encoding="utf8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"r={model.bin_count} loss={model.loss!r} -> {path}")
    return 0


def _cmd_experiment(args, kind: str) -> int:
    cfg = _load(args, kind=kind)
    report = run_experiment(cfg)
    print(f"{kind}: {len(report.rows)} metric rows -> {report.out_dir}/metrics.csv")
    for key, value in sorted(report.summary.items()):
        print(f"  {key}: {value}")
    for fig in report.figure_paths:
        print(f"  figure: {fig}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="graphboot",
        description="Bootstraps for motif densities of exchangeable random graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("generate", "motifs", "bootstrap", "coverage", "clt-check", "oracle"):
        p = sub.add_parser(name)
        _add_common(p)
    p_fit = sub.add_parser("fit-histogram")
    _add_common(p_fit)
    p_fit.add_argument(
        "--fixed-assignment",
        default=None,
        help="whitespace-separated class labels (0-based); bypasses the search",
    )
    p_val = sub.add_parser("validate")
    _add_common(p_val)
    p_val.add_argument("--theorem", type=int, choices=(1, 2), required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "motifs":
            return _cmd_motifs(args)
        if args.command == "fit-histogram":
            return _cmd_fit_histogram(args)
        if args.command == "validate":
            return _cmd_experiment(args, f"validate-theorem{args.theorem}")
        return _cmd_experiment(args, args.command)
    except GraphbootError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
