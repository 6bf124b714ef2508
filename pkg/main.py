import argparse
import json
import logging
import sys
from pathlib import Path

import pandas as pd

from centrality import hits
from embed import most_similar
from graph_core import read_graph, write_graph
from interp_graph import build_global_graph, build_manifest
from pipeline import (
    BUILD_MANIFEST,
    GRAPH_JSON,
    TABLE_MANIFEST,
    embed_params,
    gbm_params,
    load_bundle_config,
    load_table,
    local_graph,
    nsbm_params,
    nsbm_seeds,
    refine,
    run_pipeline,
    stage,
    table_manifest,
    validate_bundle,
    walk_params,
    write_backbone,
    write_embeddings,
    write_graph_pair,
    write_hits,
    write_json,
    write_partition,
    write_spectral,
)
from utils.config import __version__, default_log_level, load_config, override_config
from utils.diagnostics import configure_logging
from utils.errors import ConfigError, TabgraphError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3


def common_options():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="key=value settings file")
    parent.add_argument("--input", help="CSV file, or 'synthetic'")
    parent.add_argument("--seed", type=int)
    parent.add_argument("--alpha", type=float)
    parent.add_argument("--charge", type=float)
    parent.add_argument("--out")
    parent.add_argument("--threads", type=int)
    parent.add_argument("--log-level", default=default_log_level)
    return parent


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tabgraph", description="Interpretability graphs of tabular data"
    )
    parser.add_argument("--version", action="version", version=f"tabgraph {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    parent = common_options()

    commands.add_parser("ingest", parents=[parent], help="encode a table and write its manifest")
    commands.add_parser("build-graph", parents=[parent], help="fit per-column models and build the graph")
    for name, text in (
        ("hits", "hub and authority scores"),
        ("filter", "disparity-filter backbone"),
        ("spectral", "magnetic eigenmap torus embedding"),
        ("communities", "nested block model partition"),
    ):
        sub = commands.add_parser(name, parents=[parent], help=text)
        sub.add_argument("--graph", help="graph file (default: <out>/graph.json)")

    embed = commands.add_parser("embed", parents=[parent], help="random-walk vertex embeddings")
    embed.add_argument("--graph", help="graph file (default: <out>/graph.json)")
    embed.add_argument("--symmetrize", action="store_true", help="walk the symmetrized graph")
    embed.add_argument("--query", help="vertex to rank neighbours of")
    embed.add_argument("-k", type=int, default=5)

    refine_cmd = commands.add_parser("refine", parents=[parent], help="re-analyze an induced subgraph")
    refine_cmd.add_argument("bundle")
    target = refine_cmd.add_mutually_exclusive_group(required=True)
    target.add_argument("--vertices", help="comma-separated vertex names")
    target.add_argument("--group", type=int, help="level-0 block id of the bundle partition")
    refine_cmd.add_argument("--retrain", action="store_true", help="refit models on the subset")
    refine_cmd.add_argument("--name")

    commands.add_parser("pipeline", parents=[parent], help="run every stage into one bundle")

    synth = commands.add_parser("synth", parents=[parent], help="write a synthetic grouped table")
    synth.add_argument("--groups", type=int)
    synth.add_argument("--cols", type=int)
    synth.add_argument("--rows", type=int)

    local = commands.add_parser("local", parents=[parent], help="per-instance graph of one row")
    local.add_argument("--row", type=int, required=True)

    validate = commands.add_parser("validate", parents=[parent], help="check a bundle against its schemas")
    validate.add_argument("bundle")
    return parser


def overrides_from(args):
    overrides = {
        "input": args.input,
        "seed": args.seed,
        "alpha": args.alpha,
        "charge": args.charge,
        "out": args.out,
        "threads": args.threads,
    }
    if getattr(args, "symmetrize", False):
        overrides["symmetrize_walks"] = True
    if args.command == "synth":
        overrides.update({"synth_groups": args.groups, "synth_cols": args.cols, "synth_rows": args.rows})
    return overrides


def graph_of(args, config):
    return read_graph(args.graph or Path(config.out, GRAPH_JSON))


def run_command(args, config):
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.command == "pipeline":
        run_pipeline(config)
    elif args.command == "ingest":
        with stage("ingest", out):
            table, groups = load_table(config)
            write_json(Path(out, TABLE_MANIFEST), table_manifest(table, groups, config.input))
    elif args.command == "build-graph":
        with stage("build-graph", out):
            table, _ = load_table(config)
            build = build_global_graph(table, gbm_params(config), config.seed, config.threads)
            write_graph_pair(build.graph, out, "graph")
            write_json(Path(out, BUILD_MANIFEST), build_manifest(build))
    elif args.command == "hits":
        with stage("hits", out):
            write_hits(graph_of(args, config), out)
    elif args.command == "filter":
        with stage("filter", out):
            write_backbone(graph_of(args, config), config.alpha, out)
    elif args.command == "spectral":
        with stage("spectral", out):
            g = graph_of(args, config)
            hub = hits(g).hub if g.n_edges else None
            write_spectral(g, config.charge, out, hub)
    elif args.command == "communities":
        with stage("communities", out):
            write_partition(graph_of(args, config), nsbm_params(config), nsbm_seeds(config), out, config.threads)
    elif args.command == "embed":
        with stage("embed", out):
            g = graph_of(args, config)
            table = write_embeddings(g, walk_params(config), embed_params(config), config.seed, out, config.threads)
            if args.query:
                ranked = most_similar(table, args.query, args.k)
                doc = {"query": args.query, "results": [{"vertex": v, "cosine": c} for v, c in ranked]}
                write_json(Path(out, f"similar_{args.query}.json"), doc)
                print(json.dumps(doc, indent=1))
    elif args.command == "refine":
        vertices = args.vertices.split(",") if args.vertices else None
        overrides = {k: v for k, v in overrides_from(args).items() if k != "out"}
        refine_config = override_config(load_bundle_config(args.bundle), args.config, overrides)
        refined, _ = refine(args.bundle, vertices, args.group, args.retrain, args.name, refine_config)
        print(refined)
    elif args.command == "synth":
        with stage("synth", out):
            table, groups = load_table(config.model_copy(update={"input": "synthetic"}))
            pd.DataFrame(table.values, columns=table.names).to_csv(Path(out, "synthetic.csv"), index=False)
            write_json(Path(out, "synthetic_groups.json"), dict(zip(table.names, (int(k) for k in groups))))
    elif args.command == "local":
        with stage("local", out):
            g = local_graph(config, args.row)
            write_graph(g, Path(out, f"local_{args.row}.json"))
            write_graph(g, Path(out, f"local_{args.row}.graphml"))
    elif args.command == "validate":
        problems = validate_bundle(args.bundle)
        for problem in problems:
            print(problem)
        if problems:
            return EXIT_STAGE
        print(f"{args.bundle}: ok")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level.upper())
    try:
        config = load_config(args.config, overrides_from(args))
        return run_command(args, config)
    except ConfigError as e:
        logging.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except TabgraphError as e:
        logging.error(f"{e}")
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
