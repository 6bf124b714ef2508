"""Pipeline stages writing a run bundle, subgraph refinement and bundle validation."""

import hashlib
import json
import logging
from contextlib import contextmanager
from importlib import metadata
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from centrality import hits
from communities import HierPartition, NsbmParams, infer_best, project
from embed import EmbedParams, WalkParams, embed_graph
from gbm import GbmParams
from graph_core import induced_subgraph, read_graph, write_graph
from interp_graph import build_global_graph, build_local_graph, build_manifest
from layout import fr_layout, plot_graph, plot_hierarchy, plot_torus
from sparsify import backbone, disparity_scores, restrict_scores, scores_frame
from spectral import angular_silhouette, torus_embedding
from tabular import encode, generate_synthetic_table, load_csv
from utils.config import PipelineConfig, __version__
from utils.diagnostics import attach_file, detach
from utils.errors import ConfigError, GraphError, PartitionError, StageError, TabgraphError
from utils.schemas import (
    DISPARITY_COLUMNS,
    HITS_COLUMNS,
    SPECTRAL_COLUMNS,
    BuildManifest,
    GraphDocument,
    PartitionDocument,
    RunManifest,
    TableManifest,
    embedding_columns,
)

TABLE_MANIFEST = "table_manifest.json"
GRAPH_JSON = "graph.json"
GRAPH_GRAPHML = "graph.graphml"
BUILD_MANIFEST = "build_manifest.json"
HITS_CSV = "hits.csv"
BACKBONE_JSON = "backbone.json"
BACKBONE_GRAPHML = "backbone.graphml"
DISPARITY_CSV = "disparity.csv"
SPECTRAL_CSV = "spectral.csv"
TORUS_SVG = "torus.svg"
LAYOUT_SVG = "layout.svg"
LAYOUT_FULL_SVG = "layout_full.svg"
PARTITION_JSON = "partition.json"
HIERARCHY_SVG = "hierarchy.svg"
EMBEDDINGS_CSV = "embeddings.csv"
RUN_MANIFEST = "run_manifest.json"
DIAGNOSTICS = "diagnostics.jsonl"
FAILED = "FAILED"
REFINE_DIR = "refine"

ANALYSIS_ARTIFACTS = (
    HITS_CSV,
    BACKBONE_JSON,
    BACKBONE_GRAPHML,
    DISPARITY_CSV,
    SPECTRAL_CSV,
    TORUS_SVG,
    LAYOUT_SVG,
    LAYOUT_FULL_SVG,
    PARTITION_JSON,
    HIERARCHY_SVG,
    EMBEDDINGS_CSV,
)
BUNDLE_ARTIFACTS = (TABLE_MANIFEST, GRAPH_JSON, GRAPH_GRAPHML, BUILD_MANIFEST) + ANALYSIS_ARTIFACTS

PACKAGES = (
    "numpy",
    "scipy",
    "scikit-learn",
    "numba",
    "networkx",
    "pydot",
    "gensim",
    "pandas",
    "pydantic",
    "matplotlib",
    "python-dotenv",
)


def gbm_params(config):
    return GbmParams(
        config.n_trees,
        config.max_depth,
        config.learning_rate,
        config.min_child_cover,
        config.holdout_fraction,
    )


def nsbm_params(config):
    return NsbmParams(config.n_sweeps, config.anneal, config.agglomeration_factor)


def walk_params(config):
    return WalkParams(
        config.walk_length,
        config.walks_per_vertex,
        config.walk_p,
        config.walk_q,
        config.symmetrize_walks,
    )


def embed_params(config):
    return EmbedParams(config.dims, config.window, config.negative, config.epochs, config.embed_lr)


def nsbm_seeds(config):
    return [config.seed + k for k in range(config.nsbm_restarts)]


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


@contextmanager
def stage(name, out):
    """Turn any failure inside the block into a StageError and leave a FAILED marker."""
    logging.info(f"Stage {name} started")
    try:
        yield
    except (StageError, ConfigError):
        raise
    except Exception as e:
        logging.error(f"Error in stage {name}: {e}")
        Path(out, FAILED).write_text(f"{name}\n{type(e).__name__}: {e}\n", encoding="utf-8")
        raise StageError(name, e) from e


def load_table(config):
    """Encoded table and, for synthetic input, the planted group of every column."""
    if config.is_synthetic:
        return generate_synthetic_table(
            config.synth_groups,
            config.synth_cols,
            config.synth_rows,
            config.synth_strength,
            config.synth_noise,
            config.seed,
        )
    if config.input is None:
        raise ConfigError("No input configured; set input=<csv path> or input=synthetic")
    raw = load_csv(config.input, config.header)
    return encode(raw, config.categorical_max_cardinality, config.missing_policy), None


def table_manifest(table, groups, source):
    return {
        "source": str(source),
        "n_rows": table.n_rows,
        "columns": [spec.to_dict() for spec in table.specs],
        "warnings": list(table.warnings),
        "ground_truth": None if groups is None else [int(k) for k in groups],
    }


def write_graph_pair(g, out, stem):
    write_graph(g, Path(out, f"{stem}.json"))
    write_graph(g, Path(out, f"{stem}.graphml"))


def write_hits(g, out):
    scores = hits(g)
    scores.to_frame().to_csv(Path(out, HITS_CSV), index=False)
    return scores


def write_backbone(g, alpha, out, scores=None):
    scores = disparity_scores(g) if scores is None else scores
    filtered = backbone(g, alpha, scores)
    write_graph_pair(filtered, out, "backbone")
    scores_frame(g, scores).to_csv(Path(out, DISPARITY_CSV), index=False)
    return filtered


def write_spectral(g, charge, out, hub=None, groups=None):
    embedding = torus_embedding(g, charge, hub)
    embedding.to_frame().to_csv(Path(out, SPECTRAL_CSV), index=False)
    plot_torus(embedding, Path(out, TORUS_SVG), groups)
    if groups is not None and embedding.defined.all() and 2 <= len(set(groups)) < g.n:
        logging.info(f"Torus angular silhouette against ground truth: {angular_silhouette(embedding, groups):.3f}")
    return embedding


def write_layouts(g, filtered, iterations, seed, out, groups=None):
    coords = fr_layout(filtered, iterations, seed)
    plot_graph(filtered, coords, Path(out, LAYOUT_SVG), groups, "Backbone")
    plot_graph(g, coords, Path(out, LAYOUT_FULL_SVG), groups, "Interpretability graph")
    return coords


def write_partition(g, params, seeds, out, threads=None, groups=None):
    part = infer_best(g, seeds, params, threads)
    write_json(Path(out, PARTITION_JSON), part.to_dict())
    plot_hierarchy(part, g.names, Path(out, HIERARCHY_SVG), groups)
    return part


def write_embeddings(g, walks, training, seed, out, threads=None):
    table = embed_graph(g, walks, training, seed, threads)
    table.to_frame().to_csv(Path(out, EMBEDDINGS_CSV), index=False)
    return table


def analyze_graph(g, config, out, groups=None, scores=None):
    """Every graph-level stage, in bundle order, on one graph."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    results = {}
    with stage("hits", out):
        results["hits"] = write_hits(g, out)
    with stage("filter", out):
        results["backbone"] = write_backbone(g, config.alpha, out, scores)
    with stage("spectral", out):
        results["torus"] = write_spectral(g, config.charge, out, results["hits"].hub, groups)
        results["coords"] = write_layouts(
            g, results["backbone"], config.layout_iterations, config.seed, out, groups
        )
    with stage("communities", out):
        results["partition"] = write_partition(
            results["backbone"], nsbm_params(config), nsbm_seeds(config), out, config.threads, groups
        )
    with stage("embed", out):
        results["embeddings"] = write_embeddings(
            g, walk_params(config), embed_params(config), config.seed, out, config.threads
        )
    return results


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def library_versions():
    versions = {}
    for package in PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def run_manifest(config, out, build=None):
    artifacts = {
        path.name: _sha256(path)
        for path in sorted(Path(out).iterdir())
        if path.is_file() and path.name not in (RUN_MANIFEST, DIAGNOSTICS, FAILED)
    }
    seeds = {"master": config.seed, "nsbm": nsbm_seeds(config), "walks": config.seed}
    if build is not None:
        seeds["columns"] = {f.column: f.seed for f in build.fits}
    return {
        "tabgraph_version": __version__,
        "config": config.model_dump(mode="json"),
        "seeds": seeds,
        "versions": library_versions(),
        "artifacts": artifacts,
    }


def run_pipeline(config):
    """Table to bundle; returns the bundle directory."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    Path(out, FAILED).unlink(missing_ok=True)
    handler = attach_file(Path(out, DIAGNOSTICS))
    try:
        with stage("ingest", out):
            table, groups = load_table(config)
            source = "synthetic" if config.is_synthetic else config.input
            write_json(Path(out, TABLE_MANIFEST), table_manifest(table, groups, source))
        with stage("build-graph", out):
            build = build_global_graph(table, gbm_params(config), config.seed, config.threads)
            write_graph_pair(build.graph, out, "graph")
            write_json(Path(out, BUILD_MANIFEST), build_manifest(build))
        analyze_graph(build.graph, config, out, groups)
        with stage("manifest", out):
            write_json(Path(out, RUN_MANIFEST), run_manifest(config, out, build))
    finally:
        detach(handler)
    logging.info(f"Pipeline finished; bundle at {out}")
    return out


def load_bundle_config(bundle):
    doc = read_json(Path(bundle, RUN_MANIFEST))
    try:
        return PipelineConfig(**doc["config"])
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration in {bundle}: {e}") from e


def refine(bundle, vertices=None, group=None, retrain=False, name=None, config=None):
    """Re-run the graph stages on the subgraph induced by vertices or a level-0 block.

    Edge weights come from the bundle's graph unless retrain is set, in which
    case models are refit on the selected columns only. Without retrain the
    backbone filter scores each edge against its source in the bundle's graph.
    """
    bundle = Path(bundle)
    config = config or load_bundle_config(bundle)
    g = read_graph(Path(bundle, GRAPH_JSON))

    if group is not None:
        part = HierPartition.from_dict(read_json(Path(bundle, PARTITION_JSON)))
        labels = project(part, 0)
        if not 0 <= int(group) <= int(labels.max()):
            raise PartitionError(f"Group {group} outside 0..{int(labels.max())}")
        indices = [int(v) for v in np.flatnonzero(labels == int(group))]
        name = name or f"group{group}"
    elif vertices:
        indices = [g.index(v) for v in vertices]
        name = name or "subset"
    else:
        raise GraphError("Refinement needs a vertex subset or a group id")

    out = Path(bundle, REFINE_DIR, name)
    out.mkdir(parents=True, exist_ok=True)
    Path(out, FAILED).unlink(missing_ok=True)

    manifest = read_json(Path(bundle, TABLE_MANIFEST))
    truth = manifest.get("ground_truth")
    chosen = sorted(set(indices))
    groups = None if truth is None else [truth[v] for v in chosen]

    scores = None
    if retrain:
        with stage("build-graph", out):
            table, _ = load_table(config)
            build = build_global_graph(
                table.select([g.names[v] for v in chosen]),
                gbm_params(config),
                config.seed,
                config.threads,
            )
            sub = build.graph
            write_json(Path(out, BUILD_MANIFEST), build_manifest(build))
    else:
        sub = induced_subgraph(g, chosen)
        scores = restrict_scores(disparity_scores(g), chosen)
    write_graph_pair(sub, out, "graph")
    results = analyze_graph(sub, config, out, groups, scores)
    logging.info(f"Refined {len(chosen)} vertices into {out}")
    return out, results


def local_graph(config, row):
    """Per-instance graph of one table row, from freshly fit models."""
    table, _ = load_table(config)
    build = build_global_graph(table, gbm_params(config), config.seed, config.threads)
    return build_local_graph(build, row)


def _check_csv(path, columns, problems):
    frame = pd.read_csv(path)
    if list(frame.columns) != list(columns):
        problems.append(f"{path.name}: columns {list(frame.columns)}, expected {list(columns)}")
    if frame.drop(columns=["vertex", "u", "v"], errors="ignore").isna().any().any():
        if path.name != SPECTRAL_CSV:
            problems.append(f"{path.name}: contains missing values")
    return frame


def validate_bundle(bundle):
    """Schema problems of a bundle; an empty list means it validates."""
    bundle = Path(bundle)
    problems = []
    if Path(bundle, FAILED).exists():
        problems.append(f"{FAILED} marker present: {Path(bundle, FAILED).read_text().strip()}")
    for artifact in BUNDLE_ARTIFACTS + (RUN_MANIFEST,):
        if not Path(bundle, artifact).is_file():
            problems.append(f"{artifact}: missing")
    if problems:
        return problems

    schemas = {
        TABLE_MANIFEST: TableManifest,
        GRAPH_JSON: GraphDocument,
        BACKBONE_JSON: GraphDocument,
        BUILD_MANIFEST: BuildManifest,
        PARTITION_JSON: PartitionDocument,
        RUN_MANIFEST: RunManifest,
    }
    for artifact, schema in schemas.items():
        try:
            schema.model_validate_json(Path(bundle, artifact).read_text(encoding="utf-8"))
        except ValidationError as e:
            problems.append(f"{artifact}: {e}")

    try:
        g = read_graph(Path(bundle, GRAPH_JSON))
        if read_graph(Path(bundle, GRAPH_GRAPHML)) != g:
            problems.append(f"{GRAPH_GRAPHML}: disagrees with {GRAPH_JSON}")
        if read_graph(Path(bundle, BACKBONE_GRAPHML)) != read_graph(Path(bundle, BACKBONE_JSON)):
            problems.append(f"{BACKBONE_GRAPHML}: disagrees with {BACKBONE_JSON}")
    except TabgraphError as e:
        problems.append(f"graph files: {e}")
        return problems

    _check_csv(Path(bundle, HITS_CSV), HITS_COLUMNS, problems)
    _check_csv(Path(bundle, DISPARITY_CSV), DISPARITY_COLUMNS, problems)
    _check_csv(Path(bundle, SPECTRAL_CSV), SPECTRAL_COLUMNS, problems)
    config = load_bundle_config(bundle)
    frame = _check_csv(Path(bundle, EMBEDDINGS_CSV), embedding_columns(config.dims), problems)
    if list(frame["vertex"].astype(str)) != list(g.names):
        problems.append(f"{EMBEDDINGS_CSV}: vertices differ from the graph")

    for artifact in (TORUS_SVG, LAYOUT_SVG, LAYOUT_FULL_SVG, HIERARCHY_SVG):
        if "<svg" not in Path(bundle, artifact).read_text(encoding="utf-8"):
            problems.append(f"{artifact}: not an SVG document")

    recorded = read_json(Path(bundle, RUN_MANIFEST))["artifacts"]
    for artifact, digest in sorted(recorded.items()):
        path = Path(bundle, artifact)
        if not path.is_file() or _sha256(path) != digest:
            problems.append(f"{artifact}: hash mismatch")
    return problems
