"""Command line interface.

Every subcommand reads and writes the documented file formats (matrix
CSV, node_id/community CSV, JSONL corpora), so single steps can be
rerun or swapped without touching the pipeline driver.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from ._rng import PRNG_ID
from ._version import __version__
from .aggregate import EXPORT_FORMATS, community_graph, export_graph, shrink, top_edges
from .align import align as align_matrices
from .community import (
    graph_from_similarity,
    louvain,
    read_partition_csv,
    write_partition_csv,
)
from .consensus import consensus_communities
from .core import load_similarity_csv, write_matrix_csv
from .depstats import DcorReport, gdc, pdc
from .errors import NetfuseError
from .ingest import (
    DEFAULT_API_BASE,
    fetch_works,
    read_editor_pairs_csv,
    read_embeddings_jsonl,
    read_works_jsonl,
)
from .layers import LAYER_KINDS, build_layer, build_period_layers
from .pipeline import run_pipeline
from .snf import fuse as fuse_layers
from .synthetic import make_corpus

_VERSION_MESSAGE = f"%(prog)s %(version)s (prng {PRNG_ID})"


@click.group()
@click.version_option(__version__, message=_VERSION_MESSAGE)
@click.option("-v", "--verbose", is_flag=True, help="Log stage progress to stderr.")
def main(verbose: bool):
    """Multilayer similarity networks: build, fuse, measure, cluster."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )


def _fail(exc: Exception) -> None:
    raise click.ClickException(str(exc))


@main.command()
@click.option("--works", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--editors", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--raw-cosine", is_flag=True, help="Skip the cosine-to-similarity transform.")
def ingest(works, editors, embeddings, out_dir, raw_cosine):
    """Build all four similarity layers for one period."""
    try:
        multiplex = build_period_layers(
            read_works_jsonl(works),
            read_editor_pairs_csv(editors),
            read_embeddings_jsonl(embeddings),
            transform=not raw_cosine,
        )
    except NetfuseError as exc:
        _fail(exc)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for kind in LAYER_KINDS:
        layer = multiplex[kind]
        write_matrix_csv(out / f"{kind}.csv", layer.roster, layer.values, checksum=True)
    summary = {"journals": list(multiplex.roster.ids), "layers": list(LAYER_KINDS)}
    (out / "roster.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    click.echo(f"wrote 4 layers over {len(multiplex.roster)} journals to {out}")


@main.command("build-layer")
@click.option("--kind", type=click.Choice(LAYER_KINDS), required=True)
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--zero-rows", type=click.Choice(["drop", "zero"]), default="drop", show_default=True)
@click.option("--raw-cosine", is_flag=True, help="Skip the cosine-to-similarity transform.")
def build_layer_cmd(kind, input_path, out, zero_rows, raw_cosine):
    """Build one layer from its raw source file."""
    try:
        if kind == "editors":
            source = read_editor_pairs_csv(input_path)
        elif kind in ("authors", "references"):
            from .ingest import filter_works

            source = filter_works(read_works_jsonl(input_path))
        else:
            source = read_embeddings_jsonl(input_path)
        layer = build_layer(
            kind, source, zero_rows=zero_rows, transform=not raw_cosine
        )
    except NetfuseError as exc:
        _fail(exc)
    write_matrix_csv(out, layer.roster, layer.values, checksum=True)
    click.echo(f"wrote {kind} layer ({len(layer.roster)} journals) to {out}")


@main.command(name="fuse")
@click.option("--layer", "layer_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Layer matrix CSV; repeat per layer.")
@click.option("--k", default=20, show_default=True)
@click.option("--alpha", default=0.5, show_default=True)
@click.option("--iterations", default=20, show_default=True)
@click.option("--mode", type=click.Choice(["kernel", "direct"]), default="kernel", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def fuse_cmd(layer_paths, k, alpha, iterations, mode, out):
    """Fuse layer matrices into one similarity matrix."""
    try:
        layers = {Path(p).stem: load_similarity_csv(p) for p in layer_paths}
        fused = fuse_layers(layers, k=k, alpha=alpha, iterations=iterations, mode=mode)
    except NetfuseError as exc:
        _fail(exc)
    write_matrix_csv(out, fused.roster, fused.values, checksum=True)
    click.echo(f"fused {len(layer_paths)} layers over {len(fused.roster)} nodes into {out}")


@main.command(name="dcor")
@click.option("--x", "x_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--y", "y_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--bias-corrected", is_flag=True)
@click.option("--as", "representation", type=click.Choice(["features", "distance"]),
              default="features", show_default=True)
def dcor_cmd(x_path, y_path, bias_corrected, representation):
    """Distance correlation between two similarity matrices."""
    try:
        x = load_similarity_csv(x_path)
        y = load_similarity_csv(y_path)
        value = gdc(x, y, representation=representation, bias_corrected=bias_corrected)
    except NetfuseError as exc:
        _fail(exc)
    report = DcorReport(
        kind="dcor_star" if bias_corrected else "dcor",
        x=Path(x_path).stem,
        y=Path(y_path).stem,
        value=value,
    )
    click.echo(json.dumps(report.as_dict(), sort_keys=True))


@main.command(name="pdcor")
@click.option("--x", "x_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--y", "y_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--given", "given_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Conditioning matrix CSV; repeat to condition on several.")
@click.option("--as", "representation", type=click.Choice(["features", "distance"]),
              default="features", show_default=True)
def pdcor_cmd(x_path, y_path, given_paths, representation):
    """Partial distance correlation, conditioning on one or more matrices."""
    try:
        x = load_similarity_csv(x_path)
        y = load_similarity_csv(y_path)
        given = [load_similarity_csv(p) for p in given_paths]
        value = pdc(x, y, given, representation=representation)
    except NetfuseError as exc:
        _fail(exc)
    report = DcorReport(
        kind="pdcor",
        x=Path(x_path).stem,
        y=Path(y_path).stem,
        value=value,
        conditioned_on=tuple(Path(p).stem for p in given_paths),
    )
    click.echo(json.dumps(report.as_dict(), sort_keys=True))


@main.command(name="louvain")
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--resolution", default=1.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def louvain_cmd(matrix_path, seed, resolution, out):
    """Cluster one similarity matrix."""
    try:
        sim = load_similarity_csv(matrix_path)
        partition = louvain(graph_from_similarity(sim), seed=seed, resolution=resolution)
    except NetfuseError as exc:
        _fail(exc)
    write_partition_csv(out, partition.as_dict())
    click.echo(json.dumps({
        "communities": partition.n_communities,
        "modularity": partition.modularity,
        "seed": partition.seed,
        "prng": partition.prng,
    }, sort_keys=True))


@main.command(name="consensus")
@click.option("--matrix", "matrix_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Similarity matrix CSV; repeat per period.")
@click.option("--runs", default=1000, show_default=True)
@click.option("--tau", default=0.8, show_default=True)
@click.option("--master-seed", default=0, show_default=True)
@click.option("--denominator", type=click.Choice(["exposure", "total"]),
              default="exposure", show_default=True)
@click.option("--jobs", default=1, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
def consensus_cmd(matrix_paths, runs, tau, master_seed, denominator, jobs, out_dir):
    """Consensus communities pooled over several matrices."""
    try:
        matrices = [load_similarity_csv(p) for p in matrix_paths]
        result = consensus_communities(
            matrices, runs_per_matrix=runs, tau=tau, master_seed=master_seed,
            denominator=denominator, jobs=jobs,
        )
    except NetfuseError as exc:
        _fail(exc)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_partition_csv(out / "communities.csv", result.assignment)
    (out / "isolates.txt").write_text(
        "".join(f"{n}\n" for n in result.isolates), encoding="utf-8"
    )
    summary = {
        "n_communities": result.n_communities,
        "n_isolates": len(result.isolates),
        "n_nodes": len(result.roster),
        "modularity": result.modularity,
        "tau": result.tau,
        "runs_per_matrix": result.runs_per_matrix,
        "denominator": result.denominator,
        "master_seed": result.master_seed,
        "prng": result.prng,
    }
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n",
                                      encoding="utf-8")
    click.echo(json.dumps(summary, sort_keys=True))


@main.command(name="align")
@click.option("--matrix", "matrix_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Similarity matrix CSV per period, in time order.")
@click.option("--mode", type=click.Choice(["intersect", "impute"]), default="intersect",
              show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
def align_cmd(matrix_paths, mode, out_dir):
    """Align period matrices onto a shared roster."""
    try:
        matrices = [load_similarity_csv(p) for p in matrix_paths]
        aligned = align_matrices(matrices, mode=mode)
    except NetfuseError as exc:
        _fail(exc)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for path, matrix in zip(matrix_paths, aligned):
        target = out / f"{Path(path).stem}.csv"
        write_matrix_csv(target, matrix.roster, matrix.values, checksum=True)
    click.echo(f"aligned {len(aligned)} matrices ({mode}) onto "
               f"{len(aligned[0].roster)} nodes in {out}")


@main.command(name="aggregate")
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--partition", "partition_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="node_id,community CSV.")
@click.option("--top-fraction", default=0.1, show_default=True)
@click.option("--fmt", "formats", multiple=True, type=click.Choice(EXPORT_FORMATS),
              default=("graphml",), show_default=True)
@click.option("--out", "out_base", type=click.Path(dir_okay=False), required=True,
              help="Output path without extension; one file per format.")
def aggregate_cmd(matrix_path, partition_path, top_fraction, formats, out_base):
    """Average a matrix over partition groups and export the group graph."""
    try:
        sim = load_similarity_csv(matrix_path)
        mapping = read_partition_csv(partition_path)
        members = [n for n in sim.roster.ids if n in mapping]
        gm = shrink(sim.restrict(members), {n: mapping[n] for n in members})
        edges = top_edges(gm, top_fraction)
        graph = community_graph(gm, edges)
        for fmt in formats:
            export_graph(graph, f"{out_base}.{fmt}", fmt)
    except NetfuseError as exc:
        _fail(exc)
    click.echo(f"aggregated {len(gm)} groups, kept {len(edges)} edges "
               f"({', '.join(formats)})")


@main.command(name="pipeline")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--jobs", default=1, show_default=True,
              help="Worker threads for ensemble runs; results do not depend on it.")
def pipeline_cmd(config_path, out_dir, jobs):
    """Run the full pipeline from a JSON config."""
    try:
        manifest = run_pipeline(config_path, out_dir, jobs=jobs)
    except NetfuseError as exc:
        _fail(exc)
    click.echo(f"pipeline complete; manifest at {manifest}")


@main.command(name="fetch")
@click.option("--issn", "issns", multiple=True, required=True)
@click.option("--from-year", type=int, required=True)
@click.option("--to-year", type=int, required=True)
@click.option("--api-base", default=DEFAULT_API_BASE, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def fetch_cmd(issns, from_year, to_year, api_base, out):
    """Fetch works for journals from an OpenAlex-compatible API.

    Reads the bearer token from NETFUSE_API_TOKEN if set.
    """
    try:
        works = fetch_works(list(issns), from_year, to_year, api_base=api_base)
    except NetfuseError as exc:
        _fail(exc)
    with open(out, "w", encoding="utf-8") as fh:
        for w in works:
            fh.write(json.dumps({
                "id": w.id,
                "journal": w.journal,
                "authors": list(w.authors),
                "references": list(w.references),
                "type": w.type,
                "ref_count": len(w.references),
            }, sort_keys=True) + "\n")
    click.echo(f"wrote {len(works)} works to {out}")


@main.command(name="synth")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--journals", default=60, show_default=True)
@click.option("--blocks", default=4, show_default=True)
@click.option("--periods", default=3, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--runs", default=1000, show_default=True,
              help="Consensus runs per matrix written into the config.")
def synth_cmd(out_dir, journals, blocks, periods, seed, runs):
    """Write a synthetic block-structured corpus plus pipeline config."""
    config = make_corpus(
        out_dir, n_journals=journals, n_blocks=blocks, periods=periods,
        seed=seed, runs_per_matrix=runs,
    )
    click.echo(f"synthetic corpus ready; config at {config}")


if __name__ == "__main__":
    main()
