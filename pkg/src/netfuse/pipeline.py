"""End-to-end pipeline: ingest, layers, fusion, statistics, alignment,
consensus, aggregation.

A run is described by a JSON config and produces a directory of
artifacts plus ``manifest.json``, which records the tool version, the
PRNG identifier, the config checksum, every stage's input and output
checksums, and the seeds used.  Reruns of the same config produce byte
identical artifacts and manifest regardless of the ``jobs`` setting;
wall-clock numbers therefore live in a separate ``timings.json``.

Stage outputs are first written with a ``.partial`` suffix and renamed
on stage success, so a failed stage leaves its partial files behind for
inspection and raises StageError naming the stage.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from ._rng import PRNG_ID
from ._version import __version__
from .aggregate import community_graph, export_graph, shrink, top_edges
from .align import align
from .community import write_partition_csv
from .consensus import consensus_communities
from .core import (
    Multiplex,
    SimilarityMatrix,
    load_similarity_csv,
    sha256_file,
    write_matrix_csv,
)
from .depstats import DependenceCache
from .errors import StageError, ValidationError
from .ingest import read_editor_pairs_csv, read_embeddings_jsonl, read_works_jsonl
from .layers import LAYER_KINDS, build_period_layers
from .snf import fuse
from .synthetic import DEFAULT_AGGREGATE, DEFAULT_CONSENSUS, DEFAULT_SNF

logger = logging.getLogger("netfuse.pipeline")

MIN_COMMUNITY_FOR_PDC = 4


@dataclass(frozen=True)
class PeriodSpec:
    name: str
    works: Path
    editors: Path
    embeddings: Path


@dataclass(frozen=True)
class PipelineConfig:
    periods: tuple[PeriodSpec, ...]
    master_seed: int = 0
    alignment: str = "impute"
    transform: bool = True
    snf: dict = field(default_factory=lambda: dict(DEFAULT_SNF))
    consensus: dict = field(default_factory=lambda: dict(DEFAULT_CONSENSUS))
    aggregate: dict = field(default_factory=lambda: dict(DEFAULT_AGGREGATE))

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from None
        base = path.parent
        try:
            periods = tuple(
                PeriodSpec(
                    name=str(p["name"]),
                    works=base / p["works"],
                    editors=base / p["editors"],
                    embeddings=base / p["embeddings"],
                )
                for p in raw["periods"]
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{path}: bad periods entry: {exc}") from None
        if len({p.name for p in periods}) != len(periods):
            raise ValidationError(f"{path}: duplicate period names")
        snf = dict(DEFAULT_SNF)
        snf.update(raw.get("snf", {}))
        consensus = dict(DEFAULT_CONSENSUS)
        consensus.update(raw.get("consensus", {}))
        aggregate = dict(DEFAULT_AGGREGATE)
        aggregate.update(raw.get("aggregate", {}))
        return cls(
            periods=periods,
            master_seed=int(raw.get("master_seed", 0)),
            alignment=str(raw.get("alignment", "impute")),
            transform=bool(raw.get("transform", True)),
            snf=snf,
            consensus=consensus,
            aggregate=aggregate,
        )


class _Stage:
    """Collects outputs for one stage; finalizes .partial files on success."""

    def __init__(self, runner: "_Runner", name: str):
        self.runner = runner
        self.name = name
        self.inputs: list[Path] = []
        self.seeds: list[int] = []
        self._pending: list[tuple[Path, Path]] = []

    def read(self, path: Path) -> Path:
        self.inputs.append(Path(path))
        return Path(path)

    def out(self, relpath: str) -> Path:
        """Register an output; returns the .partial path to write to."""
        final = self.runner.out_dir / relpath
        final.parent.mkdir(parents=True, exist_ok=True)
        partial = final.with_name(final.name + ".partial")
        self._pending.append((partial, final))
        return partial

    def _finalize(self) -> list[Path]:
        finals = []
        for partial, final in self._pending:
            if not partial.exists():
                raise StageError(self.name, f"declared output {final.name} was never written")
            partial.replace(final)
            finals.append(final)
        return finals


class _Runner:
    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.records: list[dict] = []
        self.timings: list[dict] = []

    def run(self, name: str, fn) -> None:
        stage = _Stage(self, name)
        started = time.perf_counter()
        logger.info("stage %s: start", name)
        try:
            fn(stage)
        except StageError:
            raise
        except Exception as exc:
            logger.error("stage %s: failed: %s", name, exc)
            raise StageError(name, str(exc)) from exc
        finals = stage._finalize()
        elapsed = time.perf_counter() - started
        rel = self.out_dir
        self.records.append(
            {
                "name": name,
                "inputs": {
                    _rel_key(p, rel): sha256_file(p) for p in sorted(set(stage.inputs))
                },
                "outputs": {_rel_key(p, rel): sha256_file(p) for p in finals},
                "seeds": stage.seeds,
            }
        )
        self.timings.append({"name": name, "seconds": elapsed})
        logger.info("stage %s: done in %.2fs", name, elapsed)


def _rel_key(path: Path, out_dir: Path) -> str:
    try:
        return str(Path(path).relative_to(out_dir))
    except ValueError:
        return Path(path).name


def _write_report_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def run_pipeline(config: PipelineConfig | str | Path, out_dir, jobs: int = 1) -> Path:
    """Execute every stage; returns the manifest path."""
    if not isinstance(config, PipelineConfig):
        config_path = Path(config)
        config_sha = sha256_file(config_path)
        config = PipelineConfig.from_json(config_path)
    else:
        config_sha = None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = _Runner(out)

    multiplexes: dict[str, Multiplex] = {}
    fused: dict[str, SimilarityMatrix] = {}

    for period in config.periods:
        def ingest_stage(stage: _Stage, period=period) -> None:
            works = read_works_jsonl(stage.read(period.works))
            pairs = read_editor_pairs_csv(stage.read(period.editors))
            embeddings = read_embeddings_jsonl(stage.read(period.embeddings))
            multiplex = build_period_layers(
                works, pairs, embeddings, transform=config.transform
            )
            multiplexes[period.name] = multiplex
            for kind in LAYER_KINDS:
                layer = multiplex[kind]
                write_matrix_csv(
                    stage.out(f"layers/{period.name}_{kind}.csv"),
                    layer.roster,
                    layer.values,
                    checksum=True,
                )
            logger.info(
                "period %s: %d journals on the common roster",
                period.name,
                len(multiplex.roster),
            )

        runner.run(f"ingest:{period.name}", ingest_stage)

    for period in config.periods:
        def fuse_stage(stage: _Stage, period=period) -> None:
            multiplex = multiplexes[period.name]
            matrix = fuse(
                multiplex,
                k=int(config.snf["k"]),
                alpha=float(config.snf["alpha"]),
                iterations=int(config.snf["iterations"]),
                mode=str(config.snf["mode"]),
            )
            fused[period.name] = matrix
            write_matrix_csv(
                stage.out(f"fused/{period.name}.csv"),
                matrix.roster,
                matrix.values,
                checksum=True,
            )

        runner.run(f"fuse:{period.name}", fuse_stage)

    def stats_stage(stage: _Stage) -> None:
        layer_rows, fused_rows, pdc_rows = [], [], []
        for period in config.periods:
            multiplex = multiplexes[period.name]
            f = fused[period.name]
            # one cache per period: each matrix's distance form is computed once
            cache = DependenceCache()
            for i, a in enumerate(LAYER_KINDS):
                for b in LAYER_KINDS[i + 1 :]:
                    layer_rows.append(
                        [period.name, a, b, cache.dcor(multiplex[a], multiplex[b])]
                    )
            for kind in LAYER_KINDS:
                fused_rows.append([period.name, kind, cache.dcor(f, multiplex[kind])])
                others = [multiplex[k] for k in LAYER_KINDS if k != kind]
                pdc_rows.append(
                    [period.name, kind, cache.partial(f, multiplex[kind], others)]
                )
        _write_report_csv(
            stage.out("stats/gdc_layers.csv"),
            ["period", "layer_a", "layer_b", "gdc"],
            layer_rows,
        )
        _write_report_csv(
            stage.out("stats/gdc_fused.csv"), ["period", "layer", "gdc"], fused_rows
        )
        _write_report_csv(
            stage.out("stats/pdc_fused.csv"),
            ["period", "layer", "pdc_given_other_layers"],
            pdc_rows,
        )

    runner.run("stats", stats_stage)

    aligned: dict[str, list[SimilarityMatrix]] = {}

    def align_stage(stage: _Stage) -> None:
        modes = ["intersect", "impute"] if config.alignment == "both" else [config.alignment]
        order = [p.name for p in config.periods]
        rows = []
        for mode in modes:
            matrices = align([fused[name] for name in order], mode=mode)
            aligned[mode] = matrices
            for name, matrix in zip(order, matrices):
                write_matrix_csv(
                    stage.out(f"aligned/{mode}/{name}.csv"),
                    matrix.roster,
                    matrix.values,
                    checksum=True,
                )
            cache = DependenceCache()
            for i, a in enumerate(order):
                for j in range(i + 1, len(order)):
                    rows.append([mode, a, order[j], cache.dcor(matrices[i], matrices[j])])
        _write_report_csv(
            stage.out("stats/gdc_intertemporal.csv"),
            ["mode", "period_a", "period_b", "gdc"],
            rows,
        )

    runner.run("align", align_stage)

    consensus_holder: dict[str, object] = {}

    def consensus_stage(stage: _Stage) -> None:
        order = [p.name for p in config.periods]
        result = consensus_communities(
            [fused[name] for name in order],
            runs_per_matrix=int(config.consensus["runs_per_matrix"]),
            tau=float(config.consensus["tau"]),
            master_seed=config.master_seed,
            denominator=str(config.consensus["denominator"]),
            jobs=jobs,
        )
        consensus_holder["result"] = result
        stage.seeds.append(config.master_seed)
        write_partition_csv(stage.out("consensus/communities.csv"), result.assignment)
        stage.out("consensus/isolates.txt").write_text(
            "".join(f"{node}\n" for node in result.isolates), encoding="utf-8"
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
        stage.out("consensus/summary.json").write_text(
            json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    runner.run("consensus", consensus_stage)
    result = consensus_holder["result"]

    def community_stats_stage(stage: _Stage) -> None:
        rows = []
        assignment = result.assignment
        communities: dict[int, list[str]] = {}
        for node, c in assignment.items():
            communities.setdefault(c, []).append(node)
        for c in sorted(communities):
            members = communities[c]
            for period in config.periods:
                multiplex = multiplexes[period.name]
                f = fused[period.name]
                here = [n for n in members if n in f.roster]
                if len(here) < MIN_COMMUNITY_FOR_PDC:
                    continue
                sub_f = f.restrict(here)
                subs = {k: multiplex[k].restrict(here) for k in LAYER_KINDS}
                cache = DependenceCache()
                for kind in LAYER_KINDS:
                    others = [subs[k] for k in LAYER_KINDS if k != kind]
                    rows.append(
                        [period.name, c, len(here), kind,
                         cache.partial(sub_f, subs[kind], others)]
                    )
        _write_report_csv(
            stage.out("stats/pdc_communities.csv"),
            ["period", "community", "members_present", "layer", "pdc_given_other_layers"],
            rows,
        )

    runner.run("community-stats", community_stats_stage)

    def aggregate_stage(stage: _Stage) -> None:
        fraction = float(config.aggregate["top_fraction"])
        formats = list(config.aggregate["formats"])
        assignment = result.assignment
        for period in config.periods:
            f = fused[period.name]
            members = [n for n in f.roster.ids if n in assignment]
            sub = f.restrict(members)
            gm = shrink(sub, {n: assignment[n] for n in members})
            edges = top_edges(gm, fraction)
            graph = community_graph(gm, edges)
            for fmt in formats:
                export_graph(graph, stage.out(f"aggregate/{period.name}.{fmt}"), fmt)

    runner.run("aggregate", aggregate_stage)

    manifest = {
        "tool": "netfuse",
        "version": __version__,
        "prng": PRNG_ID,
        "config_sha256": config_sha,
        "master_seed": config.master_seed,
        "alignment": config.alignment,
        "stages": runner.records,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (out / "timings.json").write_text(
        json.dumps(runner.timings, indent=2) + "\n", encoding="utf-8"
    )
    return manifest_path


def load_fused_matrices(out_dir, period_names) -> list[SimilarityMatrix]:
    """Convenience reader for downstream tools."""
    return [load_similarity_csv(Path(out_dir) / "fused" / f"{n}.csv") for n in period_names]
