"""Seeded synthetic corpus for demos, determinism checks, and benchmarks.

Journals fall into blocks that share editors, author pools, reference
pools, and an embedding centroid, so every layer carries the same
planted structure plus independent noise.  A slice of journals churns:
each is absent from one period, which exercises alignment, exposure
bookkeeping, and imputation downstream.  All sampling comes from one
numpy generator seeded explicitly, and rows are written in sorted
order, so two calls with equal arguments produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

DEFAULT_SNF = {"k": 20, "alpha": 0.5, "iterations": 20, "mode": "kernel"}
DEFAULT_CONSENSUS = {"runs_per_matrix": 1000, "tau": 0.8, "denominator": "exposure"}
DEFAULT_AGGREGATE = {"top_fraction": 0.1, "formats": ["graphml", "gexf", "csv"]}


def make_corpus(
    out_dir,
    n_journals: int = 60,
    n_blocks: int = 4,
    periods: int = 3,
    seed: int = 7,
    works_per_journal: int = 6,
    embed_dim: int = 16,
    docs_per_journal: int = 2,
    churn_every: int = 10,
    runs_per_matrix: int = 1000,
    alignment: str = "impute",
) -> Path:
    """Write a block-structured corpus plus a pipeline config.

    Returns the path of the written config file.  Journal i belongs to
    block i % n_blocks and is absent from period (i // churn_every) %
    periods whenever i % churn_every == 0, which removes roughly
    1/churn_every of the roster per period.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    width = len(str(n_journals - 1))
    journals = [f"j{i:0{width}d}" for i in range(n_journals)]
    block_of = {j: i % n_blocks for i, j in enumerate(journals)}

    def absent_period(i: int) -> int | None:
        if i % churn_every == 0:
            return (i // churn_every) % periods
        return None

    editor_pool = {
        b: [f"e{b}_{t:02d}" for t in range(15)] for b in range(n_blocks)
    }
    shared_editors = [f"eg_{t:02d}" for t in range(8)]
    author_pool = {
        b: [f"a{b}_{t:03d}" for t in range(40)] for b in range(n_blocks)
    }
    shared_authors = [f"ag_{t:03d}" for t in range(20)]
    ref_pool = {
        b: [f"r{b}_{t:03d}" for t in range(60)] for b in range(n_blocks)
    }
    shared_refs = [f"rg_{t:03d}" for t in range(40)]

    centroids = rng.normal(size=(n_blocks, embed_dim))
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)

    period_names = [f"p{t}" for t in range(periods)]
    config_periods = []
    for t, pname in enumerate(period_names):
        roster = [
            j for i, j in enumerate(journals) if absent_period(i) != t
        ]

        editor_rows = []
        for j in roster:
            b = block_of[j]
            chosen = rng.choice(editor_pool[b], size=4, replace=False)
            editor_rows.extend((j, e) for e in sorted(chosen))
            editor_rows.append((j, shared_editors[int(rng.integers(len(shared_editors)))]))
        editor_rows.sort()
        with open(out / f"{pname}_editors.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["journal_id", "editor_id"])
            writer.writerows(editor_rows)

        work_lines = []
        for j in roster:
            b = block_of[j]
            for w in range(works_per_journal):
                authors = sorted(rng.choice(author_pool[b], size=3, replace=False))
                if rng.random() < 0.1:
                    authors.append(shared_authors[int(rng.integers(len(shared_authors)))])
                refs = sorted(rng.choice(ref_pool[b], size=8, replace=False))
                refs += sorted(rng.choice(shared_refs, size=2, replace=False))
                wtype = "research-article"
                if w == works_per_journal - 1 and rng.random() < 0.25:
                    wtype = "editorial"  # filtered out downstream
                record = {
                    "id": f"w_{pname}_{j}_{w:02d}",
                    "journal": j,
                    "authors": list(authors),
                    "references": list(refs),
                    "type": wtype,
                    "ref_count": len(refs),
                }
                work_lines.append(json.dumps(record, sort_keys=True))
        # one malformed-free extra: a record with no references, also filtered
        work_lines.append(
            json.dumps(
                {
                    "id": f"w_{pname}_norefs",
                    "journal": roster[0],
                    "authors": [author_pool[block_of[roster[0]]][0]],
                    "references": [],
                    "type": "research-article",
                    "ref_count": 0,
                },
                sort_keys=True,
            )
        )
        (out / f"{pname}_works.jsonl").write_text(
            "\n".join(work_lines) + "\n", encoding="utf-8"
        )

        emb_lines = []
        for j in roster:
            b = block_of[j]
            for d in range(docs_per_journal):
                vec = centroids[b] + 0.3 * rng.normal(size=embed_dim)
                emb_lines.append(
                    json.dumps(
                        {
                            "journal": j,
                            "doc": f"{j}_doc{d}",
                            "vec": [float(x) for x in vec],
                        },
                        sort_keys=True,
                    )
                )
        (out / f"{pname}_embeddings.jsonl").write_text(
            "\n".join(emb_lines) + "\n", encoding="utf-8"
        )

        config_periods.append(
            {
                "name": pname,
                "works": f"{pname}_works.jsonl",
                "editors": f"{pname}_editors.csv",
                "embeddings": f"{pname}_embeddings.jsonl",
            }
        )

    consensus = dict(DEFAULT_CONSENSUS)
    consensus["runs_per_matrix"] = runs_per_matrix
    config = {
        "master_seed": seed,
        "alignment": alignment,
        "transform": True,
        "snf": DEFAULT_SNF,
        "consensus": consensus,
        "aggregate": DEFAULT_AGGREGATE,
        "periods": config_periods,
    }
    config_path = out / "run.json"
    config_path.write_text(
        json.dumps(config, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return config_path
