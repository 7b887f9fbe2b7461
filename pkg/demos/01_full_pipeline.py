"""Walks the whole command-line pipeline on a tiny in-script corpus:

  stats -> calibrate -> build (mmt + tmt) -> run -> report

Everything happens inside a scratch directory and the final markdown report
is printed, along with the manifest of one output so you can see what gets
recorded for reproducibility. Run as:

    python demos/01_full_pipeline.py
"""

import json
import pathlib
import tempfile

from abnirml.cli import main, manifest_path, verify_manifest

QUERIES = "q1\tfresh water fish tanks\nq2\tbird migration patterns\n"
COLLECTION = (
    "d1\tThe fresh water tank needs a filter and some plants.\n"
    "d2\tMigration of the arctic bird follows the coast in autumn.\n"
    "d3\tFish thrive when the water is clean and the tank is large.\n"
    "d4\tSome birds fly at night during the long migration season.\n"
    "d5\tA guide to planting a garden in dry soil with little water.\n"
    "d6\tWater quality matters more than tank size for most fish.\n")
QRELS = ("q1 0 d1 2\nq1 0 d3 3\nq1 0 d5 0\nq1 0 d6 1\n"
         "q2 0 d2 3\nq2 0 d4 2\nq2 0 d5 0\n")
RUN = "".join(f"q1 Q0 d{d} {r + 1} {9.0 - r} demo\n"
              for r, d in enumerate((3, 6, 1, 5))) \
    + "".join(f"q2 Q0 d{d} {r + 1} {8.0 - r} demo\n"
              for r, d in enumerate((2, 4, 5)))


def sh(args):
    print(f"$ abnirml {' '.join(args)}")
    rc = main(args)
    assert rc == 0, f"exit code {rc}"


with tempfile.TemporaryDirectory() as tmp:
    root = pathlib.Path(tmp)
    import os
    os.chdir(root)
    (root / "queries.tsv").write_text(QUERIES, encoding="utf-8")
    (root / "collection.tsv").write_text(COLLECTION, encoding="utf-8")
    (root / "qrels.txt").write_text(QRELS, encoding="utf-8")
    (root / "run.txt").write_text(RUN, encoding="utf-8")

    # collection statistics feed BM25's idf and length normalization
    sh(["stats", "--collection", "collection.tsv", "--out", "stats.json"])

    # the preference margin delta comes from adjacent score gaps in a run;
    # with only a handful of docs per query we lower the top-k cutoff
    sh(["calibrate", "--scorer", "bm25", "--stats", "stats.json",
        "--run", "run.txt", "--collection", "collection.tsv",
        "--queries", "queries.tsv", "--top-k-diff", "3", "--out", "delta.json"])
    print("calibrated:", (root / "delta.json").read_text().strip(), "\n")

    # two test sets: judged pairs matched on length but differing in
    # relevance, and original-vs-shuffled document pairs
    sh(["build", "mmt", "--qrels", "qrels.txt", "--collection", "collection.tsv",
        "--queries", "queries.tsv", "--variable", "Relevance", "--control", "Length",
        "--tolerance", "Length=20", "--out", "mmt.jsonl"])
    sh(["build", "tmt", "--qrels", "qrels.txt", "--collection", "collection.tsv",
        "--queries", "queries.tsv", "--kind", "ShuffleWords", "--seed", "7",
        "--out", "tmt.jsonl"])

    for name in ("mmt", "tmt"):
        sh(["run", "--test", f"{name}.jsonl", "--scorer", "bm25",
            "--stats", "stats.json", "--delta-file", "delta.json",
            "--out", f"{name}.eff.jsonl"])

    sh(["report", "--test", "mmt.jsonl", "--effects", "mmt.eff.jsonl",
        "--test", "tmt.jsonl", "--effects", "tmt.eff.jsonl",
        "--format", "markdown", "--out", "report.md"])

    print("\n" + (root / "report.md").read_text())
    print("manifest for report.md:")
    manifest = json.loads(pathlib.Path(manifest_path("report.md")).read_text())
    print(json.dumps(manifest, indent=2))
    print("\nmanifest verifies:", verify_manifest(manifest_path("report.md")))
