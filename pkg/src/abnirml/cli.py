"""Command-line surface: stats -> calibrate -> build -> run -> report.

Every output file gets a sibling <out>.manifest.json recording input and
output content hashes, seeds, scorer parameters, and the PRNG and stopword
list in effect, so any result can be re-derived and checked byte for byte.
Outputs are written atomically; a failing step leaves nothing behind.

Exit codes: 0 success, 1 validation/config error, 2 I/O error,
3 scorer/protocol error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from . import __version__
from .corpus import (
    atomic_write_text,
    compute_stats,
    load_collection,
    load_qrels,
    load_queries,
    load_run,
    load_stats,
    save_stats,
)
from .dtt import build_fluency, build_formality, build_summarization, load_l6_index, load_pair_records
from .errors import (
    AbnirmlError,
    CacheError,
    ConfigError,
    EvaluationError,
    ParseError,
    ScorerProtocolError,
    ValidationError,
)
from .mmt import CHARACTERISTICS, MmtSpec, build_mmt
from .pairtest import evaluate, load_effects, load_test_set, save_effects, save_test_set
from .scorers import Bm25Scorer, CachedScorer, ExternalScorer, calibrate_delta, load_delta, save_delta
from .stats_report import DEFAULT_ALPHA, REPORT_FORMATS, render_report, summarize_test
from .textproc import _read_data, default_pipeline
from .tmt import MANIPULATION_KINDS, build_tmt, load_expansion_map

PRNG_NAME = "splitmix64"


# --- manifests ---------------------------------------------------------------


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _stopword_list_sha256() -> str:
    return hashlib.sha256(_read_data("stopwords.txt").encode("utf-8")).hexdigest()


def manifest_path(out_path) -> str:
    return f"{os.fspath(out_path)}.manifest.json"


def write_manifest(out_path, command: str, params: dict, inputs: list,
                   scorer: dict | None = None, seeds: dict | None = None,
                   delta_source: dict | None = None) -> str:
    manifest = {
        "tool": {"name": "abnirml", "version": __version__},
        "command": command,
        "prng": PRNG_NAME,
        "stopword_list_sha256": _stopword_list_sha256(),
        "params": params,
        "scorer": scorer,
        "seeds": seeds,
        "delta_source": delta_source,
        "inputs": {os.fspath(p): _sha256_file(p) for p in inputs},
        "outputs": {os.fspath(out_path): _sha256_file(out_path)},
    }
    path = manifest_path(out_path)
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True,
                                       ensure_ascii=False) + "\n")
    return path


def verify_manifest(path) -> bool:
    """Re-hash every input and output named by the manifest. Problems are
    listed on stderr; returns True only when everything matches."""
    with open(path, encoding="utf-8") as f:
        try:
            manifest = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"bad manifest: {e}", path=str(path)) from None
    problems = []
    for section in ("inputs", "outputs"):
        for file_path, recorded in manifest.get(section, {}).items():
            if not os.path.exists(file_path):
                problems.append(f"missing {section[:-1]}: {file_path}")
            elif _sha256_file(file_path) != recorded:
                problems.append(f"hash mismatch: {file_path}")
    for problem in problems:
        print(problem, file=sys.stderr)
    return not problems


# --- scorer construction -----------------------------------------------------


def _add_scorer_args(parser):
    parser.add_argument("--scorer", required=True,
                        help="'bm25' or 'external:<command or host:port>'")
    parser.add_argument("--collection", help="docid<TAB>text file")
    parser.add_argument("--stats", help="precomputed collection stats JSON "
                                        "(otherwise derived from --collection)")
    parser.add_argument("--k1", type=float, default=1.2)
    parser.add_argument("--b", type=float, default=0.75)
    parser.add_argument("--clamp-idf", action="store_true",
                        help="floor negative idf values at zero")
    parser.add_argument("--timeout", type=float, default=30.0,
                        help="external scorer response timeout, seconds")
    parser.add_argument("--cache-dir",
                        help="score cache directory (env ABNIRML_CACHE)")
    parser.add_argument("--jobs", type=int, default=1)


def _make_scorer(args, config):
    if args.scorer == "bm25":
        if args.stats:
            stats = load_stats(args.stats)
        elif args.collection:
            stats = compute_stats(load_collection(args.collection), config)
        else:
            raise ConfigError("bm25 scorer needs --collection or --stats")
        scorer = Bm25Scorer(stats, config, k1=args.k1, b=args.b,
                            clamp_negative_idf=args.clamp_idf)
        described = {"spec": "bm25", "k1": args.k1, "b": args.b,
                     "clamp_negative_idf": bool(args.clamp_idf)}
    elif args.scorer.startswith("external:"):
        target = args.scorer[len("external:"):]
        if not target:
            raise ConfigError("external scorer spec is empty")
        scorer = ExternalScorer(target, timeout=args.timeout)
        described = {"spec": args.scorer, "timeout": args.timeout}
    else:
        raise ConfigError(
            f"unknown scorer {args.scorer!r}; use 'bm25' or 'external:<target>'")
    cache_dir = args.cache_dir or os.environ.get("ABNIRML_CACHE")
    if cache_dir:
        scorer = CachedScorer(scorer, cache_dir)
    return scorer, described


# --- subcommands -------------------------------------------------------------


def _cmd_stats(args) -> int:
    config = default_pipeline()
    stats = compute_stats(load_collection(args.collection), config)
    save_stats(stats, args.out)
    write_manifest(args.out, "stats", {}, [args.collection])
    return 0


def _cmd_calibrate(args) -> int:
    config = default_pipeline()
    scorer, described = _make_scorer(args, config)
    if not args.collection:
        raise ConfigError("calibrate needs --collection to resolve run docids")
    with scorer:
        delta = calibrate_delta(
            scorer,
            load_run(args.run),
            load_collection(args.collection),
            load_queries(args.queries),
            top_k_rescore=args.top_k_rescore,
            top_k_diff=args.top_k_diff,
            jobs=args.jobs,
        )
    save_delta(delta, args.out)
    inputs = [args.run, args.collection, args.queries]
    if args.stats:
        inputs.append(args.stats)
    write_manifest(args.out, "calibrate",
                   {"top_k_rescore": args.top_k_rescore,
                    "top_k_diff": args.top_k_diff},
                   inputs, scorer=described)
    return 0


def _build_inputs(args):
    loaded = (load_qrels(args.qrels), load_collection(args.collection),
              load_queries(args.queries))
    return loaded, [args.qrels, args.collection, args.queries]


def _cmd_build_mmt(args) -> int:
    config = default_pipeline()
    (qrels, collection, queries), inputs = _build_inputs(args)
    tolerances = {}
    for item in args.tolerance or []:
        name, sep, value = item.partition("=")
        if not sep or name not in CHARACTERISTICS:
            raise ConfigError(
                f"--tolerance expects <characteristic>=<value>, got {item!r}")
        tolerances[name] = float(value) if name == "Overlap" else int(value)
    spec = MmtSpec(args.variable, args.control,
                   control_tolerance=tolerances.get(args.control))
    test = build_mmt(spec, qrels, collection, queries, config)
    save_test_set(test, args.out)
    write_manifest(args.out, "build mmt",
                   {"variable": args.variable, "control": args.control,
                    "control_tolerance": str(spec.control_tolerance)},
                   inputs)
    return 0


def _cmd_build_tmt(args) -> int:
    config = default_pipeline()
    (qrels, collection, queries), inputs = _build_inputs(args)
    expansion_map = None
    if args.expansion_file:
        expansion_map = load_expansion_map(args.expansion_file)
        inputs.append(args.expansion_file)
    test = build_tmt(args.kind, qrels, collection, queries, seed=args.seed,
                     config=config, expansion_map=expansion_map)
    save_test_set(test, args.out)
    write_manifest(args.out, "build tmt", {"kind": args.kind}, inputs,
                   seeds={"seed": args.seed})
    return 0


def _cmd_build_dtt(args) -> int:
    config = default_pipeline()
    pairs = load_pair_records(args.pairs)
    inputs = [args.pairs]
    task = {"summ": "summarization"}.get(args.task, args.task)
    if task == "fluency":
        test = build_fluency(pairs, seed=args.seed, config=config)
    elif task == "formality":
        if not args.l6:
            raise ConfigError("formality task needs --l6 <index.tsv>")
        test = build_formality(pairs, load_l6_index(args.l6), config=config)
        inputs.append(args.l6)
    else:
        test = build_summarization(pairs, seed=args.seed,
                                   subsample_rate=args.rate, config=config)
    save_test_set(test, args.out)
    write_manifest(args.out, "build dtt",
                   {"task": task, "rate": args.rate}, inputs,
                   seeds={"seed": args.seed})
    return 0


def _cmd_run(args) -> int:
    config = default_pipeline()
    test = load_test_set(args.test)
    inputs = [args.test]
    if args.collection:
        inputs.append(args.collection)
    if args.stats:
        inputs.append(args.stats)
    if args.delta_file is not None:
        delta = load_delta(args.delta_file).delta
        delta_source = {"delta_file": os.fspath(args.delta_file),
                        "sha256": _sha256_file(args.delta_file), "delta": delta}
        inputs.append(args.delta_file)
    else:
        delta = args.delta
        delta_source = {"delta": delta}
    scorer, described = _make_scorer(args, config)
    with scorer:
        records = evaluate(test, scorer, delta, jobs=args.jobs)
    save_effects(records, args.out)
    write_manifest(args.out, "run", {}, inputs, scorer=described,
                   delta_source=delta_source)
    return 0


def _cmd_report(args) -> int:
    if len(args.test) != len(args.effects):
        raise ConfigError(
            f"{len(args.test)} --test files but {len(args.effects)} --effects files")
    results = []
    for test_path, effects_path in zip(args.test, args.effects):
        test = load_test_set(test_path)
        results.append(summarize_test(test, load_effects(effects_path)))
    text = render_report(results, args.format, alpha=args.alpha)
    if args.out:
        atomic_write_text(args.out, text)
        write_manifest(args.out, "report",
                       {"format": args.format, "alpha": args.alpha},
                       list(args.test) + list(args.effects))
    else:
        sys.stdout.write(text)
    return 0


# --- argument parsing --------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="abnirml",
                     description="Behavioral pair tests for ranking functions.")
    parser.add_argument("--version", action="version",
                        version=f"abnirml {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("stats", help="compute collection statistics")
    p.add_argument("--collection", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("calibrate", help="derive delta from a retrieval run")
    _add_scorer_args(p)
    p.add_argument("--run", required=True, help="TREC run file")
    p.add_argument("--queries", required=True)
    p.add_argument("--top-k-rescore", type=int, default=100)
    p.add_argument("--top-k-diff", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_calibrate)

    build = sub.add_parser("build", help="construct a pair test set")
    build_sub = build.add_subparsers(dest="builder", required=True,
                                     parser_class=_Parser)

    p = build_sub.add_parser("mmt", help="measure-and-match pairs")
    p.add_argument("--qrels", required=True)
    p.add_argument("--collection", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--variable", required=True, choices=CHARACTERISTICS)
    p.add_argument("--control", required=True, choices=CHARACTERISTICS)
    p.add_argument("--tolerance", action="append", metavar="NAME=VALUE")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_mmt)

    p = build_sub.add_parser("tmt", help="textual-manipulation pairs")
    p.add_argument("--qrels", required=True)
    p.add_argument("--collection", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--kind", required=True, choices=MANIPULATION_KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--expansion-file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_tmt)

    p = build_sub.add_parser("dtt", help="dataset-transfer pairs")
    p.add_argument("--task", required=True,
                   choices=["fluency", "formality", "summ", "summarization"])
    p.add_argument("--pairs", required=True, help="normalized JSONL pair file")
    p.add_argument("--l6", help="hash<TAB>title index for formality")
    p.add_argument("--rate", type=float, default=0.1,
                   help="summarization subsample rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_dtt)

    p = sub.add_parser("run", help="score a test set and write effects")
    _add_scorer_args(p)
    p.add_argument("--test", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--delta", type=float)
    group.add_argument("--delta-file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="summarize effects with significance")
    p.add_argument("--test", action="append", required=True)
    p.add_argument("--effects", action="append", required=True)
    p.add_argument("--format", default="markdown", choices=REPORT_FORMATS)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (ScorerProtocolError,) as e:
        print(f"abnirml: scorer error: {e}", file=sys.stderr)
        return 3
    except EvaluationError as e:
        print(f"abnirml: evaluation failed: {e}", file=sys.stderr)
        return 3
    except CacheError as e:
        print(f"abnirml: cache error: {e}", file=sys.stderr)
        return 2
    except (ValidationError, ConfigError, ParseError) as e:
        print(f"abnirml: error: {e}", file=sys.stderr)
        return 1
    except AbnirmlError as e:
        print(f"abnirml: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"abnirml: i/o error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
