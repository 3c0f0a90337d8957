"""Command-line pipeline driver.

Each subcommand consumes and produces the documented file formats
(corpus text, `.n2oe` matrices, neighbor JSONL dumps, CSV/JSON/SVG
reports), so stages can be rerun independently.  Exit codes: 0 success,
2 configuration error, 3 data/format error, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ._version import __version__
from .analysis import (
    ProbePipeline,
    filter_sts_pairs,
    mean_query_token_overlap,
    outlier_neighbors,
    paraphrase_probe,
    popular_neighbors,
    read_sts_tsv,
    write_popularity_jsonl,
    write_probe_csv,
    write_token_overlap_csv,
)
from .corpus import (
    Corpus,
    QuerySample,
    Sentence,
    derive_sample_seed,
    load_corpus,
    sample_queries,
)
from .embedders import (
    EmbeddingMatrix,
    build_average_matrix,
    build_tfidf_matrix,
    check_embedder_name,
    embed_average,
    embed_tfidf,
    fit_tfidf,
    load_word_vectors,
)
from .errors import ConfigError, DataFormatError, InvariantError, N2OError
from .heatmap import write_heatmap
from .lsh import best_params, tune_lsh, write_recall_csv
from .manifest import EmbedderEntry, RunManifest
from .matrix_io import read_matrix, write_matrix
from .overlap import (
    k_stability,
    n2o_matrix,
    stability_payload,
    write_n2o_csv,
    write_report_json,
)
from .search import batch_top_k, build_index, dump_neighbors, load_neighbors

DEFAULT_K = 50
DEFAULT_N = 100
DEFAULT_SAMPLES = 5
DEFAULT_SEED = 42
DEFAULT_K_GRID = "5,10,15,20,25,30,35,40,45,50"


def _add_corpus_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True, help="corpus file path")
    p.add_argument("--format", choices=("lines", "jsonl"), default="lines",
                   help="corpus file format (default: lines)")


def _add_embedder_flag(p: argparse.ArgumentParser, required=True) -> None:
    p.add_argument("--embedder", action="append", default=[],
                   metavar="NAME=SPEC", required=required,
                   help="embedder to run; spec is one of: tfidf, "
                        "word-avg:VECTORS[:cased|:uncased], import:FILE "
                        "(repeatable)")


def _parse_embedder_arg(raw: str) -> tuple[str, str]:
    if "=" not in raw:
        raise ConfigError(
            f"bad --embedder {raw!r}: expected NAME=SPEC"
        )
    name, spec = raw.split("=", 1)
    try:
        check_embedder_name(name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not spec:
        raise ConfigError(f"embedder {name!r}: empty spec")
    return name, spec


def _build_embedder(name: str, spec: str, corpus: Corpus,
                    want_pipeline: bool = False):
    """Materialize one embedder from its spec string.

    Returns (matrix, pipeline | None); a pipeline embeds unseen text and
    exists only for native embedders.
    """
    kind, _, rest = spec.partition(":")
    if kind == "tfidf":
        if rest:
            raise ConfigError(f"embedder {name!r}: tfidf takes no argument")
        matrix = build_tfidf_matrix(corpus, name=name)
        pipeline = None
        if want_pipeline:
            model = fit_tfidf(corpus)
            pipeline = ProbePipeline(
                embedder=name, matrix=matrix,
                embed_text=lambda text: embed_tfidf(model, Sentence(-1, text)),
            )
        return matrix, pipeline
    if kind == "word-avg":
        if not rest:
            raise ConfigError(
                f"embedder {name!r}: word-avg needs a vector file, "
                "word-avg:PATH[:cased|:uncased]"
            )
        cased = None
        path = rest
        base, _, suffix = rest.rpartition(":")
        if suffix in ("cased", "uncased") and base:
            cased = suffix == "cased"
            path = base
        table = load_word_vectors(path, cased=cased)
        matrix = build_average_matrix(corpus, table, name=name)
        pipeline = None
        if want_pipeline:
            pipeline = ProbePipeline(
                embedder=name, matrix=matrix,
                embed_text=lambda text: embed_average(table,
                                                      Sentence(-1, text)),
            )
        return matrix, pipeline
    if kind == "import":
        if not rest:
            raise ConfigError(
                f"embedder {name!r}: import needs a file, import:PATH"
            )
        matrix = read_matrix(rest, corpus=corpus, embedder=name)
        return matrix, None
    raise ConfigError(
        f"embedder {name!r}: unknown spec kind {kind!r} "
        "(expected tfidf, word-avg or import)"
    )


def _build_all(specs: list[tuple[str, str]], corpus: Corpus,
               want_pipeline: bool = False):
    built = []
    seen = set()
    for name, spec in specs:
        if name in seen:
            raise ConfigError(f"duplicate embedder name {name!r}")
        seen.add(name)
        try:
            matrix, pipeline = _build_embedder(name, spec, corpus,
                                               want_pipeline)
        except N2OError as exc:
            raise type(exc)(f"embedder {name!r}: {exc}") from exc
        built.append((name, spec, matrix, pipeline))
    return built


def _make_samples(corpus: Corpus, n: int, count: int, master_seed: int,
                  exclude=()) -> list[QuerySample]:
    if count < 1:
        raise ConfigError(f"sample count must be >= 1, got {count}")
    return [
        sample_queries(corpus, n, derive_sample_seed(master_seed, i),
                       exclude=exclude)
        for i in range(count)
    ]


def _write_samples_json(samples: list[QuerySample], master_seed: int,
                        path) -> None:
    payload = {
        "master_seed": master_seed,
        "n": len(samples[0]) if samples else 0,
        "samples": [
            {"index": i, "seed": s.seed, "query_ids": list(s.query_ids)}
            for i, s in enumerate(samples)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _load_samples_json(path) -> tuple[int, list[QuerySample]]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        samples = [
            QuerySample(seed=int(s["seed"]),
                        query_ids=tuple(int(q) for q in s["query_ids"]))
            for s in payload["samples"]
        ]
        return int(payload["master_seed"]), samples
    except OSError as exc:
        raise ConfigError(f"cannot read samples file {path}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: malformed samples file: {exc}") from exc


def _neighbors_path(out_dir: Path, name: str, sample_index: int) -> Path:
    return out_dir / f"neighbors_{name}_s{sample_index}.jsonl"


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_embed(args) -> int:
    corpus = load_corpus(args.corpus, args.format)
    out = _out_dir(args)
    specs = [_parse_embedder_arg(raw) for raw in args.embedder]
    built = _build_all(specs, corpus)
    manifest_path = out / "manifest.json"
    if manifest_path.exists():
        manifest = RunManifest.load(manifest_path)
    else:
        manifest = RunManifest(corpus_path=str(args.corpus),
                               corpus_format=args.format,
                               corpus_hash=corpus.content_hash,
                               out_dir=str(out))
    for name, spec, matrix, _ in built:
        path = out / f"{name}.n2oe"
        write_matrix(matrix, path)
        manifest.upsert_embedder(EmbedderEntry(name=name, spec=spec,
                                               matrix_path=str(path)))
        shape = f"{matrix.n_rows}x{matrix.dim}"
        kind = "sparse" if matrix.is_sparse else "dense"
        print(f"wrote {path} ({shape} {kind}, "
              f"{len(matrix.zero_rows)} zero rows)")
    manifest.write(manifest_path)
    print(f"wrote {manifest_path}")
    return 0


def cmd_sample(args) -> int:
    corpus = load_corpus(args.corpus, args.format)
    samples = _make_samples(corpus, args.n, args.samples, args.seed)
    out = _out_dir(args)
    path = out / "samples.json"
    _write_samples_json(samples, args.seed, path)
    print(f"wrote {path} ({args.samples} samples of n={args.n})")
    return 0


def _search_embedder(matrix: EmbeddingMatrix, samples: list[QuerySample],
                     k: int, threads: int, out: Path):
    """Neighbor dumps for one embedder across all samples."""
    index = build_index(matrix)
    per_sample = []
    for i, sample in enumerate(samples):
        lists = batch_top_k(index, sample.query_ids, k, threads=threads)
        dump_neighbors(lists, _neighbors_path(out, matrix.embedder, i))
        per_sample.append(lists)
    return per_sample


def cmd_search(args) -> int:
    corpus = load_corpus(args.corpus, args.format)
    out = _out_dir(args)
    _, samples = _load_samples_json(args.samples_file)
    specs = [_parse_embedder_arg(raw) for raw in args.embedder]
    built = _build_all(specs, corpus)
    for name, _, matrix, _ in built:
        _search_embedder(matrix, samples, args.k, args.threads, out)
        print(f"searched {name}: {len(samples)} samples, k={args.k}")
    return 0


def cmd_n2o(args) -> int:
    corpus = load_corpus(args.corpus, args.format)
    specs = [_parse_embedder_arg(raw) for raw in args.embedder]
    if len(specs) < 2:
        raise ConfigError("n2o needs at least 2 embedders")
    out = _out_dir(args)
    built = _build_all(specs, corpus)

    # Queries must be searchable under every embedder, so ids any
    # embedder maps to zero are excluded from sampling.
    unusable: set[int] = set()
    for _, _, matrix, _ in built:
        unusable |= set(matrix.zero_rows)
    samples = _make_samples(corpus, args.n, args.samples, args.seed,
                            exclude=unusable)
    _write_samples_json(samples, args.seed, out / "samples.json")

    manifest = RunManifest(corpus_path=str(args.corpus),
                           corpus_format=args.format,
                           corpus_hash=corpus.content_hash,
                           out_dir=str(out), k=args.k, n=args.n,
                           n_samples=args.samples, master_seed=args.seed,
                           sample_seeds=[s.seed for s in samples])
    all_neighbors = {}
    for name, spec, matrix, _ in built:
        path = out / f"{name}.n2oe"
        write_matrix(matrix, path)
        manifest.upsert_embedder(EmbedderEntry(name=name, spec=spec,
                                               matrix_path=str(path)))
        all_neighbors[name] = _search_embedder(matrix, samples, args.k,
                                               args.threads, out)
    matrix_result = n2o_matrix(all_neighbors, args.k, samples)
    write_n2o_csv(matrix_result, out / "n2o.csv", out / "n2o_std.csv")
    write_report_json(matrix_result, out / "report.json")
    write_heatmap(matrix_result.embedders, matrix_result.mean,
                  out / "heatmap.svg", annotate=args.annotate)
    manifest.write(out / "manifest.json")

    names = matrix_result.embedders
    width = max(len(n) for n in names)
    print(f"N2O mean over {args.samples} samples (k={args.k}, n={args.n}):")
    for i, name in enumerate(names):
        row = " ".join(f"{matrix_result.mean[i, j]:.3f}"
                       for j in range(len(names)))
        print(f"  {name:<{width}} {row}")
    for artifact in ("n2o.csv", "n2o_std.csv", "report.json", "heatmap.svg",
                     "manifest.json"):
        print(f"wrote {out / artifact}")
    return 0


def _load_dumped_neighbors(out: Path, names: list[str],
                           samples: list[QuerySample]):
    all_neighbors = {}
    for name in names:
        per_sample = []
        for i in range(len(samples)):
            path = _neighbors_path(out, name, i)
            if not path.exists():
                raise ConfigError(f"missing neighbor dump {path}")
            per_sample.append(load_neighbors(path))
        all_neighbors[name] = per_sample
    return all_neighbors


def _manifest_names(out: Path) -> tuple[RunManifest, list[str]]:
    manifest = RunManifest.load(out / "manifest.json")
    names = [e.name for e in manifest.embedders]
    if not names:
        raise ConfigError("manifest lists no embedders")
    return manifest, names


def cmd_stability(args) -> int:
    out = Path(args.out)
    _, names = _manifest_names(out)
    _, samples = _load_samples_json(out / "samples.json")
    k_grid = [int(v) for v in args.k_grid.split(",") if v.strip()]
    all_neighbors = _load_dumped_neighbors(out, names, samples)
    summary = k_stability(all_neighbors, k_grid, samples)
    path = out / "stability.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(stability_payload(summary), fh, indent=2)
        fh.write("\n")
    print(f"k grid {summary.k_grid}: mean rho {summary.mean_rho:.4f}, "
          f"min rho {summary.min_rho:.4f}")
    print(f"wrote {path}")
    return 0


def cmd_overlap_tokens(args) -> int:
    corpus = load_corpus(args.corpus, args.format)
    out = Path(args.out)
    manifest, names = _manifest_names(out)
    manifest.validate(corpus)
    _, samples = _load_samples_json(out / "samples.json")
    all_neighbors = _load_dumped_neighbors(out, names, samples)
    stats = []
    for name in names:
        flattened = [nl for per_sample in all_neighbors[name]
                     for nl in per_sample]
        stats.append(mean_query_token_overlap(flattened, corpus))
    path = out / "token_overlap.csv"
    write_token_overlap_csv(stats, path)
    for s in stats:
        print(f"{s.embedder}: mean token overlap {s.mean_overlap:.4f} "
              f"(+/- {s.ci95_halfwidth:.4f})")
    print(f"wrote {path}")
    return 0


def cmd_popular(args) -> int:
    out = Path(args.out)
    _, names = _manifest_names(out)
    _, samples = _load_samples_json(out / "samples.json")
    all_neighbors = _load_dumped_neighbors(out, names, samples)
    flat = {name: [nl for per_sample in all_neighbors[name]
                   for nl in per_sample]
            for name in names}
    query_ids = sorted({nl.query_id for lists in flat.values()
                        for nl in lists})
    records = []
    for qid in query_ids:
        records.extend(popular_neighbors(flat, qid, args.k_small))
    path = out / "popular.jsonl"
    write_popularity_jsonl(records, path)
    print(f"{len(records)} popular neighbors across {len(query_ids)} "
          f"queries at k_small={args.k_small}")
    print(f"wrote {path}")
    if args.owner:
        k_large = args.k_large
        outliers = []
        for qid in query_ids:
            outliers.extend(outlier_neighbors(
                flat, qid, args.owner, r_small=args.r_small, k_large=k_large))
        opath = out / f"outliers_{args.owner}.jsonl"
        with open(opath, "w", encoding="utf-8") as fh:
            for rec in outliers:
                fh.write(json.dumps({
                    "query_id": rec.query_id,
                    "sentence_id": rec.sentence_id,
                    "owner": rec.owner,
                    "owner_rank": rec.owner_rank,
                    "k_large": rec.k_large,
                }) + "\n")
        print(f"{len(outliers)} outlier neighbors for {args.owner} "
              f"(r_small={args.r_small}, k_large={k_large})")
        print(f"wrote {opath}")
    return 0


def cmd_probe(args) -> int:
    corpus = load_corpus(args.corpus, args.format)
    candidates = read_sts_tsv(args.pairs)
    kept = filter_sts_pairs(candidates, args.min_score, args.max_overlap)
    if not kept:
        raise ConfigError(
            f"no pairs survive filtering (score >= {args.min_score}, "
            f"overlap < {args.max_overlap})"
        )
    pairs = [(p.text_a, p.text_b) for p in kept]
    specs = [_parse_embedder_arg(raw) for raw in args.embedder]
    built = _build_all(specs, corpus, want_pipeline=True)
    outcomes = []
    for name, _, _, pipeline in built:
        if pipeline is None:
            raise ConfigError(
                f"embedder {name!r}: probe needs a native embedder "
                "(tfidf or word-avg), not an import"
            )
        outcomes.append(paraphrase_probe(corpus, pairs, pipeline,
                                         k_report=args.k_report))
    out = _out_dir(args)
    path = out / "probe.csv"
    write_probe_csv(outcomes, path)
    print(f"{len(pairs)} pairs after filtering "
          f"(score >= {args.min_score}, overlap < {args.max_overlap})")
    for o in sorted(outcomes, key=lambda o: (-o.mrr, o.embedder)):
        print(f"{o.embedder}: mrr {o.mrr:.3f}, top {o.n_top}, "
              f"top5 {o.n_top5} of {len(o.ranks)}")
    print(f"wrote {path}")
    return 0


def cmd_ann_tune(args) -> int:
    corpus = load_corpus(args.corpus, args.format)
    specs = [_parse_embedder_arg(raw) for raw in args.embedder]
    if len(specs) != 1:
        raise ConfigError("ann-tune takes exactly one --embedder")
    built = _build_all(specs, corpus)
    name, _, matrix, _ = built[0]
    if matrix.is_sparse:
        raise ConfigError("ann-tune supports dense embedders only")
    index = build_index(matrix)
    sample = sample_queries(corpus, args.n, args.seed,
                            exclude=index.excluded)
    table_grid = [int(v) for v in args.l_grid.split(",") if v.strip()]
    bits_grid = [int(v) for v in args.b_grid.split(",") if v.strip()]
    rows = tune_lsh(index, sample.query_ids, args.k, table_grid, bits_grid,
                    args.seed)
    out = _out_dir(args)
    path = out / "recall.csv"
    write_recall_csv(rows, path)
    for r in rows:
        frac = r.mean_candidates / index.n_rows
        print(f"L={r.n_tables} b={r.bits_per_table}: recall {r.recall:.3f}, "
              f"candidates {frac:.1%}, {r.query_time_us:.0f} us/query")
    best = best_params(rows)
    print(f"best: L={best.n_tables} b={best.bits_per_table} "
          f"(recall {best.recall:.3f})")
    print(f"wrote {path}")
    return 0


def cmd_report(args) -> int:
    path = Path(args.matrix_csv)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise DataFormatError(f"{path}: empty matrix CSV")
    header = lines[0].split(",")
    if header[0] != "embedder" or len(header) < 2:
        raise DataFormatError(f"{path}: expected an embedder header row")
    names = header[1:]
    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(names) + 1:
            raise DataFormatError(
                f"{path}:{lineno}: expected {len(names) + 1} cells, "
                f"got {len(cells)}"
            )
        try:
            values.append([float(c) for c in cells[1:]])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    if len(values) != len(names):
        raise DataFormatError(
            f"{path}: {len(values)} rows for {len(names)} embedders"
        )
    out = Path(args.out)
    if out.is_dir():
        out = out / "heatmap.svg"
    write_heatmap(names, values, out, annotate=args.annotate)
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="n2o",
        description="Compare sentence embedders by nearest-neighbor overlap.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="build or import embedding matrices")
    _add_corpus_flags(p)
    _add_embedder_flag(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("sample", help="draw query samples")
    _add_corpus_flags(p)
    p.add_argument("--n", type=int, default=DEFAULT_N)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("search", help="dump exact nearest neighbors")
    _add_corpus_flags(p)
    _add_embedder_flag(p)
    p.add_argument("--samples-file", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("n2o", help="full pipeline: embed, search, overlap")
    _add_corpus_flags(p)
    _add_embedder_flag(p)
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--n", type=int, default=DEFAULT_N)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--annotate", action="store_true",
                   help="write values into heatmap cells")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_n2o)

    p = sub.add_parser("stability",
                       help="rank stability of pairs across a k grid")
    p.add_argument("--k-grid", default=DEFAULT_K_GRID)
    p.add_argument("--out", required=True,
                   help="directory holding an n2o run")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("overlap-tokens",
                       help="query-to-neighbor token overlap per embedder")
    _add_corpus_flags(p)
    p.add_argument("--out", required=True,
                   help="directory holding an n2o run")
    p.set_defaults(func=cmd_overlap_tokens)

    p = sub.add_parser("popular",
                       help="popular (and optionally outlier) neighbors")
    p.add_argument("--k-small", type=int, default=5)
    p.add_argument("--owner", default=None,
                   help="also report this embedder's outlier neighbors")
    p.add_argument("--r-small", type=int, default=15)
    p.add_argument("--k-large", type=int, default=DEFAULT_K)
    p.add_argument("--out", required=True,
                   help="directory holding an n2o run")
    p.set_defaults(func=cmd_popular)

    p = sub.add_parser("probe", help="paraphrase insertion probe")
    _add_corpus_flags(p)
    _add_embedder_flag(p)
    p.add_argument("--pairs", required=True,
                   help="TSV: score<TAB>sentence1<TAB>sentence2")
    p.add_argument("--min-score", type=float, default=4.0)
    p.add_argument("--max-overlap", type=float, default=0.6)
    p.add_argument("--k-report", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("ann-tune", help="sweep LSH parameters vs exact")
    _add_corpus_flags(p)
    _add_embedder_flag(p)
    p.add_argument("--n", type=int, default=50, help="held-out query count")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--l-grid", default="4,8,16")
    p.add_argument("--b-grid", default="8,12,16")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ann_tune)

    p = sub.add_parser("report", help="render a heatmap from an N2O CSV")
    p.add_argument("--matrix-csv", required=True)
    p.add_argument("--annotate", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InvariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
