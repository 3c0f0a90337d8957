import json
import struct

import numpy as np
import pytest

from n2o.cli import main
from n2o.corpus import load_corpus
from n2o.matrix_io import read_matrix

from conftest import word_salad


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text("\n".join(word_salad(40, seed=0)) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def vectors_file(tmp_path):
    rng = np.random.default_rng(1)
    words = [f"w{i:02d}" for i in range(40)]
    lines = [w + " " + " ".join(repr(float(x))
                                for x in rng.standard_normal(8))
             for w in words]
    path = tmp_path / "vectors.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def run(*argv):
    return main([str(a) for a in argv])


class TestEmbed:
    def test_tfidf_over_small_corpus(self, tmp_path, corpus_file):
        out = tmp_path / "run"
        assert run("embed", "--corpus", corpus_file,
                   "--embedder", "tfidf=tfidf", "--out", out) == 0
        corpus = load_corpus(corpus_file)
        matrix = read_matrix(out / "tfidf.n2oe", corpus=corpus)
        assert matrix.is_sparse
        assert matrix.n_rows == len(corpus)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["embedders"][0]["name"] == "tfidf"

    def test_word_average_dense(self, tmp_path, corpus_file, vectors_file):
        out = tmp_path / "run"
        assert run("embed", "--corpus", corpus_file,
                   "--embedder", f"wavg=word-avg:{vectors_file}",
                   "--out", out) == 0
        matrix = read_matrix(out / "wavg.n2oe")
        assert not matrix.is_sparse
        assert matrix.dim == 8

    def test_import_round_trip(self, tmp_path, corpus_file):
        first = tmp_path / "first"
        assert run("embed", "--corpus", corpus_file,
                   "--embedder", "tfidf=tfidf", "--out", first) == 0
        second = tmp_path / "second"
        assert run("embed", "--corpus", corpus_file,
                   "--embedder", f"ext=import:{first / 'tfidf.n2oe'}",
                   "--out", second) == 0
        a = read_matrix(first / "tfidf.n2oe")
        b = read_matrix(second / "ext.n2oe")
        assert a.rows.data.tobytes() == b.rows.data.tobytes()

    def test_import_wrong_hash_exits_3(self, tmp_path, corpus_file, capsys):
        out = tmp_path / "run"
        assert run("embed", "--corpus", corpus_file,
                   "--embedder", "tfidf=tfidf", "--out", out) == 0
        # corrupt the recorded corpus hash in place
        blob = bytearray((out / "tfidf.n2oe").read_bytes())
        (h,) = struct.unpack_from("<Q", blob, 8)
        struct.pack_into("<Q", blob, 8, h ^ 1)
        bad = tmp_path / "bad.n2oe"
        bad.write_bytes(bytes(blob))

        code = run("embed", "--corpus", corpus_file,
                   "--embedder", f"ext=import:{bad}",
                   "--out", tmp_path / "other")
        assert code == 3
        err = capsys.readouterr().err
        assert "hash" in err
        assert "ext" in err

    def test_duplicate_embedder_names_exit_2(self, tmp_path, corpus_file,
                                             capsys):
        code = run("embed", "--corpus", corpus_file,
                   "--embedder", "tfidf=tfidf", "--embedder", "tfidf=tfidf",
                   "--out", tmp_path / "run")
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_embedder_spec_exit_2(self, tmp_path, corpus_file, capsys):
        assert run("embed", "--corpus", corpus_file,
                   "--embedder", "nospec", "--out", tmp_path / "o") == 2
        assert run("embed", "--corpus", corpus_file,
                   "--embedder", "x=unknown-kind", "--out", tmp_path / "o") == 2
        capsys.readouterr()

    def test_missing_corpus_exit_3(self, tmp_path, capsys):
        code = run("embed", "--corpus", tmp_path / "absent.txt",
                   "--embedder", "tfidf=tfidf", "--out", tmp_path / "o")
        assert code == 3
        capsys.readouterr()


class TestSampleSearch:
    def test_sample_then_search_round_trip(self, tmp_path, corpus_file,
                                           vectors_file):
        out = tmp_path / "run"
        assert run("sample", "--corpus", corpus_file, "--n", 6,
                   "--samples", 2, "--seed", 7, "--out", out) == 0
        payload = json.loads((out / "samples.json").read_text())
        assert len(payload["samples"]) == 2
        assert all(len(s["query_ids"]) == 6 for s in payload["samples"])

        assert run("search", "--corpus", corpus_file,
                   "--embedder", f"wavg=word-avg:{vectors_file}",
                   "--samples-file", out / "samples.json",
                   "--k", 4, "--out", out) == 0
        dump = out / "neighbors_wavg_s0.jsonl"
        lines = dump.read_text().splitlines()
        assert len(lines) == 6
        record = json.loads(lines[0])
        assert record["embedder"] == "wavg"
        assert len(record["neighbors"]) == 4

    def test_sample_too_large_exit_2(self, tmp_path, corpus_file, capsys):
        code = run("sample", "--corpus", corpus_file, "--n", 10_000,
                   "--out", tmp_path / "o")
        assert code == 2
        capsys.readouterr()


def run_n2o(out, corpus_file, vectors_file, *extra):
    return run("n2o", "--corpus", corpus_file,
               "--embedder", "tfidf=tfidf",
               "--embedder", f"wavg=word-avg:{vectors_file}",
               "--k", 5, "--n", 8, "--samples", 3, "--seed", 11,
               "--out", out, *extra)


class TestN2O:
    def test_full_pipeline_artifacts(self, tmp_path, corpus_file,
                                     vectors_file, capsys):
        out = tmp_path / "run"
        assert run_n2o(out, corpus_file, vectors_file) == 0
        for name in ("samples.json", "tfidf.n2oe", "wavg.n2oe",
                     "n2o.csv", "n2o_std.csv", "report.json",
                     "heatmap.svg", "manifest.json",
                     "neighbors_tfidf_s0.jsonl", "neighbors_wavg_s2.jsonl"):
            assert (out / name).exists(), name

        printed = capsys.readouterr().out
        assert "tfidf" in printed and "wavg" in printed

        report = json.loads((out / "report.json").read_text())
        assert report["k"] == 5
        assert report["n"] == 8
        assert len(report["per_sample"]) == 3
        mean = np.array(report["mean"])
        assert mean.shape == (2, 2)
        assert mean[0, 0] == 1.0 and mean[1, 1] == 1.0
        assert 0.0 <= mean[0, 1] <= 1.0

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["k"] == 5
        assert manifest["n"] == 8
        assert manifest["n_samples"] == 3
        assert manifest["master_seed"] == 11
        assert len(manifest["sample_seeds"]) == 3

    def test_identical_matrices_give_all_ones(self, tmp_path, corpus_file,
                                              vectors_file, capsys):
        out = tmp_path / "run"
        code = run("n2o", "--corpus", corpus_file,
                   "--embedder", f"first=word-avg:{vectors_file}",
                   "--embedder", f"second=word-avg:{vectors_file}",
                   "--k", 5, "--n", 8, "--samples", 2, "--seed", 3,
                   "--out", out)
        assert code == 0
        capsys.readouterr()
        report = json.loads((out / "report.json").read_text())
        assert report["mean"] == [[1.0, 1.0], [1.0, 1.0]]
        assert report["std"] == [[0.0, 0.0], [0.0, 0.0]]

    def test_rerun_is_byte_identical(self, tmp_path, corpus_file,
                                     vectors_file, capsys):
        out = tmp_path / "run"
        assert run_n2o(out, corpus_file, vectors_file) == 0
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        assert run_n2o(out, corpus_file, vectors_file) == 0
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        capsys.readouterr()
        assert first.keys() == second.keys()
        for name in first:
            assert first[name] == second[name], name

    def test_threads_do_not_change_output(self, tmp_path, corpus_file,
                                          vectors_file, capsys):
        out1, out4 = tmp_path / "t1", tmp_path / "t4"
        assert run_n2o(out1, corpus_file, vectors_file, "--threads", 1) == 0
        assert run_n2o(out4, corpus_file, vectors_file, "--threads", 4) == 0
        capsys.readouterr()
        for name in ("n2o.csv", "n2o_std.csv", "report.json",
                     "neighbors_wavg_s0.jsonl"):
            assert (out1 / name).read_bytes() == (out4 / name).read_bytes()

    def test_defaults_echoed_into_manifest(self, tmp_path, vectors_file,
                                           capsys):
        # defaults need a corpus comfortably above n=100 and k=50
        big = tmp_path / "big.txt"
        big.write_text("\n".join(word_salad(160, seed=5)) + "\n",
                       encoding="utf-8")
        out = tmp_path / "run"
        code = run("n2o", "--corpus", big,
                   "--embedder", f"wavg=word-avg:{vectors_file}",
                   "--embedder", "tfidf=tfidf",
                   "--out", out)
        assert code == 0
        capsys.readouterr()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["k"] == 50
        assert manifest["n"] == 100
        assert manifest["n_samples"] == 5
        assert manifest["master_seed"] == 42

    def test_k_too_large_exit_2(self, tmp_path, corpus_file, vectors_file,
                                capsys):
        # 40 usable rows: k=39 is the legal maximum, 40 is out of range
        code = run("n2o", "--corpus", corpus_file,
                   "--embedder", "tfidf=tfidf",
                   "--embedder", f"wavg=word-avg:{vectors_file}",
                   "--k", 40, "--n", 5, "--samples", 1,
                   "--out", tmp_path / "run")
        assert code == 2
        capsys.readouterr()


@pytest.fixture
def finished_run(tmp_path, corpus_file, vectors_file):
    out = tmp_path / "run"
    assert run_n2o(out, corpus_file, vectors_file) == 0
    return out


class TestDownstreamCommands:
    def test_stability(self, finished_run, capsys):
        assert run("stability", "--k-grid", "2,3,5",
                   "--out", finished_run) == 0
        capsys.readouterr()
        payload = json.loads((finished_run / "stability.json").read_text())
        assert payload["k_grid"] == [2, 3, 5]
        assert payload["mean_rho"] == 1.0  # single pair

    def test_stability_k_above_dump_depth_exit_4(self, finished_run, capsys):
        assert run("stability", "--k-grid", "5,50",
                   "--out", finished_run) == 4
        capsys.readouterr()

    def test_overlap_tokens(self, finished_run, corpus_file, capsys):
        assert run("overlap-tokens", "--corpus", corpus_file,
                   "--out", finished_run) == 0
        capsys.readouterr()
        lines = (finished_run / "token_overlap.csv").read_text().splitlines()
        assert lines[0] == "embedder,mean_overlap,ci95_halfwidth"
        assert len(lines) == 3  # two embedders

    def test_popular_and_outliers(self, finished_run, capsys):
        assert run("popular", "--k-small", 3, "--owner", "wavg",
                   "--r-small", 4, "--k-large", 5,
                   "--out", finished_run) == 0
        capsys.readouterr()
        assert (finished_run / "popular.jsonl").exists()
        assert (finished_run / "outliers_wavg.jsonl").exists()

    def test_popular_unknown_owner_exit_2(self, finished_run, capsys):
        assert run("popular", "--owner", "nope", "--k-small", 2,
                   "--r-small", 2, "--k-large", 3,
                   "--out", finished_run) == 2
        capsys.readouterr()

    def test_report_from_csv(self, finished_run, tmp_path, capsys):
        svg = tmp_path / "new.svg"
        assert run("report", "--matrix-csv", finished_run / "n2o.csv",
                   "--annotate", "--out", svg) == 0
        capsys.readouterr()
        text = svg.read_text()
        assert text.startswith("<svg")
        assert "tfidf" in text and "wavg" in text


class TestProbe:
    def test_probe_end_to_end(self, tmp_path, corpus_file, vectors_file,
                              capsys):
        sentences = word_salad(40, seed=0)
        pairs = tmp_path / "pairs.tsv"
        # high-score pair sharing no tokens: both sides embeddable
        pairs.write_text(
            f"4.8\t{sentences[0]}\t{sentences[1]}\n"
            f"1.0\t{sentences[2]}\t{sentences[3]}\n",
            encoding="utf-8",
        )
        out = tmp_path / "probe-run"
        code = run("probe", "--corpus", corpus_file,
                   "--embedder", f"wavg=word-avg:{vectors_file}",
                   "--pairs", pairs, "--min-score", 4.0,
                   "--max-overlap", 0.99, "--out", out)
        assert code == 0
        printed = capsys.readouterr().out
        assert "wavg" in printed
        lines = (out / "probe.csv").read_text().splitlines()
        assert lines[0] == "embedder,mrr,n_top,n_top5"
        assert lines[1].startswith("wavg,")

    def test_probe_no_pairs_survive_filter_exit_2(self, tmp_path, corpus_file,
                                                  vectors_file, capsys):
        pairs = tmp_path / "pairs.tsv"
        pairs.write_text("1.0\ta b\tc d\n", encoding="utf-8")
        code = run("probe", "--corpus", corpus_file,
                   "--embedder", f"wavg=word-avg:{vectors_file}",
                   "--pairs", pairs, "--out", tmp_path / "o")
        assert code == 2
        capsys.readouterr()

    def test_probe_import_embedder_rejected(self, tmp_path, corpus_file,
                                            capsys):
        first = tmp_path / "first"
        assert run("embed", "--corpus", corpus_file,
                   "--embedder", "tfidf=tfidf", "--out", first) == 0
        pairs = tmp_path / "pairs.tsv"
        pairs.write_text("4.8\ta b\tc d\n", encoding="utf-8")
        code = run("probe", "--corpus", corpus_file,
                   "--embedder", f"ext=import:{first / 'tfidf.n2oe'}",
                   "--pairs", pairs, "--max-overlap", 0.99,
                   "--out", tmp_path / "o")
        assert code == 2
        assert "import" in capsys.readouterr().err


class TestAnnTune:
    def test_sweep_writes_csv(self, tmp_path, corpus_file, vectors_file,
                              capsys):
        out = tmp_path / "tune"
        code = run("ann-tune", "--corpus", corpus_file,
                   "--embedder", f"wavg=word-avg:{vectors_file}",
                   "--n", 10, "--k", 5, "--l-grid", "1,2", "--b-grid", "0,2",
                   "--out", out)
        assert code == 0
        printed = capsys.readouterr().out
        assert "recall" in printed
        lines = (out / "recall.csv").read_text().splitlines()
        assert lines[0] == "L,b,seed,recall,mean_candidates,query_time_us"
        assert len(lines) == 5

    def test_sparse_embedder_rejected(self, tmp_path, corpus_file, capsys):
        code = run("ann-tune", "--corpus", corpus_file,
                   "--embedder", "tfidf=tfidf",
                   "--n", 5, "--k", 3, "--out", tmp_path / "o")
        assert code == 2
        capsys.readouterr()
