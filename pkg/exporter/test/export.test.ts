import { execFileSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { COMPOSITION_MODES } from "../src/compose";
import { main } from "../src/cli";
import { ConfigError } from "../src/errors";
import { runExport } from "../src/export";

const CORPUS = [
  "alpha beta gamma",
  "beta gamma delta epsilon",
  "zeta",
  "eta theta iota kappa lambda mu", // 6 tokens, truncated at maxTokens=4
  "naïve café über alles",
];

/**
 * Recompute the export with the toolkit: stub token matrices mirrored
 * in numpy, composed by compose_tokens, and the file round-tripped
 * through import_matrix (which also enforces the corpus hash).
 */
const PYTHON_ORACLE = `
import sys
import numpy as np
from n2o.corpus import load_corpus
from n2o.embedders import compose_tokens
from n2o.matrix_io import import_matrix

corpus_path, hidden, max_tokens, *mode_paths = sys.argv[1:]
hidden, max_tokens = int(hidden), int(max_tokens)
corpus = load_corpus(corpus_path, "lines")

def token_matrix(text):
    tokens = [t for t in text.split() if t][:max_tokens]
    rows = np.zeros((len(tokens), hidden), dtype=np.float32)
    for r, tok in enumerate(tokens):
        rows[r, sum(tok.encode("utf-8")) % hidden] = 1.0
    return rows

for item in mode_paths:
    mode, path = item.split("=", 1)
    matrix = import_matrix(path, corpus)
    ref = np.stack(
        [compose_tokens(token_matrix(s.text), mode) for s in corpus.sentences]
    )
    assert np.asarray(matrix.rows).dtype == np.float32, mode
    assert np.array_equal(np.asarray(matrix.rows), ref), mode
print("ok")
`;

function freshCorpus(): { dir: string; corpusPath: string } {
  const dir = mkdtempSync(join(tmpdir(), "n2oe-"));
  const corpusPath = join(dir, "corpus.txt");
  writeFileSync(corpusPath, CORPUS.join("\n") + "\n");
  return { dir, corpusPath };
}

describe("runExport with the stub model", () => {
  it("matches the toolkit's composition reference for all three modes", () => {
    const { dir, corpusPath } = freshCorpus();
    const paths: string[] = [];
    for (const mode of COMPOSITION_MODES) {
      const outPath = join(dir, `${mode}.n2oe`);
      const result = runExport({
        model: "stub:8:4",
        composition: mode,
        corpusPath,
        outPath,
      });
      expect(result.rows).toBe(CORPUS.length);
      expect(result.dim).toBe(8);
      paths.push(`${mode}=${outPath}`);
    }
    const out = execFileSync(
      "python3",
      ["-c", PYTHON_ORACLE, corpusPath, "8", "4", ...paths],
      { encoding: "utf-8" },
    );
    expect(out.trim()).toBe("ok");
  });

  it("truncates over-length sentences and logs their ids", () => {
    const { dir, corpusPath } = freshCorpus();
    const outPath = join(dir, "avg.n2oe");
    const result = runExport({
      model: "stub:8:4",
      composition: "average",
      corpusPath,
      outPath,
    });
    expect(result.truncatedIds).toEqual([3]);
    expect(result.sidecarPath).toBe(`${outPath}.truncated.log`);
    expect(readFileSync(result.sidecarPath!, "utf-8")).toBe("3\n");
  });

  it("writes no sidecar when nothing was truncated", () => {
    const { dir, corpusPath } = freshCorpus();
    const outPath = join(dir, "roomy.n2oe");
    const result = runExport({
      model: "stub:8:64",
      composition: "average",
      corpusPath,
      outPath,
    });
    expect(result.truncatedIds).toEqual([]);
    expect(result.sidecarPath).toBeNull();
    expect(existsSync(`${outPath}.truncated.log`)).toBe(false);
  });

  it("is deterministic byte for byte", () => {
    const { dir, corpusPath } = freshCorpus();
    const a = join(dir, "a.n2oe");
    const b = join(dir, "b.n2oe");
    runExport({ model: "stub", composition: "average", corpusPath, outPath: a });
    runExport({ model: "stub", composition: "average", corpusPath, outPath: b });
    expect(readFileSync(a).equals(readFileSync(b))).toBe(true);
  });

  it("rejects unknown models and layer policies", () => {
    const { dir, corpusPath } = freshCorpus();
    const outPath = join(dir, "x.n2oe");
    expect(() =>
      runExport({ model: "bert-base", composition: "average", corpusPath, outPath }),
    ).toThrow(ConfigError);
    expect(() =>
      runExport({
        model: "stub",
        composition: "average",
        layer: "mean_layers",
        corpusPath,
        outPath,
      }),
    ).toThrow(/layer policy/);
  });
});

describe("cli", () => {
  it("exports via flags and verifies the result", () => {
    const { dir, corpusPath } = freshCorpus();
    const outPath = join(dir, "cli.n2oe");
    expect(
      main([
        "export",
        "--corpus", corpusPath,
        "--model", "stub:8:4",
        "--composition", "first_token",
        "--out", outPath,
      ]),
    ).toBe(0);
    expect(existsSync(outPath)).toBe(true);
    expect(main(["verify", outPath])).toBe(0);
  });

  it("reads a JSON spec file, with flags overriding it", () => {
    const { dir, corpusPath } = freshCorpus();
    const specPath = join(dir, "spec.json");
    const outPath = join(dir, "spec.n2oe");
    writeFileSync(
      specPath,
      JSON.stringify({
        corpus: corpusPath,
        model: "stub:8:4",
        composition: "average",
        out: join(dir, "overridden.n2oe"),
      }),
    );
    expect(main(["export", "--spec", specPath, "--out", outPath])).toBe(0);
    expect(existsSync(outPath)).toBe(true);
    expect(existsSync(join(dir, "overridden.n2oe"))).toBe(false);
  });

  it("maps config errors to exit 2 and format errors to 3", () => {
    expect(main(["export", "--model", "stub"])).toBe(2);
    expect(main(["frobnicate"])).toBe(2);
    const { dir } = freshCorpus();
    const junk = join(dir, "junk.n2oe");
    writeFileSync(junk, "not a matrix");
    expect(main(["verify", junk])).toBe(3);
  });
});
