import { writeFileSync } from "node:fs";

import { composeTokens, type CompositionMode } from "./compose.js";
import { loadCorpus, type CorpusFormat } from "./corpus.js";
import { ConfigError } from "./errors.js";
import { loadModel } from "./models.js";
import { writeDenseMatrix } from "./n2oe.js";

export interface ExportSpec {
  /** Model identifier, e.g. `stub` or `stub:32:16`. */
  model: string;
  composition: CompositionMode;
  /** Which hidden layer feeds the rows; the stub has only `final`. */
  layer?: string;
  corpusPath: string;
  corpusFormat?: CorpusFormat;
  outPath: string;
}

export interface ExportResult {
  rows: number;
  dim: number;
  corpusHash: bigint;
  truncatedIds: number[];
  /** Sidecar log listing truncated sentence ids, or null if none. */
  sidecarPath: string | null;
}

/**
 * Run the model over every corpus sentence in order and write one
 * dense N2OE file.  Sentences over the model's length limit are
 * truncated to it and their ids recorded in `<out>.truncated.log`,
 * one per line; nothing else about the run is affected.
 */
export function runExport(spec: ExportSpec): ExportResult {
  const layer = spec.layer ?? "final";
  if (layer !== "final") {
    throw new ConfigError(
      `layer policy '${layer}' is not available (the stub exposes only 'final')`,
    );
  }
  const model = loadModel(spec.model);
  const corpus = loadCorpus(spec.corpusPath, spec.corpusFormat ?? "lines");

  const rows: Float32Array[] = [];
  const truncatedIds: number[] = [];
  for (const sentence of corpus.sentences) {
    const { rows: tokenRows, truncated } = model.tokenMatrix(sentence.text);
    if (truncated) truncatedIds.push(sentence.id);
    const row = composeTokens(tokenRows, spec.composition);
    if (row.length !== model.hiddenSize) {
      throw new Error(
        `sentence ${sentence.id}: row dim ${row.length} != hidden size ${model.hiddenSize}`,
      );
    }
    rows.push(row);
  }

  writeDenseMatrix(spec.outPath, rows, model.hiddenSize, corpus.contentHash);

  let sidecarPath: string | null = null;
  if (truncatedIds.length > 0) {
    sidecarPath = `${spec.outPath}.truncated.log`;
    writeFileSync(sidecarPath, truncatedIds.map((id) => `${id}\n`).join(""));
  }
  return {
    rows: rows.length,
    dim: model.hiddenSize,
    corpusHash: corpus.contentHash,
    truncatedIds,
    sidecarPath,
  };
}
