import { readFileSync } from "node:fs";

import { DataFormatError, ConfigError } from "./errors.js";
import { corpusContentHash } from "./hash.js";

export interface Sentence {
  readonly id: number;
  readonly text: string;
}

export interface Corpus {
  readonly sentences: readonly Sentence[];
  readonly contentHash: bigint;
  readonly source: string;
}

export type CorpusFormat = "lines" | "jsonl";

/**
 * Load a corpus the same way the toolkit does: `lines` is one sentence
 * per line, `jsonl` is one object per line with a required "text"
 * field.  Blank sentences are skipped, exact duplicates keep their
 * first occurrence, and ids are assigned in input order after dedup.
 */
export function loadCorpus(path: string, format: CorpusFormat = "lines"): Corpus {
  if (format !== "lines" && format !== "jsonl") {
    throw new ConfigError(`unknown corpus format '${format}' (expected lines or jsonl)`);
  }
  let raw: string;
  try {
    raw = readFileSync(path, "utf-8");
  } catch (err) {
    throw new DataFormatError(`cannot read corpus file ${path}: ${(err as Error).message}`);
  }

  const texts: string[] = [];
  const lines = raw.split(/\r\n|\n|\r/);
  if (format === "lines") {
    for (const line of lines) {
      if (line.trim()) texts.push(line);
    }
  } else {
    lines.forEach((line, i) => {
      if (!line.trim()) return;
      let record: unknown;
      try {
        record = JSON.parse(line);
      } catch (err) {
        throw new DataFormatError(`${path}:${i + 1}: malformed JSON record: ${(err as Error).message}`);
      }
      if (typeof record !== "object" || record === null || !("text" in record)) {
        throw new DataFormatError(`${path}:${i + 1}: record has no "text" field`);
      }
      const text = (record as { text: unknown }).text;
      if (typeof text !== "string") {
        throw new DataFormatError(`${path}:${i + 1}: "text" is not a string`);
      }
      if (text.trim()) texts.push(text);
    });
  }

  const seen = new Set<string>();
  const sentences: Sentence[] = [];
  for (const text of texts) {
    if (seen.has(text)) continue;
    seen.add(text);
    sentences.push({ id: sentences.length, text });
  }
  if (sentences.length === 0) {
    throw new DataFormatError(`${path}: corpus is empty after deduplication`);
  }
  return {
    sentences,
    contentHash: corpusContentHash(sentences.map((s) => s.text)),
    source: path,
  };
}
