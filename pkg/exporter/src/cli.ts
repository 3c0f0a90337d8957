#!/usr/bin/env node
import { readFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { parseCompositionMode } from "./compose.js";
import type { CorpusFormat } from "./corpus.js";
import { ConfigError, DataFormatError } from "./errors.js";
import { runExport, type ExportSpec } from "./export.js";
import { verifyFile } from "./verify.js";

const USAGE = `usage:
  n2oe-export export --corpus PATH --model stub[:H[:T]] --composition MODE --out PATH
                     [--format lines|jsonl] [--layer final] [--spec spec.json]
  n2oe-export verify PATH

Flags given on the command line override values from --spec.`;

interface RawSpec {
  corpus?: string;
  format?: string;
  model?: string;
  composition?: string;
  layer?: string;
  out?: string;
}

function readSpecFile(path: string): RawSpec {
  let payload: unknown;
  try {
    payload = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new DataFormatError(`cannot read spec file ${path}: ${(err as Error).message}`);
  }
  if (typeof payload !== "object" || payload === null || Array.isArray(payload)) {
    throw new DataFormatError(`${path}: spec must be a JSON object`);
  }
  return payload as RawSpec;
}

function buildSpec(raw: RawSpec): ExportSpec {
  for (const field of ["corpus", "model", "composition", "out"] as const) {
    if (!raw[field]) throw new ConfigError(`missing required option --${field}`);
  }
  const format = raw.format ?? "lines";
  if (format !== "lines" && format !== "jsonl") {
    throw new ConfigError(`unknown corpus format '${format}' (expected lines or jsonl)`);
  }
  return {
    model: raw.model!,
    composition: parseCompositionMode(raw.composition!),
    layer: raw.layer,
    corpusPath: raw.corpus!,
    corpusFormat: format as CorpusFormat,
    outPath: raw.out!,
  };
}

function cmdExport(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      corpus: { type: "string" },
      format: { type: "string" },
      model: { type: "string" },
      composition: { type: "string" },
      layer: { type: "string" },
      out: { type: "string" },
      spec: { type: "string" },
    },
  });
  const raw: RawSpec = values.spec ? readSpecFile(values.spec) : {};
  for (const key of ["corpus", "format", "model", "composition", "layer", "out"] as const) {
    if (values[key] !== undefined) raw[key] = values[key];
  }
  const result = runExport(buildSpec(raw));
  console.log(
    `wrote ${result.rows} rows x ${result.dim} dims, ` +
      `corpus hash ${result.corpusHash.toString(16).padStart(16, "0")}`,
  );
  if (result.sidecarPath) {
    console.log(
      `truncated ${result.truncatedIds.length} sentence(s); ids in ${result.sidecarPath}`,
    );
  }
  return 0;
}

function cmdVerify(argv: string[]): number {
  const path = argv[0];
  if (!path || argv.length > 1) {
    throw new ConfigError("verify takes exactly one file path");
  }
  const report = verifyFile(path);
  console.log(
    `ok ${report.dtype} rows=${report.rows} dim=${report.dim} ` +
      `zero_rows=${report.zeroRows} ` +
      `corpus_hash=${report.corpusHash.toString(16).padStart(16, "0")}`,
  );
  return 0;
}

export function main(argv: string[]): number {
  try {
    const [command, ...rest] = argv;
    if (command === "export") return cmdExport(rest);
    if (command === "verify") return cmdVerify(rest);
    throw new ConfigError(`unknown command '${command ?? ""}'\n${USAGE}`);
  } catch (err) {
    if (err instanceof ConfigError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    if (err instanceof DataFormatError) {
      console.error(`error: ${err.message}`);
      return 3;
    }
    throw err;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
