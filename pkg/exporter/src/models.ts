import { ConfigError } from "./errors.js";

export interface TokenMatrix {
  rows: Float32Array[];
  /** True when the sentence exceeded the model's length limit. */
  truncated: boolean;
}

/** A model runtime able to produce one embedding row per token. */
export interface ExportModel {
  readonly name: string;
  readonly hiddenSize: number;
  readonly maxTokens: number;
  tokenMatrix(text: string): TokenMatrix;
}

const DEFAULT_HIDDEN = 32;
const DEFAULT_MAX_TOKENS = 64;

/**
 * Offline stand-in for a real checkpoint: whitespace tokens, one-hot
 * rows.  A token's hot index is the sum of its UTF-8 bytes modulo the
 * hidden size, so any runtime (and any test oracle) can reproduce the
 * exact matrix without weights.
 */
export class StubOneHotModel implements ExportModel {
  readonly name: string;
  readonly hiddenSize: number;
  readonly maxTokens: number;

  constructor(hiddenSize = DEFAULT_HIDDEN, maxTokens = DEFAULT_MAX_TOKENS) {
    if (hiddenSize < 1 || maxTokens < 1) {
      throw new ConfigError(
        `stub model needs positive hidden size and token limit, got ${hiddenSize}/${maxTokens}`,
      );
    }
    this.name = `stub:${hiddenSize}:${maxTokens}`;
    this.hiddenSize = hiddenSize;
    this.maxTokens = maxTokens;
  }

  hotIndex(token: string): number {
    let total = 0;
    for (const byte of Buffer.from(token, "utf-8")) total += byte;
    return total % this.hiddenSize;
  }

  tokenMatrix(text: string): TokenMatrix {
    const tokens = text.split(/\s+/).filter((t) => t.length > 0);
    if (tokens.length === 0) {
      // corpus loading drops blank sentences, so this is a misuse guard
      throw new Error("cannot embed a sentence with no tokens");
    }
    const truncated = tokens.length > this.maxTokens;
    const kept = truncated ? tokens.slice(0, this.maxTokens) : tokens;
    const rows = kept.map((token) => {
      const row = new Float32Array(this.hiddenSize);
      row[this.hotIndex(token)] = 1.0;
      return row;
    });
    return { rows, truncated };
  }
}

/**
 * Resolve a model identifier.  Only the stub runs in this runtime;
 * real checkpoints arrive through their own bridge processes and meet
 * the toolkit at the binary format.
 *
 * Stub spellings: `stub`, `stub:<hidden>`, `stub:<hidden>:<maxTokens>`.
 */
export function loadModel(identifier: string): ExportModel {
  const parts = identifier.split(":");
  if (parts[0] !== "stub") {
    throw new ConfigError(`model '${identifier}' is not available in this runtime`);
  }
  if (parts.length > 3) {
    throw new ConfigError(`bad stub spec '${identifier}' (use stub[:hidden[:maxTokens]])`);
  }
  const nums = parts.slice(1).map((p) => {
    const n = Number(p);
    if (!Number.isInteger(n)) {
      throw new ConfigError(`bad stub parameter '${p}' in '${identifier}'`);
    }
    return n;
  });
  return new StubOneHotModel(nums[0] ?? DEFAULT_HIDDEN, nums[1] ?? DEFAULT_MAX_TOKENS);
}
