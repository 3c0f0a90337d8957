import { ConfigError } from "./errors.js";

export const COMPOSITION_MODES = ["average", "first_token", "last_token"] as const;

export type CompositionMode = (typeof COMPOSITION_MODES)[number];

export function parseCompositionMode(value: string): CompositionMode {
  if ((COMPOSITION_MODES as readonly string[]).includes(value)) {
    return value as CompositionMode;
  }
  throw new ConfigError(
    `unknown composition mode '${value}' (expected ${COMPOSITION_MODES.join(", ")})`,
  );
}

/**
 * Collapse a non-empty (tokens x dim) matrix to a single float32 row.
 *
 * `average` accumulates in float64 and rounds once at the end, exactly
 * like the toolkit's composition, so stub-model exports compare equal
 * bit for bit.
 */
export function composeTokens(
  tokenMatrix: readonly Float32Array[],
  mode: CompositionMode,
): Float32Array {
  if (tokenMatrix.length === 0) {
    throw new Error("expected a non-empty token matrix");
  }
  const dim = tokenMatrix[0]!.length;
  for (const row of tokenMatrix) {
    if (row.length !== dim) {
      throw new Error(`ragged token matrix: row of length ${row.length}, expected ${dim}`);
    }
  }
  if (mode === "first_token") return Float32Array.from(tokenMatrix[0]!);
  if (mode === "last_token") return Float32Array.from(tokenMatrix[tokenMatrix.length - 1]!);

  const acc = new Float64Array(dim);
  for (const row of tokenMatrix) {
    for (let i = 0; i < dim; i++) acc[i]! += row[i]!;
  }
  const out = new Float32Array(dim);
  for (let i = 0; i < dim; i++) out[i] = acc[i]! / tokenMatrix.length;
  return out;
}
