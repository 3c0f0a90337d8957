import { createHash } from "node:crypto";

/**
 * 64-bit corpus content hash: SHA-256 over each sentence's UTF-8 bytes
 * followed by a single LF, truncated to the first 8 digest bytes read
 * little-endian.  Matches the toolkit's hash, which is what ties an
 * exported matrix to the exact corpus it was built from.
 */
export function corpusContentHash(texts: readonly string[]): bigint {
  const h = createHash("sha256");
  for (const text of texts) {
    h.update(Buffer.from(text, "utf-8"));
    h.update(Buffer.from("\n", "utf-8"));
  }
  return h.digest().readBigUInt64LE(0);
}
