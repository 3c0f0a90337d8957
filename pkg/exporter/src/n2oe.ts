import { writeFileSync } from "node:fs";

export const MAGIC = "N2OE";
export const VERSION = 1;
export const DTYPE_DENSE_F32 = 1;
export const DTYPE_SPARSE_CSR_F32 = 2;
export const HEADER_SIZE = 28;

export interface Header {
  dtype: number;
  corpusHash: bigint;
  nRows: number;
  dim: number;
}

/**
 * Little-endian header shared with the toolkit: magic `N2OE`, u16
 * version, u8 dtype, u8 reserved, u64 corpus hash, u64 row count,
 * u32 dimension.  The embedder name travels in the filename.
 */
export function packHeader(h: Header): Buffer {
  const buf = Buffer.alloc(HEADER_SIZE);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt16LE(VERSION, 4);
  buf.writeUInt8(h.dtype, 6);
  buf.writeUInt8(0, 7);
  buf.writeBigUInt64LE(h.corpusHash, 8);
  buf.writeBigUInt64LE(BigInt(h.nRows), 16);
  buf.writeUInt32LE(h.dim, 24);
  return buf;
}

/** Serialize dense float32 rows; the payload is row-major `<f4`. */
export function writeDenseMatrix(
  path: string,
  rows: readonly Float32Array[],
  dim: number,
  corpusHash: bigint,
): void {
  for (const row of rows) {
    if (row.length !== dim) {
      throw new Error(`row of length ${row.length} does not match dim ${dim}`);
    }
  }
  const payload = Buffer.alloc(rows.length * dim * 4);
  rows.forEach((row, r) => {
    for (let i = 0; i < dim; i++) {
      payload.writeFloatLE(row[i]!, (r * dim + i) * 4);
    }
  });
  const header = packHeader({
    dtype: DTYPE_DENSE_F32,
    corpusHash,
    nRows: rows.length,
    dim,
  });
  writeFileSync(path, Buffer.concat([header, payload]));
}
