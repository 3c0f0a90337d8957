import { readFileSync } from "node:fs";

import { DataFormatError } from "./errors.js";
import {
  DTYPE_DENSE_F32,
  DTYPE_SPARSE_CSR_F32,
  HEADER_SIZE,
  MAGIC,
  VERSION,
} from "./n2oe.js";

export interface VerifyReport {
  dtype: "dense_f32" | "sparse_csr_f32";
  rows: number;
  dim: number;
  corpusHash: bigint;
  zeroRows: number;
}

function requireLength(blob: Buffer, path: string, needed: number, what: string): void {
  if (blob.length < needed) {
    // the file ends where it ends; that is the offending offset
    throw new DataFormatError(
      `${path}: ${what}: file has ${blob.length} bytes, expected ${needed}`,
      blob.length,
    );
  }
}

/**
 * Validate an N2OE file without loading it into the toolkit: magic,
 * version, declared counts against the actual payload size, and value
 * finiteness.  Any violation carries the byte offset where it sits.
 */
export function verifyFile(path: string): VerifyReport {
  const blob = readFileSync(path);
  requireLength(blob, path, HEADER_SIZE, "truncated header");
  const magic = blob.toString("ascii", 0, 4);
  if (magic !== MAGIC) {
    throw new DataFormatError(`${path}: bad magic '${magic}'`, 0);
  }
  const version = blob.readUInt16LE(4);
  if (version !== VERSION) {
    throw new DataFormatError(`${path}: unsupported version ${version}`, 4);
  }
  const dtype = blob.readUInt8(6);
  const corpusHash = blob.readBigUInt64LE(8);
  const nRows64 = blob.readBigUInt64LE(16);
  if (nRows64 > BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new DataFormatError(`${path}: implausible row count ${nRows64}`, 16);
  }
  const rows = Number(nRows64);
  const dim = blob.readUInt32LE(24);

  if (dtype === DTYPE_DENSE_F32) {
    const zeroRows = verifyDense(blob, path, rows, dim);
    return { dtype: "dense_f32", rows, dim, corpusHash, zeroRows };
  }
  if (dtype === DTYPE_SPARSE_CSR_F32) {
    const zeroRows = verifySparse(blob, path, rows, dim);
    return { dtype: "sparse_csr_f32", rows, dim, corpusHash, zeroRows };
  }
  throw new DataFormatError(`${path}: unknown dtype code ${dtype}`, 6);
}

function verifyDense(blob: Buffer, path: string, rows: number, dim: number): number {
  const expected = HEADER_SIZE + rows * dim * 4;
  requireLength(blob, path, expected, "truncated dense payload");
  if (blob.length > expected) {
    throw new DataFormatError(
      `${path}: ${blob.length - expected} trailing bytes after the payload`,
      expected,
    );
  }
  let zeroRows = 0;
  for (let r = 0; r < rows; r++) {
    let allZero = true;
    for (let i = 0; i < dim; i++) {
      const offset = HEADER_SIZE + (r * dim + i) * 4;
      const v = blob.readFloatLE(offset);
      if (!Number.isFinite(v)) {
        throw new DataFormatError(`${path}: row ${r}: non-finite value ${v}`, offset);
      }
      if (v !== 0) allZero = false;
    }
    if (allZero) zeroRows++;
  }
  return zeroRows;
}

function verifySparse(blob: Buffer, path: string, rows: number, dim: number): number {
  requireLength(blob, path, HEADER_SIZE + 8, "truncated sparse payload");
  const nnz64 = blob.readBigUInt64LE(HEADER_SIZE);
  if (nnz64 > BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new DataFormatError(`${path}: implausible nnz ${nnz64}`, HEADER_SIZE);
  }
  const nnz = Number(nnz64);
  const indptrAt = HEADER_SIZE + 8;
  const indicesAt = indptrAt + (rows + 1) * 8;
  const dataAt = indicesAt + nnz * 4;
  const expected = dataAt + nnz * 4;
  requireLength(blob, path, expected, "truncated sparse payload");
  if (blob.length > expected) {
    throw new DataFormatError(
      `${path}: ${blob.length - expected} trailing bytes after the payload`,
      expected,
    );
  }

  let prev = 0n;
  for (let r = 0; r <= rows; r++) {
    const offset = indptrAt + r * 8;
    const p = blob.readBigUInt64LE(offset);
    if (p < prev || p > nnz64) {
      throw new DataFormatError(`${path}: row offset ${p} out of order`, offset);
    }
    prev = p;
  }
  if (prev !== nnz64) {
    throw new DataFormatError(
      `${path}: final row offset ${prev} does not match nnz ${nnz}`,
      indptrAt + rows * 8,
    );
  }
  for (let i = 0; i < nnz; i++) {
    const offset = indicesAt + i * 4;
    const col = blob.readUInt32LE(offset);
    if (col >= dim) {
      throw new DataFormatError(`${path}: column index ${col} >= dim ${dim}`, offset);
    }
  }

  let zeroRows = 0;
  for (let r = 0; r < rows; r++) {
    const start = Number(blob.readBigUInt64LE(indptrAt + r * 8));
    const stop = Number(blob.readBigUInt64LE(indptrAt + (r + 1) * 8));
    let allZero = true;
    for (let i = start; i < stop; i++) {
      const offset = dataAt + i * 4;
      const v = blob.readFloatLE(offset);
      if (!Number.isFinite(v)) {
        throw new DataFormatError(`${path}: row ${r}: non-finite value ${v}`, offset);
      }
      if (v !== 0) allZero = false;
    }
    if (allZero) zeroRows++;
  }
  return zeroRows;
}
