/** Bad flags, unknown models, invalid composition modes. Exit code 2. */
export class ConfigError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConfigError";
  }
}

/** Unreadable or malformed input/output files. Exit code 3. */
export class DataFormatError extends Error {
  /** Byte offset of the violation when one can be pinpointed. */
  readonly byteOffset: number | null;

  constructor(message: string, byteOffset: number | null = null) {
    super(byteOffset === null ? message : `${message} (at byte ${byteOffset})`);
    this.name = "DataFormatError";
    this.byteOffset = byteOffset;
  }
}
