/** Error taxonomy mirroring the CLI exit-code contract. */

export class BindingError extends Error {
  constructor(
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = new.target.name;
  }
}

/** A buffer view violated the boundary contract (shape, dtype, contiguity). */
export class BoundaryError extends BindingError {
  constructor(message: string) {
    super("BoundaryError", message);
  }
}

/** The CLI rejected the arguments (exit 2). */
export class UsageError extends BindingError {
  constructor(message: string) {
    super("UsageError", message);
  }
}

/** Data-contract violation (exit 3); `code` carries the core error code, e.g. "InsufficientPoints". */
export class DataError extends BindingError {}

/** I/O or file-format failure (exit 4). */
export class IoError extends BindingError {}
