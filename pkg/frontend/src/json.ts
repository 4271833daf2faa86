/**
 * JSON tree values with byte-faithful canonical serialization.
 *
 * The server canonicalizes flow documents as: sorted keys, 2-space indent,
 * numbers in their original decimal notation. JSON.parse would collapse a
 * number like 1.10 to 1.1 and break byte equality, so parseTree keeps the
 * raw text of any number literal that does not survive a double round trip
 * and the serializer re-emits it verbatim.
 */

export class RawNumber {
  constructor(readonly text: string) {}
  valueOf(): number {
    return Number(this.text);
  }
}

export type Tree =
  | null
  | boolean
  | number
  | RawNumber
  | string
  | Tree[]
  | { [key: string]: Tree };

export class JsonParseError extends Error {
  constructor(message: string, readonly offset: number) {
    super(`${message} at offset ${offset}`);
  }
}

const WHITESPACE = new Set([" ", "\t", "\n", "\r"]);

class Parser {
  pos = 0;

  constructor(readonly text: string) {}

  fail(message: string): never {
    throw new JsonParseError(message, this.pos);
  }

  skipWs(): void {
    while (this.pos < this.text.length && WHITESPACE.has(this.text[this.pos])) {
      this.pos++;
    }
  }

  peek(): string {
    if (this.pos >= this.text.length) this.fail("unexpected end of input");
    return this.text[this.pos];
  }

  expect(ch: string): void {
    if (this.text[this.pos] !== ch) this.fail(`expected ${JSON.stringify(ch)}`);
    this.pos++;
  }

  value(): Tree {
    this.skipWs();
    const ch = this.peek();
    if (ch === "{") return this.object();
    if (ch === "[") return this.array();
    if (ch === '"') return this.string();
    if (ch === "t" || ch === "f" || ch === "n") return this.keyword();
    if (ch === "-" || (ch >= "0" && ch <= "9")) return this.number();
    this.fail(`unexpected character ${JSON.stringify(ch)}`);
  }

  object(): Tree {
    this.expect("{");
    const out: { [key: string]: Tree } = {};
    this.skipWs();
    if (this.peek() === "}") {
      this.pos++;
      return out;
    }
    for (;;) {
      this.skipWs();
      const key = this.string();
      this.skipWs();
      this.expect(":");
      out[key] = this.value();
      this.skipWs();
      if (this.peek() === ",") {
        this.pos++;
        continue;
      }
      this.expect("}");
      return out;
    }
  }

  array(): Tree {
    this.expect("[");
    const out: Tree[] = [];
    this.skipWs();
    if (this.peek() === "]") {
      this.pos++;
      return out;
    }
    for (;;) {
      out.push(this.value());
      this.skipWs();
      if (this.peek() === ",") {
        this.pos++;
        continue;
      }
      this.expect("]");
      return out;
    }
  }

  string(): string {
    // delegate escape handling to JSON.parse on the raw slice
    if (this.peek() !== '"') this.fail("expected string");
    const start = this.pos;
    this.pos++;
    while (this.pos < this.text.length) {
      const ch = this.text[this.pos];
      if (ch === "\\") {
        this.pos += 2;
        continue;
      }
      if (ch === '"') {
        this.pos++;
        return JSON.parse(this.text.slice(start, this.pos)) as string;
      }
      this.pos++;
    }
    this.fail("unterminated string");
  }

  keyword(): Tree {
    for (const [word, value] of [["true", true], ["false", false], ["null", null]] as const) {
      if (this.text.startsWith(word, this.pos)) {
        this.pos += word.length;
        return value;
      }
    }
    this.fail("unexpected keyword");
  }

  number(): number | RawNumber {
    const start = this.pos;
    const rest = this.text.slice(this.pos);
    const match = /^-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][+-]?\d+)?/.exec(rest);
    if (!match) this.fail("malformed number");
    this.pos += match[0].length;
    const raw = match[0];
    const parsed = Number(raw);
    // keep the literal when default formatting would alter it (1.10, 1E+3)
    return formatNumber(parsed) === raw ? parsed : new RawNumber(raw);
  }
}

export function parseTree(text: string): Tree {
  const parser = new Parser(text);
  const value = parser.value();
  parser.skipWs();
  if (parser.pos !== text.length) parser.fail("trailing data");
  return value;
}

export function formatNumber(value: number): string {
  if (!Number.isFinite(value)) throw new Error(`non-finite number ${value}`);
  return String(value);
}

export interface CanonicalOptions {
  sortKeys?: boolean;
  indent?: number;
}

export function canonicalize(value: Tree, options: CanonicalOptions = {}): string {
  const out: string[] = [];
  emit(value, out, options.sortKeys ?? false, options.indent, 0);
  return out.join("");
}

function emit(value: Tree, out: string[], sortKeys: boolean,
              indent: number | undefined, depth: number): void {
  if (value === null) {
    out.push("null");
  } else if (value === true || value === false) {
    out.push(String(value));
  } else if (typeof value === "number") {
    out.push(formatNumber(value));
  } else if (value instanceof RawNumber) {
    out.push(value.text);
  } else if (typeof value === "string") {
    out.push(JSON.stringify(value));
  } else if (Array.isArray(value)) {
    if (value.length === 0) {
      out.push("[]");
      return;
    }
    const [sep, pad, close] = layout(indent, depth);
    out.push("[" + pad);
    value.forEach((item, i) => {
      if (i) out.push(sep);
      emit(item, out, sortKeys, indent, depth + 1);
    });
    out.push(close + "]");
  } else {
    const keys = sortKeys ? Object.keys(value).sort() : Object.keys(value);
    if (keys.length === 0) {
      out.push("{}");
      return;
    }
    const [sep, pad, close] = layout(indent, depth);
    out.push("{" + pad);
    keys.forEach((key, i) => {
      if (i) out.push(sep);
      out.push(JSON.stringify(key));
      out.push(indent === undefined ? ":" : ": ");
      emit(value[key], out, sortKeys, indent, depth + 1);
    });
    out.push(close + "}");
  }
}

function layout(indent: number | undefined, depth: number): [string, string, string] {
  if (indent === undefined) return [",", "", ""];
  const inner = "\n" + " ".repeat(indent * (depth + 1));
  const outer = "\n" + " ".repeat(indent * depth);
  return ["," + inner, inner, outer];
}

/** Deep copy; RawNumber instances are immutable and shared. */
export function cloneTree(value: Tree): Tree {
  if (value === null || typeof value !== "object" || value instanceof RawNumber) {
    return value;
  }
  if (Array.isArray(value)) return value.map(cloneTree);
  const out: { [key: string]: Tree } = {};
  for (const key of Object.keys(value)) out[key] = cloneTree(value[key]);
  return out;
}

export function treesEqual(a: Tree, b: Tree): boolean {
  return canonicalize(a, { sortKeys: true }) === canonicalize(b, { sortKeys: true });
}
