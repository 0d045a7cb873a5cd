/**
 * Turns JavaScript sources into the token-stream + AST JSONL records the
 * analysis pipeline ingests.
 *
 * Tokens carry their raw source slice and [start, end) character offsets, so
 * concatenating token texts with the original inter-token whitespace
 * reconstructs the file. Files that fail to parse still contribute their
 * token stream (parse_ok=false, ast=null); files that cannot even be
 * tokenized contribute an empty stream.
 */

import * as fs from "node:fs";
import * as path from "node:path";

// esprima ships without bundled types.
// eslint-disable-next-line @typescript-eslint/no-var-requires
const esprima = require("esprima");

export interface ExportedToken {
  kind: string;
  text: string;
  start: number;
  end: number;
}

export interface ExportedFile {
  path: string;
  tokens: ExportedToken[];
  ast: object | null;
  parse_ok: boolean;
}

export interface ExportSummary {
  files: number;
  parsed: number;
  failed: number;
}

export interface ExportOptions {
  extensions?: string[];
  keepComments?: boolean;
}

const COMMENT_KINDS = new Set(["LineComment", "BlockComment"]);

export function exportSource(source: string, relPath: string,
                             opts: ExportOptions = {}): ExportedFile {
  let tokens: ExportedToken[] = [];
  try {
    const raw = esprima.tokenize(source, { range: true, comment: true, tolerant: true });
    tokens = raw
      .filter((t: { type: string }) => opts.keepComments || !COMMENT_KINDS.has(t.type))
      .map((t: { type: string; range: [number, number] }) => ({
        kind: t.type,
        text: source.slice(t.range[0], t.range[1]),
        start: t.range[0],
        end: t.range[1],
      }));
  } catch {
    tokens = [];
  }

  let ast: object | null = null;
  try {
    ast = esprima.parseScript(source, { range: true });
  } catch {
    try {
      ast = esprima.parseModule(source, { range: true });
    } catch {
      ast = null;
    }
  }
  return { path: relPath, tokens, ast, parse_ok: ast !== null };
}

export function exportFile(sourcePath: string, relPath: string,
                           opts: ExportOptions = {}): ExportedFile {
  let source: string;
  try {
    source = fs.readFileSync(sourcePath, "utf-8");
  } catch (err) {
    const msg = err instanceof Error ? err.message : String(err);
    throw new Error(`cannot read ${sourcePath}: ${msg}`);
  }
  return exportSource(source, relPath, opts);
}

function walk(dir: string, out: string[]): void {
  for (const entry of fs.readdirSync(dir, { withFileTypes: true })) {
    const full = path.join(dir, entry.name);
    if (entry.isDirectory()) {
      walk(full, out);
    } else if (entry.isFile()) {
      out.push(full);
    }
  }
}

/** Source files under root with a matching extension, sorted by relative path. */
export function collectSources(root: string, extensions: string[]): string[] {
  const all: string[] = [];
  walk(root, all);
  const wanted = all.filter((f) => extensions.includes(path.extname(f)));
  wanted.sort((a, b) => {
    const ra = path.relative(root, a).split(path.sep).join("/");
    const rb = path.relative(root, b).split(path.sep).join("/");
    return ra < rb ? -1 : ra > rb ? 1 : 0;
  });
  return wanted;
}

export function exportCorpus(root: string, outPath: string,
                             opts: ExportOptions = {}): ExportSummary {
  const stat = fs.statSync(root);
  if (!stat.isDirectory()) {
    throw new Error(`root is not a directory: ${root}`);
  }
  const extensions = opts.extensions ?? [".js"];
  const sources = collectSources(root, extensions);
  const summary: ExportSummary = { files: 0, parsed: 0, failed: 0 };
  const lines: string[] = [];
  for (const file of sources) {
    const rel = path.relative(root, file).split(path.sep).join("/");
    const record = exportFile(file, rel, opts);
    lines.push(JSON.stringify(record));
    summary.files += 1;
    if (record.parse_ok) {
      summary.parsed += 1;
    } else {
      summary.failed += 1;
    }
  }
  fs.writeFileSync(outPath, lines.length ? lines.join("\n") + "\n" : "", "utf-8");
  return summary;
}
