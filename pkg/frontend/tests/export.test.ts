import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { exportCorpus, exportSource } from "../src/export";

let tmpDir: string;

beforeEach(() => {
  tmpDir = fs.mkdtempSync(path.join(os.tmpdir(), "scelmo-export-"));
});

afterEach(() => {
  fs.rmSync(tmpDir, { recursive: true, force: true });
});

function write(rel: string, content: string): string {
  const full = path.join(tmpDir, rel);
  fs.mkdirSync(path.dirname(full), { recursive: true });
  fs.writeFileSync(full, content, "utf-8");
  return full;
}

describe("exportSource", () => {
  it("tokenizes a simple declaration into five tokens", () => {
    const rec = exportSource("var x = 1;", "a.js");
    expect(rec.parse_ok).toBe(true);
    expect(rec.tokens.map((t) => t.text)).toEqual(["var", "x", "=", "1", ";"]);
    expect(rec.tokens.map((t) => t.kind)).toEqual(
      ["Keyword", "Identifier", "Punctuator", "Numeric", "Punctuator"]);
  });

  it("parses a two-argument call into a CallExpression with 2 arguments", () => {
    const rec = exportSource(
      "setTimeout(delay, function() { logMessage(msgValue); });", "b.js");
    expect(rec.parse_ok).toBe(true);
    const expr = (rec.ast as any).body[0].expression;
    expect(expr.type).toBe("CallExpression");
    expect(expr.arguments.length).toBe(2);
    expect(expr.arguments[1].type).toBe("FunctionExpression");
  });

  it("keeps the token stream for unparseable files", () => {
    const rec = exportSource("var x = ;", "c.js");
    expect(rec.parse_ok).toBe(false);
    expect(rec.ast).toBeNull();
    expect(rec.tokens.map((t) => t.text)).toEqual(["var", "x", "=", ";"]);
  });

  it("returns an empty stream when even tokenizing fails", () => {
    const rec = exportSource('var s = "unterminated', "d.js");
    expect(rec.parse_ok).toBe(false);
    expect(Array.isArray(rec.tokens)).toBe(true);
  });

  it("drops comments by default and keeps them on request", () => {
    const src = "// note\nvar x = 1; /* block */";
    const dropped = exportSource(src, "e.js");
    expect(dropped.tokens.map((t) => t.text)).toEqual(["var", "x", "=", "1", ";"]);
    const kept = exportSource(src, "e.js", { keepComments: true });
    expect(kept.tokens.some((t) => t.kind === "LineComment")).toBe(true);
    expect(kept.tokens.some((t) => t.kind === "BlockComment")).toBe(true);
  });

  it("token offsets reconstruct ASCII sources byte for byte", () => {
    const src = "var a = 1;\nif (a < 2) {\n  run(a, 'x');\n}\n";
    const rec = exportSource(src, "r.js");
    let rebuilt = "";
    let cursor = 0;
    for (const tok of rec.tokens) {
      expect(src.slice(tok.start, tok.end)).toBe(tok.text);
      const gap = src.slice(cursor, tok.start);
      expect(gap.trim()).toBe("");  // inter-token gaps are whitespace
      rebuilt += gap + tok.text;
      cursor = tok.end;
    }
    rebuilt += src.slice(cursor);
    expect(rebuilt).toBe(src);
  });

  it("emits nondecreasing start offsets", () => {
    const rec = exportSource("f(a, b); g(c);", "o.js");
    const starts = rec.tokens.map((t) => t.start);
    expect([...starts].sort((a, b) => a - b)).toEqual(starts);
  });
});

describe("exportCorpus", () => {
  it("summarizes a directory of valid files", () => {
    write("one.js", "var a = 1;");
    write("two.js", "var b = 2;");
    write("sub/three.js", "var c = 3;");
    const out = path.join(tmpDir, "out.jsonl");
    const summary = exportCorpus(tmpDir, out);
    expect(summary).toEqual({ files: 3, parsed: 3, failed: 0 });
  });

  it("handles an empty directory", () => {
    const out = path.join(tmpDir, "out.jsonl");
    fs.mkdirSync(path.join(tmpDir, "src"));
    const summary = exportCorpus(path.join(tmpDir, "src"), out);
    expect(summary).toEqual({ files: 0, parsed: 0, failed: 0 });
    expect(fs.readFileSync(out, "utf-8")).toBe("");
  });

  it("counts unparseable files as failed", () => {
    write("good1.js", "var a = 1;");
    write("good2.js", "f(a, b);");
    write("bad.js", "var x = ;");
    const summary = exportCorpus(tmpDir, path.join(tmpDir, "out.jsonl"));
    expect(summary).toEqual({ files: 3, parsed: 2, failed: 1 });
  });

  it("orders records lexicographically by relative path and is deterministic", () => {
    write("z.js", "var z = 1;");
    write("a/x.js", "var x = 1;");
    write("m.js", "var m = 1;");
    const out1 = path.join(tmpDir, "out1.jsonl");
    const out2 = path.join(tmpDir, "out2.jsonl");
    exportCorpus(tmpDir, out1);
    exportCorpus(tmpDir, out2);
    const bytes1 = fs.readFileSync(out1);
    expect(bytes1.equals(fs.readFileSync(out2))).toBe(true);
    const paths = bytes1.toString("utf-8").trim().split("\n")
      .map((l) => JSON.parse(l).path);
    expect(paths).toEqual(["a/x.js", "m.js", "z.js"]);
  });

  it("filters by extension", () => {
    write("a.js", "var a = 1;");
    write("b.txt", "not js");
    write("c.mjs", "var c = 1;");
    const summary = exportCorpus(tmpDir, path.join(tmpDir, "out.jsonl"),
                                 { extensions: [".js", ".mjs"] });
    expect(summary.files).toBe(2);
  });

  it("rejects a non-directory root", () => {
    const file = write("a.js", "var a = 1;");
    expect(() => exportCorpus(file, path.join(tmpDir, "out.jsonl")))
      .toThrow(/not a directory/);
  });
});

describe("pipeline interop", () => {
  it("ingest consumes exporter output without schema errors", () => {
    write("one.js", "var count = 1;\nif (count < 10) { count = count + 1; }");
    write("two.js", "list.insert(count, 'x');");
    write("bad.js", "var x = ;");
    const out = path.join(tmpDir, "corpus.jsonl");
    const summary = exportCorpus(tmpDir, out);
    expect(summary).toEqual({ files: 3, parsed: 2, failed: 1 });
    const store = path.join(tmpDir, "corpus.store");
    const stdout = execFileSync(
      "python3", ["-m", "scelmo.cli", "ingest", "--in", out, "--out", store],
      { encoding: "utf-8" });
    const report = JSON.parse(stdout);
    expect(report.files).toBe(3);
    expect(report.skipped_lines).toBe(0);
    expect(fs.existsSync(store)).toBe(true);
  });

  it("cli binary exports with a summary on stdout", () => {
    write("a.js", "var a = 1;");
    const out = path.join(tmpDir, "c.jsonl");
    const cli = path.join(__dirname, "..", "dist", "cli.js");
    const stdout = execFileSync("node", [cli, "export", "--root", tmpDir,
                                         "--out", out], { encoding: "utf-8" });
    expect(JSON.parse(stdout)).toEqual({ files: 1, parsed: 1, failed: 0 });
  });
});
