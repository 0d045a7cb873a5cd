#!/usr/bin/env node
import { parseArgs } from "node:util";
import { exportCorpus } from "./export";

const USAGE = `usage: scelmo-export export --root <dir> --out <file.jsonl> [--ext .js] [--keep-comments]

Writes one JSON record per source file: {path, tokens, ast, parse_ok}.
Files are ordered lexicographically by relative path. Comment tokens are
dropped unless --keep-comments is given.`;

function main(): number {
  const args = process.argv.slice(2);
  if (args[0] === "--help" || args[0] === "-h") {
    console.log(USAGE);
    return 0;
  }
  if (args[0] !== "export") {
    console.error(`error: unknown subcommand ${args[0] ?? "(none)"}\n${USAGE}`);
    return 2;
  }
  let values;
  try {
    ({ values } = parseArgs({
      args: args.slice(1),
      options: {
        root: { type: "string" },
        out: { type: "string" },
        ext: { type: "string", multiple: true },
        "keep-comments": { type: "boolean", default: false },
      },
      strict: true,
    }));
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 2;
  }
  if (!values.root || !values.out) {
    console.error("error: --root and --out are required");
    return 2;
  }
  try {
    const summary = exportCorpus(values.root, values.out, {
      extensions: values.ext && values.ext.length ? values.ext : [".js"],
      keepComments: values["keep-comments"],
    });
    console.log(JSON.stringify(summary));
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

process.exit(main());
