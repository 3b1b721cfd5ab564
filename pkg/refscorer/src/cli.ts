#!/usr/bin/env node
/**
 * refscorer serve [--port N] [--seed N]
 * refscorer conformance <endpoint-url>
 */

import { runConformance } from "./conformance";
import { serve } from "./server";

function flag(args: string[], name: string, fallback: number): number {
  const index = args.indexOf(name);
  if (index === -1 || index + 1 >= args.length) return fallback;
  const value = Number(args[index + 1]);
  if (!Number.isFinite(value)) {
    console.error(`bad value for ${name}: ${args[index + 1]}`);
    process.exit(1);
  }
  return value;
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  if (command === "serve") {
    const port = flag(rest, "--port", 0);
    const seed = flag(rest, "--seed", 0);
    const handle = await serve(port, seed);
    console.log(JSON.stringify({ ok: true, port: handle.port, seed }));
    await new Promise<void>((resolve) => {
      process.on("SIGINT", resolve);
      process.on("SIGTERM", resolve);
    });
    await handle.close();
    return 0;
  }
  if (command === "conformance") {
    const endpoint = rest.find((a) => !a.startsWith("--"));
    if (!endpoint) {
      console.error("usage: refscorer conformance <endpoint-url>");
      return 1;
    }
    const report = await runConformance(endpoint);
    for (const check of report.checks) {
      console.log(`${check.pass ? "PASS" : "FAIL"}  ${check.name}${check.pass ? "" : "  " + check.detail}`);
    }
    console.log(
      JSON.stringify({ endpoint: report.endpoint, passed: report.passed, failed: report.failed }),
    );
    return report.failed === 0 ? 0 : 1;
  }
  console.error("usage: refscorer serve [--port N] [--seed N] | refscorer conformance <url>");
  return 1;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(err);
    process.exit(1);
  },
);
