#!/usr/bin/env node
/** Command-line figure renderer: plot --kind {detection|rate|pdp} --in csv --out svg */
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { render, FigureKind } from "./charts.js";

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .command("plot", "render one experiment CSV as an SVG figure")
    .option("kind", {
      choices: ["detection", "rate", "pdp"] as const,
      demandOption: true,
      describe: "which figure to draw",
    })
    .option("in", { type: "string", demandOption: true, describe: "input CSV path" })
    .option("out", { type: "string", demandOption: true, describe: "output SVG path" })
    .option("x-label", { type: "string", describe: "x axis label override" })
    .option("y-label", { type: "string", describe: "y axis label override" })
    .strict()
    .parse();

  try {
    render({
      kind: args.kind as FigureKind,
      inputPath: args.in,
      outputPath: args.out,
      xLabel: args["x-label"],
      yLabel: args["y-label"],
    });
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  console.log(`wrote ${args.out}`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
