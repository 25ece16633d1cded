#!/usr/bin/env node
import { writeFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { expandInputs, loadResults } from "./load.js";
import { loadStyle } from "./style.js";
import { renderSvg } from "./svg.js";
import { renderPng } from "./raster.js";
import type { Metric } from "./types.js";

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .scriptName("plot")
    .option("inputs", {
      type: "string",
      array: true,
      demandOption: true,
      describe: "result CSV files or globs (JSON sidecars expected alongside)",
    })
    .option("metric", {
      choices: ["per", "ber"] as const,
      demandOption: true,
      describe: "which rate to plot; required since results carry both",
    })
    .option("out", { type: "string", demandOption: true, describe: "output .svg or .png" })
    .option("threshold", { type: "number", describe: "horizontal guide line, e.g. 1e-5" })
    .option("ci", { type: "boolean", default: false, describe: "draw confidence bands" })
    .option("style", { type: "string", describe: "style JSON overriding the defaults" })
    .option("title", { type: "string" })
    .strict()
    .parse();

  try {
    const paths = expandInputs(args.inputs as string[]);
    const curves = loadResults(paths, args.metric as Metric);
    const style = loadStyle(args.style);
    const options = {
      threshold: args.threshold ?? null,
      ciBands: args.ci,
      title: args.title,
    };
    if (args.out.endsWith(".png")) {
      writeFileSync(args.out, renderPng(curves, style, options));
    } else if (args.out.endsWith(".svg")) {
      writeFileSync(args.out, renderSvg(curves, style, options));
    } else {
      throw new Error(`output must end in .svg or .png, got ${args.out}`);
    }
    console.log(`wrote ${args.out} (${curves.series.length} series)`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const isDirect =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isDirect) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
