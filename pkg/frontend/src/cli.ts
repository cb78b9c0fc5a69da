#!/usr/bin/env node
import { pathToFileURL } from "node:url";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { trainGae } from "./gae.js";
import { ParseError, readCovariates, readNetwork, writeEmbeddings } from "./io.js";

export async function main(argv: string[]): Promise<number> {
  let args;
  try {
    args = await yargs(argv)
      .scriptName("gae-embed")
      .usage("$0 --covariates z.csv --network g.edges --out h.csv")
      .option("covariates", { type: "string", demandOption: true })
      .option("network", { type: "string", demandOption: true })
      .option("dim", { type: "number", default: 4 })
      .option("hidden", { type: "number", default: 32 })
      .option("epochs", { type: "number", default: 200 })
      .option("learning-rate", { type: "number", default: 0.01 })
      .option("seed", { type: "number", default: 0 })
      .option("variational", { type: "boolean", default: false })
      .option("out", { type: "string", demandOption: true })
      .strict()
      .help()
      .exitProcess(false)
      .fail(false)
      .parse();
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 2;
  }
  if (args.help) {
    return 0;
  }

  try {
    const covariates = readCovariates(args.covariates);
    const network = readNetwork(args.network, covariates.rows);
    const result = trainGae(covariates, network, {
      latentDim: args.dim,
      hiddenWidth: args.hidden,
      epochs: args.epochs,
      learningRate: args["learning-rate"],
      seed: args.seed,
      variational: args.variational,
    });
    writeEmbeddings(args.out, result.embeddings);
    const last = result.losses[result.losses.length - 1];
    console.log(
      `trained ${args.epochs} epochs on ${network.n} nodes, ` +
        `final loss ${last.toFixed(6)}, wrote ${args.out}`,
    );
    return 0;
  } catch (err) {
    if (err instanceof ParseError || err instanceof Error) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
