#!/usr/bin/env node
/**
 * CLI entry point: wire serve() to the real stdio streams.
 *
 *   rvos-adapter --mode echo --dataset-root <root> --split <split>
 *   rvos-adapter --mode constant [--height H --width W]
 */

import { serve, AdapterConfig, AdapterMode } from './serve.js';

function parseArgs(argv: string[]): AdapterConfig {
  const values: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith('--') || value === undefined) {
      throw new Error(`cannot parse arguments near ${flag}`);
    }
    values[flag.slice(2)] = value;
  }
  const mode = (values['mode'] ?? 'echo') as AdapterMode;
  if (mode !== 'echo' && mode !== 'constant') {
    throw new Error(`--mode must be echo or constant, got ${mode}`);
  }
  return {
    mode,
    datasetRoot: values['dataset-root'],
    split: values['split'] ?? 'valid',
    height: Number(values['height'] ?? 64),
    width: Number(values['width'] ?? 64),
  };
}

async function main(): Promise<number> {
  let config: AdapterConfig;
  try {
    config = parseArgs(process.argv.slice(2));
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    return 2;
  }
  return serve(config, {
    input: process.stdin,
    output: process.stdout,
    errors: process.stderr,
  });
}

main().then((code) => {
  process.exitCode = code;
});
