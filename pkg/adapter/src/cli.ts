#!/usr/bin/env node
/**
 * External scorer over line-delimited JSON. With no arguments it serves the
 * token-count mock on stdio, which is all a protocol conformance check needs;
 * flags select real backends, batching, and a TCP listener instead.
 */
import { createServer, type AddressInfo } from 'node:net';
import { parseArgs } from 'node:util';
import { ConfigError, DEFAULTS, resolveConfig, type AdapterConfig } from './config.js';
import { serve } from './server.js';

const USAGE = `usage: abnirml-scorer-adapter [options]

Serve (query, document) scores over stdio (default) or TCP (--listen).

options:
  --model <spec>      backend: mock[:tokens|:chars|:hash], constant:<value>,
                      or xenova:<model-id> (default: ${DEFAULTS.model})
  --batch-size <n>    requests scored per model call (default: ${DEFAULTS.batchSize})
  --device <hint>     model placement hint, e.g. cpu or gpu (default: ${DEFAULTS.device})
  --max-seq-len <n>   truncate texts to this many tokens (default: ${DEFAULTS.maxSeqLen})
  --flush-ms <n>      max wait before a partial batch is scored (default: ${DEFAULTS.flushMs})
  --name <label>      handshake name (default: the backend label)
  --listen <port>     serve TCP connections on 127.0.0.1 instead of stdio
  --help              show this message
`;

function numberFlag(raw: string | undefined, flag: string): number | undefined {
  if (raw === undefined) {
    return undefined;
  }
  const value = Number(raw);
  if (Number.isNaN(value)) {
    throw new ConfigError(`${flag} expects a number, got "${raw}"`);
  }
  return value;
}

async function main(argv: string[]): Promise<number> {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        model: { type: 'string' },
        'batch-size': { type: 'string' },
        device: { type: 'string' },
        'max-seq-len': { type: 'string' },
        'flush-ms': { type: 'string' },
        name: { type: 'string' },
        listen: { type: 'string' },
        help: { type: 'boolean', default: false },
      },
    }));
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n${USAGE}`);
    return 1;
  }
  if (values.help) {
    process.stdout.write(USAGE);
    return 0;
  }
  let config: AdapterConfig;
  try {
    config = resolveConfig({
      model: values.model,
      batchSize: numberFlag(values['batch-size'], '--batch-size'),
      device: values.device,
      maxSeqLen: numberFlag(values['max-seq-len'], '--max-seq-len'),
      flushMs: numberFlag(values['flush-ms'], '--flush-ms'),
      name: values.name,
    });
  } catch (err) {
    if (!(err instanceof ConfigError)) {
      throw err;
    }
    process.stderr.write(`error: ${err.message}\n`);
    return 1;
  }
  if (values.listen !== undefined) {
    return listenTcp(config, values.listen);
  }
  try {
    await serve(config, process.stdin, process.stdout);
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : String(err)}\n`);
    return 1;
  }
  return 0;
}

/** Run until killed, serving each connection as an independent session. */
function listenTcp(config: AdapterConfig, portSpec: string): Promise<number> {
  const port = Number(portSpec);
  if (!Number.isInteger(port) || port < 0 || port > 65535) {
    process.stderr.write(`error: --listen expects a port number, got "${portSpec}"\n`);
    return Promise.resolve(1);
  }
  return new Promise((resolve) => {
    // half-open: a client may close its write side and still read responses
    const server = createServer({ allowHalfOpen: true }, (socket) => {
      socket.on('error', () => socket.destroy());
      serve(config, socket, socket).then(
        () => socket.end(),
        (err) => {
          process.stderr.write(`error: ${err instanceof Error ? err.message : String(err)}\n`);
          socket.destroy();
        },
      );
    });
    server.on('error', (err) => {
      process.stderr.write(`error: ${err.message}\n`);
      resolve(1);
    });
    server.listen(port, '127.0.0.1', () => {
      const address = server.address() as AddressInfo;
      process.stderr.write(`listening on 127.0.0.1:${address.port}\n`);
    });
  });
}

main(process.argv.slice(2)).then(
  (code) => {
    process.exitCode = code;
  },
  (err) => {
    process.stderr.write(`error: ${err instanceof Error ? (err.stack ?? err.message) : String(err)}\n`);
    process.exitCode = 1;
  },
);
