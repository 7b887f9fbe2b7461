import { createInterface } from 'node:readline';
import type { Readable, Writable } from 'node:stream';
import { BatchQueue } from './batch.js';
import type { AdapterConfig } from './config.js';
import {
  PROTOCOL_VERSION,
  parseRequestLine,
  type Handshake,
  type ScoreRequest,
  type WireResponse,
} from './protocol.js';
import { loadScorer, type BatchScorer } from './scorers.js';

/**
 * Serve one scoring session: read request lines from `input` until EOF and
 * write the handshake plus one response per request to `output`.
 *
 * Guarantees, in protocol terms:
 * - the handshake is the first line written;
 * - every well-formed request gets exactly one response (score or error),
 *   batched by size or by the flush timeout, whichever comes first;
 * - a line that cannot be used yields `{"id": null, "error": ...}` (or an
 *   id-bearing error when only q/d are unusable) and reading continues;
 * - identical sessions produce identical scores, which is spot-checked by
 *   scoring a probe pair twice before the handshake goes out.
 */
export async function serve(
  config: AdapterConfig,
  input: Readable,
  output: Writable,
): Promise<void> {
  const { score, label } = await loadScorer(config);
  await assertDeterministic(score);

  const write = (message: Handshake | WireResponse): void => {
    output.write(`${JSON.stringify(message)}\n`);
  };
  write({ protocol: PROTOCOL_VERSION, name: config.name ?? label });

  const queue = new BatchQueue<ScoreRequest>(config.batchSize, config.flushMs, async (batch) => {
    let scores: number[];
    try {
      scores = await score(batch.map(({ q, d }) => ({ q, d })));
      if (scores.length !== batch.length) {
        throw new Error(`scorer returned ${scores.length} scores for a batch of ${batch.length}`);
      }
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      for (const request of batch) {
        write({ id: request.id, error: message });
      }
      return;
    }
    batch.forEach((request, i) => {
      const value = scores[i];
      if (Number.isFinite(value)) {
        write({ id: request.id, score: value });
      } else {
        write({ id: request.id, error: `scorer produced a non-finite score: ${value}` });
      }
    });
  });

  const reader = createInterface({ input });
  for await (const line of reader) {
    if (!line.trim()) {
      continue;
    }
    const parsed = parseRequestLine(line);
    if (parsed.ok) {
      queue.push(parsed.request);
    } else {
      write(parsed.error);
    }
  }
  await queue.drain();
}

/**
 * Startup self-check: a model must give repeated identical inputs identical
 * scores, otherwise every downstream comparison is noise.
 */
export async function assertDeterministic(score: BatchScorer): Promise<void> {
  const probe = [{ q: 'determinism probe', d: 'alpha beta gamma' }];
  const [first] = await score(probe);
  const [second] = await score(probe);
  if (!Object.is(first, second)) {
    throw new Error(`scorer is not deterministic: probe scored ${first}, then ${second}`);
  }
}
