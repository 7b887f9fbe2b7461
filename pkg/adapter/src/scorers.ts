import { createHash } from 'node:crypto';
import { ConfigError, type AdapterConfig } from './config.js';

export interface QueryDoc {
  q: string;
  d: string;
}

/** Scores one batch of pairs; must return one finite number per pair. */
export type BatchScorer = (pairs: ReadonlyArray<QueryDoc>) => number[] | Promise<number[]>;

export interface LoadedScorer {
  score: BatchScorer;
  /** Backend name, used as the default handshake name. */
  label: string;
}

interface Backend {
  label: string;
  score: BatchScorer;
}

/** Number of whitespace-separated tokens in a text. */
export function tokenCount(text: string): number {
  return text.split(/\s+/).filter(Boolean).length;
}

function truncateWords(text: string, maxTokens: number): string {
  const tokens = text.split(/\s+/).filter(Boolean);
  return tokens.length <= maxTokens ? text : tokens.slice(0, maxTokens).join(' ');
}

function hashScore(q: string, d: string): number {
  const digest = createHash('sha256').update(`${q}${d}`).digest();
  return Number(digest.readBigUInt64BE(0)) / 2 ** 64;
}

// one backend per (model, device), shared across sessions of a TCP service
const backends = new Map<string, Promise<Backend>>();

/**
 * Resolve a model spec to a scoring backend, wrapped so every input is
 * truncated to the configured sequence length. Backends are cached, so a
 * long-lived service loading a heavyweight model pays the load cost once.
 */
export async function loadScorer(config: AdapterConfig): Promise<LoadedScorer> {
  const key = `${config.model}${config.device}`;
  let pending = backends.get(key);
  if (!pending) {
    pending = createBackend(config.model, config.device);
    pending.catch(() => backends.delete(key));
    backends.set(key, pending);
  }
  const backend = await pending;
  const limit = config.maxSeqLen;
  const score: BatchScorer = (pairs) =>
    backend.score(
      pairs.map(({ q, d }) => ({ q: truncateWords(q, limit), d: truncateWords(d, limit) })),
    );
  return { score, label: backend.label };
}

async function createBackend(spec: string, device: string): Promise<Backend> {
  const split = spec.indexOf(':');
  const kind = split === -1 ? spec : spec.slice(0, split);
  const arg = split === -1 ? '' : spec.slice(split + 1);
  switch (kind) {
    case 'mock':
      return mockBackend(arg === '' ? 'tokens' : arg);
    case 'constant': {
      const value = Number(arg);
      if (arg === '' || !Number.isFinite(value)) {
        throw new ConfigError(`constant scorer needs a finite value, got "${arg}"`);
      }
      return { label: spec, score: (pairs) => pairs.map(() => value) };
    }
    case 'xenova':
      return xenovaBackend(arg, device);
    default:
      throw new ConfigError(
        `unknown model spec "${spec}" ` +
          '(expected mock[:tokens|:chars|:hash], constant:<value>, or xenova:<model-id>)',
      );
  }
}

function mockBackend(variant: string): Backend {
  switch (variant) {
    case 'tokens':
      return { label: 'mock-tokens', score: (pairs) => pairs.map(({ d }) => tokenCount(d)) };
    case 'chars':
      return { label: 'mock-chars', score: (pairs) => pairs.map(({ d }) => d.length) };
    case 'hash':
      return { label: 'mock-hash', score: (pairs) => pairs.map(({ q, d }) => hashScore(q, d)) };
    default:
      throw new ConfigError(`unknown mock variant "${variant}" (expected tokens, chars, or hash)`);
  }
}

/**
 * Optional heavyweight path: wraps a cross-encoder through
 * @huggingface/transformers when that package is installed next to the
 * adapter. The import is dynamic and the package is never declared as a
 * dependency, so protocol work stays install-light.
 */
async function xenovaBackend(modelId: string, device: string): Promise<Backend> {
  if (modelId === '') {
    throw new ConfigError('xenova scorer needs a model id, e.g. "xenova:Xenova/ms-marco-MiniLM-L-6-v2"');
  }
  const packageName = '@huggingface/transformers';
  let transformers: any;
  try {
    transformers = await import(packageName);
  } catch {
    throw new ConfigError(
      `model "xenova:${modelId}" needs the optional ${packageName} package (npm install ${packageName})`,
    );
  }
  const classify = await transformers.pipeline('text-classification', modelId, { device });
  return {
    label: modelId,
    score: async (pairs) => {
      const outputs = await classify(
        pairs.map(({ q, d }) => ({ text: q, text_pair: d })),
        { top_k: 1 },
      );
      return (Array.isArray(outputs) ? outputs : [outputs]).map((entry: any) => {
        const first = Array.isArray(entry) ? entry[0] : entry;
        return Number(first.score);
      });
    },
  };
}
