/** Tunables for one scoring session. */
export interface AdapterConfig {
  /** Backend selector, e.g. "mock", "mock:hash", "constant:2.5", "xenova:<model-id>". */
  model: string;
  /** Requests scored per model call. */
  batchSize: number;
  /** Placement hint handed to the model loader; mock backends ignore it. */
  device: string;
  /** Query and document text are truncated to this many whitespace tokens. */
  maxSeqLen: number;
  /** How long a partial batch may wait before it is scored anyway. */
  flushMs: number;
  /** Handshake name override; defaults to the backend label. */
  name?: string;
}

export const DEFAULTS: Readonly<Omit<AdapterConfig, 'name'>> = {
  model: 'mock',
  batchSize: 16,
  device: 'cpu',
  maxSeqLen: 512,
  flushMs: 50,
};

export class ConfigError extends Error {}

/** Fill in defaults and reject out-of-range values. */
export function resolveConfig(overrides: Partial<AdapterConfig> = {}): AdapterConfig {
  const config: AdapterConfig = { ...DEFAULTS };
  for (const [key, value] of Object.entries(overrides)) {
    if (value !== undefined) {
      (config as unknown as Record<string, unknown>)[key] = value;
    }
  }
  if (typeof config.model !== 'string' || config.model.length === 0) {
    throw new ConfigError('model spec must be a non-empty string');
  }
  if (!Number.isInteger(config.batchSize) || config.batchSize < 1) {
    throw new ConfigError(`batch size must be an integer >= 1, got ${config.batchSize}`);
  }
  if (!Number.isInteger(config.maxSeqLen) || config.maxSeqLen < 1) {
    throw new ConfigError(`max sequence length must be an integer >= 1, got ${config.maxSeqLen}`);
  }
  if (!Number.isFinite(config.flushMs) || config.flushMs <= 0) {
    throw new ConfigError(`flush timeout must be positive, got ${config.flushMs}`);
  }
  return config;
}
