/**
 * Line-delimited JSON wire protocol spoken over stdio or a TCP socket.
 *
 * The serving side writes one handshake line before anything else, then
 * answers each request line with exactly one response line. Responses may
 * arrive out of request order; callers correlate by id.
 */

export const PROTOCOL_VERSION = 'abnirml-scorer/1';

/** First line written by a scorer, before any responses. */
export interface Handshake {
  protocol: string;
  name: string;
}

/** One (query, document) pair to score. */
export interface ScoreRequest {
  id: string | number;
  q: string;
  d: string;
}

export interface ScoreResponse {
  id: string | number;
  score: number;
}

/** id is null when the offending line could not be parsed at all. */
export interface ErrorResponse {
  id: string | number | null;
  error: string;
}

export type WireResponse = ScoreResponse | ErrorResponse;

export type ParsedRequest =
  | { ok: true; request: ScoreRequest }
  | { ok: false; error: ErrorResponse };

/**
 * Validate one input line. Unusable lines yield the error response to send
 * back; the session must keep reading afterwards.
 */
export function parseRequestLine(line: string): ParsedRequest {
  let value: unknown;
  try {
    value = JSON.parse(line);
  } catch {
    return reject(null, 'request line is not valid JSON');
  }
  if (typeof value !== 'object' || value === null || Array.isArray(value)) {
    return reject(null, 'request must be a JSON object');
  }
  const record = value as Record<string, unknown>;
  const id = record.id;
  if (typeof id !== 'string' && typeof id !== 'number') {
    return reject(null, 'request is missing a string or number "id"');
  }
  if (typeof record.q !== 'string') {
    return reject(id, 'request is missing string field "q"');
  }
  if (typeof record.d !== 'string') {
    return reject(id, 'request is missing string field "d"');
  }
  return { ok: true, request: { id, q: record.q, d: record.d } };
}

function reject(id: string | number | null, error: string): ParsedRequest {
  return { ok: false, error: { id, error } };
}
