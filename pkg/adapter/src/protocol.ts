/**
 * Wire protocol types: one JSON object per line over stdin/stdout.
 *
 * Both sides send {"type":"hello","protocol":1} at startup. Each
 * subsequent request gets exactly one response; a null mask entry means
 * an empty mask at the video's resolution.
 */

import { RleJson } from './rle.js';

export const PROTOCOL_VERSION = 1;

export interface HelloMessage {
  type: 'hello';
  protocol: number;
}

export interface SegmentRequest {
  type: 'segment';
  video_id: string;
  exp_id: string;
  text: string;
  frames: string[];
  resize_short: number;
  num_queries: number;
}

export interface QueryResult {
  query_index: number;
  scores: number[];
  masks: (RleJson | null)[];
}

export interface ResultMessage {
  type: 'result';
  queries: QueryResult[];
}

export class BadRequestError extends Error {}

export function parseSegmentRequest(doc: unknown): SegmentRequest {
  if (typeof doc !== 'object' || doc === null) {
    throw new BadRequestError('request must be a JSON object');
  }
  const req = doc as Record<string, unknown>;
  if (req.type !== 'segment') {
    throw new BadRequestError(`unexpected message type ${JSON.stringify(req.type)}`);
  }
  for (const key of ['video_id', 'exp_id', 'text'] as const) {
    if (typeof req[key] !== 'string') {
      throw new BadRequestError(`request field ${key} must be a string`);
    }
  }
  if (
    !Array.isArray(req.frames) ||
    req.frames.length === 0 ||
    !req.frames.every((f) => typeof f === 'string')
  ) {
    throw new BadRequestError('request field frames must be a non-empty string list');
  }
  const numQueries = req.num_queries;
  if (!Number.isInteger(numQueries) || (numQueries as number) < 1) {
    throw new BadRequestError(`request field num_queries must be a positive integer`);
  }
  const resizeShort = req.resize_short ?? 360;
  if (!Number.isInteger(resizeShort) || (resizeShort as number) < 1) {
    throw new BadRequestError(`request field resize_short must be a positive integer`);
  }
  return {
    type: 'segment',
    video_id: req.video_id as string,
    exp_id: req.exp_id as string,
    text: req.text as string,
    frames: req.frames as string[],
    resize_short: resizeShort as number,
    num_queries: numQueries as number,
  };
}

export function isValidHello(doc: unknown): boolean {
  return (
    typeof doc === 'object' &&
    doc !== null &&
    (doc as Record<string, unknown>).type === 'hello' &&
    (doc as Record<string, unknown>).protocol === PROTOCOL_VERSION
  );
}
