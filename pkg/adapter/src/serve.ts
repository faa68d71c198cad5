/**
 * The request/response loop: strictly serial, one response per request,
 * runs until the input stream closes. Malformed requests are reported on
 * the diagnostic stream and skipped; a bad handshake terminates the
 * process, because the peer is speaking another protocol version.
 */

import { createInterface } from 'node:readline';

import { GroundTruthStore } from './dataset.js';
import {
  PROTOCOL_VERSION,
  BadRequestError,
  QueryResult,
  ResultMessage,
  SegmentRequest,
  isValidHello,
  parseSegmentRequest,
} from './protocol.js';
import { Mask, encodeRle } from './rle.js';

export type AdapterMode = 'echo' | 'constant';

export interface AdapterConfig {
  mode: AdapterMode;
  /** dataset location; required in echo mode */
  datasetRoot?: string;
  split?: string;
  /** canvas for constant mode, which has no dataset to take sizes from */
  height: number;
  width: number;
}

export interface ServeIo {
  input: NodeJS.ReadableStream;
  output: NodeJS.WritableStream;
  errors: NodeJS.WritableStream;
}

function centeredRectangle(height: number, width: number): Mask {
  const data = new Uint8Array(height * width);
  const r0 = Math.floor(height / 4);
  const r1 = r0 + Math.max(1, Math.floor(height / 2));
  const c0 = Math.floor(width / 4);
  const c1 = c0 + Math.max(1, Math.floor(width / 2));
  for (let c = c0; c < c1; c++) {
    for (let r = r0; r < r1; r++) {
      data[c * height + r] = 1; // column-major
    }
  }
  return { height, width, data };
}

function answerEcho(req: SegmentRequest, store: GroundTruthStore): ResultMessage {
  const indices = req.frames.map((p) => store.frameIndex(req.video_id, p));
  const queries: QueryResult[] = [];
  for (let q = 0; q < req.num_queries; q++) {
    if (q === 0) {
      queries.push({
        query_index: 0,
        scores: indices.map(() => 1.0),
        masks: indices.map((t) => encodeRle(store.unionMask(req.video_id, req.exp_id, t))),
      });
    } else {
      queries.push({
        query_index: q,
        scores: indices.map(() => 0.0),
        masks: indices.map(() => null),
      });
    }
  }
  return { type: 'result', queries };
}

function answerConstant(req: SegmentRequest, config: AdapterConfig): ResultMessage {
  const rle = encodeRle(centeredRectangle(config.height, config.width));
  const queries: QueryResult[] = [];
  for (let q = 0; q < req.num_queries; q++) {
    queries.push({
      query_index: q,
      scores: req.frames.map(() => 0.5),
      masks: req.frames.map(() => rle),
    });
  }
  return { type: 'result', queries };
}

/** Run the loop; resolves with the process exit code when input closes. */
export async function serve(config: AdapterConfig, io: ServeIo): Promise<number> {
  let store: GroundTruthStore | null = null;
  if (config.mode === 'echo') {
    if (!config.datasetRoot) {
      io.errors.write('echo mode needs a dataset root\n');
      return 2;
    }
    store = new GroundTruthStore(config.datasetRoot, config.split ?? 'valid');
  }

  io.output.write(JSON.stringify({ type: 'hello', protocol: PROTOCOL_VERSION }) + '\n');

  const lines = createInterface({ input: io.input, crlfDelay: Infinity });
  let handshaken = false;
  for await (const line of lines) {
    if (!line.trim()) {
      continue;
    }
    let doc: unknown;
    try {
      doc = JSON.parse(line);
    } catch {
      io.errors.write(`ignoring non-JSON line: ${line.slice(0, 120)}\n`);
      continue;
    }
    if (!handshaken) {
      if (!isValidHello(doc)) {
        io.errors.write(
          `bad handshake (need {"type":"hello","protocol":${PROTOCOL_VERSION}}): ` +
            `${JSON.stringify(doc)}\n`,
        );
        return 1;
      }
      handshaken = true;
      continue;
    }
    let request: SegmentRequest;
    try {
      request = parseSegmentRequest(doc);
    } catch (err) {
      if (err instanceof BadRequestError) {
        io.errors.write(`bad request: ${err.message}\n`);
        continue;
      }
      throw err;
    }
    try {
      const result =
        config.mode === 'echo'
          ? answerEcho(request, store as GroundTruthStore)
          : answerConstant(request, config);
      io.output.write(JSON.stringify(result) + '\n');
    } catch (err) {
      // answering failed (e.g. unknown video); report and keep serving
      io.errors.write(`request failed: ${(err as Error).message}\n`);
    }
  }
  return 0;
}
