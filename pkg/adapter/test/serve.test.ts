import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import { PassThrough } from 'node:stream';

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { AdapterConfig, serve } from '../src/serve.js';
import { writeFixtureDataset } from './fixtures.js';

let root: string;

beforeAll(() => {
  root = fs.mkdtempSync(path.join(os.tmpdir(), 'adapter-serve-'));
  writeFixtureDataset(root);
});

afterAll(() => {
  fs.rmSync(root, { recursive: true, force: true });
});

interface Session {
  exitCode: Promise<number>;
  send: (doc: unknown) => void;
  sendRaw: (line: string) => void;
  close: () => void;
  outputLines: () => string[];
  errorText: () => string;
}

function startSession(config: AdapterConfig): Session {
  const input = new PassThrough();
  const output = new PassThrough();
  const errors = new PassThrough();
  let outBuf = '';
  let errBuf = '';
  output.on('data', (chunk) => (outBuf += chunk.toString()));
  errors.on('data', (chunk) => (errBuf += chunk.toString()));
  const exitCode = serve(config, { input, output, errors });
  return {
    exitCode,
    send: (doc) => input.write(JSON.stringify(doc) + '\n'),
    sendRaw: (line) => input.write(line + '\n'),
    close: () => input.end(),
    outputLines: () => outBuf.split('\n').filter((l) => l.length > 0),
    errorText: () => errBuf,
  };
}

const echoConfig: AdapterConfig = {
  mode: 'echo',
  datasetRoot: '',
  split: 'synth',
  height: 8,
  width: 8,
};

function segmentRequest(expId: string, frames: string[], numQueries = 3) {
  return {
    type: 'segment',
    video_id: 'vid0',
    exp_id: expId,
    text: 'both shapes',
    frames,
    resize_short: 360,
    num_queries: numQueries,
  };
}

describe('serve', () => {
  it('announces itself and echoes ground truth as query zero', async () => {
    const session = startSession({ ...echoConfig, datasetRoot: root });
    session.send({ type: 'hello', protocol: 1 });
    session.send(segmentRequest('1', ['a/00000.jpg', 'a/00002.jpg']));
    session.close();
    expect(await session.exitCode).toBe(0);

    const lines = session.outputLines().map((l) => JSON.parse(l));
    expect(lines[0]).toEqual({ type: 'hello', protocol: 1 });
    const result = lines[1];
    expect(result.type).toBe('result');
    expect(result.queries).toHaveLength(3);
    expect(result.queries[0].scores).toEqual([1, 1]);
    // both objects are present on frames 0 and 2: two set pixels each
    for (const rle of result.queries[0].masks) {
      expect(rle.size).toEqual([4, 4]);
      const ones = rle.counts.filter((_: number, i: number) => i % 2 === 1);
      expect(ones.reduce((a: number, b: number) => a + b, 0)).toBe(2);
    }
    expect(result.queries[1].masks).toEqual([null, null]);
    expect(result.queries[2].scores).toEqual([0, 0]);
  });

  it('rejects a peer speaking another protocol version', async () => {
    const session = startSession({ ...echoConfig, datasetRoot: root });
    session.send({ type: 'hello', protocol: 2 });
    expect(await session.exitCode).toBe(1);
    expect(session.errorText()).toContain('bad handshake');
  });

  it('reports malformed requests and keeps serving', async () => {
    const session = startSession({ ...echoConfig, datasetRoot: root });
    session.send({ type: 'hello', protocol: 1 });
    session.sendRaw('{broken json');
    session.send({ type: 'segment', video_id: 'vid0' }); // missing fields
    session.send(segmentRequest('0', ['x/00001.jpg'], 2));
    session.close();
    expect(await session.exitCode).toBe(0);

    expect(session.errorText()).toContain('non-JSON');
    expect(session.errorText()).toContain('bad request');
    const lines = session.outputLines().map((l) => JSON.parse(l));
    expect(lines).toHaveLength(2); // hello + one good answer
    expect(lines[1].queries).toHaveLength(2);
  });

  it('keeps serving after an unanswerable request', async () => {
    const session = startSession({ ...echoConfig, datasetRoot: root });
    session.send({ type: 'hello', protocol: 1 });
    session.send({ ...segmentRequest('0', ['a/00000.jpg']), video_id: 'ghost' });
    session.send(segmentRequest('0', ['a/00000.jpg']));
    session.close();
    expect(await session.exitCode).toBe(0);
    expect(session.errorText()).toContain('request failed');
    expect(session.outputLines()).toHaveLength(2);
  });

  it('serves a centered rectangle in constant mode', async () => {
    const session = startSession({ mode: 'constant', height: 8, width: 8 });
    session.send({ type: 'hello', protocol: 1 });
    session.send(segmentRequest('0', ['a/00000.jpg', 'a/00001.jpg'], 2));
    session.close();
    expect(await session.exitCode).toBe(0);

    const result = JSON.parse(session.outputLines()[1]);
    expect(result.queries).toHaveLength(2);
    for (const query of result.queries) {
      expect(query.scores).toEqual([0.5, 0.5]);
      for (const rle of query.masks) {
        expect(rle.size).toEqual([8, 8]);
        const ones = rle.counts
          .filter((_: number, i: number) => i % 2 === 1)
          .reduce((a: number, b: number) => a + b, 0);
        expect(ones).toBe(16);
      }
    }
  });

  it('requires a dataset root in echo mode', async () => {
    const session = startSession({ ...echoConfig, datasetRoot: undefined });
    expect(await session.exitCode).toBe(2);
  });
});
