import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { DatasetError, GroundTruthStore } from '../src/dataset.js';
import { writeFixtureDataset } from './fixtures.js';

let root: string;
let store: GroundTruthStore;

beforeAll(() => {
  root = fs.mkdtempSync(path.join(os.tmpdir(), 'adapter-ds-'));
  writeFixtureDataset(root);
  store = new GroundTruthStore(root, 'synth');
});

afterAll(() => {
  fs.rmSync(root, { recursive: true, force: true });
});

describe('GroundTruthStore', () => {
  it('maps frame paths to indices via their basename', () => {
    expect(store.frameIndex('vid0', '/data/synth/JPEGImages/vid0/00001.jpg')).toBe(1);
    expect(() => store.frameIndex('vid0', '/x/99999.jpg')).toThrow(DatasetError);
    expect(() => store.frameIndex('ghost', '/x/00000.jpg')).toThrow(DatasetError);
  });

  it('unions every referenced object', () => {
    const mask = store.unionMask('vid0', '1', 0);
    expect(mask.height).toBe(4);
    expect(mask.data[0]).toBe(1); // object 0 at (0,0)
    expect(mask.data[15]).toBe(1); // object 1 at (3,3)
    expect(Array.from(mask.data).reduce((a, b) => a + b, 0)).toBe(2);
  });

  it('treats null annotation frames as absent objects', () => {
    const mask = store.unionMask('vid0', '1', 1);
    expect(Array.from(mask.data).reduce((a, b) => a + b, 0)).toBe(1);
    expect(mask.data[0]).toBe(1);
  });

  it('reports the video size from the first non-null mask', () => {
    expect(store.videoSize('vid0')).toEqual([4, 4]);
  });

  it('rejects a missing split', () => {
    expect(() => new GroundTruthStore(root, 'other')).toThrow(DatasetError);
  });
});
