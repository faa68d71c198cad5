import * as fs from 'node:fs';
import * as path from 'node:path';

/** Write a two-video dataset in the benchmark layout and return its root. */
export function writeFixtureDataset(root: string): void {
  const split = path.join(root, 'synth');
  fs.mkdirSync(split, { recursive: true });
  const meta = {
    videos: {
      vid0: {
        frames: ['00000', '00001', '00002'],
        expressions: {
          '0': { exp: 'the square staying put', anno_id: ['0'] },
          '1': { exp: 'both shapes', anno_id: ['0', '1'] },
        },
      },
    },
  };
  // 4x4 canvas, column-major runs
  const maskDict = {
    // pixel (0,0) set on every frame
    '0': [
      { size: [4, 4], counts: [0, 1, 15] },
      { size: [4, 4], counts: [0, 1, 15] },
      { size: [4, 4], counts: [0, 1, 15] },
    ],
    // pixel (3,3) set on frames 0 and 2, absent on frame 1
    '1': [
      { size: [4, 4], counts: [15, 1] },
      null,
      { size: [4, 4], counts: [15, 1] },
    ],
  };
  fs.writeFileSync(path.join(split, 'meta_expressions.json'), JSON.stringify(meta));
  fs.writeFileSync(path.join(split, 'mask_dict.json'), JSON.stringify(maskDict));
}
