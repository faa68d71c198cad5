/**
 * Run-length mask codec.
 *
 * Runs are counted in column-major scan order and alternate starting with
 * the zero-run (the leading count may be 0). The compressed string form
 * packs each count LEB128-style into 6-bit chunks (5 value bits plus a
 * continuation bit, character code = chunk + 48); counts from index 3
 * onward are difference-coded against the count two positions back.
 * Counts stay well below 2^31, so 32-bit bitwise arithmetic is safe.
 */

export interface Mask {
  height: number;
  width: number;
  /** column-major 0/1 buffer of length height*width */
  data: Uint8Array;
}

export interface RleJson {
  size: [number, number];
  counts: number[] | string;
}

const CHAR_LO = 48;
const CHAR_HI = 111;

export class RleDecodeError extends Error {}

export function emptyMask(height: number, width: number): Mask {
  return { height, width, data: new Uint8Array(height * width) };
}

export function expandCounts(s: string): number[] {
  const counts: number[] = [];
  let p = 0;
  while (p < s.length) {
    let x = 0;
    let k = 0;
    let more = true;
    while (more) {
      const code = s.charCodeAt(p) - CHAR_LO;
      if (code < 0 || code > 63) {
        throw new RleDecodeError(`character ${s[p]} at ${p} outside RLE alphabet`);
      }
      x |= (code & 0x1f) << (5 * k);
      more = (code & 0x20) !== 0;
      p += 1;
      k += 1;
      if (more && p >= s.length) {
        throw new RleDecodeError('truncated compressed counts string');
      }
      if (!more && code & 0x10) {
        x |= -1 << (5 * k);
      }
    }
    if (counts.length > 2) {
      x += counts[counts.length - 2];
    }
    if (x < 0) {
      throw new RleDecodeError(`negative run length ${x}`);
    }
    counts.push(x);
  }
  return counts;
}

export function compressCounts(counts: number[]): string {
  const out: string[] = [];
  for (let i = 0; i < counts.length; i++) {
    let x = counts[i];
    if (i > 2) {
      x -= counts[i - 2];
    }
    let more = true;
    while (more) {
      let chunk = x & 0x1f;
      x >>= 5;
      more = chunk & 0x10 ? x !== -1 : x !== 0;
      if (more) {
        chunk |= 0x20;
      }
      out.push(String.fromCharCode(chunk + CHAR_LO));
    }
  }
  return out.join('');
}

export function decodeRle(rle: RleJson): Mask {
  const [height, width] = rle.size;
  if (!Number.isInteger(height) || !Number.isInteger(width) || height < 1 || width < 1) {
    throw new RleDecodeError(`invalid RLE size ${JSON.stringify(rle.size)}`);
  }
  const counts = typeof rle.counts === 'string' ? expandCounts(rle.counts) : rle.counts;
  const data = new Uint8Array(height * width);
  let offset = 0;
  for (let i = 0; i < counts.length; i++) {
    const run = counts[i];
    if (!Number.isInteger(run) || run < 0) {
      throw new RleDecodeError(`bad run length ${run}`);
    }
    if (i % 2 === 1) {
      data.fill(1, offset, offset + run);
    }
    offset += run;
  }
  if (offset !== height * width) {
    throw new RleDecodeError(
      `run lengths sum to ${offset}, expected ${height}x${width}=${height * width}`,
    );
  }
  return { height, width, data };
}

export function encodeRle(mask: Mask): RleJson {
  const counts: number[] = [];
  let current = 0;
  let run = 0;
  for (const bit of mask.data) {
    const value = bit ? 1 : 0;
    if (value === current) {
      run += 1;
    } else {
      counts.push(run);
      current = value;
      run = 1;
    }
  }
  counts.push(run);
  return { size: [mask.height, mask.width], counts };
}

export function unionInto(target: Mask, other: Mask): void {
  for (let i = 0; i < target.data.length; i++) {
    if (other.data[i]) {
      target.data[i] = 1;
    }
  }
}
