/**
 * Read-only view of a benchmark-layout dataset, just enough for echoing
 * ground truth: frame order per video, expression -> annotation ids, and
 * per-frame RLE tracks.
 *
 * Layout: <root>/<split>/meta_expressions.json and
 * <root>/<split>/mask_dict.json; frames live under JPEGImages but are
 * never pixel-read here.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { Mask, RleJson, decodeRle, emptyMask, unionInto } from './rle.js';

interface MetaExpression {
  exp: string;
  anno_id: (string | number)[];
}

interface MetaVideo {
  frames: string[];
  expressions: Record<string, MetaExpression>;
}

export class DatasetError extends Error {}

export class GroundTruthStore {
  private readonly videos: Record<string, MetaVideo>;
  private readonly tracks: Record<string, (RleJson | null)[]>;

  constructor(root: string, split: string) {
    const metaPath = path.join(root, split, 'meta_expressions.json');
    const maskPath = path.join(root, split, 'mask_dict.json');
    for (const file of [metaPath, maskPath]) {
      if (!fs.existsSync(file)) {
        throw new DatasetError(`required file not found: ${file}`);
      }
    }
    const meta = JSON.parse(fs.readFileSync(metaPath, 'utf8'));
    if (typeof meta !== 'object' || meta === null || typeof meta.videos !== 'object') {
      throw new DatasetError(`${metaPath}: expected a top-level 'videos' mapping`);
    }
    this.videos = meta.videos as Record<string, MetaVideo>;
    this.tracks = JSON.parse(fs.readFileSync(maskPath, 'utf8'));
  }

  frameIndex(videoId: string, framePath: string): number {
    const video = this.videos[videoId];
    if (!video) {
      throw new DatasetError(`video ${videoId} not in dataset`);
    }
    const base = path.basename(framePath);
    const stem = base.includes('.') ? base.slice(0, base.lastIndexOf('.')) : base;
    const index = video.frames.indexOf(stem);
    if (index < 0) {
      throw new DatasetError(`frame ${stem} not in video ${videoId}`);
    }
    return index;
  }

  /** Union of every referenced object's mask at one frame. */
  unionMask(videoId: string, expId: string, frameIdx: number): Mask {
    const video = this.videos[videoId];
    if (!video) {
      throw new DatasetError(`video ${videoId} not in dataset`);
    }
    const expression = video.expressions[expId];
    if (!expression) {
      throw new DatasetError(`expression ${expId} not in video ${videoId}`);
    }
    let combined: Mask | null = null;
    for (const rawId of expression.anno_id) {
      const annoId = String(rawId);
      const track = this.tracks[annoId];
      if (!track) {
        throw new DatasetError(`annotation ${annoId} not in mask dictionary`);
      }
      const rle = track[frameIdx];
      if (rle === null || rle === undefined) {
        continue;
      }
      const mask = decodeRle(rle);
      if (combined === null) {
        combined = mask;
      } else {
        unionInto(combined, mask);
      }
    }
    if (combined !== null) {
      return combined;
    }
    // every object absent: fall back to the first declared size in the track
    const size = this.videoSize(videoId);
    return emptyMask(size[0], size[1]);
  }

  videoSize(videoId: string): [number, number] {
    const video = this.videos[videoId];
    if (!video) {
      throw new DatasetError(`video ${videoId} not in dataset`);
    }
    for (const expression of Object.values(video.expressions)) {
      for (const rawId of expression.anno_id) {
        const track = this.tracks[String(rawId)];
        for (const rle of track ?? []) {
          if (rle !== null && rle !== undefined) {
            return [rle.size[0], rle.size[1]];
          }
        }
      }
    }
    throw new DatasetError(`video ${videoId} has no non-null annotation mask`);
  }
}
