// Pose CSV reader for replay mode. A clip holds one header row
// `frame,time_ms,j0_x,j0_y,j0_c,...` followed by one row per frame;
// the joint count comes from the header width.

import type { Keypoint } from './protocol.js'

export interface ReplayFrame {
  timeMs: number
  kp: Keypoint[]
}

export function parsePoseCsv(text: string): ReplayFrame[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0)
  if (lines.length < 2) throw new Error('pose csv: no frames')

  const header = lines[0]!.split(',')
  if (header[0] !== 'frame' || header[1] !== 'time_ms' || (header.length - 2) % 3 !== 0) {
    throw new Error('pose csv: unrecognized header')
  }
  const jointCount = (header.length - 2) / 3
  for (let j = 0; j < jointCount; j++) {
    const base = 2 + 3 * j
    if (header[base] !== `j${j}_x` || header[base + 1] !== `j${j}_y` || header[base + 2] !== `j${j}_c`) {
      throw new Error(`pose csv: unexpected column names for joint ${j}`)
    }
  }

  const frames: ReplayFrame[] = []
  for (let row = 1; row < lines.length; row++) {
    const cells = lines[row]!.split(',')
    if (cells.length !== header.length) {
      throw new Error(`pose csv: row ${row} has ${cells.length} columns, expected ${header.length}`)
    }
    const values = cells.map(Number)
    if (values.some(Number.isNaN)) throw new Error(`pose csv: row ${row} is not numeric`)
    const kp: Keypoint[] = []
    for (let j = 0; j < jointCount; j++) {
      const base = 2 + 3 * j
      kp.push([values[base]!, values[base + 1]!, values[base + 2]!])
    }
    frames.push({ timeMs: values[1]!, kp })
  }
  return frames
}
