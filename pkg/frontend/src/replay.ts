// Replay pacing: frames are scheduled by their recorded time_ms and
// downsampled to a frame-rate cap, matching what a live capture source
// is allowed to send.

import type { ReplayFrame } from './csv.js'

export interface PacedFrame extends ReplayFrame {
  /** When to send, in ms relative to the start of the replay. */
  atMs: number
}

/** Drop frames that exceed maxFps and schedule the rest by time_ms. */
export function pace(frames: ReplayFrame[], maxFps = 30): PacedFrame[] {
  if (frames.length === 0) return []
  const minGap = 1000 / maxFps - 1e-6
  const t0 = frames[0]!.timeMs
  const plan: PacedFrame[] = []
  let lastKept = -Infinity
  for (const frame of frames) {
    if (frame.timeMs - lastKept < minGap) continue
    lastKept = frame.timeMs
    plan.push({ ...frame, atMs: frame.timeMs - t0 })
  }
  return plan
}

export interface ReplayController {
  pause(): void
  resume(): void
  cancel(): void
  done: Promise<void>
}

export interface ReplayOptions {
  maxFps?: number
  /** Injectable for tests; defaults to setTimeout-based sleep. */
  sleep?: (ms: number) => Promise<void>
}

const realSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms))

/** Drive a paced replay through `send`. Pausing stops the clock between
 *  frames; resuming continues with the next frame, never skipping or
 *  reordering. */
export function runReplay(
  frames: ReplayFrame[],
  send: (frame: ReplayFrame) => void,
  options: ReplayOptions = {},
): ReplayController {
  const plan = pace(frames, options.maxFps ?? 30)
  const sleep = options.sleep ?? realSleep
  let cancelled = false
  let gate: Promise<void> = Promise.resolve()
  let openGate: (() => void) | null = null

  const done = (async () => {
    let clock = 0
    for (const frame of plan) {
      await gate
      if (cancelled) return
      if (frame.atMs > clock) {
        await sleep(frame.atMs - clock)
        clock = frame.atMs
      }
      await gate
      if (cancelled) return
      send(frame)
    }
  })()

  return {
    pause() {
      if (openGate) return
      gate = new Promise((resolve) => {
        openGate = resolve
      })
    },
    resume() {
      openGate?.()
      openGate = null
    },
    cancel() {
      cancelled = true
      openGate?.()
      openGate = null
    },
    done,
  }
}
