// Webcam capture path. Pose detection runs client-side so the server
// only ever sees keypoints; the detector itself is pluggable because
// shipping a model is out of scope here. An integrator assigns
// `window.isoformPoseDetector` (e.g. a MediaPipe or MoveNet adapter)
// and everything downstream works; without one, webcam mode reports
// itself unavailable and replay mode still works.

import type { Keypoint } from './protocol.js'
import { COCO17_JOINTS } from './skeleton.js'

export interface NamedKeypoint {
  name: string
  x: number
  y: number
  score?: number
}

export interface PoseDetector {
  detect(video: HTMLVideoElement, timeMs: number): Promise<NamedKeypoint[]>
}

declare global {
  interface Window {
    isoformPoseDetector?: PoseDetector
  }
}

export function installedDetector(): PoseDetector | null {
  return typeof window !== 'undefined' && window.isoformPoseDetector
    ? window.isoformPoseDetector
    : null
}

/** Map named detector output onto the profile's joint order. Joints the
 *  detector did not report get confidence 0; extra joints are dropped. */
export function mapToProfile(
  named: NamedKeypoint[],
  joints: readonly string[] = COCO17_JOINTS,
): Keypoint[] {
  const byName = new Map(named.map((k) => [k.name, k]))
  return joints.map((name) => {
    const k = byName.get(name)
    return k ? [k.x, k.y, k.score ?? 1] : [0, 0, 0]
  })
}

export interface WebcamCapture {
  stop(): void
}

export async function startWebcam(
  video: HTMLVideoElement,
  onFrame: (timeMs: number, kp: Keypoint[]) => void,
  maxFps = 30,
): Promise<WebcamCapture | null> {
  const detector = installedDetector()
  if (!detector || !navigator.mediaDevices?.getUserMedia) return null

  const stream = await navigator.mediaDevices.getUserMedia({ video: true })
  video.srcObject = stream
  await video.play()

  let running = true
  let lastSent = -Infinity
  const minGap = 1000 / maxFps - 1e-6
  const started = performance.now()

  const tick = async () => {
    if (!running) return
    const now = performance.now()
    if (now - lastSent >= minGap) {
      lastSent = now
      const named = await detector.detect(video, now)
      if (running && named.length > 0) onFrame(now - started, mapToProfile(named))
    }
    requestAnimationFrame(tick)
  }
  requestAnimationFrame(tick)

  return {
    stop() {
      running = false
      for (const track of stream.getTracks()) track.stop()
      video.srcObject = null
    },
  }
}
