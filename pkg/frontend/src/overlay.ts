// Skeleton overlay: draws the latest pose on a canvas and flags the
// joints involved in the current rep's violated angles.

import type { Keypoint, Violation } from './protocol.js'
import { EDGES, TRIPLET_JOINTS, jointIndex } from './skeleton.js'

const MIN_CONFIDENCE = 0.3

/** Joints to highlight for a set of violations: every joint of every
 *  violated triplet. Unknown labels are ignored. */
export function violatedJoints(violations: Violation[]): Set<string> {
  const joints = new Set<string>()
  for (const violation of violations) {
    const triplet = TRIPLET_JOINTS[violation.triplet]
    if (!triplet) continue
    for (const joint of triplet) joints.add(joint)
  }
  return joints
}

/** Edges drawn in the highlight color: both endpoints must belong to a
 *  violated triplet. */
export function highlightEdges(highlight: Set<string>): [string, string][] {
  return EDGES.filter(([a, b]) => highlight.has(a) && highlight.has(b))
}

export function drawSkeleton(
  ctx: CanvasRenderingContext2D,
  kp: Keypoint[],
  highlight: Set<string> = new Set(),
): void {
  const w = ctx.canvas.width
  const h = ctx.canvas.height
  ctx.clearRect(0, 0, w, h)
  ctx.save()
  ctx.lineWidth = 3

  const visible = (i: number) => i >= 0 && i < kp.length && kp[i]![2] >= MIN_CONFIDENCE
  const hot = highlightEdges(highlight)

  for (const [a, b] of EDGES) {
    const ia = jointIndex(a)
    const ib = jointIndex(b)
    if (!visible(ia) || !visible(ib)) continue
    const isHot = hot.some(([ha, hb]) => ha === a && hb === b)
    ctx.strokeStyle = isHot ? 'rgba(255,80,80,0.95)' : 'rgba(120,220,150,0.9)'
    ctx.beginPath()
    ctx.moveTo(kp[ia]![0] * w, kp[ia]![1] * h)
    ctx.lineTo(kp[ib]![0] * w, kp[ib]![1] * h)
    ctx.stroke()
  }

  for (let i = 0; i < kp.length; i++) {
    if (!visible(i)) continue
    ctx.fillStyle = 'rgba(120,220,150,0.9)'
    ctx.beginPath()
    ctx.arc(kp[i]![0] * w, kp[i]![1] * h, 4, 0, Math.PI * 2)
    ctx.fill()
  }

  for (const joint of highlight) {
    const i = jointIndex(joint)
    if (!visible(i)) continue
    ctx.fillStyle = 'rgba(255,80,80,0.95)'
    ctx.beginPath()
    ctx.arc(kp[i]![0] * w, kp[i]![1] * h, 6, 0, Math.PI * 2)
    ctx.fill()
  }

  ctx.restore()
}
