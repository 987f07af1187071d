// Wire types for the feedback-service websocket protocol, mirrored
// field for field. One keypoint is [x, y, confidence] in normalized
// image coordinates.

export type Keypoint = [number, number, number]

export interface Violation {
  triplet: string
  deviation: number
  limit: number
}

export interface HelloMsg {
  t: 'hello'
  exercises: string[]
  version: string
}

export interface AckMsg {
  t: 'ack'
  session: string
  exercise: string
  classes: string[]
}

export interface RepMsg {
  t: 'rep'
  idx: number
  verdict: string
  probs: number[]
  violations: Violation[]
  latency_ms: number
  start_ms: number
  end_ms: number
}

export interface ReportMsg {
  t: 'report'
  exercise: string
  reps: number
  totals: Record<string, number>
  dominant_mistake: string | null
  mean_deviation: Record<string, number>
  uncertain_percent: number
  dropped_frames: number
  timeline: Omit<RepMsg, 't'>[]
}

export interface ErrMsg {
  t: 'err'
  code: string
  detail?: string
}

export type ServerMessage = HelloMsg | AckMsg | RepMsg | ReportMsg | ErrMsg

export function helloMessage(): string {
  return JSON.stringify({ t: 'hello' })
}

export function startMessage(exercise: string, profile?: string): string {
  return JSON.stringify(profile ? { t: 'start', exercise, profile } : { t: 'start', exercise })
}

export function frameMessage(timeMs: number, kp: Keypoint[]): string {
  return JSON.stringify({ t: 'frame', time_ms: timeMs, kp })
}

export function endMessage(): string {
  return JSON.stringify({ t: 'end' })
}

function need(cond: boolean, what: string): asserts cond {
  if (!cond) throw new Error(`malformed server message: ${what}`)
}

/** Parse and minimally validate one server frame. Throws on anything
 *  that is not a known, well-shaped message. */
export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown
  try {
    data = JSON.parse(raw)
  } catch {
    throw new Error('malformed server message: not JSON')
  }
  need(typeof data === 'object' && data !== null, 'not an object')
  const msg = data as Record<string, unknown>
  switch (msg.t) {
    case 'hello':
      need(Array.isArray(msg.exercises), 'hello.exercises')
      need(typeof msg.version === 'string', 'hello.version')
      return msg as unknown as HelloMsg
    case 'ack':
      need(typeof msg.session === 'string', 'ack.session')
      need(typeof msg.exercise === 'string', 'ack.exercise')
      need(Array.isArray(msg.classes), 'ack.classes')
      return msg as unknown as AckMsg
    case 'rep':
      need(typeof msg.idx === 'number', 'rep.idx')
      need(typeof msg.verdict === 'string', 'rep.verdict')
      need(Array.isArray(msg.probs), 'rep.probs')
      need(Array.isArray(msg.violations), 'rep.violations')
      return msg as unknown as RepMsg
    case 'report':
      need(typeof msg.reps === 'number', 'report.reps')
      need(typeof msg.totals === 'object' && msg.totals !== null, 'report.totals')
      need(Array.isArray(msg.timeline), 'report.timeline')
      return msg as unknown as ReportMsg
    case 'err':
      need(typeof msg.code === 'string', 'err.code')
      return msg as unknown as ErrMsg
    default:
      throw new Error(`malformed server message: unknown t ${JSON.stringify(msg.t)}`)
  }
}
