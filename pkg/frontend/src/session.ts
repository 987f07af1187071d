// Client-side session state. Messages are applied in arrival order on
// the UI thread; the rep feed is append-only so cards can never reorder
// relative to server emission.

import type { AckMsg, ErrMsg, RepMsg, ReportMsg, ServerMessage } from './protocol.js'

export type Phase = 'idle' | 'ready' | 'running' | 'ended'

export interface UiSession {
  phase: Phase
  exercises: string[]
  serverVersion: string
  exercise: string | null
  classes: string[]
  sessionId: string | null
  repFeed: RepMsg[]
  report: ReportMsg | null
  reportDismissed: boolean
  error: ErrMsg | null
  framesSent: number
}

export function createUiSession(): UiSession {
  return {
    phase: 'idle',
    exercises: [],
    serverVersion: '',
    exercise: null,
    classes: [],
    sessionId: null,
    repFeed: [],
    report: null,
    reportDismissed: false,
    error: null,
    framesSent: 0,
  }
}

function startSession(session: UiSession, ack: AckMsg): void {
  session.exercise = ack.exercise
  session.classes = ack.classes
  session.sessionId = ack.session
  session.repFeed = []
  session.report = null
  session.reportDismissed = false
  session.error = null
  session.framesSent = 0
  session.phase = 'running'
}

export function applyServerMessage(session: UiSession, msg: ServerMessage): void {
  switch (msg.t) {
    case 'hello':
      session.exercises = msg.exercises
      session.serverVersion = msg.version
      if (session.phase === 'idle') session.phase = 'ready'
      break
    case 'ack':
      startSession(session, msg)
      break
    case 'rep':
      session.repFeed.push(msg)
      break
    case 'report':
      session.report = msg
      session.reportDismissed = false
      session.phase = 'ended'
      break
    case 'err':
      session.error = msg
      break
  }
}

export function dismissReport(session: UiSession): void {
  session.reportDismissed = true
}

export function noteFrameSent(session: UiSession): void {
  session.framesSent += 1
}
