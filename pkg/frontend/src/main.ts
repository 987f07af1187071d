// Entry point: wires the websocket, the replay/webcam sources, and the
// DOM together. All state lives in UiSession; this file only moves
// messages and repaints.

import { parsePoseCsv, type ReplayFrame } from './csv.js'
import { drawSkeleton, violatedJoints } from './overlay.js'
import {
  endMessage,
  frameMessage,
  helloMessage,
  parseServerMessage,
  startMessage,
  type Keypoint,
} from './protocol.js'
import { runReplay, type ReplayController } from './replay.js'
import {
  applyServerMessage,
  createUiSession,
  dismissReport,
  noteFrameSent,
} from './session.js'
import { feedHtml, repCardHtml, reportHtml, statusHtml } from './view.js'
import { startWebcam, type WebcamCapture } from './webcam.js'

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T

const addressInput = $<HTMLInputElement>('address')
const connectButton = $<HTMLButtonElement>('connect')
const exerciseSelect = $<HTMLSelectElement>('exercise')
const startButton = $<HTMLButtonElement>('start')
const endButton = $<HTMLButtonElement>('end')
const pauseButton = $<HTMLButtonElement>('pause')
const csvInput = $<HTMLInputElement>('csv')
const webcamButton = $<HTMLButtonElement>('webcam')
const statusLine = $<HTMLElement>('status')
const feedBox = $<HTMLElement>('feed')
const reportBox = $<HTMLElement>('report')
const reportBody = $<HTMLElement>('report-body')
const dismissButton = $<HTMLButtonElement>('dismiss')
const canvas = $<HTMLCanvasElement>('overlay')
const video = $<HTMLVideoElement>('camera')
const ctx = canvas.getContext('2d')!

const session = createUiSession()
let socket: WebSocket | null = null
let replay: ReplayController | null = null
let webcam: WebcamCapture | null = null
let renderedReps = 0
let paused = false

function setStatus(text: string, isError = false): void {
  statusLine.innerHTML = statusHtml(text, isError)
}

function render(): void {
  if (session.repFeed.length < renderedReps) {
    feedBox.innerHTML = feedHtml(session.repFeed)
    renderedReps = session.repFeed.length
  }
  while (renderedReps < session.repFeed.length) {
    feedBox.insertAdjacentHTML('beforeend', repCardHtml(session.repFeed[renderedReps]!))
    renderedReps += 1
  }
  const latest = session.repFeed[session.repFeed.length - 1]
  if (latest && lastPose) drawSkeleton(ctx, lastPose, violatedJoints(latest.violations))

  if (session.report && !session.reportDismissed) {
    reportBody.innerHTML = reportHtml(session.report)
    reportBox.hidden = false
  } else {
    reportBox.hidden = true
  }

  if (session.error) {
    setStatus(`server error: ${session.error.code} ${session.error.detail ?? ''}`, true)
  }

  if (exerciseSelect.length !== session.exercises.length) {
    exerciseSelect.innerHTML = session.exercises
      .map((name) => `<option value="${name}">${name}</option>`)
      .join('')
  }
  startButton.disabled = session.phase === 'idle'
}

let lastPose: Keypoint[] | null = null

function sendFrame(timeMs: number, kp: Keypoint[]): void {
  if (!socket || socket.readyState !== WebSocket.OPEN) return
  socket.send(frameMessage(timeMs, kp))
  noteFrameSent(session)
  lastPose = kp
  const latest = session.repFeed[session.repFeed.length - 1]
  drawSkeleton(ctx, kp, latest ? violatedJoints(latest.violations) : new Set())
}

function connect(): void {
  const address = addressInput.value.trim() || 'ws://127.0.0.1:8700/ws'
  setStatus(`connecting to ${address}...`)
  connectButton.disabled = true
  const ws = new WebSocket(address)
  socket = ws
  ws.onopen = () => {
    setStatus('connected')
    ws.send(helloMessage())
  }
  ws.onmessage = (event) => {
    try {
      applyServerMessage(session, parseServerMessage(String(event.data)))
    } catch (error) {
      setStatus(String(error), true)
      return
    }
    render()
  }
  ws.onclose = () => {
    setStatus('disconnected — press connect to retry', true)
    connectButton.disabled = false
    socket = null
  }
  ws.onerror = () => {
    setStatus('connection failed — check the address and retry', true)
    connectButton.disabled = false
  }
}

function stopSources(): void {
  replay?.cancel()
  replay = null
  webcam?.stop()
  webcam = null
  paused = false
  pauseButton.textContent = 'Pause'
}

connectButton.onclick = connect

startButton.onclick = () => {
  stopSources()
  socket?.send(startMessage(exerciseSelect.value))
}

endButton.onclick = () => {
  stopSources()
  socket?.send(endMessage())
}

pauseButton.onclick = () => {
  if (!replay) return
  paused = !paused
  if (paused) replay.pause()
  else replay.resume()
  pauseButton.textContent = paused ? 'Resume' : 'Pause'
}

csvInput.onchange = async () => {
  const file = csvInput.files?.[0]
  if (!file) return
  let frames: ReplayFrame[]
  try {
    frames = parsePoseCsv(await file.text())
  } catch (error) {
    setStatus(String(error), true)
    return
  }
  stopSources()
  setStatus(`replaying ${file.name} (${frames.length} frames)`)
  replay = runReplay(frames, (frame) => sendFrame(frame.timeMs, frame.kp))
  await replay.done
  if (replay) setStatus('replay finished — press end for the report')
}

webcamButton.onclick = async () => {
  stopSources()
  webcam = await startWebcam(video, sendFrame)
  if (!webcam) {
    setStatus('webcam unavailable: no pose detector installed (see README) — use CSV replay', true)
  } else {
    setStatus('webcam running')
  }
}

dismissButton.onclick = () => {
  dismissReport(session)
  render()
}

window.addEventListener('beforeunload', () => {
  if (socket?.readyState === WebSocket.OPEN) socket.send(endMessage())
})

setStatus('not connected')
