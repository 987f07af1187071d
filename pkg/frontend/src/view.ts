// Pure HTML builders for the rep feed, status line, and session report.
// Keeping these string-in string-out makes the render path trivially
// testable and keeps all formatting decisions in one place.

import type { RepMsg, ReportMsg } from './protocol.js'

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
}

export function humanize(label: string): string {
  return label.replace(/_/g, ' ')
}

export type VerdictKind = 'correct' | 'uncertain' | 'mistake'

export function verdictKind(verdict: string): VerdictKind {
  if (verdict === 'correct') return 'correct'
  if (verdict === 'uncertain') return 'uncertain'
  return 'mistake'
}

function confidencePercent(rep: RepMsg): string {
  const top = Math.max(...rep.probs)
  return `${Math.round(top * 100)}%`
}

/** One rep card. Uncertain verdicts get a neutral prompt and never name
 *  a mistake; mistake verdicts name it and list the violated angles. */
export function repCardHtml(rep: RepMsg): string {
  const kind = verdictKind(rep.verdict)
  let body: string
  if (kind === 'correct') {
    body = `<span class="verdict">Correct</span> <span class="conf">${confidencePercent(rep)}</span>`
  } else if (kind === 'uncertain') {
    body = '<span class="verdict">Check your form</span>'
  } else {
    const violations = rep.violations
      .map(
        (v) =>
          `<li>${escapeHtml(humanize(v.triplet))}: ${v.deviation.toFixed(1)}&deg; off (limit ${v.limit.toFixed(1)}&deg;)</li>`,
      )
      .join('')
    body =
      `<span class="verdict">${escapeHtml(humanize(rep.verdict))}</span> ` +
      `<span class="conf">${confidencePercent(rep)}</span>` +
      (violations ? `<ul class="violations">${violations}</ul>` : '')
  }
  return `<div class="card ${kind}" data-rep="${rep.idx}"><span class="idx">#${rep.idx + 1}</span> ${body}</div>`
}

export function feedHtml(feed: RepMsg[]): string {
  return feed.map(repCardHtml).join('')
}

export function reportHtml(report: ReportMsg): string {
  const totals = Object.entries(report.totals)
    .map(([label, count]) => `<tr><td>${escapeHtml(humanize(label))}</td><td>${count}</td></tr>`)
    .join('')
  const deviations = Object.entries(report.mean_deviation)
    .map(
      ([label, deg]) =>
        `<li>${escapeHtml(humanize(label))}: ${deg >= 0 ? '+' : ''}${deg.toFixed(1)}&deg;</li>`,
    )
    .join('')
  const dominant = report.dominant_mistake
    ? `Most frequent mistake: <b>${escapeHtml(humanize(report.dominant_mistake))}</b>`
    : 'No mistakes detected'
  return (
    `<h2>${escapeHtml(report.exercise)} session</h2>` +
    `<p>${report.reps} reps, ${report.uncertain_percent.toFixed(1)}% uncertain, ` +
    `${report.dropped_frames} dropped frames</p>` +
    `<p>${dominant}</p>` +
    `<table class="totals">${totals}</table>` +
    (deviations ? `<ul class="deviations">${deviations}</ul>` : '')
  )
}

export function statusHtml(text: string, isError = false): string {
  return `<span class="${isError ? 'status error' : 'status'}">${escapeHtml(text)}</span>`
}
