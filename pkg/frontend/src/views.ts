// HTML render functions. Views are pure string builders over server state;
// app.ts owns event wiring.

import type { AssessmentRow, PairDetail, PairSummary } from './types';

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function verdictBadge(verdict: string | null, kind: 'ai' | 'human'): string {
  if (!verdict) return '';
  const cls = `badge badge-${verdict.toLowerCase()} badge-${kind}`;
  const label = kind === 'human' ? `Reviewer: ${verdict}` : verdict;
  return `<span class="${cls}">${escapeHtml(label)}</span>`;
}

export function renderPairList(pairs: PairSummary[]): string {
  if (pairs.length === 0) {
    return '<p class="empty">No assessed patient-trial pairs yet.</p>';
  }
  const rows = pairs
    .map(
      (pair) => `
    <tr class="pair-row" data-patient="${escapeHtml(pair.patient_id)}"
        data-trial="${escapeHtml(pair.trial_id)}" tabindex="0">
      <td>${escapeHtml(pair.patient_id)}</td>
      <td>${escapeHtml(pair.trial_title)}</td>
      <td>${pair.reviewed}/${pair.criteria}</td>
      <td>${pair.pending}</td>
      <td>${pair.classification ? escapeHtml(pair.classification) : '—'}</td>
    </tr>`,
    )
    .join('');
  return `
  <h2>Patients to review</h2>
  <table class="pairs">
    <thead><tr><th>Patient</th><th>Trial</th><th>Reviewed</th><th>Pending</th><th>Decision</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

function renderAssessmentRow(row: AssessmentRow, selected: boolean): string {
  const thumbs = row.page_image_urls
    .map(
      (url, index) => `
      <button class="thumb" data-criterion="${escapeHtml(row.criterion_id)}"
              data-page-index="${index}" title="source page ${index + 1}">p${index + 1}</button>`,
    )
    .join('');
  const failure = row.failed
    ? `<div class="failure">assessment failed: ${escapeHtml(row.error ?? 'unknown error')}</div>`
    : '';
  return `
  <article class="criterion ${selected ? 'selected' : ''}" data-criterion="${escapeHtml(row.criterion_id)}" tabindex="0">
    <header>
      ${verdictBadge(row.verdict, 'ai')}
      ${verdictBadge(row.human_verdict, 'human')}
      <span class="kind">${escapeHtml(row.criterion_kind ?? '')}</span>
      <span class="description">${escapeHtml(row.criterion_description || row.criterion_id)}</span>
    </header>
    ${failure}
    <details class="rationale"><summary>Rationale</summary><p>${escapeHtml(row.rationale)}</p></details>
    <div class="sources">${thumbs}</div>
    <div class="actions">
      <button class="review" data-criterion="${escapeHtml(row.criterion_id)}" data-verdict="Met">Met</button>
      <button class="review" data-criterion="${escapeHtml(row.criterion_id)}" data-verdict="Unmet">Unmet</button>
      <button class="review" data-criterion="${escapeHtml(row.criterion_id)}" data-verdict="Unknown">Unknown</button>
      <button class="confirm" data-criterion="${escapeHtml(row.criterion_id)}"
              data-verdict="${escapeHtml(row.verdict)}">Confirm AI</button>
    </div>
  </article>`;
}

export function renderPairDetail(detail: PairDetail, selectedCriterion: string | null): string {
  const relevance = detail.relevance
    ? `<p class="relevance">Relevance: ${detail.relevance.relevant ? 'relevant' : 'not relevant'}
       — ${escapeHtml(detail.relevance.rationale)}</p>`
    : '';
  const rows = detail.assessments
    .map((row) => renderAssessmentRow(row, row.criterion_id === selectedCriterion))
    .join('');
  const classification = detail.classification
    ? `current decision: <strong>${escapeHtml(detail.classification)}</strong>`
    : 'no decision yet';
  return `
  <button id="back">&larr; All patients</button>
  <h2>${escapeHtml(detail.patient_id)} × ${escapeHtml(detail.trial_id)}</h2>
  ${relevance}
  <section class="criteria">${rows}</section>
  <footer class="classify">
    <span>${classification}</span>
    <button id="classify-screen" data-label="ToScreen">To screen (s)</button>
    <button id="classify-noteligible" data-label="NotEligible">Not eligible (n)</button>
  </footer>
  <div id="viewer" class="viewer hidden">
    <button id="viewer-close">close</button>
    <button id="viewer-prev">&larr;</button>
    <img id="viewer-img" alt="source page" />
    <button id="viewer-next">&rarr;</button>
    <span id="viewer-caption"></span>
  </div>`;
}

export function renderError(message: string): string {
  return `
  <div class="error-banner">
    <span>${escapeHtml(message)}</span>
    <button id="retry">Retry</button>
  </div>`;
}

export function renderLoading(): string {
  return '<p class="loading">Loading...</p>';
}
