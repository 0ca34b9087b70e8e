// HTML-string renderers for the results grid, status line, and error
// banner. Pure string builders: the grid shows results exactly in response
// order (the server already ranked them), similarity up front, and the raw
// distance (plus interval bounds when present) in the hover tooltip.

import type { QueryResponse, QueryResult } from "./api.js";
import { thumbUrl } from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function tooltip(result: QueryResult): string {
  const parts = [`distance ${result.value.toPrecision(9)}`];
  if (result.upper !== null && result.lower !== null) {
    parts.push(`upper ${result.upper.toPrecision(9)}`);
    parts.push(`lower ${result.lower.toPrecision(9)}`);
  }
  parts.push(`${result.classes} tolerance classes`);
  return parts.join(", ");
}

function resultCard(result: QueryResult): string {
  const id = escapeHtml(result.image_id);
  const similarity = (result.similarity * 100).toFixed(1);
  const category = result.category === null
    ? ""
    : `<span class="badge category">${escapeHtml(String(result.category))}</span>`;
  const approx = result.budget_exceeded
    ? `<span class="badge approx" title="search budget hit; score is approximate">approx</span>`
    : "";
  return [
    `<button type="button" class="thumb" data-image-id="${id}"`,
    ` title="${escapeHtml(tooltip(result))}"`,
    ` aria-label="query from image ${id}">`,
    `<img src="${thumbUrl(result.image_id)}" alt="image ${id}" loading="lazy">`,
    `<span class="meta">`,
    `<span class="rank">#${result.rank}</span>`,
    `<span class="similarity">${similarity}%</span>`,
    category,
    approx,
    `</span>`,
    `</button>`,
  ].join("");
}

export function renderGrid(response: QueryResponse | null): string {
  if (response === null) {
    return `<p class="empty">Pick a query image and press Search.</p>`;
  }
  if (response.results.length === 0) {
    return `<p class="empty">No results for query ${escapeHtml(response.query_id)}.</p>`;
  }
  return response.results.map(resultCard).join("\n");
}

export function renderStatus(response: QueryResponse | null): string {
  if (response === null) {
    return "";
  }
  const spread = response.spread === null
    ? "index spread"
    : `spread ${response.spread}`;
  return escapeHtml(
    `${response.results.length} results for query ${response.query_id} `
    + `(${response.measure}, ε ${response.epsilon}, `
    + `ε′ ${response.epsilon_prime}, ${spread}) `
    + `in ${response.elapsed_ms.toFixed(0)} ms`,
  );
}

export function renderBanner(error: string | null): string {
  if (error === null) {
    return "";
  }
  return [
    `<span role="alert">${escapeHtml(error)}</span>`,
    `<button type="button" class="dismiss" aria-label="dismiss error">×</button>`,
  ].join("");
}
