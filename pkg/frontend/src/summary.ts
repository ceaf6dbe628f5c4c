/** Summary pane: thumbnail cards for the records the current context selects.
 *
 * Shared beneath every view. Optionally overlays each thumbnail's changed
 * regions as a partially transparent layer (on by default).
 */

import { ApiClient, CaptureRecord } from './api.js';
import { CONTENT_COLORS } from './colors.js';

export interface SummaryCallbacks {
  onOpenDetail(recordId: string): void;
  onToggleOverlay(enabled: boolean): void;
}

function formatWhen(ts: number): string {
  return new Date(ts).toISOString().replace('T', ' ').slice(0, 16) + ' UTC';
}

async function paintChangeOverlay(api: ApiClient, record: CaptureRecord, holder: HTMLElement) {
  try {
    const grids = await api.grids(record.id);
    const overlay = document.createElement('div');
    overlay.className = 'change-overlay';
    overlay.style.position = 'absolute';
    overlay.style.inset = '0';
    const cols = grids.coarse[0]?.length ?? 0;
    const rows = grids.coarse.length;
    for (let r = 0; r < rows; r++) {
      for (let c = 0; c < cols; c++) {
        if (grids.coarse[r][c] <= 0.05) continue;
        const mark = document.createElement('div');
        mark.className = 'changed-cell';
        mark.style.position = 'absolute';
        mark.style.left = `${(c / cols) * 100}%`;
        mark.style.top = `${(r / rows) * 100}%`;
        mark.style.width = `${100 / cols}%`;
        mark.style.height = `${100 / rows}%`;
        mark.style.background = 'rgba(244,121,72,0.35)';
        overlay.appendChild(mark);
      }
    }
    holder.appendChild(overlay);
  } catch {
    // overlay is cosmetic; ignore fetch failures
  }
}

export function renderSummary(
  records: CaptureRecord[],
  api: ApiClient,
  overlayEnabled: boolean,
  callbacks: SummaryCallbacks,
): HTMLElement {
  const root = document.createElement('div');
  root.className = 'summary';

  const header = document.createElement('div');
  header.className = 'summary-header';
  const count = document.createElement('span');
  count.textContent = `${records.length} capture${records.length === 1 ? '' : 's'}`;
  header.appendChild(count);
  const overlayLabel = document.createElement('label');
  const overlayBox = document.createElement('input');
  overlayBox.type = 'checkbox';
  overlayBox.checked = overlayEnabled;
  overlayBox.className = 'overlay-toggle';
  overlayBox.addEventListener('change', () => callbacks.onToggleOverlay(overlayBox.checked));
  overlayLabel.append(overlayBox, ' highlight changed regions');
  header.appendChild(overlayLabel);
  root.appendChild(header);

  const pane = document.createElement('div');
  pane.className = 'summary-cards';
  root.appendChild(pane);

  for (const record of records) {
    const card = document.createElement('div');
    card.className = 'card';
    card.dataset.recordId = record.id;

    const thumbHolder = document.createElement('div');
    thumbHolder.className = 'thumb-holder';
    thumbHolder.style.position = 'relative';
    const img = document.createElement('img');
    img.src = api.thumbUrl(record.id);
    img.alt = record.label || 'captured board';
    thumbHolder.appendChild(img);
    if (overlayEnabled && record.changed_cell_count > 0) {
      void paintChangeOverlay(api, record, thumbHolder);
    }
    card.appendChild(thumbHolder);

    const meta = document.createElement('div');
    meta.className = 'card-meta';
    const badge = document.createElement('span');
    badge.className = `badge badge-${record.content_type}`;
    badge.textContent = record.content_type;
    badge.style.background = CONTENT_COLORS[record.content_type] ?? '#888';
    meta.appendChild(badge);
    if (record.shared_with.length) {
      const sharedBadge = document.createElement('span');
      sharedBadge.className = 'badge badge-shared';
      sharedBadge.style.background = CONTENT_COLORS.shared;
      sharedBadge.textContent = `shared with ${record.shared_with.join(', ')}`;
      meta.appendChild(sharedBadge);
    }
    const when = document.createElement('div');
    when.className = 'when';
    when.textContent = formatWhen(record.timestamp_ms);
    meta.appendChild(when);
    const line = document.createElement('div');
    line.className = 'line';
    line.textContent =
      (record.label || '(unlabelled)') +
      (record.contributors.length ? ` — with ${record.contributors.join(', ')}` : '');
    meta.appendChild(line);
    const detailButton = document.createElement('button');
    detailButton.className = 'open-detail';
    detailButton.textContent = 'detail';
    detailButton.addEventListener('click', () => callbacks.onOpenDetail(record.id));
    meta.appendChild(detailButton);
    card.appendChild(meta);
    pane.appendChild(card);
  }
  return root;
}
