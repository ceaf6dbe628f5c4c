/** Timeline view: a chronological histogram, one bar per capture.
 *
 * Bar heights are proportional to the stored changed-cell counts. Dragging a
 * horizontal range narrows the filter context's date range.
 */

import { TimelineBar } from './api.js';

const MAX_BAR_PX = 120;
const MIN_TRACK_MS = 60_000;

export interface TimelineCallbacks {
  onSelectRange(startMs: number, endMs: number): void;
  onOpenRecord(recordId: string): void;
}

export function barPixelHeight(height: number, maxHeight: number): number {
  if (maxHeight <= 0) return 2;
  // linear in the data so rendered heights keep the data's ratios
  return Math.max(2, (height / maxHeight) * MAX_BAR_PX);
}

export function renderTimeline(bars: TimelineBar[], callbacks: TimelineCallbacks): HTMLElement {
  const root = document.createElement('div');
  root.className = 'timeline';
  const track = document.createElement('div');
  track.className = 'timeline-track';
  root.appendChild(track);

  if (!bars.length) {
    const empty = document.createElement('p');
    empty.className = 'empty';
    empty.textContent = 'No captures in range.';
    root.appendChild(empty);
    return root;
  }

  const t0 = bars[0].timestamp_ms;
  const t1 = Math.max(bars[bars.length - 1].timestamp_ms, t0 + MIN_TRACK_MS);
  const span = t1 - t0;
  const maxHeight = Math.max(...bars.map((b) => b.height), 1);

  for (const bar of bars) {
    const el = document.createElement('div');
    el.className = 'bar';
    el.dataset.recordId = bar.record_id;
    el.dataset.height = String(bar.height);
    el.style.left = `${((bar.timestamp_ms - t0) / span) * 100}%`;
    el.style.height = `${barPixelHeight(bar.height, maxHeight)}px`;
    el.title = `${new Date(bar.timestamp_ms).toISOString()} — ${bar.height} regions changed`;
    el.addEventListener('click', () => callbacks.onOpenRecord(bar.record_id));
    track.appendChild(el);
  }

  const axis = document.createElement('div');
  axis.className = 'timeline-axis';
  for (const f of [0, 0.25, 0.5, 0.75, 1]) {
    const tick = document.createElement('span');
    tick.textContent = new Date(t0 + f * span).toISOString().slice(0, 10);
    axis.appendChild(tick);
  }
  root.appendChild(axis);

  // click-drag-release range selection over the track
  let dragStartX: number | null = null;
  const highlight = document.createElement('div');
  highlight.className = 'timeline-highlight';
  track.appendChild(highlight);

  const fractionAt = (event: MouseEvent): number => {
    const rect = track.getBoundingClientRect();
    const width = rect.width || 1;
    return Math.min(Math.max((event.clientX - rect.left) / width, 0), 1);
  };

  track.addEventListener('mousedown', (event) => {
    dragStartX = fractionAt(event);
    highlight.style.display = 'block';
  });
  track.addEventListener('mousemove', (event) => {
    if (dragStartX === null) return;
    const here = fractionAt(event);
    const [a, b] = [Math.min(dragStartX, here), Math.max(dragStartX, here)];
    highlight.style.left = `${a * 100}%`;
    highlight.style.width = `${(b - a) * 100}%`;
  });
  track.addEventListener('mouseup', (event) => {
    if (dragStartX === null) return;
    const here = fractionAt(event);
    const [a, b] = [Math.min(dragStartX, here), Math.max(dragStartX, here)];
    dragStartX = null;
    highlight.style.display = 'none';
    if (b - a < 0.005) return; // a plain click, not a drag
    callbacks.onSelectRange(Math.round(t0 + a * span), Math.round(t0 + b * span));
  });
  return root;
}
