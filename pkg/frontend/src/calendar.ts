/** Calendar view: month grids with color-coded day cells.
 *
 * Day colors follow the server's day summaries: blue for personal content,
 * violet for collaborative, green for shared; days with more than one type
 * are striped. Selecting days highlights them in yellow and narrows the
 * filter context's date range, which repopulates the summary pane.
 */

import { DaySummary } from './api.js';
import { CONTENT_COLORS, SELECTION_YELLOW, stripedBackground } from './colors.js';

export interface CalendarCallbacks {
  onSelectDays(startMs: number, endMs: number, days: string[]): void;
}

export function dayFlagsToColors(day: DaySummary): string[] {
  const colors: string[] = [];
  if (day.has_personal) colors.push(CONTENT_COLORS.personal);
  if (day.has_collaborative) colors.push(CONTENT_COLORS.collaborative);
  if (day.has_shared) colors.push(CONTENT_COLORS.shared);
  return colors;
}

function daysInMonth(year: number, month: number): number {
  return new Date(Date.UTC(year, month, 0)).getUTCDate();
}

function isoDate(year: number, month: number, day: number): string {
  return `${year}-${String(month).padStart(2, '0')}-${String(day).padStart(2, '0')}`;
}

export function dayRangeMs(days: string[]): [number, number] {
  const sorted = [...days].sort();
  const start = Date.parse(`${sorted[0]}T00:00:00Z`);
  const end = Date.parse(`${sorted[sorted.length - 1]}T00:00:00Z`) + 86_400_000 - 1;
  return [start, end];
}

export function renderCalendar(
  year: number,
  month: number,
  summaries: DaySummary[],
  selectedDays: string[],
  callbacks: CalendarCallbacks,
): HTMLElement {
  const byDate = new Map(summaries.map((d) => [d.date, d]));
  const root = document.createElement('div');
  root.className = 'calendar';

  const title = document.createElement('h3');
  title.textContent = new Date(Date.UTC(year, month - 1, 1)).toLocaleString('en', {
    month: 'long',
    year: 'numeric',
    timeZone: 'UTC',
  });
  root.appendChild(title);

  const grid = document.createElement('div');
  grid.className = 'calendar-grid';
  root.appendChild(grid);

  const selected = new Set(selectedDays);
  for (let day = 1; day <= daysInMonth(year, month); day++) {
    const date = isoDate(year, month, day);
    const cell = document.createElement('div');
    cell.className = 'day';
    cell.dataset.date = date;
    cell.textContent = String(day);

    const summary = byDate.get(date);
    if (summary) {
      cell.classList.add('has-content');
      if (summary.has_personal) cell.classList.add('has-personal');
      if (summary.has_collaborative) cell.classList.add('has-collaborative');
      if (summary.has_shared) cell.classList.add('has-shared');
      const colors = dayFlagsToColors(summary);
      if (colors.length > 1) {
        cell.classList.add('striped');
        cell.style.background = stripedBackground(colors);
      } else if (colors.length === 1) {
        cell.style.background = colors[0];
      }
      cell.style.color = '#fff';
    }
    if (selected.has(date)) {
      cell.classList.add('selected');
      cell.style.background = SELECTION_YELLOW;
      cell.style.color = '#222';
    }
    cell.addEventListener('click', (event) => {
      let days: string[];
      if (event.shiftKey && selectedDays.length) {
        // extend to a contiguous range
        const all = [...selectedDays, date].sort();
        const [from, to] = [all[0], all[all.length - 1]];
        days = [];
        const cursor = new Date(`${from}T00:00:00Z`);
        while (cursor.toISOString().slice(0, 10) <= to) {
          days.push(cursor.toISOString().slice(0, 10));
          cursor.setUTCDate(cursor.getUTCDate() + 1);
        }
      } else {
        days = [date];
      }
      const [startMs, endMs] = dayRangeMs(days);
      callbacks.onSelectDays(startMs, endMs, days);
    });
    grid.appendChild(cell);
  }
  return root;
}
