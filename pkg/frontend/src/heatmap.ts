/** Heatmap view: per-cell change counts over the board, colored cold to warm.
 *
 * Thumbnails of in-range captures are alpha-composited beneath the grid so
 * familiar content shines through white (never-changed) cells. A click, drag,
 * release over the cells selects a rectangle and turns it into the context's
 * region filter; selecting the whole grid clears the filter.
 */

import { ApiClient, HeatmapGrid } from './api.js';
import { HEAT_FILLS } from './colors.js';
import { regionFromCells } from './state.js';

export interface HeatmapCallbacks {
  onRegionSelect(region: [number, number, number, number] | null): void;
}

export function renderHeatmap(
  grid: HeatmapGrid,
  api: ApiClient,
  callbacks: HeatmapCallbacks,
): HTMLElement {
  const root = document.createElement('div');
  root.className = 'heatmap';
  root.style.position = 'relative';

  // shine-through underlay: stacked translucent thumbnails
  const underlay = document.createElement('div');
  underlay.className = 'heatmap-underlay';
  underlay.style.position = 'absolute';
  underlay.style.inset = '0';
  for (const recordId of grid.thumbnails) {
    const img = document.createElement('img');
    img.src = api.thumbUrl(recordId);
    img.style.position = 'absolute';
    img.style.inset = '0';
    img.style.width = '100%';
    img.style.height = '100%';
    img.style.opacity = String(Math.max(0.08, 0.5 / Math.max(grid.thumbnails.length, 1)));
    underlay.appendChild(img);
  }
  root.appendChild(underlay);

  const cells = document.createElement('div');
  cells.className = 'heatmap-cells';
  cells.style.position = 'relative';
  cells.style.display = 'grid';
  cells.style.gridTemplateColumns = `repeat(${grid.columns}, 1fr)`;
  root.appendChild(cells);

  let dragStart: [number, number] | null = null;

  for (let row = 0; row < grid.rows; row++) {
    for (let col = 0; col < grid.columns; col++) {
      const cell = document.createElement('div');
      cell.className = 'heat-cell';
      const colorClass = grid.colors[row][col];
      cell.classList.add(`heat-${colorClass}`);
      cell.dataset.col = String(col);
      cell.dataset.row = String(row);
      cell.dataset.count = String(grid.counts[row][col]);
      cell.style.background = HEAT_FILLS[colorClass] ?? HEAT_FILLS.white;
      cell.title = `${grid.counts[row][col]} changes`;
      cell.addEventListener('mousedown', () => {
        dragStart = [col, row];
      });
      cell.addEventListener('mouseup', () => {
        if (!dragStart) return;
        const [c0, r0] = dragStart;
        dragStart = null;
        const rect: [number, number, number, number] = [
          Math.min(c0, col),
          Math.min(r0, row),
          Math.max(c0, col),
          Math.max(r0, row),
        ];
        callbacks.onRegionSelect(regionFromCells(rect, grid.columns, grid.rows));
      });
      cells.appendChild(cell);
    }
  }

  const hint = document.createElement('p');
  hint.className = 'hint';
  hint.textContent = 'Drag over cells to filter by board region; select everything to clear.';
  root.appendChild(hint);
  return root;
}
