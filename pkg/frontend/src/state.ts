/** Shared view state: the filter context mirror and the active view.
 *
 * One FilterContext drives every view; switching views never resets it.
 * `serializeContext` is the canonical byte representation used both as HTTP
 * query parameters and to verify persistence across view switches.
 */

export type ViewName = 'calendar' | 'timeline' | 'heatmap';

export type ContentType = 'personal' | 'collaborative' | 'shared';

export interface FilterContext {
  cameras: string[];
  startMs: number | null;
  endMs: number | null;
  types: ContentType[];
  keyword: string;
  region: [number, number, number, number] | null;
}

export function emptyContext(): FilterContext {
  return { cameras: [], startMs: null, endMs: null, types: [], keyword: '', region: null };
}

/** Query parameters in the coordinator's wire format. Fixed key order. */
export function contextParams(ctx: FilterContext): Record<string, string> {
  const params: Record<string, string> = {};
  if (ctx.cameras.length) params.cameras = ctx.cameras.join(',');
  if (ctx.startMs !== null) params.start_ms = String(ctx.startMs);
  if (ctx.endMs !== null) params.end_ms = String(ctx.endMs);
  if (ctx.types.length) params.types = ctx.types.join(',');
  if (ctx.keyword) params.keyword = ctx.keyword;
  if (ctx.region) params.region = ctx.region.map((v) => v.toFixed(6)).join(',');
  return params;
}

export function serializeContext(ctx: FilterContext): string {
  return new URLSearchParams(contextParams(ctx)).toString();
}

export interface ViewState {
  view: ViewName;
  ctx: FilterContext;
  selectedRecords: string[];
  detailTarget: string | null;
  selectedDays: string[];
  overlayChangedRegions: boolean;
}

export function initialState(): ViewState {
  return {
    view: 'calendar',
    ctx: emptyContext(),
    selectedRecords: [],
    detailTarget: null,
    selectedDays: [],
    overlayChangedRegions: true,
  };
}

/** Heatmap cell selection -> normalized board region; full grid clears it. */
export function regionFromCells(
  cellRect: [number, number, number, number],
  columns: number,
  rows = 10,
): [number, number, number, number] | null {
  const [c0, r0, c1, r1] = cellRect;
  if (c0 === 0 && r0 === 0 && c1 === columns - 1 && r1 === rows - 1) return null;
  return [c0 / columns, r0 / rows, (c1 + 1) / columns, (r1 + 1) / rows];
}
