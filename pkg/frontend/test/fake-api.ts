/** In-memory fake of the coordinator HTTP surface, installed as global fetch.
 *
 * Speaks the exact wire shapes the client consumes, with enough filtering
 * fidelity (cameras, range, types, keyword) that summary record sets are
 * meaningful when tests compare them across views.
 */

import { CaptureRecord, Camera } from '../src/api.js';

export interface FakeRecord extends CaptureRecord {
  coarse: number[][];
}

let nextId = 1;

export function makeRecord(partial: Partial<FakeRecord> & { timestamp_ms: number }): FakeRecord {
  const id = partial.id ?? `cap-${nextId++}`;
  const coarse =
    partial.coarse ?? Array.from({ length: 10 }, () => Array(16).fill(0) as number[]);
  return {
    id,
    camera_id: 'cam-1',
    location: 'office',
    owner_id: 'alice',
    trigger: 'automatic',
    content_type: 'personal',
    changed_cell_count: coarse.flat().filter((v) => v > 0.05).length,
    label: '',
    description: '',
    bookmarked: false,
    contributors: [],
    tags: [],
    shared_with: [],
    image_w: 160,
    image_h: 100,
    grid_cols: 16,
    ...partial,
    coarse,
  };
}

export class FakeServer {
  users = [
    { id: 'alice', display_name: 'Alice' },
    { id: 'ben', display_name: 'Ben' },
    { id: 'charlie', display_name: 'Charlie' },
  ];
  me = { id: 'alice', display_name: 'Alice' };
  cameras: Camera[] = [
    { id: 'cam-1', owner_id: 'alice', location: 'office', capture_enabled: true },
  ];
  records: FakeRecord[] = [];
  failNextMetadata = false;
  manualCaptureFactory: (() => FakeRecord) | null = null;
  requests: string[] = [];

  install(): void {
    globalThis.fetch = ((input: RequestInfo | URL, init?: RequestInit) =>
      this.handle(String(input), init)) as typeof fetch;
  }

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { 'Content-Type': 'application/json' },
    });
  }

  visibleRecords(params: URLSearchParams): FakeRecord[] {
    let out = [...this.records];
    const cameras = params.get('cameras');
    if (cameras) {
      const wanted = new Set(cameras.split(','));
      out = out.filter((r) => wanted.has(r.camera_id));
    }
    const start = params.get('start_ms');
    if (start) out = out.filter((r) => r.timestamp_ms >= Number(start));
    const end = params.get('end_ms');
    if (end) out = out.filter((r) => r.timestamp_ms <= Number(end));
    const types = params.get('types');
    if (types) {
      const wanted = types.split(',');
      out = out.filter((r) =>
        wanted.some((t) => (t === 'shared' ? r.shared_with.length > 0 : r.content_type === t)),
      );
    }
    const keyword = params.get('keyword');
    if (keyword) {
      const needle = keyword.toLowerCase();
      out = out.filter(
        (r) =>
          r.label.toLowerCase().includes(needle) || r.description.toLowerCase().includes(needle),
      );
    }
    const region = params.get('region');
    if (region) {
      const [x0, y0, x1, y1] = region.split(',').map(Number);
      out = out.filter((r) =>
        r.coarse.some((rowVals, row) =>
          rowVals.some((v, col) => {
            if (v <= 0.05) return false;
            const cx = (col + 0.5) / 16;
            const cy = (row + 0.5) / 10;
            return cx >= x0 && cx <= x1 && cy >= y0 && cy <= y1;
          }),
        ),
      );
    }
    return out.sort((a, b) => a.timestamp_ms - b.timestamp_ms);
  }

  private dayOf(ts: number): string {
    return new Date(ts).toISOString().slice(0, 10);
  }

  private async handle(url: string, init?: RequestInit): Promise<Response> {
    const method = init?.method ?? 'GET';
    const u = new URL(url, 'http://fake');
    const path = u.pathname;
    const params = u.searchParams;
    this.requests.push(`${method} ${path}`);
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;

    if (path === '/me') return this.json(this.me);
    if (path === '/users') return this.json({ users: this.users });
    if (path === '/cameras') return this.json({ cameras: this.cameras });

    if (path === '/views/calendar') {
      const year = Number(params.get('year'));
      const month = Number(params.get('month'));
      const records = this.visibleRecords(params).filter((r) => {
        const d = new Date(r.timestamp_ms);
        return d.getUTCFullYear() === year && d.getUTCMonth() + 1 === month;
      });
      const byDay = new Map<string, { p: boolean; c: boolean; s: boolean }>();
      for (const r of records) {
        const day = byDay.get(this.dayOf(r.timestamp_ms)) ?? { p: false, c: false, s: false };
        if (r.content_type === 'personal') day.p = true;
        if (r.content_type === 'collaborative') day.c = true;
        if (r.shared_with.length) day.s = true;
        byDay.set(this.dayOf(r.timestamp_ms), day);
      }
      return this.json({
        days: [...byDay.entries()]
          .sort()
          .map(([date, f]) => ({
            date,
            has_personal: f.p,
            has_collaborative: f.c,
            has_shared: f.s,
          })),
      });
    }

    if (path === '/views/timeline') {
      return this.json({
        bars: this.visibleRecords(params).map((r) => ({
          record_id: r.id,
          timestamp_ms: r.timestamp_ms,
          height: r.changed_cell_count,
        })),
      });
    }

    if (path === '/views/heatmap') {
      const records = this.visibleRecords(params);
      const counts = Array.from({ length: 10 }, () => Array(16).fill(0) as number[]);
      for (const r of records) {
        r.coarse.forEach((rowVals, row) =>
          rowVals.forEach((v, col) => {
            if (v > 0.05) counts[row][col] += 1;
          }),
        );
      }
      const max = Math.max(...counts.flat(), 0);
      const names = ['white', 'cold', 'cool', 'mild', 'warm', 'hot'];
      const colors = counts.map((rowVals) =>
        rowVals.map((count) => {
          if (count <= 0) return 'white';
          if (max <= 1) return 'cold';
          return names[Math.min(1 + Math.round(((count - 1) / (max - 1)) * 4), 5)];
        }),
      );
      return this.json({
        columns: 16,
        rows: 10,
        counts,
        colors,
        thumbnails: records.map((r) => r.id),
      });
    }

    if (path === '/captures' && method === 'GET') {
      return this.json({ records: this.visibleRecords(params) });
    }

    const recordMatch = path.match(/^\/captures\/([^/]+)(\/.*)?$/);
    if (recordMatch) {
      const record = this.records.find((r) => r.id === recordMatch[1]);
      if (!record) return this.json({ detail: 'unknown record' }, 404);
      const sub = recordMatch[2] ?? '';
      if (sub === '' && method === 'GET') return this.json(record);
      if (sub === '/grids') {
        return this.json({
          grid_cols: 16,
          coarse: record.coarse,
          fine: [],
          image_w: record.image_w,
          image_h: record.image_h,
        });
      }
      if (sub === '/default-share-region') {
        let best: { cells: [number, number][] } | null = null;
        // single pass is enough for fixtures: bounding box of all changed cells
        const cells: [number, number][] = [];
        record.coarse.forEach((rowVals, row) =>
          rowVals.forEach((v, col) => {
            if (v > 0.05) cells.push([row, col]);
          }),
        );
        if (!cells.length) return this.json({ detail: 'no changed cells' }, 409);
        const rows = cells.map(([r]) => r);
        const cols = cells.map(([, c]) => c);
        const x0 = Math.min(...cols) * 10;
        const x1 = (Math.max(...cols) + 1) * 10;
        const y0 = Math.min(...rows) * 10;
        const y1 = (Math.max(...rows) + 1) * 10;
        return this.json({ region: [x0, y0, x1 - x0, y1 - y0] });
      }
      if (sub === '/share' && method === 'POST') {
        record.shared_with = [...new Set([...record.shared_with, ...body.targets])].sort();
        if (body.region) record.share_crop = body.region;
        return this.json(record);
      }
      if (sub === '/metadata' && method === 'PATCH') {
        if (this.failNextMetadata) {
          this.failNextMetadata = false;
          return this.json({ detail: 'not allowed' }, 403);
        }
        for (const key of ['label', 'description', 'bookmarked', 'tags', 'contributors'] as const) {
          if (body[key] !== undefined) (record as Record<string, unknown>)[key] = body[key];
        }
        return this.json(record);
      }
    }

    const cameraMatch = path.match(/^\/cameras\/([^/]+)\/(capture-enabled|manual-capture)$/);
    if (cameraMatch) {
      const camera = this.cameras.find((c) => c.id === cameraMatch[1]);
      if (!camera) return this.json({ detail: 'unknown camera' }, 404);
      if (cameraMatch[2] === 'capture-enabled') {
        camera.capture_enabled = Boolean(body.enabled);
        return this.json(camera);
      }
      // manual capture: the (simulated) detector executes the queued command
      if (this.manualCaptureFactory) {
        this.records.push(this.manualCaptureFactory());
      }
      return this.json({ queued: true }, 202);
    }

    return this.json({ detail: `no route for ${method} ${path}` }, 404);
  }
}
