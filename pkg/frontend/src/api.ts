/** Thin typed client over the coordinator's HTTP endpoints. */

import { FilterContext, contextParams } from './state.js';

export interface DaySummary {
  date: string;
  has_personal: boolean;
  has_collaborative: boolean;
  has_shared: boolean;
}

export interface TimelineBar {
  record_id: string;
  timestamp_ms: number;
  height: number;
}

export interface HeatmapGrid {
  columns: number;
  rows: number;
  counts: number[][];
  colors: string[][];
  thumbnails: string[];
}

export interface CaptureRecord {
  id: string;
  camera_id: string;
  location: string;
  owner_id: string;
  timestamp_ms: number;
  trigger: string;
  content_type: string;
  changed_cell_count: number;
  label: string;
  description: string;
  bookmarked: boolean;
  contributors: string[];
  tags: string[];
  shared_with: string[];
  image_w: number;
  image_h: number;
  grid_cols: number;
  share_crop?: number[];
}

export interface Camera {
  id: string;
  owner_id: string;
  location: string;
  capture_enabled: boolean;
}

export interface GridPayload {
  grid_cols: number;
  coarse: number[][];
  fine: number[][];
  image_w: number;
  image_h: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(detail);
  }
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    private apiKey: string,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: {
        'X-Api-Key': this.apiKey,
        ...(body !== undefined ? { 'Content-Type': 'application/json' } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        detail = (await response.json()).detail ?? detail;
      } catch {
        // non-JSON error body
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private query(path: string, params: Record<string, string>): string {
    const qs = new URLSearchParams(params).toString();
    return qs ? `${path}?${qs}` : path;
  }

  me(): Promise<{ id: string; display_name: string }> {
    return this.request('GET', '/me');
  }

  users(): Promise<{ users: { id: string; display_name: string }[] }> {
    return this.request('GET', '/users');
  }

  cameras(): Promise<{ cameras: Camera[] }> {
    return this.request('GET', '/cameras');
  }

  calendar(ctx: FilterContext, year: number, month: number, months = 1): Promise<{ days: DaySummary[] }> {
    return this.request(
      'GET',
      this.query('/views/calendar', {
        year: String(year),
        month: String(month),
        months: String(months),
        ...contextParams(ctx),
      }),
    );
  }

  timeline(ctx: FilterContext): Promise<{ bars: TimelineBar[] }> {
    return this.request('GET', this.query('/views/timeline', contextParams(ctx)));
  }

  heatmap(ctx: FilterContext): Promise<HeatmapGrid> {
    return this.request('GET', this.query('/views/heatmap', contextParams(ctx)));
  }

  captures(ctx: FilterContext): Promise<{ records: CaptureRecord[] }> {
    return this.request('GET', this.query('/captures', contextParams(ctx)));
  }

  capture(recordId: string): Promise<CaptureRecord> {
    return this.request('GET', `/captures/${recordId}`);
  }

  grids(recordId: string): Promise<GridPayload> {
    return this.request('GET', `/captures/${recordId}/grids`);
  }

  defaultShareRegion(recordId: string): Promise<{ region: [number, number, number, number] }> {
    return this.request('GET', `/captures/${recordId}/default-share-region`);
  }

  share(recordId: string, targets: string[], region: number[] | null): Promise<CaptureRecord> {
    return this.request('POST', `/captures/${recordId}/share`, { targets, region });
  }

  setMetadata(
    recordId: string,
    patch: Partial<{
      contributors: string[];
      tags: string[];
      label: string;
      description: string;
      bookmarked: boolean;
    }>,
  ): Promise<CaptureRecord> {
    return this.request('PATCH', `/captures/${recordId}/metadata`, patch);
  }

  setCaptureEnabled(cameraId: string, enabled: boolean): Promise<Camera> {
    return this.request('PUT', `/cameras/${cameraId}/capture-enabled`, { enabled });
  }

  manualCapture(cameraId: string): Promise<{ queued: boolean }> {
    return this.request('POST', `/cameras/${cameraId}/manual-capture`);
  }

  imageUrl(recordId: string): string {
    return `${this.baseUrl}/captures/${recordId}/image.png`;
  }

  thumbUrl(recordId: string): string {
    return `${this.baseUrl}/captures/${recordId}/thumb.png`;
  }
}
