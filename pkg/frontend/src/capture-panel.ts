/** Capture control panel: the always-available board-side functions, in the
 * browser. One row per owned camera: one-touch manual capture, pause/resume
 * of automatic capture, and a strip of the most recent captures.
 */

import { ApiClient, Camera, CaptureRecord } from './api.js';

export interface CapturePanelCallbacks {
  onOpenDetail(recordId: string): void;
  onRefresh(): void;
}

const RECENT_LIMIT = 6;

export function renderCapturePanel(
  cameras: Camera[],
  recentByCamera: Map<string, CaptureRecord[]>,
  api: ApiClient,
  callbacks: CapturePanelCallbacks,
): HTMLElement {
  const root = document.createElement('div');
  root.className = 'capture-panel';
  const title = document.createElement('h3');
  title.textContent = 'capture control';
  root.appendChild(title);

  for (const camera of cameras) {
    const row = document.createElement('div');
    row.className = 'camera-row';
    row.dataset.cameraId = camera.id;

    const name = document.createElement('span');
    name.className = 'camera-name';
    name.textContent = `${camera.id} — ${camera.location}`;
    row.appendChild(name);

    const manual = document.createElement('button');
    manual.className = 'manual-capture';
    manual.textContent = 'capture now';
    manual.addEventListener('click', async () => {
      await api.manualCapture(camera.id);
      callbacks.onRefresh();
    });
    row.appendChild(manual);

    const pause = document.createElement('button');
    pause.className = 'toggle-capture';
    pause.textContent = camera.capture_enabled ? 'pause capture' : 'resume capture';
    pause.dataset.enabled = String(camera.capture_enabled);
    pause.addEventListener('click', async () => {
      await api.setCaptureEnabled(camera.id, !camera.capture_enabled);
      callbacks.onRefresh();
    });
    row.appendChild(pause);

    const strip = document.createElement('div');
    strip.className = 'recent-strip';
    const recents = (recentByCamera.get(camera.id) ?? []).slice(-RECENT_LIMIT);
    for (const record of recents) {
      const img = document.createElement('img');
      img.className = 'recent-thumb';
      img.dataset.recordId = record.id;
      img.src = api.thumbUrl(record.id);
      img.title = new Date(record.timestamp_ms).toISOString();
      img.addEventListener('click', () => callbacks.onOpenDetail(record.id));
      strip.appendChild(img);
    }
    row.appendChild(strip);
    root.appendChild(row);
  }
  return root;
}
