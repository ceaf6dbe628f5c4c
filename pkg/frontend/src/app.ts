/** Application shell: view switching, the shared filter bar, summary pane,
 * detail overlay, and capture control panel.
 *
 * The single FilterContext lives on the view state; switching views re-renders
 * the content pane but never touches the context, so a retrieval task can
 * pivot between calendar, timeline, and heatmap without losing its filters.
 */

import { ApiClient, Camera, CaptureRecord } from './api.js';
import { renderCalendar } from './calendar.js';
import { renderCapturePanel } from './capture-panel.js';
import { renderDetail } from './detail.js';
import { renderHeatmap } from './heatmap.js';
import { renderSummary } from './summary.js';
import { renderTimeline } from './timeline.js';
import {
  ContentType,
  FilterContext,
  ViewName,
  ViewState,
  initialState,
} from './state.js';

const VIEWS: ViewName[] = ['calendar', 'timeline', 'heatmap'];

export class App {
  state: ViewState = initialState();
  /** Last started asynchronous UI work; tests await this. */
  lastWork: Promise<void> = Promise.resolve();

  private userId = '';
  private users: { id: string; display_name: string }[] = [];
  private cameras: Camera[] = [];
  private summaryRecords: CaptureRecord[] = [];
  private displayYear: number;
  private displayMonth: number;

  private nav!: HTMLElement;
  private filterBar!: HTMLElement;
  private content!: HTMLElement;
  private summaryHolder!: HTMLElement;
  private detailHolder!: HTMLElement;
  private panelHolder!: HTMLElement;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    now: Date = new Date(),
  ) {
    this.displayYear = now.getUTCFullYear();
    this.displayMonth = now.getUTCMonth() + 1;
  }

  async start(): Promise<void> {
    const me = await this.api.me();
    this.userId = me.id;
    this.users = (await this.api.users()).users;
    this.cameras = (await this.api.cameras()).cameras;

    this.root.innerHTML = '';
    this.nav = document.createElement('nav');
    this.nav.className = 'view-nav';
    this.filterBar = document.createElement('div');
    this.filterBar.className = 'filter-bar';
    this.content = document.createElement('div');
    this.content.className = 'view-content';
    this.summaryHolder = document.createElement('div');
    this.summaryHolder.className = 'summary-holder';
    this.detailHolder = document.createElement('div');
    this.detailHolder.className = 'detail-holder';
    this.panelHolder = document.createElement('div');
    this.panelHolder.className = 'panel-holder';
    this.root.append(
      this.nav,
      this.filterBar,
      this.content,
      this.summaryHolder,
      this.detailHolder,
      this.panelHolder,
    );

    this.renderNav();
    this.renderFilterBar();
    await this.refresh();
  }

  // -- state transitions -----------------------------------------------------

  async switchView(view: ViewName): Promise<void> {
    this.state = { ...this.state, view };
    this.renderNav();
    await this.renderContent();
    await this.renderSummaryPane();
  }

  async setContext(patch: Partial<FilterContext>): Promise<void> {
    this.state = { ...this.state, ctx: { ...this.state.ctx, ...patch } };
    this.renderFilterBar();
    await this.renderContent();
    await this.renderSummaryPane();
  }

  async refresh(): Promise<void> {
    await this.renderContent();
    await this.renderSummaryPane();
    await this.renderPanel();
  }

  summaryRecordIds(): string[] {
    return this.summaryRecords.map((r) => r.id);
  }

  // -- chrome -----------------------------------------------------------------

  private renderNav(): void {
    this.nav.innerHTML = '';
    for (const view of VIEWS) {
      const button = document.createElement('button');
      button.className = `nav-${view}` + (view === this.state.view ? ' active' : '');
      button.textContent = view;
      button.addEventListener('click', () => {
        this.lastWork = this.switchView(view);
      });
      this.nav.appendChild(button);
    }
  }

  private renderFilterBar(): void {
    this.filterBar.innerHTML = '';
    const ctx = this.state.ctx;

    const cameraBox = document.createElement('span');
    cameraBox.className = 'camera-filters';
    for (const camera of this.cameras) {
      const label = document.createElement('label');
      const box = document.createElement('input');
      box.type = 'checkbox';
      box.className = `camera-filter camera-${camera.id}`;
      box.checked = ctx.cameras.includes(camera.id);
      box.addEventListener('change', () => {
        const cameras = box.checked
          ? [...ctx.cameras, camera.id]
          : ctx.cameras.filter((c) => c !== camera.id);
        this.lastWork = this.setContext({ cameras });
      });
      label.append(box, camera.id);
      cameraBox.appendChild(label);
    }
    this.filterBar.appendChild(cameraBox);

    const typeBox = document.createElement('span');
    typeBox.className = 'type-filters';
    for (const type of ['personal', 'collaborative', 'shared'] as ContentType[]) {
      const label = document.createElement('label');
      const box = document.createElement('input');
      box.type = 'checkbox';
      box.className = `type-filter type-${type}`;
      box.checked = ctx.types.includes(type);
      box.addEventListener('change', () => {
        const types = box.checked ? [...ctx.types, type] : ctx.types.filter((t) => t !== type);
        this.lastWork = this.setContext({ types });
      });
      label.append(box, type);
      typeBox.appendChild(label);
    }
    this.filterBar.appendChild(typeBox);

    const keyword = document.createElement('input');
    keyword.className = 'keyword-filter';
    keyword.placeholder = 'keyword';
    keyword.value = ctx.keyword;
    keyword.addEventListener('change', () => {
      this.lastWork = this.setContext({ keyword: keyword.value });
    });
    this.filterBar.appendChild(keyword);

    if (ctx.startMs !== null || ctx.endMs !== null) {
      const clearRange = document.createElement('button');
      clearRange.className = 'clear-range';
      clearRange.textContent = 'clear date range';
      clearRange.addEventListener('click', () => {
        this.lastWork = this.setContext({ startMs: null, endMs: null });
      });
      this.filterBar.appendChild(clearRange);
    }
    if (ctx.region !== null) {
      const clearRegion = document.createElement('button');
      clearRegion.className = 'clear-region';
      clearRegion.textContent = 'clear board region';
      clearRegion.addEventListener('click', () => {
        this.lastWork = this.setContext({ region: null });
      });
      this.filterBar.appendChild(clearRegion);
    }
  }

  // -- panes ------------------------------------------------------------------

  private async renderContent(): Promise<void> {
    this.content.innerHTML = '';
    const ctx = this.state.ctx;
    try {
      if (this.state.view === 'calendar') {
        const { days } = await this.api.calendar(ctx, this.displayYear, this.displayMonth, 1);
        const element = renderCalendar(
          this.displayYear,
          this.displayMonth,
          days,
          this.state.selectedDays,
          {
            onSelectDays: (startMs, endMs, selected) => {
              this.state = { ...this.state, selectedDays: selected };
              this.lastWork = this.setContext({ startMs, endMs });
            },
          },
        );
        this.content.appendChild(this.withMonthNav(element));
      } else if (this.state.view === 'timeline') {
        const { bars } = await this.api.timeline(ctx);
        this.content.appendChild(
          renderTimeline(bars, {
            onSelectRange: (startMs, endMs) => {
              this.lastWork = this.setContext({ startMs, endMs });
            },
            onOpenRecord: (recordId) => {
              this.lastWork = this.openDetail(recordId);
            },
          }),
        );
      } else {
        if (this.state.ctx.cameras.length !== 1) {
          const notice = document.createElement('p');
          notice.className = 'heatmap-needs-camera';
          notice.textContent = 'Select exactly one camera to see its heatmap.';
          this.content.appendChild(notice);
          return;
        }
        const grid = await this.api.heatmap(ctx);
        this.content.appendChild(
          renderHeatmap(grid, this.api, {
            onRegionSelect: (region) => {
              this.lastWork = this.setContext({ region });
            },
          }),
        );
      }
    } catch (err) {
      const failure = document.createElement('p');
      failure.className = 'view-error';
      failure.textContent = `could not load ${this.state.view}: ${err}`;
      this.content.appendChild(failure);
    }
  }

  private withMonthNav(calendarEl: HTMLElement): HTMLElement {
    const wrap = document.createElement('div');
    const nav = document.createElement('div');
    nav.className = 'month-nav';
    const prev = document.createElement('button');
    prev.className = 'month-prev';
    prev.textContent = '<';
    prev.addEventListener('click', () => {
      this.displayMonth -= 1;
      if (this.displayMonth === 0) {
        this.displayMonth = 12;
        this.displayYear -= 1;
      }
      this.lastWork = this.renderContent();
    });
    const next = document.createElement('button');
    next.className = 'month-next';
    next.textContent = '>';
    next.addEventListener('click', () => {
      this.displayMonth += 1;
      if (this.displayMonth === 13) {
        this.displayMonth = 1;
        this.displayYear += 1;
      }
      this.lastWork = this.renderContent();
    });
    nav.append(prev, next);
    wrap.append(nav, calendarEl);
    return wrap;
  }

  private async renderSummaryPane(): Promise<void> {
    try {
      const { records } = await this.api.captures(this.state.ctx);
      this.summaryRecords = records;
    } catch {
      this.summaryRecords = [];
    }
    this.summaryHolder.innerHTML = '';
    this.summaryHolder.appendChild(
      renderSummary(this.summaryRecords, this.api, this.state.overlayChangedRegions, {
        onOpenDetail: (recordId) => {
          this.lastWork = this.openDetail(recordId);
        },
        onToggleOverlay: (enabled) => {
          this.state = { ...this.state, overlayChangedRegions: enabled };
          this.lastWork = this.renderSummaryPane();
        },
      }),
    );
  }

  async openDetail(recordId: string): Promise<void> {
    const record = await this.api.capture(recordId);
    this.state = { ...this.state, detailTarget: recordId };
    this.detailHolder.innerHTML = '';
    this.detailHolder.appendChild(
      renderDetail(record, this.users, this.api, record.owner_id === this.userId, {
        onClose: () => {
          this.state = { ...this.state, detailTarget: null };
          this.detailHolder.innerHTML = '';
        },
        onRecordChanged: () => {
          this.lastWork = this.renderSummaryPane();
        },
      }),
    );
  }

  private async renderPanel(): Promise<void> {
    const owned = this.cameras.filter((c) => c.owner_id === this.userId);
    const recentByCamera = new Map<string, CaptureRecord[]>();
    for (const camera of owned) {
      try {
        const { records } = await this.api.captures({
          cameras: [camera.id],
          startMs: null,
          endMs: null,
          types: [],
          keyword: '',
          region: null,
        });
        recentByCamera.set(camera.id, records);
      } catch {
        recentByCamera.set(camera.id, []);
      }
    }
    this.panelHolder.innerHTML = '';
    this.panelHolder.appendChild(
      renderCapturePanel(owned, recentByCamera, this.api, {
        onOpenDetail: (recordId) => {
          this.lastWork = this.openDetail(recordId);
        },
        onRefresh: () => {
          this.lastWork = this.refreshCamerasAndPanel();
        },
      }),
    );
  }

  private async refreshCamerasAndPanel(): Promise<void> {
    this.cameras = (await this.api.cameras()).cameras;
    await this.renderPanel();
    await this.renderSummaryPane();
  }
}
