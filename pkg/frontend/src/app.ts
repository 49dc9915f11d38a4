/** DOM wiring for the review client: queue, decided tab and export screen.

Rendering is rebuilt from store snapshots; no state lives in the DOM. All
element lookups go through data-testid attributes so the same selectors
serve the browser and the test harness.
*/

import { ApiError, ServiceClient } from './api.js';
import { ReviewQueueStore } from './queueStore.js';
import type { QueueState } from './queueStore.js';
import type { ReviewItemView } from './types.js';
import { formatConfidence } from './types.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ReviewApp {
  private root: HTMLElement;
  private selectedReqId: string | null = null;
  private activeTab: 'queue' | 'decided' | 'export' = 'queue';
  private exportText = '';
  private exportWarning = '';

  constructor(
    root: HTMLElement,
    private readonly client: ServiceClient,
    private readonly store: ReviewQueueStore,
  ) {
    this.root = root;
    this.store.subscribe((state) => this.render(state));
  }

  async start(): Promise<void> {
    await this.store.refresh();
  }

  private render(state: QueueState): void {
    this.root.textContent = '';

    if (state.banner) {
      this.root.appendChild(
        el(
          'div',
          { class: `banner banner-${state.banner.kind}`, 'data-testid': 'banner' },
          state.banner.message,
        ),
      );
    }

    const tabs = el('nav', { class: 'tabs' });
    for (const tab of ['queue', 'decided', 'export'] as const) {
      const button = el(
        'button',
        {
          'data-testid': `tab-${tab}`,
          class: this.activeTab === tab ? 'tab active' : 'tab',
        },
        tab === 'queue' ? `Queue (${state.pending.length})` : tab,
      );
      button.addEventListener('click', () => {
        this.activeTab = tab;
        this.render(this.store.getState());
      });
      tabs.appendChild(button);
    }
    this.root.appendChild(tabs);

    if (this.activeTab === 'queue') this.renderQueue(state);
    else if (this.activeTab === 'decided') this.renderDecided(state);
    else this.renderExport();
  }

  private renderQueue(state: QueueState): void {
    const section = el('section', { 'data-testid': 'queue' });

    const sortToggle = el(
      'button',
      { 'data-testid': 'sort-toggle' },
      state.sortAscending ? 'confidence: lowest first' : 'confidence: highest first',
    );
    sortToggle.addEventListener('click', () =>
      this.store.setSortAscending(!state.sortAscending),
    );
    section.appendChild(sortToggle);

    if (state.loading) {
      section.appendChild(el('p', { 'data-testid': 'loading' }, 'loading queue...'));
    } else if (state.pending.length === 0 && state.banner?.kind !== 'error') {
      // An empty list under an error banner would be misleading: the queue
      // is unknown, not empty.
      section.appendChild(el('p', { 'data-testid': 'queue-empty' }, 'No items waiting for review.'));
    }

    const list = el('ul', { class: 'queue-list' });
    for (const item of state.pending) {
      const row = el('li', {
        class: 'queue-row',
        'data-testid': 'queue-row',
        'data-req-id': item.req_id,
      });
      row.appendChild(
        el('span', { class: 'confidence', 'data-testid': 'confidence' },
          formatConfidence(item.confidence)),
      );
      row.appendChild(el('span', { class: 'text' }, item.text));
      row.appendChild(
        el('span', { class: 'labels' },
          `${item.pegs} / ${item.type} / ${item.priority}`),
      );
      row.addEventListener('click', () => {
        this.selectedReqId = item.req_id;
        this.render(this.store.getState());
      });
      list.appendChild(row);
    }
    section.appendChild(list);

    const selected = state.pending.find((i) => i.req_id === this.selectedReqId);
    if (selected) section.appendChild(this.renderDetail(selected));

    this.root.appendChild(section);
  }

  private renderDetail(item: ReviewItemView): HTMLElement {
    const panel = el('aside', { 'data-testid': 'detail', 'data-req-id': item.req_id });
    panel.appendChild(el('h2', {}, item.text));
    panel.appendChild(
      el('p', { 'data-testid': 'detail-meta' },
        `${item.pegs} / ${item.type} / ${item.priority} ` +
        `confidence ${formatConfidence(item.confidence)} ` +
        `providers: ${item.contributing_providers.join(', ')}`),
    );

    const trace = el('blockquote', { 'data-testid': 'trace' });
    trace.appendChild(
      el('cite', { 'data-testid': 'trace-location' },
        `${item.trace.section}, page ${item.trace.page}`),
    );
    trace.appendChild(el('p', { 'data-testid': 'trace-excerpt' }, item.trace.excerpt));
    panel.appendChild(trace);

    const note = el('textarea', {
      'data-testid': 'note-input',
      placeholder: 'optional review note',
    });
    panel.appendChild(note);

    const busy = this.store.isInFlight(item.req_id);
    for (const decision of ['accept', 'reject'] as const) {
      const button = el(
        'button',
        { 'data-testid': `${decision}-button` },
        decision,
      ) as HTMLButtonElement;
      button.disabled = busy;
      button.addEventListener('click', () => {
        void this.store.decide(item.req_id, decision, note.value || undefined);
        this.selectedReqId = null;
      });
      panel.appendChild(button);
    }
    return panel;
  }

  private renderDecided(state: QueueState): void {
    const section = el('section', { 'data-testid': 'decided' });
    if (state.decided.length === 0) {
      section.appendChild(el('p', {}, 'No decisions in this session.'));
    }
    const list = el('ul');
    for (const item of state.decided) {
      const row = el('li', {
        'data-testid': 'decided-row',
        'data-req-id': item.req_id,
        'data-state': item.state,
      });
      row.appendChild(el('span', {}, `${item.state}: ${item.text}`));
      if (item.note) row.appendChild(el('em', { 'data-testid': 'decided-note' }, item.note));
      list.appendChild(row);
    }
    section.appendChild(list);
    this.root.appendChild(section);
  }

  private renderExport(): void {
    const section = el('section', { 'data-testid': 'export' });
    const input = el('input', {
      'data-testid': 'run-input',
      placeholder: 'run id',
    }) as HTMLInputElement;
    const button = el('button', { 'data-testid': 'export-button' }, 'prepare export');
    section.appendChild(input);
    section.appendChild(button);

    if (this.exportWarning) {
      section.appendChild(
        el('p', { 'data-testid': 'export-warning' }, this.exportWarning),
      );
    }
    if (this.exportText) {
      const download = el('a', {
        'data-testid': 'download-link',
        download: 'requirements.jsonl',
        href: `data:application/jsonl;charset=utf-8,${encodeURIComponent(this.exportText)}`,
      }, 'download requirements.jsonl');
      section.appendChild(download);
      section.appendChild(
        el('pre', { 'data-testid': 'export-preview' }, this.exportText),
      );
    }

    button.addEventListener('click', () => void this.prepareExport(input.value.trim()));
    this.root.appendChild(section);
  }

  private async prepareExport(runId: string): Promise<void> {
    if (!runId) return;
    try {
      const metrics = await this.client.runMetrics(runId);
      const payload = await this.client.exportRun(runId, 'jsonl');
      const exported = payload.trim().split('\n').length - 1; // minus header line
      const excluded = metrics.total - exported;
      this.exportWarning =
        excluded > 0
          ? `${metrics.pending} item(s) still pending and ${excluded - metrics.pending} rejected are excluded from this export.`
          : 'All items decided; export is complete.';
      this.exportText = payload;
    } catch (error) {
      this.exportText = '';
      this.exportWarning =
        error instanceof ApiError && error.status === 404
          ? `Run ${runId} not found (404).`
          : `Export failed: ${(error as Error).message}`;
    }
    this.render(this.store.getState());
  }
}

export interface AppConfig {
  baseUrl: string;
  token: string;
  reviewer: string;
}

export function mountApp(root: HTMLElement, config: AppConfig): ReviewApp {
  const client = new ServiceClient({ baseUrl: config.baseUrl, token: config.token });
  const store = new ReviewQueueStore(client, config.reviewer);
  return new ReviewApp(root, client, store);
}
