/** Review queue state with optimistic decisions.

The server's state machine is the only authority: a decision is applied to
the view optimistically, confirmed on 200, and rolled forward to the
server's version on 409 (someone else decided first) by refetching the
queue. Double submits are blocked while a decision is in flight.
*/

import { ApiError, ServiceClient } from './api.js';
import type { Decision, ReviewItemView } from './types.js';

export type BannerKind = 'error' | 'info';

export interface Banner {
  kind: BannerKind;
  message: string;
}

export interface QueueState {
  pending: ReviewItemView[];
  decided: ReviewItemView[];
  banner: Banner | null;
  loading: boolean;
  sortAscending: boolean;
}

type Listener = (state: QueueState) => void;

function byConfidence(ascending: boolean) {
  return (a: ReviewItemView, b: ReviewItemView): number => {
    const delta = ascending ? a.confidence - b.confidence : b.confidence - a.confidence;
    return delta !== 0 ? delta : a.req_id.localeCompare(b.req_id);
  };
}

export class ReviewQueueStore {
  private pending: ReviewItemView[] = [];
  private decided: ReviewItemView[] = [];
  private banner: Banner | null = null;
  private loading = false;
  private sortAscending = true;
  private inFlight = new Set<string>();
  private listeners: Listener[] = [];

  constructor(
    private readonly client: ServiceClient,
    private readonly reviewer: string,
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  getState(): QueueState {
    return {
      pending: [...this.pending].sort(byConfidence(this.sortAscending)),
      decided: [...this.decided],
      banner: this.banner,
      loading: this.loading,
      sortAscending: this.sortAscending,
    };
  }

  private emit(): void {
    const snapshot = this.getState();
    for (const listener of this.listeners) listener(snapshot);
  }

  setSortAscending(ascending: boolean): void {
    this.sortAscending = ascending;
    this.emit();
  }

  clearBanner(): void {
    this.banner = null;
    this.emit();
  }

  isInFlight(reqId: string): boolean {
    return this.inFlight.has(reqId);
  }

  /** Load the pending queue from the server; errors become banners, never
   * a silently empty list. */
  async refresh(): Promise<void> {
    this.loading = true;
    this.emit();
    try {
      this.pending = await this.client.listRequirements({ state: 'pending' });
      this.banner = null;
    } catch (error) {
      this.banner = {
        kind: 'error',
        message:
          error instanceof ApiError && error.status === 401
            ? 'Authentication failed (401): check the configured token.'
            : `Could not load the review queue: ${(error as Error).message}`,
      };
    } finally {
      this.loading = false;
      this.emit();
    }
  }

  /** Accept or reject one pending item.

  Optimistically removes it from the queue; on 409 the server already has
  a decision from elsewhere, so the queue is refetched and the view
  converges to the server's state. */
  async decide(reqId: string, decision: Decision, note?: string): Promise<void> {
    if (this.inFlight.has(reqId)) return;
    const index = this.pending.findIndex((item) => item.req_id === reqId);
    if (index < 0) return;
    const item = this.pending[index]!;
    if (item.state !== 'pending') return;

    this.inFlight.add(reqId);
    const rollback = [...this.pending];
    this.pending = this.pending.filter((p) => p.req_id !== reqId);
    this.emit();

    try {
      const result = await this.client.decide(reqId, decision, this.reviewer, note);
      this.decided = [
        { ...item, state: result.state, reviewer: result.reviewer, note: result.note },
        ...this.decided,
      ];
      this.banner = null;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.inFlight.delete(reqId);
        await this.refreshDecidedItem(reqId, item);
        await this.refresh();
        // Set after the refresh so the conflict notice survives it.
        this.banner = {
          kind: 'info',
          message: 'This item was already decided in another session; queue refreshed.',
        };
        this.emit();
        return;
      }
      this.pending = rollback;
      this.banner = {
        kind: 'error',
        message: `Decision failed: ${(error as Error).message}`,
      };
    } finally {
      this.inFlight.delete(reqId);
    }
    this.emit();
  }

  /** After a conflict, pull the item's server-side state into the decided
   * tab so the reviewer sees what actually happened. */
  private async refreshDecidedItem(reqId: string, fallback: ReviewItemView): Promise<void> {
    try {
      const items = await this.client.listRequirements({ run: fallback.run_id });
      const current = items.find((i) => i.req_id === reqId);
      if (current && current.state !== 'pending') {
        this.decided = [current, ...this.decided.filter((d) => d.req_id !== reqId)];
      }
    } catch {
      // Queue refresh already surfaced connectivity problems.
    }
  }
}
