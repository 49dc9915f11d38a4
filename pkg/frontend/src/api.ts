/** Typed client for the review service HTTP contract.

The client only ever mutates server state through POST /review/{id}; every
other call is a read. Failures surface as ApiError with the HTTP status so
callers can branch on 401/404/409 without string matching.
*/

import type {
  Decision,
  DecisionResult,
  ReviewItemView,
  ReviewState,
  RunMetrics,
} from './types.js';

export interface ClientConfig {
  baseUrl: string;
  token: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface QueueFilter {
  state?: ReviewState;
  pegs?: string;
  run?: string;
}

export class ServiceClient {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly config: ClientConfig,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private url(path: string, params?: Record<string, string | undefined>): string {
    const base = this.config.baseUrl.replace(/\/$/, '');
    const query = params
      ? Object.entries(params)
          .filter((pair): pair is [string, string] => pair[1] !== undefined)
          .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(v)}`)
          .join('&')
      : '';
    return query ? `${base}${path}?${query}` : `${base}${path}`;
  }

  private async request(path: string, init?: RequestInit, params?: Record<string, string | undefined>): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(this.url(path, params), {
        ...init,
        headers: {
          Authorization: `Bearer ${this.config.token}`,
          ...(init?.body ? { 'Content-Type': 'application/json' } : {}),
          ...init?.headers,
        },
      });
    } catch (error) {
      throw new ApiError(0, `network error: ${String(error)}`);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  async listRequirements(filter: QueueFilter = {}): Promise<ReviewItemView[]> {
    const response = await this.request('/requirements', undefined, {
      state: filter.state,
      pegs: filter.pegs,
      run: filter.run,
    });
    const body = (await response.json()) as { items: ReviewItemView[] };
    return body.items;
  }

  async decide(
    reqId: string,
    decision: Decision,
    reviewer: string,
    note?: string,
  ): Promise<DecisionResult> {
    const response = await this.request(`/review/${encodeURIComponent(reqId)}`, {
      method: 'POST',
      body: JSON.stringify({ decision, reviewer, note: note ?? null }),
    });
    return (await response.json()) as DecisionResult;
  }

  async exportRun(runId: string, format: 'jsonl' | 'csv' = 'jsonl'): Promise<string> {
    const response = await this.request(`/export/${encodeURIComponent(runId)}`, undefined, {
      format,
    });
    return await response.text();
  }

  async runMetrics(runId: string): Promise<RunMetrics> {
    const response = await this.request(`/metrics/${encodeURIComponent(runId)}`);
    return (await response.json()) as RunMetrics;
  }
}
