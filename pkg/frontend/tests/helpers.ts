import type { ReviewItemView } from '../src/types.js';

export function makeItem(overrides: Partial<ReviewItemView> = {}): ReviewItemView {
  return {
    req_id: 'req-000001',
    run_id: 'run-e2e',
    text: 'The system shall support forty-seven interface languages.',
    type: 'functional',
    pegs: 'system',
    priority: 'medium',
    category: 'Usability',
    confidence: 0.3333,
    contributing_providers: ['alpha'],
    state: 'pending',
    reviewer: null,
    note: null,
    trace: {
      doc_id: 'doc-1',
      section: 'Scope',
      page: 1,
      chunk_id: 'doc-1:s000:c000',
      excerpt: 'The supplier shall deliver the platform.',
    },
    ...overrides,
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

export async function waitFor(
  predicate: () => boolean,
  timeoutMs = 5000,
  stepMs = 10,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) return;
    await new Promise((resolve) => setTimeout(resolve, stepMs));
  }
  throw new Error('waitFor timed out');
}
