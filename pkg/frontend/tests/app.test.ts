import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { App } from '../src/app';
import type { AppConfig, PairDetail } from '../src/types';

const CONFIG: AppConfig = { baseUrl: 'http://stub', token: 'tok', actorId: 'tester' };

type StubRoute = (init?: RequestInit) => { status: number; body: unknown };

function stubFetch(routes: Record<string, StubRoute>): ReturnType<typeof vi.fn> {
  const mock = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
    const path = String(url).replace(CONFIG.baseUrl, '');
    const route = routes[`${init?.method ?? 'GET'} ${path}`];
    if (!route) {
      throw new Error(`unstubbed route: ${init?.method ?? 'GET'} ${path}`);
    }
    const { status, body } = route(init);
    return {
      ok: status >= 200 && status < 300,
      status,
      statusText: String(status),
      json: async () => body,
    } as Response;
  });
  vi.stubGlobal('fetch', mock);
  return mock;
}

function pairDetail(humanVerdict: string | null = null): PairDetail {
  return {
    patient_id: 'p-1',
    trial_id: 't-1',
    relevance: { relevant: true, rationale: 'ok', checked_page_id: null },
    classification: null,
    assessments: [
      {
        assessment_id: 'a-1',
        patient_id: 'p-1',
        trial_id: 't-1',
        criterion_id: 'c-1',
        criterion_description: 'age >= 18',
        criterion_kind: 'inclusion',
        verdict: 'Met',
        rationale: 'age documented',
        source_page_ids: ['pg-1'],
        page_image_urls: ['/pages/pg-1.png'],
        human_verdict: humanVerdict as PairDetail['assessments'][0]['human_verdict'],
        strategy: 'all-pages',
        as_of_date: '2018-01-01',
        failed: false,
        error: null,
      },
    ],
  };
}

describe('App', () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById('app') as HTMLElement;
  });

  afterEach(() => {
    vi.unstubAllGlobals();
  });

  it('loads the pair list on init', async () => {
    stubFetch({
      'GET /pairs': () => ({
        status: 200,
        body: {
          pairs: [
            {
              patient_id: 'p-1',
              trial_id: 't-1',
              trial_title: 'Study',
              criteria: 1,
              reviewed: 0,
              pending: 1,
              classification: null,
            },
          ],
        },
      }),
    });
    const app = new App(root, CONFIG);
    await app.init();
    expect(root.querySelectorAll('.pair-row')).toHaveLength(1);
  });

  it('review action posts feedback then re-reads server state', async () => {
    let reviewed = false;
    const mock = stubFetch({
      'GET /pairs/p-1/t-1/assessments': () => ({
        status: 200,
        body: pairDetail(reviewed ? 'Unmet' : null),
      }),
      'POST /feedback': (init) => {
        const payload = JSON.parse(String(init?.body));
        expect(payload.human_verdict).toBe('Unmet');
        expect(payload.criterion_id).toBe('c-1');
        reviewed = true;
        return { status: 200, body: { event_id: 'e1', stored: true, deduplicated: false } };
      },
    });
    const app = new App(root, CONFIG);
    await app.openPair('p-1', 't-1');
    await app.submitReview('c-1', 'Unmet');
    expect(root.textContent).toContain('Reviewer: Unmet');
    const postCalls = mock.mock.calls.filter(([, init]) => init?.method === 'POST');
    expect(postCalls).toHaveLength(1);
  });

  it('failed post shows inline error and no phantom verdict', async () => {
    stubFetch({
      'GET /pairs/p-1/t-1/assessments': () => ({ status: 200, body: pairDetail() }),
      'POST /feedback': () => ({ status: 422, body: { detail: 'unknown criterion' } }),
    });
    const app = new App(root, CONFIG);
    await app.openPair('p-1', 't-1');
    await app.submitReview('c-1', 'Unmet');
    expect(root.querySelector('.inline-error')?.textContent).toContain('unknown criterion');
    expect(root.textContent).not.toContain('Reviewer: Unmet');
  });

  it('network drop on classification leaves no label behind', async () => {
    let fail = false;
    stubFetch({
      'GET /pairs/p-1/t-1/assessments': () => ({ status: 200, body: pairDetail() }),
      'POST /classification': () => {
        if (!fail) throw new Error('connection reset');
        return { status: 200, body: {} };
      },
    });
    const app = new App(root, CONFIG);
    await app.openPair('p-1', 't-1');
    await app.classifyPatient('ToScreen');
    expect(root.querySelector('.inline-error')?.textContent).toContain('network failure');
    expect(root.textContent).toContain('no decision yet');
    fail = true;
  });

  it('fetch failure on load offers retry', async () => {
    let calls = 0;
    stubFetch({
      'GET /pairs': () => {
        calls += 1;
        if (calls === 1) throw new Error('offline');
        return { status: 200, body: { pairs: [] } };
      },
    });
    const app = new App(root, CONFIG);
    await app.init();
    expect(root.querySelector('.error-banner')).not.toBeNull();
    (root.querySelector('#retry') as HTMLButtonElement).click();
    await vi.waitFor(() => {
      expect(root.querySelector('.empty')).not.toBeNull();
    });
  });

  it('keyboard shortcut reviews the selected criterion', async () => {
    let posted: string | null = null;
    let reviewed = false;
    stubFetch({
      'GET /pairs/p-1/t-1/assessments': () => ({
        status: 200,
        body: pairDetail(reviewed ? 'Met' : null),
      }),
      'POST /feedback': (init) => {
        posted = JSON.parse(String(init?.body)).human_verdict;
        reviewed = true;
        return { status: 200, body: { event_id: 'e', stored: true, deduplicated: false } };
      },
    });
    const app = new App(root, CONFIG);
    await app.openPair('p-1', 't-1');
    document.dispatchEvent(new KeyboardEvent('keydown', { key: 'm', bubbles: true }));
    await vi.waitFor(() => expect(posted).toBe('Met'));
  });
});
