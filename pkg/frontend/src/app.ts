// Application shell: navigation, event wiring, keyboard shortcuts.
//
// The server is the source of truth: after every accepted action the view is
// re-fetched, so rendered verdicts always reflect the latest server state and
// a failed POST leaves no phantom label behind.

import { ApiClient, ApiError } from './api';
import type { AppConfig, PairDetail, PatientLabel, Verdict } from './types';
import { renderError, renderLoading, renderPairDetail, renderPairList } from './views';

type Route =
  | { name: 'pairs' }
  | { name: 'pair'; patientId: string; trialId: string };

export class App {
  private api: ApiClient;
  private route: Route = { name: 'pairs' };
  private detail: PairDetail | null = null;
  private selectedCriterion: string | null = null;
  private viewerPages: string[] = [];
  private viewerIndex = 0;

  constructor(
    private rootElement: HTMLElement,
    config: AppConfig,
  ) {
    this.api = new ApiClient(config);
    this.rootElement.addEventListener('click', (event) => this.onClick(event));
    document.addEventListener('keydown', (event) => this.onKeydown(event));
  }

  async init(): Promise<void> {
    await this.showPairs();
  }

  // -- rendering ------------------------------------------------------------

  private async showPairs(): Promise<void> {
    this.route = { name: 'pairs' };
    this.rootElement.innerHTML = renderLoading();
    try {
      const pairs = await this.api.listPairs();
      this.rootElement.innerHTML = renderPairList(pairs);
    } catch (error) {
      this.showError(error, () => this.showPairs());
    }
  }

  async openPair(patientId: string, trialId: string): Promise<void> {
    this.route = { name: 'pair', patientId, trialId };
    try {
      this.detail = await this.api.getAssessments(patientId, trialId);
      if (
        this.selectedCriterion === null ||
        !this.detail.assessments.some((a) => a.criterion_id === this.selectedCriterion)
      ) {
        this.selectedCriterion = this.detail.assessments[0]?.criterion_id ?? null;
      }
      this.rootElement.innerHTML = renderPairDetail(this.detail, this.selectedCriterion);
    } catch (error) {
      this.showError(error, () => this.openPair(patientId, trialId));
    }
  }

  private showError(error: unknown, retry: () => void): void {
    const message =
      error instanceof ApiError
        ? `Server error (${error.status}): ${error.message}`
        : `Network failure: ${String(error)}`;
    this.rootElement.innerHTML = renderError(message);
    const retryButton = this.rootElement.querySelector<HTMLButtonElement>('#retry');
    retryButton?.addEventListener('click', retry, { once: true });
  }

  // -- actions ----------------------------------------------------------------

  private async refreshPair(): Promise<void> {
    if (this.route.name === 'pair') {
      await this.openPair(this.route.patientId, this.route.trialId);
    }
  }

  async submitReview(criterionId: string, verdict: Verdict): Promise<void> {
    if (this.route.name !== 'pair') return;
    const { patientId, trialId } = this.route;
    try {
      await this.api.submitReview(patientId, trialId, criterionId, verdict);
    } catch (error) {
      this.showInlineError(criterionId, error);
      return;
    }
    this.selectedCriterion = criterionId;
    await this.refreshPair();
  }

  async classifyPatient(label: PatientLabel): Promise<void> {
    if (this.route.name !== 'pair') return;
    const { patientId, trialId } = this.route;
    try {
      await this.api.classifyPatient(patientId, trialId, label);
    } catch (error) {
      this.showInlineError(null, error);
      return;
    }
    await this.refreshPair();
  }

  private showInlineError(criterionId: string | null, error: unknown): void {
    const message =
      error instanceof ApiError ? error.message : `network failure: ${String(error)}`;
    const host = criterionId
      ? this.rootElement.querySelector(`.criterion[data-criterion="${criterionId}"]`)
      : this.rootElement.querySelector('.classify');
    if (!host) return;
    const existing = host.querySelector('.inline-error');
    existing?.remove();
    const banner = document.createElement('div');
    banner.className = 'inline-error';
    banner.textContent = message;
    host.appendChild(banner);
  }

  // -- viewer -----------------------------------------------------------------

  private openViewer(criterionId: string, pageIndex: number): void {
    const row = this.detail?.assessments.find((a) => a.criterion_id === criterionId);
    if (!row || row.page_image_urls.length === 0) return;
    this.viewerPages = row.page_image_urls.map((url) => this.api.pageUrl(url));
    this.viewerIndex = Math.min(pageIndex, this.viewerPages.length - 1);
    this.updateViewer();
  }

  private updateViewer(): void {
    const viewer = this.rootElement.querySelector<HTMLElement>('#viewer');
    const img = this.rootElement.querySelector<HTMLImageElement>('#viewer-img');
    const caption = this.rootElement.querySelector<HTMLElement>('#viewer-caption');
    if (!viewer || !img || !caption) return;
    viewer.classList.remove('hidden');
    img.src = this.viewerPages[this.viewerIndex];
    caption.textContent = `page ${this.viewerIndex + 1} of ${this.viewerPages.length}`;
  }

  private stepViewer(delta: number): void {
    if (this.viewerPages.length === 0) return;
    const count = this.viewerPages.length;
    this.viewerIndex = (this.viewerIndex + delta + count) % count;
    this.updateViewer();
  }

  // -- events -----------------------------------------------------------------

  private onClick(event: Event): void {
    const target = event.target as HTMLElement | null;
    if (!target) return;

    const pairRow = target.closest<HTMLElement>('.pair-row');
    if (pairRow?.dataset.patient && pairRow.dataset.trial) {
      void this.openPair(pairRow.dataset.patient, pairRow.dataset.trial);
      return;
    }
    if (target.id === 'back') {
      void this.showPairs();
      return;
    }
    if (target.classList.contains('review') || target.classList.contains('confirm')) {
      const criterionId = target.dataset.criterion;
      const verdict = target.dataset.verdict as Verdict | undefined;
      if (criterionId && verdict) void this.submitReview(criterionId, verdict);
      return;
    }
    if (target.id === 'classify-screen' || target.id === 'classify-noteligible') {
      const label = target.dataset.label as PatientLabel | undefined;
      if (label) void this.classifyPatient(label);
      return;
    }
    if (target.classList.contains('thumb')) {
      const criterionId = target.dataset.criterion;
      const pageIndex = Number(target.dataset.pageIndex ?? 0);
      if (criterionId) this.openViewer(criterionId, pageIndex);
      return;
    }
    if (target.id === 'viewer-close') {
      this.rootElement.querySelector('#viewer')?.classList.add('hidden');
      return;
    }
    if (target.id === 'viewer-prev') {
      this.stepViewer(-1);
      return;
    }
    if (target.id === 'viewer-next') {
      this.stepViewer(1);
      return;
    }
    const criterion = target.closest<HTMLElement>('.criterion');
    if (criterion?.dataset.criterion) {
      this.selectCriterion(criterion.dataset.criterion);
    }
  }

  private selectCriterion(criterionId: string): void {
    this.selectedCriterion = criterionId;
    this.rootElement.querySelectorAll('.criterion').forEach((node) => {
      node.classList.toggle(
        'selected',
        (node as HTMLElement).dataset.criterion === criterionId,
      );
    });
  }

  private moveSelection(delta: number): void {
    if (!this.detail) return;
    const ids = this.detail.assessments.map((a) => a.criterion_id);
    if (ids.length === 0) return;
    const current = this.selectedCriterion ? ids.indexOf(this.selectedCriterion) : 0;
    const next = Math.min(ids.length - 1, Math.max(0, current + delta));
    this.selectCriterion(ids[next]);
  }

  // Shortcuts keep criterion review to a single keystroke:
  //   j/k move, m/u/i verdicts, c confirm AI, s/n classify patient.
  private onKeydown(event: KeyboardEvent): void {
    if (this.route.name !== 'pair') return;
    const tag = (event.target as HTMLElement | null)?.tagName ?? '';
    if (tag === 'INPUT' || tag === 'TEXTAREA') return;
    switch (event.key) {
      case 'j':
        this.moveSelection(1);
        break;
      case 'k':
        this.moveSelection(-1);
        break;
      case 'm':
        if (this.selectedCriterion) void this.submitReview(this.selectedCriterion, 'Met');
        break;
      case 'u':
        if (this.selectedCriterion) void this.submitReview(this.selectedCriterion, 'Unmet');
        break;
      case 'i':
        if (this.selectedCriterion) void this.submitReview(this.selectedCriterion, 'Unknown');
        break;
      case 'c': {
        const row = this.detail?.assessments.find(
          (a) => a.criterion_id === this.selectedCriterion,
        );
        if (row) void this.submitReview(row.criterion_id, row.verdict);
        break;
      }
      case 's':
        void this.classifyPatient('ToScreen');
        break;
      case 'n':
        void this.classifyPatient('NotEligible');
        break;
      default:
        return;
    }
    event.preventDefault();
  }
}

export function readConfig(): AppConfig {
  const params = new URLSearchParams(window.location.search);
  const stored = (globalThis as { TRIALMATCH_CONFIG?: Partial<AppConfig> }).TRIALMATCH_CONFIG;
  return {
    baseUrl: params.get('api') ?? stored?.baseUrl ?? 'http://127.0.0.1:8400',
    token: params.get('token') ?? stored?.token ?? null,
    actorId: params.get('actor') ?? stored?.actorId ?? 'reviewer',
  };
}

export async function bootstrap(root?: HTMLElement, config?: AppConfig): Promise<App> {
  const host = root ?? document.getElementById('app');
  if (!host) throw new Error('missing #app element');
  const app = new App(host, config ?? readConfig());
  await app.init();
  return app;
}

// auto-start in the browser; tests call bootstrap() explicitly
if (typeof document !== 'undefined' && document.getElementById('app')) {
  void bootstrap();
}
