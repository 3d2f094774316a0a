import { ApiError, CampaignApi, ConflictError } from './api';
import { FlowDirection, toSignedValue } from './convert';
import {
  ActivePlan,
  CampaignSummary,
  Finding,
  NetworkDoc,
  ReadingSubmission,
} from './model';

export type Phase =
  | 'loading'
  | 'active'       // plan shown, waiting for readings
  | 'submitting'
  | 'complete'
  | 'conflict'     // stale version: prompt the operator to refresh
  | 'inconsistent' // readings rejected: re-measure guidance
  | 'error';

export interface ReadingEntry {
  edgeId: number;
  point: string;
  magnitude: number | null;
  direction: FlowDirection;
}

function entryKey(edgeId: number, point: string): string {
  return `${edgeId}|${point}`;
}

/**
 * Client-side session for one campaign.  Holds no authoritative state:
 * every transition round-trips through the service, and the rendered
 * candidate always comes from the last server response.
 */
export class CampaignViewModel {
  phase: Phase = 'loading';
  summary: CampaignSummary | null = null;
  plan: ActivePlan | null = null;
  leakySet: Finding[] = [];
  message = '';
  private entries = new Map<string, ReadingEntry>();

  constructor(private api: CampaignApi, readonly campaignId: string,
              readonly network: NetworkDoc) {}

  get version(): number {
    return this.summary ? this.summary.version : 0;
  }

  get totalCost(): number {
    return this.summary ? this.summary.total_cost : 0;
  }

  get stage(): number {
    return this.summary ? this.summary.stage : 0;
  }

  get candidateNodes(): number[] {
    return this.summary ? this.summary.candidate_nodes : [];
  }

  get candidateSize(): number {
    return this.summary ? this.summary.candidate_size : 0;
  }

  /** Fetch the latest summary and plan; clears any conflict. */
  async refresh(): Promise<void> {
    this.phase = 'loading';
    try {
      this.summary = await this.api.getCampaign(this.campaignId);
      const plan = await this.api.getPlan(this.campaignId);
      if (plan.status === 'complete') {
        this.plan = null;
        this.leakySet = plan.leaky_set;
        this.phase = 'complete';
        this.message = '';
        return;
      }
      this.plan = plan;
      this.leakySet = [];
      this.syncEntries(plan);
      this.phase = 'active';
      this.message = '';
    } catch (err) {
      this.phase = 'error';
      this.message = err instanceof Error ? err.message : String(err);
    }
  }

  private syncEntries(plan: ActivePlan): void {
    const wanted = new Set(
      plan.required_readings.map((r) => entryKey(r.edge_id, r.point)));
    for (const key of [...this.entries.keys()]) {
      if (!wanted.has(key)) {
        this.entries.delete(key);
      }
    }
    for (const r of plan.required_readings) {
      const key = entryKey(r.edge_id, r.point);
      if (!this.entries.has(key)) {
        this.entries.set(key, {
          edgeId: r.edge_id,
          point: r.point,
          magnitude: null,
          direction: 'i-to-j',
        });
      }
    }
  }

  readingEntries(): ReadingEntry[] {
    if (!this.plan) {
      return [];
    }
    return this.plan.required_readings.map(
      (r) => this.entries.get(entryKey(r.edge_id, r.point))!);
  }

  setReading(edgeId: number, point: string, magnitude: number | null,
             direction: FlowDirection): void {
    const entry = this.entries.get(entryKey(edgeId, point));
    if (!entry) {
      throw new Error(`no required reading for edge ${edgeId} at ${point}`);
    }
    entry.magnitude = magnitude;
    entry.direction = direction;
  }

  /** All required fields filled with finite non-negative magnitudes. */
  get canSubmit(): boolean {
    if (this.phase !== 'active' || !this.plan) {
      return false;
    }
    return this.readingEntries().every(
      (e) => e.magnitude !== null && Number.isFinite(e.magnitude)
        && e.magnitude >= 0);
  }

  private payload(): ReadingSubmission[] {
    return this.readingEntries().map((e) => ({
      edge_id: e.edgeId,
      point: e.point,
      value: toSignedValue(e.magnitude!, e.direction),
    }));
  }

  /**
   * Submit the entered readings against the displayed version.  On a stale
   * version the phase flips to 'conflict' so the UI can prompt a refresh;
   * on arithmetically inconsistent readings the server keeps its state and
   * the phase flips to 'inconsistent' (re-measure).
   */
  async submit(): Promise<void> {
    if (!this.canSubmit || !this.summary) {
      throw new Error('cannot submit: required readings missing');
    }
    this.phase = 'submitting';
    try {
      const updated = await this.api.submitReadings(
        this.campaignId, this.summary.version, this.payload());
      this.summary = updated;
      this.entries.clear();
      if (updated.status === 'complete') {
        this.leakySet = updated.leaky_set;
        this.phase = 'complete';
        this.message = '';
        return;
      }
      const plan = await this.api.getPlan(this.campaignId);
      if (plan.status === 'complete') {
        this.leakySet = plan.leaky_set;
        this.phase = 'complete';
        return;
      }
      this.plan = plan;
      this.syncEntries(plan);
      this.phase = 'active';
      this.message = '';
    } catch (err) {
      if (err instanceof ConflictError) {
        this.phase = 'conflict';
        this.message =
          `Someone else updated this campaign (server version ` +
          `${err.actualVersion}, you had ${err.expectedVersion}). ` +
          `Refresh to load the latest plan.`;
        return;
      }
      if (err instanceof ApiError && err.status === 422) {
        this.phase = 'inconsistent';
        this.message =
          'The readings do not add up: no consistent leak location ' +
          'explains them. Nothing was recorded — re-measure and try again.';
        return;
      }
      this.phase = 'error';
      this.message = err instanceof Error ? err.message : String(err);
    }
  }

  /** Recover from 'conflict'/'inconsistent'/'error' by reloading. */
  async acceptRefresh(): Promise<void> {
    await this.refresh();
  }
}
