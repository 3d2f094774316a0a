import {
  CampaignSummary,
  CreateCampaignResponse,
  NetworkDoc,
  Plan,
  ReadingSubmission,
} from './model';

export class ApiError extends Error {
  constructor(message: string, readonly status: number,
              readonly body: unknown) {
    super(message);
  }
}

export class ConflictError extends ApiError {
  constructor(readonly expectedVersion: number,
              readonly actualVersion: number, body: unknown) {
    super(`version conflict: server is at ${actualVersion}`, 409, body);
  }
}

export interface CreateCampaignOptions {
  method?: string;
  gamma?: number;
  delta?: number;
  mode?: 'node' | 'pipe';
  multi_leak?: boolean;
  pipe_strategy?: 'center' | 'both-ends';
  force?: boolean;
}

/** Thin typed client for the campaign service. */
export class CampaignApi {
  constructor(private baseUrl: string,
              private fetchFn: typeof fetch = fetch) {
    this.baseUrl = baseUrl.replace(/\/$/, '');
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, {
      headers: { 'Content-Type': 'application/json' },
      ...init,
    });
    const body = await res.json().catch(() => null);
    if (res.status === 409 && body && body.status === 'conflict') {
      throw new ConflictError(body.expected_version, body.actual_version,
                              body);
    }
    if (!res.ok) {
      const detail = body && (body.detail ?? body);
      throw new ApiError(
        `request ${path} failed: ${res.status} ${JSON.stringify(detail)}`,
        res.status, body);
    }
    return body as T;
  }

  listCampaigns(): Promise<{ campaigns: CampaignSummary[] }> {
    return this.request('/campaigns');
  }

  createCampaign(network: NetworkDoc, options: CreateCampaignOptions = {}):
      Promise<CreateCampaignResponse> {
    return this.request('/campaigns', {
      method: 'POST',
      body: JSON.stringify({ network, ...options }),
    });
  }

  getCampaign(id: string): Promise<CampaignSummary> {
    return this.request(`/campaigns/${id}`);
  }

  getPlan(id: string): Promise<Plan> {
    return this.request(`/campaigns/${id}/plan`);
  }

  getState(id: string): Promise<Record<string, unknown>> {
    return this.request(`/campaigns/${id}/state`);
  }

  submitReadings(id: string, expectedVersion: number,
                 readings: ReadingSubmission[]):
      Promise<CampaignSummary & { applied_cost: number }> {
    return this.request(`/campaigns/${id}/readings`, {
      method: 'POST',
      body: JSON.stringify({
        expected_version: expectedVersion,
        readings,
      }),
    });
  }
}
