// End-to-end: drive the real campaign service through the 4-node demo.
// The operator enters two stage readings; the candidate region shrinks
// 4 -> 2 -> leak found, with total cost 2.  Requires python3 with the
// backend package installed (skipped otherwise).
import { ChildProcess, spawn } from 'node:child_process';
import { mkdtempSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { CampaignApi, ConflictError } from '../src/api';
import { NetworkDoc } from '../src/model';
import { CampaignViewModel } from '../src/viewmodel';

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

// P4 path with the supply already raised for a 1-unit leak at node 3.
// True flows: edge 0 carries 4, edge 1 carries 3, edge 2 carries 2.
const network: NetworkDoc = {
  nodes: [
    { id: 0, kind: 'source', boundary_flow: 4 },
    { id: 1, kind: 'demand', boundary_flow: -1 },
    { id: 2, kind: 'demand', boundary_flow: -1 },
    { id: 3, kind: 'demand', boundary_flow: -1 },
  ],
  edges: [0, 1, 2].map((k) => ({
    id: k, i: k, j: k + 1, query_cost: 1,
    has_sensor: false, has_valve: false,
  })),
};

// what the field operator would actually measure, by edge id
const trueFlows: Record<number, number> = { 0: 4, 1: 3, 2: 2 };

let server: ChildProcess | null = null;
let available = false;

async function waitForService(timeoutMs: number): Promise<boolean> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/campaigns`);
      if (res.ok) {
        return true;
      }
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  return false;
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), 'leakloc-e2e-'));
  server = spawn('python3', [
    '-c',
    'import sys, uvicorn; from leakloc.service import create_app; ' +
    `uvicorn.run(create_app(sys.argv[1]), host="127.0.0.1", port=${PORT}, ` +
    'log_level="error")',
    dataDir,
  ], { stdio: 'ignore' });
  available = await waitForService(15000);
}, 20000);

afterAll(() => {
  if (server) {
    server.kill();
  }
});

describe('campaign e2e (P4 demo)', () => {
  it('localizes the leak in two stages at cost 2', async (ctx) => {
    if (!available) return ctx.skip();
    const api = new CampaignApi(BASE);
    const created = await api.createCampaign(network, { method: 'ilp-lex' });
    expect(created.initial_imbalance).toBeCloseTo(1.0);

    const vm = new CampaignViewModel(api, created.campaign_id, network);
    await vm.refresh();
    expect(vm.phase).toBe('active');

    const candidateSizes = [vm.candidateSize];
    let guard = 0;
    while (vm.phase === 'active' && guard++ < 10) {
      for (const entry of vm.readingEntries()) {
        // operator reads the true flow; all flows run low-id -> high-id here
        vm.setReading(entry.edgeId, entry.point,
                      trueFlows[entry.edgeId], 'i-to-j');
      }
      expect(vm.canSubmit).toBe(true);
      await vm.submit();
      candidateSizes.push(vm.candidateSize);
    }

    expect(vm.phase).toBe('complete');
    expect(candidateSizes).toEqual([4, 2, 0]); // shrink, then solved
    expect(vm.leakySet).toEqual([{ type: 'node', node_id: 3 }]);
    expect(vm.totalCost).toBe(2);
  }, 30000);

  it('surfaces a stale submit as a refresh prompt', async (ctx) => {
    if (!available) return ctx.skip();
    const api = new CampaignApi(BASE);
    const created = await api.createCampaign(network, { method: 'ilp-lex' });

    const vmA = new CampaignViewModel(api, created.campaign_id, network);
    const vmB = new CampaignViewModel(api, created.campaign_id, network);
    await vmA.refresh();
    await vmB.refresh();

    for (const vm of [vmA, vmB]) {
      for (const entry of vm.readingEntries()) {
        vm.setReading(entry.edgeId, entry.point,
                      trueFlows[entry.edgeId], 'i-to-j');
      }
    }
    await vmA.submit();
    expect(vmA.phase).toBe('active'); // stage 2 of the demo

    await vmB.submit(); // same version vmA just consumed
    expect(vmB.phase).toBe('conflict');
    expect(vmB.message.toLowerCase()).toContain('refresh');

    // accepting the prompt reloads the authoritative state
    await vmB.acceptRefresh();
    expect(vmB.phase).toBe('active');
    expect(vmB.version).toBe(vmA.version);
    expect(vmB.candidateNodes).toEqual(vmA.candidateNodes);
  }, 30000);

  it('raw client reports conflicts with both versions', async (ctx) => {
    if (!available) return ctx.skip();
    const api = new CampaignApi(BASE);
    const created = await api.createCampaign(network);
    const plan = await api.getPlan(created.campaign_id);
    expect(plan.status).toBe('active');
    if (plan.status !== 'active') {
      return;
    }
    const readings = plan.required_readings.map((r) => ({
      edge_id: r.edge_id, point: r.point, value: trueFlows[r.edge_id],
    }));
    await api.submitReadings(created.campaign_id, created.version, readings);
    await expect(
      api.submitReadings(created.campaign_id, created.version, readings),
    ).rejects.toThrowError(ConflictError);
  }, 30000);
});
