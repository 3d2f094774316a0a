// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from 'vitest';

import { CampaignApi } from '../src/api';
import {
  ActivePlan,
  CampaignSummary,
  Finding,
  NetworkDoc,
} from '../src/model';
import { renderCampaign } from '../src/render';
import { CampaignViewModel } from '../src/viewmodel';

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

function activeVm(): CampaignViewModel {
  const vm = new CampaignViewModel({} as CampaignApi, 'c1', network);
  vm.summary = {
    campaign_id: 'c1', version: 1, status: 'active', stage: 0,
    total_cost: 0, candidate_size: 4, candidate_nodes: [0, 1, 2, 3],
    candidate_edges: [0, 1, 2], leaky_set: [], method: 'ilp-gp',
    created: 't', updated: 't',
  } as CampaignSummary;
  vm.plan = {
    status: 'active', version: 1, stage: 0,
    partition: { s_nodes: [0, 1], sbar_nodes: [2, 3],
                 cut_edges: [1], cut_cost: 1 },
    required_readings: [{ edge_id: 1, point: 'center' }],
    known_values: [], planned_cost: 1,
  } as ActivePlan;
  (vm as unknown as { syncEntries: (p: ActivePlan) => void })
    .syncEntries(vm.plan);
  vm.phase = 'active';
  return vm;
}

describe('renderCampaign', () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="root"></div>';
    root = document.getElementById('root')!;
  });

  it('shows the cost/stage/candidate ticker', () => {
    renderCampaign(root, activeVm());
    expect(root.querySelector('[data-role=cost]')!.textContent)
      .toBe('cost 0');
    expect(root.querySelector('[data-role=stage]')!.textContent)
      .toBe('stage 0');
    expect(root.querySelector('[data-role=candidate]')!.textContent)
      .toContain('4');
    expect(root.querySelector('[data-role=version]')!.textContent)
      .toBe('v1');
  });

  it('highlights exactly the planned cut edges', () => {
    renderCampaign(root, activeVm());
    const cut = root.querySelectorAll('line.edge.cut');
    expect(cut).toHaveLength(1);
    expect(cut[0].getAttribute('data-edge-id')).toBe('1');
  });

  it('renders one input per required reading, submit disabled', () => {
    renderCampaign(root, activeVm());
    const inputs = root.querySelectorAll('input[type=number]');
    expect(inputs).toHaveLength(1);
    const submit = root.querySelector(
      'button[data-role=submit]') as HTMLButtonElement;
    expect(submit.hasAttribute('disabled')).toBe(true);
  });

  it('enables submit once the magnitude is typed', () => {
    const vm = activeVm();
    renderCampaign(root, vm);
    const input = root.querySelector(
      'input[type=number]') as HTMLInputElement;
    input.value = '3';
    input.dispatchEvent(new Event('input'));
    const submit = root.querySelector(
      'button[data-role=submit]') as HTMLButtonElement;
    expect(submit.hasAttribute('disabled')).toBe(false);
    expect(vm.canSubmit).toBe(true);
  });

  it('colors partition sides differently', () => {
    renderCampaign(root, activeVm());
    expect(root.querySelectorAll('circle.node.side-s')).toHaveLength(2);
    expect(root.querySelectorAll('circle.node.side-sbar')).toHaveLength(2);
  });

  it('shows a conflict toast with a refresh button', () => {
    const vm = activeVm();
    vm.phase = 'conflict';
    vm.message = 'Someone else updated this campaign. Refresh.';
    renderCampaign(root, vm);
    const toast = root.querySelector('.toast.conflict')!;
    expect(toast.textContent).toContain('Refresh');
    expect(toast.querySelector('button[data-role=refresh]')).toBeTruthy();
    // no reading inputs while the conflict is unresolved
    expect(root.querySelectorAll('input[type=number]')).toHaveLength(0);
  });

  it('renders findings and no inputs when complete', () => {
    const vm = activeVm();
    vm.phase = 'complete';
    vm.plan = null;
    vm.summary = { ...vm.summary!, status: 'complete', total_cost: 2,
                   candidate_size: 0, candidate_nodes: [] };
    vm.leakySet = [{ type: 'node', node_id: 3 } as Finding];
    renderCampaign(root, vm);
    expect(root.querySelector('.result')!.textContent)
      .toContain('leak at node 3');
    expect(root.querySelectorAll('input')).toHaveLength(0);
    expect(root.querySelectorAll('circle.node.leak')).toHaveLength(1);
  });
});
