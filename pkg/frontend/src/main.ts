import { CampaignApi } from './api';
import { CampaignSummary, NetworkDoc } from './model';
import { renderCampaign } from './render';
import { CampaignViewModel } from './viewmodel';

function $(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node;
}

async function openCampaign(api: CampaignApi, id: string): Promise<void> {
  const state = await api.getState(id);
  const network = state['network'] as NetworkDoc;
  const vm = new CampaignViewModel(api, id, network);
  await vm.refresh();
  renderCampaign($('campaign'), vm);
}

function renderList(api: CampaignApi, campaigns: CampaignSummary[]): void {
  const list = $('campaign-list');
  list.textContent = '';
  if (campaigns.length === 0) {
    list.appendChild(Object.assign(document.createElement('p'), {
      textContent: 'No campaigns yet — upload a network below.',
    }));
  }
  for (const c of campaigns) {
    const item = document.createElement('button');
    item.className = 'campaign-item';
    item.textContent =
      `${c.campaign_id.slice(0, 8)} · ${c.status} · stage ${c.stage} · ` +
      `cost ${c.total_cost}`;
    item.addEventListener('click', () => {
      void openCampaign(api, c.campaign_id);
    });
    list.appendChild(item);
  }
}

async function connect(): Promise<void> {
  const urlInput = $('server-url') as HTMLInputElement;
  const banner = $('banner');
  const api = new CampaignApi(urlInput.value);
  banner.textContent = '';
  try {
    const { campaigns } = await api.listCampaigns();
    renderList(api, campaigns);
  } catch {
    banner.textContent =
      `Cannot reach ${urlInput.value} — check the address and retry.`;
    return;
  }

  const fileInput = $('network-file') as HTMLInputElement;
  const createBtn = $('create-campaign') as HTMLButtonElement;
  createBtn.onclick = async () => {
    const file = fileInput.files && fileInput.files[0];
    if (!file) {
      banner.textContent = 'Choose a network JSON file first.';
      return;
    }
    try {
      const network = JSON.parse(await file.text()) as NetworkDoc;
      const created = await api.createCampaign(network);
      const { campaigns } = await api.listCampaigns();
      renderList(api, campaigns);
      await openCampaign(api, created.campaign_id);
    } catch (err) {
      banner.textContent = err instanceof Error ? err.message : String(err);
    }
  };
}

document.addEventListener('DOMContentLoaded', () => {
  ($('connect') as HTMLButtonElement).addEventListener('click', () => {
    void connect();
  });
  void connect();
});
