import { describePoint, directionLabels, FlowDirection } from './convert';
import { Layout, layoutNetwork } from './layout';
import { Finding } from './model';
import { CampaignViewModel } from './viewmodel';

const SVG_NS = 'http://www.w3.org/2000/svg';
const WIDTH = 800;
const HEIGHT = 520;

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, attrs: Record<string, string> = {},
    text = ''): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  return node;
}

function leakNodeIds(findings: Finding[]): Set<number> {
  return new Set(findings.filter((f) => f.type === 'node')
    .map((f) => (f as { node_id: number }).node_id));
}

function leakEdgeIds(findings: Finding[]): Set<number> {
  return new Set(findings.filter((f) => f.type === 'segment')
    .map((f) => (f as { edge_id: number }).edge_id));
}

/** SVG network view: candidate partition coloring + highlighted cut. */
export function renderGraph(vm: CampaignViewModel, layout: Layout):
    SVGElement {
  const net = vm.network;
  const svg = svgEl('svg', {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    width: String(WIDTH),
    height: String(HEIGHT),
    class: 'graph',
  });
  const candidate = new Set(vm.candidateNodes);
  const sSide = new Set(vm.plan ? vm.plan.partition.s_nodes : []);
  const cut = new Set(vm.plan ? vm.plan.partition.cut_edges : []);
  const leakNodes = leakNodeIds(vm.leakySet);
  const leakEdges = leakEdgeIds(vm.leakySet);

  for (const e of net.edges) {
    const a = layout.get(e.i);
    const b = layout.get(e.j);
    if (!a || !b) {
      continue; // candidate-only edge from a split pipe; no layout yet
    }
    let cls = 'edge';
    if (leakEdges.has(e.id)) {
      cls = 'edge leak';
    } else if (cut.has(e.id)) {
      cls = 'edge cut';
    } else if (!candidate.has(e.i) || !candidate.has(e.j)) {
      cls = vm.phase === 'complete' ? 'edge' : 'edge eliminated';
    }
    const line = svgEl('line', {
      x1: String(a.x), y1: String(a.y), x2: String(b.x), y2: String(b.y),
      class: cls, 'data-edge-id': String(e.id),
    });
    svg.appendChild(line);
  }

  for (const n of net.nodes) {
    const p = layout.get(n.id);
    if (!p) {
      continue;
    }
    let cls = 'node';
    if (leakNodes.has(n.id)) {
      cls = 'node leak';
    } else if (!candidate.has(n.id) && vm.phase !== 'complete') {
      cls = 'node eliminated';
    } else if (sSide.has(n.id)) {
      cls = 'node side-s';
    } else if (candidate.has(n.id)) {
      cls = 'node side-sbar';
    }
    const g = svgEl('g', { 'data-node-id': String(n.id) });
    g.appendChild(svgEl('circle', {
      cx: String(p.x), cy: String(p.y), r: n.kind === 'source' ? '11' : '8',
      class: cls,
    }));
    const label = svgEl('text', {
      x: String(p.x), y: String(p.y + 3.5),
      'text-anchor': 'middle', class: 'node-label',
    });
    label.textContent = n.label ?? String(n.id);
    g.appendChild(label);
    svg.appendChild(g);
  }
  return svg;
}

/** The per-stage measurement checklist: one form row per required reading. */
export function renderChecklist(vm: CampaignViewModel,
                                onChange: () => void): HTMLElement {
  const box = el('div', { class: 'checklist' });
  const plan = vm.plan;
  if (!plan) {
    return box;
  }
  box.appendChild(el('h3', {},
    `Stage ${plan.stage + 1}: measure ${plan.required_readings.length} ` +
    `flow(s), cost ${plan.planned_cost}`));

  for (const entry of vm.readingEntries()) {
    const row = el('div', { class: 'reading-row' });
    row.appendChild(el('label', {},
      describePoint(vm.network, entry.edgeId, entry.point)));

    const input = el('input', {
      type: 'number', min: '0', step: 'any', placeholder: 'magnitude',
      'data-edge-id': String(entry.edgeId), 'data-point': entry.point,
    }) as HTMLInputElement;
    if (entry.magnitude !== null) {
      input.value = String(entry.magnitude);
    }

    const dir = el('select', {}) as HTMLSelectElement;
    const labels = directionLabels(vm.network, entry.edgeId);
    for (const value of ['i-to-j', 'j-to-i'] as FlowDirection[]) {
      const opt = el('option', { value }, labels[value]);
      dir.appendChild(opt);
    }
    dir.value = entry.direction;

    const update = () => {
      const raw = input.value.trim();
      const mag = raw === '' ? null : Number(raw);
      vm.setReading(entry.edgeId, entry.point,
                    mag !== null && Number.isFinite(mag) ? mag : null,
                    dir.value as FlowDirection);
      onChange();
    };
    input.addEventListener('input', update);
    dir.addEventListener('change', update);
    row.appendChild(input);
    row.appendChild(dir);
    box.appendChild(row);
  }

  if (plan.known_values.length > 0) {
    box.appendChild(el('h4', {}, 'Already known (free)'));
    for (const kv of plan.known_values) {
      const row = el('div', { class: 'reading-row known' });
      row.appendChild(el('label', {},
        describePoint(vm.network, kv.edge_id, kv.point)));
      const input = el('input', { type: 'number', disabled: '' },
        '') as HTMLInputElement;
      input.value = String(kv.value);
      row.appendChild(input);
      box.appendChild(row);
    }
  }
  return box;
}

function describeFinding(f: Finding): string {
  if (f.type === 'node') {
    return `leak at node ${f.node_id}`;
  }
  const span = `${(f.lo * 100).toFixed(0)}–${(f.hi * 100).toFixed(0)}%`;
  const mag = f.magnitude === null ? '' : ` (≈${f.magnitude} units)`;
  return `leak on pipe ${f.edge_id}, ${span} from the lower endpoint${mag}`;
}

/** Full campaign panel: graph, ticker, checklist or result, prompts. */
export function renderCampaign(root: HTMLElement, vm: CampaignViewModel):
    void {
  root.textContent = '';
  const layout = layoutNetwork(vm.network, WIDTH, HEIGHT);

  const ticker = el('div', { class: 'ticker' });
  ticker.appendChild(el('span', { class: 'cost', 'data-role': 'cost' },
    `cost ${vm.totalCost}`));
  ticker.appendChild(el('span', { 'data-role': 'stage' },
    `stage ${vm.stage}`));
  ticker.appendChild(el('span', { 'data-role': 'candidate' },
    `candidate sites: ${vm.candidateSize}`));
  ticker.appendChild(el('span', { 'data-role': 'version' },
    `v${vm.version}`));
  root.appendChild(ticker);

  root.appendChild(renderGraph(vm, layout));

  if (vm.phase === 'conflict') {
    const toast = el('div', { class: 'toast conflict', role: 'alert' });
    toast.appendChild(el('p', {}, vm.message));
    const btn = el('button', { 'data-role': 'refresh' }, 'Refresh');
    btn.addEventListener('click', () => {
      void vm.acceptRefresh().then(() => renderCampaign(root, vm));
    });
    toast.appendChild(btn);
    root.appendChild(toast);
    return;
  }

  if (vm.phase === 'inconsistent' || vm.phase === 'error') {
    const toast = el('div', { class: `toast ${vm.phase}`, role: 'alert' });
    toast.appendChild(el('p', {}, vm.message));
    const btn = el('button', { 'data-role': 'refresh' }, 'Back to plan');
    btn.addEventListener('click', () => {
      void vm.acceptRefresh().then(() => renderCampaign(root, vm));
    });
    toast.appendChild(btn);
    root.appendChild(toast);
    return;
  }

  if (vm.phase === 'complete') {
    const done = el('div', { class: 'result' });
    done.appendChild(el('h3', {}, 'Leak localized'));
    for (const f of vm.leakySet) {
      done.appendChild(el('p', { class: 'finding' }, describeFinding(f)));
    }
    done.appendChild(el('p', {}, `Total measurement cost: ${vm.totalCost}`));
    root.appendChild(done);
    return;
  }

  const submit = el('button', { 'data-role': 'submit' }, 'Submit readings');
  const sync = () => {
    submit.toggleAttribute('disabled', !vm.canSubmit);
  };
  submit.addEventListener('click', () => {
    void vm.submit().then(() => renderCampaign(root, vm));
  });
  root.appendChild(renderChecklist(vm, sync));
  root.appendChild(submit);
  sync();
}
