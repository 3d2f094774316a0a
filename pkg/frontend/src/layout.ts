import { NetworkDoc } from './model';

export interface LayoutPoint {
  x: number;
  y: number;
}

export type Layout = Map<number, LayoutPoint>;

// Deterministic PRNG (mulberry32) so force-directed layouts are
// reproducible across sessions and in tests.
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function normalize(points: Layout, width: number, height: number,
                   pad: number): Layout {
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const p of points.values()) {
    minX = Math.min(minX, p.x); maxX = Math.max(maxX, p.x);
    minY = Math.min(minY, p.y); maxY = Math.max(maxY, p.y);
  }
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const out: Layout = new Map();
  for (const [id, p] of points) {
    out.set(id, {
      x: pad + ((p.x - minX) / spanX) * (width - 2 * pad),
      y: pad + ((p.y - minY) / spanY) * (height - 2 * pad),
    });
  }
  return out;
}

/**
 * Node positions for rendering: file coordinates when every node has them,
 * otherwise a seeded force-directed embedding (Fruchterman–Reingold style,
 * fixed iteration count, fully deterministic).
 */
export function layoutNetwork(net: NetworkDoc, width = 800, height = 600,
                              seed = 1): Layout {
  const pad = 30;
  if (net.nodes.length === 0) {
    return new Map();
  }
  if (net.nodes.every((n) => n.xy !== undefined)) {
    const pts: Layout = new Map(
      net.nodes.map((n) => [n.id, { x: n.xy![0], y: -n.xy![1] }]));
    return normalize(pts, width, height, pad);
  }

  const rand = mulberry32(seed);
  const ids = net.nodes.map((n) => n.id);
  const pos: Layout = new Map(
    ids.map((id) => [id, { x: rand() * 2 - 1, y: rand() * 2 - 1 }]));
  if (ids.length === 1) {
    return normalize(pos, width, height, pad);
  }
  const k = Math.sqrt(4 / ids.length); // ideal edge length in unit space
  const iterations = 200;
  for (let iter = 0; iter < iterations; iter++) {
    const temp = 0.1 * (1 - iter / iterations);
    const disp = new Map<number, LayoutPoint>(
      ids.map((id) => [id, { x: 0, y: 0 }]));
    for (let a = 0; a < ids.length; a++) {
      for (let b = a + 1; b < ids.length; b++) {
        const pa = pos.get(ids[a])!, pb = pos.get(ids[b])!;
        let dx = pa.x - pb.x, dy = pa.y - pb.y;
        let d2 = dx * dx + dy * dy;
        if (d2 < 1e-8) { dx = 1e-4; dy = 1e-4; d2 = 2e-8; }
        const f = (k * k) / d2; // repulsion
        const da = disp.get(ids[a])!, db = disp.get(ids[b])!;
        da.x += dx * f; da.y += dy * f;
        db.x -= dx * f; db.y -= dy * f;
      }
    }
    for (const e of net.edges) {
      const pa = pos.get(e.i)!, pb = pos.get(e.j)!;
      const dx = pa.x - pb.x, dy = pa.y - pb.y;
      const d = Math.sqrt(dx * dx + dy * dy) || 1e-4;
      const f = d / k; // attraction along edges
      const da = disp.get(e.i)!, db = disp.get(e.j)!;
      da.x -= (dx / d) * f * 0.05; da.y -= (dy / d) * f * 0.05;
      db.x += (dx / d) * f * 0.05; db.y += (dy / d) * f * 0.05;
    }
    for (const id of ids) {
      const p = pos.get(id)!, d = disp.get(id)!;
      const len = Math.sqrt(d.x * d.x + d.y * d.y) || 1;
      const step = Math.min(len, temp);
      p.x += (d.x / len) * step;
      p.y += (d.y / len) * step;
    }
  }
  return normalize(pos, width, height, pad);
}
