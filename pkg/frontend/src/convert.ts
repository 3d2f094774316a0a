import { NetworkDoc, NetworkEdge } from './model';

export type FlowDirection = 'i-to-j' | 'j-to-i';

/**
 * Convert an operator's magnitude + direction entry to the signed wire
 * convention (positive = flow from the lower- toward the higher-numbered
 * endpoint).  The operator never has to think about edge orientation.
 */
export function toSignedValue(magnitude: number,
                              direction: FlowDirection): number {
  if (!Number.isFinite(magnitude) || magnitude < 0) {
    throw new Error(`magnitude must be a non-negative number, got ${magnitude}`);
  }
  return direction === 'i-to-j' ? magnitude : -magnitude;
}

/** Split a signed value back into the operator's view. */
export function fromSignedValue(value: number):
    { magnitude: number; direction: FlowDirection } {
  return {
    magnitude: Math.abs(value),
    direction: value >= 0 ? 'i-to-j' : 'j-to-i',
  };
}

export function edgeById(net: NetworkDoc, edgeId: number): NetworkEdge {
  const edge = net.edges.find((e) => e.id === edgeId);
  if (!edge) {
    throw new Error(`edge ${edgeId} is not in the network`);
  }
  return edge;
}

/** Human label for a measurement point on an edge. */
export function describePoint(net: NetworkDoc, edgeId: number,
                              point: string): string {
  const edge = edgeById(net, edgeId);
  if (point === 'center') {
    return `pipe ${edgeId} (${edge.i}–${edge.j}), center`;
  }
  if (point.startsWith('near:')) {
    return `pipe ${edgeId} (${edge.i}–${edge.j}), near node ${point.slice(5)}`;
  }
  return `pipe ${edgeId}, ${point}`;
}

/** Direction labels for the entry form's toggle, in endpoint terms. */
export function directionLabels(net: NetworkDoc, edgeId: number):
    { 'i-to-j': string; 'j-to-i': string } {
  const edge = edgeById(net, edgeId);
  return {
    'i-to-j': `${edge.i} → ${edge.j}`,
    'j-to-i': `${edge.j} → ${edge.i}`,
  };
}
