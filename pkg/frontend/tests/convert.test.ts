import { describe, expect, it } from 'vitest';

import {
  describePoint,
  directionLabels,
  fromSignedValue,
  toSignedValue,
} from '../src/convert';
import { NetworkDoc } from '../src/model';

const net: NetworkDoc = {
  nodes: [
    { id: 0, kind: 'source', boundary_flow: 4 },
    { id: 1, kind: 'demand', boundary_flow: -1, label: 'J1' },
    { id: 2, kind: 'demand', boundary_flow: -1 },
  ],
  edges: [
    { id: 0, i: 0, j: 1, query_cost: 1, has_sensor: false, has_valve: false },
    { id: 1, i: 1, j: 2, query_cost: 1, has_sensor: false, has_valve: false },
  ],
};

describe('signed-value conversion', () => {
  it('keeps i-to-j flow positive', () => {
    expect(toSignedValue(3, 'i-to-j')).toBe(3);
  });

  it('negates j-to-i flow', () => {
    expect(toSignedValue(3, 'j-to-i')).toBe(-3);
  });

  it('zero is direction-independent', () => {
    expect(toSignedValue(0, 'i-to-j')).toBe(0);
    expect(toSignedValue(0, 'j-to-i')).toBe(-0);
  });

  it('rejects negative magnitudes and NaN', () => {
    expect(() => toSignedValue(-1, 'i-to-j')).toThrow();
    expect(() => toSignedValue(NaN, 'i-to-j')).toThrow();
  });

  it('round-trips through the operator view', () => {
    for (const value of [2.5, -2.5, 0]) {
      const { magnitude, direction } = fromSignedValue(value);
      expect(toSignedValue(magnitude, direction)).toBe(value);
    }
  });
});

describe('labels', () => {
  it('describes center and near points', () => {
    expect(describePoint(net, 1, 'center')).toContain('center');
    expect(describePoint(net, 1, 'near:2')).toContain('near node 2');
  });

  it('direction toggle uses endpoint ids', () => {
    expect(directionLabels(net, 1)).toEqual({
      'i-to-j': '1 → 2',
      'j-to-i': '2 → 1',
    });
  });

  it('unknown edge throws', () => {
    expect(() => describePoint(net, 99, 'center')).toThrow();
  });
});
