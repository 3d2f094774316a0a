// Wire types for the campaign service HTTP+JSON API.
// All flow values are signed by the network convention: positive means
// flow from the lower-numbered endpoint (i) toward the higher one (j).

export interface NetworkNode {
  id: number;
  kind: 'source' | 'demand' | 'transmission' | 'artificial';
  boundary_flow: number;
  label?: string;
  xy?: [number, number];
}

export interface NetworkEdge {
  id: number;
  i: number;
  j: number;
  query_cost: number;
  has_sensor: boolean;
  has_valve: boolean;
  known_flow?: number;
}

export interface NetworkDoc {
  nodes: NetworkNode[];
  edges: NetworkEdge[];
}

export type Finding =
  | { type: 'node'; node_id: number }
  | { type: 'segment'; edge_id: number; lo: number; hi: number;
      magnitude: number | null };

export interface CampaignSummary {
  campaign_id: string;
  version: number;
  status: 'active' | 'complete';
  stage: number;
  total_cost: number;
  candidate_size: number;
  candidate_nodes: number[];
  candidate_edges: number[];
  leaky_set: Finding[];
  method: string;
  created: string;
  updated: string;
}

export interface PlanReading {
  edge_id: number;
  point: string; // "center" or "near:<node_id>"
}

export interface PlanKnown extends PlanReading {
  value: number;
}

export interface ActivePlan {
  status: 'active';
  version: number;
  stage: number;
  partition: {
    s_nodes: number[];
    sbar_nodes: number[];
    cut_edges: number[];
    cut_cost: number;
  };
  required_readings: PlanReading[];
  known_values: PlanKnown[];
  planned_cost: number;
}

export interface CompletePlan {
  status: 'complete';
  version: number;
  leaky_set: Finding[];
  total_cost: number;
}

export type Plan = ActivePlan | CompletePlan;

export interface CreateCampaignResponse {
  campaign_id: string;
  version: number;
  initial_imbalance: number;
}

export interface ReadingSubmission {
  edge_id: number;
  point: string;
  value: number;
}
