"""Enumerative case studies: simulate a leak at every node (or every pipe)
and collect query-count statistics, plus the synthetic graph generators the
desk-scale studies run on."""

from __future__ import annotations

import csv
import io
import json
import random
import statistics
from dataclasses import dataclass, field

from .network import Edge, Network, Node, NodeKind
from .protocol import (LeakMode, LeakScenario, NodeSite, PipeSite,
                       PipeStrategy, run_protocol)


class StudyError(ValueError):
    pass


def summarize(counts: list[int]) -> dict[str, float]:
    """Summary statistics: sample std (n-1), smallest most-frequent mode,
    lower-middle median for even lengths."""
    if not counts:
        raise StudyError("cannot summarize an empty list")
    ordered = sorted(counts)
    freq: dict[int, int] = {}
    for c in ordered:
        freq[c] = freq.get(c, 0) + 1
    top = max(freq.values())
    mode = min(v for v, f in freq.items() if f == top)
    median = ordered[(len(ordered) - 1) // 2]
    std = statistics.stdev(counts) if len(counts) > 1 else 0.0
    return {"mean": statistics.fmean(counts), "median": median,
            "mode": mode, "max": max(counts), "std": std}


def network_stats(net: Network) -> dict[str, float]:
    degs = [net.degree(nid) for nid in net.node_ids]
    q = 2 * net.m / (net.n * (net.n - 1)) if net.n > 1 else 0.0
    return {"n": net.n, "m": net.m, "q": q,
            "mean_degree": sum(degs) / len(degs), "max_degree": max(degs)}


@dataclass(frozen=True)
class ScenarioOutcome:
    site: str
    query_count: int
    total_cost: float
    stage_count: int
    found: bool


@dataclass(frozen=True)
class StudyResult:
    per_scenario: tuple[ScenarioOutcome, ...]
    summary: dict[str, float]
    network_stats: dict[str, float]

    def to_dict(self) -> dict:
        return {"per_scenario": [vars(s) for s in self.per_scenario],
                "summary": self.summary, "network_stats": self.network_stats}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["site", "query_count", "total_cost", "stage_count",
                         "found"])
        for s in self.per_scenario:
            writer.writerow([s.site, s.query_count, s.total_cost,
                             s.stage_count, s.found])
        return buf.getvalue()

    def to_table(self, name: str = "network") -> str:
        s = self.summary
        header = f"{'Network':<16}{'mean':>8}{'median':>8}{'mode':>8}" \
                 f"{'max':>8}{'std':>8}"
        row = f"{name:<16}{s['mean']:>8.2f}{s['median']:>8}{s['mode']:>8}" \
              f"{s['max']:>8}{s['std']:>8.2f}"
        return header + "\n" + row


def balance_supply(net: Network) -> Network:
    """Distribute total consumption over the source nodes so the network
    balances exactly (used for benchmark files that ship without supply
    rates)."""
    from dataclasses import replace
    sources = sorted((nd for nd in net.nodes if nd.kind is NodeKind.SOURCE),
                     key=lambda nd: nd.id)
    if not sources:
        raise StudyError("network has no source nodes")
    consumption = sum(-nd.boundary_flow for nd in net.nodes
                      if nd.boundary_flow < 0)
    production = sum(nd.boundary_flow for nd in net.nodes
                     if nd.boundary_flow > 0)
    deficit = consumption - production
    share = deficit / len(sources)
    nodes = [replace(nd, boundary_flow=nd.boundary_flow + share)
             if nd.kind is NodeKind.SOURCE else nd for nd in net.nodes]
    return Network(nodes, net.edges)


def enumerative_study(net: Network, method: str = "ilp-gp",
                      gamma: float = 0.1, delta: int = 1,
                      mode: LeakMode = LeakMode.NODE,
                      pipe_strategy: PipeStrategy = PipeStrategy.CENTER,
                      leak_magnitude: float = 1.0,
                      pipe_fraction: float = 0.5) -> StudyResult:
    """One protocol run per candidate leak site, with partition reuse.

    The partitioner only depends on topology, so the bisections computed
    for one scenario are reused verbatim for every other.
    """
    if not net.is_connected():
        raise StudyError("study networks must be connected")
    mode = LeakMode(mode)
    cache: dict = {}
    outcomes = []
    if mode is LeakMode.NODE:
        sites = [(f"node:{nid}", NodeSite(nid)) for nid in net.node_ids]
    else:
        sites = [(f"pipe:{eid}@{pipe_fraction:g}",
                  PipeSite(eid, pipe_fraction)) for eid in net.edge_ids]
    for name, site in sites:
        scenario = LeakScenario(((site, leak_magnitude),))
        result = run_protocol(net, scenario=scenario, method=method,
                              gamma=gamma, delta=delta, mode=mode,
                              pipe_strategy=pipe_strategy, cache=cache)
        found = _site_found(site, result.leaky_set)
        outcomes.append(ScenarioOutcome(
            site=name, query_count=len([r for r in result.query_log
                                        if r.cost_charged > 0]),
            total_cost=result.total_cost, stage_count=result.stages,
            found=found))
    counts = [o.query_count for o in outcomes]
    return StudyResult(per_scenario=tuple(outcomes),
                       summary=summarize(counts),
                       network_stats=network_stats(net))


def _site_found(site, findings) -> bool:
    from .protocol import NodeFinding, SegmentFinding
    for f in findings:
        if isinstance(site, NodeSite) and isinstance(f, NodeFinding) \
                and f.node_id == site.node_id:
            return True
        if isinstance(site, PipeSite) and isinstance(f, SegmentFinding) \
                and f.edge_id == site.edge_id and f.covers(site.fraction):
            return True
    return False


# -- generators ------------------------------------------------------------


def _with_supply(n_nodes: int, edges: list[tuple[int, int]],
                 costs: dict[tuple[int, int], float] | None = None) -> Network:
    """One source at node 0 balancing a unit demand at every other node."""
    nodes = [Node(id=0, kind=NodeKind.SOURCE, boundary_flow=float(n_nodes - 1))]
    nodes += [Node(id=i, kind=NodeKind.DEMAND, boundary_flow=-1.0)
              for i in range(1, n_nodes)]
    out = []
    for k, (a, b) in enumerate(edges):
        i, j = min(a, b), max(a, b)
        cost = 1.0 if costs is None else costs[(a, b)]
        out.append(Edge(id=k, i=i, j=j, query_cost=cost))
    return Network(nodes, out)


def generate_graph(kind: str, *, n: int | None = None, rows: int | None = None,
                   cols: int | None = None, p: float = 0.1,
                   clique: int = 5, tail: int = 5,
                   seed: int = 0) -> Network:
    """Deterministic synthetic networks with unit costs and balanced supply."""
    if kind == "path":
        if n is None or n < 2:
            raise StudyError("path needs n >= 2")
        return _with_supply(n, [(i, i + 1) for i in range(n - 1)])
    if kind == "cycle":
        if n is None or n < 3:
            raise StudyError("cycle needs n >= 3")
        return _with_supply(n, [(i, (i + 1) % n) for i in range(n)])
    if kind == "grid":
        if rows is None or cols is None or rows < 1 or cols < 1 \
                or rows * cols < 2:
            raise StudyError("grid needs rows, cols with at least 2 cells")
        idx = lambda r, c: r * cols + c
        edges = []
        for r in range(rows):
            for c in range(cols):
                if c + 1 < cols:
                    edges.append((idx(r, c), idx(r, c + 1)))
                if r + 1 < rows:
                    edges.append((idx(r, c), idx(r + 1, c)))
        return _with_supply(rows * cols, edges)
    if kind == "lollipop":
        if clique < 3 or tail < 1:
            raise StudyError("lollipop needs clique >= 3 and tail >= 1")
        edges = [(a, b) for a in range(clique) for b in range(a + 1, clique)]
        prev = clique - 1
        for t in range(tail):
            edges.append((prev, clique + t))
            prev = clique + t
        return _with_supply(clique + tail, edges)
    if kind == "random-connected":
        if n is None or n < 2:
            raise StudyError("random-connected needs n >= 2")
        rng = random.Random(seed)
        edges = set()
        # random spanning tree first, so connectivity never depends on p
        order = list(range(n))
        rng.shuffle(order)
        for k in range(1, n):
            a = order[k]
            b = order[rng.randrange(k)]
            edges.add((min(a, b), max(a, b)))
        for a in range(n):
            for b in range(a + 1, n):
                if (a, b) not in edges and rng.random() < p:
                    edges.add((a, b))
        return _with_supply(n, sorted(edges))
    raise StudyError(f"unknown graph kind {kind!r}")
