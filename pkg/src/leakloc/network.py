"""Graph model for flow networks: nodes, pipes, and the standard matrix views.

The network is undirected, but every edge carries a fixed sign convention
(the lower-numbered endpoint is the positive end), so a signed flow value on
an edge is unambiguous.  All matrix constructions index nodes densely in
ascending id order and edges in ascending edge-id order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp


class NetworkError(ValueError):
    """Malformed network data (bad ids, dangling endpoints, invalid flows)."""


class ParseError(NetworkError):
    """Network file could not be parsed; carries line information when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NodeKind(str, Enum):
    SOURCE = "source"
    DEMAND = "demand"
    TRANSMISSION = "transmission"
    ARTIFICIAL = "artificial"


@dataclass(frozen=True)
class Node:
    """A junction in the network.

    boundary_flow is signed: positive means supply into the network,
    negative means consumption out of it.
    """

    id: int
    kind: NodeKind = NodeKind.TRANSMISSION
    boundary_flow: float = 0.0
    label: str | None = None
    xy: tuple[float, float] | None = None


@dataclass(frozen=True)
class Edge:
    """A pipe between nodes ``i`` and ``j`` with ``i < j``.

    Positive flow on the edge means flow from i toward j.  ``known_flow``
    is set when a permanent sensor exists; it is the signed flow at the
    edge's reference point.
    """

    id: int
    i: int
    j: int
    query_cost: float = 1.0
    has_sensor: bool = False
    has_valve: bool = False
    known_flow: float | None = None

    def __post_init__(self):
        if self.i == self.j:
            raise NetworkError(f"edge {self.id}: self-loop at node {self.i}")
        if self.i > self.j:
            raise NetworkError(f"edge {self.id}: endpoints must satisfy i < j")
        if self.query_cost < 0:
            raise NetworkError(f"edge {self.id}: negative query cost")
        if self.has_sensor and self.known_flow is None:
            raise NetworkError(f"edge {self.id}: sensor edge without known flow")

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.i, self.j)

    def other(self, node_id: int) -> int:
        if node_id == self.i:
            return self.j
        if node_id == self.j:
            return self.i
        raise NetworkError(f"node {node_id} is not an endpoint of edge {self.id}")


class Network:
    """Immutable undirected network with signed-edge convention.

    Nodes and edges are addressed by their stable external ids; matrix
    operations use a dense internal index (ascending id order).
    """

    def __init__(self, nodes: Iterable[Node], edges: Iterable[Edge],
                 strict_kinds: bool = True):
        node_list = sorted(nodes, key=lambda nd: nd.id)
        edge_list = sorted(edges, key=lambda e: e.id)
        self._nodes: dict[int, Node] = {}
        for nd in node_list:
            if nd.id in self._nodes:
                raise NetworkError(f"duplicate node id {nd.id}")
            self._nodes[nd.id] = nd
        self._edges: dict[int, Edge] = {}
        for e in edge_list:
            if e.id in self._edges:
                raise NetworkError(f"duplicate edge id {e.id}")
            if e.i not in self._nodes or e.j not in self._nodes:
                missing = e.i if e.i not in self._nodes else e.j
                raise NetworkError(
                    f"edge {e.id}: dangling endpoint {missing}")
            self._edges[e.id] = e
        if strict_kinds:
            for nd in node_list:
                if nd.kind in (NodeKind.TRANSMISSION, NodeKind.ARTIFICIAL) \
                        and nd.boundary_flow != 0.0:
                    raise NetworkError(
                        f"node {nd.id}: {nd.kind.value} node must have zero "
                        f"boundary flow, got {nd.boundary_flow}")
                if nd.kind is NodeKind.SOURCE and nd.boundary_flow < 0.0:
                    raise NetworkError(
                        f"node {nd.id}: source node with negative supply")
                if nd.kind is NodeKind.DEMAND and nd.boundary_flow > 0.0:
                    raise NetworkError(
                        f"node {nd.id}: demand node with positive supply")
        self._index = {nid: k for k, nid in enumerate(self._nodes)}
        self._adj: dict[int, tuple[int, ...]] = {nid: () for nid in self._nodes}
        adj_build: dict[int, list[int]] = {nid: [] for nid in self._nodes}
        for e in self._edges.values():
            adj_build[e.i].append(e.id)
            adj_build[e.j].append(e.id)
        self._adj = {nid: tuple(eids) for nid, eids in adj_build.items()}

    # -- basic accessors ---------------------------------------------------

    @property
    def n(self) -> int:
        return len(self._nodes)

    @property
    def m(self) -> int:
        return len(self._edges)

    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(self._nodes.values())

    @property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(self._edges.values())

    @property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(self._nodes)

    @property
    def edge_ids(self) -> tuple[int, ...]:
        return tuple(self._edges)

    def node(self, node_id: int) -> Node:
        return self._nodes[node_id]

    def edge(self, edge_id: int) -> Edge:
        return self._edges[edge_id]

    def has_node(self, node_id: int) -> bool:
        return node_id in self._nodes

    def has_edge(self, edge_id: int) -> bool:
        return edge_id in self._edges

    def index_of(self, node_id: int) -> int:
        return self._index[node_id]

    def incident_edges(self, node_id: int) -> tuple[int, ...]:
        return self._adj[node_id]

    def degree(self, node_id: int) -> int:
        return len(self._adj[node_id])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __repr__(self) -> str:
        return f"Network(n={self.n}, m={self.m})"

    # -- matrix views ------------------------------------------------------

    def incidence(self, weights: Mapping[int, float] | None = None) -> sp.csc_matrix:
        """Signed node-edge incidence matrix J (n x m), sparse.

        Column k for edge (i, j) with i < j has +1 at row i and -1 at row j.
        With ``weights`` the entries become +-w_k instead of +-1.
        """
        rows, cols, vals = [], [], []
        for k, e in enumerate(self._edges.values()):
            w = 1.0 if weights is None else float(weights[e.id])
            rows += [self._index[e.i], self._index[e.j]]
            cols += [k, k]
            vals += [w, -w]
        return sp.csc_matrix((vals, (rows, cols)), shape=(self.n, self.m))

    def incidence_dense(self) -> np.ndarray:
        """Dense integer J, used by small-scale oracles and golden tests."""
        J = np.zeros((self.n, self.m), dtype=int)
        for k, e in enumerate(self._edges.values()):
            J[self._index[e.i], k] = 1
            J[self._index[e.j], k] = -1
        return J

    def adjacency(self) -> sp.csr_matrix:
        rows, cols = [], []
        for e in self._edges.values():
            a, b = self._index[e.i], self._index[e.j]
            rows += [a, b]
            cols += [b, a]
        vals = np.ones(len(rows))
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    def laplacian(self, weights: Mapping[int, float] | None = None) -> sp.csr_matrix:
        """Graph Laplacian L = D - A, equal to J J^T (checked in tests)."""
        J = self.incidence(weights)
        return (J @ J.T).tocsr()

    def laplacian_dense(self) -> np.ndarray:
        """Dense integer L = D - A built directly, independent of J."""
        L = np.zeros((self.n, self.n), dtype=int)
        for e in self._edges.values():
            a, b = self._index[e.i], self._index[e.j]
            L[a, a] += 1
            L[b, b] += 1
            L[a, b] -= 1
            L[b, a] -= 1
        return L

    # -- structure ---------------------------------------------------------

    def connected_components(self) -> list[set[int]]:
        """Connected components as sets of node ids, ordered by smallest id."""
        seen: set[int] = set()
        comps: list[set[int]] = []
        for start in self._nodes:
            if start in seen:
                continue
            comp = {start}
            stack = [start]
            while stack:
                v = stack.pop()
                for eid in self._adj[v]:
                    u = self._edges[eid].other(v)
                    if u not in comp:
                        comp.add(u)
                        stack.append(u)
            seen |= comp
            comps.append(comp)
        return comps

    def is_connected(self) -> bool:
        return self.n > 0 and len(self.connected_components()) == 1

    def subgraph(self, keep: Iterable[int],
                 boundary_injections: Mapping[int, float] | None = None) -> "Network":
        """Induced subgraph on ``keep`` with extra source/sink terms.

        Every injection is added to the node's boundary flow; this is how a
        measured crossing flow is re-attached when an envelope is cut out of
        a larger network.
        """
        keep_set = set(keep)
        unknown = keep_set - set(self._nodes)
        if unknown:
            raise NetworkError(f"subgraph keeps unknown node(s) {sorted(unknown)}")
        injections = dict(boundary_injections or {})
        outside = set(injections) - keep_set
        if outside:
            raise NetworkError(
                f"injection at node(s) {sorted(outside)} outside the kept set")
        nodes = []
        for nid in keep_set:
            nd = self._nodes[nid]
            if nid in injections and injections[nid] != 0.0:
                nd = replace(nd, boundary_flow=nd.boundary_flow + injections[nid])
            nodes.append(nd)
        edges = [e for e in self._edges.values()
                 if e.i in keep_set and e.j in keep_set]
        # Injections can land on transmission nodes, so skip the kind check.
        return Network(nodes, edges, strict_kinds=False)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        nodes = []
        for nd in self.nodes:
            d = {"id": nd.id, "kind": nd.kind.value,
                 "boundary_flow": nd.boundary_flow}
            if nd.label is not None:
                d["label"] = nd.label
            if nd.xy is not None:
                d["xy"] = list(nd.xy)
            nodes.append(d)
        edges = []
        for e in self.edges:
            d = {"id": e.id, "i": e.i, "j": e.j, "query_cost": e.query_cost,
                 "has_sensor": e.has_sensor, "has_valve": e.has_valve}
            if e.known_flow is not None:
                d["known_flow"] = e.known_flow
            edges.append(d)
        return {"nodes": nodes, "edges": edges}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


# -- loading ---------------------------------------------------------------


def network_from_dict(doc: Mapping, strict_kinds: bool = True) -> Network:
    try:
        raw_nodes = doc["nodes"]
        raw_edges = doc["edges"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"missing top-level key: {exc}") from None
    nodes = []
    for nd in raw_nodes:
        try:
            kind = NodeKind(nd.get("kind", "transmission"))
        except ValueError:
            raise ParseError(f"node {nd.get('id')}: unknown kind {nd.get('kind')!r}")
        xy = tuple(nd["xy"]) if "xy" in nd and nd["xy"] is not None else None
        nodes.append(Node(id=int(nd["id"]), kind=kind,
                          boundary_flow=float(nd.get("boundary_flow", 0.0)),
                          label=nd.get("label"), xy=xy))
    edges = []
    for ed in raw_edges:
        a, b = int(ed["i"]), int(ed["j"])
        if a > b:
            a, b = b, a
        edges.append(Edge(id=int(ed["id"]), i=a, j=b,
                          query_cost=float(ed.get("query_cost", 1.0)),
                          has_sensor=bool(ed.get("has_sensor", False)),
                          has_valve=bool(ed.get("has_valve", False)),
                          known_flow=(float(ed["known_flow"])
                                      if ed.get("known_flow") is not None else None)))
    return Network(nodes, edges, strict_kinds=strict_kinds)


def load_network_json(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    return network_from_dict(doc)


_INP_EDGE_SECTIONS = {"PIPES", "PUMPS", "VALVES"}
_INP_KNOWN = {"TITLE", "JUNCTIONS", "RESERVOIRS", "TANKS", "PIPES", "PUMPS",
              "VALVES", "DEMANDS", "COORDINATES", "END"}


def load_network_inp(text: str, warn=None) -> Network:
    """Read the topology subset of an EPANET INP file.

    Only junctions/reservoirs/tanks, the link sections, base demands and
    coordinates are used; hydraulic attributes are ignored.  Node and link
    name strings become labels; ids are assigned densely in order of
    appearance.
    """
    section = None
    node_ids: dict[str, int] = {}
    nodes: dict[int, dict] = {}
    links: list[tuple[str, str, str, int]] = []  # (name, from, to, line)
    demands: dict[str, float] = {}
    coords: dict[str, tuple[float, float]] = {}

    def note(msg):
        if warn is not None:
            warn(msg)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("unterminated section header", line=lineno)
            section = line[1:-1].strip().upper()
            if section not in _INP_KNOWN:
                note(f"skipping unknown INP section [{section}]")
            continue
        if section is None or section not in _INP_KNOWN:
            continue
        tok = line.split()
        if section in ("JUNCTIONS", "RESERVOIRS", "TANKS"):
            name = tok[0]
            if name in node_ids:
                raise ParseError(f"duplicate node {name!r}", line=lineno)
            nid = len(node_ids)
            node_ids[name] = nid
            if section == "JUNCTIONS":
                demand = 0.0
                if len(tok) >= 3:
                    try:
                        demand = float(tok[2])
                    except ValueError:
                        raise ParseError(f"bad demand {tok[2]!r}", line=lineno)
                nodes[nid] = {"label": name, "demand": demand, "source": False}
            else:
                nodes[nid] = {"label": name, "demand": 0.0, "source": True}
        elif section in _INP_EDGE_SECTIONS:
            if len(tok) < 3:
                raise ParseError("link needs name and two endpoints", line=lineno)
            links.append((tok[0], tok[1], tok[2], lineno))
        elif section == "DEMANDS":
            if len(tok) < 2:
                raise ParseError("demand needs node and value", line=lineno)
            try:
                demands[tok[0]] = demands.get(tok[0], 0.0) + float(tok[1])
            except ValueError:
                raise ParseError(f"bad demand {tok[1]!r}", line=lineno)
        elif section == "COORDINATES":
            if len(tok) >= 3:
                try:
                    coords[tok[0]] = (float(tok[1]), float(tok[2]))
                except ValueError:
                    raise ParseError("bad coordinates", line=lineno)

    out_nodes = []
    for name, nid in node_ids.items():
        info = nodes[nid]
        demand = demands.get(name, info["demand"])
        if info["source"]:
            kind, flow = NodeKind.SOURCE, 0.0
        elif demand != 0.0:
            kind, flow = NodeKind.DEMAND, -abs(demand)
        else:
            kind, flow = NodeKind.TRANSMISSION, 0.0
        out_nodes.append(Node(id=nid, kind=kind, boundary_flow=flow,
                              label=name, xy=coords.get(name)))

    out_edges = []
    seen_links: set[str] = set()
    for k, (name, a, b, lineno) in enumerate(links):
        if name in seen_links:
            raise ParseError(f"duplicate link {name!r}", line=lineno)
        seen_links.add(name)
        if a not in node_ids or b not in node_ids:
            missing = a if a not in node_ids else b
            raise ParseError(f"link {name!r}: dangling endpoint {missing!r}",
                             line=lineno)
        i, j = sorted((node_ids[a], node_ids[b]))
        if i == j:
            raise ParseError(f"link {name!r}: self-loop", line=lineno)
        out_edges.append(Edge(id=k, i=i, j=j))
    return Network(out_nodes, out_edges)


def load_network(text: str, fmt: str = "custom-json", warn=None) -> Network:
    """Load a network from file content in the named format."""
    if fmt in ("custom-json", "json"):
        return load_network_json(text)
    if fmt in ("epanet-inp-subset", "inp"):
        return load_network_inp(text, warn=warn)
    raise ValueError(f"unknown network format {fmt!r}")
