"""Recursive leak-localization campaigns.

A campaign repeatedly partitions the current candidate region with a
minimum-measurement-cost bisection, measures the crossing pipes, balances
both sides and keeps the leaky one, until the candidate is small enough.
Node leaks resolve to a node; pipe leaks resolve to a half-pipe segment via
artificial measurement nodes, or to a whole pipe with the two-ends
measurement strategy.

Simulated (oracle) readings are synthesized from conservation alone: a
spanning-tree flow assignment with the ground-truth leaks as extra sinks.
Any conservative assignment yields the same balance verdicts; the spanning
tree makes the logs deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

from .balance import (BalanceError, CrossingFlow, NoLeakDetected,
                      MultipleLeaksInSingleLeakMode, default_tolerance,
                      envelope_balance)
from .ilp import (BisectionProblem, Mode, Partition, PartitionError,
                  edge_weights, partition_for_side, solve_bisection)
from .network import Edge, Network, NetworkError, Node, NodeKind
from .spectral import spectral_bisect


class ProtocolError(ValueError):
    pass


class CampaignComplete(ProtocolError):
    """The campaign already resolved its leak(s); no further stage exists."""


class ReadingMismatch(ProtocolError):
    """Submitted readings do not cover the plan's required measurements."""


class LeakMode(str, Enum):
    NODE = "node"
    PIPE = "pipe"


class PipeStrategy(str, Enum):
    # first query of a pipe measures once at its center, introducing an
    # artificial node; segments are resolved by a later near-node reading
    CENTER = "center"
    # every queried pipe is measured near both end nodes at twice the cost,
    # deciding immediately whether the pipe itself is leaky
    BOTH_ENDS = "both-ends"


METHODS = ("ilp-gp", "ilp-lex", "spectral")


# -- leak scenarios --------------------------------------------------------


@dataclass(frozen=True)
class NodeSite:
    node_id: int


@dataclass(frozen=True)
class PipeSite:
    edge_id: int
    fraction: float  # position from endpoint i, in (0, 1)

    def __post_init__(self):
        if not (0.0 < self.fraction < 1.0):
            raise ProtocolError(
                f"pipe leak fraction must be in (0, 1), got {self.fraction}")


@dataclass(frozen=True)
class LeakScenario:
    locations: tuple[tuple[NodeSite | PipeSite, float], ...]

    def __post_init__(self):
        sites = [site for site, _ in self.locations]
        if len(set(sites)) != len(sites):
            raise ProtocolError("leak sites must be distinct")
        for _, mag in self.locations:
            if mag <= 0:
                raise ProtocolError(f"leak magnitude must be positive, got {mag}")

    @property
    def total_magnitude(self) -> float:
        return sum(mag for _, mag in self.locations)


@dataclass(frozen=True)
class NodeFinding:
    node_id: int


@dataclass(frozen=True)
class SegmentFinding:
    """A leak traced into part of a pipe: fractions (lo, hi] of ``edge_id``."""

    edge_id: int
    lo: float
    hi: float
    magnitude: float | None = None

    def covers(self, fraction: float) -> bool:
        return self.lo < fraction <= self.hi


Finding = NodeFinding | SegmentFinding


# -- measurement bookkeeping ----------------------------------------------


@dataclass(frozen=True)
class Point:
    """A measurement point on a pipe: its center or close to a node."""

    kind: str
    node_id: int | None = None

    @staticmethod
    def center() -> "Point":
        return Point("center")

    @staticmethod
    def near(node_id: int) -> "Point":
        return Point("near", node_id)

    @property
    def key(self) -> str:
        return "center" if self.kind == "center" else f"near:{self.node_id}"


@dataclass(frozen=True)
class FlowReading:
    edge_id: int
    point: Point
    value: float  # signed w.r.t. the edge's (i < j) convention
    cost_charged: float
    stage: int


@dataclass(frozen=True)
class SegmentInfo:
    """Maps a half-edge back onto its original pipe.

    The segment spans fractions [lo, hi] of the original edge; ``a_node``
    is its actual-node end (at fraction ``a_pos``), ``m_node`` the
    artificial end.  ``sign`` converts the half-edge's own (i < j) flow
    convention into the original edge's convention.
    """

    orig_edge_id: int
    lo: float
    hi: float
    a_node: int
    m_node: int
    a_pos: float
    sign: int

    @property
    def m_pos(self) -> float:
        return self.hi if self.a_pos == self.lo else self.lo


@dataclass(frozen=True)
class QueryPlan:
    partition: Partition
    required_readings: tuple[tuple[int, Point], ...]
    known_values: tuple[tuple[int, Point, float], ...]
    planned_cost: float


@dataclass(frozen=True)
class CampaignState:
    candidate: Network | None
    pending: tuple[Network, ...] = ()
    total_cost: float = 0.0
    query_log: tuple[FlowReading, ...] = ()
    leaky_set: tuple[Finding, ...] = ()
    stage: int = 0
    delta: int = 1
    mode: LeakMode = LeakMode.NODE
    pipe_strategy: PipeStrategy = PipeStrategy.CENTER
    multi_leak: bool = False
    tolerance: float = 1e-9
    use_sensors: bool = True
    use_valve_closures: bool = False
    version: int = 1
    segments: tuple[tuple[int, SegmentInfo], ...] = ()
    measured: tuple[tuple[int, str, float], ...] = ()  # (edge, point key, value)
    next_node_id: int = 0
    next_edge_id: int = 0

    @property
    def done(self) -> bool:
        return self.candidate is None

    def segment_info(self, edge_id: int) -> SegmentInfo | None:
        return dict(self.segments).get(edge_id)

    def measured_value(self, edge_id: int, point: Point) -> float | None:
        for eid, key, value in self.measured:
            if eid == edge_id and key == point.key:
                return value
        return None


def candidate_size(state: CampaignState, net: Network | None = None) -> int:
    """Number of remaining leak candidates: actual nodes plus, in center-split
    pipe mode, unresolved half-pipe segments."""
    net = state.candidate if net is None else net
    if net is None:
        return 0
    size = sum(1 for nd in net.nodes if nd.kind != NodeKind.ARTIFICIAL)
    if state.mode is LeakMode.PIPE and state.pipe_strategy is PipeStrategy.CENTER:
        seg_ids = dict(state.segments)
        size += sum(1 for e in net.edges if e.id in seg_ids)
    return size


def new_campaign(net: Network, delta: int = 1, mode: LeakMode = LeakMode.NODE,
                 multi_leak: bool = False,
                 pipe_strategy: PipeStrategy = PipeStrategy.CENTER,
                 tolerance: float | None = None,
                 use_sensors: bool = True,
                 use_valve_closures: bool = False) -> CampaignState:
    production = sum(nd.boundary_flow for nd in net.nodes if nd.boundary_flow > 0)
    if tolerance is None:
        tolerance = default_tolerance(production)
    return CampaignState(
        candidate=net, delta=delta, mode=LeakMode(mode),
        pipe_strategy=PipeStrategy(pipe_strategy), multi_leak=multi_leak,
        tolerance=tolerance, use_sensors=use_sensors,
        use_valve_closures=use_valve_closures,
        next_node_id=max(net.node_ids) + 1,
        next_edge_id=(max(net.edge_ids) + 1) if net.m else 1)


def whole_network_imbalance(net: Network) -> float:
    return envelope_balance(net).imbalance


# -- planning --------------------------------------------------------------


def _component_plan(state: CampaignState, net: Network) -> QueryPlan:
    """Split a disconnected candidate along its components at zero cost."""
    comps = sorted(net.connected_components(),
                   key=lambda c: (-len(c), min(c)))
    group_a: set[int] = set()
    group_b: set[int] = set()
    for comp in comps:
        if len(group_a) <= len(group_b):
            group_a |= comp
        else:
            group_b |= comp
    s, sbar = frozenset(group_a), frozenset(group_b)
    if len(s) > len(sbar) or (len(s) == len(sbar)
                              and tuple(sorted(sbar)) < tuple(sorted(s))):
        s, sbar = sbar, s
    part = Partition(s_nodes=s, sbar_nodes=sbar,
                     cut_edges=frozenset(), cut_cost=0.0)
    return QueryPlan(partition=part, required_readings=(),
                     known_values=(), planned_cost=0.0)


def _points_for_cut_edge(state: CampaignState, edge: Edge) -> list[Point]:
    if state.mode is LeakMode.NODE:
        return [Point.center()]
    if state.pipe_strategy is PipeStrategy.BOTH_ENDS:
        return [Point.near(edge.i), Point.near(edge.j)]
    info = state.segment_info(edge.id)
    if info is not None:
        return [Point.near(info.a_node)]
    return [Point.center()]


def plan_stage(state: CampaignState, method: str = "ilp-gp",
               gamma: float = 0.1, cache: dict | None = None) -> QueryPlan:
    """Choose the next partition of the candidate and the readings it needs."""
    if state.done:
        raise CampaignComplete("campaign is complete")
    net = state.candidate
    if candidate_size(state) <= state.delta:
        raise CampaignComplete(
            f"candidate size {candidate_size(state)} is within delta="
            f"{state.delta}; nothing left to plan")
    if not net.is_connected():
        return _component_plan(state, net)

    if method not in METHODS:
        raise ProtocolError(f"unknown method {method!r}; expected one of {METHODS}")
    key = None
    if cache is not None:
        key = (net.node_ids, net.edge_ids, method, round(gamma, 12))
        if key in cache:
            part = cache[key]
            return _plan_from_partition(state, part)
    weights = edge_weights(net, free_sensor_edges=state.use_sensors)
    mode = Mode.LEXICOGRAPHIC if method == "ilp-lex" else Mode.GOAL_PROGRAMMING
    prob = BisectionProblem(net=net, weights=weights, mode=mode, gamma=gamma)
    if method == "spectral":
        part = spectral_bisect(prob).partition
    else:
        part = solve_bisection(prob)
    if cache is not None:
        cache[key] = part
    return _plan_from_partition(state, part)


def _plan_from_partition(state: CampaignState, part: Partition) -> QueryPlan:
    net = state.candidate
    required: list[tuple[int, Point]] = []
    known: list[tuple[int, Point, float]] = []
    cost = 0.0
    for eid in sorted(part.cut_edges):
        e = net.edge(eid)
        for point in _points_for_cut_edge(state, e):
            prior = state.measured_value(eid, point)
            if prior is not None:
                known.append((eid, point, prior))
            elif state.use_sensors and e.has_sensor:
                known.append((eid, point, float(e.known_flow)))
            elif state.use_valve_closures and e.has_valve:
                known.append((eid, point, 0.0))
            else:
                required.append((eid, point))
                cost += e.query_cost
    return QueryPlan(partition=part, required_readings=tuple(required),
                     known_values=tuple(known), planned_cost=cost)


# -- advancing a stage -----------------------------------------------------


@dataclass
class _SideBuild:
    nodes: dict[int, Node]
    edges: dict[int, Edge]
    injections: dict[int, float]

    def inject(self, node_id: int, value: float):
        self.injections[node_id] = self.injections.get(node_id, 0.0) + value


def _start_side(net: Network, side: frozenset[int]) -> _SideBuild:
    nodes = {nid: net.node(nid) for nid in side}
    edges = {e.id: e for e in net.edges if e.i in side and e.j in side}
    return _SideBuild(nodes=nodes, edges=edges, injections={})


def _finish_side(build: _SideBuild, tolerance: float) -> Network:
    nodes = []
    for nid, nd in build.nodes.items():
        inj = build.injections.get(nid, 0.0)
        if inj:
            nd = replace(nd, boundary_flow=nd.boundary_flow + inj)
        nodes.append(nd)
    # drop fully-resolved measurement points left without any segment
    degree: dict[int, int] = {nid: 0 for nid in build.nodes}
    for e in build.edges.values():
        degree[e.i] += 1
        degree[e.j] += 1
    kept = [nd for nd in nodes
            if not (nd.kind is NodeKind.ARTIFICIAL and degree[nd.id] == 0
                    and abs(nd.boundary_flow) <= tolerance)]
    return Network(kept, build.edges.values(), strict_kinds=False)


def apply_readings(state: CampaignState, plan: QueryPlan,
                   readings: Sequence[FlowReading],
                   fork_order_s_first: bool = True) -> CampaignState:
    """Advance the campaign one stage with the measured crossing flows.

    Balances both sides of the plan's partition, replaces the candidate with
    the leaky side (forking in multi-leak mode), splits center-measured
    pipes with artificial nodes, and resolves queried half-pipe segments.
    """
    if state.done:
        raise CampaignComplete("campaign is complete")
    net = state.candidate
    required = set(plan.required_readings)
    supplied = {(r.edge_id, r.point) for r in readings}
    if supplied != required:
        missing = required - supplied
        extra = supplied - required
        raise ReadingMismatch(
            f"readings do not match the plan (missing={sorted(missing)}, "
            f"unexpected={sorted(extra)})")

    value_at: dict[tuple[int, str], float] = {}
    log: list[FlowReading] = []
    for r in readings:
        e = net.edge(r.edge_id)
        value_at[(r.edge_id, r.point.key)] = r.value
        log.append(FlowReading(r.edge_id, r.point, r.value,
                               cost_charged=e.query_cost, stage=state.stage))
    for eid, point, value in plan.known_values:
        value_at[(eid, point.key)] = value
        log.append(FlowReading(eid, point, value, cost_charged=0.0,
                               stage=state.stage))

    part = plan.partition
    side_s = _start_side(net, part.s_nodes)
    side_sbar = _start_side(net, part.sbar_nodes)
    segments = dict(state.segments)
    measured = dict(((eid, key), v) for eid, key, v in state.measured)
    measured.update(value_at)
    next_node = state.next_node_id
    next_edge = state.next_edge_id
    findings: list[Finding] = list(state.leaky_set)
    new_findings: list[Finding] = []

    def side_of(node_id: int) -> _SideBuild:
        return side_s if node_id in part.s_nodes else side_sbar

    for eid in sorted(part.cut_edges):
        e = net.edge(eid)
        info = segments.get(eid)
        if info is not None:
            # second measurement of a split pipe, close to the actual node
            v_near = value_at[(eid, Point.near(info.a_node).key)]
            v_m = state.measured_value(eid, Point.near(info.m_node))
            assert v_m is not None, "segment without a recorded center reading"
            magnitude = abs(v_near - v_m)
            if magnitude > state.tolerance:
                new_findings.append(SegmentFinding(
                    info.orig_edge_id, info.lo, info.hi, magnitude=magnitude))
            # either way the segment is resolved and leaves the candidate
            build_a = side_of(info.a_node)
            build_m = side_of(info.m_node)
            build_a.inject(info.a_node,
                           -v_near if info.a_node == e.i else v_near)
            build_m.inject(info.m_node,
                           -v_m if info.m_node == e.i else v_m)
            del segments[eid]
        elif state.mode is LeakMode.PIPE \
                and state.pipe_strategy is PipeStrategy.BOTH_ENDS:
            v_i = value_at[(eid, Point.near(e.i).key)]
            v_j = value_at[(eid, Point.near(e.j).key)]
            magnitude = abs(v_i - v_j)
            if magnitude > state.tolerance:
                new_findings.append(SegmentFinding(eid, 0.0, 1.0,
                                                   magnitude=magnitude))
            side_of(e.i).inject(e.i, -v_i)
            side_of(e.j).inject(e.j, v_j)
        elif state.mode is LeakMode.PIPE:
            # first measurement: split at the center with an artificial node
            v_c = value_at[(eid, Point.center().key)]
            m_id = next_node
            next_node += 1
            m_node = Node(id=m_id, kind=NodeKind.ARTIFICIAL)
            half_i = Edge(id=next_edge, i=e.i, j=m_id, query_cost=e.query_cost)
            half_j = Edge(id=next_edge + 1, i=e.j, j=m_id,
                          query_cost=e.query_cost)
            next_edge += 2
            segments[half_i.id] = SegmentInfo(
                orig_edge_id=eid, lo=0.0, hi=0.5, a_node=e.i, m_node=m_id,
                a_pos=0.0, sign=1)
            segments[half_j.id] = SegmentInfo(
                orig_edge_id=eid, lo=0.5, hi=1.0, a_node=e.j, m_node=m_id,
                a_pos=1.0, sign=-1)
            # the center value, restated in each half-edge's own convention
            measured[(half_i.id, Point.near(m_id).key)] = v_c
            measured[(half_j.id, Point.near(m_id).key)] = -v_c
            for half, actual in ((half_i, e.i), (half_j, e.j)):
                build = side_of(actual)
                build.nodes[m_id] = m_node
                build.edges[half.id] = half
                build.inject(m_id, -v_c if actual == e.i else v_c)
        else:
            v = value_at[(eid, Point.center().key)]
            side_of(e.i).inject(e.i, -v)
            side_of(e.j).inject(e.j, v)

    net_s = _finish_side(side_s, state.tolerance)
    net_sbar = _finish_side(side_sbar, state.tolerance)

    advanced = replace(
        state, total_cost=state.total_cost + plan.planned_cost,
        query_log=state.query_log + tuple(log), stage=state.stage + 1,
        version=state.version + 1, segments=tuple(sorted(segments.items())),
        measured=tuple(sorted((eid, key, v)
                              for (eid, key), v in measured.items())),
        next_node_id=next_node, next_edge_id=next_edge)

    if new_findings and not state.multi_leak:
        # single leak located inside a pipe: the campaign ends here
        return _settle(replace(advanced, candidate=None,
                               leaky_set=tuple(findings + new_findings)))

    imb_s = whole_network_imbalance(net_s)
    imb_sbar = whole_network_imbalance(net_sbar)
    leaky_sides = [(name, sub, imb)
                   for name, sub, imb in (("s", net_s, imb_s),
                                          ("sbar", net_sbar, imb_sbar))
                   if abs(imb) > state.tolerance]
    if not fork_order_s_first:
        leaky_sides = list(reversed(leaky_sides))

    if not leaky_sides and not new_findings:
        raise NoLeakDetected(
            f"both sides balance (S: {imb_s:g}, S-bar: {imb_sbar:g}) although "
            f"the parent region was leaky; measurements are inconsistent")
    if len(leaky_sides) > 1 and not state.multi_leak:
        raise MultipleLeaksInSingleLeakMode(
            f"both sides show an imbalance (S: {imb_s:g}, S-bar: {imb_sbar:g}) "
            f"under the single-leak assumption")

    findings += new_findings
    pending = list(advanced.pending)
    if leaky_sides:
        candidate = leaky_sides[0][1]
        pending = [sub for _, sub, _ in leaky_sides[1:]] + pending
    else:
        candidate = None
    return _settle(replace(advanced, candidate=candidate,
                           pending=tuple(pending),
                           leaky_set=tuple(findings)))


def _settle(state: CampaignState) -> CampaignState:
    """Finalize exhausted branches and pop the next pending one."""
    while True:
        if state.candidate is not None:
            if candidate_size(state) > state.delta:
                return state
            findings = _branch_findings(state, state.candidate)
            state = replace(state, candidate=None,
                            leaky_set=state.leaky_set + findings)
            continue
        if state.pending:
            state = replace(state, candidate=state.pending[0],
                            pending=state.pending[1:])
            continue
        return state


# public name: campaign creators settle the initial state the same way
settle = _settle


def _branch_findings(state: CampaignState,
                     net: Network) -> tuple[Finding, ...]:
    findings: list[Finding] = [
        NodeFinding(nd.id) for nd in net.nodes
        if nd.kind is not NodeKind.ARTIFICIAL]
    seg_map = dict(state.segments)
    for e in net.edges:
        info = seg_map.get(e.id)
        if info is not None:
            findings.append(SegmentFinding(info.orig_edge_id, info.lo, info.hi))
    return tuple(findings)


# -- half-pipe operations exposed individually -----------------------------


@dataclass(frozen=True)
class SegmentVerdict:
    leak_in_segment: bool
    magnitude: float


def split_pipe(state: CampaignState, edge_id: int,
               center_value: float) -> CampaignState:
    """Split a pipe at its measured center into two half-pipe candidates."""
    if state.mode is not LeakMode.PIPE:
        raise ProtocolError("pipes are split only in pipe-leak campaigns")
    if state.done:
        raise CampaignComplete("campaign is complete")
    net = state.candidate
    if not net.has_edge(edge_id):
        raise ProtocolError(f"edge {edge_id} is not part of the candidate")
    if state.segment_info(edge_id) is not None:
        raise ProtocolError(f"edge {edge_id} is already a half-pipe segment")
    e = net.edge(edge_id)
    m_id = state.next_node_id
    half_i = Edge(id=state.next_edge_id, i=e.i, j=m_id, query_cost=e.query_cost)
    half_j = Edge(id=state.next_edge_id + 1, i=e.j, j=m_id,
                  query_cost=e.query_cost)
    segments = dict(state.segments)
    segments[half_i.id] = SegmentInfo(edge_id, 0.0, 0.5, e.i, m_id, 0.0, 1)
    segments[half_j.id] = SegmentInfo(edge_id, 0.5, 1.0, e.j, m_id, 1.0, -1)
    measured = dict(((eid, key), v) for eid, key, v in state.measured)
    measured[(half_i.id, Point.near(m_id).key)] = center_value
    measured[(half_j.id, Point.near(m_id).key)] = -center_value
    nodes = list(net.nodes) + [Node(id=m_id, kind=NodeKind.ARTIFICIAL)]
    edges = [ed for ed in net.edges if ed.id != edge_id] + [half_i, half_j]
    return replace(
        state, candidate=Network(nodes, edges, strict_kinds=False),
        segments=tuple(sorted(segments.items())),
        measured=tuple(sorted((eid, key, v)
                              for (eid, key), v in measured.items())),
        next_node_id=m_id + 1, next_edge_id=state.next_edge_id + 2,
        version=state.version + 1)


def resolve_segment(state: CampaignState, edge_id: int,
                    near_value: float) -> SegmentVerdict:
    """Compare a near-node reading with the stored measurement-point flow."""
    info = state.segment_info(edge_id)
    if info is None:
        raise ProtocolError(f"edge {edge_id} is not a half-pipe segment")
    v_m = state.measured_value(edge_id, Point.near(info.m_node))
    if v_m is None:
        raise ProtocolError(
            f"segment {edge_id} has no recorded measurement-point flow")
    magnitude = abs(near_value - v_m)
    return SegmentVerdict(leak_in_segment=magnitude > state.tolerance,
                          magnitude=magnitude)


# -- state serialization ---------------------------------------------------


def _point_to_key(point: Point) -> str:
    return point.key


def _point_from_key(key: str) -> Point:
    if key == "center":
        return Point.center()
    if key.startswith("near:"):
        return Point.near(int(key.split(":", 1)[1]))
    raise ProtocolError(f"bad measurement point key {key!r}")


def _finding_to_dict(f: Finding) -> dict:
    if isinstance(f, NodeFinding):
        return {"type": "node", "node_id": f.node_id}
    return {"type": "segment", "edge_id": f.edge_id, "lo": f.lo, "hi": f.hi,
            "magnitude": f.magnitude}


def _finding_from_dict(d: Mapping) -> Finding:
    if d["type"] == "node":
        return NodeFinding(d["node_id"])
    return SegmentFinding(d["edge_id"], d["lo"], d["hi"], d.get("magnitude"))


def state_to_dict(state: CampaignState) -> dict:
    return {
        "candidate": state.candidate.to_dict() if state.candidate else None,
        "pending": [net.to_dict() for net in state.pending],
        "total_cost": state.total_cost,
        "query_log": [{"edge_id": r.edge_id, "point": r.point.key,
                       "value": r.value, "cost_charged": r.cost_charged,
                       "stage": r.stage} for r in state.query_log],
        "leaky_set": [_finding_to_dict(f) for f in state.leaky_set],
        "stage": state.stage, "delta": state.delta,
        "mode": state.mode.value, "pipe_strategy": state.pipe_strategy.value,
        "multi_leak": state.multi_leak, "tolerance": state.tolerance,
        "use_sensors": state.use_sensors,
        "use_valve_closures": state.use_valve_closures,
        "version": state.version,
        "segments": [[eid, vars(info)] for eid, info in state.segments],
        "measured": [list(entry) for entry in state.measured],
        "next_node_id": state.next_node_id,
        "next_edge_id": state.next_edge_id,
    }


def state_from_dict(doc: Mapping) -> CampaignState:
    from .network import network_from_dict

    def net(d):
        return network_from_dict(d, strict_kinds=False) if d else None

    return CampaignState(
        candidate=net(doc["candidate"]),
        pending=tuple(net(d) for d in doc["pending"]),
        total_cost=doc["total_cost"],
        query_log=tuple(FlowReading(r["edge_id"], _point_from_key(r["point"]),
                                    r["value"], r["cost_charged"], r["stage"])
                        for r in doc["query_log"]),
        leaky_set=tuple(_finding_from_dict(d) for d in doc["leaky_set"]),
        stage=doc["stage"], delta=doc["delta"], mode=LeakMode(doc["mode"]),
        pipe_strategy=PipeStrategy(doc["pipe_strategy"]),
        multi_leak=doc["multi_leak"], tolerance=doc["tolerance"],
        use_sensors=doc["use_sensors"],
        use_valve_closures=doc["use_valve_closures"],
        version=doc["version"],
        segments=tuple((eid, SegmentInfo(**info))
                       for eid, info in doc["segments"]),
        measured=tuple((eid, key, value)
                       for eid, key, value in doc["measured"]),
        next_node_id=doc["next_node_id"], next_edge_id=doc["next_edge_id"])


# -- oracle readings -------------------------------------------------------


class ScenarioOracle:
    """Synthesizes noiseless flow readings for a ground-truth leak scenario.

    Flows are any conservation-consistent assignment: non-tree edges carry
    zero, tree flows come from subtree surpluses of a BFS spanning tree on
    the network with leaky pipes subdivided at their leak points.
    """

    def __init__(self, net: Network, scenario: LeakScenario):
        self.net = net
        self.scenario = scenario
        for site, _ in scenario.locations:
            if isinstance(site, NodeSite) and not net.has_node(site.node_id):
                raise ProtocolError(f"leak at unknown node {site.node_id}")
            if isinstance(site, PipeSite) and not net.has_edge(site.edge_id):
                raise ProtocolError(f"leak on unknown edge {site.edge_id}")
        self._solve()

    def _solve(self):
        net = self.net
        node_leak: dict[int, float] = {}
        pipe_leaks: dict[int, list[tuple[float, float]]] = {}
        for site, mag in self.scenario.locations:
            if isinstance(site, NodeSite):
                node_leak[site.node_id] = node_leak.get(site.node_id, 0.0) + mag
            else:
                pipe_leaks.setdefault(site.edge_id, []).append(
                    (site.fraction, mag))
        for leaks in pipe_leaks.values():
            leaks.sort()

        # build the augmented graph: leaky pipes become chains through
        # virtual leak nodes
        next_id = max(net.node_ids) + 1
        demand: dict[int, float] = {
            nd.id: nd.boundary_flow - node_leak.get(nd.id, 0.0)
            for nd in net.nodes}
        adj: dict[int, list[tuple[int, tuple[int, int]]]] = {
            nid: [] for nid in net.node_ids}
        # chain pieces per leaky edge: piece p spans (t_p, t_{p+1}]
        self._chain: dict[int, list[tuple[int, int]]] = {}
        self._pipe_leaks = pipe_leaks
        arcs: list[tuple[int, int]] = []  # oriented (from, to)

        def add_arc(a: int, b: int) -> tuple[int, int]:
            arc = (a, b)
            arcs.append(arc)
            adj[a].append((b, arc))
            adj[b].append((a, arc))
            return arc

        for e in net.edges:
            if e.id not in pipe_leaks:
                self._chain[e.id] = [add_arc(e.i, e.j)]
                continue
            prev = e.i
            pieces = []
            for _t, g in pipe_leaks[e.id]:
                vnode = next_id
                next_id += 1
                demand[vnode] = -g
                adj[vnode] = []
                pieces.append(add_arc(prev, vnode))
                prev = vnode
            pieces.append(add_arc(prev, e.j))
            self._chain[e.id] = pieces

        total = sum(demand.values())
        if abs(total) > 1e-6 * max(1.0, sum(abs(v) for v in demand.values())):
            raise ProtocolError(
                f"scenario is not conservative: net imbalance {total:g} after "
                f"accounting for all leaks; adjust the supply first")

        # BFS spanning tree from the smallest node id, per component
        parent_arc: dict[int, tuple[int, int] | None] = {}
        order: list[int] = []
        for root in sorted(demand):
            if root in parent_arc:
                continue
            parent_arc[root] = None
            queue = [root]
            while queue:
                v = queue.pop(0)
                order.append(v)
                for u, arc in adj[v]:
                    if u not in parent_arc:
                        parent_arc[u] = arc
                        queue.append(u)

        flow: dict[tuple[int, int], float] = {arc: 0.0 for arc in arcs}
        subtree = dict(demand)
        for v in reversed(order):
            arc = parent_arc[v]
            if arc is None:
                continue
            a, b = arc
            if a == v:  # arc points v -> parent
                flow[arc] += subtree[v]
                subtree[b] = subtree.get(b, 0.0) + subtree[v]
            else:
                flow[arc] -= subtree[v]
                subtree[a] = subtree.get(a, 0.0) + subtree[v]
        self._flow = flow

    def reading(self, edge_id: int, position: float) -> float:
        """Signed flow (i -> j positive) at ``position`` along the edge.

        A leak at fraction t affects every position at or beyond t.
        """
        pieces = self._chain[edge_id]
        leaks = self._pipe_leaks.get(edge_id, [])
        idx = sum(1 for t, _g in leaks if position >= t)
        return self._flow[pieces[idx]]


def oracle_readings(oracle: ScenarioOracle, state: CampaignState,
                    plan: QueryPlan) -> list[FlowReading]:
    """Produce the plan's required readings from the ground-truth oracle."""
    readings = []
    net = state.candidate
    for eid, point in plan.required_readings:
        info = state.segment_info(eid)
        if info is None:
            if point.kind == "center":
                pos = 0.5
            else:
                e = net.edge(eid)
                pos = 0.0 if point.node_id == e.i else 1.0
            value = oracle.reading(eid, pos)
        else:
            pos = info.a_pos if point.node_id == info.a_node else info.m_pos
            value = info.sign * oracle.reading(info.orig_edge_id, pos)
        readings.append(FlowReading(eid, point, value, cost_charged=0.0,
                                    stage=state.stage))
    return readings


# -- whole-protocol driver -------------------------------------------------


def apply_scenario_supply(net: Network, scenario: LeakScenario) -> Network:
    """Raise the first source's supply by the total leak magnitude.

    The measured supply of a leaky steady-state network exceeds the billed
    consumption by exactly the leak; studies start from a balanced network
    and add the excess here.
    """
    sources = [nd for nd in net.nodes if nd.kind is NodeKind.SOURCE]
    if not sources:
        raise ProtocolError("network has no source node to carry the supply")
    target = min(sources, key=lambda nd: nd.id)
    nodes = [replace(nd, boundary_flow=nd.boundary_flow
                     + scenario.total_magnitude)
             if nd.id == target.id else nd for nd in net.nodes]
    return Network(nodes, net.edges)


@dataclass(frozen=True)
class ProtocolResult:
    leaky_set: tuple[Finding, ...]
    total_cost: float
    query_log: tuple[FlowReading, ...]
    stages: int
    state: CampaignState


def run_protocol(net: Network,
                 scenario: LeakScenario | None = None,
                 readings_callback: Callable[[CampaignState, QueryPlan],
                                             Sequence[FlowReading]] | None = None,
                 method: str = "ilp-gp", gamma: float = 0.1, delta: int = 1,
                 mode: LeakMode = LeakMode.NODE, multi_leak: bool = False,
                 pipe_strategy: PipeStrategy = PipeStrategy.CENTER,
                 supply_adjusted: bool = False,
                 cache: dict | None = None) -> ProtocolResult:
    """Run the full recursive localization loop to completion.

    In oracle mode (``scenario`` given) the readings are synthesized from
    conservation; otherwise ``readings_callback`` supplies them.
    """
    if (scenario is None) == (readings_callback is None):
        raise ProtocolError(
            "provide exactly one of scenario or readings_callback")
    if not net.is_connected():
        raise ProtocolError("network must be connected")
    oracle = None
    if scenario is not None:
        if not supply_adjusted:
            net = apply_scenario_supply(net, scenario)
        oracle = ScenarioOracle(net, scenario)

    state = new_campaign(net, delta=delta, mode=mode, multi_leak=multi_leak,
                         pipe_strategy=pipe_strategy)
    if abs(whole_network_imbalance(net)) <= state.tolerance:
        raise NoLeakDetected("whole-network balance holds: nothing to find")
    state = _settle(state)
    while not state.done:
        plan = plan_stage(state, method=method, gamma=gamma, cache=cache)
        if oracle is not None:
            readings = oracle_readings(oracle, state, plan)
        else:
            readings = readings_callback(state, plan)
        state = apply_readings(state, plan, readings)
    return ProtocolResult(leaky_set=state.leaky_set,
                          total_cost=state.total_cost,
                          query_log=state.query_log, stages=state.stage,
                          state=state)
