"""Steady-state water balance over envelopes and leaky-side identification.

An envelope is any node subset together with the measured flows on the
pipes crossing its boundary.  Under steady state,

    in + production = out + consumption

so a nonzero imbalance means material is lost inside the envelope.  None of
this needs a hydraulic solver: only conservation is used.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .network import Network, NetworkError


class BalanceError(ValueError):
    pass


class NoLeakDetected(BalanceError):
    """Parent region is leaky but no side shows an imbalance.

    Signals inconsistent measurements; the caller should re-measure.
    """


class MultipleLeaksInSingleLeakMode(BalanceError):
    """More than one side shows an imbalance while a single leak was assumed."""


@dataclass(frozen=True)
class CrossingFlow:
    """A measured flow on a boundary-crossing edge.

    ``into`` is the signed flow rate oriented into the envelope (positive =
    entering).
    """

    edge_id: int
    into: float


@dataclass(frozen=True)
class EnvelopeBalance:
    inflow: float
    production: float
    outflow: float
    consumption: float

    @property
    def imbalance(self) -> float:
        """Positive when flow is lost inside the envelope."""
        return self.production + self.inflow - self.consumption - self.outflow


@dataclass(frozen=True)
class BalanceVerdict:
    leaky: bool
    imbalance: float
    tolerance_used: float


def default_tolerance(production: float) -> float:
    """Noiseless-measurement tolerance, scaled to the supply magnitude."""
    return 1e-9 * max(abs(production), 1.0)


def orient_into(parent: Network, inside: set[int], edge_id: int,
                signed_flow: float) -> CrossingFlow:
    """Convert a flow in the edge's (i < j) sign convention to into-envelope.

    Positive signed flow means flow from i toward j; if i is the inside
    endpoint that flow leaves the envelope.
    """
    e = parent.edge(edge_id)
    i_in, j_in = e.i in inside, e.j in inside
    if i_in == j_in:
        raise BalanceError(
            f"edge {edge_id} does not cross the envelope boundary")
    return CrossingFlow(edge_id, -signed_flow if i_in else signed_flow)


def envelope_balance(sub: Network,
                     crossing_flows: Iterable[CrossingFlow] = (),
                     parent: Network | None = None) -> EnvelopeBalance:
    """Balance the envelope around ``sub`` given its boundary crossings.

    When ``parent`` is supplied, each crossing edge is checked to have
    exactly one endpoint inside ``sub``.
    """
    inside = set(sub.node_ids)
    inflow = outflow = 0.0
    for cf in crossing_flows:
        if parent is not None:
            e = parent.edge(cf.edge_id)
            if (e.i in inside) == (e.j in inside):
                raise BalanceError(
                    f"edge {cf.edge_id} has "
                    f"{'both' if e.i in inside else 'neither'} "
                    f"endpoint(s) inside the envelope")
        if cf.into >= 0:
            inflow += cf.into
        else:
            outflow += -cf.into
    production = sum(nd.boundary_flow for nd in sub.nodes if nd.boundary_flow > 0)
    consumption = sum(-nd.boundary_flow for nd in sub.nodes if nd.boundary_flow < 0)
    return EnvelopeBalance(inflow=inflow, production=production,
                           outflow=outflow, consumption=consumption)


def find_leaky_partitions(
        partitions: Sequence[tuple[Network, Sequence[CrossingFlow]]],
        tolerance: float,
        single_leak: bool = True,
        parent_leaky: bool = True) -> list[tuple[int, BalanceVerdict]]:
    """Balance every candidate region and return those showing a leak.

    In single-leak mode exactly one region must be leaky; finding none while
    the parent was leaky means the measurements contradict each other.
    """
    leaky: list[tuple[int, BalanceVerdict]] = []
    for idx, (sub, crossings) in enumerate(partitions):
        bal = envelope_balance(sub, crossings)
        verdict = BalanceVerdict(leaky=abs(bal.imbalance) > tolerance,
                                 imbalance=bal.imbalance,
                                 tolerance_used=tolerance)
        if verdict.leaky:
            leaky.append((idx, verdict))
    if not leaky and parent_leaky:
        raise NoLeakDetected(
            "no candidate region shows an imbalance although the parent "
            "region was leaky; measurements are inconsistent")
    if single_leak and len(leaky) > 1:
        raise MultipleLeaksInSingleLeakMode(
            f"{len(leaky)} regions show an imbalance under the single-leak "
            f"assumption")
    return leaky
