import pytest

from leakloc.balance import (BalanceError, CrossingFlow, EnvelopeBalance,
                             MultipleLeaksInSingleLeakMode, NoLeakDetected,
                             default_tolerance, envelope_balance,
                             find_leaky_partitions, orient_into)
from leakloc.network import Edge, Network, Node, NodeKind

from conftest import make_net


def test_textbook_envelope_numbers():
    # 30 in + 20 produced vs 10 out + 35 consumed: 5 units lost inside
    bal = EnvelopeBalance(inflow=30.0, production=20.0,
                          outflow=10.0, consumption=35.0)
    assert bal.imbalance == 5.0


def test_textbook_envelope_from_network():
    nodes = [Node(id=0, kind=NodeKind.SOURCE, boundary_flow=20.0),
             Node(id=1, kind=NodeKind.DEMAND, boundary_flow=-35.0),
             Node(id=2, kind=NodeKind.SOURCE, boundary_flow=100.0)]
    edges = [Edge(id=0, i=0, j=2), Edge(id=1, i=1, j=2)]
    parent = Network(nodes, edges)
    sub = parent.subgraph([0, 1])
    crossings = [orient_into(parent, {0, 1}, 0, -30.0),   # 30 flowing 2 -> 0
                 orient_into(parent, {0, 1}, 1, 10.0)]    # 10 flowing 1 -> 2
    bal = envelope_balance(sub, crossings, parent=parent)
    assert (bal.inflow, bal.production) == (30.0, 20.0)
    assert (bal.outflow, bal.consumption) == (10.0, 35.0)
    assert bal.imbalance == 5.0


def test_orient_into_signs(path4):
    # positive signed flow goes i -> j, i.e. out of an envelope holding i
    cf = orient_into(path4, {0, 1}, 1, 2.5)
    assert cf.into == -2.5
    cf = orient_into(path4, {2, 3}, 1, 2.5)
    assert cf.into == 2.5


def test_orient_into_non_crossing_rejected(path4):
    with pytest.raises(BalanceError):
        orient_into(path4, {0, 1}, 0, 1.0)  # edge 0 is inside the envelope


def test_envelope_balance_checks_crossings(path4):
    sub = path4.subgraph([0, 1])
    with pytest.raises(BalanceError):
        envelope_balance(sub, [CrossingFlow(0, 1.0)], parent=path4)


def test_balanced_network_has_zero_imbalance(cycle6):
    bal = envelope_balance(cycle6)
    assert bal.imbalance == 0.0


def test_default_tolerance_scales():
    assert default_tolerance(0.0) == 1e-9
    assert default_tolerance(1e6) == pytest.approx(1e-3)


class TestFindLeaky:
    def _sides(self, parent, s, flows):
        inside = set(s)
        sub = parent.subgraph(s)
        other = [nid for nid in parent.node_ids if nid not in inside]
        sub2 = parent.subgraph(other)
        cross = [orient_into(parent, inside, eid, v) for eid, v in flows]
        cross2 = [orient_into(parent, set(other), eid, v) for eid, v in flows]
        return [(sub, cross), (sub2, cross2)]

    def test_single_leaky_side(self, path4):
        # supply raised by 1 for a 1-unit leak at node 3; edge 1 carries 3
        nodes = [n if n.id != 0 else
                 Node(id=0, kind=NodeKind.SOURCE, boundary_flow=4.0)
                 for n in path4.nodes]
        net = Network(nodes, path4.edges)
        leaky = find_leaky_partitions(
            self._sides(net, [0, 1], [(1, 3.0)]), tolerance=1e-9)
        assert [idx for idx, _ in leaky] == [1]
        assert leaky[0][1].imbalance == pytest.approx(1.0)

    def test_no_side_leaky_raises(self, path4):
        with pytest.raises(NoLeakDetected):
            find_leaky_partitions(
                self._sides(path4, [0, 1], [(1, 2.0)]), tolerance=1e-9)

    def test_no_side_leaky_ok_when_parent_clear(self, path4):
        out = find_leaky_partitions(
            self._sides(path4, [0, 1], [(1, 2.0)]), tolerance=1e-9,
            parent_leaky=False)
        assert out == []

    def test_two_leaky_sides_raise_in_single_mode(self, path4):
        nodes = [n if n.id != 0 else
                 Node(id=0, kind=NodeKind.SOURCE, boundary_flow=5.0)
                 for n in path4.nodes]
        net = Network(nodes, path4.edges)
        sides = self._sides(net, [0, 1], [(1, 3.0)])
        with pytest.raises(MultipleLeaksInSingleLeakMode):
            find_leaky_partitions(sides, tolerance=1e-9)
        leaky = find_leaky_partitions(sides, tolerance=1e-9, single_leak=False)
        assert len(leaky) == 2
