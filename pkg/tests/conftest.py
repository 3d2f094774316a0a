import random

import pytest

from leakloc.network import Edge, Network, Node, NodeKind
from leakloc.study import generate_graph


def make_net(n, edge_list, costs=None, supply=True):
    """Small test network: node 0 a source feeding unit demands elsewhere."""
    if supply:
        nodes = [Node(id=0, kind=NodeKind.SOURCE, boundary_flow=float(n - 1))]
        nodes += [Node(id=i, kind=NodeKind.DEMAND, boundary_flow=-1.0)
                  for i in range(1, n)]
    else:
        nodes = [Node(id=i, kind=NodeKind.TRANSMISSION) for i in range(n)]
    edges = []
    for k, (a, b) in enumerate(edge_list):
        c = 1.0 if costs is None else float(costs[k])
        edges.append(Edge(id=k, i=min(a, b), j=max(a, b), query_cost=c))
    return Network(nodes, edges)


def random_connected(rng, n, p=0.3, max_cost=5):
    """Random connected graph with integer costs in [1, max_cost]."""
    edges = set()
    order = list(range(n))
    rng.shuffle(order)
    for k in range(1, n):
        a, b = order[k], order[rng.randrange(k)]
        edges.add((min(a, b), max(a, b)))
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in edges and rng.random() < p:
                edges.add((a, b))
    edges = sorted(edges)
    costs = [rng.randint(1, max_cost) for _ in edges]
    return make_net(n, edges, costs=costs)


@pytest.fixture
def path4():
    return generate_graph("path", n=4)


@pytest.fixture
def cycle6():
    return generate_graph("cycle", n=6)


@pytest.fixture
def rng():
    return random.Random(20260824)
