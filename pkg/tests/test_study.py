import pytest

from leakloc.network import NodeKind
from leakloc.protocol import LeakMode
from leakloc.study import (StudyError, balance_supply, enumerative_study,
                           generate_graph, network_stats, summarize)


class TestSummarize:
    def test_basic_stats(self):
        s = summarize([1, 2, 2, 3])
        assert s["mean"] == pytest.approx(2.0)
        assert s["median"] == 2
        assert s["mode"] == 2
        assert s["max"] == 3
        assert s["std"] == pytest.approx(0.816496580927726)

    def test_single_value(self):
        s = summarize([7])
        assert s == {"mean": 7.0, "median": 7, "mode": 7, "max": 7, "std": 0.0}

    def test_mode_tie_takes_smallest(self):
        assert summarize([1, 1, 2, 2])["mode"] == 1

    def test_even_median_lower_middle(self):
        assert summarize([1, 2, 3, 10])["median"] == 2

    def test_empty_rejected(self):
        with pytest.raises(StudyError):
            summarize([])


class TestGenerators:
    def test_path_and_cycle(self):
        p = generate_graph("path", n=5)
        assert (p.n, p.m) == (5, 4)
        c = generate_graph("cycle", n=5)
        assert (c.n, c.m) == (5, 5)

    def test_grid_dimensions(self):
        g = generate_graph("grid", rows=20, cols=20)
        assert (g.n, g.m) == (400, 760)
        assert g.is_connected()

    def test_lollipop(self):
        g = generate_graph("lollipop", clique=5, tail=3)
        assert (g.n, g.m) == (8, 13)

    def test_random_connected_deterministic(self):
        a = generate_graph("random-connected", n=20, p=0.2, seed=42)
        b = generate_graph("random-connected", n=20, p=0.2, seed=42)
        assert a == b
        assert a.is_connected()
        c = generate_graph("random-connected", n=20, p=0.2, seed=43)
        assert c.is_connected()

    def test_supply_balances(self):
        g = generate_graph("grid", rows=3, cols=4)
        assert sum(nd.boundary_flow for nd in g.nodes) == 0.0

    def test_unknown_kind(self):
        with pytest.raises(StudyError):
            generate_graph("torus", n=5)


class TestNetworkStats:
    def test_path4(self, path4):
        s = network_stats(path4)
        assert s["n"] == 4 and s["m"] == 3
        assert s["q"] == pytest.approx(0.5)
        assert s["max_degree"] == 2


class TestBalanceSupply:
    def test_spreads_deficit(self):
        net = generate_graph("path", n=4)
        # knock the supply out of balance, then restore it
        from dataclasses import replace
        from leakloc.network import Network
        nodes = [replace(nd, boundary_flow=0.0)
                 if nd.kind is NodeKind.SOURCE else nd for nd in net.nodes]
        unbalanced = Network(nodes, net.edges)
        fixed = balance_supply(unbalanced)
        assert sum(nd.boundary_flow for nd in fixed.nodes) == pytest.approx(0)


class TestEnumerativeStudy:
    def test_node_study_finds_all(self, cycle6):
        result = enumerative_study(cycle6, method="ilp-gp")
        assert len(result.per_scenario) == 6
        assert all(o.found for o in result.per_scenario)
        assert result.summary["max"] <= cycle6.m

    def test_pipe_study_finds_all(self, path4):
        result = enumerative_study(path4, mode=LeakMode.PIPE)
        assert len(result.per_scenario) == 3
        assert all(o.found for o in result.per_scenario)

    def test_emitters(self, path4):
        result = enumerative_study(path4)
        assert "per_scenario" in result.to_dict()
        csv_text = result.to_csv()
        assert csv_text.splitlines()[0] == \
            "site,query_count,total_cost,stage_count,found"
        assert len(csv_text.splitlines()) == 5
        table = result.to_table(name="p4")
        assert "p4" in table and "mean" in table

    def test_disconnected_rejected(self):
        from leakloc.network import Edge, Network, Node
        net = Network([Node(id=0), Node(id=1), Node(id=2), Node(id=3)],
                      [Edge(id=0, i=0, j=1), Edge(id=1, i=2, j=3)])
        with pytest.raises(StudyError):
            enumerative_study(net)
