import json
import threading

import pytest
from fastapi.testclient import TestClient

from leakloc.protocol import (LeakScenario, NodeSite, ScenarioOracle,
                              apply_scenario_supply, oracle_readings,
                              plan_stage, state_from_dict, state_to_dict)
from leakloc.service import create_app, replay_state
from leakloc.study import generate_graph


@pytest.fixture
def leaky_p4():
    net = generate_graph("path", n=4)
    scenario = LeakScenario(((NodeSite(3), 1.0),))
    supplied = apply_scenario_supply(net, scenario)
    return supplied, ScenarioOracle(supplied, scenario)


@pytest.fixture
def client(tmp_path):
    return TestClient(create_app(tmp_path))


def create(client, net, **overrides):
    body = {"network": net.to_dict(), **overrides}
    r = client.post("/campaigns", json=body)
    assert r.status_code == 201, r.text
    return r.json()


def oracle_submit(client, cid, version, oracle):
    """Answer the current plan from the oracle and submit."""
    doc = client.get(f"/campaigns/{cid}/state").json()
    state = state_from_dict(doc["state"])
    plan = plan_stage(state, method=doc["method"], gamma=doc["gamma"])
    readings = oracle_readings(oracle, state, plan)
    return client.post(f"/campaigns/{cid}/readings", json={
        "expected_version": version,
        "readings": [{"edge_id": r.edge_id, "point": r.point.key,
                      "value": r.value} for r in readings]})


class TestLifecycle:
    def test_full_campaign(self, client, leaky_p4):
        net, oracle = leaky_p4
        created = create(client, net, method="ilp-lex")
        cid, ver = created["campaign_id"], created["version"]
        assert created["initial_imbalance"] == pytest.approx(1.0)

        sizes = []
        while True:
            plan = client.get(f"/campaigns/{cid}/plan").json()
            summary = client.get(f"/campaigns/{cid}").json()
            sizes.append(summary["candidate_size"])
            if plan["status"] == "complete":
                break
            r = oracle_submit(client, cid, ver, oracle)
            assert r.status_code == 200, r.text
            ver = r.json()["version"]

        assert sizes == [4, 2, 1, 0] or sizes == [4, 2, 0]
        final = client.get(f"/campaigns/{cid}").json()
        assert final["status"] == "complete"
        assert final["total_cost"] == 2.0
        assert final["leaky_set"] == [{"type": "node", "node_id": 3}]

    def test_plan_is_idempotent(self, client, leaky_p4):
        net, _ = leaky_p4
        created = create(client, net)
        cid = created["campaign_id"]
        a = client.get(f"/campaigns/{cid}/plan").json()
        b = client.get(f"/campaigns/{cid}/plan").json()
        assert a == b
        assert client.get(f"/campaigns/{cid}").json()["total_cost"] == 0.0

    def test_listing(self, client, leaky_p4):
        net, _ = leaky_p4
        ids = {create(client, net)["campaign_id"] for _ in range(3)}
        listed = client.get("/campaigns").json()["campaigns"]
        assert {c["campaign_id"] for c in listed} == ids

    def test_unknown_campaign_404(self, client):
        assert client.get("/campaigns/deadbeef").status_code == 404
        assert client.get("/campaigns/../sneaky").status_code == 404

    def test_balanced_network_rejected_unless_forced(self, client):
        net = generate_graph("path", n=4)
        r = client.post("/campaigns", json={"network": net.to_dict()})
        assert r.status_code == 422
        r = client.post("/campaigns", json={"network": net.to_dict(),
                                            "force": True})
        assert r.status_code == 201

    def test_bad_inputs_rejected(self, client, leaky_p4):
        net, _ = leaky_p4
        r = client.post("/campaigns", json={"network": {"nodes": []}})
        assert r.status_code == 400
        r = client.post("/campaigns", json={"network": net.to_dict(),
                                            "method": "magic"})
        assert r.status_code == 400


class TestConcurrency:
    def test_stale_version_conflicts(self, client, leaky_p4):
        net, oracle = leaky_p4
        created = create(client, net)
        cid, ver = created["campaign_id"], created["version"]
        r = oracle_submit(client, cid, ver, oracle)
        assert r.status_code == 200
        # resubmitting against the old version must fail cleanly
        r2 = oracle_submit(client, cid, ver, oracle)
        assert r2.status_code == 409
        body = r2.json()
        assert body["status"] == "conflict"
        assert body["actual_version"] > body["expected_version"]

    def test_exactly_one_racing_submit_wins(self, client, leaky_p4):
        net, oracle = leaky_p4
        created = create(client, net)
        cid, ver = created["campaign_id"], created["version"]
        doc = client.get(f"/campaigns/{cid}/state").json()
        state = state_from_dict(doc["state"])
        plan = plan_stage(state, method=doc["method"], gamma=doc["gamma"])
        readings = [{"edge_id": r.edge_id, "point": r.point.key,
                     "value": r.value}
                    for r in oracle_readings(oracle, state, plan)]
        results = []
        barrier = threading.Barrier(2)

        def submit():
            barrier.wait()
            r = client.post(f"/campaigns/{cid}/readings", json={
                "expected_version": ver, "readings": readings})
            results.append(r.status_code)

        threads = [threading.Thread(target=submit) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(results) == [200, 409]

    def test_conflict_changes_nothing(self, client, leaky_p4):
        net, oracle = leaky_p4
        created = create(client, net)
        cid, ver = created["campaign_id"], created["version"]
        oracle_submit(client, cid, ver, oracle)
        before = client.get(f"/campaigns/{cid}/state").json()
        assert oracle_submit(client, cid, ver, oracle).status_code == 409
        after = client.get(f"/campaigns/{cid}/state").json()
        assert before == after


class TestValidation:
    def test_wrong_reading_set_rejected(self, client, leaky_p4):
        net, _ = leaky_p4
        created = create(client, net)
        cid, ver = created["campaign_id"], created["version"]
        r = client.post(f"/campaigns/{cid}/readings", json={
            "expected_version": ver,
            "readings": [{"edge_id": 0, "point": "center", "value": 1.0}]})
        assert r.status_code == 400

    def test_inconsistent_readings_keep_state(self, client, leaky_p4):
        net, _ = leaky_p4
        created = create(client, net)
        cid, ver = created["campaign_id"], created["version"]
        plan = client.get(f"/campaigns/{cid}/plan").json()
        before = client.get(f"/campaigns/{cid}/state").json()
        # a reading that makes both sides leaky contradicts the single-leak
        # assumption (imbalances 0.5 on each side)
        bogus = [{"edge_id": rr["edge_id"], "point": rr["point"],
                  "value": 2.5} for rr in plan["required_readings"]]
        r = client.post(f"/campaigns/{cid}/readings", json={
            "expected_version": ver, "readings": bogus})
        assert r.status_code == 422
        assert client.get(f"/campaigns/{cid}/state").json() == before


class TestPersistence:
    def test_replay_reproduces_state_byte_identically(self, client, leaky_p4):
        net, oracle = leaky_p4
        created = create(client, net)
        cid, ver = created["campaign_id"], created["version"]
        while client.get(f"/campaigns/{cid}/plan").json()["status"] != "complete":
            ver = oracle_submit(client, cid, ver, oracle).json()["version"]
        doc = client.get(f"/campaigns/{cid}/state").json()
        replayed = replay_state(doc)
        assert json.dumps(state_to_dict(replayed), sort_keys=True) == \
            json.dumps(doc["state"], sort_keys=True)

    def test_store_survives_restart(self, tmp_path, leaky_p4):
        net, oracle = leaky_p4
        c1 = TestClient(create_app(tmp_path))
        created = create(c1, net)
        cid, ver = created["campaign_id"], created["version"]
        oracle_submit(c1, cid, ver, oracle)
        # a fresh app over the same directory sees the same campaign
        c2 = TestClient(create_app(tmp_path))
        summary = c2.get(f"/campaigns/{cid}").json()
        assert summary["campaign_id"] == cid
        assert summary["total_cost"] > 0
