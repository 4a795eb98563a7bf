import json

import pytest

from adreward.bench import BenchmarkReport
from adreward.encoding import DetRng
from adreward.scenario import ScenarioConfig, build_interactions, build_plan, run_campaign


def test_fee_shares_sum_exactly():
    for fee in (0, 1, 7, 99, 1000):
        cfg = ScenarioConfig(name="fees", seed=1, num_ads=7, num_advertisers=3, users=2, fee=fee)
        plan = build_plan(cfg, DetRng("fees"))
        shares = plan.fee_shares()
        assert sum(shares.values()) == fee
        assert set(shares) == set(plan.advertiser_ids())


def test_interactions_respect_cap_and_underpay_target():
    cfg = ScenarioConfig(
        name="caps", seed=3, num_ads=5, num_advertisers=2, users=4,
        click_cap=3, misbehavior_kind="underpay", misbehavior_delta=2, misbehavior_user=2,
    )
    vectors = build_interactions(cfg, DetRng("caps"))
    assert len(vectors) == 4
    assert all(0 <= count <= 3 for vec in vectors for count in vec)
    assert sum(vectors[2]) > 0  # the shorted user must have something to claim


def test_plan_generation_is_seed_deterministic():
    cfg = ScenarioConfig(name="det", seed=11, num_ads=6, num_advertisers=2, users=3)
    a = build_plan(cfg, DetRng("x"))
    b = build_plan(cfg, DetRng("x"))
    assert a == b
    assert build_plan(cfg, DetRng("y")) != a


def test_campaign_report_shape(group):
    cfg = ScenarioConfig(name="shape", seed=21, num_ads=4, num_advertisers=2, users=3,
                         policy_max=16, click_cap=4, pool_registered=4, pool_expected=2, fee=5)
    report = run_campaign(cfg)
    body = report.as_dict()
    assert set(body) >= {
        "chain_id", "payouts", "oracle_payouts", "click_totals", "oracle_click_totals",
        "deposits", "payouts_total", "refunds_total", "fee_paid",
        "cf_flagged", "state_failed", "state_hash", "checks",
    }
    assert all({"name", "passed", "detail"} == set(c) for c in body["checks"])
    assert report.timings["total_s"] > 0


def test_contract_storage_dumps_are_json(group):
    cfg = ScenarioConfig(name="dump", seed=31, num_ads=4, num_advertisers=2, users=2,
                         policy_max=16, click_cap=4, pool_registered=4, pool_expected=2, fee=5)
    from adreward.actors import Advertiser, CampaignFacilitator, phase1_setup
    from adreward.ledger import LedgerState

    rng = DetRng("dump")
    plan = build_plan(cfg, rng.child("plan"))
    cf = CampaignFacilitator(group, plan, rng.child("cf"))
    advertisers = [Advertiser(group, a, plan, rng.child(a)) for a in plan.advertiser_ids()]
    shares = plan.fee_shares()
    balances = {a.address: plan.budget_of(a.adv_id) + shares[a.adv_id] for a in advertisers}
    ledger = LedgerState.genesis(group, "dump", balances)
    psc_id, fsc_id = phase1_setup(group, ledger, cf, advertisers, "d")

    psc_dump = json.loads(ledger.contracts[psc_id].storage_json())
    assert psc_dump["catalog_size"] == 4
    assert len(psc_dump["enc_policies"]) == 4
    fsc_dump = json.loads(ledger.contracts[fsc_id].storage_json())
    assert fsc_dump["initialized"] is True
    assert set(fsc_dump["escrow"]) == set(plan.advertiser_ids())
    assert ledger.contracts[fsc_id].note_log_json_lines() == ""


def test_benchmark_report_invariants():
    report = BenchmarkReport(
        catalog_size=256, user_count=100, sidechain_count=1,
        interaction_encryption_s=0.04, request_generation_s=0.01,
        end_to_end_claim_s=0.06, batch_proof_gen_s=0.1, batch_verify_s=0.0004,
        users_per_day=1e6, users_per_month=3e7,
        extrapolation_basis="linear from an 8s budget",
    )
    body = report.as_dict()
    assert set(body["timings"]) == {
        "interaction_encryption_s", "request_generation_s", "end_to_end_claim_s",
        "batch_proof_gen_s", "batch_verify_s",
    }
    assert body["throughput"]["users_per_month"] == 3e7
    with pytest.raises(ValueError):
        BenchmarkReport(
            catalog_size=1, user_count=1, sidechain_count=1,
            interaction_encryption_s=-0.1, request_generation_s=0,
            end_to_end_claim_s=0, batch_proof_gen_s=0, batch_verify_s=0,
            users_per_day=0, users_per_month=0, extrapolation_basis="",
        )
