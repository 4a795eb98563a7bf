"""Benchmark harness: client-side timings, batched settlement, and concurrency.

Timing methodology: client-side operations are timed per user in isolation
(each simulated user owns its device in production, so one user's crypto
does not queue behind another's), while contract execution times come from
the ledger receipts, which measure the serialized executor. Multi-chain
scaling runs one process per chain because chains share no state.
"""

from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import dataclass, field

from .actors import (
    Advertiser,
    CampaignFacilitator,
    UserSession,
    cf_settle,
    make_pool_registrants,
    mark_payments_processed,
    phase1_setup,
    pool_selection,
    user_claim,
    user_payment_request,
)
from .elgamal import decrypt_to_element, encrypt_vector, keygen, recover_plaintext
from .encoding import DetRng
from .group import default_group
from .ledger import run_parallel
from .payments import make_note, settle_batch, verify_batch
from .proofs import prove_decryption
from .scenario import ScenarioConfig, build_plan

SCHEMA_VERSION = 1


def _median_of(fn, runs: int) -> float:
    samples = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def linear_fit_r2(xs: list[float], ys: list[float]) -> float:
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    if sxx == 0:
        return 0.0
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    if ss_tot == 0:
        return 1.0
    return 1.0 - ss_res / ss_tot


# -- client-side operations ----------------------------------------------------


def bench_client(sizes: tuple[int, ...] = (64, 128, 256), runs: int = 10, seed: int = 7) -> dict:
    """Median time to encrypt an interaction vector and to build a payment request.

    Each run uses a fresh interaction vector and aggregate so the medians
    reflect typical plaintext-recovery depth rather than one arbitrary value.
    """
    from .elgamal import Ciphertext, add_ciphertexts, scalar_mul_ciphertext

    group = default_group()
    rng = DetRng(f"bench-client/{seed}")
    results = {}
    for size in sizes:
        user = keygen(group, rng.child(f"user-{size}"))
        policies = [rng.randint(1, 255) for _ in range(size)]
        bound = size * 256 * 256
        group.bsgs_table(math.isqrt(bound) + 1)  # build outside the timed region

        enc_samples = []
        request_samples = []
        for run in range(runs):
            counts = [rng.randint(0, 255) for _ in range(size)]
            enc_rng = rng.child(f"enc-{size}-{run}")
            t0 = time.perf_counter()
            vector = encrypt_vector(group, user.pk, counts, enc_rng)
            enc_samples.append(time.perf_counter() - t0)

            aggregate = Ciphertext(c1=1, c2=1)
            for p, ct in zip(policies, vector):
                aggregate = add_ciphertexts(group, aggregate, scalar_mul_ciphertext(group, ct, p))
            t0 = time.perf_counter()
            elem = decrypt_to_element(group, user.sk, aggregate)
            m = recover_plaintext(group, elem, bound)
            prove_decryption(group, user.sk, aggregate, m)
            request_samples.append(time.perf_counter() - t0)

        results[size] = {
            "interaction_encryption_s": statistics.median(enc_samples),
            "request_generation_s": statistics.median(request_samples),
        }

    xs = [float(s) for s in sizes]
    return {
        "schema": SCHEMA_VERSION,
        "kind": "client",
        "sizes": list(sizes),
        "per_size": {str(k): v for k, v in results.items()},
        "encryption_linear_r2": linear_fit_r2(xs, [results[s]["interaction_encryption_s"] for s in sizes]),
        "request_linear_r2": linear_fit_r2(xs, [results[s]["request_generation_s"] for s in sizes]),
    }


# -- batched settlement ----------------------------------------------------------


def bench_settlement(batches: tuple[int, ...] = (80, 200, 400, 800), runs: int = 5, seed: int = 11) -> dict:
    group = default_group()
    rng = DetRng(f"bench-settlement/{seed}")
    results = {}
    for batch_size in batches:
        recipients = [rng.bytes(20) for _ in range(batch_size)]
        amounts = [rng.randint(0, 1 << 16) for _ in range(batch_size)]
        blinders = [group.random_scalar(rng) for _ in range(batch_size)]
        total = sum(amounts)

        def generate():
            entries = [
                (make_note(group, recipient, amount, r), amount, r)
                for recipient, amount, r in zip(recipients, amounts, blinders)
            ]
            return settle_batch(group, entries, total)

        gen_s = _median_of(generate, runs)
        batch = generate()

        def verify():
            assert verify_batch(group, batch)

        # verification is fast; time a block of repetitions for stable numbers
        reps = 20
        samples = []
        for _ in range(runs):
            t0 = time.perf_counter()
            for _ in range(reps):
                verify()
            samples.append((time.perf_counter() - t0) / reps)
        verify_s = statistics.median(samples)
        results[batch_size] = {"proof_generation_s": gen_s, "verification_s": verify_s}

    first, last = batches[0], batches[-1]
    return {
        "schema": SCHEMA_VERSION,
        "kind": "settlement",
        "batches": list(batches),
        "per_batch": {str(k): v for k, v in results.items()},
        "verify_growth_ratio": results[last]["verification_s"] / results[first]["verification_s"],
        "generation_growth_ratio": results[last]["proof_generation_s"] / results[first]["proof_generation_s"],
    }


# -- concurrent users and multi-chain scaling --------------------------------------


@dataclass
class _CohortTiming:
    encryption_s: list[float] = field(default_factory=list)
    claim_exec_s: list[float] = field(default_factory=list)
    request_gen_s: list[float] = field(default_factory=list)
    request_exec_s: list[float] = field(default_factory=list)

    def per_user_latencies(self) -> list[float]:
        return [
            sum(parts)
            for parts in zip(self.encryption_s, self.claim_exec_s, self.request_gen_s, self.request_exec_s)
        ]


def _campaign_fixture(group, users: int, catalog: int, seed: str):
    cfg = ScenarioConfig(
        name="bench", seed=0, num_ads=catalog, num_advertisers=min(4, catalog),
        users=users, policy_max=255, click_cap=15,
        pool_registered=6, pool_expected=3, fee=10,
    )
    rng = DetRng(seed)
    plan = build_plan(cfg, rng.child("plan"))
    cf = CampaignFacilitator(group, plan, rng.child("cf"))
    advertisers = [Advertiser(group, a, plan, rng.child(f"adv-{a}")) for a in plan.advertiser_ids()]
    fee_shares = plan.fee_shares()
    balances = {adv.address: plan.budget_of(adv.adv_id) + fee_shares[adv.adv_id] for adv in advertisers}
    from .ledger import LedgerState

    ledger = LedgerState.genesis(group, seed, balances, "bench-chain")
    psc_id, fsc_id = phase1_setup(group, ledger, cf, advertisers, "bench")
    registrants = make_pool_registrants(group, 6, rng.child("pool"))
    pool = pool_selection(group, ledger, psc_id, cf, registrants, 3, rng.child("dkg"))
    sessions = [
        UserSession(group, i, tuple(rng.child(f"u{i}").randint(0, 15) for _ in range(catalog)), rng.child(f"s{i}"))
        for i in range(users)
    ]
    return cfg, ledger, cf, psc_id, fsc_id, pool, sessions


def run_cohort(users: int, catalog: int = 256, seed: str = "bench-cohort") -> dict:
    """One cohort of concurrent reward claims; returns per-user latency stats."""
    from concurrent.futures import ThreadPoolExecutor

    group = default_group()
    cfg, ledger, cf, psc_id, fsc_id, pool, sessions = _campaign_fixture(group, users, catalog, f"{seed}/{users}/{catalog}")
    psc = ledger.contracts[psc_id]
    timing = _CohortTiming()
    cohort_start = time.perf_counter()

    # client-side encryption, timed per user in isolation
    prepared = []
    for session in sessions:
        t0 = time.perf_counter()
        enc_vec = tuple(encrypt_vector(group, session.ephemeral.pk, list(session.counts), session.enc_rng))
        enc_vec_prime = tuple(encrypt_vector(group, psc.pool_pk, list(session.counts), session.enc_rng))
        timing.encryption_s.append(time.perf_counter() - t0)
        prepared.append((session, enc_vec, enc_vec_prime))

    def submit_claim(entry):
        session, enc_vec, enc_vec_prime = entry
        from .ledger import Call

        receipt = ledger.call(session.ephemeral, Call(
            psc_id, "compute_aggregate", (session.ephemeral.pk, enc_vec, enc_vec_prime),
        ))
        session.aggregate, session.aggregate_sig = ledger.view(psc_id, "get_aggregate", session.ephemeral.pk)
        return receipt.exec_time

    with ThreadPoolExecutor(max_workers=min(users, 32)) as pool_exec:
        timing.claim_exec_s = list(pool_exec.map(submit_claim, prepared))

    # request generation per user in isolation
    requests = []
    for session in sessions:
        t0 = time.perf_counter()
        elem = decrypt_to_element(group, session.ephemeral.sk, session.aggregate)
        session.dec_result = recover_plaintext(group, elem, cfg.recovery_bound)
        proof = prove_decryption(group, session.ephemeral.sk, session.aggregate, session.dec_result)
        timing.request_gen_s.append(time.perf_counter() - t0)
        requests.append((session, proof))

    def submit_request(entry):
        session, proof = entry
        from .ledger import Call

        private = (session.ephemeral.pk, session.dec_result, session.aggregate_sig, proof, session.reward_address)
        receipt = ledger.call(session.payment_key, Call(psc_id, "payment_request", ()), private_args=private)
        return receipt.exec_time

    with ThreadPoolExecutor(max_workers=min(users, 32)) as pool_exec:
        timing.request_exec_s = list(pool_exec.map(submit_request, requests))

    cohort_wall_s = time.perf_counter() - cohort_start
    latencies = timing.per_user_latencies()
    return {
        "users": users,
        "catalog": catalog,
        "per_user_latency_median_s": statistics.median(latencies),
        "per_user_latency_mean_s": statistics.fmean(latencies),
        "cohort_wall_s": cohort_wall_s,
        "queued": len(ledger.contracts[fsc_id].payment_queue),
    }


def _chain_worker(chain_index: int, catalog: int, budget_s: float, seed: str) -> int:
    """Process reward claims on one chain until the wall-clock budget runs out."""
    group = default_group()
    batch = 8
    processed = 0
    deadline = time.perf_counter() + budget_s
    round_no = 0
    while time.perf_counter() < deadline:
        _, ledger, cf, psc_id, fsc_id, pool, sessions = _campaign_fixture(
            group, batch, catalog, f"{seed}/chain{chain_index}/round{round_no}",
        )
        psc = ledger.contracts[psc_id]
        bound = catalog * 256 * 15
        for session in sessions:
            if time.perf_counter() >= deadline:
                break
            user_claim(group, ledger, psc_id, session, psc.pool_pk)
            user_payment_request(group, ledger, psc_id, session, bound)
            processed += 1
        round_no += 1
    return processed


def bench_concurrent(
    user_counts: tuple[int, ...] = (10, 30, 60, 100),
    catalog: int = 256,
    chain_counts: tuple[int, ...] = (1, 2, 3),
    budget_s: float = 10.0,
    seed: str = "bench-concurrent",
) -> dict:
    cohorts = [run_cohort(users, catalog, seed) for users in user_counts]

    scaling = {}
    for chains in chain_counts:
        args = [(i, catalog, budget_s, seed) for i in range(chains)]
        counts = run_parallel(_chain_worker, args, processes=True)
        scaling[chains] = {
            "users_processed": sum(counts),
            "per_chain": list(counts),
            "budget_s": budget_s,
        }
    base = scaling[chain_counts[0]]["users_processed"] or 1
    per_day = {
        chains: entry["users_processed"] * 86400 / budget_s
        for chains, entry in scaling.items()
    }
    return {
        "schema": SCHEMA_VERSION,
        "kind": "concurrent",
        "catalog": catalog,
        "cohorts": cohorts,
        "scaling": {str(k): v for k, v in scaling.items()},
        "scaling_ratio_vs_single": {str(k): v["users_processed"] / base for k, v in scaling.items()},
        "extrapolated_users_per_day": {str(k): v for k, v in per_day.items()},
        "extrapolation_basis": f"users processed in a {budget_s}s wall-clock budget",
    }


@dataclass(frozen=True)
class BenchmarkReport:
    """Consolidated measurement for one configuration point."""

    catalog_size: int
    user_count: int
    sidechain_count: int
    interaction_encryption_s: float
    request_generation_s: float
    end_to_end_claim_s: float
    batch_proof_gen_s: float
    batch_verify_s: float
    users_per_day: float
    users_per_month: float
    extrapolation_basis: str

    def __post_init__(self):
        timings = (
            self.interaction_encryption_s, self.request_generation_s, self.end_to_end_claim_s,
            self.batch_proof_gen_s, self.batch_verify_s,
        )
        if any(t < 0 for t in timings):
            raise ValueError("timings must be non-negative")

    def as_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "kind": "summary",
            "catalog_size": self.catalog_size,
            "user_count": self.user_count,
            "sidechain_count": self.sidechain_count,
            "timings": {
                "interaction_encryption_s": self.interaction_encryption_s,
                "request_generation_s": self.request_generation_s,
                "end_to_end_claim_s": self.end_to_end_claim_s,
                "batch_proof_gen_s": self.batch_proof_gen_s,
                "batch_verify_s": self.batch_verify_s,
            },
            "throughput": {
                "users_per_day": self.users_per_day,
                "users_per_month": self.users_per_month,
                "extrapolation_basis": self.extrapolation_basis,
            },
        }


def benchmark_summary(
    catalog: int = 256,
    users: int = 100,
    chains: int = 1,
    batch: int = 800,
    budget_s: float = 8.0,
) -> BenchmarkReport:
    client = bench_client(sizes=(catalog,), runs=5)
    settlement = bench_settlement(batches=(batch,), runs=3)
    cohort = run_cohort(users, catalog)
    args = [(i, catalog, budget_s, "summary") for i in range(chains)]
    processed = sum(run_parallel(_chain_worker, args, processes=chains > 1))
    per_day = processed * 86400 / budget_s
    return BenchmarkReport(
        catalog_size=catalog,
        user_count=users,
        sidechain_count=chains,
        interaction_encryption_s=client["per_size"][str(catalog)]["interaction_encryption_s"],
        request_generation_s=client["per_size"][str(catalog)]["request_generation_s"],
        end_to_end_claim_s=cohort["per_user_latency_median_s"],
        batch_proof_gen_s=settlement["per_batch"][str(batch)]["proof_generation_s"],
        batch_verify_s=settlement["per_batch"][str(batch)]["verification_s"],
        users_per_day=per_day,
        users_per_month=per_day * 30,
        extrapolation_basis=f"linear from users processed in a {budget_s}s wall-clock budget on {chains} chain(s)",
    )


def write_report(report: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
