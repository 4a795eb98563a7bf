import dataclasses

import pytest

from adreward.codec import decode_args, encode_args
from adreward.elgamal import keygen
from adreward.encoding import DetRng
from adreward.errors import BadSequence, BadSignature, InsufficientFunds
from adreward.hybrid import WrappedKey
from adreward.ledger import Call, LedgerState, address_from_pk, run_parallel
from adreward.proofs import sign


@pytest.fixture
def accounts(group):
    rng = DetRng("ledger-accounts")
    return [keygen(group, rng.child(f"acct-{i}")) for i in range(3)]


@pytest.fixture
def ledger(group, accounts):
    balances = {address_from_pk(accounts[0].pk): 1000, address_from_pk(accounts[1].pk): 500}
    return LedgerState.genesis(group, "ledger-test", balances)


def test_zero_transfer_is_a_noop_success(ledger, accounts):
    before = ledger.state_hash()
    receipt = ledger.transfer(accounts[0], address_from_pk(accounts[1].pk), 0)
    assert receipt.status == "ok"
    assert ledger.balance(address_from_pk(accounts[0].pk)) == 1000
    assert ledger.state_hash() != before  # the log grew, balances did not


def test_full_balance_transfer(ledger, accounts):
    dest = address_from_pk(accounts[2].pk)
    receipt = ledger.transfer(accounts[0], dest, 1000)
    assert receipt.status == "ok"
    assert ledger.balance(address_from_pk(accounts[0].pk)) == 0
    assert ledger.balance(dest) == 1000


def test_overdraft_reverts_and_restores(ledger, accounts):
    sender = address_from_pk(accounts[1].pk)
    snapshot_balances = dict(ledger.balances)
    receipt = ledger.transfer(accounts[1], address_from_pk(accounts[0].pk), 501)
    assert receipt.status == "reverted"
    assert "InsufficientFunds" in receipt.revert_reason
    assert ledger.balances == snapshot_balances
    assert ledger.balance(sender) == 500


def test_sequence_replay_rejected(ledger, accounts):
    tx = ledger.make_tx(accounts[0], Call("system", "transfer", (address_from_pk(accounts[1].pk), 5)))
    ledger.submit(tx)
    with pytest.raises(BadSequence):
        ledger.submit(tx)


def test_wrong_sequence_rejected(ledger, accounts):
    tx = ledger.make_tx(accounts[0], Call("system", "transfer", (address_from_pk(accounts[1].pk), 5)),
                        sequence_no=99)
    with pytest.raises(BadSequence):
        ledger.submit(tx)


def test_bad_signature_rejected(ledger, accounts, group):
    tx = ledger.make_tx(accounts[0], Call("system", "transfer", (address_from_pk(accounts[1].pk), 5)))
    forged = dataclasses.replace(tx, signature=sign(group, accounts[1].sk, tx.signing_bytes()))
    with pytest.raises(BadSignature):
        ledger.submit(forged)
    tampered_call = dataclasses.replace(tx, call=Call("system", "transfer", (address_from_pk(accounts[1].pk), 500)))
    with pytest.raises(BadSignature):
        ledger.submit(tampered_call)


def test_conservation_across_random_ops(ledger, accounts):
    rng = DetRng("conservation")
    supply = ledger.total_supply()
    addrs = [address_from_pk(k.pk) for k in accounts]
    for i in range(50):
        src = accounts[rng.randint(0, 2)]
        dst = addrs[rng.randint(0, 2)]
        amount = rng.randint(0, 600)
        ledger.transfer(src, dst, amount)  # some revert; that is the point
        assert ledger.total_supply() == supply


def test_revert_restores_exact_state_fault_injection(ledger, accounts):
    """Randomly interleaved valid and invalid transactions; every revert is clean."""
    rng = DetRng("fault-injection")
    addrs = [address_from_pk(k.pk) for k in accounts]
    for i in range(40):
        before = dict(ledger.balances)
        src = accounts[rng.randint(0, 2)]
        overdraft = rng.randint(0, 1) == 1
        amount = 10_000 if overdraft else rng.randint(0, 50)
        receipt = ledger.transfer(src, addrs[rng.randint(0, 2)], amount)
        if receipt.status == "reverted":
            assert ledger.balances == before


def test_determinism_same_genesis_same_txs(group, accounts):
    def build():
        balances = {address_from_pk(accounts[0].pk): 1000}
        led = LedgerState.genesis(group, "det-seed", balances)
        for i in range(10):
            led.transfer(accounts[0], address_from_pk(accounts[1].pk), i)
        return led

    a, b = build(), build()
    assert a.state_hash() == b.state_hash()
    assert [r.status for r in a.receipts] == [r.status for r in b.receipts]
    assert a.export_tx_log() == b.export_tx_log()


def test_replay_reproduces_state_bit_exactly(group, accounts, ledger):
    for i in range(8):
        ledger.transfer(accounts[0], address_from_pk(accounts[2].pk), 7 * i)
    rebuilt = LedgerState.replay(group, ledger.genesis_json(), ledger.export_tx_log())
    assert rebuilt.state_hash() == ledger.state_hash()
    assert rebuilt.balances == ledger.balances


def test_private_envelope_round_trip(group, ledger, accounts):
    payload = (accounts[0].pk, 36, b"reward-address-bytes", "context")
    tx = ledger.make_tx(accounts[0], Call("system", "transfer", (address_from_pk(accounts[1].pk), 0)),
                        private_args=payload)
    assert ledger.open_private_inputs(tx) == payload


def test_tampered_envelope_fails_auth(group, ledger, accounts):
    from adreward.errors import AuthFailure

    tx = ledger.make_tx(accounts[0], Call("system", "transfer", (address_from_pk(accounts[1].pk), 0)),
                        private_args=(1, 2, 3))
    sealed = bytearray(tx.private_envelope.sealed_payload)
    sealed[-1] ^= 1
    tampered = dataclasses.replace(
        tx, private_envelope=WrappedKey(tx.private_envelope.kem_ciphertext, bytes(sealed)),
    )
    with pytest.raises(AuthFailure):
        ledger.open_private_inputs(tampered)


def test_open_private_inputs_without_envelope_errors(ledger, accounts):
    tx = ledger.make_tx(accounts[0], Call("system", "transfer", (address_from_pk(accounts[1].pk), 0)))
    with pytest.raises(ValueError):
        ledger.open_private_inputs(tx)


def test_privacy_boundary_envelope_args_not_in_public_log(group, ledger, accounts):
    marker = b"THIS-SECRET-MARKER-MUST-NOT-LEAK"
    tx = ledger.make_tx(accounts[0], Call("system", "transfer", (address_from_pk(accounts[1].pk), 0)),
                        private_args=(marker,))
    ledger.submit(tx)
    public = ledger.export_tx_log().encode() + encode_args(())
    assert marker not in public
    assert marker.hex().encode() not in public


def test_codec_round_trips_every_supported_type(group, rng):
    from adreward.dkg import PartialDecryption
    from adreward.elgamal import Ciphertext
    from adreward.payments import PaymentNote, SettlementBatch, make_note, settle_batch
    from adreward.proofs import DecryptionProof, DleqProof, Signature
    from adreward.vrf import vrf_keygen, vrf_rand_gen

    key = vrf_keygen(group, rng)
    vrf_out = vrf_rand_gen(group, key.vrf_sk, b"eps")
    note = make_note(group, b"\x07" * 20, 9, group.random_scalar(rng))
    batch = settle_batch(group, [(note, 9, 0)], 9)  # placeholder blinding for codec only
    values = (
        None, True, False, 0, 1 << 200, b"", b"bytes", "text",
        (1, (2, b"three")), Ciphertext(3, 4),
        Signature(1, 2, 3), DecryptionProof(1, 2, 3, 4), DleqProof(5, 6, 7, 8),
        vrf_out, PartialDecryption(2, 9, DleqProof(1, 2, 3, 4)), note,
    )
    for value in values:
        assert decode_args(encode_args((value,)))[0] == value
    assert decode_args(encode_args((batch,)))[0] == batch


def _parallel_probe(chain_index: int, transfers: int) -> int:
    from adreward.group import default_group

    g = default_group()
    rng = DetRng(f"parallel-{chain_index}")
    key_a, key_b = keygen(g, rng.child("a")), keygen(g, rng.child("b"))
    led = LedgerState.genesis(g, f"par-{chain_index}", {address_from_pk(key_a.pk): 10_000})
    for i in range(transfers):
        led.transfer(key_a, address_from_pk(key_b.pk), 1)
    return len(led.tx_log)


def test_run_parallel_chains_are_independent():
    single = run_parallel(_parallel_probe, [(0, 20)], processes=False)
    assert single == [20]
    results = run_parallel(_parallel_probe, [(0, 20), (1, 20), (2, 20)], processes=True)
    assert results == [20, 20, 20]


def test_concurrent_submissions_totally_ordered(group, ledger, accounts):
    from concurrent.futures import ThreadPoolExecutor

    dest = address_from_pk(accounts[2].pk)

    def worker(_):
        return ledger.call(accounts[0], Call("system", "transfer", (dest, 1))).status

    with ThreadPoolExecutor(max_workers=8) as pool:
        statuses = list(pool.map(worker, range(40)))
    assert statuses == ["ok"] * 40
    assert [tx.sequence_no for tx in ledger.tx_log] == list(range(1, 41))
    assert ledger.balance(dest) == 40
