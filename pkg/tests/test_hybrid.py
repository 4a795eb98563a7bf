import pytest

from adreward.elgamal import keygen
from adreward.encoding import DetRng
from adreward.errors import AuthFailure
from adreward.hybrid import (
    derive_shared_key,
    hybrid_unwrap,
    hybrid_wrap,
    symmetric_open,
    symmetric_seal,
)


@pytest.fixture
def recipient(group):
    return keygen(group, DetRng("recipient"))


def test_wrap_unwrap_round_trip(group, recipient, rng):
    payload = b"per-ad policy entry: 20 coins"
    wrapped = hybrid_wrap(group, recipient.pk, payload, rng)
    assert hybrid_unwrap(group, recipient.sk, wrapped) == payload


def test_single_bit_tamper_fails_authentication(group, recipient, rng):
    wrapped = hybrid_wrap(group, recipient.pk, b"secret bytes", rng)
    for pos in range(len(wrapped.sealed_payload)):
        tampered = bytearray(wrapped.sealed_payload)
        tampered[pos] ^= 0x01
        from adreward.hybrid import WrappedKey

        mutated = WrappedKey(kem_ciphertext=wrapped.kem_ciphertext, sealed_payload=bytes(tampered))
        with pytest.raises(AuthFailure):
            hybrid_unwrap(group, recipient.sk, mutated)


def test_wrong_recipient_key_fails(group, recipient, rng):
    other = keygen(group, DetRng("wrong-recipient"))
    wrapped = hybrid_wrap(group, recipient.pk, b"payload", rng)
    with pytest.raises(AuthFailure):
        hybrid_unwrap(group, other.sk, wrapped)


def test_empty_payload_rejected(group, recipient, rng):
    with pytest.raises(ValueError):
        hybrid_wrap(group, recipient.pk, b"", rng)


def test_wrap_is_seed_deterministic(group, recipient):
    a = hybrid_wrap(group, recipient.pk, b"x", DetRng("fixed"))
    b = hybrid_wrap(group, recipient.pk, b"x", DetRng("fixed"))
    assert a == b
    c = hybrid_wrap(group, recipient.pk, b"x", DetRng("different"))
    assert a != c


def test_symmetric_seal_open_and_tamper(rng):
    key = DetRng("sym-key").bytes(32)
    sealed = symmetric_seal(key, b"agreed policy value", rng)
    assert symmetric_open(key, sealed) == b"agreed policy value"
    tampered = bytearray(sealed)
    tampered[-1] ^= 0x80
    with pytest.raises(AuthFailure):
        symmetric_open(key, bytes(tampered))
    with pytest.raises(AuthFailure):
        symmetric_open(DetRng("other-key").bytes(32), sealed)


def test_dh_shared_key_agreement(group):
    a = keygen(group, DetRng("party-a"))
    b = keygen(group, DetRng("party-b"))
    k_ab = derive_shared_key(group, a.sk, b.pk, "campaign/policy/3")
    k_ba = derive_shared_key(group, b.sk, a.pk, "campaign/policy/3")
    assert k_ab == k_ba
    assert derive_shared_key(group, a.sk, b.pk, "campaign/policy/4") != k_ab
