"""Schnorr signatures and Chaum-Pedersen proofs of correct decryption.

Both are sigma protocols made non-interactive with Fiat-Shamir; each proof
type hashes under its own domain string so transcripts cannot be replayed
across protocols. Nonces are derived deterministically from the secret and
the transcript, which keeps every proof reproducible for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .elgamal import Ciphertext
from .encoding import dhash, encode_element, encode_scalar, hash_to_int
from .group import PrimeOrderGroup

SIG_DOMAIN = "adreward/schnorr-sig"
DECRYPT_DOMAIN = "adreward/decrypt-proof"


@dataclass(frozen=True)
class Signature:
    challenge: int
    response: int
    signer_pk: int

    def to_bytes(self) -> bytes:
        return encode_scalar(self.challenge) + encode_scalar(self.response) + encode_element(self.signer_pk)


@dataclass(frozen=True)
class DecryptionProof:
    """DLEQ attesting log_g(pk) = log_c1(c2 / g^m) for a claimed plaintext m."""

    commitment_a: int
    commitment_b: int
    challenge: int
    response: int

    def to_bytes(self) -> bytes:
        return (
            encode_element(self.commitment_a)
            + encode_element(self.commitment_b)
            + encode_scalar(self.challenge)
            + encode_scalar(self.response)
        )


def sign(group: PrimeOrderGroup, sk: int, msg: bytes) -> Signature:
    pk = group.pow_g(sk)
    nonce = hash_to_int("adreward/sig-nonce", encode_scalar(sk), msg) % group.q
    big_r = group.pow_g(nonce)
    e = group.hash_to_scalar(SIG_DOMAIN, encode_element(pk), encode_element(big_r), msg)
    s = (nonce + e * sk) % group.q
    return Signature(challenge=e, response=s, signer_pk=pk)


def verify_sig(group: PrimeOrderGroup, pk: int, msg: bytes, sig: Signature) -> bool:
    if sig.signer_pk != pk or not group.is_element(pk):
        return False
    if not (0 <= sig.challenge < group.q and 0 <= sig.response < group.q):
        return False
    # R = g^s / pk^e must rebuild the challenged commitment
    big_r = group.pow_g(sig.response) * group.inv(group.power(pk, sig.challenge)) % group.p
    e = group.hash_to_scalar(SIG_DOMAIN, encode_element(pk), encode_element(big_r), msg)
    return e == sig.challenge


def _decrypt_transcript(group, pk, c, plaintext_elem, a, b) -> int:
    return group.hash_to_scalar(
        DECRYPT_DOMAIN,
        encode_element(pk),
        encode_element(c.c1),
        encode_element(c.c2),
        encode_element(plaintext_elem),
        encode_element(a),
        encode_element(b),
    )


def prove_decryption(group: PrimeOrderGroup, sk: int, c: Ciphertext, m: int) -> DecryptionProof:
    """Prove that c decrypts to m under the secret key matching pk = g^sk."""
    pk = group.pow_g(sk)
    plaintext_elem = group.pow_g(m)
    w = hash_to_int("adreward/decrypt-nonce", encode_scalar(sk), c.to_bytes(), encode_element(plaintext_elem)) % group.q
    a = group.pow_g(w)
    b = group.power(c.c1, w)
    e = _decrypt_transcript(group, pk, c, plaintext_elem, a, b)
    z = (w + e * sk) % group.q
    return DecryptionProof(commitment_a=a, commitment_b=b, challenge=e, response=z)


def verify_decryption(group: PrimeOrderGroup, pk: int, c: Ciphertext, m: int, proof: DecryptionProof) -> bool:
    if m < 0:
        return False
    if not (0 <= proof.challenge < group.q and 0 <= proof.response < group.q):
        return False
    plaintext_elem = group.pow_g(m)
    e = _decrypt_transcript(group, pk, c, plaintext_elem, proof.commitment_a, proof.commitment_b)
    if e != proof.challenge:
        return False
    # d = c2 / g^m is c1^sk iff the claim is true
    d = group.div(c.c2, plaintext_elem)
    if group.pow_g(proof.response) != proof.commitment_a * group.power(pk, e) % group.p:
        return False
    if group.power(c.c1, proof.response) != proof.commitment_b * group.power(d, e) % group.p:
        return False
    return True


@dataclass(frozen=True)
class DleqProof:
    """Equality of discrete logs of (public1, public2) under (base1, base2)."""

    commitment_a: int
    commitment_b: int
    challenge: int
    response: int

    def to_bytes(self) -> bytes:
        return (
            encode_element(self.commitment_a)
            + encode_element(self.commitment_b)
            + encode_scalar(self.challenge)
            + encode_scalar(self.response)
        )


def _dleq_transcript(group, domain, base1, public1, base2, public2, a, b, context) -> int:
    return group.hash_to_scalar(
        domain,
        encode_element(base1),
        encode_element(public1),
        encode_element(base2),
        encode_element(public2),
        encode_element(a),
        encode_element(b),
        context,
    )


def dleq_prove(
    group: PrimeOrderGroup,
    domain: str,
    base1: int,
    base2: int,
    exponent: int,
    context: bytes = b"",
) -> DleqProof:
    public1 = group.power(base1, exponent)
    public2 = group.power(base2, exponent)
    w = hash_to_int(
        "adreward/dleq-nonce",
        domain.encode(),
        encode_scalar(exponent),
        encode_element(base1),
        encode_element(base2),
        context,
    ) % group.q
    a = group.power(base1, w)
    b = group.power(base2, w)
    e = _dleq_transcript(group, domain, base1, public1, base2, public2, a, b, context)
    z = (w + e * exponent) % group.q
    return DleqProof(commitment_a=a, commitment_b=b, challenge=e, response=z)


def dleq_verify(
    group: PrimeOrderGroup,
    domain: str,
    base1: int,
    public1: int,
    base2: int,
    public2: int,
    proof: DleqProof,
    context: bytes = b"",
) -> bool:
    if not (0 <= proof.challenge < group.q and 0 <= proof.response < group.q):
        return False
    e = _dleq_transcript(group, domain, base1, public1, base2, public2, proof.commitment_a, proof.commitment_b, context)
    if e != proof.challenge:
        return False
    if group.power(base1, proof.response) != proof.commitment_a * group.power(public1, e) % group.p:
        return False
    if group.power(base2, proof.response) != proof.commitment_b * group.power(public2, e) % group.p:
        return False
    return True


def aggregate_message(user_pk: int, ciphertext: Ciphertext) -> bytes:
    """Canonical bytes the consortium signs when it stores a reward aggregate."""
    return dhash("adreward/aggregate-msg", encode_element(user_pk), ciphertext.to_bytes())
