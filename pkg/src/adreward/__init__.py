"""Privacy-preserving ad-reward protocol library with a deterministic ledger simulator.

Subpackage map: group/elgamal/proofs/hybrid hold the cryptographic core; vrf
and dkg select and equip the consensus pool; ledger and contracts simulate the
sidechain and the two campaign contracts; payments models confidential notes;
actors and scenario orchestrate full campaigns; bench and cli reproduce the
performance measurements at desk scale.
"""

__version__ = "0.1.0"
