"""Prime-order group used by every cryptographic primitive in the package.

The group is the order-q subgroup of quadratic residues modulo a 255-bit safe
prime p = 2q + 1, which gives exactly what the protocol needs: prime order,
canonical 32-byte element encodings, and two generators g, h with unknown
relative discrete log (h is derived by hashing into the group). Exponentiation
is CPython's C-level ``pow``, with a fixed-base window table for g since g is
by far the hottest base (key generation, encryption, transcript commitments).
"""

from __future__ import annotations

import math
import threading

from .encoding import dhash, encode_element, hash_to_int

# Largest 255-bit safe prime: both p and (p-1)/2 are prime. The subgroup of
# quadratic residues mod p therefore has prime order q = (p-1)/2.
P = (1 << 255) - 46545
Q = (P - 1) // 2

_WINDOW_BITS = 4
_WINDOW_COUNT = 64  # 64 nibbles cover any exponent below 2^256


class PrimeOrderGroup:
    """Multiplicative group of quadratic residues mod a safe prime."""

    def __init__(self, p: int = P, q: int = Q, g: int = 4):
        self.p = p
        self.q = q
        self.g = g
        self.identity = 1
        self.h = self.hash_to_element("adreward/generator-h", encode_element(g))
        self._g_table: list[list[int]] | None = None
        self._bsgs_tables: dict[int, dict[int, int]] = {}
        self._lock = threading.Lock()

    # -- core operations -----------------------------------------------------

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def power(self, base: int, exponent: int) -> int:
        return pow(base, exponent % self.q, self.p)

    def inv(self, a: int) -> int:
        return pow(a, -1, self.p)

    def div(self, a: int, b: int) -> int:
        return a * pow(b, -1, self.p) % self.p

    def pow_g(self, exponent: int) -> int:
        """g^exponent via a lazily built 4-bit fixed-window table."""
        table = self._g_table
        if table is None:
            with self._lock:
                table = self._g_table
                if table is None:
                    table = self._build_g_table()
                    self._g_table = table
        e = exponent % self.q
        acc = 1
        p = self.p
        i = 0
        while e:
            d = e & 0xF
            if d:
                acc = acc * table[i][d] % p
            e >>= 4
            i += 1
        return acc

    def _build_g_table(self) -> list[list[int]]:
        table = []
        base = self.g
        for _ in range(_WINDOW_COUNT):
            row = [1] * 16
            for d in range(1, 16):
                row[d] = row[d - 1] * base % self.p
            table.append(row)
            base = row[15] * base % self.p  # base^16
        return table

    # -- membership and sampling ----------------------------------------------

    def is_element(self, a: int) -> bool:
        return 0 < a < self.p and pow(a, self.q, self.p) == 1

    def random_scalar(self, rng) -> int:
        return rng.nonzero_scalar(self.q)

    def hash_to_element(self, domain: str, *parts: bytes) -> int:
        """Map bytes into the subgroup by squaring a hash-derived residue.

        Squaring lands in the quadratic residues; the preimage exponent stays
        unknown, so elements derived this way are independent generators.
        """
        counter = 0
        while True:
            raw = hash_to_int(domain, *parts, counter.to_bytes(4, "big")) % self.p
            elem = raw * raw % self.p
            if elem != 1 and elem != 0:
                return elem
            counter += 1

    def hash_to_scalar(self, domain: str, *parts: bytes) -> int:
        return hash_to_int(domain, *parts) % self.q

    # -- discrete-log recovery -------------------------------------------------

    def bsgs_table(self, table_size: int) -> dict[int, int]:
        """Baby-step table {g^i: i for i < table_size}, cached per size."""
        with self._lock:
            table = self._bsgs_tables.get(table_size)
            if table is None:
                table = {}
                acc = 1
                for i in range(table_size):
                    table.setdefault(acc, i)
                    acc = acc * self.g % self.p
                self._bsgs_tables[table_size] = table
        return table

    def dlog(self, element: int, bound: int) -> int | None:
        """Discrete log of element base g if it lies in [0, bound], else None.

        Baby-step/giant-step: O(sqrt(bound)) group operations.
        """
        if bound < 0:
            return None
        if element == 1:
            return 0
        table_size = math.isqrt(bound) + 1
        table = self.bsgs_table(table_size)
        giant = pow(self.inv(self.g), table_size, self.p)
        gamma = element
        p = self.p
        steps = bound // table_size + 1
        for j in range(steps + 1):
            i = table.get(gamma)
            if i is not None:
                m = j * table_size + i
                if m <= bound:
                    return m
                return None
            gamma = gamma * giant % p
        return None


class FixedBaseTable:
    """4-bit window table for repeated exponentiations of one base.

    Building costs ~1k multiplications, so it pays off once a base is used for
    a few dozen exponentiations (vector encryption under one recipient key).
    """

    def __init__(self, group: PrimeOrderGroup, base: int):
        self.group = group
        p = group.p
        rows = []
        current = base
        for _ in range(_WINDOW_COUNT):
            row = [1] * 16
            for d in range(1, 16):
                row[d] = row[d - 1] * current % p
            rows.append(row)
            current = row[15] * current % p
        self._rows = rows

    def power(self, exponent: int) -> int:
        e = exponent % self.group.q
        acc = 1
        p = self.group.p
        rows = self._rows
        i = 0
        while e:
            d = e & 0xF
            if d:
                acc = acc * rows[i][d] % p
            e >>= 4
            i += 1
        return acc


_default_group: PrimeOrderGroup | None = None
_default_lock = threading.Lock()


def default_group() -> PrimeOrderGroup:
    global _default_group
    if _default_group is None:
        with _default_lock:
            if _default_group is None:
                _default_group = PrimeOrderGroup()
    return _default_group


def element_fingerprint(group: PrimeOrderGroup, element: int) -> bytes:
    return dhash("adreward/element-fp", encode_element(element))
