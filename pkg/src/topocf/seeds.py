"""Deterministic seed derivation for parallel-safe reproducibility."""

import hashlib


def stable_seed(*parts):
    """Derive a 64-bit seed from an arbitrary tuple of hashable parts.

    The derivation is stable across processes and Python versions, so any
    worker can recompute the seed for a given (master_seed, role, id)
    tuple without shared state.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")
