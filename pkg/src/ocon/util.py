"""Small shared helpers: deterministic seed derivation and content hashing."""

import hashlib
import json

import numpy as np

_SEED_MASK = (1 << 63) - 1


def derive_seed(*parts):
    """Derive a child seed from a master seed and a context path.

    Parts may be ints or short strings (e.g. ``derive_seed(master, "subset", 3)``).
    The derivation is a SHA-256 hash of the canonical part encoding, so child
    streams are statistically independent and stable across platforms and
    process/thread scheduling.
    """
    enc = "\x1f".join(f"{type(p).__name__}:{p}" for p in parts).encode()
    digest = hashlib.sha256(enc).digest()
    return int.from_bytes(digest[:8], "little") & _SEED_MASK


def rng_from(*parts):
    """Generator seeded via :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(*parts))


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def sha256_file(path, chunk=1 << 20):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        while True:
            block = fh.read(chunk)
            if not block:
                break
            h.update(block)
    return h.hexdigest()


def sha256_json(obj):
    """Hash of the canonical JSON encoding of a plain structure."""
    return sha256_bytes(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode())
