"""Order-independent seed derivation."""

import hashlib


def derive_seed(*parts) -> int:
    """64-bit seed from a BLAKE2b digest of the ``|``-joined ``repr`` of ``parts``.

    Floats are normalised so that ``10`` and ``10.0`` give the same seed.
    """
    norm = [repr(float(p)) if isinstance(p, float) else str(p) for p in parts]
    digest = hashlib.blake2b("|".join(norm).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")
