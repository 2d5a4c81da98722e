# cyclereward/utils/seeding.py
import hashlib

_MASK63 = (1 << 63) - 1


def derive_seed(seed: int, label: str) -> int:
    """Stable sub-seed for one consumer of the global seed."""
    digest = hashlib.sha256(f"{int(seed)}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & _MASK63
