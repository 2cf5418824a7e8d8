import hashlib
import json
import random


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from JSON-serializable parts (platform independent)."""
    blob = json.dumps(parts, sort_keys=True, separators=(",", ":")).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def stream(*parts) -> random.Random:
    return random.Random(derive_seed(*parts))
