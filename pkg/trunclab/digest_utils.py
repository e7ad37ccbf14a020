import json

from cryptography.hazmat.primitives import hashes


def sha256_hex(data):
    digest = hashes.Hash(hashes.SHA256())
    digest.update(data)
    return digest.finalize().hex()

def canonical_json(payload):
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))

def digest_payload(payload):
    """SHA-256 of the canonical JSON form of a payload (dict keys sorted, no whitespace)"""
    return sha256_hex(canonical_json(payload).encode("utf-8"))

def generate_run_id_from_seed(command, seed, args=None):
    seed_str = canonical_json({"command": command, "seed": seed, "args": args or {}})
    hash = sha256_hex(seed_str.encode()).upper()
    return hash[0:8] + "-" + hash[8:12] + "-" + hash[12:16] + "-" + hash[16:20] + "-" + hash[20:32]
