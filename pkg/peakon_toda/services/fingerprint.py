"""
Fingerprint Service

Content hashes for run manifests. Every output file is listed in the
manifest with its SHA-256 digest so reruns can be compared byte for byte.
"""

import hashlib
from pathlib import Path

CHUNK_SIZE = 1 << 16


def fingerprint_bytes(data: bytes) -> str:
    """Full SHA-256 hex digest of a byte string."""
    return hashlib.sha256(data).hexdigest()


def file_digest(path) -> str:
    """SHA-256 hex digest of a file, read in chunks."""
    digest = hashlib.sha256()
    with open(Path(path), "rb") as handle:
        for chunk in iter(lambda: handle.read(CHUNK_SIZE), b""):
            digest.update(chunk)
    return digest.hexdigest()


def short_fingerprint(data: bytes, length: int = 12) -> str:
    """
    Short prefix of the SHA-256 digest for log messages.
    """
    return fingerprint_bytes(data)[:length]
