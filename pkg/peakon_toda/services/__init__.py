"""Cross-cutting helpers for peakon_toda."""

from .fingerprint import file_digest, fingerprint_bytes, short_fingerprint

__all__ = ["file_digest", "fingerprint_bytes", "short_fingerprint"]
