"""Stable content-addressed ids shared by messages, events and notifications."""

import hashlib


def content_hash(*parts: str) -> str:
    """Hash the parts into a short stable hex id.

    The same parts always produce the same id, so re-ingesting a chat export
    or re-scanning a message never creates duplicates.
    """
    joined = "\x1f".join(parts)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()[:16]
