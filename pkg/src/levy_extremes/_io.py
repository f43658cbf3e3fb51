"""Output helpers shared by the CSV writers."""

from __future__ import annotations

import contextlib


def open_text_out(dest):
    """Context manager yielding a text stream: ``dest`` itself if it is a stream, else ``open(dest, 'w')``."""
    if hasattr(dest, "write"):
        return contextlib.nullcontext(dest)
    return open(dest, "w", newline="")
