"""Text normalization helpers used by schema checks and answer matching."""

from __future__ import annotations

import re
import unicodedata

_WS_RUN = re.compile(r"\s+")

# Fullwidth ASCII variants and the ideographic space, mapped to their
# halfwidth counterparts. Applied only when explicitly requested.
_FULLWIDTH = {i: i - 0xFEE0 for i in range(0xFF01, 0xFF5F)}
_FULLWIDTH[0x3000] = 0x20


def collapse_ws(text: str) -> str:
    """Trim and collapse every internal whitespace run to a single space."""
    return _WS_RUN.sub(" ", text).strip()


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def norm_label(text: str) -> str:
    """Normalization for type/relation/role names: NFC plus trim."""
    return nfc(text.strip())


def norm_match(text: str) -> str:
    """Normalization for answer matching: NFC, trim, collapse whitespace."""
    return nfc(collapse_ws(text))


def fold_fullwidth(text: str) -> str:
    return text.translate(_FULLWIDTH)
