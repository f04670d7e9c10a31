"""Cohen's kappa for the judge reliability audit.

Chance-corrected agreement between two aligned label sequences:
``(p_o - p_e) / (1 - p_e)`` with ``p_e`` from the raters' marginal label
frequencies. Perfect observed agreement is defined as exactly 1.0, which
also covers the degenerate single-label case where ``p_e`` would be 1.
"""

from __future__ import annotations

from collections import Counter
from typing import Hashable, Sequence


def cohen_kappa(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    """Kappa in [-1, 1] for two equal-length label sequences."""
    if len(a) != len(b):
        raise ValueError(f"label sequences differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n == 0:
        raise ValueError("label sequences must be non-empty")
    observed = sum(1 for x, y in zip(a, b) if x == y) / n
    if observed == 1.0:
        return 1.0
    counts_a = Counter(a)
    counts_b = Counter(b)
    expected = sum(counts_a[label] * counts_b.get(label, 0) for label in counts_a) / (n * n)
    return (observed - expected) / (1.0 - expected)
