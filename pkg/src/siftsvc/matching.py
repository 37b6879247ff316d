"""Brute-force nearest-neighbor descriptor matching with a ratio test.

For each descriptor in set A the two nearest neighbors in set B are found
by exhaustive Euclidean distance; a match is emitted only when the
nearest/second-nearest ratio falls below the threshold.  Ties in nearest
distance break toward the lower B index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Match", "distance", "match_descriptors"]

# Cap on the temporary difference block, in float64 elements.
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class Match:
    """Pair of descriptor indices with distance and ratio-test evidence."""

    index_a: int
    index_b: int
    distance: float
    ratio: float


def distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two equal-length descriptor vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def match_descriptors(
    set_a: np.ndarray,
    set_b: np.ndarray,
    ratio_threshold: float = 0.8,
    cross_check: bool = False,
) -> list[Match]:
    """Match each A descriptor to its nearest B neighbor under the ratio test.

    Returns matches sorted by index_a.  With fewer than two B descriptors
    no ratio is defined and the result is empty.  A threshold of 0 is
    vacuous (no ratio is strictly below it).  ``cross_check`` additionally
    requires that the matched B descriptor's own nearest A neighbor is the
    matching A descriptor.
    """
    if not (0.0 <= ratio_threshold <= 1.0):
        raise ValueError(f"ratio_threshold must lie in [0, 1], got {ratio_threshold}")
    a = np.atleast_2d(np.asarray(set_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(set_b, dtype=np.float64))
    if a.size == 0 or b.shape[0] < 2:
        return []
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")

    na, dim = a.shape
    nb = b.shape[0]
    chunk = max(1, _CHUNK_ELEMENTS // (nb * dim))

    nearest_idx = np.empty(na, dtype=int)
    nearest_d2 = np.empty(na)
    second_d2 = np.empty(na)
    col_best_d2 = np.full(nb, np.inf)
    col_best_idx = np.zeros(nb, dtype=int)

    for start in range(0, na, chunk):
        stop = min(na, start + chunk)
        diff = a[start:stop, None, :] - b[None, :, :]
        d2 = (diff * diff).sum(axis=-1)
        idx1 = d2.argmin(axis=1)  # argmin takes the lowest index on ties
        rows = np.arange(stop - start)
        d1 = d2[rows, idx1]
        d2[rows, idx1] = np.inf
        d2nd = d2.min(axis=1)
        d2[rows, idx1] = d1
        nearest_idx[start:stop] = idx1
        nearest_d2[start:stop] = d1
        second_d2[start:stop] = d2nd
        if cross_check:
            cmin = d2.argmin(axis=0)
            cvals = d2[cmin, np.arange(nb)]
            better = cvals < col_best_d2
            col_best_d2[better] = cvals[better]
            col_best_idx[better] = cmin[better] + start

    out: list[Match] = []
    for i in range(na):
        d1 = float(np.sqrt(nearest_d2[i]))
        d2nd = float(np.sqrt(second_d2[i]))
        if d2nd == 0.0:
            continue  # duplicate nearest neighbors carry no evidence
        ratio = d1 / d2nd
        if ratio >= ratio_threshold:
            continue
        j = int(nearest_idx[i])
        if cross_check and col_best_idx[j] != i:
            continue
        out.append(Match(index_a=i, index_b=j, distance=d1, ratio=ratio))
    return out
