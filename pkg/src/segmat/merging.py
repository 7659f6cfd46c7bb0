"""Histogram-based merging of adjacent regions.

Each region is summarized by a 32-bin histogram of its node radii over
the shape-wide radius range, so the bins line up across regions.  The
1-D Earth Mover's Distance between two histograms has the closed form
sum |CDF1 - CDF2| and is normalized by bin_count - 1, which maps "all
mass moved across the full range" to 1.  Adjacent regions are merged
greedily, cheapest pair first, while their distance stays under tau.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .growing import Region
from .mat_graph import MatGraph

BIN_COUNT = 32


@dataclass
class RadiusHistogram:
    bins: np.ndarray
    radius_range: tuple[float, float]


def radius_histogram(g: MatGraph, region: Region,
                     bin_count: int = BIN_COUNT,
                     radius_range: tuple[float, float] | None = None
                     ) -> RadiusHistogram:
    """Normalized node-radius histogram over the shape's global range."""
    radii = g.mean_radii()
    if radius_range is None:
        lo, hi = float(radii.min()), float(radii.max())
    else:
        lo, hi = radius_range
    vals = radii[list(region.nodes)]
    bins = np.zeros(bin_count)
    if hi <= lo:
        bins[0] = 1.0
    else:
        idx = ((vals - lo) / (hi - lo) * bin_count).astype(int)
        np.add.at(bins, np.clip(idx, 0, bin_count - 1), 1.0)
        bins /= bins.sum()
    return RadiusHistogram(bins, (lo, hi))


def emd_1d(h1: RadiusHistogram, h2: RadiusHistogram) -> float:
    if len(h1.bins) != len(h2.bins) or h1.radius_range != h2.radius_range:
        raise ValueError("histograms use different binnings")
    diff = np.cumsum(h1.bins) - np.cumsum(h2.bins)
    return float(np.abs(diff).sum()) / (len(h1.bins) - 1)


def merge_matching(g: MatGraph, regions: list[Region],
                   tau: float = 0.15) -> list[Region]:
    """Greedily merge adjacent regions whose radius EMD is below tau.

    The surviving region keeps the lower id; histograms are recomputed
    after every merge so chains of similar regions coalesce.
    """
    if len(regions) <= 1:
        return list(regions)
    radii = g.mean_radii()
    rng = (float(radii.min()), float(radii.max()))

    nodes = {r.id: list(r.nodes) for r in regions}
    meta = {r.id: (r.seed, r.component_id) for r in regions}
    label = {}
    for r in regions:
        for v in r.nodes:
            label[v] = r.id
    adjacent: set[tuple[int, int]] = set()
    for u in range(len(g)):
        if u not in label:
            continue
        for v in g.neighbors(u):
            if v <= u or v not in label:
                continue
            a, b = label[u], label[v]
            if a != b:
                adjacent.add((min(a, b), max(a, b)))

    def hist(rid: int) -> RadiusHistogram:
        return radius_histogram(g, Region(rid, nodes[rid], 0, 0),
                                radius_range=rng)

    hists = {rid: hist(rid) for rid in nodes}
    while True:
        best = None
        for a, b in sorted(adjacent):
            e = emd_1d(hists[a], hists[b])
            if e < tau and (best is None or (e, a, b) < best):
                best = (e, a, b)
        if best is None:
            break
        _, a, b = best
        nodes[a].extend(nodes[b])
        del nodes[b], hists[b], meta[b]
        hists[a] = hist(a)
        rewired = set()
        for x, y in adjacent:
            x = a if x == b else x
            y = a if y == b else y
            if x != y:
                rewired.add((min(x, y), max(x, y)))
        adjacent = rewired

    return [Region(rid, nodes[rid], meta[rid][0], meta[rid][1])
            for rid in sorted(nodes)]
