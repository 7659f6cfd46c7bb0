import numpy as np
import pytest

from segmat.geometry import Sphere
from segmat.growing import Region
from segmat.mat_graph import build_graph
from segmat.merging import emd_1d, merge_matching, radius_histogram
from segmat.mesh_io import MedialMesh


def chain_graph(sphere_radii, spacing=2.0):
    spheres = [Sphere((i * spacing, 0.0, 0.0), float(r))
               for i, r in enumerate(sphere_radii)]
    mm = MedialMesh.build(spheres, [(i, i + 1) for i in range(len(spheres) - 1)], [])
    return build_graph(mm)


def region(rid, nodes):
    return Region(id=rid, nodes=list(nodes), seed=nodes[0], component_id=0)


def test_equal_radii_collapse_to_one_bin():
    g = chain_graph([1.0] * 6)
    h = radius_histogram(g, region(0, range(len(g))))
    assert h.bins[0] == 1.0
    assert h.bins[1:].sum() == 0.0


def test_uniform_radii_spread_evenly():
    # 32 disconnected segments whose node radii step through the range
    spheres = []
    edges = []
    for k in range(32):
        r = 1.0 + k * 0.1
        spheres.append(Sphere((3.0 * k, 0.0, 0.0), r))
        spheres.append(Sphere((3.0 * k + 1.0, 0.0, 0.0), r))
        edges.append((2 * k, 2 * k + 1))
    g = build_graph(MedialMesh.build(spheres, edges, []))
    h = radius_histogram(g, region(0, range(32)))
    assert np.allclose(h.bins, 1.0 / 32)


def test_identical_radius_multisets_give_identical_histograms():
    g = chain_graph([1, 2, 3, 1, 2, 3, 1])
    h1 = radius_histogram(g, region(0, [0, 1, 2]))
    h2 = radius_histogram(g, region(1, [3, 4, 5]))
    assert np.array_equal(h1.bins, h2.bins)
    assert emd_1d(h1, h2) == 0.0


def test_emd_extremes_and_symmetry():
    g = chain_graph([1.0, 1.0, 5.0, 5.0])
    # node means: 1, 3, 5 over range [1, 5]
    lo = radius_histogram(g, region(0, [0]))
    hi = radius_histogram(g, region(1, [2]))
    assert emd_1d(lo, lo) == 0.0
    assert emd_1d(lo, hi) == 1.0
    assert emd_1d(lo, hi) == emd_1d(hi, lo)


def test_emd_is_a_metric_on_random_histograms():
    rng = np.random.default_rng(7)
    g = chain_graph(rng.uniform(0.5, 4.0, 40))
    nodes = list(range(len(g)))
    hs = [radius_histogram(g, region(i, sorted(rng.choice(len(g), 8, replace=False))))
          for i in range(12)]
    for a in hs:
        for b in hs:
            dab = emd_1d(a, b)
            assert dab >= 0.0
            assert dab == pytest.approx(emd_1d(b, a), abs=1e-15)
            if np.array_equal(a.bins, b.bins):
                assert dab == 0.0
            for c in hs:
                assert dab <= emd_1d(a, c) + emd_1d(c, b) + 1e-12


def test_emd_rejects_mismatched_ranges():
    g1 = chain_graph([1.0, 1.0, 1.0])
    g2 = chain_graph([1.0, 2.0, 3.0])
    h1 = radius_histogram(g1, region(0, [0, 1]))
    h2 = radius_histogram(g2, region(0, [0, 1]))
    with pytest.raises(ValueError):
        emd_1d(h1, h2)


def quad_chain():
    """Four 10-node regions; radius jump between regions 1 and 2 only."""
    radii = [1.0] * 21 + [5.0] * 20
    g = chain_graph(radii)
    regions = [region(0, range(0, 10)), region(1, range(10, 20)),
               region(2, range(20, 30)), region(3, range(30, 40))]
    return g, regions


def test_greedy_merging_runs_until_no_close_pair_remains():
    g, regions = quad_chain()
    merged = merge_matching(g, regions, tau=0.15)
    assert [r.id for r in merged] == [0, 2]
    assert sorted(merged[0].nodes) == list(range(0, 20))
    assert sorted(merged[1].nodes) == list(range(20, 40))


def test_high_emd_pair_stays_split():
    g = chain_graph([1.0] * 11 + [5.0] * 10)
    regions = [region(0, range(0, 10)), region(1, range(10, 20))]
    merged = merge_matching(g, regions, tau=0.15)
    assert len(merged) == 2


def test_identical_adjacent_regions_merge():
    g = chain_graph([2.0] * 9)
    regions = [region(0, range(0, 4)), region(1, range(4, 8))]
    merged = merge_matching(g, regions, tau=0.15)
    assert len(merged) == 1
    assert merged[0].id == 0
    assert sorted(merged[0].nodes) == list(range(8))


def test_non_adjacent_regions_never_merge():
    # two disconnected chains with identical radii
    spheres = [Sphere((float(i), 0, 0), 1.0) for i in range(4)]
    spheres += [Sphere((float(i), 50, 0), 1.0) for i in range(4)]
    edges = [(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7)]
    g = build_graph(MedialMesh.build(spheres, edges, []))
    regions = [region(0, [0, 1, 2]), region(1, [3, 4, 5])]
    merged = merge_matching(g, regions, tau=0.5)
    assert len(merged) == 2


def test_merging_is_idempotent():
    g, regions = quad_chain()
    once = merge_matching(g, regions, tau=0.15)
    twice = merge_matching(g, once, tau=0.15)
    assert [r.id for r in twice] == [r.id for r in once]
    assert [sorted(r.nodes) for r in twice] == [sorted(r.nodes) for r in once]
